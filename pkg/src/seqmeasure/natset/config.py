"""Process-wide limits for prefix enumeration."""

DEFAULT_MAX_PREFIX = 1 << 20

max_prefix = DEFAULT_MAX_PREFIX


def set_max_prefix(n: int) -> None:
    global max_prefix
    if n < 1:
        raise ValueError("max_prefix must be positive")
    max_prefix = int(n)
