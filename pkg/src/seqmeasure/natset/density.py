"""Exact asymptotic densities and Cesàro prefix estimates."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .dyadic import block_count_below
from .ops import _check_prefix, block_trace, eventual, family_limit, family_shrinks, flatten
from .terms import SetTerm


@dataclass(frozen=True)
class DensityReport:
    kind: str  # "exact" | "estimate" | "unknown"
    value: Fraction | None = None
    prefix: int | None = None
    error_bound: Fraction | None = None

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "num": None if self.value is None else self.value.numerator,
            "den": None if self.value is None else self.value.denominator,
            "prefix": self.prefix,
        }
        if self.error_bound is not None:
            out["bound"] = [self.error_bound.numerator, self.error_bound.denominator]
        return out

    @classmethod
    def from_json(cls, d: dict) -> DensityReport:
        value = None if d.get("num") is None else Fraction(d["num"], d["den"])
        bound = d.get("bound")
        return cls(d["kind"], value, d.get("prefix"), None if bound is None else Fraction(*bound))

    def __str__(self) -> str:
        if self.kind == "unknown":
            return "unknown"
        if self.kind == "exact":
            return f"exact {self.value}"
        b = "" if self.error_bound is None else f" +/- {self.error_bound}"
        return f"estimate {self.value}{b} (N={self.prefix})"


@lru_cache(maxsize=100_000)
def density_value(t: SetTerm) -> Fraction | None:
    """Exact density of ``t`` or None when ``t`` is outside the decidable class.

    Flat terms have density equal to the Lebesgue measure of their interval
    part.  Otherwise the density is the block-weighted sum of the trace
    densities, which is finite when the trace is eventually constant.
    """
    f = flatten(t)
    if f is not None:
        return f.measure()
    N, fam = eventual(t)
    if family_shrinks(fam):
        return None
    total = Fraction(0)
    for n in range(N):
        d = density_value(block_trace(t, n))
        if d is None:
            return None
        total += d / (1 << (n + 1))
    d = density_value(family_limit(fam))
    if d is None:
        return None
    return total + d / (1 << N)


def exact_density(t: SetTerm) -> DensityReport:
    v = density_value(t)
    return DensityReport("unknown") if v is None else DensityReport("exact", v)


def count_below(t: SetTerm, N: int) -> int:
    """|t ∩ {0, …, N-1}| without enumerating the prefix."""
    if N <= 0:
        return 0
    f = flatten(t)
    if f is not None:
        return f.count_below(N)
    total = 0
    for n in range(N.bit_length()):
        M = block_count_below(n, N)
        if M:
            total += count_below(block_trace(t, n), M)
    return total


def count_error_bound(t: SetTerm, N: int) -> Fraction | None:
    """Bound on |count_below(t, N) - N * d| where d is the density of ``t``.

    For terms outside the exact class ``d`` is the block series
    ``sum_n 2**-(n+1) d(trace_n t)``; every trace is exact, and blocks at or
    beyond the bit length of N contribute at most N / 2**L.
    """
    if N <= 0:
        return Fraction(0)
    f = flatten(t)
    if f is not None:
        return Fraction(f.error_bound(N))
    L = N.bit_length()
    total = Fraction(N, 1 << L)
    for n in range(L):
        M = block_count_below(n, N)
        total += abs(M - Fraction(N, 1 << (n + 1)))
        if M:
            e = count_error_bound(block_trace(t, n), M)
            if e is None:
                return None
            total += e
    return total


def cesaro_density(t: SetTerm, N: int, max_prefix: int | None = None) -> DensityReport:
    _check_prefix(N, max_prefix)
    value = Fraction(count_below(t, N), N)
    err = count_error_bound(t, N)
    return DensityReport("estimate", value, N, None if err is None else err / N)


def density_report(t: SetTerm, N: int | None = None, max_prefix: int | None = None) -> DensityReport:
    """Exact report when decidable, otherwise a Cesàro estimate at ``N``."""
    rep = exact_density(t)
    if rep.kind == "exact" or N is None:
        return rep
    return cesaro_density(t, N, max_prefix)
