"""Bit-level machinery: block coordinates, the van der Corput map and
periodic-plus-finite ("flat") sets.

Every natural ``k`` has a radical inverse ``vdc(k)`` in [0, 1) obtained by
mirroring its binary digits about the binary point.  The residue class
``k = s (mod 2**j)`` is exactly the preimage of a dyadic interval of length
``2**-j``, so a finite union of rational intervals ``U`` gives a set
``{k : vdc(k) in U}`` whose asymptotic density is the Lebesgue measure of
``U``.  Blocks are ``B_n = {k : k + 1 = 2**n * (2i + 1)}``, which under
``vdc`` is the interval ``[1 - 2**-n, 1 - 2**-(n+1))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


# -- block coordinates -------------------------------------------------------

def block_of(k: int) -> int:
    """Index n of the block containing k (the 2-adic valuation of k+1)."""
    m = k + 1
    return (m & -m).bit_length() - 1


def block_index(k: int) -> int:
    """Position i of k inside its block, so that k == block_point(n, i)."""
    m = k + 1
    n = (m & -m).bit_length() - 1
    return m >> (n + 1)


def block_point(n: int, i: int) -> int:
    """The i-th element of block n: 2**n * (2i + 1) - 1."""
    return ((2 * i + 1) << n) - 1


def block_count_below(n: int, N: int) -> int:
    """Number of elements of block n that are smaller than N."""
    return ((N >> n) + 1) >> 1


def block_interval(n: int) -> tuple[Fraction, Fraction]:
    return ONE - Fraction(1, 1 << n), ONE - Fraction(1, 1 << (n + 1))


# -- van der Corput ----------------------------------------------------------

def vdc_parts(k: int) -> tuple[int, int]:
    """Return (r, L) with vdc(k) == r / 2**L."""
    if k == 0:
        return 0, 0
    s = bin(k)[:1:-1]
    return int(s, 2), len(s)


def vdc(k: int) -> Fraction:
    r, L = vdc_parts(k)
    return Fraction(r, 1 << L)


def reverse_bits(s: int, k: int) -> int:
    """Reverse the k-bit binary representation of s."""
    out = 0
    for _ in range(k):
        out = (out << 1) | (s & 1)
        s >>= 1
    return out


def _count_vdc_below(x: Fraction, N: int) -> int:
    """#{k < N : vdc(k) < x}, exactly, in O(log N) arithmetic steps.

    The range [0, N) is cut into aligned chunks of length 2**j following the
    binary digits of N.  Inside a chunk the low j bits run through every
    value, so the vdc values form the grid s/2**j shifted by vdc(c)/2**j,
    where c is the chunk's high part.
    """
    if x <= 0 or N <= 0:
        return 0
    if x >= 1:
        return N
    p, q = x.numerator, x.denominator
    total = 0
    r = L = 0  # vdc(N >> (j + 1)) == r / 2**L
    for j in range(N.bit_length() - 1, -1, -1):
        if (N >> j) & 1:
            # the chunk's high part is 2 * (N >> (j + 1)), offset r / 2**(L + 1)
            num = (p << (j + L + 1)) - r * q
            den = q << (L + 1)
            cnt = -((-num) // den)
            total += min(max(cnt, 0), 1 << j)
            r += 1 << L
        L += 1
    return total


# -- interval unions ---------------------------------------------------------

Interval = tuple[Fraction, Fraction]


def normalize_intervals(ivs: Iterable[Sequence]) -> tuple[Interval, ...]:
    """Sort, clip to [0, 1], drop empties and merge touching intervals."""
    pts = []
    for a, b in ivs:
        a, b = max(Fraction(a), ZERO), min(Fraction(b), ONE)
        if a < b:
            pts.append((a, b))
    pts.sort()
    out: list[list[Fraction]] = []
    for a, b in pts:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _in_intervals(x: Fraction, ivs: tuple[Interval, ...]) -> bool:
    lo, hi = 0, len(ivs)
    while lo < hi:
        mid = (lo + hi) // 2
        if ivs[mid][1] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo < len(ivs) and ivs[lo][0] <= x


def combine_intervals(
    parts: Sequence[tuple[Interval, ...]], fn: Callable[[list[bool]], bool]
) -> tuple[Interval, ...]:
    cuts = {ZERO, ONE}
    for ivs in parts:
        for a, b in ivs:
            cuts.add(a)
            cuts.add(b)
    cuts_sorted = sorted(cuts)
    pieces = []
    for a, b in zip(cuts_sorted, cuts_sorted[1:]):
        if fn([_in_intervals(a, ivs) for ivs in parts]):
            pieces.append((a, b))
    return normalize_intervals(pieces)


def intervals_measure(ivs: tuple[Interval, ...]) -> Fraction:
    return sum((b - a for a, b in ivs), ZERO)


def dyadic_exponent(ivs: tuple[Interval, ...]) -> int | None:
    """Smallest K such that every endpoint is a multiple of 2**-K, if any."""
    K = 0
    for a, b in ivs:
        for x in (a, b):
            d = x.denominator
            if d & (d - 1):
                return None
            K = max(K, d.bit_length() - 1)
    return K


# -- flat sets ---------------------------------------------------------------

@dataclass(frozen=True)
class Flat:
    """The set {k : vdc(k) in intervals} with membership flipped on ``flips``."""

    intervals: tuple[Interval, ...]
    flips: frozenset = frozenset()

    def base_member(self, k: int) -> bool:
        return _in_intervals(vdc(k), self.intervals)

    def member(self, k: int) -> bool:
        return self.base_member(k) != (k in self.flips)

    def measure(self) -> Fraction:
        return intervals_measure(self.intervals)

    def complement(self) -> Flat:
        return Flat(combine_intervals([self.intervals], lambda v: not v[0]), self.flips)

    def count_below(self, N: int) -> int:
        total = 0
        for a, b in self.intervals:
            total += _count_vdc_below(b, N) - _count_vdc_below(a, N)
        for f in self.flips:
            if f < N:
                total += -1 if self.base_member(f) else 1
        return total

    def lift(self, n: int) -> Flat:
        lo = ONE - Fraction(1, 1 << n)
        scale = Fraction(1, 1 << (n + 1))
        ivs = tuple((lo + scale * a, lo + scale * b) for a, b in self.intervals)
        return Flat(ivs, frozenset(block_point(n, i) for i in self.flips))

    def trace(self, n: int) -> Flat:
        """Index set {i : block_point(n, i) in self}."""
        lo, hi = block_interval(n)
        scale = 1 << (n + 1)
        ivs = []
        for a, b in self.intervals:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                ivs.append(((a2 - lo) * scale, (b2 - lo) * scale))
        flips = frozenset(block_index(f) for f in self.flips if block_of(f) == n)
        return Flat(normalize_intervals(ivs), flips)

    def error_bound(self, N: int) -> int:
        """Upper bound on |count_below(N) - N * measure()|."""
        K = dyadic_exponent(self.intervals)
        if K is None:
            bound = len(self.intervals) * bin(N).count("1")
        else:
            # whole periods of length 2**K are counted exactly
            rest = N & ((1 << K) - 1)
            bound = min(len(self.intervals) * bin(rest).count("1"), rest)
        return bound + len(self.flips)

    def eventual(self) -> tuple[int, bool]:
        """(N, full) such that for n >= N the trace on block n is all or nothing."""
        N = 0
        if self.intervals:
            a, b = self.intervals[-1]
            edge = a if b == ONE else b
            full = b == ONE
            gap = ONE - edge
            if gap <= 0:
                N = 0
            else:
                while Fraction(1, 1 << N) > gap:
                    N += 1
        else:
            full = False
        for f in self.flips:
            N = max(N, block_of(f) + 1)
        return N, full


def combine_flats(parts: Sequence[Flat], fn: Callable[[list[bool]], bool]) -> Flat:
    ivs = combine_intervals([p.intervals for p in parts], fn)
    cand = set()
    for p in parts:
        cand |= p.flips
    flips = set()
    for k in cand:
        actual = fn([p.member(k) for p in parts])
        if actual != _in_intervals(vdc(k), ivs):
            flips.add(k)
    return Flat(ivs, frozenset(flips))


def dyadic_flat(k: int, residues: Iterable[int]) -> Flat:
    size = Fraction(1, 1 << k)
    ivs = []
    for s in residues:
        r = reverse_bits(s, k)
        ivs.append((r * size, (r + 1) * size))
    return Flat(normalize_intervals(ivs))


def block_flat(n: int) -> Flat:
    return Flat((block_interval(n),))
