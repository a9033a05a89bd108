"""Structural operations on terms: membership, prefixes, block traces and
the eventual (large-block) behaviour of a term."""
from __future__ import annotations

from functools import lru_cache
from fractions import Fraction

import numpy as np

from ..errors import ResourceLimitError
from . import config
from .dyadic import (
    Flat,
    block_flat,
    block_index,
    block_of,
    combine_flats,
    dyadic_flat,
    vdc,
    _in_intervals,
)
from .terms import (
    EMPTY,
    FULL,
    Block,
    Compl,
    Const,
    Diff,
    Dyadic,
    Family,
    Finite,
    Inter,
    Lift,
    SetTerm,
    Shrink,
    Stack,
    Union,
    Vdc,
    apply_op,
    compl,
    diff,
    fam_op,
    inter,
    phi,
    union,
)

_BOOL_OPS = {
    "union": any,
    "inter": all,
    "diff": lambda v: v[0] and not any(v[1:]),
    "compl": lambda v: not v[0],
}


def _op_name(t: SetTerm) -> str:
    return {Union: "union", Inter: "inter", Diff: "diff", Compl: "compl"}[type(t)]


def _args(t: SetTerm) -> tuple:
    return (t.arg,) if isinstance(t, Compl) else t.args


# -- membership --------------------------------------------------------------

def member(t: SetTerm, k: int) -> bool:
    """Decide ``k in t`` by structural recursion."""
    if isinstance(t, Finite):
        return k in t.elems
    if isinstance(t, Dyadic):
        return (k & ((1 << t.k) - 1)) in t.residues
    if isinstance(t, Block):
        return block_of(k) == t.n
    if isinstance(t, Lift):
        return block_of(k) == t.n and member(t.inner, block_index(k))
    if isinstance(t, Vdc):
        return _in_intervals(vdc(k), t.intervals) != (k in t.flips)
    if isinstance(t, Stack):
        n, i = block_of(k), block_index(k)
        if n < t.start:
            return member(t.head_term(n), i)
        return family_member(t.tail, n, i)
    if isinstance(t, Compl):
        return not member(t.arg, k)
    if isinstance(t, Union):
        return any(member(a, k) for a in t.args)
    if isinstance(t, Inter):
        return all(member(a, k) for a in t.args)
    if isinstance(t, Diff):
        return member(t.args[0], k) and not any(member(a, k) for a in t.args[1:])
    raise TypeError(f"not a term: {t!r}")


def _shrink_coord(f: Shrink, i: int) -> Fraction:
    for _ in range(f.level - 1):
        i = block_index(i)
    return vdc(i)


def family_member(f: Family, n: int, i: int) -> bool:
    if isinstance(f, Const):
        return member(f.term, i)
    if isinstance(f, Shrink):
        return _shrink_coord(f, i) < f.radius(n)
    return _BOOL_OPS[f.op]([family_member(a, n, i) for a in f.args])


def family_limit_member(f: Family, i: int) -> bool:
    """Eventual value of ``family_member(f, n, i)`` as n grows."""
    if isinstance(f, Const):
        return member(f.term, i)
    if isinstance(f, Shrink):
        return _shrink_coord(f, i) == 0
    return _BOOL_OPS[f.op]([family_limit_member(a, i) for a in f.args])


def family_instantiate(f: Family, n: int) -> SetTerm:
    if isinstance(f, Const):
        return f.term
    if isinstance(f, Shrink):
        return phi(f.level, [(0, f.radius(n))])
    return apply_op(f.op, [family_instantiate(a, n) for a in f.args])


def family_limit(f: Family) -> SetTerm:
    if isinstance(f, Const):
        return f.term
    if isinstance(f, Shrink):
        return EMPTY
    return apply_op(f.op, [family_limit(a) for a in f.args])


def family_shrinks(f: Family) -> list[Shrink]:
    if isinstance(f, Const):
        return []
    if isinstance(f, Shrink):
        return [f]
    out = []
    for a in f.args:
        for s in family_shrinks(a):
            if s not in out:
                out.append(s)
    return out


# -- vectorised prefix -------------------------------------------------------

def _v2_plus1(idx: np.ndarray) -> np.ndarray:
    m = idx + 1
    low = m & -m
    return np.log2(low.astype(np.float64)).astype(np.int64)


def _vdc_int(idx: np.ndarray, bits: int) -> np.ndarray:
    """vdc(idx) * 2**bits as integers (exact for idx < 2**bits)."""
    out = np.zeros_like(idx)
    x = idx.copy()
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def _member_array(t: SetTerm, idx: np.ndarray) -> np.ndarray:
    if idx.size == 0:
        return np.zeros(0, dtype=bool)
    if isinstance(t, Finite):
        return np.isin(idx, np.fromiter(t.elems, dtype=np.int64, count=len(t.elems)))
    if isinstance(t, Dyadic):
        res = np.fromiter(t.residues, dtype=np.int64, count=len(t.residues))
        return np.isin(idx & ((1 << t.k) - 1), res)
    if isinstance(t, Block):
        return _v2_plus1(idx) == t.n
    if isinstance(t, Lift):
        out = _v2_plus1(idx) == t.n
        sel = np.nonzero(out)[0]
        out[sel] = _member_array(t.inner, (idx[sel] + 1) >> (t.n + 1))
        return out
    if isinstance(t, Vdc):
        bits = max(int(idx.max()).bit_length(), 1)
        v = _vdc_int(idx, bits)
        out = np.zeros(idx.shape, dtype=bool)
        for a, b in t.intervals:
            # vdc >= a  <=>  v >= ceil(a * 2**bits); vdc < b <=> v < ceil(b * 2**bits)
            lo = -((-a.numerator << bits) // a.denominator)
            hi = -((-b.numerator << bits) // b.denominator)
            out |= (v >= lo) & (v < min(hi, 2**63 - 1))
        if t.flips:
            fl = np.isin(idx, np.fromiter(t.flips, dtype=np.int64, count=len(t.flips)))
            out ^= fl
        return out
    if isinstance(t, Stack):
        blocks = _v2_plus1(idx)
        inner_idx = (idx + 1) >> (blocks + 1)
        out = np.zeros(idx.shape, dtype=bool)
        for n in np.unique(blocks):
            sel = np.nonzero(blocks == n)[0]
            n = int(n)
            if n < t.start:
                out[sel] = _member_array(t.head_term(n), inner_idx[sel])
            else:
                out[sel] = _family_member_array(t.tail, n, inner_idx[sel])
        return out
    if isinstance(t, Compl):
        return ~_member_array(t.arg, idx)
    parts = [_member_array(a, idx) for a in t.args]
    if isinstance(t, Union):
        return np.logical_or.reduce(parts)
    if isinstance(t, Inter):
        return np.logical_and.reduce(parts)
    out = parts[0].copy()
    for p in parts[1:]:
        out &= ~p
    return out


def _family_member_array(f: Family, n: int, idx: np.ndarray) -> np.ndarray:
    if isinstance(f, Const):
        return _member_array(f.term, idx)
    if isinstance(f, Shrink):
        return _member_array(phi(f.level, [(0, f.radius(n))]), idx)
    parts = [_family_member_array(a, n, idx) for a in f.args]
    if f.op == "union":
        return np.logical_or.reduce(parts)
    if f.op == "inter":
        return np.logical_and.reduce(parts)
    if f.op == "compl":
        return ~parts[0]
    out = parts[0].copy()
    for p in parts[1:]:
        out &= ~p
    return out


def _check_prefix(N: int, max_prefix: int | None) -> None:
    limit = config.max_prefix if max_prefix is None else max_prefix
    if N < 1:
        raise ValueError("prefix length must be at least 1")
    if N > limit:
        raise ResourceLimitError(f"prefix length {N} exceeds the configured maximum {limit}")


def prefix(t: SetTerm, N: int, max_prefix: int | None = None) -> np.ndarray:
    """Boolean array whose entry i is ``member(t, i)``, for i < N."""
    _check_prefix(N, max_prefix)
    return _member_array(t, np.arange(N, dtype=np.int64))


def prefix_bits(t: SetTerm, N: int) -> str:
    return "".join("1" if b else "0" for b in prefix(t, N))


# -- flat normal form ----------------------------------------------------------

@lru_cache(maxsize=200_000)
def flatten(t: SetTerm) -> Flat | None:
    """Periodic-plus-finite normal form, or None if ``t`` has infinitely many
    non-trivial blocks."""
    if isinstance(t, Finite):
        return Flat((), t.elems)
    if isinstance(t, Dyadic):
        return dyadic_flat(t.k, t.residues)
    if isinstance(t, Block):
        return block_flat(t.n)
    if isinstance(t, Vdc):
        return Flat(t.intervals, t.flips)
    if isinstance(t, Lift):
        f = flatten(t.inner)
        return None if f is None else f.lift(t.n)
    if isinstance(t, Stack):
        if not isinstance(t.tail, Const) or t.tail.term not in (EMPTY, FULL):
            return None
        parts = []
        for n, s in t.head:
            f = flatten(s)
            if f is None:
                return None
            parts.append(f.lift(n))
        if t.tail.term == FULL:
            parts.append(Flat(((1 - Fraction(1, 1 << t.start), Fraction(1)),)))
        return combine_flats(parts, any) if parts else Flat(())
    parts = []
    for a in _args(t):
        f = flatten(a)
        if f is None:
            return None
        parts.append(f)
    return combine_flats(parts, _BOOL_OPS[_op_name(t)])


def flat_to_term(f: Flat) -> SetTerm:
    if not f.intervals and not f.flips:
        return EMPTY
    if f.intervals == ((0, 1),) and not f.flips:
        return FULL
    if not f.intervals:
        return Finite(f.flips)
    return Vdc(f.intervals, f.flips)


# -- block traces -------------------------------------------------------------

@lru_cache(maxsize=200_000)
def block_trace(t: SetTerm, n: int) -> SetTerm:
    """A term for ``{i : x^n_i in t}``."""
    if isinstance(t, Finite):
        return Finite(block_index(e) for e in t.elems if block_of(e) == n)
    if isinstance(t, Block):
        return FULL if t.n == n else EMPTY
    if isinstance(t, Lift):
        return t.inner if t.n == n else EMPTY
    if isinstance(t, Dyadic):
        if t.k <= n + 1:
            r = ((1 << n) - 1) & ((1 << t.k) - 1)
            return FULL if r in t.residues else EMPTY
        shift = n + 1
        res = [s >> shift for s in t.residues if (s & ((1 << shift) - 1)) == (1 << n) - 1]
        return Dyadic(t.k - shift, res) if res else EMPTY
    if isinstance(t, Vdc):
        return flat_to_term(Flat(t.intervals, t.flips).trace(n))
    if isinstance(t, Stack):
        if n < t.start:
            return t.head_term(n)
        return family_instantiate(t.tail, n)
    if isinstance(t, Compl):
        return compl(block_trace(t.arg, n))
    args = [block_trace(a, n) for a in t.args]
    if isinstance(t, Union):
        return union(*args)
    if isinstance(t, Inter):
        return inter(*args)
    return diff(*args)


# -- eventual behaviour -------------------------------------------------------

@lru_cache(maxsize=200_000)
def eventual(t: SetTerm) -> tuple[int, Family]:
    """(N, family) with ``block_trace(t, n) == instantiate(family, n)`` for n >= N."""
    if isinstance(t, Stack):
        return t.start, t.tail
    if isinstance(t, (Block, Lift)):
        return t.n + 1, Const(EMPTY)
    if isinstance(t, (Finite, Dyadic, Vdc)):
        N, full = flatten(t).eventual()
        return N, Const(FULL if full else EMPTY)
    results = [eventual(a) for a in _args(t)]
    N = max(r[0] for r in results)
    return N, fam_op(_op_name(t), [r[1] for r in results])


def block_support_bound(t: SetTerm) -> int | None:
    """N such that t lies inside blocks < N, or None if t meets infinitely many."""
    N, fam = eventual(t)
    if isinstance(fam, Const) and fam.term == EMPTY:
        return N
    return None
