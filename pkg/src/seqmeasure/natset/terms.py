"""Symbolic subsets of the naturals.

A term is an immutable expression tree.  Leaves are generators:

* ``Finite``   a finite set of naturals,
* ``Dyadic``   ``{n : n mod 2**k in residues}``,
* ``Block``    the block ``B_n``,
* ``Lift``     ``{x^n_i : i in inner}``, a copy of ``inner`` inside ``B_n``,
* ``Vdc``      ``{k : vdc(k) in intervals}`` (flipped on a finite set), the
               image of a finite union of rational intervals of [0, 1),
* ``Stack``    ``U_n Lift(n, T_n)`` where ``T_n`` follows a per-block ``Family``.

Internal nodes are ``Compl``, ``Union``, ``Inter`` and ``Diff``.

Families describe the index set ``T_n`` used on block ``n`` of a ``Stack``:
``Const`` (the same term on every block), ``Shrink`` (the embedded interval
``[0, r_n)`` with ``r_n`` decreasing to zero) and ``FamOp`` (Boolean
combinations).  A family's *limit* replaces every ``Shrink`` by the empty set.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable

from ..errors import TermParseError
from .dyadic import normalize_intervals


def _cached_hash(cls):
    """Memoize the generated structural hash; terms are deep and immutable."""
    raw = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = raw(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


class SetTerm:
    """Base class of all term nodes."""

    __slots__ = ()

    def __or__(self, other: SetTerm) -> SetTerm:
        return union(self, other)

    def __and__(self, other: SetTerm) -> SetTerm:
        return inter(self, other)

    def __sub__(self, other: SetTerm) -> SetTerm:
        return diff(self, other)

    def __invert__(self) -> SetTerm:
        return compl(self)


@_cached_hash
@dataclass(frozen=True)
class Finite(SetTerm):
    elems: frozenset = frozenset()

    def __init__(self, elems: Iterable[int] = ()):
        elems = frozenset(int(e) for e in elems)
        if any(e < 0 for e in elems):
            raise ValueError("Finite elements must be naturals")
        object.__setattr__(self, "elems", elems)

    def __repr__(self) -> str:
        return f"Finite({sorted(self.elems)})"


@_cached_hash
@dataclass(frozen=True)
class Dyadic(SetTerm):
    k: int
    residues: frozenset

    def __init__(self, k: int, residues: Iterable[int]):
        residues = frozenset(int(s) for s in residues)
        if k < 0 or any(not 0 <= s < (1 << k) for s in residues):
            raise ValueError(f"residues must lie in [0, 2**{k})")
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "residues", residues)

    def __repr__(self) -> str:
        return f"Dyadic({self.k}, {sorted(self.residues)})"


@_cached_hash
@dataclass(frozen=True)
class Block(SetTerm):
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("block index must be a natural")


@_cached_hash
@dataclass(frozen=True)
class Lift(SetTerm):
    n: int
    inner: SetTerm


@_cached_hash
@dataclass(frozen=True)
class Vdc(SetTerm):
    intervals: tuple
    flips: frozenset = frozenset()

    def __init__(self, intervals: Iterable = (), flips: Iterable[int] = ()):
        object.__setattr__(self, "intervals", normalize_intervals(intervals))
        object.__setattr__(self, "flips", frozenset(int(f) for f in flips))


@_cached_hash
@dataclass(frozen=True)
class Compl(SetTerm):
    arg: SetTerm


@_cached_hash
@dataclass(frozen=True)
class Union(SetTerm):
    args: tuple


@_cached_hash
@dataclass(frozen=True)
class Inter(SetTerm):
    args: tuple


@_cached_hash
@dataclass(frozen=True)
class Diff(SetTerm):
    """First argument minus the union of the rest."""

    args: tuple


class Family:
    __slots__ = ()


@_cached_hash
@dataclass(frozen=True)
class Const(Family):
    term: SetTerm


@_cached_hash
@dataclass(frozen=True)
class Shrink(Family):
    """``phi(level, [0, r_n))`` with r_n = min(1, c/(a n + b)) or min(1, c/2**(a n + b))."""

    level: int
    kind: str
    c: Fraction
    a: int = 1
    b: int = 1

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        if self.kind not in ("harmonic", "geometric"):
            raise ValueError(f"unknown shrink kind {self.kind!r}")
        if self.level < 1 or self.a < 1 or self.c <= 0:
            raise ValueError("shrink needs level >= 1, a >= 1, c > 0")
        if self.kind == "harmonic" and self.b < 1:
            raise ValueError("harmonic shrink needs b >= 1")

    def radius(self, n: int) -> Fraction:
        if self.kind == "harmonic":
            r = self.c / (self.a * n + self.b)
        else:
            e = self.a * n + self.b
            r = self.c / (1 << e) if e >= 0 else self.c * (1 << -e)
        return min(r, Fraction(1))


@_cached_hash
@dataclass(frozen=True)
class FamOp(Family):
    op: str
    args: tuple


@_cached_hash
@dataclass(frozen=True)
class Stack(SetTerm):
    """Blocks ``n >= start`` carry ``Lift(n, tail_n)``; earlier blocks use ``head``."""

    tail: Family
    start: int = 0
    head: tuple = ()

    def __init__(self, tail: Family, start: int = 0, head: Any = ()):
        if isinstance(tail, SetTerm):
            tail = Const(tail)
        items = dict(head.items() if isinstance(head, dict) else head)
        if any(not 0 <= n < start for n in items):
            raise ValueError("stack head entries must lie below start")
        items = {n: t for n, t in items.items() if t != EMPTY}
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "start", int(start))
        object.__setattr__(self, "head", tuple(sorted(items.items(), key=lambda x: x[0])))

    def head_term(self, n: int) -> SetTerm:
        for m, t in self.head:
            if m == n:
                return t
        return EMPTY


EMPTY = Finite()
FULL = Compl(EMPTY)


# -- smart constructors -------------------------------------------------------

def _flatten_args(cls, args):
    out = []
    for a in args:
        if isinstance(a, cls):
            out.extend(a.args)
        else:
            out.append(a)
    return out


@lru_cache(maxsize=100_000)
def union(*args: SetTerm) -> SetTerm:
    items = [a for a in _flatten_args(Union, args) if a != EMPTY]
    if any(a == FULL for a in items):
        return FULL
    items = list(dict.fromkeys(items))
    if not items:
        return EMPTY
    if len(items) == 1:
        return items[0]
    return Union(tuple(items))


@lru_cache(maxsize=100_000)
def inter(*args: SetTerm) -> SetTerm:
    items = [a for a in _flatten_args(Inter, args) if a != FULL]
    if any(a == EMPTY for a in items):
        return EMPTY
    items = list(dict.fromkeys(items))
    if not items:
        return FULL
    if len(items) == 1:
        return items[0]
    return Inter(tuple(items))


@lru_cache(maxsize=100_000)
def diff(first: SetTerm, *rest: SetTerm) -> SetTerm:
    rest = [r for r in rest if r != EMPTY]
    if first == EMPTY or any(r == FULL for r in rest):
        return EMPTY
    if not rest:
        return first
    return Diff((first, *rest))


@lru_cache(maxsize=100_000)
def compl(arg: SetTerm) -> SetTerm:
    if isinstance(arg, Compl):
        return arg.arg
    return Compl(arg)


def apply_op(op: str, args: list[SetTerm]) -> SetTerm:
    if op == "union":
        return union(*args)
    if op == "inter":
        return inter(*args)
    if op == "diff":
        return diff(*args)
    if op == "compl":
        return compl(args[0])
    raise ValueError(f"unknown op {op!r}")


def fam_op(op: str, args: list[Family]) -> Family:
    if all(isinstance(a, Const) for a in args):
        return Const(apply_op(op, [a.term for a in args]))
    return FamOp(op, tuple(args))


def lifted_union(inner: SetTerm, start: int = 0) -> Stack:
    """``U_{n >= start} Lift(n, inner)``."""
    return Stack(Const(inner), start)


def phi(level: int, intervals: Iterable) -> SetTerm:
    """Embed a finite union of rational intervals of [0, 1) at a tower level.

    Level 1 is the van der Corput preimage; level a+1 lifts the level-a set
    uniformly into every block.  The canonical measure of that level gives
    the image exactly its Lebesgue measure.
    """
    t: SetTerm = Vdc(intervals)
    for _ in range(level - 1):
        t = lifted_union(t)
    return t


def dyadic_phi(level: int, k: int, residues: Iterable[int]) -> SetTerm:
    t: SetTerm = Dyadic(k, residues)
    for _ in range(level - 1):
        t = lifted_union(t)
    return t


# -- JSON --------------------------------------------------------------------

def _frac_json(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def _frac_parse(v: Any) -> Fraction:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return Fraction(int(v[0]), int(v[1]))
    if isinstance(v, (int, str)):
        return Fraction(v)
    raise TermParseError(f"bad rational {v!r}")


def term_to_json(t: SetTerm) -> dict:
    if isinstance(t, Finite):
        return {"gen": "finite", "elems": sorted(t.elems)}
    if isinstance(t, Dyadic):
        return {"gen": "dyadic", "k": t.k, "residues": sorted(t.residues)}
    if isinstance(t, Block):
        return {"gen": "block", "n": t.n}
    if isinstance(t, Lift):
        return {"gen": "lift", "n": t.n, "inner": term_to_json(t.inner)}
    if isinstance(t, Vdc):
        out = {"gen": "vdc", "intervals": [[_frac_json(a), _frac_json(b)] for a, b in t.intervals]}
        if t.flips:
            out["flips"] = sorted(t.flips)
        return out
    if isinstance(t, Stack):
        return {
            "gen": "stack",
            "start": t.start,
            "head": [[n, term_to_json(s)] for n, s in t.head],
            "tail": family_to_json(t.tail),
        }
    if isinstance(t, Compl):
        return {"op": "compl", "arg": term_to_json(t.arg)}
    name = {Union: "union", Inter: "inter", Diff: "diff"}[type(t)]
    return {"op": name, "args": [term_to_json(a) for a in t.args]}


def family_to_json(f: Family) -> dict:
    if isinstance(f, Const):
        return {"const": term_to_json(f.term)}
    if isinstance(f, Shrink):
        return {"shrink": {"level": f.level, "kind": f.kind, "c": _frac_json(f.c), "a": f.a, "b": f.b}}
    return {"op": f.op, "args": [family_to_json(a) for a in f.args]}


def term_from_json(d: Any) -> SetTerm:
    try:
        if not isinstance(d, dict):
            raise TermParseError(f"term must be an object, got {type(d).__name__}")
        if "gen" in d:
            g = d["gen"]
            if g == "finite":
                return Finite(d["elems"])
            if g == "dyadic":
                return Dyadic(d["k"], d["residues"])
            if g == "block":
                return Block(int(d["n"]))
            if g == "lift":
                return Lift(int(d["n"]), term_from_json(d["inner"]))
            if g == "vdc":
                ivs = [(_frac_parse(a), _frac_parse(b)) for a, b in d["intervals"]]
                return Vdc(ivs, d.get("flips", ()))
            if g == "stack":
                head = [(int(n), term_from_json(s)) for n, s in d.get("head", [])]
                return Stack(family_from_json(d["tail"]), int(d.get("start", 0)), head)
            raise TermParseError(f"unknown generator {g!r}")
        if "op" in d:
            op = d["op"]
            if op == "compl":
                return Compl(term_from_json(d["arg"]))
            args = tuple(term_from_json(a) for a in d["args"])
            if op == "union":
                return Union(args)
            if op == "inter":
                return Inter(args)
            if op == "diff":
                if not args:
                    raise TermParseError("diff needs at least one argument")
                return Diff(args)
            raise TermParseError(f"unknown op {op!r}")
        raise TermParseError("term needs a 'gen' or 'op' key")
    except TermParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise TermParseError(f"malformed term: {exc}") from exc


def family_from_json(d: Any) -> Family:
    if not isinstance(d, dict):
        raise TermParseError("family must be an object")
    if "const" in d:
        return Const(term_from_json(d["const"]))
    if "shrink" in d:
        s = d["shrink"]
        return Shrink(int(s["level"]), s["kind"], _frac_parse(s["c"]), int(s.get("a", 1)), int(s.get("b", 1)))
    if "op" in d:
        return FamOp(d["op"], tuple(family_from_json(a) for a in d["args"]))
    raise TermParseError("family needs 'const', 'shrink' or 'op'")
