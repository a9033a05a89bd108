"""Finitely additive probability measures on algebras of terms.

Measures are evaluators: ``m.eval(t)`` returns an exact ``Fraction`` or
``None`` when the value is not determined by the normal form.  Nothing is
tabulated; every value is computed from the term on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Iterable, Sequence

from .errors import (
    NormalizationError,
    PartitionError,
    TermParseError,
    UndefinedValueError,
    UnstructuredInputError,
    ZeroMassError,
)
from .natset import (
    FULL,
    Block,
    Finite,
    SetTerm,
    block_of,
    block_point,
    block_trace,
    compl,
    count_below,
    density_value,
    eventual,
    family_limit,
    family_limit_member,
    family_shrinks,
    flatten,
    inter,
    member,
    phi,
    term_from_json,
    term_to_json,
    union,
)
from .natset.terms import _cached_hash, _frac_json, _frac_parse


class Measure:
    """Common interface: ``eval``, ``to_json`` and, for discrete measures, ``atoms``."""

    discrete = False

    def eval(self, t: SetTerm) -> Fraction | None:
        raise NotImplementedError

    def __call__(self, t: SetTerm) -> Fraction | None:
        return self.eval(t)

    def total(self) -> Fraction | None:
        return self.eval(FULL)

    def atoms(self) -> dict[int, Fraction]:
        raise TypeError(f"{type(self).__name__} is not finitely supported")

    def to_finsupp(self) -> FinSuppMeasure:
        a = self.atoms()
        pts = sorted(a)
        return FinSuppMeasure(pts, [a[p] for p in pts])

    def to_json(self) -> dict:
        raise NotImplementedError


@lru_cache(maxsize=100_000)
def _finsupp_eval(m: FinSuppMeasure, t: SetTerm) -> Fraction:
    return sum((w for p, w in zip(m.points, m.weights) if member(t, p)), Fraction(0))


@_cached_hash
@dataclass(frozen=True)
class FinSuppMeasure(Measure):
    points: tuple
    weights: tuple
    discrete = True

    def __init__(self, points: Iterable[int], weights: Iterable, *, check: bool = True):
        pts = tuple(int(p) for p in points)
        ws = tuple(Fraction(w) for w in weights)
        if check:
            if len(pts) != len(ws) or not pts:
                raise ValueError("need one positive weight per support point")
            if len(set(pts)) != len(pts):
                raise ValueError("support points must be distinct")
            if any(w <= 0 for w in ws):
                raise ValueError("weights must be positive")
            if sum(ws) != 1:
                raise ValueError(f"weights sum to {sum(ws)}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def dirac(cls, x: int) -> FinSuppMeasure:
        return cls([x], [1])

    @classmethod
    def uniform(cls, pts: Iterable[int]) -> FinSuppMeasure:
        pts = list(pts)
        return cls(pts, [Fraction(1, len(pts))] * len(pts))

    def eval(self, t: SetTerm) -> Fraction:
        return _finsupp_eval(self, t)

    def atoms(self) -> dict[int, Fraction]:
        return dict(zip(self.points, self.weights))

    def to_json(self) -> dict:
        return {"points": list(self.points), "weights": [_frac_json(w) for w in self.weights]}


@dataclass(frozen=True)
class UniformPrefix(Measure):
    """Uniform probability on {0, …, n}; evaluated by prefix counting."""

    n: int
    discrete = True

    def eval(self, t: SetTerm) -> Fraction:
        return Fraction(count_below(t, self.n + 1), self.n + 1)

    def atoms(self) -> dict[int, Fraction]:
        w = Fraction(1, self.n + 1)
        return {i: w for i in range(self.n + 1)}

    def to_json(self) -> dict:
        return {"uniform_prefix": self.n}


@dataclass(frozen=True)
class Pushed(Measure):
    """A measure on indices transported into block ``m`` by ``i -> x^m_i``."""

    m: int
    inner: Measure

    @property
    def discrete(self) -> bool:
        return self.inner.discrete

    def eval(self, t: SetTerm) -> Fraction | None:
        return self.inner.eval(block_trace(t, self.m))

    def atoms(self) -> dict[int, Fraction]:
        return {block_point(self.m, i): w for i, w in self.inner.atoms().items()}

    def to_json(self) -> dict:
        return {"pushed": self.m, "inner": self.inner.to_json()}


@lru_cache(maxsize=200_000)
def _level_eval(m: LevelMeasure, t: SetTerm) -> Fraction | None:
    if m.level == 1:
        return density_value(t)
    _, fam = eventual(t)
    # each Shrink leaf has canonical measure at most its radius, which tends to 0
    return m.tail_base().eval(family_limit(fam))


@dataclass(frozen=True)
class LevelMeasure(Measure):
    """The canonical measure at a finite level of the tower.

    Level 1 is asymptotic density.  Level a+1 is ``t -> lim_n mu_n(trace_n t)``
    where ``mu_n`` is the level-a measure (or a ``head`` override for block n).
    """

    level: int
    head: tuple = ()

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be at least 1")
        if self.level == 1 and self.head:
            raise ValueError("level 1 has no block measures")

    def tail_base(self) -> LevelMeasure:
        return LevelMeasure(self.level - 1)

    def base(self, n: int) -> LevelMeasure:
        for k, mm in self.head:
            if k == n:
                return mm
        return self.tail_base()

    def eval(self, t: SetTerm) -> Fraction | None:
        return _level_eval(self, t)

    def block_value(self, t: SetTerm, n: int) -> Fraction | None:
        """mu'_n(t ∩ B_n); at level 1 the blocks are the singletons {n}."""
        if self.level == 1:
            return Fraction(int(member(t, n)))
        return self.base(n).eval(block_trace(t, n))

    def block_tail(self, t: SetTerm) -> tuple[int, Fraction | None, list]:
        """(N, limit, shrinks): for n >= N, |block_value(t, n) - limit| <= sum of
        the shrink radii at n."""
        if self.level == 1:
            f = flatten(t)
            if f is None or f.intervals:
                return 0, None, []
            return max((k + 1 for k in f.flips), default=0), Fraction(0), []
        N, fam = eventual(t)
        N = max(N, max((k + 1 for k, _ in self.head), default=0))
        return N, self.tail_base().eval(family_limit(fam)), family_shrinks(fam)

    def phi(self, intervals) -> SetTerm:
        return phi(self.level, intervals)

    def to_json(self) -> dict:
        if not self.head:
            return {"level": self.level, "tower": "uniform"}
        return {
            "level": self.level,
            "tower": "mixed",
            "head": [[n, mm.to_json()] for n, mm in self.head],
        }


@dataclass(frozen=True)
class Diagonal(Measure):
    """``t -> lim_n inner(trace_n t)``: the weak* limit of ``Pushed(n, inner)``.

    For a finitely supported ``inner`` this is a finite combination of
    non-principal point masses living off the blocks.
    """

    inner: Measure

    def __post_init__(self):
        if not self.inner.discrete:
            raise ValueError("diagonal limits need a finitely supported inner measure")

    def eval(self, t: SetTerm) -> Fraction:
        _, fam = eventual(t)
        return sum(
            (w for c, w in self.inner.atoms().items() if family_limit_member(fam, c)),
            Fraction(0),
        )

    def to_json(self) -> dict:
        return {"diagonal": self.inner.to_json()}


@dataclass(frozen=True)
class Mixture(Measure):
    """Non-negative combination ``sum_j w_j m_j`` (not necessarily normalized)."""

    components: tuple = ()

    def __init__(self, components: Iterable = ()):
        comps = tuple((Fraction(w), m) for w, m in components if Fraction(w) != 0)
        if any(w < 0 for w, _ in comps):
            raise ValueError("mixture weights must be non-negative")
        object.__setattr__(self, "components", comps)

    @property
    def discrete(self) -> bool:
        return all(m.discrete for _, m in self.components)

    def eval(self, t: SetTerm) -> Fraction | None:
        total = Fraction(0)
        for w, m in self.components:
            v = m.eval(t)
            if v is None:
                return None
            total += w * v
        return total

    def atoms(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for w, m in self.components:
            for p, v in m.atoms().items():
                out[p] = out.get(p, 0) + w * v
        return out

    def to_json(self) -> dict:
        return {"mixture": [[_frac_json(w), m.to_json()] for w, m in self.components]}


@dataclass(frozen=True)
class Reweighted(Measure):
    """``t -> sum_j c_j base(t ∩ A_j)`` for a simple density over a partition."""

    base: Measure
    parts: tuple

    @property
    def discrete(self) -> bool:
        return self.base.discrete

    def eval(self, t: SetTerm) -> Fraction | None:
        total = Fraction(0)
        for a, c in self.parts:
            if c == 0:
                continue
            v = self.base.eval(inter(t, a))
            if v is None:
                return None
            total += c * v
        return total

    def atoms(self) -> dict[int, Fraction]:
        out = {}
        for p, w in self.base.atoms().items():
            for a, c in self.parts:
                if member(a, p):
                    if c:
                        out[p] = w * c
                    break
        return out

    def to_json(self) -> dict:
        return {
            "reweight": self.base.to_json(),
            "parts": [[term_to_json(a), _frac_json(c)] for a, c in self.parts],
        }


@dataclass(frozen=True)
class Restricted(Measure):
    """``t -> base(t ∩ Y) / base(Y)``."""

    base: Measure
    to: SetTerm

    @property
    def discrete(self) -> bool:
        return self.base.discrete

    @cached_property
    def mass(self) -> Fraction | None:
        return self.base.eval(self.to)

    def eval(self, t: SetTerm) -> Fraction | None:
        mass = self.mass
        v = self.base.eval(inter(t, self.to))
        if mass is None or v is None:
            return None
        if mass == 0:
            raise ZeroMassError("restriction to a null set")
        return v / mass

    def atoms(self) -> dict[int, Fraction]:
        a = {p: w for p, w in self.base.atoms().items() if member(self.to, p)}
        mass = sum(a.values(), Fraction(0))
        if mass == 0:
            raise ZeroMassError("restriction to a null set")
        return {p: w / mass for p, w in a.items()}

    def to_json(self) -> dict:
        return {"restrict": self.base.to_json(), "to": term_to_json(self.to)}


ZERO_MEASURE = Mixture(())


def restricted(m: Measure, Y: SetTerm) -> Measure:
    """``m`` conditioned on ``Y``, simplified structurally.

    Mixture components that miss ``Y`` are dropped, components carried by
    ``Y`` are kept whole and block measures are conditioned on the trace of
    ``Y``.  The result agrees with ``Restricted(m, Y)`` on every term.
    """
    if isinstance(m, Mixture):
        parts = []
        for w, c in m.components:
            mass = require(c.eval(Y), "component mass")
            if mass:
                parts.append((w * mass, restricted(c, Y)))
        total = sum((w for w, _ in parts), Fraction(0))
        if total == 0:
            raise ZeroMassError("restriction to a null set")
        if len(parts) == 1:
            return parts[0][1]  # already a probability measure
        return Mixture((w / total, c) for w, c in parts)
    if isinstance(m, Pushed):
        return Pushed(m.m, restricted(m.inner, block_trace(Y, m.m)))
    mass = require(m.eval(Y), "mass of the restricting set")
    if mass == 0:
        raise ZeroMassError("restriction to a null set")
    total = require(m.total(), "total mass")
    if mass == total:
        return m if total == 1 else Mixture([(1 / total, m)])
    return Restricted(m, Y)


def reweighted(m: Measure, parts: tuple) -> Measure:
    """``Reweighted(m, parts)``, moved inside block measures where possible."""
    if isinstance(m, Pushed):
        traced = tuple((block_trace(a, m.m), c) for a, c in parts)
        return Pushed(m.m, reweighted(m.inner, traced))
    return Reweighted(m, parts)


def measure_from_json(d: Any) -> Measure:
    try:
        if "points" in d:
            return FinSuppMeasure(d["points"], [_frac_parse(w) for w in d["weights"]])
        if "uniform_prefix" in d:
            return UniformPrefix(int(d["uniform_prefix"]))
        if "pushed" in d:
            return Pushed(int(d["pushed"]), measure_from_json(d["inner"]))
        if "level" in d:
            head = tuple((int(n), measure_from_json(m)) for n, m in d.get("head", []))
            return LevelMeasure(int(d["level"]), head)
        if "diagonal" in d:
            return Diagonal(measure_from_json(d["diagonal"]))
        if "mixture" in d:
            return Mixture((_frac_parse(w), measure_from_json(m)) for w, m in d["mixture"])
        if "reweight" in d:
            parts = tuple((term_from_json(a), _frac_parse(c)) for a, c in d["parts"])
            return Reweighted(measure_from_json(d["reweight"]), parts)
        if "restrict" in d:
            return Restricted(measure_from_json(d["restrict"]), term_from_json(d["to"]))
    except TermParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise TermParseError(f"malformed measure: {exc}") from exc
    raise TermParseError(f"unrecognised measure description: {d!r}")


# -- operations ---------------------------------------------------------------

def eval_measure(m: Measure, t: SetTerm) -> Fraction | None:
    return m.eval(t)


def require(value: Fraction | None, what: str = "value") -> Fraction:
    if value is None:
        raise UndefinedValueError(f"{what} is not determined by the normal form")
    return value


def restrict_rescale(m: Measure, Y: SetTerm) -> Measure:
    mass = m.eval(Y)
    if mass is None:
        raise UndefinedValueError("mass of the restricting set is unknown")
    if mass == 0:
        raise ZeroMassError("cannot rescale by a null set")
    if isinstance(m, FinSuppMeasure):
        return Restricted(m, Y).to_finsupp()
    return Restricted(m, Y)


def is_empty(t: SetTerm) -> bool | None:
    """Decide emptiness when the normal form allows it."""
    f = flatten(t)
    if f is not None:
        return not f.intervals and not f.flips
    N, fam = eventual(t)
    if family_shrinks(fam):
        return None
    for n in range(N):
        e = is_empty(block_trace(t, n))
        if not e:
            return e
    return is_empty(family_limit(fam))


def check_partition(parts: Sequence[SetTerm]) -> None:
    for i, a in enumerate(parts):
        for b in parts[i + 1:]:
            e = is_empty(inter(a, b))
            if not e:
                raise PartitionError("partition parts overlap" if e is False else "cannot certify disjointness")
    e = is_empty(compl(union(*parts)))
    if not e:
        raise PartitionError("partition does not cover the naturals" if e is False else "cannot certify cover")


def reweight(m: Measure, f: Sequence[tuple[SetTerm, Any]]) -> Measure:
    """Reweight ``m`` by the simple density ``sum_j c_j chi_{A_j}``."""
    parts = tuple((a, Fraction(c)) for a, c in f)
    if any(c < 0 for _, c in parts):
        raise PartitionError("density values must be non-negative")
    check_partition([a for a, _ in parts])
    integral = Fraction(0)
    for a, c in parts:
        integral += c * require(m.eval(a), "measure of a partition part")
    if integral != 1:
        raise NormalizationError(f"integral of the density is {integral}, not 1")
    out = Reweighted(m, parts)
    if isinstance(m, FinSuppMeasure):
        return out.to_finsupp()
    return out


def indicator_density(m: Measure, Y: SetTerm) -> list[tuple[SetTerm, Fraction]]:
    """The density ``chi_Y / m(Y)`` as a two-part partition."""
    mass = require(m.eval(Y), "mass of Y")
    if mass == 0:
        raise ZeroMassError("Y is null")
    return [(Y, 1 / mass), (compl(Y), Fraction(0))]


def generator_distance(m1: Measure, m2: Measure, G: Iterable[SetTerm]) -> Fraction:
    best = Fraction(0)
    for t in G:
        a = require(m1.eval(t), "first measure")
        b = require(m2.eval(t), "second measure")
        best = max(best, abs(a - b))
    return best


def mixture(*pairs) -> Mixture:
    return Mixture(pairs)


def scaled(m: Measure, c) -> Mixture:
    return Mixture([(c, m)])


def normalized(m: Measure) -> Measure:
    mass = require(m.total(), "total mass")
    if mass == 0:
        raise ZeroMassError("cannot normalize the zero measure")
    return m if mass == 1 else Mixture([(1 / mass, m)])


# -- decomposition --------------------------------------------------------------

EPS_SCHEDULE = tuple(Fraction(1, 1 << j) for j in range(1, 11))


@dataclass
class Decomposition:
    part0: Mixture
    part1: Mixture
    part2: Mixture
    tail_bound: Fraction
    level: int
    blocks_checked: int
    nonatomic: list = field(default_factory=list)

    def total(self) -> Mixture:
        return Mixture(self.part0.components + self.part1.components + self.part2.components)


def _components(m: Measure, w: Fraction = Fraction(1)):
    if isinstance(m, Mixture):
        for v, c in m.components:
            yield from _components(c, w * v)
    else:
        yield w, m


def _level_of(m: Measure) -> int | None:
    if isinstance(m, LevelMeasure):
        return m.level
    if isinstance(m, (Reweighted, Restricted)):
        return _level_of(m.base)
    return None


def _classify(m: Measure, context: int) -> int:
    if m.discrete and not isinstance(m, Diagonal):
        return 0
    if isinstance(m, Diagonal):
        return 1
    if isinstance(m, Pushed):
        if context >= 2:
            return 0
        lvl = _level_of(m.inner)
        if lvl is None:
            raise UnstructuredInputError(f"cannot classify {m!r}")
        return 2
    lvl = _level_of(m)
    if lvl is None:
        raise UnstructuredInputError(f"cannot classify {type(m).__name__} components")
    if lvl < context:
        return 0
    if lvl == context:
        return 2
    raise UnstructuredInputError(f"level-{lvl} component in a level-{context} decomposition")


def nonatomic_certificate(m: Measure, level: int, eps: Fraction, max_depth: int = 24) -> dict:
    """A dyadic partition of unity whose parts all have ``m``-measure below ``eps``."""
    for d in range(1, max_depth + 1):
        width = Fraction(1, 1 << d)
        values = []
        for s in range(1 << d):
            v = require(m.eval(phi(level, [(s * width, (s + 1) * width)])), "partition part")
            values.append(v)
            if v >= eps:
                break
        else:
            return {"eps": eps, "depth": d, "max_part": max(values), "sum": sum(values)}
    raise UnstructuredInputError(f"no dyadic partition below {eps} up to depth {max_depth}")


def decompose(m: Measure, level: int | None = None, blocks: int = 33) -> Decomposition:
    """Split a structured measure into block-carried, off-block atomic and
    non-atomic parts.

    Accepted components are finitely supported measures, ``Pushed`` block
    measures, ``Diagonal`` limits of block points, canonical level measures
    and their reweightings or restrictions.
    """
    comps = list(_components(m))
    if level is None:
        level = max((_level_of(c) or 1 for _, c in comps), default=1)
    buckets: list[list] = [[], [], []]
    for w, c in comps:
        buckets[_classify(c, level)].append((w, c))
    part0, part1, part2 = (Mixture(b) for b in buckets)

    support = [block_of(p) + 1 for _, c in buckets[0] if c.discrete for p in c.atoms()]
    support += [c.m + 1 for _, c in buckets[0] if isinstance(c, Pushed)]
    N = max([blocks, *support])
    if level >= 2:
        tail = require(part0.eval(compl(union(*[Block(n) for n in range(N)]))), "part0 tail")
    else:
        tail = Fraction(0)

    dec = Decomposition(part0, part1, part2, tail, level, N)
    if part2.components:
        for k in range(64):
            if require(part2.eval(Finite([k])), "singleton") != 0:
                raise UnstructuredInputError(f"non-atomic part charges the point {k}")
        if level >= 2:
            for n in range(N):
                if require(part2.eval(Block(n)), "block") != 0:
                    raise UnstructuredInputError(f"non-atomic part charges block {n}")
        dec.nonatomic = [nonatomic_certificate(part2, level, eps) for eps in EPS_SCHEDULE]
    return dec
