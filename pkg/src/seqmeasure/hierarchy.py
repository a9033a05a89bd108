"""The tower of level measures and the finitely supported sequences that
converge to them.

A build at level a+1 places a copy of a level-a algebra inside every block
``B_n`` and measures a set by the limit of its block-wise measures.  Its
witness stream uses the diagonal schedule: stage ``s`` is the stage-``s``
witness of the block-``s`` measure, moved into block ``s``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import (
    ExhaustedStreamError,
    InexactBaseError,
    ScheduleViolationError,
    ZeroMassError,
)
from .measure import (
    Diagonal,
    LevelMeasure,
    Measure,
    Mixture,
    Pushed,
    Restricted,
    Reweighted,
    UniformPrefix,
    decompose,
    require,
    restricted,
    reweighted,
)
from .natset import (
    FULL,
    Dyadic,
    Lift,
    SetTerm,
    compl,
    dyadic_phi,
    phi,
)

DEFAULT_K_MAX = 4
DEFAULT_MAX_LEVEL = 3
DEFAULT_HORIZON = 1000
DEFAULT_TOL = Fraction(1, 50)


def dyadic_generators(level: int, k_max: int = DEFAULT_K_MAX) -> list[tuple[str, SetTerm, Fraction]]:
    """(id, term, lambda(M)) for the singleton dyadic classes M of depth 1..k_max."""
    out = []
    for k in range(1, k_max + 1):
        for r in range(1 << k):
            t = Dyadic(k, [r]) if level == 1 else dyadic_phi(level, k, [r])
            out.append((f"d{k}r{r}", t, Fraction(1, 1 << k)))
    return out


@dataclass(frozen=True)
class LevelBuild:
    level: int
    measure: LevelMeasure
    generators: tuple  # ((id, term), ...)
    lambdas: tuple  # dyadic mass of each generator
    base: tuple = ()  # the block builds, last entry repeated for all later blocks

    def base_build(self, n: int) -> LevelBuild:
        if not self.base:
            raise ValueError("level 1 has no block builds")
        return self.base[min(n, len(self.base) - 1)]

    def lift(self, n: int, t: SetTerm) -> SetTerm:
        """The block wiring: copy an index set into block n."""
        return Lift(n, t)

    def embed(self, intervals) -> SetTerm:
        return phi(self.level, intervals)

    def generator_terms(self) -> list[SetTerm]:
        return [t for _, t in self.generators]

    def stream(self) -> WitnessStream:
        return stream_for(self.measure)

    def to_json(self) -> dict:
        uniform = all(b.measure == LevelMeasure(self.level - 1) for b in self.base)
        return {"level": self.level, "preset": "uniform" if uniform else "mixed"}


def _make_build(level: int, measure: LevelMeasure, base: tuple, k_max: int) -> LevelBuild:
    gens = dyadic_generators(level, k_max)
    return LevelBuild(
        level,
        measure,
        tuple((g, t) for g, t, _ in gens),
        tuple(lam for _, _, lam in gens),
        base,
    )


def build_level1(k_max: int = DEFAULT_K_MAX) -> LevelBuild:
    return _make_build(1, LevelMeasure(1), (), k_max)


def canonical_pair(base: LevelBuild | Sequence[LevelBuild], k_max: int = DEFAULT_K_MAX) -> LevelBuild:
    """The level-(a+1) build from block builds.

    ``base`` is one build used in every block, or a list whose i-th entry
    serves block i and whose last entry serves every later block.
    """
    bases = (base,) if isinstance(base, LevelBuild) else tuple(base)
    if not bases:
        raise ValueError("need at least one block build")
    for b in bases:
        for _, t in b.generators:
            if b.measure.eval(t) is None:
                raise InexactBaseError(f"block build cannot evaluate generator {t}")
    tail = bases[-1]
    level = tail.level + 1
    if tail.measure != LevelMeasure(tail.level):
        raise ValueError("the repeated block build must be a uniform tower")
    head = tuple((n, b.measure) for n, b in enumerate(bases[:-1]) if b.measure != tail.measure)
    return _make_build(level, LevelMeasure(level, head), bases, k_max)


def preset_build(level: int, k_max: int = DEFAULT_K_MAX, max_level: int = DEFAULT_MAX_LEVEL) -> LevelBuild:
    if not 1 <= level <= max_level:
        raise ValueError(f"level must be between 1 and {max_level}")
    b = build_level1(k_max)
    for _ in range(level - 1):
        b = canonical_pair(b, k_max)
    return b


def metric_isomorphism_defects(build: LevelBuild) -> list[str]:
    """Generators whose measure differs from the dyadic mass they embed."""
    return [
        g for (g, t), lam in zip(build.generators, build.lambdas) if build.measure.eval(t) != lam
    ]


# -- witness streams ------------------------------------------------------------

class WitnessStream:
    """Deterministic map from stage index to a finitely supported measure."""

    level = 0

    def stage(self, s: int) -> Measure:
        raise NotImplementedError

    def provenance(self) -> dict:
        raise NotImplementedError

    def __getitem__(self, s: int) -> Measure:
        return self.stage(s)


@dataclass(frozen=True)
class UniformStream(WitnessStream):
    """Uniform averages over initial segments; converges to density."""

    level = 1

    def stage(self, s: int) -> Measure:
        return UniformPrefix(s)

    def provenance(self) -> dict:
        return {"uniform": True}


@dataclass(frozen=True)
class ConstantStream(WitnessStream):
    m: Measure
    level = 0

    def stage(self, s: int) -> Measure:
        return self.m

    def provenance(self) -> dict:
        return {"constant": self.m.to_json()}


@dataclass(frozen=True)
class LevelStream(WitnessStream):
    """Diagonal witnesses for a level measure with level >= 2."""

    measure: LevelMeasure

    @property
    def level(self) -> int:
        return self.measure.level

    def stage(self, s: int) -> Measure:
        return Pushed(s, stream_for(self.measure.base(s)).stage(s))

    def provenance(self) -> dict:
        return {"diagonal": self.measure.to_json()}


@dataclass(frozen=True)
class PushedStream(WitnessStream):
    m: int
    inner: WitnessStream

    @property
    def level(self) -> int:
        return self.inner.level

    def stage(self, s: int) -> Measure:
        return Pushed(self.m, self.inner.stage(s))

    def provenance(self) -> dict:
        return {"pushed": self.m, "inner": self.inner.provenance()}


@dataclass(frozen=True)
class DiagonalPointStream(WitnessStream):
    """Stage s moves a fixed finitely supported measure into block s."""

    inner: Measure
    level = 1

    def stage(self, s: int) -> Measure:
        return Pushed(s, self.inner)

    def provenance(self) -> dict:
        return {"diagonal_points": self.inner.to_json()}


@dataclass(frozen=True)
class MixtureStream(WitnessStream):
    parts: tuple  # ((weight, stream), ...)

    @property
    def level(self) -> int:
        return max((st.level for _, st in self.parts), default=0)

    def stage(self, s: int) -> Measure:
        return Mixture((w, st.stage(s)) for w, st in self.parts)

    def provenance(self) -> dict:
        return {"mixture": [[[w.numerator, w.denominator], st.provenance()] for w, st in self.parts]}


def _positive_stage(stream: WitnessStream, s: int, mass_of, lookahead: int = 4096):
    # an early stage may miss the conditioning set entirely; move forward to
    # the next stage that charges it (the limit is unaffected)
    for s2 in range(s, s + lookahead):
        st = stream.stage(s2)
        mass = require(mass_of(st), "stage mass")
        if mass > 0:
            return st, mass
    raise ExhaustedStreamError(f"no stage in [{s}, {s + lookahead}) charges the conditioning set")


@dataclass(frozen=True)
class ReweightStream(WitnessStream):
    """Each stage reweighted by the same simple density and renormalized."""

    inner: WitnessStream
    parts: tuple

    @property
    def level(self) -> int:
        return self.inner.level

    def stage(self, s: int) -> Measure:
        def mass(st):
            return reweighted(st, self.parts).eval(FULL)

        st, m = _positive_stage(self.inner, s, mass)
        rw = reweighted(st, self.parts)
        return rw if m == 1 else Mixture([(1 / m, rw)])

    def provenance(self) -> dict:
        return {"reweight": self.inner.provenance(), "parts": len(self.parts)}


@dataclass(frozen=True)
class RestrictStream(WitnessStream):
    """Stage s restricted to ``sets[min(s, len-1)]`` and rescaled."""

    inner: WitnessStream
    sets: tuple

    @property
    def level(self) -> int:
        return self.inner.level

    def target_set(self, s: int) -> SetTerm:
        return self.sets[min(s, len(self.sets) - 1)]

    def stage(self, s: int) -> Measure:
        Y = self.target_set(s)
        st, _ = _positive_stage(self.inner, s, lambda m: m.eval(Y))
        return restricted(st, Y)

    def provenance(self) -> dict:
        return {"restrict": self.inner.provenance(), "sets": len(self.sets)}


def stream_for(m: Measure) -> WitnessStream:
    """The canonical witness stream of a structured measure."""
    if isinstance(m, LevelMeasure):
        return UniformStream() if m.level == 1 else LevelStream(m)
    if isinstance(m, Diagonal):
        return DiagonalPointStream(m.inner)
    if isinstance(m, Pushed) and not m.discrete:
        return PushedStream(m.m, stream_for(m.inner))
    if m.discrete:
        return ConstantStream(m)
    if isinstance(m, Mixture):
        return MixtureStream(tuple((w, stream_for(c)) for w, c in m.components))
    if isinstance(m, Reweighted):
        return ReweightStream(stream_for(m.base), m.parts)
    if isinstance(m, Restricted):
        return RestrictStream(stream_for(m.base), (m.to,))
    raise TypeError(f"no witness stream for {type(m).__name__}")


def witness_level1(n: int) -> UniformPrefix:
    return UniformPrefix(n)


def witness_next(build: LevelBuild, m: int, depth: int) -> Pushed:
    """The block-m measure's witness at inner stage ``depth``, placed in block m."""
    return Pushed(m, build.base_build(m).stream().stage(depth))


# -- convergence ----------------------------------------------------------------

@dataclass
class ConvergenceReport:
    generator_ids: list
    targets: list
    distances: list  # per stage, from stage `start`
    start: int
    tol: Fraction
    settle: int | None
    passed: bool
    values: list = field(default_factory=list)  # per stage, per generator

    def distance(self, s: int) -> Fraction:
        return self.distances[s - self.start]

    def rows(self):
        for j, vals in enumerate(self.values):
            s = self.start + j
            for gid, v, t in zip(self.generator_ids, vals, self.targets):
                d = abs(v - t)
                yield (s, gid, v.numerator, v.denominator, t.numerator, t.denominator,
                       d.numerator, d.denominator)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "generator_id", "witness_num", "witness_den",
                    "target_num", "target_den", "dist_num", "dist_den"])
        w.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "verdict": "pass" if self.passed else "fail",
            "settle": self.settle,
            "tol": f"{self.tol.numerator}/{self.tol.denominator}",
            "horizon": self.start + len(self.distances) - 1,
            "final_distance": str(self.distances[-1]) if self.distances else None,
            "max_distance_after_settle": (
                str(max(self.distances[self.settle - self.start:])) if self.settle is not None else None
            ),
        }


def settle_stage(distances: Sequence[Fraction], tol: Fraction, start: int = 0) -> int | None:
    """Least stage from which every distance up to the horizon is <= tol."""
    settle = None
    for j in range(len(distances) - 1, -1, -1):
        if distances[j] > tol:
            break
        settle = start + j
    return settle


def converge_check(
    stream: WitnessStream,
    target: Measure,
    G: Sequence,
    tol=DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
    start: int = 0,
    keep_values: bool = True,
) -> ConvergenceReport:
    """Distances ``max_G |stage_s(g) - target(g)|`` for s in [start, horizon].

    The verdict passes when the distances settle below ``tol`` no later than
    halfway to the horizon and stay there.  ``G`` holds terms or (id, term)
    pairs.
    """
    tol = Fraction(tol)
    pairs = [g if isinstance(g, tuple) else (f"g{i}", g) for i, g in enumerate(G)]
    ids = [p[0] for p in pairs]
    terms = [p[1] for p in pairs]
    targets = [require(target.eval(t), f"target value of {gid}") for gid, t in pairs]
    distances, values = [], []
    for s in range(start, horizon + 1):
        st = stream.stage(s)
        vals = [require(st.eval(t), "stage value") for t in terms]
        distances.append(max((abs(v - t) for v, t in zip(vals, targets)), default=Fraction(0)))
        if keep_values:
            values.append(vals)
    settle = settle_stage(distances, tol, start)
    passed = settle is not None and settle <= start + (horizon - start) // 2
    return ConvergenceReport(ids, targets, distances, start, tol, settle, passed, values)


# -- non-atomic extraction ----------------------------------------------------------

def nonatomic_witness_extract(
    stream: WitnessStream, nu: Measure, schedule: Sequence[SetTerm]
) -> WitnessStream:
    """Restrict stage s to the complement of ``A_min(s, L)`` and rescale.

    ``schedule[i]`` is the set ``A_{i+1}``; it must carry all but ``1/(i+1)``
    of the atomic parts of ``nu`` while its non-atomic mass stays below
    ``1/(i+1)``.
    """
    if not schedule:
        return stream
    dec = decompose(nu)
    atomic = Mixture(dec.part0.components + dec.part1.components)
    for i, A in enumerate(schedule):
        bound = Fraction(1, i + 1)
        na = require(dec.part2.eval(A), "non-atomic mass of schedule set")
        at = require(atomic.eval(compl(A)), "atomic mass outside schedule set")
        if not (na < bound and at < bound):
            raise ScheduleViolationError(
                f"schedule set {i + 1}: non-atomic mass {na}, atomic remainder {at}, bound {bound}"
            )
    return RestrictStream(stream, tuple(compl(A) for A in schedule))


def nonatomic_target(nu: Measure) -> Measure:
    part2 = decompose(nu).part2
    mass = require(part2.total(), "non-atomic mass")
    if mass == 0:
        raise ZeroMassError("the measure has no non-atomic part")
    return Mixture([(1 / mass, part2)])
