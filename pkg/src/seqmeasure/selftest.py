"""Seeded invariant suites behind ``seqmeasure selftest``.

Each check returns a short detail string; the report lists checks in a
fixed order and never includes timings, so a seed reproduces it byte for
byte.  ``inject_fault`` corrupts one named check's evaluator so the harness
can confirm that failures surface.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import hierarchy, separators
from .measure import (
    LevelMeasure,
    decompose,
    indicator_density,
    measure_from_json,
    restrict_rescale,
    reweight,
)
from .natset import (
    FULL,
    Block,
    Dyadic,
    Lift,
    block_of,
    count_below,
    count_error_bound,
    density_value,
    dyadic_phi,
    prefix,
    term_from_json,
    term_to_json,
)
from .sampling import random_claim3_stream, random_finsupp, random_structured, random_term

FAULTS = ("density", "reweight", "certificate")


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


@dataclass
class SelftestReport:
    seed: int
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def render(self) -> str:
        lines = [f"selftest seed={self.seed}"]
        for r in self.results:
            lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.suite}.{r.name}: {r.detail}")
        failed = [f"{r.suite}.{r.name}" for r in self.results if not r.passed]
        lines.append("result: pass" if not failed else f"result: fail ({', '.join(failed)})")
        return "\n".join(lines) + "\n"


class CheckFailed(Exception):
    pass


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise CheckFailed(msg)


# -- natset -----------------------------------------------------------------------------

def check_blocks_partition(rng, fault):
    N = 4096
    owners = np.zeros(N, dtype=int)
    for n in range(13):
        owners += prefix(Block(n), N).astype(int)
    _expect(bool((owners == 1).all()), "blocks do not partition the prefix")
    for _ in range(20):
        n = rng.randrange(6)
        t = random_term(rng, 2)
        pts = np.nonzero(prefix(Lift(n, t), N))[0]
        _expect(all(block_of(int(k)) == n for k in pts), f"Lift({n}, ...) leaves its block")
    return "13 blocks over 4096, 20 lifts"


def check_density_oracle(rng, fault):
    N = 1 << 14
    for _ in range(40):
        t = random_term(rng, 3)
        d = density_value(t)
        if fault == "density" and d is not None:
            d += Fraction(1, 100)
        c = int(prefix(t, N).sum())
        _expect(c == count_below(t, N), f"prefix count disagrees with count_below for {t}")
        if d is not None:
            _expect(abs(c - N * d) <= count_error_bound(t, N), f"density {d} outside bound for {t}")
    return "40 random terms at N=2^14"


def check_term_json(rng, fault):
    for _ in range(40):
        t = random_term(rng, 3)
        _expect(term_from_json(json.loads(json.dumps(term_to_json(t)))) == t, "term JSON round trip")
    return "40 round trips"


# -- measure -------------------------------------------------------------------------------

def check_reweight_identity(rng, fault):
    m1 = LevelMeasure(1)
    G = [t for _, t, _ in hierarchy.dyadic_generators(1)]
    for _ in range(5):
        k = rng.randint(1, 3)
        Y = Dyadic(k, rng.sample(range(1 << k), rng.randint(1, 1 << (k - 1))))
        rw = reweight(m1, indicator_density(m1, Y))
        rr = restrict_rescale(m1, Y)
        for t in G:
            a, b = rw.eval(t), rr.eval(t)
            if fault == "reweight":
                a += Fraction(1, 1000)
            _expect(a == b, f"reweight and restriction disagree on {t}")
        one = reweight(m1, [(FULL, 1)])
        _expect(all(one.eval(t) == m1.eval(t) for t in G), "f = 1 changes values")
    return "5 indicator densities on 30 generators"


def check_decompose(rng, fault):
    G = [t for _, t, _ in hierarchy.dyadic_generators(2)]
    for _ in range(5):
        nu, _ = random_structured(rng)
        dec = decompose(nu)
        _expect(all(dec.total().eval(t) == nu.eval(t) for t in G), "parts do not re-sum")
    return "5 structured mixtures"


def check_measure_json(rng, fault):
    for _ in range(10):
        nu, _ = random_structured(rng)
        _expect(measure_from_json(json.loads(json.dumps(nu.to_json()))) == nu, "measure JSON round trip")
    return "10 round trips"


# -- hierarchy ------------------------------------------------------------------------------

def check_tower(rng, fault):
    for level in (1, 2, 3):
        b = hierarchy.preset_build(level)
        _expect(not hierarchy.metric_isomorphism_defects(b), f"level {level} generators off their mass")
        if level >= 2:
            _expect(all(b.measure.eval(Block(m)) == 0 for m in range(33)), "a block has positive mass")
    return "levels 1-3, blocks 0-32"


def check_witness_validity(rng, fault):
    b = hierarchy.preset_build(2)
    st = b.stream()
    for s in rng.sample(range(200), 10):
        w = st.stage(s).to_finsupp()
        _expect(sum(w.weights) == 1, f"stage {s} weights do not sum to 1")
    return "10 level-2 stages"


def check_level1_rate(rng, fault):
    m1 = LevelMeasure(1)
    gens = hierarchy.dyadic_generators(1)
    for n in rng.sample(range(1, 5000), 10):
        w = hierarchy.witness_level1(n)
        for gid, t, lam in gens:
            _expect(abs(w.eval(t) - m1.eval(t)) <= Fraction(1 << t.k, n + 1), f"rate fails at stage {n}, {gid}")
    return "10 stages, 30 generators"


# -- separators --------------------------------------------------------------------------------

def check_finsupp_soundness(rng, fault):
    for level in (1, 2):
        for _ in range(10):
            nu = random_finsupp(rng)
            c = separators.separate_finsupp(LevelMeasure(level), nu, Fraction(1, 10))
            if fault == "certificate":
                c.claims[0] = separators.Claim(**{**c.claims[0].__dict__, "value": Fraction(1, 2)})
            r = separators.verify(c)
            _expect(r.ok, r.diagnostic)
    return "20 certificates"


def check_claim3_soundness(rng, fault):
    for _ in range(3):
        st = random_claim3_stream(rng, rng.randint(1, 4))
        c = separators.claim3_separator(LevelMeasure(2), st, Fraction(1, 10))
        r = separators.verify(c)
        _expect(r.ok, r.diagnostic)
        back = separators.Certificate.from_json(json.loads(json.dumps(c.to_json())))
        _expect(separators.verify(back).ok, "serialized certificate fails verify")
    return "3 streams"


def check_null_union(rng, fault):
    terms = [dyadic_phi(1, 3, [rng.randrange(8)]) & Block(rng.randrange(5)) for _ in range(4)]
    c = separators.null_union([Lift(n, t) for n, t in enumerate(terms)], LevelMeasure(2))
    r = separators.verify(c)
    _expect(r.ok, r.diagnostic)
    return "4 null inputs"


CHECKS: list[tuple[str, str, Callable]] = [
    ("natset", "blocks-partition", check_blocks_partition),
    ("natset", "density-oracle", check_density_oracle),
    ("natset", "term-json", check_term_json),
    ("measure", "reweight-restrict", check_reweight_identity),
    ("measure", "decompose-resum", check_decompose),
    ("measure", "measure-json", check_measure_json),
    ("hierarchy", "tower", check_tower),
    ("hierarchy", "witness-validity", check_witness_validity),
    ("hierarchy", "level1-rate", check_level1_rate),
    ("separators", "finsupp-soundness", check_finsupp_soundness),
    ("separators", "claim3-soundness", check_claim3_soundness),
    ("separators", "null-union", check_null_union),
]


def run_selftest(seed: int = 0, inject_fault: str | None = None) -> SelftestReport:
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; choose from {FAULTS}")
    results = []
    for i, (suite, name, fn) in enumerate(CHECKS):
        rng = random.Random(f"{seed}:{i}")
        try:
            detail = fn(rng, inject_fault)
            results.append(CheckResult(suite, name, True, detail))
        except Exception as exc:  # noqa: BLE001 - a crash is a failed invariant
            results.append(CheckResult(suite, name, False, f"{type(exc).__name__}: {exc}"))
    return SelftestReport(seed, results)
