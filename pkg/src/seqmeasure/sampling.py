"""Seeded random terms and measures for property tests and experiments."""
from __future__ import annotations

import random
from fractions import Fraction

from .measure import Diagonal, FinSuppMeasure, LevelMeasure, Measure, Mixture, Pushed, Reweighted, indicator_density
from .natset import (
    Block,
    Const,
    Dyadic,
    FamOp,
    Finite,
    Lift,
    SetTerm,
    Shrink,
    Stack,
    Vdc,
    block_point,
    compl,
    diff,
    dyadic_phi,
    inter,
    lifted_union,
    union,
)


def random_leaf(rng: random.Random, k_max: int = 6) -> SetTerm:
    kind = rng.randrange(6)
    if kind == 0:
        return Finite(rng.sample(range(64), rng.randrange(0, 6)))
    if kind in (1, 2):
        k = rng.randint(1, k_max)
        return Dyadic(k, rng.sample(range(1 << k), rng.randint(1, 1 << min(k, 3))))
    if kind == 3:
        return Block(rng.randrange(8))
    if kind == 4:
        q = rng.choice([3, 5, 6, 7, 12])
        a = Fraction(rng.randrange(q), q)
        b = a + Fraction(rng.randint(1, q), q)
        return Vdc([(a, min(b, Fraction(1)))], rng.sample(range(32), rng.randrange(3)))
    k = rng.randint(1, 3)
    return lifted_union(Dyadic(k, [rng.randrange(1 << k)]), rng.randrange(3))


def random_term(rng: random.Random, depth: int = 3, k_max: int = 6) -> SetTerm:
    """A random term whose density is exactly computable."""
    if depth <= 0 or rng.random() < 0.3:
        return random_leaf(rng, k_max)
    kind = rng.randrange(6)
    if kind == 0:
        return compl(random_term(rng, depth - 1, k_max))
    if kind == 1:
        return Lift(rng.randrange(6), random_term(rng, depth - 1, k_max))
    if kind == 2:
        start = rng.randint(1, 4)
        head = {n: random_term(rng, depth - 2, k_max) for n in range(start) if rng.random() < 0.5}
        return Stack(random_term(rng, depth - 1, k_max), start, head)
    args = [random_term(rng, depth - 1, k_max) for _ in range(rng.randint(2, 3))]
    return (union, inter, diff)[kind - 3](*args)


def random_weights(rng: random.Random, n: int, den: int = 60) -> list[Fraction]:
    """n positive rationals with denominator ``den`` summing to 1."""
    cuts = sorted(rng.sample(range(1, den), n - 1))
    bounds = [0, *cuts, den]
    return [Fraction(b - a, den) for a, b in zip(bounds, bounds[1:])]


def random_finsupp(rng: random.Random, max_point: int = 1000, max_size: int = 8) -> FinSuppMeasure:
    pts = rng.sample(range(max_point), rng.randint(1, max_size))
    return FinSuppMeasure(pts, random_weights(rng, len(pts), 7 * len(pts)))


def random_structured(rng: random.Random, level: int = 2) -> tuple[Measure, list[SetTerm]]:
    """A mixture of atoms, block-carried measures, off-block limit atoms and a
    non-atomic top-level part, with a schedule set covering the atomic parts."""
    comps: list[Measure] = []
    cover: list[SetTerm] = []
    atoms = random_finsupp(rng, 300, 4)
    comps.append(atoms)
    cover.append(Finite(atoms.points))
    m = rng.randrange(6)
    comps.append(Pushed(m, LevelMeasure(level - 1)))
    cover.append(Block(m))
    inner = random_finsupp(rng, 16, 3)
    comps.append(Diagonal(inner))
    cover.append(lifted_union(Finite(inner.points)))
    top = LevelMeasure(level)
    if rng.random() < 0.5:
        k = rng.randint(1, 3)
        Y = dyadic_phi(level, k, rng.sample(range(1 << k), rng.randint(1, 1 << (k - 1))))
        comps.append(Reweighted(top, tuple(indicator_density(top, Y))))
    else:
        comps.append(top)
    ws = random_weights(rng, len(comps))
    return Mixture(zip(ws, comps)), [union(*cover)]


def random_claim3_stream(rng: random.Random, length: int) -> list[tuple[Measure, SetTerm]]:
    """Limit-point measures, each concentrated on a set whose block traces
    shrink to a fixed finite index set."""
    out = []
    for _ in range(length):
        support = rng.sample(range(12), rng.randint(1, 3))
        lam = Diagonal(FinSuppMeasure(support, random_weights(rng, len(support), 12)))
        kind = rng.choice(["harmonic", "geometric"])
        shrink = Shrink(rng.randint(1, 2), kind, Fraction(rng.randint(1, 3)), rng.randint(1, 2), rng.randint(1, 3))
        tail = FamOp("union", (Const(Finite(support)), shrink))
        start = rng.randrange(3)
        head = {n: Finite(rng.sample(range(8), 2)) for n in range(start)}
        out.append((lam, Stack(tail, start, head)))
    return out


def random_claim4_stream(rng: random.Random, length: int, blocks: int = 8) -> list[FinSuppMeasure]:
    """Finitely supported measures on block points; roughly half avoid block 0."""
    out = []
    for k in range(length):
        lo = 1 if k % 2 == 0 else 0
        pts = sorted({block_point(rng.randrange(lo, blocks), rng.randrange(40)) for _ in range(rng.randint(1, 4))})
        out.append(FinSuppMeasure(pts, random_weights(rng, len(pts), 8 * len(pts))))
    return out
