"""One check per headline criterion, each printing a PASS/FAIL line.

Oracles here are deliberately independent of the library's counting code:
dyadic sets are rebuilt as residue masks mod 64 and counted with numpy,
and schedule bounds are recomputed from the measures rather than read back
from certificates.
"""
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from seqmeasure.hierarchy import (
    ReweightStream,
    UniformStream,
    converge_check,
    metric_isomorphism_defects,
    nonatomic_target,
    nonatomic_witness_extract,
    preset_build,
    stream_for,
)
from seqmeasure.measure import (
    LevelMeasure,
    decompose,
    indicator_density,
    restrict_rescale,
    reweight,
)
from seqmeasure.natset import (
    Block,
    Dyadic,
    cesaro_density,
    compl,
    count_error_bound,
    diff,
    exact_density,
    inter,
    prefix,
    union,
)
from seqmeasure.sampling import (
    random_claim3_stream,
    random_claim4_stream,
    random_finsupp,
    random_structured,
    random_term,
)
from seqmeasure.separators import (
    claim3_separator,
    claim4_separator,
    dyadic_oracle,
    separate_finsupp,
    verify,
)

F = Fraction
M1, M2 = LevelMeasure(1), LevelMeasure(2)
pytestmark = pytest.mark.slow


class Criterion:
    def __init__(self, name, budget, report_line):
        self.name, self.budget, self.report = name, budget, report_line
        self.failures: list[str] = []

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def check(self, cond, what):
        if not cond and len(self.failures) < 5:
            self.failures.append(what)
        return cond

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if elapsed > self.budget:
            self.failures.append(f"runtime {elapsed:.1f}s over budget {self.budget}s")
        verdict = "FAIL" if self.failures else "PASS"
        detail = "; ".join(self.failures) if self.failures else self.detail
        self.report(f"{verdict} {self.name}: {detail} [{elapsed:.1f}s / {self.budget}s]")
        if exc_type is None:
            assert not self.failures, self.failures
        return False

    detail = ""


# -- independent dyadic oracle --------------------------------------------------------------

def random_dyadic_expr(rng, depth=2):
    """(term, residue mask mod 64) built side by side."""
    if depth == 0 or rng.random() < 0.35:
        k = rng.randint(1, 6)
        res = rng.sample(range(1 << k), rng.randint(1, 1 << k))
        mask = np.isin(np.arange(64) % (1 << k), res)
        return Dyadic(k, res), mask
    op = rng.randrange(4)
    a, ma = random_dyadic_expr(rng, depth - 1)
    if op == 0:
        return compl(a), ~ma
    b, mb = random_dyadic_expr(rng, depth - 1)
    return [(union(a, b), ma | mb), (inter(a, b), ma & mb), (diff(a, b), ma & ~mb)][op - 1]


def lebesgue_of_mask(mask):
    """Measure of the union of the dyadic intervals [rev(s)/64, (rev(s)+1)/64)."""
    ivs = sorted(int(f"{s:06b}"[::-1], 2) for s in np.nonzero(mask)[0])
    total, run_start, prev = F(0), None, None
    for r in ivs + [None]:
        if run_start is not None and (r is None or r != prev + 1):
            total += F(prev + 1 - run_start, 64)
            run_start = None
        if r is not None and run_start is None:
            run_start = r
        prev = r
    return total


def test_embedding_exactness(report_line):
    N = 1 << 16
    idx = np.arange(N)
    rng = random.Random(101)
    exprs = [(Dyadic(k, [r]), np.isin(np.arange(64) % (1 << k), [r])) for k in range(1, 7) for r in range(1 << k)]
    exprs += [random_dyadic_expr(rng) for _ in range(300)]
    with Criterion("embedding exactness", 10, report_line) as c:
        for t, mask in exprs:
            lam = lebesgue_of_mask(mask)
            d = exact_density(t)
            c.check(d.kind == "exact" and d.value == lam, f"{t}: density {d.value} vs {lam}")
            est = cesaro_density(t, N)
            count = int(mask[idx % 64].sum())
            c.check(est.value == F(count, N), f"{t}: estimate {est.value} vs count {count}")
            c.check(abs(est.value - lam) <= F(64, N), f"{t}: estimate off by {abs(est.value - lam)}")
        c.detail = f"{len(exprs)} dyadic terms (k<=6) exact; estimates within 2^k/N at N=2^16"


def test_level_one_witness(report_line):
    b = preset_build(1)
    G = list(b.generators)[:20]
    horizon = 10_000
    with Criterion("level-1 uniform witness", 30, report_line) as c:
        rep = converge_check(b.stream(), b.measure, G, F(1, 100), horizon, keep_values=False)
        d = rep.distance(horizon)
        c.check(d <= F(16, horizon + 1), f"distance {d} at stage {horizon}")
        c.check(rep.passed, f"verdict fail (settle {rep.settle})")
        c.detail = f"20 generators, distance {d} <= 16/{horizon + 1} at stage {horizon}; settle {rep.settle}"


def test_level_two_tower(report_line):
    b = preset_build(2)
    with Criterion("level-2 tower", 120, report_line) as c:
        defects = metric_isomorphism_defects(b)
        c.check(not defects, f"generators off their dyadic mass: {defects}")
        for m in range(33):
            c.check(b.measure(Block(m)) == 0, f"Block({m}) has positive mass")
        rep = converge_check(b.stream(), b.measure, b.generators, F(1, 50), 1000, keep_values=False)
        c.check(rep.passed, f"diagonal verdict fail (settle {rep.settle})")
        c.detail = f"30 generators exact, blocks 0..32 null, diagonal settles at {rep.settle}"


def test_orthogonality_to_finitely_supported(report_line):
    rng = random.Random(104)
    with Criterion("orthogonality to finitely supported", 10, report_line) as c:
        for i in range(100):
            nu = random_finsupp(rng)
            for target in (M1, M2):
                cert = separate_finsupp(target, nu, F(1, 10))
                c.check(target(cert.witness) == 1, f"target mass {target(cert.witness)}")
                c.check(nu(cert.witness) == 0, f"nu mass {nu(cert.witness)}")
                c.check(verify(cert).ok, f"verify failed for sample {i}")
        c.detail = "100 measures x 2 levels: target(F) = 1, nu(F) = 0 exactly"


def test_claim3_separator(report_line):
    rng = random.Random(105)
    delta = F(1, 10)
    with Criterion("claim3 separator", 60, report_line) as c:
        lengths = []
        for j in range(20):
            stream = random_claim3_stream(rng, rng.randint(1, 16))
            lengths.append(len(stream))
            cert = claim3_separator(M2, stream, delta)
            F1, ns = cert.witness, cert.schedule["n"]
            for n in range(ns[0], ns[-1] + 5):
                i = max(k for k, nk in enumerate(ns) if nk <= n)
                v = M2.block_value(F1, n)
                c.check(v > 1 - F(1, i + 1), f"stream {j}: block {n} value {v} at step {i}")
            for k, (lam, _) in enumerate(stream):
                c.check(lam(F1) < delta, f"stream {j}: lambda_{k}(F1) = {lam(F1)}")
            c.check(verify(cert).ok, f"stream {j}: verify failed")
        c.detail = f"20 streams (lengths {min(lengths)}..{max(lengths)}), all bounds hold, verify 20/20"


def test_claim4_separator(report_line):
    rng = random.Random(106)
    delta = F(1, 10)
    with Criterion("claim4 separator", 60, report_line) as c:
        selected = 0
        for j in range(20):
            stream = random_claim4_stream(rng, rng.randint(4, 16))
            cert = claim4_separator(M2, stream, dyadic_oracle(stream, 1), delta)
            F2, ks, blocks = cert.witness, cert.schedule["k"], cert.schedule["blocks"]
            selected += len(ks)
            c.check(all(a < b for a, b in zip(ks, ks[1:])), f"stream {j}: indices {ks} not increasing")
            for n in blocks:
                v = M2.block_value(F2, n)
                c.check(v > 1 - F(1, n + 1), f"stream {j}: block {n} value {v}")
            for i, k in enumerate(ks):
                for n in blocks[i + 1:]:
                    v = stream[k](inter(F2, Block(n)))
                    c.check(v < delta / 2 ** (n + 1), f"stream {j}: lambda_{k}(A_{n}) = {v}")
                c.check(stream[k](F2) <= delta, f"stream {j}: lambda_{k}(F2) = {stream[k](F2)}")
            c.check(verify(cert).ok, f"stream {j}: verify failed")
        c.detail = f"20 streams, {selected} selected indices, all bounds hold, verify 20/20"


def test_reweighting(report_line):
    rng = random.Random(107)
    b = preset_build(1)
    with Criterion("reweighting", 60, report_line) as c:
        settles = []
        for j in range(10):
            k = rng.randint(1, 4)
            Y = Dyadic(k, rng.sample(range(1 << k), rng.randint(1, (1 << k) - 1)))
            f = indicator_density(M1, Y)
            rw, rr = reweight(M1, f), restrict_rescale(M1, Y)
            for gid, t in b.generators:
                c.check(rw(t) == rr(t), f"Y {j}: {gid} gives {rw(t)} vs {rr(t)}")
            rep = converge_check(ReweightStream(UniformStream(), tuple(f)), rw, b.generators,
                                 F(1, 50), 1000, keep_values=False)
            settles.append(rep.settle)
            c.check(rep.passed, f"Y {j}: stream verdict fail (settle {rep.settle})")
        c.detail = f"10 sets, exact on 30 generators, streams settle by stage {max(s or 0 for s in settles)}"


def test_decomposition_round_trip(report_line):
    rng = random.Random(108)
    b = preset_build(2)
    with Criterion("decomposition round trip", 120, report_line) as c:
        settles = []
        for j in range(50):
            nu, schedule = random_structured(rng)
            dec = decompose(nu)
            total = dec.total()
            for gid, t in b.generators:
                c.check(total(t) == nu(t), f"mixture {j}: parts re-sum wrongly on {gid}")
            stream = nonatomic_witness_extract(stream_for(nu), nu, schedule)
            rep = converge_check(stream, nonatomic_target(nu), b.generators, F(1, 25), 1000,
                                 keep_values=False)
            settles.append(rep.settle)
            c.check(rep.passed, f"mixture {j}: verdict fail (settle {rep.settle})")
        c.detail = f"50 mixtures re-sum exactly; extracted streams settle by stage {max(s or 0 for s in settles)}"


def test_oracle_equivalence(report_line):
    N = 1 << 16
    rng = random.Random(109)
    with Criterion("oracle equivalence", 60, report_line) as c:
        checked = 0
        while checked < 200:
            t = random_term(rng, 3)
            d = exact_density(t)
            if d.kind != "exact":
                continue
            checked += 1
            count = int(prefix(t, N).sum())
            bound = count_error_bound(t, N)
            c.check(bound is not None and abs(count - N * d.value) <= bound,
                    f"{t}: count {count} vs {N * d.value} (bound {bound})")
        c.detail = "200 decidable terms: prefix count within the stated bound at N=2^16, 0 violations"
