import json
import random
from fractions import Fraction

import numpy as np
import pytest

from seqmeasure.errors import (
    CertificateInvalidError,
    DecayUnresolvableError,
    ExhaustedStreamError,
    NonNullInputError,
    OracleFailureError,
)
from seqmeasure.measure import Diagonal, FinSuppMeasure, LevelMeasure
from seqmeasure.natset import (
    FULL,
    Block,
    Const,
    Dyadic,
    FamOp,
    Finite,
    Lift,
    Shrink,
    Stack,
    block_point,
    compl,
    diff,
    inter,
    prefix,
    union,
)
from seqmeasure.sampling import random_claim3_stream, random_claim4_stream, random_finsupp
from seqmeasure.separators import (
    Certificate,
    Claim,
    claim3_separator,
    claim4_separator,
    dyadic_oracle,
    null_union,
    separate_finsupp,
    verify,
)

F = Fraction
M1, M2 = LevelMeasure(1), LevelMeasure(2)
DELTA = F(1, 10)
HARMONIC = Shrink(1, "harmonic", F(1), 1, 1)  # level-1 mass 1/(n+1) in block n


def round_trip(c: Certificate) -> Certificate:
    return Certificate.from_json(json.loads(json.dumps(c.to_json())))


def tampered(c: Certificate, i: int = 0) -> Certificate:
    bad = round_trip(c)
    bad.claims[i] = Claim(**{**bad.claims[i].__dict__, "value": bad.claims[i].value + F(1, 7)})
    return bad


class TestFinSupp:
    def test_point_mass(self):
        c = separate_finsupp(M1, FinSuppMeasure.dirac(3), DELTA)
        assert c.witness == compl(Finite([3]))
        assert M1(c.witness) == 1 and FinSuppMeasure.dirac(3)(c.witness) == 0
        assert verify(c).ok

    def test_uniform_prefix(self):
        nu = FinSuppMeasure.uniform(range(10))
        c = separate_finsupp(M1, nu, DELTA)
        assert c.witness == compl(Finite(range(10)))
        assert verify(c).ok

    def test_level_two(self):
        c = separate_finsupp(M2, FinSuppMeasure.dirac(0), DELTA)
        assert c.witness == compl(Finite([0])) and M2(c.witness) == 1

    def test_tampering_is_caught(self):
        c = separate_finsupp(M1, FinSuppMeasure.dirac(3), DELTA)
        res = verify(tampered(c))
        assert not res.ok and res.diagnostic

    def test_soundness(self):
        rng = random.Random(7)
        for i in range(100):
            target = (M1, M2)[i % 2]
            nu = random_finsupp(rng)
            c = separate_finsupp(target, nu, DELTA)
            assert target(c.witness) == 1 and nu(c.witness) == 0
            assert verify(c).ok and verify(round_trip(c)).ok


class TestClaim3:
    lam = Diagonal(FinSuppMeasure.dirac(0))
    V0 = Stack(HARMONIC)

    def test_single_entry(self):
        c = claim3_separator(M2, [(self.lam, self.V0)], DELTA)
        n0 = c.schedule["n"][0]
        assert self.lam(c.witness) < DELTA
        assert verify(c).ok
        # outside the head, F1 ∩ B_n is B_n minus V0, checked on a long prefix
        N = 1 << 16
        tail = compl(union(*[Block(n) for n in range(n0)]))
        got = prefix(inter(c.witness, tail), N)
        want = prefix(diff(tail, self.V0), N)
        assert np.array_equal(got, want)

    def test_empty_stream(self):
        c = claim3_separator(M2, [], DELTA)
        assert c.witness == FULL and verify(c).ok

    def test_duplicates_keep_the_schedule(self):
        one = claim3_separator(M2, [(self.lam, self.V0)], DELTA)
        two = claim3_separator(M2, [(self.lam, self.V0), (self.lam, self.V0)], DELTA)
        assert two.schedule["n"][0] == one.schedule["n"][0]
        assert verify(two).ok

    def test_bad_cover(self):
        with pytest.raises(CertificateInvalidError):
            claim3_separator(M2, [(Diagonal(FinSuppMeasure.dirac(5)), self.V0)], DELTA)

    def test_non_decaying_cover(self):
        with pytest.raises(CertificateInvalidError):
            claim3_separator(M2, [(self.lam, Stack(Const(Dyadic(1, [0]))) | self.V0)], DELTA)

    def test_level_one_target(self):
        with pytest.raises(ValueError):
            claim3_separator(M1, [(self.lam, self.V0)], DELTA)

    def test_soundness(self):
        rng = random.Random(8)
        for _ in range(100):
            stream = random_claim3_stream(rng, rng.randint(1, 3))
            c = claim3_separator(M2, stream, DELTA)
            assert verify(c).ok
            assert all(lam(c.witness) < DELTA for lam, _ in stream)

    def test_shape_tampering_is_caught(self):
        c = claim3_separator(M2, [(self.lam, self.V0)], DELTA)
        bad = round_trip(c)
        bad.witness = Stack(FamOp("union", (c.witness.tail, Const(Finite([0])))), c.witness.start,
                            c.witness.head)
        assert not verify(bad).ok


class TestClaim4:
    def test_atoms_in_later_blocks(self):
        stream = [FinSuppMeasure.dirac(block_point(n, 3)) for n in range(1, 7)]
        c = claim4_separator(M2, stream, dyadic_oracle(stream, 1), DELTA)
        assert c.schedule["k"] == list(range(6))
        assert all(lam(c.witness) == 0 for lam in stream)
        assert verify(c).ok

    def test_first_block_cannot_open(self):
        # A_0 is all of block 0, so an atom there can never be the first index
        stream = [FinSuppMeasure.dirac(block_point(n, 3)) for n in range(6)]
        c = claim4_separator(M2, stream, dyadic_oracle(stream, 1), DELTA)
        assert c.schedule["k"] == [1, 2, 3, 4, 5]

    def test_alternating(self):
        a = FinSuppMeasure.uniform([block_point(1, 2), block_point(2, 5)])
        b = FinSuppMeasure.uniform([block_point(0, 1), block_point(3, 0)])
        stream = [a, b] * 4
        c = claim4_separator(M2, stream, dyadic_oracle(stream, 1), F(1, 4))
        assert verify(c).ok
        assert all(stream[k](c.witness) <= F(1, 4) for k in c.schedule["k"])

    def test_vacuous_delta(self):
        stream = random_claim4_stream(random.Random(3), 6)
        c = claim4_separator(M2, stream, dyadic_oracle(stream, 1), F(1))
        assert verify(c).ok

    def test_exhausted(self):
        stream = [FinSuppMeasure.dirac(0)] * 3
        with pytest.raises(ExhaustedStreamError):
            claim4_separator(M2, stream, dyadic_oracle(stream, 1), DELTA)

    def test_lying_oracle(self):
        stream = [FinSuppMeasure.dirac(block_point(n, 0)) for n in range(1, 4)]
        with pytest.raises(OracleFailureError):
            claim4_separator(M2, stream, lambda n, k, eps, eps2: Block(n), DELTA)

    def test_soundness(self):
        rng = random.Random(9)
        for _ in range(100):
            stream = random_claim4_stream(rng, rng.randint(2, 10))
            c = claim4_separator(M2, stream, dyadic_oracle(stream, 1), DELTA)
            ks = c.schedule["k"]
            assert all(a < b for a, b in zip(ks, ks[1:]))
            assert verify(c).ok


class TestNullUnion:
    def test_points(self):
        c = null_union([Finite([0]), Finite([1])], M1)
        assert M1(c.witness) == 0 and verify(c).ok

    def test_blocks(self):
        c = null_union([Lift(n, FULL) for n in range(6)], M2)
        assert M2(c.witness) == 0 and verify(c).ok

    def test_shrinking_lifts(self):
        terms = [Stack(HARMONIC), Stack(Shrink(1, "geometric", F(1), 1, 0))]
        c = null_union(terms, M2)
        ns = c.schedule["n"]
        for i, A in enumerate(terms):
            trimmed = diff(A, union(*[Block(b) for b in range(ns[i])]))
            assert not (prefix(trimmed, 1 << 14) & ~prefix(c.witness, 1 << 14)).any()
        assert verify(c).ok

    def test_non_null_input(self):
        with pytest.raises(NonNullInputError):
            null_union([Dyadic(1, [0])], M1)

    def test_unresolvable_input(self):
        with pytest.raises(DecayUnresolvableError):
            null_union([Stack(HARMONIC)], M1)


def test_every_certificate_survives_json():
    stream = [FinSuppMeasure.dirac(block_point(n, 3)) for n in range(1, 5)]
    certs = [
        separate_finsupp(M2, FinSuppMeasure.dirac(4), DELTA),
        claim3_separator(M2, [(Diagonal(FinSuppMeasure.dirac(0)), Stack(HARMONIC))], DELTA),
        claim4_separator(M2, stream, dyadic_oracle(stream, 1), DELTA),
        null_union([Finite([2]), Block(3)], M2),
    ]
    for c in certs:
        back = round_trip(c)
        assert back.to_json() == c.to_json()
        assert verify(back).ok
        assert not verify(tampered(c)).ok
