import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqmeasure.errors import (
    NormalizationError,
    PartitionError,
    UndefinedValueError,
    UnstructuredInputError,
    ZeroMassError,
)
from seqmeasure.hierarchy import dyadic_generators
from seqmeasure.measure import (
    EPS_SCHEDULE,
    Diagonal,
    FinSuppMeasure,
    LevelMeasure,
    Mixture,
    Pushed,
    UniformPrefix,
    decompose,
    generator_distance,
    indicator_density,
    measure_from_json,
    mixture,
    restrict_rescale,
    reweight,
)
from seqmeasure.natset import (
    FULL,
    Block,
    Dyadic,
    Finite,
    Lift,
    Shrink,
    Stack,
    compl,
    diff,
    inter,
    lifted_union,
    union,
)
from seqmeasure.sampling import random_finsupp, random_structured, random_term

F = Fraction
M1, M2 = LevelMeasure(1), LevelMeasure(2)
EVENS = Dyadic(1, [0])
seeds = st.integers(0, 2**32)


def sample_measures(rng):
    nu, _ = random_structured(rng)
    return [random_finsupp(rng), M1, M2, Diagonal(random_finsupp(rng, 16, 3)), nu,
            Pushed(rng.randrange(4), M1)]


class TestEvaluation:
    def test_level_one_is_density(self):
        assert M1(Dyadic(2, [0, 1])) == F(1, 2)

    def test_uniform_prefix_on_evens(self):
        assert FinSuppMeasure.uniform(range(10))(EVENS) == F(1, 2)
        assert UniformPrefix(9)(EVENS) == F(1, 2)

    @pytest.mark.parametrize("m", [0, 3, 17])
    def test_finitely_many_blocks_are_null(self, m):
        assert M2(union(*[Block(n) for n in range(m + 1)])) == 0

    def test_finite_lift_unions_vanish_and_shrinking_stacks_are_unknown(self):
        t = union(*[Lift(n, Dyadic(1, [n % 2])) for n in range(4)])
        assert M2(t) == 0
        alternating = Stack(Shrink(1, "harmonic", F(1), 1, 1))
        assert M1(alternating) is None

    def test_finsupp_validation(self):
        with pytest.raises(ValueError):
            FinSuppMeasure([1, 1], [F(1, 2), F(1, 2)])
        with pytest.raises(ValueError):
            FinSuppMeasure([1, 2], [F(1, 2), F(1, 3)])
        with pytest.raises(ValueError):
            FinSuppMeasure([], [])

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_finite_additivity(self, seed):
        rng = random.Random(seed)
        s, t = random_term(rng, 2), random_term(rng, 2)
        a, b = inter(s, t), diff(s, t)
        for m in sample_measures(rng):
            va, vb, vs = m(a), m(b), m(s)
            if None not in (va, vb, vs):
                assert va + vb == vs

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_finsupp_complement_sums_to_one(self, seed):
        rng = random.Random(seed)
        nu, t = random_finsupp(rng), random_term(rng)
        assert nu(t) + nu(compl(t)) == 1

    def test_generator_distance(self):
        G = [t for _, t, _ in dyadic_generators(1)]
        assert generator_distance(M1, M1, G) == 0
        assert generator_distance(FinSuppMeasure.dirac(0), FinSuppMeasure.dirac(1), [EVENS]) == 1
        assert generator_distance(FinSuppMeasure.uniform(range(10)), M1, [EVENS]) == 0
        with pytest.raises(UndefinedValueError):
            generator_distance(M1, M1, [Stack(Shrink(1, "harmonic", F(1), 1, 1))])


class TestRestriction:
    def test_restrict_to_evens(self):
        r = restrict_rescale(M1, EVENS)
        assert r(EVENS) == 1
        assert r(Dyadic(2, [0])) == F(1, 2)

    def test_restrict_finsupp(self):
        r = restrict_rescale(FinSuppMeasure.uniform([3, 5]), Finite([3]))
        assert r == FinSuppMeasure.dirac(3)

    def test_errors(self):
        with pytest.raises(ZeroMassError):
            restrict_rescale(M1, Finite([1, 2]))
        with pytest.raises(UndefinedValueError):
            restrict_rescale(M1, Stack(Shrink(1, "harmonic", F(1), 1, 1)))


class TestReweight:
    def test_move_mass_to_evens(self):
        nu = reweight(M1, [(EVENS, 2), (compl(EVENS), 0)])
        assert nu(EVENS) == 1
        assert nu(Dyadic(2, [0])) == F(1, 2) == restrict_rescale(M1, EVENS)(Dyadic(2, [0]))

    def test_finsupp_reweight_is_finsupp(self):
        nu = reweight(FinSuppMeasure.uniform([0, 1]), [(Finite([0]), 2), (compl(Finite([0])), 0)])
        assert nu == FinSuppMeasure.dirac(0)

    def test_partition_and_normalization_errors(self):
        with pytest.raises(PartitionError):
            reweight(M1, [(EVENS, 1), (Dyadic(2, [0]), 1)])
        with pytest.raises(PartitionError):
            reweight(M1, [(EVENS, 2)])
        with pytest.raises(NormalizationError):
            reweight(M1, [(EVENS, 1), (compl(EVENS), 3)])

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_constant_density_is_identity(self, seed):
        rng = random.Random(seed)
        for m in (M1, M2, random_finsupp(rng)):
            one = reweight(m, [(FULL, 1)])
            for _ in range(10):
                t = random_term(rng)
                assert one(t) == m(t)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_indicator_density_matches_restriction(self, seed):
        rng = random.Random(seed)
        k = rng.randint(1, 4)
        Y = Dyadic(k, rng.sample(range(1 << k), rng.randint(1, 1 << (k - 1))))
        for m in (M1, M2):
            Y_m = Y if m is M1 else lifted_union(Y)
            rw, rr = reweight(m, indicator_density(m, Y_m)), restrict_rescale(m, Y_m)
            for _ in range(10):
                t = random_term(rng)
                assert rw(t) == rr(t)


class TestDecompose:
    def test_atom_plus_density(self):
        nu = mixture((F(3, 10), FinSuppMeasure.dirac(5)), (F(7, 10), M1))
        d = decompose(nu)
        assert d.part0 == Mixture([(F(3, 10), FinSuppMeasure.dirac(5))])
        assert d.part1 == Mixture()
        assert d.part2 == Mixture([(F(7, 10), M1)])

    def test_level_two_measure_is_nonatomic(self):
        d = decompose(M2)
        assert d.part0.total() == 0 and d.part1.total() == 0
        assert d.part2 == Mixture([(1, M2)])
        assert [c["eps"] for c in d.nonatomic] == list(EPS_SCHEDULE)
        assert all(c["max_part"] < c["eps"] for c in d.nonatomic)

    def test_point_mass(self):
        d = decompose(FinSuppMeasure.dirac(0))
        assert d.part0 == Mixture([(1, FinSuppMeasure.dirac(0))])
        assert not d.part1.components and not d.part2.components

    def test_unstructured_input(self):
        with pytest.raises(UnstructuredInputError):
            decompose(Mixture([(F(1, 2), M1), (F(1, 2), LevelMeasure(3))]), level=2)

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_parts_resum(self, seed):
        rng = random.Random(seed)
        nu, _ = random_structured(rng)
        d = decompose(nu)
        assert d.tail_bound == 0
        for _, t, _ in dyadic_generators(2):
            assert d.total()(t) == nu(t)
        for k in range(40):
            assert d.part2(Finite([k])) == 0


class TestJson:
    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_round_trip(self, seed):
        rng = random.Random(seed)
        for m in sample_measures(rng):
            back = measure_from_json(json.loads(json.dumps(m.to_json())))
            assert back == m

    def test_finsupp_format(self):
        m = FinSuppMeasure([3, 5], [F(1, 3), F(2, 3)])
        assert m.to_json() == {"points": [3, 5], "weights": [[1, 3], [2, 3]]}
        assert M2.to_json() == {"level": 2, "tower": "uniform"}
