from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coagraph.degree_model import (
    DegreeLaw,
    NonProbability,
    OffspringLaw,
    ZeroSupport,
    criticality,
    degree_sequence,
    format_law,
    format_offspring,
    from_probabilities,
    geometric_offspring,
    offspring_law,
    parse_law,
    parse_offspring,
    size_biased,
    truncated_poisson,
)

SUB = parse_law("1:4/5,3:1/5")


@st.composite
def laws(draw, exact=True):
    """Random finitely supported degree laws with rational masses."""
    support = draw(st.lists(st.integers(1, 7), min_size=1, max_size=5, unique=True))
    raw = draw(st.lists(st.integers(1, 20), min_size=len(support), max_size=len(support)))
    total = sum(raw)
    if exact:
        return from_probabilities([(i, F(r, total)) for i, r in zip(support, raw)])
    return from_probabilities([(i, r / total) for i, r in zip(support, raw)])


class TestDegreeLaw:
    def test_point_mass(self):
        law = from_probabilities([(1, 1.0)])
        assert law.m == 1 and law(1) == 1.0 and law.support_max == 1

    def test_subcritical_mean(self):
        law = from_probabilities([(1, 0.8), (3, 0.2)])
        assert law.m == pytest.approx(1.4, abs=1e-12)
        assert SUB.m == F(7, 5)

    def test_excess_mass_rejected(self):
        with pytest.raises(NonProbability):
            from_probabilities([(1, 0.5), (2, 0.6)])

    def test_negative_mass_rejected(self):
        with pytest.raises(NonProbability):
            from_probabilities([(1, 1.5), (2, -0.5)])

    @pytest.mark.parametrize("items", [[], [(0, 1.0)], [(1, 0.5), (1, 0.5)], [(1.5, 1.0)]])
    def test_bad_support(self, items):
        with pytest.raises(ZeroSupport):
            from_probabilities(items)

    def test_zero_masses_dropped(self):
        law = from_probabilities({1: 1.0, 5: 0.0})
        assert law.support == (1,) and law.support_max == 1

    def test_mapping_input(self):
        assert from_probabilities({3: 0.2, 1: 0.8}).weights == ((1, 0.8), (3, 0.2))


class TestTransforms:
    def test_size_biased_examples(self):
        assert size_biased(parse_law("1:1")).weights == ((1, 1),)
        assert size_biased(parse_law("2:1")).weights == ((2, 1),)
        assert size_biased(SUB).as_dict() == {1: F(4, 7), 3: F(3, 7)}

    def test_offspring_examples(self):
        assert offspring_law(parse_law("1:1")).is_dirac_one() is False
        assert offspring_law(parse_law("1:1")).weights == ((0, 1),)
        assert offspring_law(parse_law("2:1")).is_dirac_one()
        nu = offspring_law(SUB)
        assert dict(nu.weights) == {0: F(4, 7), 2: F(3, 7)}
        assert nu.mean == F(6, 7)

    def test_criticality_examples(self):
        assert criticality(parse_law("2:1")) == 0
        assert criticality(parse_law("1:1")) == -1
        assert criticality(SUB) == F(-1, 5)
        assert criticality(from_probabilities([(1, 0.8), (3, 0.2)])) == pytest.approx(-0.2, abs=1e-12)

    @given(laws())
    def test_criticality_identity(self, law):
        nu = offspring_law(law)
        assert criticality(law) == law.m * (nu.mean - 1)

    @given(laws(exact=False))
    def test_criticality_identity_float(self, law):
        nu = offspring_law(law)
        assert abs(float(criticality(law)) - float(law.m) * (float(nu.mean) - 1)) < 1e-12

    @given(laws())
    def test_size_biased_is_a_law(self, law):
        mu_star = size_biased(law)
        assert sum(p for _, p in mu_star.weights) == 1
        assert (mu_star == law) == (len(law.weights) == 1)

    @given(laws())
    def test_offspring_mean(self, law):
        nu = offspring_law(law)
        assert nu.mean == sum(i * (i - 1) * p for i, p in law.weights) / law.m

    def test_offspring_pmf_exact(self):
        pmf = offspring_law(SUB).pmf(object)
        assert list(pmf) == [F(4, 7), 0, F(3, 7)]


class TestDegreeSequence:
    def test_quota_subcritical(self):
        seq = degree_sequence(from_probabilities([(1, 0.8), (3, 0.2)]), 10)
        assert sorted(seq.degrees.tolist()) == [1] * 8 + [3] * 2 and seq.S == 14

    def test_parity_fix(self):
        assert degree_sequence(parse_law("1:1"), 3).degrees.tolist() == [1, 1, 2]
        assert degree_sequence(parse_law("1:1"), 4).degrees.tolist() == [1, 1, 1, 1]

    def test_ties_go_to_smaller_degree(self):
        seq = degree_sequence(parse_law("1:1/2,2:1/2"), 3)
        assert sorted(seq.degrees.tolist()) == [1, 1, 2]

    def test_iid_is_seeded(self):
        a = degree_sequence(SUB, 500, "iid", seed=3)
        b = degree_sequence(SUB, 500, "iid", seed=3)
        assert np.array_equal(a.degrees, b.degrees) and a.S % 2 == 0

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            degree_sequence(SUB, 5, "lottery")

    def test_read_only(self):
        seq = degree_sequence(SUB, 5)
        with pytest.raises(ValueError):
            seq.degrees[0] = 4

    @settings(max_examples=60)
    @given(laws(), st.integers(1, 400), st.sampled_from(["quota", "iid"]), st.integers(0, 2**32))
    def test_even_and_positive(self, law, n, mode, seed):
        seq = degree_sequence(law, n, mode, seed)
        assert seq.n == n and seq.S % 2 == 0 and seq.degrees.min() >= 1

    @settings(max_examples=60)
    @given(laws(), st.integers(1, 400))
    def test_quota_close_to_law(self, law, n):
        emp = degree_sequence(law, n).empirical_law()
        keys = set(emp) | set(law.support)
        err = max(abs(emp.get(i, 0) - float(law(i))) for i in keys)
        assert err <= (len(law.weights) + 1) / n


class TestTruncatedLaws:
    def test_poisson_tail(self):
        nu = truncated_poisson(0.5)
        assert sum(p for _, p in nu.weights) == pytest.approx(1, abs=1e-12)
        assert nu(0) == pytest.approx(np.exp(-0.5), abs=1e-11)
        assert nu.mean == pytest.approx(0.5, abs=1e-10)

    def test_geometric(self):
        nu = geometric_offspring(0.4)
        assert nu(2) == pytest.approx(0.6 * 0.16, abs=1e-11)
        assert geometric_offspring(0).weights == ((0, 1.0),)


class TestText:
    def test_round_trip_float(self):
        law = parse_law("1:0.8,3:0.2")
        assert parse_law(format_law(law)) == law

    def test_round_trip_exact(self):
        assert parse_law(format_law(SUB)) == SUB and SUB.is_exact

    def test_offspring_round_trip(self):
        nu = parse_offspring("0:4/7,2:3/7")
        assert parse_offspring(format_offspring(nu)) == nu
        assert isinstance(nu, OffspringLaw)

    @given(laws())
    def test_round_trip_property(self, law):
        assert parse_law(format_law(law)) == law

    @given(laws(exact=False))
    def test_round_trip_float_property(self, law):
        assert parse_law(format_law(law)) == law

    @pytest.mark.parametrize("text", ["1-0.5", "x:1", "1:0.5"])
    def test_bad_text(self, text):
        with pytest.raises(ValueError):
            parse_law(text)

    def test_str(self):
        assert str(SUB) == "1:4/5,3:1/5"
        assert isinstance(SUB, DegreeLaw)
