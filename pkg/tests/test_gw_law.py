import math
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coagraph.degree_model import (
    OffspringLaw,
    geometric_offspring,
    offspring_law,
    parse_law,
    parse_offspring,
    truncated_poisson,
)
from coagraph.gw_law import (
    CENSORED,
    compare_to_gw2,
    convolution_power,
    dwass_total_progeny,
    exact_code_law,
    gw2_mass,
    limit_concentration,
    poisson_conditioned_law_check,
    sample_gw2_codes,
    sample_gw2_tree,
    sample_single_ancestor_codes,
    single_ancestor_law_check,
    single_ancestor_mass,
)
from coagraph.stats import tv_null_band
from coagraph.tree_code import InvalidCode, enumerate_codes

DELTA0 = parse_offspring("0:1")
COIN = parse_offspring("0:1/2,1:1/2")
SUBNU = parse_offspring("0:4/7,2:3/7")


@st.composite
def exact_offspring(draw):
    support = draw(st.lists(st.integers(0, 4), min_size=1, max_size=4, unique=True))
    raw = draw(st.lists(st.integers(1, 9), min_size=len(support), max_size=len(support)))
    return OffspringLaw(tuple((i, F(r, sum(raw))) for i, r in zip(support, raw)))


class TestMass:
    def test_examples(self):
        assert gw2_mass((1, 1), DELTA0) == 1
        assert gw2_mass((1, 1), SUBNU) == F(16, 49)
        assert gw2_mass((2, 1, 1), COIN) == F(1, 8)

    def test_unsupported_factor(self):
        assert gw2_mass((2, 1, 1), SUBNU) == 0

    def test_invalid(self):
        with pytest.raises(InvalidCode):
            gw2_mass((1, 1, 2), COIN)

    def test_float_law(self):
        nu = offspring_law(parse_law("1:0.8,3:0.2"))
        assert gw2_mass((1, 1), nu) == pytest.approx(16 / 49, abs=1e-12)

    def test_exact_code_law_skips_zero_mass(self):
        table = exact_code_law(SUBNU, 4)
        assert set(table) == {(1, 1), (1, 3, 1, 1), (3, 1, 1, 1)}
        assert table[(3, 1, 1, 1)] == F(4, 7) ** 3 * F(3, 7)


class TestConvolution:
    def test_delta0(self):
        for k in (1, 3, 7):
            assert list(convolution_power(DELTA0, k).weights) == [1]

    def test_coin(self):
        assert list(convolution_power(COIN, 2).weights) == [F(1, 4), F(1, 2), F(1, 4)]

    def test_subcritical(self):
        d = convolution_power(SUBNU, 2)
        assert [d(i) for i in range(5)] == [F(16, 49), 0, F(24, 49), 0, F(9, 49)]

    def test_shed_mass(self):
        d = convolution_power(SUBNU, 2, cap=2)
        assert d.shed == F(9, 49) and d.total + d.shed == 1

    def test_k_zero(self):
        with pytest.raises(ValueError):
            convolution_power(COIN, 0)

    @settings(max_examples=40)
    @given(exact_offspring(), st.integers(1, 5), st.integers(1, 5))
    def test_associative(self, nu, j, k):
        a = convolution_power(nu, j).weights
        b = convolution_power(nu, k).weights
        both = convolution_power(nu, j + k).weights
        assert list(np.convolve(a, b)) == list(both)

    @settings(max_examples=40)
    @given(exact_offspring(), st.integers(1, 6), st.integers(0, 12))
    def test_truncation_keeps_total(self, nu, k, cap):
        d = convolution_power(nu, k, cap)
        assert d.total + d.shed == 1


class TestDwass:
    def test_delta0(self):
        assert dwass_total_progeny(DELTA0, 2) == 1
        assert all(dwass_total_progeny(DELTA0, k) == 0 for k in range(3, 8))

    def test_coin_closed_form(self):
        for k in range(2, 13):
            assert dwass_total_progeny(COIN, k) == F(k - 1, 2**k)

    def test_subcritical_k4(self):
        assert dwass_total_progeny(SUBNU, 4) == F(1, 2) * F(768, 2401)

    def test_k_below_two(self):
        with pytest.raises(ValueError):
            dwass_total_progeny(COIN, 1)

    @pytest.mark.parametrize("nu", [COIN, SUBNU, DELTA0, parse_offspring("0:1/3,1:1/3,3:1/3")])
    def test_sum_over_codes(self, nu):
        for k in range(2, 8):
            total = sum((gw2_mass(c, nu) for c in enumerate_codes(k)), F(0))
            assert total == dwass_total_progeny(nu, k)

    @settings(max_examples=30)
    @given(exact_offspring(), st.integers(2, 6))
    def test_sum_over_codes_property(self, nu, k):
        assert sum((gw2_mass(c, nu) for c in enumerate_codes(k)), F(0)) == dwass_total_progeny(nu, k)

    @pytest.mark.parametrize("text", ["0:0.5714285714285714,2:0.4285714285714286", "0:0.5,1:0.5", "0:0.6,1:0.2,3:0.2"])
    def test_normalisation(self, text):
        nu = parse_offspring(text)
        assert float(nu.mean) < 1
        total = 0.0
        for k in range(2, 4000):
            total += float(dwass_total_progeny(nu, k))
            if total >= 1 - 1e-6:
                break
        assert total >= 1 - 1e-6


class TestLimitConcentration:
    def test_examples(self):
        assert limit_concentration(parse_law("1:1"), 2) == F(1, 2)
        mu = parse_law("1:4/5,3:1/5")
        assert limit_concentration(mu, 2) == F(7, 5) * F(16, 49) / 2
        assert float(limit_concentration(mu, 2)) == pytest.approx(0.228571, abs=1e-6)
        assert limit_concentration(mu, 3) == 0
        assert limit_concentration(mu, 4) == F(7, 5) / 12 * F(768, 2401)

    def test_float(self):
        mu = parse_law("1:0.8,3:0.2")
        assert limit_concentration(mu, 4) == pytest.approx(0.0373178, abs=1e-7)


class TestSampler:
    def test_delta0(self):
        assert set(sample_gw2_codes(DELTA0, 500, seed=1)) == {(1, 1)}
        assert sample_gw2_tree(DELTA0, seed=9) == (1, 1)

    def test_delta1_censored(self):
        nu = parse_offspring("1:1")
        assert sample_gw2_tree(nu, seed=0, size_cap=50) is CENSORED
        assert set(sample_gw2_codes(nu, 3, seed=0, size_cap=50)) == {CENSORED}

    def test_bad_cap(self):
        with pytest.raises(ValueError):
            sample_gw2_tree(COIN, size_cap=1)

    def test_seeded(self):
        assert sample_gw2_codes(SUBNU, 300, seed=4) == sample_gw2_codes(SUBNU, 300, seed=4)

    @settings(max_examples=25, deadline=None)
    @given(exact_offspring(), st.integers(0, 2**32))
    def test_outputs_are_codes(self, nu, seed):
        from coagraph.tree_code import is_valid_code

        out = sample_gw2_codes(nu, 200, seed=seed, size_cap=200)
        support = {i + 1 for i, p in nu.weights}
        for c in out:
            assert c is CENSORED or (is_valid_code(c) and set(c) <= support)

    def test_matches_exact_law(self):
        codes = sample_gw2_codes(SUBNU, 40_000, seed=12)
        rep = compare_to_gw2(codes, SUBNU, 5, seed=12)
        assert rep.passed, (rep.tv, rep.band)

    def test_chunk_boundaries(self):
        # many short trees cross the internal chunk boundary; every output must still be a code
        codes = sample_gw2_codes(DELTA0, 70_000, seed=0)
        assert Counter(codes) == {(1, 1): 70_000}


class TestSingleAncestor:
    def test_mass_examples(self):
        assert single_ancestor_mass((1, 1), COIN) == F(1, 2) * F(1, 2) / F(1, 2)
        p = 0.5
        nu = truncated_poisson(p)
        expected = p * math.exp(-2 * p) / (1 - math.exp(-p))
        assert float(single_ancestor_mass((1, 1), nu)) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("q", [F(1, 5), F(2, 5), F(1, 2)])
    def test_geometric_identity_is_exact(self, q):
        nu = OffspringLaw(tuple((j, (1 - q) * q**j) for j in range(12)) + ((12, q**12),))
        # truncation only touches the last atom; compare codes that avoid it
        for k in range(2, 7):
            for code in enumerate_codes(k):
                if max(code) <= 11:
                    assert single_ancestor_mass(code, nu) == gw2_mass(code, nu)

    def test_poisson_identity_fails(self):
        nu = truncated_poisson(0.5)
        assert abs(float(single_ancestor_mass((1, 1), nu)) - float(gw2_mass((1, 1), nu))) > 0.09

    def test_sampler_matches_conditioned_law(self):
        nu = truncated_poisson(0.5)
        codes = sample_single_ancestor_codes(nu, 40_000, seed=3)
        exact = {c: single_ancestor_mass(c, nu) for c in exact_code_law(nu, 5)}
        counts = Counter(codes)
        keys = sorted(exact, key=lambda c: (len(c), c))
        tv = 0.5 * sum(abs(counts[c] / len(codes) - exact[c]) for c in keys)
        assert tv <= tv_null_band([exact[c] for c in keys], len(codes), two_sample=False, seed=3)

    def test_small_p_limit(self):
        # both laws collapse onto (1,1) as p -> 0, so their restricted TV vanishes
        tvs = []
        for p in (0.1, 0.01, 0.001):
            nu = truncated_poisson(p)
            keys = list(exact_code_law(nu, 6))
            tvs.append(0.5 * sum(abs(float(single_ancestor_mass(c, nu) - gw2_mass(c, nu))) for c in keys))
        assert tvs[0] > tvs[1] > tvs[2] and tvs[2] < 2e-3

    def test_poisson_check_runs(self):
        rep = poisson_conditioned_law_check(0.05, 5_000, seed=1, report_cap=4)
        assert rep.samples == 5_000 and rep.tv < 0.05

    def test_geometric_positive_control(self):
        rep = single_ancestor_law_check(geometric_offspring(0.4), 40_000, seed=8, report_cap=5)
        assert rep.passed, (rep.tv, rep.band)

    def test_bad_p(self):
        with pytest.raises(ValueError):
            poisson_conditioned_law_check(1.5, 10)
