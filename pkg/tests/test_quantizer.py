"""Quantizer regions, induced message laws, and divergence identities."""

import json
import math

import numpy as np
import pytest

from seqquant.errors import DegenerateRegionError
from seqquant.models import FiniteAlphabet, Gaussian, HypothesisSet
from seqquant.quantizer import (
    EMPTY_REGION,
    DeterministicQuantizer,
    RandomizedQuantizer,
    Region,
    canonical_coeffs,
    bernoulli_kl,
    induced_bernoulli,
    info_number,
    kl_pair,
    quantize,
    quantize_many,
    quantizer_from_dict,
    quantizer_to_dict,
    ulq_region,
)


def std_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def triple():
    return HypothesisSet((Gaussian(0.0, 1.0), Gaussian(-1.0, 1.0), Gaussian(1.0, 1.0)))


def half_line_up(t):
    return DeterministicQuantizer(region=Region(((t, math.inf),)))


class TestCanonicalCoeffs:
    def test_scale_is_quotiented(self):
        a = canonical_coeffs([2.0, 0.0, -2.0])
        assert np.allclose(a, [math.sqrt(0.5), 0.0, -math.sqrt(0.5)])

    def test_sign_is_preserved(self):
        a = canonical_coeffs([1.0, 0.0, -1.0])
        b = canonical_coeffs([-1.0, 0.0, 1.0])
        assert np.allclose(a, -b)
        assert not np.allclose(a, b)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            canonical_coeffs([0.0, 0.0, 0.0])


class TestUlqRegion:
    def test_equal_density_crossing(self):
        # f_0 - f_2 > 0 amounts to comparing squared distances to the two
        # means, which flips at their midpoint 0.5.
        region = ulq_region([1.0, 0.0, -1.0], triple())
        assert len(region.intervals) == 1
        lo, hi = region.intervals[0]
        assert lo == -math.inf
        assert hi == pytest.approx(0.5, abs=1e-9)

    def test_symmetric_pair_splits_at_zero(self):
        region = ulq_region([0.0, -1.0, 1.0], triple())
        assert len(region.intervals) == 1
        lo, hi = region.intervals[0]
        assert lo == pytest.approx(0.0, abs=1e-9)
        assert hi == math.inf

    def test_central_bump_is_bounded(self):
        # f_0(x) = 0.3 (f_1 + f_2)(x) reduces, after dividing by the common
        # Gaussian factor, to cosh(x) = exp(1/2) / 0.6.
        region = ulq_region([1.0, -0.3, -0.3], triple())
        assert len(region.intervals) == 1
        lo, hi = region.intervals[0]
        edge = math.acosh(math.exp(0.5) / 0.6)
        assert lo == pytest.approx(-edge, abs=1e-8)
        assert hi == pytest.approx(edge, abs=1e-8)

    def test_everywhere_negative_is_degenerate(self):
        with pytest.raises(DegenerateRegionError):
            ulq_region([-1.0, -0.3, -0.3], triple())

    def test_complement_coefficients_give_complement_region(self):
        r_up = ulq_region([0.0, -1.0, 1.0], triple())
        r_down = ulq_region([0.0, 1.0, -1.0], triple())
        assert r_down.intervals[0][1] == pytest.approx(r_up.intervals[0][0], abs=1e-9)


class TestQuantize:
    def test_interior_point(self):
        q = DeterministicQuantizer(region=Region(((-math.inf, 0.5),)))
        assert quantize(q, 0.0) == 1

    def test_boundary_is_strict(self):
        q = DeterministicQuantizer(region=Region(((-math.inf, 0.5),)))
        assert quantize(q, 0.5) == 0

    def test_exterior_point(self):
        assert quantize(half_line_up(0.0), -2.0) == 0

    def test_mask_quantizer_on_alphabet(self):
        q = DeterministicQuantizer(mask=(0, 1, 1), points=(0.0, 1.0, 2.0))
        assert [quantize(q, x) for x in (0.0, 1.0, 2.0)] == [0, 1, 1]
        with pytest.raises(ValueError):
            quantize(q, 0.5)

    def test_quantize_many_matches_scalar(self):
        q = DeterministicQuantizer(region=Region(((-1.0, 0.25), (1.5, math.inf))))
        xs = np.linspace(-3, 3, 101)
        assert np.array_equal(quantize_many(q, xs), [quantize(q, x) for x in xs])


class TestInducedBernoulli:
    def test_half_line_under_shifted_gaussian(self):
        p = induced_bernoulli(half_line_up(0.0), triple(), 2)
        assert p == pytest.approx(1.0 - std_cdf(-1.0), abs=1e-12)
        assert p == pytest.approx(0.8413, abs=5e-5)

    def test_symmetry_at_the_mean(self):
        assert induced_bernoulli(half_line_up(0.0), triple(), 0) == pytest.approx(0.5)

    def test_full_line_is_certain(self):
        q = DeterministicQuantizer(region=Region(((-math.inf, math.inf),)))
        for m in range(3):
            assert induced_bernoulli(q, triple(), m) == 1.0

    def test_monotone_in_region(self):
        h = triple()
        small = DeterministicQuantizer(region=Region(((0.0, 1.0),)))
        large = DeterministicQuantizer(region=Region(((0.0, 1.0), (2.0, 3.0))))
        for m in range(3):
            assert induced_bernoulli(large, h, m) >= induced_bernoulli(small, h, m)


class TestKlPair:
    def test_threshold_quantizer_reference_value(self):
        p, q = 0.5, 1.0 - std_cdf(1.0)
        expected = p * math.log(p / q) + (1 - p) * math.log((1 - p) / (1 - q))
        got = kl_pair(half_line_up(0.0), triple(), 0, 1)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(0.3137, abs=5e-5)

    def test_identical_induced_laws_give_zero(self):
        h = HypothesisSet((Gaussian(0.0, 1.0), Gaussian(0.0, 1.0)))
        assert kl_pair(half_line_up(0.3), h, 0, 1) == 0.0

    def test_mixture_is_weighted_average(self):
        h = triple()
        qa, qb = half_line_up(-0.4), half_line_up(0.9)
        mix = RandomizedQuantizer((qa, qb), np.array([0.5, 0.5]))
        expected = 0.5 * kl_pair(qa, h, 0, 1) + 0.5 * kl_pair(qb, h, 0, 1)
        assert kl_pair(mix, h, 0, 1) == pytest.approx(expected, rel=1e-15)

    def test_same_state_rejected(self):
        with pytest.raises(ValueError):
            kl_pair(half_line_up(0.0), triple(), 1, 1)

    def test_degenerate_component_saturates(self):
        f0 = FiniteAlphabet((0.0, 1.0), (1.0, 0.0))
        f1 = FiniteAlphabet((0.0, 1.0), (0.0, 1.0))
        h = HypothesisSet((f0, f1))
        q = DeterministicQuantizer(mask=(0, 1), points=(0.0, 1.0))
        assert kl_pair(q, h, 0, 1) == math.inf

    def test_nonnegativity_random_thresholds(self):
        h = triple()
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = half_line_up(rng.uniform(-3, 3))
            m, mp = rng.choice(3, size=2, replace=False)
            assert kl_pair(q, h, int(m), int(mp)) >= 0.0

    def test_complementary_regions_have_equal_divergences(self):
        h = triple()
        up = DeterministicQuantizer(region=ulq_region([0.0, -1.0, 1.0], h))
        down = DeterministicQuantizer(region=ulq_region([0.0, 1.0, -1.0], h))
        for m in range(3):
            for mp in range(3):
                if m != mp:
                    assert kl_pair(up, h, m, mp) == pytest.approx(
                        kl_pair(down, h, m, mp), abs=1e-9)


class TestInfoNumber:
    def test_balanced_threshold(self):
        assert info_number(half_line_up(0.0), triple(), 0) == pytest.approx(0.3137, abs=5e-5)

    def test_paper_threshold_for_outer_state(self):
        assert info_number(half_line_up(0.7941), triple(), 2) == pytest.approx(0.3186, abs=5e-5)

    def test_constant_quantizer_carries_nothing(self):
        q = DeterministicQuantizer(region=EMPTY_REGION)
        for m in range(3):
            assert info_number(q, triple(), m) == 0.0

    def test_info_is_min_over_pairs(self):
        h = triple()
        q = half_line_up(0.3)
        for m in range(3):
            pairs = [kl_pair(q, h, m, l) for l in range(3) if l != m]
            assert info_number(q, h, m) == pytest.approx(min(pairs), rel=1e-15)


class TestBernoulliKl:
    def test_zero_iff_equal(self):
        assert bernoulli_kl(0.3, 0.3) == 0.0
        assert bernoulli_kl(0.3, 0.31) > 0.0

    def test_degenerate_edges(self):
        assert bernoulli_kl(0.5, 0.0) == math.inf
        assert bernoulli_kl(0.5, 1.0) == math.inf
        assert bernoulli_kl(0.0, 0.0) == 0.0
        assert bernoulli_kl(1.0, 1.0) == 0.0


class TestSerialization:
    def test_round_trip_with_infinite_endpoints(self):
        h = triple()
        qa = DeterministicQuantizer(region=ulq_region([1.0, -0.3, -0.3], h),
                                    coeffs=[1.0, -0.3, -0.3])
        qb = half_line_up(0.7941)
        mix = RandomizedQuantizer((qa, qb), np.array([0.25, 0.75]))
        data = json.loads(json.dumps(quantizer_to_dict(mix)))
        assert data["components"][1]["intervals"][0][1] == "inf"
        back = quantizer_from_dict(data)
        assert np.allclose(back.weights, mix.weights)
        for orig, round_tripped in zip(mix.components, back.components):
            assert round_tripped.region.close_to(orig.region, tol=1e-12)

    def test_mask_round_trip(self):
        q = DeterministicQuantizer(mask=(1, 0, 1), points=(0.0, 0.5, 1.0))
        back = quantizer_from_dict(quantizer_to_dict(q))
        assert back.components[0].mask == (1, 0, 1)
        assert back.components[0].points == (0.0, 0.5, 1.0)


class TestRandomizedQuantizer:
    def test_weights_must_be_simplex(self):
        with pytest.raises(ValueError):
            RandomizedQuantizer((half_line_up(0.0), half_line_up(1.0)),
                                np.array([0.6, 0.6]))

    def test_duplicate_components_rejected(self):
        with pytest.raises(ValueError):
            RandomizedQuantizer((half_line_up(0.0), half_line_up(0.0)),
                                np.array([0.5, 0.5]))

    def test_pure_mixture_wraps_deterministic(self):
        mix = RandomizedQuantizer.pure(half_line_up(0.0))
        assert mix.is_deterministic
        assert mix.weights[0] == 1.0


class TestRegion:
    def test_rejects_unsorted_intervals(self):
        with pytest.raises(ValueError):
            Region(((0.0, 2.0), (1.0, 3.0)))

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            Region(((1.0, 1.0),))

    def test_empty_region_contains_nothing(self):
        assert not EMPTY_REGION.contains(0.0)
