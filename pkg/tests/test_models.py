"""Observation models: divergences, validation, distribution contracts."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from seqquant.errors import NonFiniteDivergenceError, UnsupportedFamilyError
from seqquant.models import (
    FiniteAlphabet,
    Gaussian,
    HypothesisSet,
    Scenario,
    raw_kl,
    validate_scenario,
)


def gaussian_triple():
    return HypothesisSet((Gaussian(0.0, 1.0), Gaussian(-1.0, 1.0), Gaussian(1.0, 1.0)))


def triple_scenario(loss=None, prior=None, cost=1e-3):
    h = gaussian_triple()
    if loss is None:
        loss = 1.0 - np.eye(3)
    if prior is None:
        prior = np.full(3, 1.0 / 3.0)
    return Scenario(h, loss, prior, cost)


class TestRawKl:
    def test_same_state_is_zero(self):
        h = HypothesisSet((Gaussian(0.0, 1.0), Gaussian(0.0, 1.0)))
        assert raw_kl(h, 0, 1) == 0.0

    def test_unit_mean_shift_closed_form(self):
        h = HypothesisSet((Gaussian(0.0, 1.0), Gaussian(1.0, 1.0)))
        assert raw_kl(h, 0, 1) == pytest.approx(0.5, abs=1e-15)

    def test_matches_quadrature_for_gaussians(self):
        h = HypothesisSet((Gaussian(0.3, 1.2), Gaussian(-0.7, 0.8)))

        def integrand(x):
            p = h.densities[0]
            q = h.densities[1]
            return p.pdf(x) * (p.logpdf(x) - q.logpdf(x))

        numeric, _ = quad(integrand, -15, 15, limit=200)
        assert raw_kl(h, 0, 1) == pytest.approx(numeric, abs=1e-6)

    def test_finite_alphabet_direct_sum(self):
        f0 = FiniteAlphabet((0.0, 1.0), (0.5, 0.5))
        f1 = FiniteAlphabet((0.0, 1.0), (0.9, 0.1))
        h = HypothesisSet((f0, f1))
        expected = 0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1)
        assert raw_kl(h, 0, 1) == pytest.approx(expected, rel=1e-12)

    def test_support_mismatch_diverges(self):
        f0 = FiniteAlphabet((0.0, 1.0), (0.5, 0.5))
        f1 = FiniteAlphabet((0.0, 1.0), (1.0, 0.0))
        h = HypothesisSet((f0, f1))
        with pytest.raises(NonFiniteDivergenceError):
            raw_kl(h, 0, 1)

    def test_nonnegative_and_zero_on_diagonal(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            masses = rng.dirichlet(np.ones(4), size=2)
            h = HypothesisSet(tuple(
                FiniteAlphabet((0.0, 1.0, 2.0, 3.0), tuple(row)) for row in masses))
            assert raw_kl(h, 0, 0) == 0.0
            assert raw_kl(h, 0, 1) >= 0.0
            assert raw_kl(h, 1, 0) >= 0.0


class TestDensities:
    def test_quantile_inverts_cdf_gaussian(self):
        d = Gaussian(0.7, 1.3)
        xs = np.linspace(d.mean - 5 * d.stdev, d.mean + 5 * d.stdev, 1000)
        back = d.quantile(d.cdf(xs))
        assert np.max(np.abs(back - xs)) < 1e-9

    def test_quantile_inverts_cdf_finite(self):
        d = FiniteAlphabet((0.0, 1.0, 2.5), (0.2, 0.5, 0.3))
        for x in d.points:
            assert d.quantile(float(d.cdf(x))) == x

    def test_cdf_limits(self):
        d = Gaussian(0.0, 2.0)
        assert d.cdf(-1e6) == pytest.approx(0.0, abs=1e-12)
        assert d.cdf(1e6) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_requires_positive_stdev(self):
        with pytest.raises(ValueError):
            Gaussian(0.0, 0.0)

    def test_finite_masses_must_be_simplex(self):
        with pytest.raises(ValueError):
            FiniteAlphabet((0.0, 1.0), (0.7, 0.6))

    def test_sampling_matches_masses(self):
        d = FiniteAlphabet((0.0, 1.0, 2.0), (0.2, 0.3, 0.5))
        rng = np.random.default_rng(11)
        draws = d.sample(rng, size=20000)
        freq = [(draws == p).mean() for p in d.points]
        assert np.allclose(freq, d.masses, atol=0.02)


class TestHypothesisSet:
    def test_needs_two_hypotheses(self):
        with pytest.raises(ValueError):
            HypothesisSet((Gaussian(0.0, 1.0),))

    def test_rejects_mixed_families(self):
        with pytest.raises(UnsupportedFamilyError):
            HypothesisSet((Gaussian(0.0, 1.0), FiniteAlphabet((0.0,), (1.0,))))

    def test_rejects_mismatched_alphabets(self):
        with pytest.raises(UnsupportedFamilyError):
            HypothesisSet((FiniteAlphabet((0.0, 1.0), (0.5, 0.5)),
                           FiniteAlphabet((0.0, 2.0), (0.5, 0.5))))

    def test_default_labels(self):
        h = gaussian_triple()
        assert h.labels == ("H0", "H1", "H2")


class TestValidateScenario:
    def test_clean_scenario_passes(self):
        report = validate_scenario(triple_scenario())
        assert report.ok
        assert all(c.passed for c in report.checks)

    def test_nonzero_loss_diagonal_fails(self):
        loss = 1.0 - np.eye(3)
        loss[0, 0] = 1.0
        report = validate_scenario(triple_scenario(loss=loss))
        assert not report.ok
        assert [c.name for c in report.failures()] == ["loss_diagonal_zero"]

    def test_prior_off_simplex_fails(self):
        report = validate_scenario(triple_scenario(prior=np.array([0.5, 0.5, 0.1])))
        assert not report.ok
        assert [c.name for c in report.failures()] == ["prior_simplex"]

    def test_divergent_pair_reported(self):
        f0 = FiniteAlphabet((0.0, 1.0), (0.5, 0.5))
        f1 = FiniteAlphabet((0.0, 1.0), (1.0, 0.0))
        s = Scenario(HypothesisSet((f0, f1)), 1.0 - np.eye(2), np.array([0.5, 0.5]), 1e-3)
        report = validate_scenario(s)
        assert not report.ok
        assert report.failures()[0].name == "pairwise_divergences_finite"

    def test_regularity_not_applicable_for_atoms(self):
        f0 = FiniteAlphabet((0.0, 1.0), (0.5, 0.5))
        f1 = FiniteAlphabet((0.0, 1.0), (0.2, 0.8))
        s = Scenario(HypothesisSet((f0, f1)), 1.0 - np.eye(2), np.array([0.5, 0.5]), 1e-3)
        report = validate_scenario(s)
        assert report.ok
        flags = {c.name: c.passed for c in report.checks}
        assert flags["quantizer_regularity"] is None

    def test_nonpositive_cost_fails(self):
        report = validate_scenario(triple_scenario(cost=0.0))
        assert not report.ok
        assert [c.name for c in report.failures()] == ["cost_positive"]


class TestScenarioShapes:
    def test_wrong_loss_shape_raises(self):
        with pytest.raises(ValueError):
            Scenario(gaussian_triple(), np.zeros((2, 2)), np.full(3, 1 / 3), 1e-3)

    def test_wrong_prior_length_raises(self):
        with pytest.raises(ValueError):
            Scenario(gaussian_triple(), 1.0 - np.eye(3), np.array([0.5, 0.5]), 1e-3)
