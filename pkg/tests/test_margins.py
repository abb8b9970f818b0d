import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import beta as beta_distribution
from scipy.stats import binom

from dtameta.entity.model_entity import MarginKind, MarginSpec
from dtameta.exception import DomainError
from dtameta.ml.margins import (
    beta_mean_dispersion,
    beta_shape,
    betabinomial_cdf,
    betabinomial_logpmf,
    binomial_logpmf,
    is_degenerate_beta,
    latent_probability,
    margin_cdf,
    margin_density,
)

MARGINS = [
    MarginSpec(MarginKind.NORMAL_LOGIT, 0.7, 2.0),
    MarginSpec(MarginKind.NORMAL_LOGIT, 0.9, 0.3),
    MarginSpec(MarginKind.BETA, 0.7, 0.2),
    MarginSpec(MarginKind.BETA, 0.9, 0.05),
]


class TestBetaParameterisation:

    def test_shapes(self):
        alpha, beta = beta_shape(0.7, 0.2)
        assert alpha == pytest.approx(2.8)
        assert beta == pytest.approx(1.2)

    def test_mean_dispersion_inverts_shapes(self):
        for pi, gamma in [(0.7, 0.2), (0.05, 0.9), (0.5, 1e-3)]:
            assert beta_mean_dispersion(*beta_shape(pi, gamma)) == pytest.approx((pi, gamma))

    def test_invalid(self):
        with pytest.raises(DomainError):
            beta_shape(0.5, 1.0)
        with pytest.raises(DomainError):
            beta_shape(0.0, 0.5)
        with pytest.raises(DomainError):
            beta_mean_dispersion(-1.0, 2.0)

    def test_degenerate_limit(self):
        assert is_degenerate_beta(1e-10)
        assert not is_degenerate_beta(0.01)


class TestLatentMargins:

    def test_normal_median_is_pi(self):
        assert latent_probability(0.5, MarginSpec(MarginKind.NORMAL_LOGIT, 0.8, 1.5)) == pytest.approx(0.8)

    @pytest.mark.parametrize("margin", MARGINS, ids=lambda m: f"{m.kind.value}-{m.pi}-{m.scale}")
    def test_quantile_inverts_cdf(self, margin):
        u = np.linspace(0.01, 0.99, 99)
        x = latent_probability(u, margin)
        assert np.all(np.diff(x) > 0.0)
        np.testing.assert_allclose(margin_cdf(x, margin), u, atol=1e-10)

    @pytest.mark.parametrize("margin", MARGINS, ids=lambda m: f"{m.kind.value}-{m.pi}-{m.scale}")
    def test_density_integrates_to_one(self, margin):
        total, _ = quad(lambda x: margin_density(x, margin), 0.0, 1.0, limit=200, points=[margin.pi])
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_beta_mean(self):
        margin = MarginSpec(MarginKind.BETA, 0.7, 0.2)
        mean, _ = quad(lambda x: x * margin_density(x, margin), 0.0, 1.0)
        assert mean == pytest.approx(0.7, abs=1e-8)

    def test_beta_density_matches_scipy(self):
        margin = MarginSpec(MarginKind.BETA, 0.9, 0.1)
        assert margin_density(0.8, margin) == pytest.approx(beta_distribution.pdf(0.8, 8.1, 0.9))

    def test_cdf_endpoints(self):
        margin = MarginSpec(MarginKind.NORMAL_LOGIT, 0.6, 1.0)
        assert margin_cdf(0.0, margin) == 0.0
        assert margin_cdf(1.0, margin) == 1.0

    def test_domain(self):
        margin = MarginSpec(MarginKind.BETA, 0.6, 0.3)
        with pytest.raises(DomainError):
            latent_probability(1.0, margin)
        with pytest.raises(DomainError):
            margin_cdf(1.5, margin)
        with pytest.raises(DomainError):
            margin_density(0.0, margin)

    def test_invalid_specs(self):
        with pytest.raises(DomainError):
            MarginSpec(MarginKind.NORMAL_LOGIT, 0.5, 0.0)
        with pytest.raises(DomainError):
            MarginSpec(MarginKind.BETA, 1.0, 0.2)


class TestCountDistributions:

    def test_binomial_matches_scipy(self):
        y = np.arange(11)
        np.testing.assert_allclose(binomial_logpmf(y, 10, 0.3), binom.logpmf(y, 10, 0.3), rtol=1e-12)

    def test_binomial_zero_log_zero(self):
        assert binomial_logpmf(0, 5, 0.0) == 0.0
        assert binomial_logpmf(5, 5, 1.0) == 0.0
        assert binomial_logpmf(2, 5, 0.0) == -np.inf

    def test_binomial_broadcasts(self):
        y = np.array([[1], [4]])
        p = np.array([0.2, 0.5, 0.9])
        assert binomial_logpmf(y, 6, p).shape == (2, 3)

    def test_binomial_large_groups_stay_finite(self):
        assert np.isfinite(binomial_logpmf(1800, 2000, 0.9))

    def test_count_range(self):
        with pytest.raises(DomainError):
            binomial_logpmf(6, 5, 0.5)
        with pytest.raises(DomainError):
            binomial_logpmf(2, 5, 1.2)
        with pytest.raises(DomainError):
            betabinomial_logpmf(-1, 5, 0.5, 0.2)

    def test_betabinomial_sums_to_one(self):
        y = np.arange(21)
        assert np.exp(betabinomial_logpmf(y, 20, 0.7, 0.2)).sum() == pytest.approx(1.0, abs=1e-12)
        assert betabinomial_cdf(20, 20, 0.7, 0.2) == 1.0

    def test_betabinomial_is_binomial_mixture(self):
        margin = MarginSpec(MarginKind.BETA, 0.7, 0.2)
        mixture, _ = quad(lambda x: binom.pmf(6, 10, x) * margin_density(x, margin), 0.0, 1.0)
        assert np.exp(betabinomial_logpmf(6, 10, 0.7, 0.2)) == pytest.approx(mixture, rel=1e-8)

    def test_betabinomial_cdf_is_cumulative(self):
        y = np.arange(16)
        np.testing.assert_allclose(betabinomial_cdf(y, 15, 0.4, 0.3),
                                   np.cumsum(np.exp(betabinomial_logpmf(y, 15, 0.4, 0.3))), atol=1e-12)
