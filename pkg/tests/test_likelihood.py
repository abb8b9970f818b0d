import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import expit, logit
from scipy.stats import betabinom, binom, multivariate_normal, norm

from dtameta.constant.meta_pipeline import SENSITIVITY, SPECIFICITY
from dtameta.entity.model_entity import (
    CopulaFamily,
    CopulaSpec,
    MarginKind,
    MarginSpec,
    ModelSpec,
    StudyRecord,
    Variant,
)
from dtameta.exception import DomainError
from dtameta.ml.copula.families import copula_density
from dtameta.ml.likelihood import (
    loglik,
    loglik_copula_mixed,
    loglik_countermonotonic,
    loglik_glmm,
    loglik_khs,
    loglik_sarmanov,
    marginal_loglik,
    sarmanov_admissible_range,
)
from dtameta.ml.margins import betabinomial_logpmf, binomial_logpmf, latent_probability
from dtameta.ml.quadrature import gauss_legendre, graded_gauss_legendre

ONE_STUDY = [StudyRecord(y1=3, n1=10, y2=8, n2=10)]
BETA1 = MarginSpec(MarginKind.BETA, 0.6, 0.1)
BETA2 = MarginSpec(MarginKind.BETA, 0.8, 0.1)


class TestCopulaMixed:

    def test_per_study_terms(self, studies, beta_clayton270, rule):
        result = loglik_copula_mixed(studies, beta_clayton270, rule)
        assert result.per_study.shape == (len(studies),)
        assert result.total == pytest.approx(result.per_study.sum(), rel=1e-15)
        assert np.all(np.isfinite(result.per_study))

    def test_permuting_studies_permutes_terms(self, studies, beta_clayton270, rule):
        order = np.random.default_rng(3).permutation(len(studies))
        forward = loglik_copula_mixed(studies, beta_clayton270, rule)
        shuffled = loglik_copula_mixed([studies[i] for i in order], beta_clayton270, rule)
        np.testing.assert_array_equal(shuffled.per_study, forward.per_study[order])

    def test_independence_factorises(self, studies, rule):
        for kind, scale in ((MarginKind.BETA, 0.15), (MarginKind.NORMAL_LOGIT, 1.3)):
            m1, m2 = MarginSpec(kind, 0.75, scale), MarginSpec(kind, 0.85, scale)
            for copula in (CopulaSpec(CopulaFamily.BVN, 0, 0.0), CopulaSpec(CopulaFamily.FRANK, 0, 0.0),
                           CopulaSpec(CopulaFamily.CLAYTON, 90, 0.0)):
                joint = loglik_copula_mixed(studies, ModelSpec(m1, m2, copula), rule)
                separate = (marginal_loglik(studies, m1, SENSITIVITY, rule).per_study
                            + marginal_loglik(studies, m2, SPECIFICITY, rule).per_study)
                np.testing.assert_allclose(joint.per_study, separate, atol=1e-8)

    def test_beta_independence_approaches_betabinomial(self):
        model = ModelSpec(BETA1, BETA2, CopulaSpec(CopulaFamily.BVN, 0, 0.0))
        expected = betabinomial_logpmf(3, 10, 0.6, 0.1) + betabinomial_logpmf(8, 10, 0.8, 0.1)
        assert loglik_copula_mixed(ONE_STUDY, model, gauss_legendre(100)).total == pytest.approx(expected, abs=1e-4)

    def test_degenerate_random_effects(self):
        model = ModelSpec(MarginSpec(MarginKind.NORMAL_LOGIT, 0.6, 1e-6), MarginSpec(MarginKind.NORMAL_LOGIT, 0.8, 1e-6),
                          CopulaSpec(CopulaFamily.CLAYTON, 270, 2.0))
        expected = binomial_logpmf(3, 10, 0.6) + binomial_logpmf(8, 10, 0.8)
        assert loglik_copula_mixed(ONE_STUDY, model, gauss_legendre(15)).total == pytest.approx(expected, abs=1e-4)

    def test_clayton270_matches_brute_force_integral(self):
        copula = CopulaSpec(CopulaFamily.CLAYTON, 270, 2.0)
        model = ModelSpec(BETA1, BETA2, copula)
        grid = (np.arange(1000) + 0.5) / 1000
        g1 = binom.pmf(3, 10, latent_probability(grid, BETA1))
        g2 = binom.pmf(8, 10, latent_probability(grid, BETA2))
        density = copula_density(grid[:, None], grid[None, :], copula)
        expected = np.log(np.sum(g1[:, None] * g2[None, :] * density) / grid.size ** 2)
        assert loglik_copula_mixed(ONE_STUDY, model, gauss_legendre(15)).total == pytest.approx(expected, abs=1e-3)

    def test_quadrature_converges(self, beta_clayton270, normal_bvn):
        small = ONE_STUDY + [StudyRecord(y1=5, n1=8, y2=12, n2=15), StudyRecord(y1=9, n1=12, y2=4, n2=6)]
        frank = ModelSpec(BETA1, BETA2, CopulaSpec(CopulaFamily.FRANK, 0, -5.0))
        for model in (beta_clayton270, normal_bvn, frank):
            coarse = loglik_copula_mixed(small, model, graded_gauss_legendre(15)).per_study
            fine = loglik_copula_mixed(small, model, graded_gauss_legendre(30)).per_study
            np.testing.assert_allclose(coarse, fine, atol=1e-4)

    def test_graded_rule_beats_plain_rule_on_small_studies(self, beta_clayton270):
        small = [StudyRecord(y1=5, n1=8, y2=12, n2=15), StudyRecord(y1=9, n1=12, y2=4, n2=6)]
        reference = loglik_copula_mixed(small, beta_clayton270, gauss_legendre(200)).per_study
        plain = loglik_copula_mixed(small, beta_clayton270, gauss_legendre(15)).per_study
        graded = loglik_copula_mixed(small, beta_clayton270, graded_gauss_legendre(15)).per_study
        assert np.max(np.abs(graded - reference)) < np.max(np.abs(plain - reference))

    def test_large_groups_stay_finite(self, normal_bvn, rule):
        result = loglik_copula_mixed([StudyRecord(y1=900, n1=1000, y2=1500, n2=2000)], normal_bvn, rule)
        assert np.isfinite(result.total)

    def test_rejects_other_variants(self, studies, rule):
        khs = ModelSpec(BETA1, BETA2, CopulaSpec(CopulaFamily.FRANK, 0, 2.0), Variant.KHS)
        with pytest.raises(DomainError):
            loglik_copula_mixed(studies, khs, rule)
        with pytest.raises(DomainError):
            loglik_copula_mixed([], ModelSpec(BETA1, BETA2, CopulaSpec(CopulaFamily.FRANK, 0, 2.0)), rule)


class TestGlmm:

    def test_is_bvn_copula_mixed(self, studies, rule):
        model = ModelSpec(MarginSpec(MarginKind.NORMAL_LOGIT, 0.7, 1.2), MarginSpec(MarginKind.NORMAL_LOGIT, 0.9, 0.8),
                          CopulaSpec(CopulaFamily.BVN, 0, -0.4))
        glmm = loglik_glmm(studies, 0.7, 0.9, 1.2, 0.8, -0.4, rule)
        np.testing.assert_allclose(glmm.per_study, loglik_copula_mixed(studies, model, rule).per_study, atol=1e-10)

    def test_matches_gauss_hermite_integral(self):
        # bivariate normal random effects on the logit scale, integrated directly
        pi1, pi2, sigma1, sigma2, rho = 0.7, 0.85, 1.0, 1.0, -0.5
        nodes, weights = hermegauss(60)
        weights = weights / weights.sum()
        a, b = nodes[:, None], nodes[None, :]
        z2 = rho * a + np.sqrt(1.0 - rho ** 2) * b
        g1 = binom.pmf(7, 10, expit(logit(pi1) + sigma1 * a))
        g2 = binom.pmf(9, 12, expit(logit(pi2) + sigma2 * z2))
        expected = np.log(np.sum(weights[:, None] * weights[None, :] * g1 * g2))
        study = [StudyRecord(y1=7, n1=10, y2=9, n2=12)]
        assert loglik_glmm(study, pi1, pi2, sigma1, sigma2, rho, gauss_legendre(100)).total == pytest.approx(
            expected, abs=1e-4)

    def test_invalid_sigma(self, studies, rule):
        with pytest.raises(DomainError):
            loglik_glmm(studies, 0.7, 0.9, 0.0, 1.0, 0.2, rule)


class TestCountermonotonic:

    @pytest.mark.parametrize("direction,rho", [(-1, -1.0), (1, 1.0)])
    def test_equals_bvn_at_the_bound(self, studies, rule, direction, rho):
        margin1, margin2 = MarginSpec(MarginKind.NORMAL_LOGIT, 0.75, 1.1), MarginSpec(MarginKind.NORMAL_LOGIT, 0.8, 0.9)
        bound = loglik_countermonotonic(studies, margin1, margin2, rule, direction)
        mixed = loglik_copula_mixed(studies, ModelSpec(margin1, margin2, CopulaSpec(CopulaFamily.BVN, 0, rho)), rule)
        np.testing.assert_allclose(bound.per_study, mixed.per_study, atol=1e-10)

    def test_direction(self, studies, rule):
        with pytest.raises(DomainError):
            loglik_countermonotonic(studies, BETA1, BETA2, rule, 0)


class TestKhs:

    def test_formula(self):
        study = [StudyRecord(y1=2, n1=5, y2=4, n2=5)]
        model = ModelSpec(MarginSpec(MarginKind.BETA, 0.6, 0.1), MarginSpec(MarginKind.BETA, 0.8, 0.1),
                          CopulaSpec(CopulaFamily.BVN, 0, -0.5), Variant.KHS)
        # Beta(0.6, 0.1) has shapes (5.4, 3.6); Beta(0.8, 0.1) has (7.2, 1.8)
        h1, h2 = betabinom.cdf(2, 5, 5.4, 3.6), betabinom.cdf(4, 5, 7.2, 1.8)
        z = norm.ppf([h1, h2])
        log_c = (multivariate_normal(cov=[[1.0, -0.5], [-0.5, 1.0]]).logpdf(z) - norm.logpdf(z).sum())
        expected = log_c + betabinom.logpmf(2, 5, 5.4, 3.6) + betabinom.logpmf(4, 5, 7.2, 1.8)
        assert loglik_khs(study, model).total == pytest.approx(expected, abs=1e-10)

    def test_independence_is_copula_mixed_limit(self, studies):
        independent = CopulaSpec(CopulaFamily.FRANK, 0, 0.0)
        khs = loglik_khs(studies, ModelSpec(BETA1, BETA2, independent, Variant.KHS))
        expected = (marginal_loglik(studies, BETA1, SENSITIVITY).per_study
                    + marginal_loglik(studies, BETA2, SPECIFICITY).per_study)
        np.testing.assert_allclose(khs.per_study, expected, atol=1e-10)

    def test_clamps_cdf_at_one(self):
        study = [StudyRecord(y1=5, n1=5, y2=3, n2=5)]
        result = loglik_khs(study, ModelSpec(BETA1, BETA2, CopulaSpec(CopulaFamily.CLAYTON, 0, 1.0), Variant.KHS))
        assert result.clamped == 1
        assert np.isfinite(result.total)

    def test_requires_beta_margins(self, studies):
        normal = MarginSpec(MarginKind.NORMAL_LOGIT, 0.6, 1.0)
        with pytest.raises(DomainError):
            ModelSpec(normal, normal, CopulaSpec(CopulaFamily.BVN, 0, 0.2), Variant.KHS)


class TestSarmanov:

    def test_zero_is_betabinomial_product(self, studies):
        result = loglik_sarmanov(studies, 0.6, 0.8, 0.1, 0.1, 0.0)
        expected = (marginal_loglik(studies, BETA1, SENSITIVITY).per_study
                    + marginal_loglik(studies, BETA2, SPECIFICITY).per_study)
        np.testing.assert_allclose(result.per_study, expected, atol=1e-12)

    def test_probabilities_sum_to_one(self):
        outcomes = [StudyRecord(y1=a, n1=5, y2=b, n2=6) for a in range(6) for b in range(7)]
        low, high = sarmanov_admissible_range(outcomes, 0.6, 0.8, 0.1, 0.2)
        assert low < 0.0 < high
        for theta in (0.5 * low, 0.5 * high):
            result = loglik_sarmanov(outcomes, 0.6, 0.8, 0.1, 0.2, theta)
            assert np.exp(result.per_study).sum() == pytest.approx(1.0, abs=1e-12)

    def test_inadmissible_theta(self, studies):
        low, high = sarmanov_admissible_range(studies, 0.6, 0.8, 0.1, 0.1)
        bad = 2.0 * high if np.isfinite(high) else 2.0 * low
        with pytest.raises(DomainError):
            loglik_sarmanov(studies, 0.6, 0.8, 0.1, 0.1, bad)

    def test_dispatch(self, studies, rule):
        model = ModelSpec(BETA1, BETA2, None, Variant.SARMANOV, sarmanov_theta=0.0)
        assert loglik(studies, model, rule).total == pytest.approx(
            loglik_sarmanov(studies, 0.6, 0.8, 0.1, 0.1, 0.0).total)


class TestMarginalLoglik:

    def test_normal_margin_needs_a_rule(self, studies):
        with pytest.raises(DomainError):
            marginal_loglik(studies, MarginSpec(MarginKind.NORMAL_LOGIT, 0.5, 1.0))

    def test_quadrature_approaches_exact_betabinomial(self, studies):
        margin = MarginSpec(MarginKind.BETA, 0.7, 0.1)
        exact = marginal_loglik(studies, margin, SENSITIVITY)
        numeric = marginal_loglik(studies, margin, SENSITIVITY, gauss_legendre(150))
        np.testing.assert_allclose(numeric.per_study, exact.per_study, atol=1e-4)
