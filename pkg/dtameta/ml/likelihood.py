"""
Log-likelihoods of the bivariate random-effects models.

Every evaluation returns a LogLikResult with one log-contribution per study, in study
order. Double integrals are Gauss-Legendre sums over (u_q1, v_q1q2) nodes reduced with
log-sum-exp, so the binomial terms never underflow for large groups.
"""
import numpy as np
from scipy.special import logsumexp

from dtameta.constant.meta_pipeline import LIKELIHOOD_KHS_CLAMP, SENSITIVITY
from dtameta.entity.artifact_entity import LogLikResult
from dtameta.entity.model_entity import (
    CopulaFamily,
    CopulaSpec,
    MarginKind,
    MarginSpec,
    ModelSpec,
    Variant,
    study_arrays,
)
from dtameta.exception import DomainError, NumericError
from dtameta.logger import logging
from dtameta.ml.copula.families import copula_log_density
from dtameta.ml.margins import (
    betabinomial_cdf,
    betabinomial_logpmf,
    binomial_logpmf,
    latent_probability,
)
from dtameta.ml.quadrature import QuadRule, dependent_nodes

_UNIT_LOW = np.finfo(float).tiny
_UNIT_HIGH = 1.0 - np.finfo(float).epsneg


def _studies(data) -> list:
    studies = list(getattr(data, "studies", data))
    if not studies:
        raise DomainError("likelihood needs at least one study")
    return studies


def _result(per_study: np.ndarray, what: str, clamped: int = 0) -> LogLikResult:
    bad = np.flatnonzero(~np.isfinite(per_study))
    if bad.size:
        raise NumericError(
            f"{what} contribution of study {bad[0] + 1} is {per_study[bad[0]]} "
            f"({bad.size} non-finite studies)")
    return LogLikResult(total=float(np.sum(per_study)), per_study=per_study, clamped=clamped)


def _latent_on_nodes(u: np.ndarray, margin: MarginSpec) -> np.ndarray:
    # nodes produced by conditional inversion may land on 0 or 1 in floating point
    return latent_probability(np.clip(u, _UNIT_LOW, _UNIT_HIGH), margin)


def loglik_copula_mixed(data, model: ModelSpec, rule: QuadRule) -> LogLikResult:
    """log sum_q1 sum_q2 w_q1 w_q2 g(y1; n1, x1(u_q1)) g(y2; n2, x2(v_q1q2)) per study."""
    if model.variant is not Variant.COPULA_MIXED:
        raise DomainError(f"loglik_copula_mixed called with a {model.variant.value} model")
    y1, n1, y2, n2 = study_arrays(_studies(data))

    x1 = _latent_on_nodes(rule.nodes, model.margin1)
    x2 = _latent_on_nodes(dependent_nodes(rule, model.copula), model.margin2)

    log_g1 = binomial_logpmf(y1[:, None], n1[:, None], x1[None, :])
    log_g2 = binomial_logpmf(y2[:, None, None], n2[:, None, None], x2[None, :, :])
    log_w = rule.log_weights
    terms = (log_g1 + log_w[None, :])[:, :, None] + log_g2 + log_w[None, None, :]
    return _result(logsumexp(terms, axis=(1, 2)), model.label)


def loglik_glmm(data, pi1: float, pi2: float, sigma1: float, sigma2: float, rho: float,
                rule: QuadRule) -> LogLikResult:
    """The bivariate GLMM: BVN copula with normal margins on the logit scale."""
    if sigma1 <= 0.0 or sigma2 <= 0.0:
        raise DomainError(f"GLMM standard deviations must be positive, got {sigma1}, {sigma2}")
    model = ModelSpec(
        MarginSpec(MarginKind.NORMAL_LOGIT, pi1, sigma1),
        MarginSpec(MarginKind.NORMAL_LOGIT, pi2, sigma2),
        CopulaSpec(CopulaFamily.BVN, 0, rho),
    )
    return loglik_copula_mixed(data, model, rule)


def loglik_countermonotonic(data, margin1: MarginSpec, margin2: MarginSpec, rule: QuadRule,
                            direction: int = -1) -> LogLikResult:
    """
    Single-integral likelihood with the copula fixed at a Frechet bound.

    direction=-1 pairs u with 1-u (countermonotonic), direction=+1 pairs u with u.
    """
    if direction not in (-1, 1):
        raise DomainError(f"direction must be -1 or +1, got {direction}")
    y1, n1, y2, n2 = study_arrays(_studies(data))
    u = rule.nodes
    x1 = _latent_on_nodes(u, margin1)
    x2 = _latent_on_nodes(1.0 - u if direction < 0 else u, margin2)
    terms = (binomial_logpmf(y1[:, None], n1[:, None], x1[None, :])
             + binomial_logpmf(y2[:, None], n2[:, None], x2[None, :])
             + rule.log_weights[None, :])
    what = "countermonotonic" if direction < 0 else "comonotonic"
    return _result(logsumexp(terms, axis=1), what)


def _clamp(h: np.ndarray) -> tuple:
    clamped = np.clip(h, LIKELIHOOD_KHS_CLAMP, 1.0 - LIKELIHOOD_KHS_CLAMP)
    return clamped, int(np.count_nonzero(clamped != h))


def loglik_khs(data, model: ModelSpec) -> LogLikResult:
    """
    Approximate likelihood: copula density at the beta-binomial CDFs times the
    beta-binomial pmfs.
    """
    if model.margin1.kind is not MarginKind.BETA or model.margin2.kind is not MarginKind.BETA:
        raise DomainError("the KHS likelihood requires beta margins")
    y1, n1, y2, n2 = study_arrays(_studies(data))
    m1, m2 = model.margin1, model.margin2

    h1, clamped1 = _clamp(np.asarray(betabinomial_cdf(y1, n1, m1.pi, m1.scale), dtype=float))
    h2, clamped2 = _clamp(np.asarray(betabinomial_cdf(y2, n2, m2.pi, m2.scale), dtype=float))
    clamped = clamped1 + clamped2
    if clamped:
        logging.debug(f"KHS: {clamped} beta-binomial CDF values clamped to the open unit interval")

    per_study = (copula_log_density(h1, h2, model.copula)
                 + betabinomial_logpmf(y1, n1, m1.pi, m1.scale)
                 + betabinomial_logpmf(y2, n2, m2.pi, m2.scale))
    return _result(np.asarray(per_study, dtype=float), model.label, clamped)


def _sarmanov_psi(y1, n1, y2, n2, pi1, pi2, gamma1, gamma2) -> np.ndarray:
    return ((y1 - n1 * pi1) / (1.0 / gamma1 + n1 - 1.0)) * ((y2 - n2 * pi2) / (1.0 / gamma2 + n2 - 1.0))


def sarmanov_admissible_range(data, pi1: float, pi2: float, gamma1: float, gamma2: float) -> tuple:
    """Open interval of theta keeping every observed bracket 1 + theta*psi_i positive."""
    psi = _sarmanov_psi(*study_arrays(_studies(data)), pi1, pi2, gamma1, gamma2)
    positive, negative = psi[psi > 0.0], psi[psi < 0.0]
    low = float(np.max(-1.0 / positive)) if positive.size else -np.inf
    high = float(np.min(-1.0 / negative)) if negative.size else np.inf
    return low, high


def loglik_sarmanov(data, pi1: float, pi2: float, gamma1: float, gamma2: float,
                    theta: float) -> LogLikResult:
    """Closed-form Sarmanov beta-binomial likelihood."""
    y1, n1, y2, n2 = study_arrays(_studies(data))
    bracket = 1.0 + theta * _sarmanov_psi(y1, n1, y2, n2, pi1, pi2, gamma1, gamma2)
    bad = np.flatnonzero(bracket <= 0.0)
    if bad.size:
        raise DomainError(
            f"Sarmanov theta={theta} is inadmissible: bracket {bracket[bad[0]]:.6g} "
            f"for study {bad[0] + 1}")
    per_study = (betabinomial_logpmf(y1, n1, pi1, gamma1)
                 + betabinomial_logpmf(y2, n2, pi2, gamma2)
                 + np.log(bracket))
    return _result(np.asarray(per_study, dtype=float), "sarmanov")


def loglik(data, model: ModelSpec, rule: QuadRule) -> LogLikResult:
    if model.variant is Variant.KHS:
        return loglik_khs(data, model)
    if model.variant is Variant.SARMANOV:
        m1, m2 = model.margin1, model.margin2
        return loglik_sarmanov(data, m1.pi, m2.pi, m1.scale, m2.scale, model.sarmanov_theta)
    return loglik_copula_mixed(data, model, rule)


def marginal_loglik(data, margin: MarginSpec, component: int = SENSITIVITY,
                    rule: QuadRule = None) -> LogLikResult:
    """
    Univariate mixed-binomial log-likelihood of one component.

    With a rule the integral is the same quadrature sum the bivariate likelihood uses;
    without one, beta margins use the exact beta-binomial pmf.
    """
    y1, n1, y2, n2 = study_arrays(_studies(data))
    y, n = (y1, n1) if component == SENSITIVITY else (y2, n2)
    if rule is None:
        if margin.kind is not MarginKind.BETA:
            raise DomainError("a normal margin has no closed-form marginal likelihood; pass a rule")
        per_study = np.asarray(betabinomial_logpmf(y, n, margin.pi, margin.scale), dtype=float)
    else:
        x = _latent_on_nodes(rule.nodes, margin)
        terms = binomial_logpmf(y[:, None], n[:, None], x[None, :]) + rule.log_weights[None, :]
        per_study = logsumexp(terms, axis=1)
    return _result(per_study, f"marginal component {component}")
