"""
Random-effects margins and within-study count distributions.

A margin maps a uniform u to a latent sensitivity or specificity: the inverse logit of a
normal quantile for NormalLogit(pi, sigma), the beta quantile for Beta(pi, gamma) with
gamma = 1/(alpha + beta + 1).
"""
import numpy as np
from scipy.special import betainc, betaincinv, expit, gammaln, logit, ndtr, ndtri, xlog1py, xlogy
from scipy.stats import beta as beta_distribution
from scipy.stats import betabinom, norm

from dtameta.constant.meta_pipeline import MARGIN_DEGENERATE_GAMMA
from dtameta.entity.model_entity import MarginKind, MarginSpec
from dtameta.exception import DomainError


def beta_shape(pi: float, gamma: float) -> tuple:
    """(alpha, beta) of Beta(pi, gamma)."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"beta dispersion gamma must lie in (0, 1), got {gamma}")
    if not 0.0 < pi < 1.0:
        raise DomainError(f"beta mean pi must lie in (0, 1), got {pi}")
    total = 1.0 / gamma - 1.0
    return pi * total, (1.0 - pi) * total


def beta_mean_dispersion(alpha: float, beta: float) -> tuple:
    if alpha <= 0.0 or beta <= 0.0:
        raise DomainError(f"beta shapes must be positive, got alpha={alpha}, beta={beta}")
    return alpha / (alpha + beta), 1.0 / (alpha + beta + 1.0)


def is_degenerate_beta(gamma: float) -> bool:
    """Zero-dispersion limit: the beta margin is effectively a point mass at pi."""
    return gamma < MARGIN_DEGENERATE_GAMMA


def _open_unit(u, name: str = "u") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError(f"{name} must lie in (0, 1)")
    return u


def latent_probability(u, margin: MarginSpec):
    """Quantile of the random-effects margin at u, increasing in u."""
    u_ = _open_unit(u)
    if margin.kind is MarginKind.NORMAL_LOGIT:
        result = expit(logit(margin.pi) + margin.scale * ndtri(u_))
    else:
        alpha, beta = beta_shape(margin.pi, margin.scale)
        result = betaincinv(alpha, beta, u_)
    return float(result) if np.ndim(u) == 0 else result


def margin_cdf(x, margin: MarginSpec):
    """P(X <= x) for the latent probability X; x in [0, 1]."""
    x_ = np.asarray(x, dtype=float)
    if np.any(~((x_ >= 0.0) & (x_ <= 1.0))):
        raise DomainError("latent probability must lie in [0, 1]")
    if margin.kind is MarginKind.NORMAL_LOGIT:
        with np.errstate(divide="ignore"):
            result = ndtr((logit(x_) - logit(margin.pi)) / margin.scale)
    else:
        alpha, beta = beta_shape(margin.pi, margin.scale)
        result = betainc(alpha, beta, x_)
    return float(result) if np.ndim(x) == 0 else result


def margin_density(x, margin: MarginSpec):
    """Density of the latent probability on (0, 1)."""
    x_ = _open_unit(x, "x")
    if margin.kind is MarginKind.NORMAL_LOGIT:
        z = (logit(x_) - logit(margin.pi)) / margin.scale
        result = norm.pdf(z) / (margin.scale * x_ * (1.0 - x_))
    else:
        alpha, beta = beta_shape(margin.pi, margin.scale)
        result = beta_distribution.pdf(x_, alpha, beta)
    return float(result) if np.ndim(x) == 0 else result


def _check_counts(y, n) -> tuple:
    y = np.asarray(y)
    n = np.asarray(n)
    if np.any(y < 0) or np.any(y > n):
        raise DomainError("count y must satisfy 0 <= y <= n")
    return y, n


def binomial_logpmf(y, n, p):
    """log C(n, y) p^y (1-p)^(n-y) with 0 log 0 = 0; broadcasts over y, n, p."""
    y, n = _check_counts(y, n)
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("binomial probability must lie in [0, 1]")
    result = (gammaln(n + 1.0) - gammaln(y + 1.0) - gammaln(n - y + 1.0)
              + xlogy(y, p) + xlog1py(n - y, -p))
    return float(result) if np.ndim(result) == 0 else result


def betabinomial_logpmf(y, n, pi: float, gamma: float):
    y, n = _check_counts(y, n)
    alpha, beta = beta_shape(pi, gamma)
    result = betabinom.logpmf(y, n, alpha, beta)
    return float(result) if np.ndim(result) == 0 else result


def betabinomial_cdf(y, n, pi: float, gamma: float):
    y, n = _check_counts(y, n)
    alpha, beta = beta_shape(pi, gamma)
    result = np.clip(betabinom.cdf(y, n, alpha, beta), 0.0, 1.0)
    # cdf(n) is exactly one
    result = np.where(y == n, 1.0, result)
    return float(result) if np.ndim(result) == 0 else result
