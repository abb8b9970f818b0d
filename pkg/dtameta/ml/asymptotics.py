"""
Probability limits of the KHS and maximum-likelihood estimators.

With a common group size n the response takes (n+1)^2 values. Their model probabilities
p(t) come from the quadrature double sum, and each limiting estimator maximises
sum_t p(t) log f(t) over common margin parameters (pi, gamma) and the BVN correlation.
"""

import numpy as np

from dtameta.constant.meta_pipeline import (
    ASYMPTOTICS_KHS_CLAMP,
    ASYMPTOTICS_MAX_N,
    ASYMPTOTICS_UNGATED_MAX_N,
    ESTIMATION_BOUNDARY_TAU,
    ESTIMATION_START_GAMMA,
)
from dtameta.entity.artifact_entity import LimitingEstimate, OutcomeTable
from dtameta.entity.config_entity import AsymptoticsCase, FitOptions
from dtameta.entity.model_entity import CopulaFamily, CopulaSpec, MarginKind, MarginSpec, ModelSpec, Variant
from dtameta.exception import DomainError
from dtameta.logger import logging
from dtameta.ml.copula.families import copula_log_density, theta_to_tau
from dtameta.ml.margins import betabinomial_cdf, betabinomial_logpmf, binomial_logpmf, latent_probability
from dtameta.ml.model.estimator import CORRELATION, PROBABILITY, maximize
from dtameta.ml.quadrature import QuadRule, dependent_nodes

_UNIT_LOW = np.finfo(float).tiny
_UNIT_HIGH = 1.0 - np.finfo(float).epsneg

# the limiting objectives are smooth and O(1); a tighter gradient tolerance than data fits
LIMIT_OPTIONS = FitOptions(gradient_tolerance=1e-9, accept_gradient=1e-6)


def common_model(pi: float, gamma: float, rho: float) -> ModelSpec:
    """BVN copula mixed model with the same beta margin for both components."""
    margin = MarginSpec(MarginKind.BETA, pi, gamma)
    return ModelSpec(margin, margin, CopulaSpec(CopulaFamily.BVN, 0, rho))


def _check_size(n: int, allow_large: bool) -> None:
    if n < 1 or n > ASYMPTOTICS_MAX_N:
        raise DomainError(f"group size must lie in [1, {ASYMPTOTICS_MAX_N}], got {n}")
    if n > ASYMPTOTICS_UNGATED_MAX_N and not allow_large:
        raise DomainError(f"group size {n} exceeds {ASYMPTOTICS_UNGATED_MAX_N}; pass allow_large to run it")


def _probability_matrix(n: int, model: ModelSpec, rule: QuadRule) -> np.ndarray:
    y = np.arange(n + 1)
    x1 = latent_probability(rule.nodes, model.margin1)
    v = np.clip(dependent_nodes(rule, model.copula), _UNIT_LOW, _UNIT_HIGH)
    x2 = latent_probability(v, model.margin2)
    g1 = np.exp(binomial_logpmf(y[:, None], n, x1[None, :]))
    g2 = np.exp(binomial_logpmf(y[:, None, None], n, x2[None, :, :]))
    w = rule.weights
    return np.einsum("aq,bqr,q,r->ab", g1, g2, w, w)


def model_probabilities(n: int, true_model: ModelSpec, rule: QuadRule, allow_large: bool = False) -> OutcomeTable:
    """p(t) for every (y1, y2) in {0..n}^2; not renormalised."""
    _check_size(n, allow_large)
    if true_model.variant is not Variant.COPULA_MIXED:
        raise DomainError("outcome probabilities need a copula mixed model")
    probs = _probability_matrix(n, true_model, rule)
    y1, y2 = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    table = OutcomeTable(n=n, y1=y1.ravel(), y2=y2.ravel(), probs=probs.ravel())
    logging.debug(f"outcome table n={n}: total mass {table.total_mass:.12g}")
    return table


def _matrix(table: OutcomeTable) -> np.ndarray:
    return table.probs.reshape(table.n + 1, table.n + 1)


def khs_log_pmf(n: int, pi: float, gamma: float, rho: float,
                clamp: float = ASYMPTOTICS_KHS_CLAMP) -> np.ndarray:
    """
    (n+1, n+1) KHS log-likelihood contributions of every outcome.

    H(n) = 1 always, so the y = n row and column sit on the clamp; the limits move with it
    (a smaller clamp pulls rho towards zero).
    """
    y = np.arange(n + 1)
    h = np.clip(betabinomial_cdf(y, n, pi, gamma), clamp, 1.0 - clamp)
    log_c = copula_log_density(h[:, None], h[None, :], CopulaSpec(CopulaFamily.BVN, 0, rho))
    log_h = betabinomial_logpmf(y, n, pi, gamma)
    return log_c + log_h[:, None] + log_h[None, :]


def _expected(weights: np.ndarray, log_f: np.ndarray) -> float:
    mask = weights > 0.0
    return float(np.sum(weights[mask] * log_f[mask]))


def _starting_values(table: OutcomeTable) -> np.ndarray:
    probs = _matrix(table)
    y = np.arange(table.n + 1)
    mean1 = float(np.sum(probs.sum(axis=1) * y)) / table.n
    mean2 = float(np.sum(probs.sum(axis=0) * y)) / table.n
    return np.array([np.clip((mean1 + mean2) / 2.0, 0.01, 0.99), ESTIMATION_START_GAMMA, 0.0])


def _limit(objective, table: OutcomeTable, start=None) -> LimitingEstimate:
    start = _starting_values(table) if start is None else np.asarray(start, dtype=float)
    outcome = maximize(objective, start, (PROBABILITY, PROBABILITY, CORRELATION), LIMIT_OPTIONS)
    pi, gamma, rho = outcome.x
    return LimitingEstimate(pi=float(pi), gamma=float(gamma), theta=float(rho),
                            tau=theta_to_tau(CopulaSpec(CopulaFamily.BVN, 0, rho)),
                            objective=outcome.value, converged=outcome.converged)


def limiting_khs(table: OutcomeTable, clamp: float = ASYMPTOTICS_KHS_CLAMP) -> LimitingEstimate:
    """Maximiser of sum_t p(t) log[c(H(y1), H(y2)) h(y1) h(y2)]."""
    probs = _matrix(table)

    def objective(values):
        pi, gamma, rho = values
        return _expected(probs, khs_log_pmf(table.n, pi, gamma, rho, clamp))

    estimate = _limit(objective, table)
    logging.info(f"KHS limit at n={table.n}: pi {estimate.pi:.6g}, gamma {estimate.gamma:.6g}, "
                 f"rho {estimate.theta:.6g}")
    return estimate


def limiting_mle(table: OutcomeTable, rule: QuadRule) -> LimitingEstimate:
    """
    Maximiser of sum_t p(t) log P(t; pi, gamma, rho) under the copula mixed model.

    Near the countermonotonic bound the objective with rho fixed at -1 is maximised too,
    and the larger of the two wins.
    """
    probs = _matrix(table)

    def log_model(pi, gamma, rho):
        with np.errstate(divide="ignore"):
            return np.log(_probability_matrix(table.n, common_model(pi, gamma, rho), rule))

    def objective(values):
        pi, gamma, rho = values
        return _expected(probs, log_model(pi, gamma, rho))

    estimate = _limit(objective, table)
    if abs(estimate.tau) > ESTIMATION_BOUNDARY_TAU:
        def fixed(values):
            pi, gamma = values
            return _expected(probs, log_model(pi, gamma, -1.0))

        outcome = maximize(fixed, [estimate.pi, estimate.gamma], (PROBABILITY, PROBABILITY), LIMIT_OPTIONS)
        if outcome.value >= estimate.objective:
            estimate = LimitingEstimate(pi=float(outcome.x[0]), gamma=float(outcome.x[1]), theta=-1.0,
                                        tau=-1.0, objective=outcome.value, converged=outcome.converged,
                                        boundary=True)
    logging.info(f"ML limit at n={table.n}: pi {estimate.pi:.6g}, gamma {estimate.gamma:.6g}, "
                 f"rho {estimate.theta:.6g}")
    return estimate


def limit_table_row(case: AsymptoticsCase, rule: QuadRule, allow_large: bool = False,
                    include_mle: bool = True) -> dict:
    """Both limits for one (rho, pi, gamma, n) configuration, as a report row."""
    table = model_probabilities(case.n, common_model(case.pi, case.gamma, case.rho), rule, allow_large)
    khs = limiting_khs(table)
    row = {
        "rho_true": case.rho, "n": case.n, "rho_khs": khs.theta,
        "pi_true": case.pi, "pi_khs": khs.pi,
        "gamma_true": case.gamma, "gamma_khs": khs.gamma,
    }
    if include_mle:
        mle = limiting_mle(table, rule)
        row.update({"rho_mle": mle.theta, "pi_mle": mle.pi, "gamma_mle": mle.gamma})
    return row
