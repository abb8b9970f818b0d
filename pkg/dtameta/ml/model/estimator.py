"""
Maximum-likelihood fitting of the random-effects models.

Parameters are optimised by quasi-Newton on an unconstrained scale (logit for pi and
gamma, log for sigma and Clayton theta, Fisher z for the BVN correlation, identity for
Frank). Likelihoods are summed over the end-graded Gauss-Legendre rule. Standard errors come
from a central-difference Hessian on the original scale.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from dtameta.constant.meta_pipeline import (
    ESTIMATION_HESSIAN_FAILURES,
    ESTIMATION_MIN_STUDIES,
    ESTIMATION_RECOMMENDED_STUDIES,
    ESTIMATION_SARMANOV_SHRINK,
    ESTIMATION_SARMANOV_THETA_CAP,
    ESTIMATION_START_TAU_FALLBACK,
    ESTIMATION_START_TAU_LIMIT,
    COPULA_CLAYTON_THETA_MAX,
)
from dtameta.entity.artifact_entity import FitResult, LogLikResult
from dtameta.entity.config_entity import FitOptions
from dtameta.entity.model_entity import CopulaFamily, MarginKind, ModelSpec, Variant, study_arrays
from dtameta.exception import DomainError, DTAMetaException
from dtameta.logger import logging
from dtameta.ml.copula.families import sample_kendall_tau, tau_derivative, tau_to_theta, theta_to_tau
from dtameta.ml.likelihood import loglik, loglik_countermonotonic, sarmanov_admissible_range
from dtameta.ml.quadrature import graded_gauss_legendre

PROBABILITY = "probability"
POSITIVE = "positive"
CORRELATION = "correlation"
REAL = "real"
CLAYTON = "clayton"
SARMANOV = "sarmanov"

_EDGE = 1e-12
# objective value handed to the optimizer where the likelihood cannot be evaluated
_PENALTY = 1e12


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    value: float
    converged: bool
    iterations: int
    gradient_norm: float
    message: str


class ParameterMap:
    """
    Original <-> unconstrained parameter transforms.

    The Sarmanov dependence lives in a data-dependent interval; ``dependence_bounds`` returns
    it for the margin parameters preceding it in the vector.
    """

    def __init__(self, kinds: tuple, dependence_bounds: Optional[Callable] = None):
        self.kinds = tuple(kinds)
        self.dependence_bounds = dependence_bounds

    def _interval(self, values: np.ndarray, index: int) -> tuple:
        return self.dependence_bounds(values[:index])

    def to_free(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        free = np.empty_like(values)
        for i, kind in enumerate(self.kinds):
            x = values[i]
            if kind == PROBABILITY:
                free[i] = logit(np.clip(x, _EDGE, 1.0 - _EDGE))
            elif kind == POSITIVE:
                free[i] = np.log(max(x, _EDGE))
            elif kind == CORRELATION:
                free[i] = np.arctanh(np.clip(x, -1.0 + _EDGE, 1.0 - _EDGE))
            elif kind == CLAYTON:
                free[i] = np.log(max(x, _EDGE))
            elif kind == SARMANOV:
                low, high = self._interval(values, i)
                free[i] = logit(np.clip((x - low) / (high - low), _EDGE, 1.0 - _EDGE))
            else:
                free[i] = x
        return free

    def from_free(self, free) -> np.ndarray:
        free = np.asarray(free, dtype=float)
        values = np.empty_like(free)
        for i, kind in enumerate(self.kinds):
            z = free[i]
            if kind == PROBABILITY:
                values[i] = np.clip(expit(z), _EDGE, 1.0 - _EDGE)
            elif kind == POSITIVE:
                values[i] = np.exp(z)
            elif kind == CORRELATION:
                values[i] = np.tanh(z)
            elif kind == CLAYTON:
                values[i] = min(np.exp(z), COPULA_CLAYTON_THETA_MAX)
            elif kind == SARMANOV:
                low, high = self._interval(values, i)
                values[i] = low + (high - low) * expit(z)
            else:
                values[i] = z
        return values

    def domain(self, values) -> list:
        """(low, high) per parameter on the original scale, used to keep difference steps inside."""
        values = np.asarray(values, dtype=float)
        limits = []
        for i, kind in enumerate(self.kinds):
            if kind == PROBABILITY:
                limits.append((0.0, 1.0))
            elif kind in (POSITIVE, CLAYTON):
                limits.append((0.0, np.inf))
            elif kind == CORRELATION:
                limits.append((-1.0, 1.0))
            elif kind == SARMANOV:
                limits.append(self._interval(values, i))
            else:
                limits.append((-np.inf, np.inf))
        return limits

    def bounds(self, values) -> list:
        """Closed box for L-BFGS-B on the original scale."""
        box = []
        for low, high in self.domain(values):
            low = None if not np.isfinite(low) else low + 1e-6 * max(1.0, abs(low))
            high = None if not np.isfinite(high) else high - 1e-6 * max(1.0, abs(high))
            box.append((low, high))
        return box


def _difference_step(x: float) -> float:
    return np.cbrt(np.finfo(float).eps) * max(1.0, abs(x))


def numerical_gradient(f: Callable, x, steps=None) -> np.ndarray:
    """Central-difference gradient."""
    x = np.asarray(x, dtype=float)
    steps = np.array([_difference_step(v) for v in x]) if steps is None else np.asarray(steps)
    grad = np.empty_like(x)
    for i in range(len(x)):
        forward, backward = x.copy(), x.copy()
        forward[i] += steps[i]
        backward[i] -= steps[i]
        grad[i] = (f(forward) - f(backward)) / (2.0 * steps[i])
    return grad


def _inside_steps(x: np.ndarray, domain: list, base: float) -> np.ndarray:
    steps = np.empty_like(x)
    for i, (value, (low, high)) in enumerate(zip(x, domain)):
        step = base * max(1.0, abs(value))
        room = min(value - low, high - value)
        steps[i] = min(step, 0.5 * room) if room > 0.0 else step
    return steps


def numerical_hessian(f: Callable, x, domain: list = None) -> np.ndarray:
    """Central-difference Hessian; steps are shrunk so every evaluation stays inside ``domain``."""
    x = np.asarray(x, dtype=float)
    domain = domain or [(-np.inf, np.inf)] * len(x)
    h = _inside_steps(x, domain, np.finfo(float).eps ** 0.25)
    n = len(x)
    hessian = np.zeros((n, n))
    f0 = f(x)
    for i in range(n):
        x_plus_i = x.copy()
        x_plus_i[i] += h[i]
        x_minus_i = x.copy()
        x_minus_i[i] -= h[i]
        hessian[i, i] = (f(x_plus_i) - 2.0 * f0 + f(x_minus_i)) / h[i] ** 2
        for j in range(i + 1, n):
            x_pp, x_pm, x_mp, x_mm = x.copy(), x.copy(), x.copy(), x.copy()
            x_pp[[i, j]] += (h[i], h[j])
            x_pm[[i, j]] += (h[i], -h[j])
            x_mp[[i, j]] += (-h[i], h[j])
            x_mm[[i, j]] += (-h[i], -h[j])
            hessian[i, j] = (f(x_pp) - f(x_pm) - f(x_mp) + f(x_mm)) / (4.0 * h[i] * h[j])
            hessian[j, i] = hessian[i, j]
    return hessian


def standard_errors(objective: Callable, x, domain: list = None) -> tuple:
    """
    Standard errors from the observed information at a maximum of ``objective``.

    :return: (se, covariance, ok); se and covariance are None when -H is not positive definite.
    """
    hessian = numerical_hessian(objective, x, domain)
    if not np.all(np.isfinite(hessian)):
        return None, None, False
    information = -0.5 * (hessian + hessian.T)
    try:
        np.linalg.cholesky(information)
    except np.linalg.LinAlgError:
        return None, None, False
    covariance = np.linalg.inv(information)
    return np.sqrt(np.diag(covariance)), covariance, True


def _safe(objective: Callable) -> Callable:
    def evaluate(values):
        try:
            value = float(objective(values))
        except (DTAMetaException, ValueError, ArithmeticError, FloatingPointError):
            return np.nan
        return value if np.isfinite(value) else np.nan
    return evaluate


def maximize(objective: Callable, start, kinds: tuple, options: FitOptions = None,
             dependence_bounds: Optional[Callable] = None) -> OptimizeOutcome:
    """
    Quasi-Newton maximisation of ``objective`` (original-scale vector -> float).

    Evaluation failures at trial points read as a penalty; a failure at the start is raised.
    """
    options = options or FitOptions()
    mapping = ParameterMap(kinds, dependence_bounds)
    start = np.asarray(start, dtype=float)
    start_value = objective(start)
    if not np.isfinite(start_value):
        raise DomainError(f"objective is not finite at the starting values {start.tolist()}")
    evaluate = _safe(objective)

    if options.transformed:
        def negative(free):
            value = evaluate(mapping.from_free(free))
            return _PENALTY if np.isnan(value) else -value

        x0 = mapping.to_free(start)
        result = minimize(negative, x0, jac=lambda z: numerical_gradient(negative, z), method="BFGS",
                          options={"gtol": options.gradient_tolerance, "xrtol": options.step_tolerance,
                                   "maxiter": options.max_iterations})
        free = result.x
        x = mapping.from_free(free)
        gradient = numerical_gradient(negative, free)
    else:
        def negative(values):
            value = evaluate(values)
            return _PENALTY if np.isnan(value) else -value

        result = minimize(negative, start, jac=lambda v: numerical_gradient(negative, v), method="L-BFGS-B",
                          bounds=mapping.bounds(start),
                          options={"gtol": options.gradient_tolerance, "maxiter": options.max_iterations})
        x = result.x
        gradient = numerical_gradient(negative, x)
        # components pinned at a box edge do not count against convergence
        for i, (low, high) in enumerate(mapping.bounds(start)):
            if (low is not None and np.isclose(x[i], low)) or (high is not None and np.isclose(x[i], high)):
                gradient[i] = 0.0

    value = evaluate(x)
    if np.isnan(value) or value < start_value:
        x, value = start, start_value
    gradient_norm = float(np.max(np.abs(gradient))) if np.all(np.isfinite(gradient)) else float("inf")
    converged = bool(result.success) or gradient_norm <= options.accept_gradient
    return OptimizeOutcome(x=np.asarray(x, dtype=float), value=float(value), converged=converged,
                           iterations=int(result.nit), gradient_norm=gradient_norm, message=str(result.message))


def parameter_kinds(template: ModelSpec) -> tuple:
    scale = POSITIVE if template.margin1.kind is MarginKind.NORMAL_LOGIT else PROBABILITY
    if template.variant is Variant.SARMANOV:
        dependence = SARMANOV
    elif template.copula.family is CopulaFamily.BVN:
        dependence = CORRELATION
    elif template.copula.family is CopulaFamily.CLAYTON:
        dependence = CLAYTON
    else:
        dependence = REAL
    return PROBABILITY, PROBABILITY, scale, scale, dependence


def sarmanov_bounds(data) -> Callable:
    """Shrunken admissible Sarmanov interval as a function of (pi1, pi2, gamma1, gamma2)."""
    def bounds(margins):
        pi1, pi2, gamma1, gamma2 = margins[:4]
        low, high = sarmanov_admissible_range(data, pi1, pi2, gamma1, gamma2)
        low = max(ESTIMATION_SARMANOV_SHRINK * low, -ESTIMATION_SARMANOV_THETA_CAP)
        high = min(ESTIMATION_SARMANOV_SHRINK * high, ESTIMATION_SARMANOV_THETA_CAP)
        return low, high
    return bounds


def _empirical_logits(y: np.ndarray, n: np.ndarray) -> np.ndarray:
    return logit((y + 0.5) / (n + 1.0))


def starting_values(data, template: ModelSpec) -> np.ndarray:
    """Pooled proportions, unit sigma or gamma 0.1, theta from the sample Kendall's tau."""
    y1, n1, y2, n2 = study_arrays(getattr(data, "studies", data))
    pi1 = float(np.clip(y1.sum() / n1.sum(), 0.01, 0.99))
    pi2 = float(np.clip(y2.sum() / n2.sum(), 0.01, 0.99))
    scale1, scale2 = template.margin1.scale, template.margin2.scale
    if template.variant is Variant.SARMANOV:
        return np.array([pi1, pi2, scale1, scale2, 0.0])

    copula = template.copula
    with np.errstate(invalid="ignore"):
        tau = sample_kendall_tau(_empirical_logits(y1, n1), _empirical_logits(y2, n2)) if len(y1) > 1 else np.nan
    sign = -1.0 if copula.negative_dependence or copula.family is not CopulaFamily.CLAYTON else 1.0
    if copula.family is CopulaFamily.CLAYTON:
        if not np.isfinite(tau) or tau * sign <= 0.0:
            tau = sign * ESTIMATION_START_TAU_FALLBACK
    elif not np.isfinite(tau):
        tau = sign * ESTIMATION_START_TAU_FALLBACK
    tau = float(np.clip(tau, -ESTIMATION_START_TAU_LIMIT, ESTIMATION_START_TAU_LIMIT))
    try:
        theta = tau_to_theta(copula.family, copula.rotation, tau).theta
    except DomainError:
        # Frank cannot reach the clipped tau inside its theta bracket
        theta = tau_to_theta(copula.family, copula.rotation, sign * ESTIMATION_START_TAU_FALLBACK).theta
    return np.array([pi1, pi2, scale1, scale2, theta])


def _check_study_count(studies: list) -> None:
    if len(studies) < ESTIMATION_MIN_STUDIES:
        raise DomainError(f"fitting needs at least {ESTIMATION_MIN_STUDIES} studies, got {len(studies)}")
    if len(studies) < ESTIMATION_RECOMMENDED_STUDIES:
        logging.warning(f"only {len(studies)} studies: estimates and standard errors are unreliable "
                        f"below {ESTIMATION_RECOMMENDED_STUDIES}")


def fit(data, template: ModelSpec, options: FitOptions = None) -> FitResult:
    """Maximum-likelihood fit of the template's model to the studies."""
    options = options or FitOptions()
    studies = list(getattr(data, "studies", data))
    _check_study_count(studies)
    rule = graded_gauss_legendre(options.nq)
    kinds = parameter_kinds(template)
    bounds = sarmanov_bounds(studies) if template.variant is Variant.SARMANOV else None

    def objective(values):
        return loglik(studies, template.with_parameters(values), rule).total

    start = starting_values(studies, template)
    names = template.parameter_names
    logging.info(f"fitting {template.label} to {len(studies)} studies, start "
                 f"{dict(zip(names, np.round(start, 6).tolist()))}")
    outcome = maximize(objective, start, kinds, options, bounds)

    se_vector, covariance, hessian_ok, hessian_failures = None, None, False, 0
    if options.compute_se and outcome.converged:
        se_vector, covariance, hessian_ok = standard_errors(
            _safe(objective), outcome.x, ParameterMap(kinds, bounds).domain(outcome.x))
        if not hessian_ok:
            hessian_failures += 1
            # restart from the reported optimum and try the information matrix once more
            restart = maximize(objective, outcome.x, kinds, options, bounds)
            if restart.converged and restart.value >= outcome.value:
                outcome = restart
            se_vector, covariance, hessian_ok = standard_errors(
                _safe(objective), outcome.x, ParameterMap(kinds, bounds).domain(outcome.x))
            hessian_failures += 0 if hessian_ok else 1

    model = template.with_parameters(outcome.x)
    ll = loglik(studies, model, rule)
    tau_hat = None if template.variant is Variant.SARMANOV else theta_to_tau(model.copula)

    se = None
    if hessian_ok:
        se = dict(zip(names, se_vector.tolist()))
        if tau_hat is not None:
            se["tau"] = abs(tau_derivative(model.copula)) * se["theta"]
    elif options.compute_se and outcome.converged:
        logging.warning(f"{template.label}: observed information is not positive definite "
                        f"({hessian_failures} attempts), standard errors omitted")

    result = FitResult(
        model=model, estimates=dict(zip(names, outcome.x.tolist())), tau_hat=tau_hat, se=se,
        covariance=covariance, loglik=ll, converged=outcome.converged, boundary=False,
        iterations=outcome.iterations, start=dict(zip(names, start.tolist())),
        gradient_norm=outcome.gradient_norm, message=outcome.message, hessian_ok=hessian_ok,
        n_studies=len(studies), nq=rule.nq,
    )
    logging.info(f"{template.label}: loglik {ll.total:.6g}, tau {tau_hat}, converged {outcome.converged} "
                 f"after {outcome.iterations} iterations, gradient {outcome.gradient_norm:.3g}")

    if options.boundary_refit and template.variant is Variant.COPULA_MIXED and tau_hat is not None:
        near_bound = abs(tau_hat) > options.boundary_tau
        singular_near_bound = (hessian_failures >= ESTIMATION_HESSIAN_FAILURES
                               and abs(tau_hat) > options.hessian_boundary_tau)
        if near_bound or singular_near_bound:
            direction = -1 if tau_hat < 0 else 1
            reason = (f"|tau| {abs(tau_hat):.4g} above {options.boundary_tau}" if near_bound else
                      f"observed information failed {hessian_failures} times at |tau| {abs(tau_hat):.4g}")
            logging.info(f"{template.label}: {reason}, refitting at the "
                         f"{'counter' if direction < 0 else 'co'}monotonic bound")
            result.boundary = True
            result.boundary_fit = fit_countermonotonic(studies, template, options, direction)
    return result


def fit_countermonotonic(data, template: ModelSpec, options: FitOptions = None,
                         direction: int = -1) -> FitResult:
    """
    Fit the margins with the copula fixed at a Frechet bound (direction -1: v = 1-u).

    Kendall's tau is reported as the bound itself and carries no standard error.
    """
    options = options or FitOptions()
    studies = list(getattr(data, "studies", data))
    _check_study_count(studies)
    if template.variant is not Variant.COPULA_MIXED:
        raise DomainError(f"a {template.variant.value} model has no boundary refit")
    rule = graded_gauss_legendre(options.nq)
    kinds = parameter_kinds(template)[:4]
    names = template.parameter_names[:4]

    def margins(values):
        dependence = template.copula.theta
        return template.with_parameters([*values, dependence])

    def objective(values):
        model = margins(values)
        return loglik_countermonotonic(studies, model.margin1, model.margin2, rule, direction).total

    start = starting_values(studies, template)[:4]
    outcome = maximize(objective, start, kinds, options)
    model = margins(outcome.x)
    ll = loglik_countermonotonic(studies, model.margin1, model.margin2, rule, direction)

    se, covariance, hessian_ok = None, None, False
    if options.compute_se and outcome.converged:
        domain = ParameterMap(kinds).domain(outcome.x)
        se_vector, covariance, hessian_ok = standard_errors(_safe(objective), outcome.x, domain)
        if hessian_ok:
            se = dict(zip(names, se_vector.tolist()))

    logging.info(f"{template.label} at the {'counter' if direction < 0 else 'co'}monotonic bound: "
                 f"loglik {ll.total:.6g}, converged {outcome.converged}")
    return FitResult(
        model=model, estimates=dict(zip(names, outcome.x.tolist())), tau_hat=float(direction),
        se=se, covariance=covariance, loglik=ll, converged=outcome.converged, boundary=True,
        iterations=outcome.iterations, start=dict(zip(names, start.tolist())),
        gradient_norm=outcome.gradient_norm, message=outcome.message, hessian_ok=hessian_ok,
        n_studies=len(studies), nq=rule.nq, boundary_direction=direction,
    )


def effective_fit(result: FitResult) -> FitResult:
    """The fit downstream summaries should use: the boundary refit when one was made."""
    return result.boundary_fit if result.boundary_fit is not None else result


def fitted_loglik(result: FitResult) -> LogLikResult:
    return effective_fit(result).loglik
