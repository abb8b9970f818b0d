"""
Parametric bivariate copula families with rotations.

Each family provides its unrotated kernel (cdf, density, conditional cdf h(v|u) = dC/du and
its inverse in v). Rotations are applied by reflecting arguments:

    C90(u, v)  = v - C(1-u, v)
    C180(u, v) = u + v - 1 + C(1-u, 1-v)
    C270(u, v) = u - C(u, 1-v)

Only Clayton takes a rotation; BVN and Frank already span negative dependence.
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri
from scipy.stats import kendalltau

from dtameta.constant.meta_pipeline import (
    COPULA_CLAYTON_INDEPENDENCE_THRESHOLD,
    COPULA_FRANK_INDEPENDENCE_THRESHOLD,
    COPULA_FRANK_TAU_SERIES_THRESHOLD,
    COPULA_FRANK_THETA_BRACKET,
    COPULA_TAU_ROOT_TOLERANCE,
    MODEL_FIT_COPULAS,
)
from dtameta.entity.model_entity import ROTATIONS, CopulaFamily, CopulaSpec, copula_from_label
from dtameta.exception import DomainError, NumericError
from dtameta.ml.copula.bivariate_normal import bvn_cdf


class _Independence:

    @staticmethod
    def cdf(u, v, theta):
        return u * v

    @staticmethod
    def log_density(u, v, theta):
        return np.zeros(np.broadcast(u, v).shape)

    @staticmethod
    def h(v, u, theta):
        return np.broadcast_to(v, np.broadcast(u, v).shape).astype(float)

    @staticmethod
    def h_inverse(q, u, theta):
        return np.broadcast_to(q, np.broadcast(u, q).shape).astype(float)


class _BivariateNormal:

    @staticmethod
    def cdf(u, v, theta):
        return bvn_cdf(ndtri(u), ndtri(v), theta)

    @staticmethod
    def log_density(u, v, theta):
        if abs(theta) >= 1.0:
            raise DomainError(f"BVN copula density is undefined at theta={theta}")
        x, y = ndtri(u), ndtri(v)
        one_minus = 1.0 - theta * theta
        return -(theta * theta * (x * x + y * y) - 2.0 * theta * x * y) / (2.0 * one_minus) \
            - 0.5 * np.log(one_minus)

    @staticmethod
    def h(v, u, theta):
        x, y = ndtri(u), ndtri(v)
        if abs(theta) >= 1.0:
            # comonotonic / countermonotonic step
            boundary = x if theta > 0 else -x
            return np.where(y >= boundary, 1.0, 0.0)
        return ndtr((y - theta * x) / np.sqrt(1.0 - theta * theta))

    @staticmethod
    def h_inverse(q, u, theta):
        return ndtr(theta * ndtri(u) + np.sqrt(max(1.0 - theta * theta, 0.0)) * ndtri(q))


class _Frank:

    @staticmethod
    def cdf(u, v, theta):
        return -np.log1p(np.expm1(-theta * u) * np.expm1(-theta * v) / np.expm1(-theta)) / theta

    @staticmethod
    def log_density(u, v, theta):
        a, b, c = np.expm1(-theta * u), np.expm1(-theta * v), np.expm1(-theta)
        return np.log(-theta * c) - theta * (u + v) - 2.0 * np.log(np.abs(-c - a * b))

    @staticmethod
    def h(v, u, theta):
        a, b, c = np.expm1(-theta * u), np.expm1(-theta * v), np.expm1(-theta)
        return np.exp(-theta * u) * b / (c + a * b)

    @staticmethod
    def h_inverse(q, u, theta):
        with np.errstate(divide="ignore"):
            denominator = (1.0 / q - 1.0) * np.exp(-theta * u) + 1.0
        return -np.log1p(np.expm1(-theta) / denominator) / theta


class _Clayton:
    """Unrotated Clayton, theta > 0, computed on the log scale."""

    @staticmethod
    def _log_sum(u, v, theta):
        # log(u^-theta + v^-theta - 1)
        a = -theta * np.log(u)
        b = -theta * np.log(v)
        m = np.maximum(a, b)
        return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))

    @classmethod
    def cdf(cls, u, v, theta):
        with np.errstate(divide="ignore"):
            return np.exp(-cls._log_sum(u, v, theta) / theta)

    @classmethod
    def log_density(cls, u, v, theta):
        return (np.log1p(theta) - (theta + 1.0) * (np.log(u) + np.log(v))
                - (1.0 / theta + 2.0) * cls._log_sum(u, v, theta))

    @classmethod
    def h(cls, v, u, theta):
        with np.errstate(divide="ignore"):
            return np.exp(-(theta + 1.0) * np.log(u) - (1.0 / theta + 1.0) * cls._log_sum(u, v, theta))

    @staticmethod
    def h_inverse(q, u, theta):
        x = -theta / (1.0 + theta) * np.log(q)
        with np.errstate(divide="ignore"):
            # log(expm1(x)) without overflow for large x
            log_term = x + np.log(-np.expm1(-x)) - theta * np.log(u)
        return np.exp(-np.logaddexp(log_term, 0.0) / theta)


_KERNELS = {
    CopulaFamily.BVN: _BivariateNormal,
    CopulaFamily.FRANK: _Frank,
    CopulaFamily.CLAYTON: _Clayton,
}


def is_independence(spec: CopulaSpec) -> bool:
    if spec.family is CopulaFamily.BVN:
        return spec.theta == 0.0
    if spec.family is CopulaFamily.FRANK:
        return abs(spec.theta) < COPULA_FRANK_INDEPENDENCE_THRESHOLD
    return spec.theta < COPULA_CLAYTON_INDEPENDENCE_THRESHOLD


def _kernel(spec: CopulaSpec):
    return _Independence if is_independence(spec) else _KERNELS[spec.family]


def _unit_arrays(closed: bool, **arrays) -> list:
    """Broadcast probability arguments, rejecting values outside [0,1] (or (0,1) when not closed)."""
    values = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in arrays.values()))
    for name, value in zip(arrays, values):
        if closed:
            bad = ~((value >= 0.0) & (value <= 1.0))
        else:
            bad = ~((value > 0.0) & (value < 1.0))
        if np.any(bad):
            interval = "[0, 1]" if closed else "(0, 1)"
            raise DomainError(f"{name} must lie in {interval}, got {value[bad].ravel()[:3]}")
    return values


def _finite_or_raise(result: np.ndarray, spec: CopulaSpec, what: str, **inputs) -> np.ndarray:
    if np.all(np.isfinite(result)):
        return result
    bad = ~np.isfinite(result)
    shown = {k: np.broadcast_to(v, result.shape)[bad].ravel()[:3] for k, v in inputs.items()}
    raise NumericError(f"{spec.label} {what} overflowed at theta={spec.theta}: {shown}")


def _scalar_out(result: np.ndarray, *arguments):
    if all(np.ndim(a) == 0 for a in arguments):
        return float(result)
    return result


def copula_cdf(u, v, spec: CopulaSpec):
    """C(u, v) for the rotated family."""
    u_, v_ = _unit_arrays(True, u=u, v=v)
    kernel, theta = _kernel(spec), spec.theta
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.rotation == 0:
            result = kernel.cdf(u_, v_, theta)
        elif spec.rotation == 90:
            result = v_ - kernel.cdf(1.0 - u_, v_, theta)
        elif spec.rotation == 180:
            result = u_ + v_ - 1.0 + kernel.cdf(1.0 - u_, 1.0 - v_, theta)
        else:
            result = u_ - kernel.cdf(u_, 1.0 - v_, theta)
    # Frechet bounds fix the edges exactly
    result = np.where((u_ == 0.0) | (v_ == 0.0), 0.0, result)
    result = np.where(u_ == 1.0, v_, result)
    result = np.where(v_ == 1.0, u_, result)
    result = _finite_or_raise(result, spec, "cdf", u=u_, v=v_)
    return _scalar_out(np.clip(result, 0.0, 1.0), u, v)


def copula_log_density(u, v, spec: CopulaSpec):
    """log c(u, v) on the open unit square."""
    u_, v_ = _unit_arrays(False, u=u, v=v)
    kernel, theta = _kernel(spec), spec.theta
    if spec.rotation == 90:
        u_ = 1.0 - u_
    elif spec.rotation == 180:
        u_, v_ = 1.0 - u_, 1.0 - v_
    elif spec.rotation == 270:
        v_ = 1.0 - v_
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        result = kernel.log_density(u_, v_, theta)
    result = np.where(np.isnan(result), -np.inf, result)
    if np.any(result == np.inf):
        raise NumericError(f"{spec.label} density overflowed at theta={theta}")
    return _scalar_out(result, u, v)


def copula_density(u, v, spec: CopulaSpec):
    result = np.exp(copula_log_density(u, v, spec))
    return _scalar_out(result, u, v)


def cond_cdf(v, u, spec: CopulaSpec):
    """C(v | u) = dC(u, v)/du, the distribution of the second argument given the first."""
    u_, = _unit_arrays(False, u=u)
    v_, = _unit_arrays(True, v=v)
    u_, v_ = np.broadcast_arrays(u_, v_)
    kernel, theta = _kernel(spec), spec.theta
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if spec.rotation == 0:
            result = kernel.h(v_, u_, theta)
        elif spec.rotation == 90:
            result = kernel.h(v_, 1.0 - u_, theta)
        elif spec.rotation == 180:
            result = 1.0 - kernel.h(1.0 - v_, 1.0 - u_, theta)
        else:
            result = 1.0 - kernel.h(1.0 - v_, u_, theta)
    result = np.where(v_ == 0.0, 0.0, result)
    result = np.where(v_ == 1.0, 1.0, result)
    result = _finite_or_raise(result, spec, "conditional cdf", u=u_, v=v_)
    return _scalar_out(np.clip(result, 0.0, 1.0), u, v)


def inv_cond_cdf(q, u, spec: CopulaSpec):
    """v such that C(v | u) = q."""
    u_, q_ = _unit_arrays(False, u=u, q=q)
    kernel, theta = _kernel(spec), spec.theta
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if spec.rotation == 0:
            result = kernel.h_inverse(q_, u_, theta)
        elif spec.rotation == 90:
            result = kernel.h_inverse(q_, 1.0 - u_, theta)
        elif spec.rotation == 180:
            result = 1.0 - kernel.h_inverse(1.0 - q_, 1.0 - u_, theta)
        else:
            result = 1.0 - kernel.h_inverse(1.0 - q_, u_, theta)
    result = _finite_or_raise(result, spec, "inverse conditional cdf", u=u_, q=q_)
    return _scalar_out(np.clip(result, 0.0, 1.0), u, q)


def swap_arguments(spec: CopulaSpec) -> CopulaSpec:
    """Copula of (U2, U1) given that of (U1, U2). Rotations 90 and 270 trade places."""
    if spec.rotation in (90, 270):
        return CopulaSpec(spec.family, 360 - spec.rotation, spec.theta)
    return spec


def _frank_tau(theta: float) -> float:
    if abs(theta) < COPULA_FRANK_TAU_SERIES_THRESHOLD:
        return theta / 9.0
    debye, _ = integrate.quad(lambda t: t / np.expm1(t) if t != 0.0 else 1.0, 0.0, theta)
    return 1.0 - 4.0 / theta + 4.0 * debye / theta ** 2


def theta_to_tau(spec: CopulaSpec) -> float:
    """Kendall's tau implied by the copula parameter."""
    if spec.family is CopulaFamily.BVN:
        return float(2.0 / np.pi * np.arcsin(spec.theta))
    if spec.family is CopulaFamily.FRANK:
        return float(_frank_tau(spec.theta))
    tau = spec.theta / (spec.theta + 2.0)
    return float(-tau if spec.negative_dependence else tau)


def tau_to_theta(family, rotation: int, tau: float) -> CopulaSpec:
    """Copula with the requested Kendall's tau."""
    family = CopulaFamily(family)
    if not np.isfinite(tau) or abs(tau) > 1.0:
        raise DomainError(f"Kendall's tau must lie in [-1, 1], got {tau}")
    if family is CopulaFamily.BVN:
        return CopulaSpec(family, rotation, float(np.sin(np.pi * tau / 2.0)))

    if family is CopulaFamily.FRANK:
        if tau == 0.0:
            return CopulaSpec(family, rotation, 0.0)
        low, high = -COPULA_FRANK_THETA_BRACKET, COPULA_FRANK_THETA_BRACKET
        if not _frank_tau(low) < tau < _frank_tau(high):
            raise DomainError(
                f"Frank tau={tau} is outside the attainable range for |theta| <= {high:g}")
        theta = brentq(lambda t: _frank_tau(t) - tau, low, high, xtol=COPULA_TAU_ROOT_TOLERANCE)
        return CopulaSpec(family, rotation, theta)

    if rotation not in ROTATIONS:
        raise DomainError(f"rotation must be one of {ROTATIONS}, got {rotation}")
    negative = rotation in (90, 270)
    if (negative and tau > 0.0) or (not negative and tau < 0.0):
        raise DomainError(f"clayton{rotation} cannot reach tau={tau}")
    if abs(tau) == 1.0:
        raise DomainError(f"clayton{rotation} reaches tau={tau} only in the limit")
    return CopulaSpec(family, rotation, 2.0 * abs(tau) / (1.0 - abs(tau)))


def tau_derivative(spec: CopulaSpec) -> float:
    """d tau / d theta, used for delta-method standard errors of tau."""
    theta = spec.theta
    if spec.family is CopulaFamily.BVN:
        if abs(theta) >= 1.0:
            raise DomainError(f"tau is not differentiable at BVN theta={theta}")
        return float(2.0 / (np.pi * np.sqrt(1.0 - theta * theta)))
    if spec.family is CopulaFamily.CLAYTON:
        slope = 2.0 / (theta + 2.0) ** 2
        return float(-slope if spec.negative_dependence else slope)
    if abs(theta) < COPULA_FRANK_TAU_SERIES_THRESHOLD:
        return 1.0 / 9.0
    step = 1e-5 * max(1.0, abs(theta))
    return float((_frank_tau(theta + step) - _frank_tau(theta - step)) / (2.0 * step))


@dataclass(frozen=True)
class TailDependence:
    """Limits of the copula mass in the four corners; upper_lower is U1 high with U2 low."""
    lower: float
    upper: float
    upper_lower: float
    lower_upper: float


def tail_dependence(spec: CopulaSpec) -> TailDependence:
    if spec.family is CopulaFamily.BVN:
        return TailDependence(float(spec.theta == 1.0), float(spec.theta == 1.0),
                              float(spec.theta == -1.0), float(spec.theta == -1.0))
    if spec.family is CopulaFamily.FRANK or is_independence(spec):
        return TailDependence(0.0, 0.0, 0.0, 0.0)
    corner = float(2.0 ** (-1.0 / spec.theta))
    return TailDependence(
        lower=corner if spec.rotation == 0 else 0.0,
        upper=corner if spec.rotation == 180 else 0.0,
        upper_lower=corner if spec.rotation == 90 else 0.0,
        lower_upper=corner if spec.rotation == 270 else 0.0,
    )


def lower_tail_dependence(spec: CopulaSpec) -> float:
    return tail_dependence(spec).lower


def upper_tail_dependence(spec: CopulaSpec) -> float:
    return tail_dependence(spec).upper


def copula_catalogue() -> list:
    """The six candidate copulas of a model comparison, at independence."""
    return [copula_from_label(label) for label in MODEL_FIT_COPULAS]


def simulate_copula(size: int, spec: CopulaSpec, rng: np.random.Generator) -> np.ndarray:
    """(size, 2) draws from the copula by conditional inversion."""
    tiny = np.finfo(float).tiny
    u = np.clip(rng.random(size), tiny, 1.0 - 1e-16)
    w = np.clip(rng.random(size), tiny, 1.0 - 1e-16)
    v = inv_cond_cdf(w, u, spec)
    return np.column_stack([u, np.asarray(v, dtype=float)])


def sample_kendall_tau(x, y) -> float:
    return float(kendalltau(x, y)[0])
