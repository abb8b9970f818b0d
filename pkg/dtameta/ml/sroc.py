"""
Summary ROC output of a fitted model.

Every curve and loop is returned in ROC orientation: column 0 is 1 - specificity,
column 1 is sensitivity.
"""
import numpy as np
from contourpy import LineType, contour_generator
from scipy.special import expit, logit
from scipy.stats import chi2

from dtameta.constant.meta_pipeline import (
    SROC_CONFIDENCE_COVERAGE,
    SROC_CONTOUR_RESOLUTION,
    SROC_ELLIPSE_POINTS,
    SROC_GRID_HIGH,
    SROC_GRID_LOW,
    SROC_GRID_SIZE,
    SROC_LEVELS,
    SROC_QUANTILES,
)
from dtameta.entity.artifact_entity import CurveSet, FitResult, PredictiveRegion, QuantileCurve, SummaryRegion
from dtameta.entity.model_entity import CopulaFamily, MarginKind, Variant
from dtameta.exception import DomainError
from dtameta.logger import logging
from dtameta.ml.copula.families import copula_log_density, inv_cond_cdf, swap_arguments
from dtameta.ml.margins import latent_probability, margin_cdf, margin_density
from dtameta.ml.model.estimator import effective_fit

X1_ON_X2 = "x1-on-x2"
X2_ON_X1 = "x2-on-x1"

_UNIT_LOW = np.finfo(float).tiny
_UNIT_HIGH = 1.0 - np.finfo(float).epsneg


def default_grid() -> np.ndarray:
    return np.linspace(SROC_GRID_LOW, SROC_GRID_HIGH, SROC_GRID_SIZE)


def _open(u) -> np.ndarray:
    return np.clip(np.asarray(u, dtype=float), _UNIT_LOW, _UNIT_HIGH)


def _require_copula(fit: FitResult) -> None:
    if fit.model.variant is Variant.SARMANOV:
        raise DomainError("SROC output needs a copula model; the Sarmanov model has none")


def quantile_curve(fit: FitResult, q: float, grid=None, direction: str = X1_ON_X2) -> QuantileCurve:
    """
    Quantile regression curve of sensitivity on specificity (or the reverse).

    x1-on-x2: u2 = F2(x2), solve C(u1 | u2) = q, x1 = F1^{-1}(u1). A boundary fit pairs
    u1 with 1 - u2 (or u2) for every q, so its curve is deterministic.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if direction not in (X1_ON_X2, X2_ON_X1):
        raise DomainError(f"unknown regression direction {direction!r}")
    fit = effective_fit(fit)
    _require_copula(fit)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    model = fit.model
    conditioning_margin, response_margin = (
        (model.margin2, model.margin1) if direction == X1_ON_X2 else (model.margin1, model.margin2))

    u_given = _open(margin_cdf(grid, conditioning_margin))
    if fit.boundary:
        u_response = 1.0 - u_given if fit.boundary_direction < 0 else u_given
    elif direction == X1_ON_X2:
        u_response = inv_cond_cdf(q, u_given, swap_arguments(model.copula))
    else:
        u_response = inv_cond_cdf(q, u_given, model.copula)
    response = latent_probability(_open(u_response), response_margin)

    if direction == X1_ON_X2:
        points = np.column_stack([1.0 - grid, response])
    else:
        points = np.column_stack([1.0 - response, grid])
    return QuantileCurve(q=float(q), direction=direction, points=points, deterministic=fit.boundary)


def glmm_sroc(fit: FitResult, grid=None) -> np.ndarray:
    """Mean regression line of the bivariate GLMM on the logit scale, mapped back to probabilities."""
    model = fit.model
    if (model.variant is not Variant.COPULA_MIXED or model.copula.family is not CopulaFamily.BVN
            or model.margin1.kind is not MarginKind.NORMAL_LOGIT):
        raise DomainError(f"the GLMM SROC line needs a BVN model with normal margins, got {model.label}")
    sigma1, sigma2 = model.margin1.scale, model.margin2.scale
    if sigma2 <= 0.0:
        raise DomainError("the GLMM SROC line is undefined at sigma2 = 0")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    rho = model.copula.theta
    slope = rho * sigma1 / sigma2
    x1 = expit(logit(model.margin1.pi) - slope * logit(model.margin2.pi) + slope * logit(grid))
    return np.column_stack([1.0 - grid, x1])


def _close(loop: np.ndarray) -> np.ndarray:
    if len(loop) and not np.array_equal(loop[0], loop[-1]):
        loop = np.vstack([loop, loop[:1]])
    return loop


def predictive_contours(fit: FitResult, levels=SROC_LEVELS,
                        resolution: int = SROC_CONTOUR_RESOLUTION) -> PredictiveRegion:
    """
    Regions of highest random-effects density enclosing each requested probability mass.

    The joint density c(F1(x1), F2(x2)) f1(x1) f2(x2) is tabulated at cell centres; each
    threshold is the density level at which the sorted cell masses accumulate to the level.
    """
    fit = effective_fit(fit)
    if fit.boundary:
        raise DomainError("a boundary fit has no joint density; use the quantile curves instead")
    _require_copula(fit)
    levels = tuple(float(p) for p in levels)
    if any(not 0.0 < p < 1.0 for p in levels):
        raise DomainError(f"contour levels must lie in (0, 1), got {levels}")
    model = fit.model

    centres = (np.arange(resolution) + 0.5) / resolution
    fpr, sens = centres, centres
    spec = 1.0 - fpr
    u1 = _open(margin_cdf(sens, model.margin1))
    u2 = _open(margin_cdf(spec, model.margin2))
    with np.errstate(divide="ignore"):
        log_f1 = np.log(margin_density(sens, model.margin1))
        log_f2 = np.log(margin_density(spec, model.margin2))
    log_c = copula_log_density(u1[:, None], u2[None, :], model.copula)
    # rows follow sensitivity, columns follow 1 - specificity
    density = np.exp(log_c + log_f1[:, None] + log_f2[None, :])
    density = np.where(np.isfinite(density), density, 0.0)

    ordered = np.sort(density.ravel())[::-1]
    cumulative = np.cumsum(ordered) / np.sum(ordered)
    generator = contour_generator(x=fpr, y=sens, z=density, line_type=LineType.Separate)

    loops, thresholds, enclosed = {}, {}, {}
    for level in levels:
        index = min(int(np.searchsorted(cumulative, level)), ordered.size - 1)
        thresholds[level] = float(ordered[index])
        enclosed[level] = float(cumulative[index])
        loops[level] = [_close(np.asarray(line)) for line in generator.lines(thresholds[level])]
        logging.debug(f"{model.label}: level {level} threshold {thresholds[level]:.6g}, "
                      f"{len(loops[level])} loop(s)")
    return PredictiveRegion(levels=levels, loops=loops, thresholds=thresholds, enclosed_mass=enclosed,
                            x1_grid=sens, x2_grid=spec, density=density)


def summary_point_region(fit: FitResult, coverage: float = SROC_CONFIDENCE_COVERAGE,
                         points: int = SROC_ELLIPSE_POINTS) -> SummaryRegion:
    """
    Summary operating point (pi1, pi2) and its Wald confidence ellipse.

    The ellipse uses the (pi1, pi2) block of the inverse observed information at the
    chi-square(2) quantile of the coverage, truncated to the unit square.
    """
    if not 0.0 <= coverage < 1.0:
        raise DomainError(f"coverage must lie in [0, 1), got {coverage}")
    fit = effective_fit(fit)
    pi1, pi2 = fit.model.margin1.pi, fit.model.margin2.pi
    if fit.se is None or fit.covariance is None:
        return SummaryRegion(point=(pi1, pi2), loop=None, coverage=coverage, region_available=False)

    block = np.asarray(fit.covariance)[:2, :2]
    radius = np.sqrt(chi2.ppf(coverage, 2))
    angles = np.linspace(0.0, 2.0 * np.pi, points)
    circle = np.vstack([np.cos(angles), np.sin(angles)])
    ellipse = np.array([[pi1], [pi2]]) + radius * (np.linalg.cholesky(block) @ circle)
    ellipse = np.clip(ellipse, 0.0, 1.0)
    loop = np.column_stack([1.0 - ellipse[1], ellipse[0]])
    loop[-1] = loop[0]
    return SummaryRegion(point=(pi1, pi2), loop=loop, coverage=coverage, region_available=True)


def sroc_curves(fit: FitResult, quantiles=SROC_QUANTILES, grid=None, levels=SROC_LEVELS,
                resolution: int = SROC_CONTOUR_RESOLUTION,
                coverage: float = SROC_CONFIDENCE_COVERAGE) -> CurveSet:
    """Quantile curves in both directions, summary region and predictive contours of one fit."""
    effective = effective_fit(fit)
    _require_copula(effective)
    summary = summary_point_region(fit, coverage)
    if effective.boundary:
        curve = quantile_curve(fit, 0.5, grid, X1_ON_X2)
        notice = (f"{fit.label} was refitted at the "
                  f"{'counter' if effective.boundary_direction < 0 else 'co'}monotonic bound: "
                  f"all quantile curves coincide and there is no predictive region")
        logging.info(notice)
        return CurveSet(model_label=fit.label, quantile_curves=[curve], summary=summary, predictive=None,
                        deterministic=True, notice=notice)

    curves = [quantile_curve(fit, q, grid, direction)
              for direction in (X1_ON_X2, X2_ON_X1) for q in quantiles]
    predictive = predictive_contours(fit, levels, resolution)
    return CurveSet(model_label=fit.label, quantile_curves=curves, summary=summary, predictive=predictive)
