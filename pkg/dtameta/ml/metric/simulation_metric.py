from dataclasses import dataclass

import numpy as np


@dataclass
class EstimatorSummary:
    """Monte-Carlo summary of one parameter, every field multiplied by the number of studies."""
    n_bias: float
    n_sd: float
    n_sqrt_vbar: float
    n_rmse: float
    count: int


def summarize_estimates(estimates, variances, truth: float, n_studies: int) -> EstimatorSummary:
    """
    Bias, SD, RMSE and the square root of the average theoretical variance.

    SD uses divisor R so that RMSE^2 = bias^2 + SD^2 holds exactly. Replications without a
    variance are skipped in the average variance only.
    """
    estimates = np.asarray(estimates, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if estimates.size == 0:
        nan = float("nan")
        return EstimatorSummary(nan, nan, nan, nan, 0)
    errors = estimates - truth
    bias = float(np.mean(errors))
    sd = float(np.std(estimates, ddof=0))
    rmse = float(np.sqrt(np.mean(errors ** 2)))
    finite = variances[np.isfinite(variances)]
    vbar = float(np.mean(finite)) if finite.size else float("nan")
    return EstimatorSummary(
        n_bias=n_studies * bias,
        n_sd=n_studies * sd,
        n_sqrt_vbar=n_studies * np.sqrt(vbar),
        n_rmse=n_studies * rmse,
        count=int(estimates.size),
    )
