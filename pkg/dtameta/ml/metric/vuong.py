import numpy as np
from scipy.stats import norm

from dtameta.entity.artifact_entity import LogLikResult, VuongResult
from dtameta.exception import DegenerateComparisonError, DomainError


def vuong_test(ll1: LogLikResult, ll2: LogLikResult) -> VuongResult:
    """
    Vuong's test for non-nested models fitted to the same studies.

    D_i = l2_i - l1_i; the statistic sqrt(N) mean(D)/sd(D) is asymptotically standard
    normal and positive values favour model 2. The p-value is two-sided.
    """
    per1 = np.asarray(ll1.per_study, dtype=float)
    per2 = np.asarray(ll2.per_study, dtype=float)
    if per1.shape != per2.shape:
        raise DomainError(f"models were fitted to different study lists ({per1.size} vs {per2.size} studies)")
    n = per1.size
    if n < 2:
        raise DomainError("Vuong's test needs at least two studies")

    differences = per2 - per1
    dbar = float(np.mean(differences))
    s = float(np.std(differences, ddof=1))
    if s == 0.0:
        raise DegenerateComparisonError("per-study log-likelihood differences are constant, Vuong's s is zero")

    statistic = float(np.sqrt(n) * dbar / s)
    p_value = float(min(1.0, 2.0 * norm.sf(abs(statistic))))
    return VuongResult(statistic=statistic, p_value=p_value, dbar=dbar, s=s, n=n, differences=differences)
