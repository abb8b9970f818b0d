from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from dtameta.constant.meta_pipeline import QUADRATURE_MAX_NQ, QUADRATURE_MIN_NQ
from dtameta.entity.model_entity import CopulaSpec
from dtameta.exception import DomainError
from dtameta.ml.copula.families import inv_cond_cdf


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on (0, 1); weights sum to one."""
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def nq(self) -> int:
        return len(self.nodes)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


@lru_cache(maxsize=None, typed=True)
def gauss_legendre(nq: int) -> QuadRule:
    """
    Gauss-Legendre nodes and weights mapped from (-1, 1) to (0, 1).

    The rule is cached and read-only, so the same nodes are reused across every
    likelihood evaluation of an optimisation.
    """
    if isinstance(nq, bool) or int(nq) != nq or not QUADRATURE_MIN_NQ <= nq <= QUADRATURE_MAX_NQ:
        raise DomainError(
            f"number of quadrature points must be an integer in "
            f"[{QUADRATURE_MIN_NQ}, {QUADRATURE_MAX_NQ}], got {nq}")
    x, w = leggauss(int(nq))
    nodes = (x + 1.0) / 2.0
    weights = w / 2.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights)


def dependent_nodes(rule: QuadRule, spec: CopulaSpec) -> np.ndarray:
    """(nq, nq) grid v[q1, q2] = C^{-1}(u_q2 | u_q1), paired with u_q1 along the first axis."""
    return inv_cond_cdf(rule.nodes[None, :], rule.nodes[:, None], spec)


@lru_cache(maxsize=None, typed=True)
def graded_gauss_legendre(nq: int) -> QuadRule:
    """
    Gauss-Legendre rule in t after the substitution u = t^2 (3 - 2t).

    The Jacobian 6t(1-t) vanishes at both ends, which flattens the power and logit-normal
    tails of the random-effects integrands at u = 0 and 1; the likelihood double sums use
    this rule. Weights are renormalised, a no-op from nq = 2 where the quadratic Jacobian
    is integrated exactly.
    """
    base = gauss_legendre(nq)
    t = base.nodes
    nodes = t * t * (3.0 - 2.0 * t)
    weights = base.weights * 6.0 * t * (1.0 - t)
    weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights)
