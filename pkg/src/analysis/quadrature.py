"""Integration against the normal density and the exact marginal likelihood"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate, special

from src.analysis.probability_model import record_log_likelihood
from src.core.exceptions import QuadratureError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset

logger = get_logger(__name__)

DEFAULT_ORDER = 61
ADAPTIVE_HALF_WIDTH = 8.0
ADAPTIVE_TOLERANCE = 1e-12
MAX_MARGINAL_WORK = 1e8


class QuadratureKind(str, Enum):
    GAUSS_HERMITE = 'gauss_hermite'
    ADAPTIVE = 'adaptive'


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Rule for expectations under the standard normal

    Gauss-Hermite rules carry probabilists' nodes and weights normalised to
    sum to one. Adaptive rules carry no nodes and integrate with QUADPACK
    on [-8, 8] in standardized units.
    """
    kind: QuadratureKind
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


@lru_cache(maxsize=16)
def gauss_hermite_rule(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Gauss-Hermite rule of the given order for E[f(Z)], Z ~ N(0, 1)"""
    if order < 1:
        raise QuadratureError(f"Quadrature order must be positive, got {order}")
    nodes, weights = hermegauss(order)
    weights = weights / np.sqrt(2.0 * np.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(QuadratureKind.GAUSS_HERMITE, order, nodes, weights)


def adaptive_rule() -> QuadratureRule:
    empty = np.empty(0)
    empty.setflags(write=False)
    return QuadratureRule(QuadratureKind.ADAPTIVE, 0, empty, empty)


def _evaluate(f: Callable, points: np.ndarray) -> np.ndarray:
    values = np.asarray(f(points), dtype=float)
    if values.shape != points.shape:
        values = np.array([float(f(p)) for p in points])
    return values


def integrate_against_normal(f: Callable, scale: float = 1.0,
                             rule: Optional[QuadratureRule] = None) -> float:
    """
    Integral of f(theta) times the N(0, scale^2) density

    Args:
        f: Integrand; called with a numpy array of abscissae when possible
        scale: Standard deviation of the normal weight
        rule: Quadrature rule (default Gauss-Hermite of order 61)

    Returns:
        The integral value

    Raises:
        QuadratureError: If the integrand is non-finite at any node
    """
    if scale < 0:
        raise QuadratureError(f"Scale must be non-negative, got {scale}")
    rule = rule or gauss_hermite_rule(DEFAULT_ORDER)
    if scale == 0.0:
        value = float(_evaluate(f, np.zeros(1))[0])
        if not np.isfinite(value):
            raise QuadratureError("Integrand is not finite at 0")
        return value

    if rule.kind is QuadratureKind.ADAPTIVE:
        def integrand(z):
            value = float(_evaluate(f, np.array([scale * z]))[0])
            if not np.isfinite(value):
                raise QuadratureError(f"Integrand is not finite at {scale * z}")
            return value * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)

        value, error = integrate.quad(integrand, -ADAPTIVE_HALF_WIDTH, ADAPTIVE_HALF_WIDTH,
                                      epsabs=ADAPTIVE_TOLERANCE, epsrel=ADAPTIVE_TOLERANCE, limit=200)
        logger.debug(f"Adaptive quadrature: value={value:.12g}, error estimate={error:.2e}")
        return float(value)

    values = _evaluate(f, scale * rule.nodes)
    if not np.all(np.isfinite(values)):
        bad = rule.nodes[~np.isfinite(values)][0] * scale
        raise QuadratureError(f"Integrand is not finite at {bad}")
    return float(np.dot(rule.weights, values))


def marginal_loglik_exact(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                          rule: Optional[QuadratureRule] = None) -> float:
    """
    Marginal log-likelihood with abilities integrated out by quadrature

    Each student's likelihood is integrated against the standard normal
    density of the standardized ability; per-student values are combined
    with log-sum-exp over the nodes.

    Raises:
        QuadratureError: If N * R * I * order exceeds 1e8 or the rule is adaptive
    """
    rule = rule or gauss_hermite_rule(DEFAULT_ORDER)
    if rule.kind is not QuadratureKind.GAUSS_HERMITE:
        raise QuadratureError("The marginal likelihood needs a node-based rule")
    work = float(data.n_students) * data.n_raters * data.n_items * rule.order
    if work > MAX_MARGINAL_WORK:
        raise QuadratureError(
            f"Exact marginal likelihood refused: N*R*I*order = {work:.3g} exceeds {MAX_MARGINAL_WORK:.0e}"
        )

    node_loglik = np.zeros((data.n_students, rule.order))
    for k, node in enumerate(rule.nodes):
        per_record = record_log_likelihood(spec, params, data, np.full(data.n_records, node))
        node_loglik[:, k] = np.bincount(data.student_index, weights=per_record, minlength=data.n_students)

    with np.errstate(invalid='ignore'):
        per_student = special.logsumexp(node_loglik + rule.log_weights, axis=1)
    total = float(np.sum(per_student))
    logger.debug(f"Exact marginal log-likelihood ({rule.order} nodes): {total:.8f}")
    return total
