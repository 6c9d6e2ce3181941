"""Asymptotic covariance of the structural parameters from the Laplace objective"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.core.config import FitConfig
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset
from src.estimation.laplace import Structural, StructuralLayout, full_labels, laplace_gradient

logger = get_logger(__name__)

HESSIAN_STEP = 1e-5
RHO_BOUNDARY = 1e-8


@dataclass(frozen=True, eq=False)
class StructuralCovariance:
    """
    Covariance over the full structural vector (sigma, rho, eta, delta, alpha)

    Coordinates fixed by the identification constraints (rho at its maximum
    of one, every rho under TFM) have zero variance.
    """
    matrix: np.ndarray
    labels: List[str]
    n_raters: int
    n_items: int
    pseudo_inverse: bool = False

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def variance(self, label: str) -> float:
        k = self.index(label)
        return float(self.matrix[k, k])

    def rater_block(self, rater: int) -> np.ndarray:
        """3x3 covariance over (sigma, rho_r, eta_r)"""
        rows = [0, 1 + rater, 1 + self.n_raters + rater]
        return self.matrix[np.ix_(rows, rows)]


def _central_hessian(gradient, x: np.ndarray) -> np.ndarray:
    size = len(x)
    hessian = np.zeros((size, size))
    for k in range(size):
        h = HESSIAN_STEP * max(1.0, abs(x[k]))
        up, down = x.copy(), x.copy()
        up[k] += h
        down[k] -= h
        hessian[:, k] = (gradient(up) - gradient(down)) / (2.0 * h)
    return 0.5 * (hessian + hessian.T)


def structural_covariance(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                          theta_star: Optional[np.ndarray] = None, config: FitConfig = FitConfig(),
                          rater_ids: Optional[Sequence[str]] = None,
                          item_ids: Optional[Sequence[str]] = None) -> StructuralCovariance:
    """
    Inverse of the negative numerical Hessian of the Laplace objective

    The Hessian is taken over the free coordinates (sigma, rho below one,
    zero-sum eta and delta, alpha) by central differences of the gradient and
    mapped back to the full vector. A Hessian that is not negative definite
    is inverted with the pseudo-inverse and flagged.
    """
    theta_star = params.theta_prime if theta_star is None else np.asarray(theta_star, dtype=float)
    free_rho = None
    if spec.family is ModelFamily.GMF:
        free_rho = params.rho < 1.0 - RHO_BOUNDARY
    layout = StructuralLayout(spec, data.n_raters, data.n_items, estimate_sigma=True, free_rho=free_rho)
    start = Structural.from_params(params)
    fixed = layout.fixed_part(start)
    x0 = layout.pack(start)

    def gradient(x):
        structural = layout.unpack(x, fixed)
        return layout.jacobian.T @ laplace_gradient(spec, structural, data, theta_star, config.analytic_gradient)

    hessian = _central_hessian(gradient, x0)
    information = -hessian
    pseudo = False
    try:
        np.linalg.cholesky(information)
        free_cov = np.linalg.inv(information)
    except np.linalg.LinAlgError:
        pseudo = True
        free_cov = np.linalg.pinv(information)
        logger.warning("Laplace Hessian is not negative definite; covariance uses the pseudo-inverse")

    matrix = layout.jacobian @ free_cov @ layout.jacobian.T
    rater_ids = list(rater_ids) if rater_ids is not None else list(data.rater_ids)
    item_ids = list(item_ids) if item_ids is not None else list(data.item_ids)
    labels = full_labels(rater_ids, item_ids)
    logger.debug(f"Structural covariance over {layout.n_free} free coordinates")
    return StructuralCovariance(
        matrix=0.5 * (matrix + matrix.T),
        labels=labels,
        n_raters=data.n_raters,
        n_items=data.n_items,
        pseudo_inverse=pseudo,
    )
