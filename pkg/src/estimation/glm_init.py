"""Starting values from a ridge-stabilised logistic GLM with additive effects"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse, special
from scipy.sparse.csgraph import connected_components

from src.core.config import FitConfig
from src.core.exceptions import IdentifiabilityError
from src.core.logging_config import get_logger
from src.core.models.ratings import RatingDataset

logger = get_logger(__name__)

IRLS_MAX_ITERATIONS = 50
IRLS_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class InitialEstimates:
    """Centred additive effects on the unit ability scale"""
    theta: np.ndarray
    eta: np.ndarray
    delta: np.ndarray
    alpha: float
    iterations: int
    converged: bool
    clamped: int


def check_connectivity(data: RatingDataset) -> None:
    """
    Raise IdentifiabilityError if students, raters and items do not form one linked design

    Nodes are students, raters and items; each rating links its student to
    its rater and to its item.
    """
    n, r, i = data.n_students, data.n_raters, data.n_items
    students = data.student_index
    rows = np.concatenate([students, students])
    cols = np.concatenate([n + data.rater_index, n + r + data.item_index])
    graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n + r + i, n + r + i))
    count, labels = connected_components(graph, directed=False)
    if count == 1:
        return

    components = []
    for label in range(count):
        members = np.nonzero(labels == label)[0]
        raters = [data.rater_ids[k - n] for k in members if n <= k < n + r]
        items = [data.item_ids[k - n - r] for k in members if k >= n + r]
        components.append(raters + items)
    raise IdentifiabilityError(
        f"Rating design is disconnected into {count} components: "
        + '; '.join('{' + ', '.join(c) + '}' for c in components),
        components,
    )


def _design_matrix(data: RatingDataset) -> sparse.csr_matrix:
    """Columns: intercept, students (+1), raters (-1), items (-1)"""
    m = data.n_records
    n, r = data.n_students, data.n_raters
    rows = np.repeat(np.arange(m), 4)
    cols = np.column_stack([
        np.zeros(m, dtype=np.intp),
        1 + data.student_index,
        1 + n + data.rater_index,
        1 + n + r + data.item_index,
    ]).ravel()
    values = np.tile([1.0, 1.0, -1.0, -1.0], m)
    width = 1 + n + r + data.n_items
    return sparse.csr_matrix((values, (rows, cols)), shape=(m, width))


def initialize_glm(data: RatingDataset, config: FitConfig = FitConfig()) -> InitialEstimates:
    """
    Fit logit P(Y=1) = alpha + theta_n - eta_r - delta_i by ridge-penalised IRLS

    Coefficients are projected onto [-bound, bound] after every step, which
    stops the iteration from diverging under complete separation. The
    effects are then centred with their means absorbed into alpha.

    Raises:
        IdentifiabilityError: If the design is disconnected
    """
    check_connectivity(data)
    design = _design_matrix(data)
    y = data.scores.astype(float)
    width = design.shape[1]
    ridge = config.ridge * np.eye(width)
    bound = config.separation_bound

    beta = np.zeros(width)
    converged = False
    iteration = 0
    for iteration in range(1, IRLS_MAX_ITERATIONS + 1):
        p = special.expit(design @ beta)
        w = p * (1.0 - p)
        gradient = design.T @ (y - p) - config.ridge * beta
        information = (design.T @ sparse.diags(w) @ design).toarray() + ridge
        try:
            step = np.linalg.solve(information, gradient)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(information, gradient, rcond=None)[0]
        updated = np.clip(beta + step, -bound, bound)
        change = float(np.max(np.abs(updated - beta)))
        beta = updated
        logger.debug(f"IRLS iteration {iteration}: max change {change:.3e}")
        if change < IRLS_TOLERANCE:
            converged = True
            break

    n, r = data.n_students, data.n_raters
    alpha = beta[0]
    theta = beta[1:1 + n]
    eta = beta[1 + n:1 + n + r]
    delta = beta[1 + n + r:]
    clamped = int(np.sum(np.abs(beta) >= bound - 1e-12))
    if clamped:
        logger.warning(f"{clamped} GLM coefficients reached the separation bound +/-{bound}")
    if not converged:
        logger.warning(f"GLM initialisation stopped after {iteration} IRLS iterations without converging")

    alpha = float(alpha + theta.mean() - eta.mean() - delta.mean())
    logger.info(f"GLM initialisation: {iteration} iterations, alpha={alpha:.4f}, sd(theta)={theta.std():.4f}")
    return InitialEstimates(
        theta=theta - theta.mean(),
        eta=eta - eta.mean(),
        delta=delta - delta.mean(),
        alpha=alpha,
        iterations=iteration,
        converged=converged,
        clamped=clamped,
    )
