"""Laplace-approximated marginal likelihood and its maximisation over structural parameters"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.linalg import null_space

from src.core.config import FitConfig
from src.core.exceptions import LineSearchError
from src.core.logging_config import get_logger
from src.core.models.links import LinkKind
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset
from src.estimation.hierarchical import HierarchicalModes, maximize_h, require_slope_family, score_terms

logger = get_logger(__name__)

FINITE_DIFFERENCE_STEP = 1e-6
SIGMA_BOUNDS = (1e-3, 50.0)


@dataclass(frozen=True, eq=False)
class Structural:
    """Structural parameters as plain arrays; rho may leave [0, 1] during differencing"""
    sigma: float
    rho: np.ndarray
    eta: np.ndarray
    delta: np.ndarray
    alpha: float

    @classmethod
    def from_params(cls, params: ParameterSet) -> 'Structural':
        return cls(params.sigma, np.array(params.rho), np.array(params.eta),
                   np.array(params.delta), params.alpha)

    @classmethod
    def from_vector(cls, full: np.ndarray, n_raters: int, n_items: int) -> 'Structural':
        r, i = n_raters, n_items
        return cls(float(full[0]), full[1:1 + r], full[1 + r:1 + 2 * r],
                   full[1 + 2 * r:1 + 2 * r + i], float(full[1 + 2 * r + i]))

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.sigma], self.rho, self.eta, self.delta, [self.alpha]])

    def centred(self) -> 'Structural':
        """Move the means of eta and delta into alpha"""
        return Structural(self.sigma, self.rho, self.eta - self.eta.mean(), self.delta - self.delta.mean(),
                          self.alpha - self.eta.mean() - self.delta.mean())

    def to_params(self, theta_prime: np.ndarray) -> ParameterSet:
        return ParameterSet(theta_prime=theta_prime, sigma=self.sigma, rho=np.clip(self.rho, 0.0, 1.0),
                            eta=self.eta, delta=self.delta, alpha=self.alpha)


def full_labels(rater_ids, item_ids) -> List[str]:
    return (['sigma'] + [f'rho[{r}]' for r in rater_ids] + [f'eta[{r}]' for r in rater_ids]
            + [f'delta[{i}]' for i in item_ids] + ['alpha'])


class StructuralLayout:
    """
    Map between free optimisation coordinates and the full structural vector

    The full vector is (sigma, rho, eta, delta, alpha). eta and delta live in
    their zero-sum subspaces through orthonormal bases, so the full vector is
    fixed + J x with J having orthonormal columns.
    """

    def __init__(self, spec: ModelSpec, n_raters: int, n_items: int,
                 estimate_sigma: bool = False, free_rho: Optional[np.ndarray] = None):
        self.n_raters = n_raters
        self.n_items = n_items
        if spec.family is ModelFamily.TFM:
            free_rho = np.zeros(n_raters, dtype=bool)
        elif free_rho is None:
            free_rho = np.ones(n_raters, dtype=bool)
        self.free_rho = np.asarray(free_rho, dtype=bool)
        self.estimate_sigma = estimate_sigma

        size = 1 + 2 * n_raters + n_items + 1
        columns = []
        bounds = []
        if estimate_sigma:
            columns.append(self._unit(size, 0))
            bounds.append((1e-8, None))
        for r in np.nonzero(self.free_rho)[0]:
            columns.append(self._unit(size, 1 + r))
            bounds.append((0.0, 1.0))
        for block_start, length in ((1 + n_raters, n_raters), (1 + 2 * n_raters, n_items)):
            basis = null_space(np.ones((1, length)))
            for k in range(basis.shape[1]):
                column = np.zeros(size)
                column[block_start:block_start + length] = basis[:, k]
                columns.append(column)
                bounds.append((None, None))
        columns.append(self._unit(size, size - 1))
        bounds.append((None, None))

        self.jacobian = np.column_stack(columns)
        self.bounds = bounds

    @staticmethod
    def _unit(size: int, index: int) -> np.ndarray:
        column = np.zeros(size)
        column[index] = 1.0
        return column

    @property
    def n_free(self) -> int:
        return self.jacobian.shape[1]

    def pack(self, structural: Structural) -> np.ndarray:
        return self.jacobian.T @ structural.centred().vector()

    def fixed_part(self, template: Structural) -> np.ndarray:
        full = template.centred().vector()
        return full - self.jacobian @ (self.jacobian.T @ full)

    def unpack(self, x: np.ndarray, fixed: np.ndarray) -> Structural:
        return Structural.from_vector(fixed + self.jacobian @ x, self.n_raters, self.n_items)


def _effective_rho(spec: ModelSpec, structural: Structural) -> np.ndarray:
    if spec.family is ModelFamily.TFM:
        return np.ones(len(structural.rho))
    return structural.rho


def laplace_objective(spec: ModelSpec, structural: Structural, data: RatingDataset,
                      theta_star: np.ndarray) -> float:
    """
    Sum over students of h(theta*) - 0.5 log|h''(theta*)| with theta* held fixed

    This is the hierarchical-likelihood form of the Laplace marginal
    log-likelihood, a closed-form function of the structural parameters.
    """
    rho = _effective_rho(spec, structural)
    slopes = structural.sigma * rho[data.rater_index]
    predictor = (slopes * theta_star[data.student_index] + structural.alpha
                 - structural.eta[data.rater_index] - structural.delta[data.item_index])
    loglik, _, second = score_terms(spec, predictor, data.scores)
    n = data.n_students
    curvature = 1.0 - np.bincount(data.student_index, weights=second * slopes * slopes, minlength=n)
    with np.errstate(divide='ignore'):
        log_det = np.log(np.maximum(np.abs(curvature), 1e-300))
    return float(loglik.sum() - 0.5 * np.dot(theta_star, theta_star) - 0.5 * log_det.sum())


def _analytic_gradient(spec: ModelSpec, structural: Structural, data: RatingDataset,
                       theta_star: np.ndarray) -> np.ndarray:
    rho = _effective_rho(spec, structural)
    rho_record = rho[data.rater_index]
    theta_record = theta_star[data.student_index]
    sigma = structural.sigma
    slopes = sigma * rho_record
    predictor = (slopes * theta_record + structural.alpha
                 - structural.eta[data.rater_index] - structural.delta[data.item_index])
    p = spec.link.cdf(predictor)
    w = p * (1.0 - p)
    y = data.scores
    n = data.n_students
    curvature = 1.0 + np.bincount(data.student_index, weights=w * slopes * slopes, minlength=n)
    inverse = 1.0 / curvature[data.student_index]

    d_predictor = (y - p) - 0.5 * slopes * slopes * w * (1.0 - 2.0 * p) * inverse
    d_sigma = np.sum(d_predictor * rho_record * theta_record - sigma * rho_record ** 2 * w * inverse)
    if spec.family is ModelFamily.TFM:
        d_rho = np.zeros(data.n_raters)
    else:
        d_rho = np.bincount(data.rater_index,
                            weights=d_predictor * sigma * theta_record - sigma ** 2 * rho_record * w * inverse,
                            minlength=data.n_raters)
    d_eta = -np.bincount(data.rater_index, weights=d_predictor, minlength=data.n_raters)
    d_delta = -np.bincount(data.item_index, weights=d_predictor, minlength=data.n_items)
    return np.concatenate([[d_sigma], d_rho, d_eta, d_delta, [d_predictor.sum()]])


def numerical_gradient(spec: ModelSpec, structural: Structural, data: RatingDataset,
                       theta_star: np.ndarray) -> np.ndarray:
    """Central-difference gradient of laplace_objective over the full structural vector"""
    full = structural.vector()
    gradient = np.zeros_like(full)
    for k in range(len(full)):
        h = FINITE_DIFFERENCE_STEP * max(1.0, abs(full[k]))
        up, down = full.copy(), full.copy()
        up[k] += h
        down[k] -= h
        f_up = laplace_objective(spec, Structural.from_vector(up, data.n_raters, data.n_items), data, theta_star)
        f_down = laplace_objective(spec, Structural.from_vector(down, data.n_raters, data.n_items),
                                   data, theta_star)
        gradient[k] = (f_up - f_down) / (2.0 * h)
    return gradient


def laplace_gradient(spec: ModelSpec, structural: Structural, data: RatingDataset, theta_star: np.ndarray,
                     analytic: bool = True) -> np.ndarray:
    """Gradient of laplace_objective over (sigma, rho, eta, delta, alpha)"""
    if analytic and spec.link.kind is LinkKind.LOGIT:
        return _analytic_gradient(spec, structural, data, theta_star)
    return numerical_gradient(spec, structural, data, theta_star)


def laplace_loglik(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                   config: FitConfig = FitConfig()) -> float:
    """
    Laplace approximation of the marginal log-likelihood

    Each student's integral is approximated at the mode of h, so the modes
    are recomputed for the given structural parameters.
    """
    return _laplace_at_modes(maximize_h(spec, params, data, params.theta_prime, config))


def _laplace_at_modes(modes: HierarchicalModes) -> float:
    with np.errstate(divide='ignore'):
        return float(np.sum(modes.h_values - 0.5 * np.log(np.abs(modes.h_second))))


def maximize_sigma(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                   config: FitConfig = FitConfig()) -> Tuple[float, HierarchicalModes]:
    """
    Maximise the Laplace log-likelihood over sigma with rho, eta, delta and alpha fixed

    The ability modes are re-maximised at every trial value. The search runs
    over log sigma inside SIGMA_BOUNDS with a bounded Brent method; the
    natural-scale modes of ``params`` are the warm start.

    Returns:
        (sigma, ability modes at sigma)
    """
    require_slope_family(spec)
    natural = params.sigma * params.theta_prime

    def modes_at(sigma: float) -> HierarchicalModes:
        return maximize_h(spec, params.replace(sigma=sigma), data, natural / sigma, config)

    def negative(log_sigma: float) -> float:
        return -_laplace_at_modes(modes_at(float(np.exp(log_sigma))))

    result = optimize.minimize_scalar(negative, bounds=tuple(np.log(SIGMA_BOUNDS)), method='bounded',
                                      options={'xatol': 1e-6})
    sigma = float(np.exp(result.x))
    logger.debug(f"Scale maximisation: sigma {params.sigma:.5f} -> {sigma:.5f} "
                 f"after {result.nfev} evaluations")
    return sigma, modes_at(sigma)


@dataclass(frozen=True, eq=False)
class LaplaceFit:
    params: ParameterSet
    objective: float
    success: bool
    iterations: int
    message: str


def maximize_laplace(spec: ModelSpec, params: ParameterSet, data: RatingDataset, theta_star: np.ndarray,
                     config: FitConfig = FitConfig()) -> LaplaceFit:
    """
    Maximise the Laplace objective over (rho, eta, delta, alpha) with sigma and theta* fixed

    eta and delta are optimised in their zero-sum subspaces and rho inside
    the box [0, 1] with L-BFGS-B. The returned parameters carry theta*.
    """
    require_slope_family(spec)
    theta_star = np.asarray(theta_star, dtype=float)
    start = Structural.from_params(params)
    layout = StructuralLayout(spec, data.n_raters, data.n_items)
    fixed = layout.fixed_part(start)
    x0 = layout.pack(start)

    def negative(x):
        return -laplace_objective(spec, layout.unpack(x, fixed), data, theta_star)

    def negative_gradient(x):
        structural = layout.unpack(x, fixed)
        return -layout.jacobian.T @ laplace_gradient(spec, structural, data, theta_star, config.analytic_gradient)

    initial = -negative(x0)
    result = optimize.minimize(
        negative, x0, jac=negative_gradient, method='L-BFGS-B', bounds=layout.bounds,
        options={'maxiter': config.optimizer_max_iterations, 'ftol': 1e-11, 'gtol': 1e-6},
    )
    decrease = initial - (-float(result.fun))
    if decrease > config.loglik_tolerance * max(1.0, abs(initial)):
        raise LineSearchError(
            f"Laplace maximisation lowered the objective by {decrease:.3e} ({result.message})",
            diagnostics={'initial_objective': initial, 'final_objective': -float(result.fun),
                         'iterations': int(result.nit), 'message': str(result.message),
                         'gradient_norm': float(np.linalg.norm(getattr(result, 'jac', np.zeros(1))))},
        )
    x = result.x if decrease <= 0.0 else x0
    fitted = layout.unpack(x, fixed)
    objective = -negative(x)
    level = logger.debug if result.success else logger.warning
    level(f"Laplace maximisation: {result.message} after {result.nit} iterations, "
          f"objective {initial:.6f} -> {objective:.6f}")
    return LaplaceFit(
        params=fitted.to_params(theta_star),
        objective=objective,
        success=bool(result.success),
        iterations=int(result.nit),
        message=str(result.message),
    )


def structural_gradient_check(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                              theta_star: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic and central-difference gradients at the same point, for verification"""
    theta_star = params.theta_prime if theta_star is None else np.asarray(theta_star, dtype=float)
    structural = Structural.from_params(params)
    return (laplace_gradient(spec, structural, data, theta_star, analytic=True),
            numerical_gradient(spec, structural, data, theta_star))
