"""Hierarchical-likelihood modes of the abilities and the step-2 slope update"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.config import FitConfig
from src.core.exceptions import LineSearchError, ParameterError
from src.core.logging_config import get_logger
from src.core.models.links import LinkKind
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset

logger = get_logger(__name__)

MAX_HALVINGS = 40


@dataclass(frozen=True, eq=False)
class HierarchicalModes:
    """Per-student maximisers of h(theta') with h and h'' at the maximum"""
    theta: np.ndarray
    h_values: np.ndarray
    h_second: np.ndarray
    iterations: int
    converged: bool

    @property
    def total(self) -> float:
        return float(np.sum(self.h_values))


def require_slope_family(spec: ModelSpec) -> None:
    if spec.family not in (ModelFamily.TFM, ModelFamily.GMF):
        raise ParameterError(f"Hierarchical-likelihood estimation supports TFM and GMF, not {spec.family.value}")


def record_slopes(spec: ModelSpec, sigma: float, rho: np.ndarray, data: RatingDataset) -> np.ndarray:
    """dS / d theta' of every record"""
    if spec.family is ModelFamily.TFM:
        return np.full(data.n_records, float(sigma))
    return sigma * np.asarray(rho)[data.rater_index]


def record_offsets(eta: np.ndarray, delta: np.ndarray, alpha: float, data: RatingDataset) -> np.ndarray:
    """S - slope * theta' of every record"""
    return alpha - np.asarray(eta)[data.rater_index] - np.asarray(delta)[data.item_index]


def score_terms(spec: ModelSpec, predictor: np.ndarray, y: np.ndarray
                ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Log-likelihood of each record with its first and second derivative in S

    The logit link has the closed forms y - p and -p(1 - p).
    """
    link = spec.link
    positive = y.astype(bool)
    loglik = np.where(positive, link.log_cdf(predictor), link.log_sf(predictor))
    if link.kind is LinkKind.LOGIT:
        p = link.cdf(predictor)
        return loglik, y - p, -p * (1.0 - p)

    cdf = np.maximum(link.cdf(predictor), 1e-300)
    sf = np.maximum(link.sf(predictor), 1e-300)
    density = link.pdf(predictor)
    curvature = link.pdf_derivative(predictor)
    first = np.where(positive, density / cdf, -density / sf)
    second = np.where(positive,
                      (curvature * cdf - density * density) / (cdf * cdf),
                      (-curvature * sf - density * density) / (sf * sf))
    return loglik, first, second


def _student_terms(spec, theta, slopes, offsets, data, n_students):
    predictor = slopes * theta[data.student_index] + offsets
    loglik, first, second = score_terms(spec, predictor, data.scores)
    idx = data.student_index
    h = np.bincount(idx, weights=loglik, minlength=n_students) - 0.5 * theta * theta
    h1 = np.bincount(idx, weights=first * slopes, minlength=n_students) - theta
    h2 = np.bincount(idx, weights=second * slopes * slopes, minlength=n_students) - 1.0
    return h, h1, h2


def h_terms(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
            theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """h, h' and h'' of every student at the standardized abilities ``theta``"""
    require_slope_family(spec)
    theta = np.asarray(theta, dtype=float)
    slopes = record_slopes(spec, params.sigma, params.rho, data)
    offsets = record_offsets(params.eta, params.delta, params.alpha, data)
    return _student_terms(spec, theta, slopes, offsets, data, len(theta))


def maximize_h(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
               theta_init: Optional[np.ndarray] = None, config: FitConfig = FitConfig()) -> HierarchicalModes:
    """
    Maximise h_n(theta') = sum log P(y | theta') - theta'^2 / 2 for every student

    Students are independent, so the safeguarded Newton iteration runs on
    all of them at once. ``theta_init`` may be longer than the number of
    students in the data; the extra students have no ratings and their mode
    is 0 with h'' = -1.

    Raises:
        LineSearchError: If step halving cannot increase h for a student whose gradient is not small
    """
    require_slope_family(spec)
    n_students = data.n_students if theta_init is None else len(theta_init)
    if n_students < data.n_students:
        raise ParameterError("theta_init is shorter than the number of students")
    theta = np.zeros(n_students) if theta_init is None else np.array(theta_init, dtype=float)

    slopes = record_slopes(spec, params.sigma, params.rho, data)
    offsets = record_offsets(params.eta, params.delta, params.alpha, data)
    tol = config.inner_newton_tolerance

    h, h1, h2 = _student_terms(spec, theta, slopes, offsets, data, n_students)
    converged = False
    step_count = 0
    for step_count in range(1, config.inner_max_steps + 1):
        active = np.abs(h1) > tol
        if not active.any():
            converged = True
            break
        # Newton where h is concave, gradient ascent otherwise
        step = np.where(h2 < 0.0, -h1 / np.where(h2 < 0.0, h2, -1.0), h1)
        step = np.where(active, step, 0.0)

        accepted = ~active
        candidate = theta.copy()
        for _ in range(MAX_HALVINGS):
            trial = np.where(accepted, candidate, theta + step)
            h_trial = _student_terms(spec, trial, slopes, offsets, data, n_students)[0]
            improved = h_trial >= h - 1e-12 * np.abs(h)
            newly = improved & ~accepted
            candidate = np.where(newly, trial, candidate)
            accepted |= improved
            if accepted.all():
                break
            step = np.where(accepted, step, 0.5 * step)

        stuck = ~accepted & (np.abs(h1) > np.sqrt(tol))
        if stuck.any():
            raise LineSearchError(f"Step halving failed for {int(stuck.sum())} students")
        theta = np.where(accepted, candidate, theta)
        h, h1, h2 = _student_terms(spec, theta, slopes, offsets, data, n_students)
    else:
        converged = bool(np.all(np.abs(h1) <= tol))

    if not converged:
        logger.warning(f"Ability modes not converged after {step_count} Newton steps "
                       f"(max |h'| = {np.max(np.abs(h1)):.3e})")
    logger.debug(f"Ability modes: {step_count} Newton steps, sum h = {h.sum():.6f}")
    return HierarchicalModes(theta=theta, h_values=h, h_second=h2, iterations=step_count, converged=converged)


def maximize_rho(spec: ModelSpec, params: ParameterSet, data: RatingDataset, theta: np.ndarray,
                 config: FitConfig = FitConfig()) -> np.ndarray:
    """
    Per-rater projected Newton update of rho in [0, 1] with abilities held fixed

    Only the rater's own likelihood terms depend on its rho, so raters are
    updated independently.
    """
    if spec.family is ModelFamily.TFM:
        return np.ones(data.n_raters)
    rho = np.array(params.rho, dtype=float)
    ability = params.sigma * np.asarray(theta)[data.student_index]
    offsets = record_offsets(params.eta, params.delta, params.alpha, data)
    rater = data.rater_index

    def terms(values):
        loglik, first, second = score_terms(spec, values[rater] * ability + offsets, data.scores)
        return (np.bincount(rater, weights=loglik, minlength=data.n_raters),
                np.bincount(rater, weights=first * ability, minlength=data.n_raters),
                np.bincount(rater, weights=second * ability * ability, minlength=data.n_raters))

    value, gradient, curvature = terms(rho)
    for _ in range(config.inner_max_steps):
        step = np.where(curvature < 0.0, -gradient / np.where(curvature < 0.0, curvature, -1.0), gradient)
        # gradient pointing out of the box at a bound
        blocked = ((rho <= 0.0) & (gradient <= 0.0)) | ((rho >= 1.0) & (gradient >= 0.0))
        step = np.where(blocked, 0.0, step)
        if np.all(np.abs(np.clip(rho + step, 0.0, 1.0) - rho) < config.inner_newton_tolerance):
            break
        accepted = np.abs(step) == 0.0
        candidate = rho.copy()
        for _ in range(MAX_HALVINGS):
            trial = np.where(accepted, candidate, np.clip(rho + step, 0.0, 1.0))
            trial_value = terms(trial)[0]
            improved = trial_value >= value - 1e-12 * np.abs(value)
            candidate = np.where(improved & ~accepted, trial, candidate)
            accepted |= improved
            if accepted.all():
                break
            step = np.where(accepted, step, 0.5 * step)
        rho = np.where(accepted, candidate, rho)
        value, gradient, curvature = terms(rho)
    return rho


def block_ascent(spec: ModelSpec, params: ParameterSet, data: RatingDataset, theta_init: np.ndarray,
                 config: FitConfig = FitConfig()) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Alternate ability-mode and slope updates until the total h stops increasing

    Returns:
        (theta, rho, sweeps)
    """
    rho = np.array(params.rho, dtype=float)
    modes = maximize_h(spec, params, data, theta_init, config)
    previous = modes.total
    sweeps = 0
    for sweeps in range(1, config.block_ascent_max_sweeps + 1):
        rho = maximize_rho(spec, params.replace(rho=rho), data, modes.theta, config)
        modes = maximize_h(spec, params.replace(rho=rho), data, modes.theta, config)
        logger.debug(f"Block ascent sweep {sweeps}: sum h = {modes.total:.8f}")
        if abs(modes.total - previous) < config.block_ascent_tolerance:
            break
        previous = modes.total
    return modes.theta, rho, sweeps
