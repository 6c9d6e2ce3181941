"""Linear predictors, success probabilities and likelihoods of the rater models"""
from typing import Optional

import numpy as np

from src.core.exceptions import DegenerateProbabilityError, ParameterError
from src.core.models.parameters import HrmSignConvention, ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset


def _check_index(value: int, size: int, label: str) -> int:
    if not 0 <= int(value) < size:
        raise ParameterError(f"{label} index {value} out of range [0, {size})")
    return int(value)


def _check_dimensions(params: ParameterSet, data: RatingDataset) -> None:
    if (params.n_students, params.n_raters, params.n_items) != (data.n_students, data.n_raters, data.n_items):
        raise ParameterError(
            f"Parameter dimensions (N={params.n_students}, R={params.n_raters}, I={params.n_items}) "
            f"do not match data (N={data.n_students}, R={data.n_raters}, I={data.n_items})"
        )


def _probit_noise(params: ParameterSet, raters) -> np.ndarray:
    noise = params.noise_scale[raters]
    if np.any(noise <= 0.0):
        raise ParameterError("PROBIT raters need rho < 1 (positive noise scale)")
    return noise


def _hrm_level1(spec: ModelSpec, params: ParameterSet, raters, items, latent_class: int):
    params.require_hrm()
    c = params.criterion[raters]
    a = params.slope[raters, items]
    if spec.hrm_sign_convention is HrmSignConvention.SDT_STANDARD:
        return a * latent_class - c
    return c - a * latent_class


def _predictors(spec: ModelSpec, params: ParameterSet, theta_prime, raters, items,
                latent_class: Optional[int] = None) -> np.ndarray:
    theta = params.sigma * np.asarray(theta_prime, dtype=float)
    family = spec.family
    if family is ModelFamily.TFM:
        return theta - params.delta[items] - params.eta[raters] + params.alpha
    if family is ModelFamily.GMF:
        return params.rho[raters] * theta - params.eta[raters] - params.delta[items] + params.alpha
    if family is ModelFamily.PROBIT:
        noise = _probit_noise(params, raters)
        return (theta - params.delta[items] + params.alpha - params.threshold[raters]) / noise
    if latent_class is None:
        return theta - params.delta[items] + params.alpha
    return _hrm_level1(spec, params, raters, items, latent_class)


def _probabilities(spec: ModelSpec, params: ParameterSet, theta_prime, raters, items) -> np.ndarray:
    if spec.family is not ModelFamily.HRM:
        return spec.link.cdf(_predictors(spec, params, theta_prime, raters, items))
    ideal = spec.link.cdf(_predictors(spec, params, theta_prime, raters, items))
    hit = spec.level1_link.cdf(_hrm_level1(spec, params, raters, items, 1))
    false_alarm = spec.level1_link.cdf(_hrm_level1(spec, params, raters, items, 0))
    return ideal * hit + (1.0 - ideal) * false_alarm


def _ability_slopes(spec: ModelSpec, params: ParameterSet, theta_prime, raters, items) -> np.ndarray:
    """d mu / d theta_prime"""
    predictor = _predictors(spec, params, theta_prime, raters, items)
    density = spec.link.pdf(predictor)
    family = spec.family
    if family is ModelFamily.TFM:
        return params.sigma * density
    if family is ModelFamily.GMF:
        return params.rho[raters] * params.sigma * density
    if family is ModelFamily.PROBIT:
        return params.sigma * density / _probit_noise(params, raters)
    hit = spec.level1_link.cdf(_hrm_level1(spec, params, raters, items, 1))
    false_alarm = spec.level1_link.cdf(_hrm_level1(spec, params, raters, items, 0))
    return (hit - false_alarm) * params.sigma * density


def linear_predictor(spec: ModelSpec, params: ParameterSet, student: int, rater: int, item: int,
                     latent_class: Optional[int] = None) -> float:
    """
    Linear predictor S for one (student, rater, item) triple

    Args:
        spec: Model specification
        params: Parameter set
        student: Student index
        rater: Rater index
        item: Item index
        latent_class: HRM only; 0 or 1 selects the level-1 predictor,
            None returns the level-2 (ideal rating) predictor

    Returns:
        The linear predictor

    Raises:
        ParameterError: If an index is out of range or the family parameters are missing
    """
    n = _check_index(student, params.n_students, 'student')
    r = _check_index(rater, params.n_raters, 'rater')
    i = _check_index(item, params.n_items, 'item')
    if latent_class is not None and latent_class not in (0, 1):
        raise ParameterError(f"latent_class must be 0 or 1, got {latent_class}")
    return float(_predictors(spec, params, params.theta_prime[n], r, i, latent_class))


def success_probability(spec: ModelSpec, params: ParameterSet, student: int, rater: int, item: int) -> float:
    """Probability that the rater scores the student's response to the item as 1"""
    n = _check_index(student, params.n_students, 'student')
    r = _check_index(rater, params.n_raters, 'rater')
    i = _check_index(item, params.n_items, 'item')
    return float(_probabilities(spec, params, params.theta_prime[n], r, i))


def probability_curve(spec: ModelSpec, params: ParameterSet, theta_prime, rater: int, item: int) -> np.ndarray:
    """Success probability of one (rater, item) pair over an array of standardized abilities"""
    r = _check_index(rater, params.n_raters, 'rater')
    i = _check_index(item, params.n_items, 'item')
    return np.asarray(_probabilities(spec, params, np.asarray(theta_prime, dtype=float), r, i), dtype=float)


def ability_derivative(spec: ModelSpec, params: ParameterSet, student: int, rater: int, item: int) -> float:
    """Derivative of the success probability with respect to the standardized ability"""
    n = _check_index(student, params.n_students, 'student')
    r = _check_index(rater, params.n_raters, 'rater')
    i = _check_index(item, params.n_items, 'item')
    return float(_ability_slopes(spec, params, params.theta_prime[n], r, i))


def fisher_information(spec: ModelSpec, params: ParameterSet, student: int, rater: int, item: int) -> float:
    """
    Fisher information about the standardized ability carried by one rating

    Raises:
        DegenerateProbabilityError: If the success probability is exactly 0 or 1
    """
    mu = success_probability(spec, params, student, rater, item)
    if mu <= 0.0 or mu >= 1.0:
        raise DegenerateProbabilityError(f"Success probability {mu} is degenerate")
    slope = ability_derivative(spec, params, student, rater, item)
    return slope * slope / (mu * (1.0 - mu))


def record_predictors(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                      theta_prime: Optional[np.ndarray] = None) -> np.ndarray:
    """Linear predictor of every record; ``theta_prime`` overrides abilities per record"""
    _check_dimensions(params, data)
    if theta_prime is None:
        theta_prime = params.theta_prime[data.student_index]
    return _predictors(spec, params, theta_prime, data.rater_index, data.item_index)


def record_probabilities(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                         theta_prime: Optional[np.ndarray] = None) -> np.ndarray:
    """Success probability of every record"""
    _check_dimensions(params, data)
    if theta_prime is None:
        theta_prime = params.theta_prime[data.student_index]
    return _probabilities(spec, params, theta_prime, data.rater_index, data.item_index)


def record_log_likelihood(spec: ModelSpec, params: ParameterSet, data: RatingDataset,
                          theta_prime: Optional[np.ndarray] = None) -> np.ndarray:
    """Log-likelihood contribution of every record"""
    _check_dimensions(params, data)
    if theta_prime is None:
        theta_prime = params.theta_prime[data.student_index]
    y = data.scores.astype(bool)
    if spec.family is ModelFamily.HRM:
        mu = _probabilities(spec, params, theta_prime, data.rater_index, data.item_index)
        with np.errstate(divide='ignore'):
            return np.where(y, np.log(mu), np.log1p(-mu))
    predictor = _predictors(spec, params, theta_prime, data.rater_index, data.item_index)
    return np.where(y, spec.link.log_cdf(predictor), spec.link.log_sf(predictor))


def log_likelihood(spec: ModelSpec, params: ParameterSet, data: RatingDataset) -> float:
    """
    Conditional log-likelihood of the ratings given the abilities

    Returns -inf only when a probability is exactly 0 or 1 against the observed score.
    """
    return float(np.sum(record_log_likelihood(spec, params, data)))
