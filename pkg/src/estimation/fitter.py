"""Five-step hierarchical-likelihood fit of the TFM and GMF rater models"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.config import FitConfig
from src.core.exceptions import ConfigurationError, LineSearchError, RaterCapabilityError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset
from src.estimation.covariance import StructuralCovariance, structural_covariance
from src.estimation.glm_init import initialize_glm
from src.estimation.hierarchical import block_ascent, maximize_h
from src.estimation.laplace import laplace_loglik, maximize_laplace, maximize_sigma

logger = get_logger(__name__)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    sigma: float
    objective: float
    rho_scale: float


@dataclass(frozen=True, eq=False)
class FitResult:
    """Estimates, fit quality and diagnostics of one fit"""
    spec: ModelSpec
    params: ParameterSet
    laplace_loglik: float
    iterations: int
    converged: bool
    student_ids: tuple
    rater_ids: tuple
    item_ids: tuple
    history: List[IterationRecord] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    covariance: Optional[StructuralCovariance] = None

    @property
    def natural_theta(self) -> np.ndarray:
        return self.params.theta


def _standardize_abilities(params: ParameterSet) -> ParameterSet:
    """
    Centre the ability modes into eta and scale them to unit variance

    sigma keeps its marginal estimate, so sigma * theta' spreads like the
    fitted ability distribution rather than like the shrunken modes.
    """
    if float(params.theta_prime.std()) < 1e-8:
        logger.warning("Ability modes have zero spread; abilities only centred")
        return params.standardized()
    return params.standardized().replace(sigma=params.sigma)


def _tfm_rho(spec: ModelSpec, rho: np.ndarray) -> np.ndarray:
    return np.ones_like(rho) if spec.family is ModelFamily.TFM else rho


def fit(spec: ModelSpec, data: RatingDataset, config: FitConfig = FitConfig(),
        compute_covariance: bool = True) -> FitResult:
    """
    Estimate abilities and rater/item parameters by hierarchical likelihood

    Step 1 takes starting values from a logistic GLM; step 2 alternates
    ability modes and rater slopes with sigma = 1; step 3 sets sigma to the
    maximiser of the Laplace log-likelihood (ability modes re-maximised for
    every trial value) and then maximises the Laplace objective over
    (rho, eta, delta, alpha) with the abilities fixed; step 4 rescales rho
    so that its maximum is one, moving the factor into sigma, and refreshes
    the ability modes; steps 3 and 4 repeat until sigma changes by less than
    the tolerance, the objective stops improving, or the iteration limit is
    hit. The reported abilities are the modes standardised to mean 0 and
    variance 1.

    Args:
        spec: Model specification (TFM or GMF)
        data: Rating dataset
        config: Fit settings
        compute_covariance: Also compute the structural covariance

    Returns:
        FitResult; ``converged`` is False when the iteration limit was
        reached or sigma fell below ``config.min_sigma``

    Raises:
        ConfigurationError: For families other than TFM and GMF
        IdentifiabilityError: If the design is disconnected
    """
    if spec.family not in (ModelFamily.TFM, ModelFamily.GMF):
        raise ConfigurationError(f"Fitting is available for TFM and GMF, not {spec.family.value}")
    logger.info(f"Fitting {spec.family.value} ({spec.link.kind.value} link): N={data.n_students}, "
                f"R={data.n_raters}, I={data.n_items}, records={data.n_records}")
    diagnostics: Dict[str, Any] = {'rho_scale_skipped': False, 'optimizer_failures': 0,
                                   'line_search_failures': [], 'sigma_collapsed': False}

    # Step 1
    initial = initialize_glm(data, config)
    diagnostics['glm_iterations'] = initial.iterations
    diagnostics['separation_clamped'] = initial.clamped
    params = ParameterSet(
        theta_prime=initial.theta,
        sigma=1.0,
        rho=np.ones(data.n_raters),
        eta=initial.eta,
        delta=initial.delta,
        alpha=initial.alpha,
    )

    # Step 2
    theta, rho, sweeps = block_ascent(spec, params, data, params.theta_prime, config)
    diagnostics['block_ascent_sweeps'] = sweeps
    diagnostics['step2_rho_change'] = float(np.max(np.abs(rho - params.rho)))
    params = params.replace(theta_prime=theta, rho=_tfm_rho(spec, rho))

    history: List[IterationRecord] = []
    previous_sigma = params.sigma
    previous_objective = -np.inf
    converged = False
    iteration = 0
    for iteration in range(1, config.max_outer_iterations + 1):
        # Step 3
        sigma, modes = maximize_sigma(spec, params, data, config)
        params = params.replace(sigma=sigma, theta_prime=modes.theta)
        rho_before = params.rho
        try:
            laplace = maximize_laplace(spec, params, data, params.theta_prime, config)
        except LineSearchError as e:
            logger.warning(f"Iteration {iteration}: {e}; structural parameters kept")
            diagnostics['line_search_failures'].append({'iteration': iteration, **e.diagnostics})
            diagnostics['optimizer_failures'] += 1
            break
        if not laplace.success:
            diagnostics['optimizer_failures'] += 1
        params = laplace.params
        if iteration == 1:
            diagnostics['step3_rho_change'] = float(np.max(np.abs(params.rho - rho_before)))

        # Step 4
        scale = float(params.rho.max())
        if spec.family is ModelFamily.GMF:
            if scale < config.min_rho_scale:
                diagnostics['rho_scale_skipped'] = True
                logger.warning(f"max(rho) = {scale:.2e} below {config.min_rho_scale}; rho rescaling skipped")
            else:
                params = params.replace(rho=params.rho / scale, sigma=params.sigma * scale)
        modes = maximize_h(spec, params, data, params.theta_prime, config)
        params = params.replace(theta_prime=modes.theta)

        history.append(IterationRecord(iteration, params.sigma, laplace.objective, scale))
        sigma_change = abs(params.sigma - previous_sigma)
        improvement = laplace.objective - previous_objective
        logger.info(f"Iteration {iteration}: sigma={params.sigma:.5f} (change {sigma_change:.5f}), "
                    f"Laplace objective {laplace.objective:.6f}")
        if params.sigma < config.min_sigma:
            diagnostics['sigma_collapsed'] = True
            logger.warning(f"sigma = {params.sigma:.3e} below {config.min_sigma}; fit stopped")
            break
        if sigma_change < config.scale_change_tolerance or abs(improvement) < config.loglik_tolerance:
            converged = True
            break
        previous_sigma = params.sigma
        previous_objective = laplace.objective

    if not converged:
        logger.warning(f"Fit did not converge within {iteration} of {config.max_outer_iterations} iterations")

    theta_star = np.array(params.theta_prime)
    loglik = laplace_loglik(spec, params, data, config)
    covariance = None
    if compute_covariance:
        try:
            covariance = structural_covariance(spec, params, data, theta_star, config=config)
            diagnostics['covariance_pseudo_inverse'] = covariance.pseudo_inverse
        except (RaterCapabilityError, np.linalg.LinAlgError) as e:
            logger.error(f"Structural covariance failed: {e}", exc_info=True)
            diagnostics['covariance_error'] = str(e)

    params = _standardize_abilities(params)
    violations = params.constraint_violations(tol=1e-6, rho_max_scaled=spec.family is ModelFamily.GMF
                                              and not diagnostics['rho_scale_skipped'])
    if violations:
        logger.warning(f"Constraint violations after fit: {violations}")
        diagnostics['constraint_violations'] = violations

    logger.info(f"Fit finished: {iteration} iterations, converged={converged}, sigma={params.sigma:.4f}, "
                f"Laplace log-likelihood {loglik:.4f}")
    return FitResult(
        spec=spec,
        params=params,
        laplace_loglik=loglik,
        iterations=iteration,
        converged=converged,
        student_ids=data.student_ids,
        rater_ids=data.rater_ids,
        item_ids=data.item_ids,
        history=history,
        diagnostics=diagnostics,
        covariance=covariance,
    )
