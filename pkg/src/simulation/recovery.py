"""Parameter-recovery harness: replicate, fit and summarise bias and RMSE"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from src.analysis.capability_index import kappa_bars
from src.core.config import FitConfig, StudyConfig
from src.core.exceptions import ConfigurationError, RaterCapabilityError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.estimation.fitter import fit
from src.simulation.designs import StudyDesign
from src.simulation.generator import simulate_dataset

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ReplicationEstimate:
    """Estimates of one family in one replication; ``error`` is set when the fit failed"""
    replication: int
    family: ModelFamily
    sigma: float = np.nan
    rho: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    delta: Optional[np.ndarray] = None
    alpha: float = np.nan
    theta: Optional[np.ndarray] = None
    kappa_bar: Optional[np.ndarray] = None
    converged: bool = False
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True, eq=False)
class RecoveryMetrics:
    """
    Bias and RMSE of one fitted family across replications

    ``*_rmse`` is the spread of the estimates about their replication mean,
    ``*_rmse_truth`` the root mean square error about the true value.
    """
    family: ModelFamily
    replications: int
    successes: int
    raters: pd.DataFrame
    items: pd.DataFrame
    students: pd.DataFrame
    scale: Dict[str, float]
    failures: List[Tuple[int, str]] = field(default_factory=list)
    non_converged: int = 0

    @property
    def n_failed(self) -> int:
        return len(self.failures)


def bias_and_rmse(estimates: np.ndarray, truth: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Column-wise summaries of a (replications, parameters) array of estimates

    Returns:
        dict with ``bias`` (mean of estimate - truth), ``rmse`` (spread about
        the replication mean) and ``rmse_truth`` (about the truth)
    """
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.asarray(truth, dtype=float)
    if estimates.shape[0] == 0:
        empty = np.full(truth.shape, np.nan)
        return {'bias': empty, 'rmse': empty.copy(), 'rmse_truth': empty.copy()}
    mean = estimates.mean(axis=0)
    return {
        'bias': mean - truth,
        'rmse': np.sqrt(np.mean((estimates - mean) ** 2, axis=0)),
        'rmse_truth': np.sqrt(np.mean((estimates - truth) ** 2, axis=0)),
    }


def _summary_columns(prefix: str, estimates: np.ndarray, truth: np.ndarray) -> Dict[str, np.ndarray]:
    summary = bias_and_rmse(estimates, truth)
    return {f'{prefix}_{name}': values for name, values in summary.items()}


def true_kappa_bars(design: StudyDesign, params: Optional[ParameterSet] = None) -> np.ndarray:
    params = params or design.true_params
    return kappa_bars(design.true_spec, params.rho, params.eta, params.sigma)


def _truth_estimate(design: StudyDesign, family: ModelFamily, replication: int) -> ReplicationEstimate:
    truth = design.true_params
    rho = np.ones(truth.n_raters) if family is ModelFamily.TFM else np.array(truth.rho)
    return ReplicationEstimate(
        replication=replication, family=family, sigma=truth.sigma, rho=rho, eta=np.array(truth.eta),
        delta=np.array(truth.delta), alpha=truth.alpha, theta=np.array(truth.theta),
        kappa_bar=true_kappa_bars(design), converged=True,
    )


def run_replication(design: StudyDesign, replication: int, fit_config: FitConfig,
                    refit: bool = True) -> List[ReplicationEstimate]:
    """Generate one data set and fit every family of the design to it"""
    if not refit:
        return [_truth_estimate(design, family, replication) for family in design.fit_families]

    data = simulate_dataset(design.true_params, design, replication=replication)
    outcomes = []
    for family in design.fit_families:
        spec = ModelSpec.default(family)
        try:
            result = fit(spec, data, fit_config, compute_covariance=False)
        except (RaterCapabilityError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.error(f"Replication {replication} {family.value} fit failed: {e}", exc_info=True)
            outcomes.append(ReplicationEstimate(replication=replication, family=family, error=str(e)))
            continue
        params = result.params
        outcomes.append(ReplicationEstimate(
            replication=replication,
            family=family,
            sigma=params.sigma,
            rho=np.array(params.rho),
            eta=np.array(params.eta),
            delta=np.array(params.delta),
            alpha=params.alpha,
            theta=np.array(params.theta),
            kappa_bar=kappa_bars(spec, params.rho, params.eta, params.sigma),
            converged=result.converged,
        ))
    return outcomes


def _theta_slope(theta_hat: np.ndarray, theta: np.ndarray) -> float:
    if np.ptp(theta) == 0.0:
        return np.nan
    return float(stats.linregress(theta, theta_hat).slope)


def summarize_recovery(design: StudyDesign, family: ModelFamily,
                       outcomes: List[ReplicationEstimate]) -> RecoveryMetrics:
    """Aggregate the replications of one family, excluding failed fits"""
    truth = design.true_params
    ok = [o for o in outcomes if not o.failed]
    failures = [(o.replication, o.error) for o in outcomes if o.failed]

    def stack(name: str, width: int) -> np.ndarray:
        if not ok:
            return np.empty((0, width))
        return np.vstack([getattr(o, name) for o in ok])

    kappa_true = true_kappa_bars(design)
    kappa = stack('kappa_bar', truth.n_raters)
    raters = {'rater': list(design.rater_ids), 'true_rho': np.array(truth.rho), 'true_eta': np.array(truth.eta),
              'true_kappa_bar': kappa_true}
    if family is ModelFamily.GMF:
        raters.update(_summary_columns('rho', stack('rho', truth.n_raters), truth.rho))
    raters.update(_summary_columns('eta', stack('eta', truth.n_raters), truth.eta))
    raters.update(_summary_columns('kappa_bar', kappa, kappa_true))
    if ok:
        q25, median, q75 = np.percentile(kappa, [25, 50, 75], axis=0)
    else:
        q25 = median = q75 = np.full(truth.n_raters, np.nan)
    raters.update({'kappa_bar_median': median, 'kappa_bar_q25': q25, 'kappa_bar_q75': q75})

    items = {'item': list(design.item_ids), 'true_delta': np.array(truth.delta)}
    items.update(_summary_columns('delta', stack('delta', truth.n_items), truth.delta))

    students = {'student': list(design.student_ids), 'true_theta': np.array(truth.theta)}
    students.update(_summary_columns('theta', stack('theta', truth.n_students), truth.theta))

    sigma = bias_and_rmse(np.array([[o.sigma] for o in ok]).reshape(len(ok), 1), np.array([truth.sigma]))
    alpha = bias_and_rmse(np.array([[o.alpha] for o in ok]).reshape(len(ok), 1), np.array([truth.alpha]))
    slopes = [_theta_slope(o.theta, truth.theta) for o in ok]
    scale = {
        'sigma_true': truth.sigma,
        'sigma_mean': float(np.mean([o.sigma for o in ok])) if ok else np.nan,
        'sigma_bias': float(sigma['bias'][0]),
        'sigma_rmse': float(sigma['rmse'][0]),
        'sigma_rmse_truth': float(sigma['rmse_truth'][0]),
        'alpha_true': truth.alpha,
        'alpha_bias': float(alpha['bias'][0]),
        'alpha_rmse': float(alpha['rmse'][0]),
        'theta_slope': float(np.nanmean(slopes)) if ok else np.nan,
    }
    return RecoveryMetrics(
        family=family,
        replications=len(outcomes),
        successes=len(ok),
        raters=pd.DataFrame(raters),
        items=pd.DataFrame(items),
        students=pd.DataFrame(students),
        scale=scale,
        failures=failures,
        non_converged=sum(1 for o in ok if not o.converged),
    )


def run_recovery(design: StudyDesign, config: StudyConfig = StudyConfig(),
                 fit_config: FitConfig = FitConfig()) -> Dict[ModelFamily, RecoveryMetrics]:
    """
    Replicate the design, fit each family and summarise recovery

    Replications run through joblib with ``config.n_jobs`` workers; results
    are reduced in replication order, so the metrics do not depend on the
    number of workers. With ``config.refit`` False the true parameters
    stand in for the estimates.

    Args:
        design: Study design (replication count and families included)
        config: Worker count and refit flag
        fit_config: Estimation settings

    Returns:
        RecoveryMetrics per fitted family

    Raises:
        ConfigurationError: If fewer than two replications are requested
    """
    if design.replications < 2:
        raise ConfigurationError(f"Recovery needs at least two replications, got {design.replications}")
    logger.info(f"Running {design.name}: {design.replications} replications, families "
                f"{[f.value for f in design.fit_families]}, n_jobs={config.n_jobs}, refit={config.refit}")
    per_replication = Parallel(n_jobs=config.n_jobs)(
        delayed(run_replication)(design, rep, fit_config, config.refit) for rep in range(design.replications)
    )

    metrics = {}
    for family in design.fit_families:
        outcomes = [o for batch in per_replication for o in batch if o.family is family]
        summary = summarize_recovery(design, family, outcomes)
        if summary.failures:
            logger.warning(f"{family.value}: {summary.n_failed} of {summary.replications} replications failed")
        logger.info(f"{family.value}: {summary.successes} successful fits, sigma bias "
                    f"{summary.scale['sigma_bias']:.4f}, theta slope {summary.scale['theta_slope']:.3f}")
        metrics[family] = summary
    return metrics
