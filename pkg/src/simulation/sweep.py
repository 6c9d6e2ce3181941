"""Capability as a function of rater severity: regenerate, refit and summarise per grid point"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.analysis.capability_index import RaterParameters, kappa_bar, kappa_bars
from src.core.config import FitConfig, StudyConfig
from src.core.exceptions import ConfigurationError, RaterCapabilityError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily, ModelSpec
from src.estimation.fitter import fit
from src.simulation.designs import StudyDesign
from src.simulation.generator import simulate_dataset

logger = get_logger(__name__)

SWEEP_COLUMNS = ['group', 'rater', 'eta', 'kappa_bar_true', 'kappa_bar_median', 'q25', 'q75',
                 'n_success', 'n_failed']


def eta_grid(eta_min: float = -2.5, eta_max: float = 2.5, step: float = 0.1) -> np.ndarray:
    """Inclusive grid from eta_min to eta_max, rounded to remove accumulation error"""
    if step <= 0 or eta_max < eta_min:
        raise ConfigurationError("eta grid needs step > 0 and eta_max >= eta_min")
    count = int(np.floor((eta_max - eta_min) / step + 1e-9)) + 1
    return np.round(eta_min + step * np.arange(count), 10)


@dataclass(frozen=True, eq=False)
class SweepResult:
    table: pd.DataFrame
    refit: bool
    replications: int

    def curve(self, rater: str, group: Optional[str] = None) -> pd.DataFrame:
        rows = self.table[self.table['rater'] == rater]
        if group is not None:
            rows = rows[rows['group'] == group]
        return rows.sort_values('eta').reset_index(drop=True)


def _sweep_point(design: StudyDesign, rater: int, grid_index: int, eta: float, replication: int,
                 fit_config: FitConfig) -> float:
    """Estimated kappa_bar of one rater after regenerating with its severity set to eta; NaN on failure"""
    truth = design.true_params
    shifted = truth.replace(eta=np.where(np.arange(truth.n_raters) == rater, eta, truth.eta))
    data = simulate_dataset(shifted, design, replication=replication, stream=(rater, grid_index))
    spec = ModelSpec.default(ModelFamily.GMF)
    try:
        result = fit(spec, data, fit_config, compute_covariance=False)
    except (RaterCapabilityError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        logger.error(f"Sweep fit failed (rater {design.rater_ids[rater]}, eta={eta:.2f}, "
                     f"replication {replication}): {e}", exc_info=True)
        return np.nan
    params = result.params
    return float(kappa_bars(spec, params.rho[rater:rater + 1], params.eta[rater:rater + 1], params.sigma)[0])


def run_severity_sweep(design: StudyDesign, grid: Sequence[float], config: StudyConfig = StudyConfig(),
                       fit_config: FitConfig = FitConfig(), raters: Optional[Sequence[str]] = None) -> SweepResult:
    """
    kappa_bar of each rater as its severity moves along the grid

    For every rater and grid value the rater's eta is replaced in the
    generating truth. With ``config.refit`` the data are regenerated
    ``design.replications`` times and refitted with the GMF, and the
    median and quartiles of the estimated kappa_bar are reported; without
    it the table holds the true-parameter curve only.

    Args:
        design: Generating design
        grid: Severity values
        config: Refit flag and worker count
        fit_config: Estimation settings
        raters: Rater identifiers to sweep (all by default)

    Returns:
        SweepResult with one row per (rater, eta)

    Raises:
        ConfigurationError: If the grid is empty or a rater is unknown
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("Severity grid is empty")
    names = list(design.rater_ids) if raters is None else list(raters)
    unknown = [r for r in names if r not in design.rater_ids]
    if unknown:
        raise ConfigurationError(f"Unknown raters {unknown} in sweep")
    indices = [design.rater_ids.index(r) for r in names]
    truth = design.true_params
    gmf = ModelSpec.default(ModelFamily.GMF)
    logger.info(f"Severity sweep on {design.name}: {len(indices)} raters x {grid.size} grid points, "
                f"refit={config.refit}, replications={design.replications if config.refit else 0}")

    estimates = {}
    if config.refit:
        tasks = [(r, g, rep) for r in indices for g in range(grid.size) for rep in range(design.replications)]
        values = Parallel(n_jobs=config.n_jobs)(
            delayed(_sweep_point)(design, r, g, float(grid[g]), rep, fit_config) for r, g, rep in tasks
        )
        for (r, g, _rep), value in zip(tasks, values):
            estimates.setdefault((r, g), []).append(value)

    rows: List[dict] = []
    for r in indices:
        for g, eta in enumerate(grid):
            true_value = kappa_bar(gmf, RaterParameters(rater_id=design.rater_ids[r], rho=float(truth.rho[r]),
                                                        eta=float(eta)), truth.sigma)
            if config.refit:
                sample = np.asarray(estimates[(r, g)], dtype=float)
                finite = sample[np.isfinite(sample)]
                if finite.size:
                    q25, median, q75 = np.percentile(finite, [25, 50, 75])
                else:
                    q25 = median = q75 = np.nan
                n_success, n_failed = int(finite.size), int(sample.size - finite.size)
            else:
                q25 = median = q75 = true_value
                n_success = n_failed = 0
            rows.append({
                'group': design.group or design.name,
                'rater': design.rater_ids[r],
                'eta': float(eta),
                'kappa_bar_true': float(true_value),
                'kappa_bar_median': float(median),
                'q25': float(q25),
                'q75': float(q75),
                'n_success': n_success,
                'n_failed': n_failed,
            })
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    failed = int(table['n_failed'].sum())
    if failed:
        logger.warning(f"Severity sweep on {design.name}: {failed} fits failed")
    return SweepResult(table=table, refit=config.refit, replications=design.replications if config.refit else 0)
