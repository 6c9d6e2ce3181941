"""Estimate tables and the report bundles written by the command-line runs"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from src.analysis.appendix_verifier import AppendixReport
from src.analysis.capability_index import CapabilityAnalyzer, CapabilityMethod
from src.core.exceptions import CovarianceError, DataValidationError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily
from src.core.models.ratings import RatingDataset
from src.estimation.fitter import FitResult
from src.data.ingest import source_for
from src.reporting.writers import write_json, write_table
from src.simulation.recovery import RecoveryMetrics
from src.simulation.sweep import SweepResult

logger = get_logger(__name__)

ESTIMATE_COLUMNS = ['rater', 'n_ratings', 'sum_score', 'rho', 'eta', 'kappa_bar', 'kappa_bar_se']
ITEM_COLUMNS = ['item', 'delta', 'delta_se']
CURVE_COLUMNS = ['rater', 'theta', 'kappa']
KAPPA_BAR_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class EstimateTable:
    """Per-rater and per-item estimates of one fitted group"""
    group: str
    family: ModelFamily
    raters: pd.DataFrame
    items: pd.DataFrame
    sigma: float
    alpha: float
    converged: bool
    laplace_loglik: float
    curves: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=CURVE_COLUMNS))
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if list(self.raters.columns) != ESTIMATE_COLUMNS:
            raise DataValidationError(f"Estimate table columns must be {ESTIMATE_COLUMNS}")
        kappa = self.raters["kappa_bar"].to_numpy(dtype=float)
        if np.any(kappa < 0.0) or np.any(kappa > 1.0 + KAPPA_BAR_SLACK):
            logger.warning(f"Group {self.group!r}: kappa_bar outside [0, 1] ({kappa.min():.4f}, {kappa.max():.4f})")

    @property
    def mean_kappa_bar(self) -> float:
        return float(self.raters['kappa_bar'].mean())

    def summary(self) -> Dict[str, Any]:
        return {
            'group': self.group,
            'family': self.family,
            'sigma': self.sigma,
            'alpha': self.alpha,
            'converged': self.converged,
            'laplace_loglik': self.laplace_loglik,
            'mean_kappa_bar': self.mean_kappa_bar,
            'n_raters': len(self.raters),
            'n_items': len(self.items),
            'diagnostics': self.diagnostics,
        }


def _rater_covariances(result: FitResult) -> Dict[str, np.ndarray]:
    if result.covariance is None:
        return {}
    return {rid: result.covariance.rater_block(r) for r, rid in enumerate(result.rater_ids)}


def build_estimate_table(result: FitResult, data: RatingDataset, group: str = 'all',
                         theta_grid: Optional[np.ndarray] = None,
                         method: CapabilityMethod = CapabilityMethod.CLOSED_FORM) -> EstimateTable:
    """
    Combine fitted parameters, rating counts and capability indices

    Standard errors come from the structural covariance; a rater whose
    block is not positive semidefinite gets a missing standard error.
    """
    params = result.params
    parameter_frame = pd.DataFrame({'rater': list(result.rater_ids), 'rho': params.rho, 'eta': params.eta})
    analyzer = CapabilityAnalyzer(result.spec)
    covariances = _rater_covariances(result)
    try:
        capability = analyzer.analyze(parameter_frame, sigma=params.sigma, theta_grid=theta_grid,
                                      covariances=covariances, method=method)
    except CovarianceError as e:
        logger.warning(f"Group {group!r}: covariance unusable for kappa_bar standard errors ({e})")
        capability = analyzer.analyze(parameter_frame, sigma=params.sigma, theta_grid=theta_grid, method=method)

    counts = data.rater_summary()
    raters = counts.merge(parameter_frame, on='rater', how='left').merge(
        capability.get_metric('table')[['rater', 'kappa_bar', 'kappa_bar_se']], on='rater', how='left')
    raters['kappa_bar_se'] = raters['kappa_bar_se'].astype(float)

    delta_se = np.full(params.n_items, np.nan)
    if result.covariance is not None:
        delta_se = np.array([np.sqrt(max(result.covariance.variance(f'delta[{i}]'), 0.0))
                             for i in result.item_ids])
    items = pd.DataFrame({'item': list(result.item_ids), 'delta': params.delta, 'delta_se': delta_se})

    return EstimateTable(
        group=group,
        family=result.spec.family,
        raters=raters[ESTIMATE_COLUMNS],
        items=items[ITEM_COLUMNS],
        sigma=params.sigma,
        alpha=params.alpha,
        converged=result.converged,
        laplace_loglik=result.laplace_loglik,
        curves=capability.get_metric('curves')[CURVE_COLUMNS],
        diagnostics=dict(result.diagnostics, iterations=result.iterations),
    )


@dataclass
class ReportBundle:
    """Tables (file stem -> frame) and a summary document to be written together"""
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)


def emit_reports(bundle: ReportBundle, outdir, summary_name: str = 'summary.json') -> List[Path]:
    """
    Write every table of the bundle as CSV plus the summary document

    Each file is written to a temporary name and renamed into place.

    Raises:
        ReportWriteError: With the failing path when a write fails
    """
    outdir = Path(outdir)
    written = [write_table(frame, outdir / f'{stem}.csv') for stem, frame in sorted(bundle.tables.items())]
    written.append(write_json(bundle.summary, outdir / summary_name))
    logger.info(f"Wrote {len(written)} report files to {outdir}")
    return written


def fit_bundle(table: EstimateTable) -> ReportBundle:
    summary = table.summary()
    summary['raters'] = table.raters
    summary['items'] = table.items
    return ReportBundle(
        tables={'estimates': table.raters, 'items': table.items, 'curves': table.curves},
        summary=summary,
    )


def group_means_bundle(tables: Mapping[str, EstimateTable], failures: Mapping[str, str]) -> ReportBundle:
    """Cross-group summary: mean kappa_bar per group and the groups that failed"""
    rows = [{'group': g, 'mean_kappa_bar': t.mean_kappa_bar, 'sigma': t.sigma, 'converged': t.converged}
            for g, t in sorted(tables.items())]
    frame = pd.DataFrame(rows, columns=['group', 'mean_kappa_bar', 'sigma', 'converged'])
    return ReportBundle(tables={'group_summary': frame},
                        summary={'groups': frame, 'failed_groups': dict(sorted(failures.items()))})


def capability_bundle(table: pd.DataFrame, curves: pd.DataFrame, family: ModelFamily,
                      sigma: float) -> ReportBundle:
    return ReportBundle(
        tables={'capability': table, 'curves': curves[CURVE_COLUMNS]},
        summary={'family': family, 'sigma': sigma, 'raters': table,
                 'mean_kappa_bar': float(table['kappa_bar'].mean())},
    )


def recovery_bundle(metrics: Mapping[ModelFamily, RecoveryMetrics], design_name: str) -> ReportBundle:
    tables = {}
    summary: Dict[str, Any] = {'design': design_name, 'families': {}}
    for family, m in metrics.items():
        key = family.value.lower()
        tables[f'recovery_raters_{key}'] = m.raters
        tables[f'recovery_items_{key}'] = m.items
        tables[f'recovery_students_{key}'] = m.students
        summary['families'][family.value] = {
            'replications': m.replications,
            'successes': m.successes,
            'non_converged': m.non_converged,
            'failures': [{'replication': rep, 'error': error} for rep, error in m.failures],
            'scale': m.scale,
        }
    return ReportBundle(tables=tables, summary=summary)


def sweep_bundle(sweeps: List[SweepResult]) -> ReportBundle:
    table = pd.concat([s.table for s in sweeps], ignore_index=True)
    refit = all(s.refit for s in sweeps)
    return ReportBundle(
        tables={'sweep': table},
        summary={'refit': refit, 'replications': max(s.replications for s in sweeps),
                 'groups': sorted(table['group'].unique().tolist()), 'n_rows': len(table),
                 'n_failed': int(table['n_failed'].sum())},
    )


def appendix_bundle(report: AppendixReport) -> ReportBundle:
    frame = pd.DataFrame([{'name': c.name, 'passed': c.passed, 'margin': c.margin, 'detail': c.detail}
                          for c in report.checks], columns=['name', 'passed', 'margin', 'detail'])
    return ReportBundle(tables={'appendix_checks': frame},
                        summary={'passed': report.passed, 'checks': frame})


def load_rater_parameters(path, family: ModelFamily = ModelFamily.GMF) -> pd.DataFrame:
    """
    Read a rater parameter table: an estimate table or any table with the family's columns

    Raises:
        DataValidationError: If required columns are missing or not numeric
    """
    required = ['rater', 'criterion', 'slope'] if family is ModelFamily.HRM else ['rater', 'rho', 'eta']
    if family is ModelFamily.TFM:
        required = ['rater', 'eta']
    frame = source_for(str(path)).load(str(path))
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path}: missing rater parameter columns {missing}")
    for column in [c for c in frame.columns if c != 'rater']:
        converted = pd.to_numeric(frame[column], errors='coerce')
        if column in required and converted.isna().any():
            raise DataValidationError(f"{path}: column {column!r} must be numeric without missing values")
        if not (converted.isna() & frame[column].notna()).any():
            frame[column] = converted
    if family is ModelFamily.TFM and 'rho' not in frame.columns:
        frame['rho'] = 1.0
    return frame
