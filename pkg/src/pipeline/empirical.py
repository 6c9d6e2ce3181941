"""Empirical pipeline: ingest, fit per group, capability, validation and reports"""
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

from src.analysis.point_biserial_analyzer import point_biserial_validation
from src.core.config import RunConfig
from src.core.exceptions import ConfigurationError, RaterCapabilityError
from src.core.interfaces.analyzer import AnalysisResult
from src.core.interfaces.renderer import RenderConfig
from src.core.logging_config import get_logger
from src.core.models.links import LinkKind, get_link
from src.core.models.parameters import ModelFamily, ModelSpec
from src.data.ingest import ALL_GROUP, ingest
from src.estimation.fitter import fit
from src.reporting.reports import (EstimateTable, ReportBundle, build_estimate_table, emit_reports, fit_bundle,
                                   group_means_bundle)
from src.visualization.renderers.kappa_curve_renderer import KappaCurveRenderer

logger = get_logger(__name__)


@dataclass
class PipelineResult:
    tables: Dict[str, EstimateTable] = field(default_factory=dict)
    validations: Dict[str, AnalysisResult] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)
    written: List[Path] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(t.converged for t in self.tables.values())


def group_directory(outdir: Path, group: str) -> Path:
    if group == ALL_GROUP:
        return outdir
    return outdir / re.sub(r'[^A-Za-z0-9._-]+', '_', group)


def fit_spec(config: RunConfig) -> ModelSpec:
    """Model specification named by the run configuration"""
    try:
        family = ModelFamily(config.family.upper())
        link = LinkKind.PROBIT if family is ModelFamily.PROBIT else LinkKind(config.link.lower())
        return ModelSpec(family=family, link=get_link(link), hrm_sign_convention=config.hrm_sign_convention)
    except ValueError as e:
        raise ConfigurationError(f"Invalid model specification: {e}") from e


def run_empirical_pipeline(config: RunConfig) -> PipelineResult:
    """
    Fit every group of a rating file and write its estimate tables

    A group whose fit fails is recorded in ``failures`` and the remaining
    groups are still processed. Each group writes to its own subdirectory
    of the output directory; the cross-group summary goes to the top level.

    Args:
        config: Run settings (input path, threshold, grouping, family, fit settings)

    Returns:
        PipelineResult with per-group tables, validations and written files

    Raises:
        DataValidationError: If the file cannot be ingested
        ReportWriteError: If an output file cannot be written
    """
    spec = fit_spec(config)
    if spec.family not in (ModelFamily.TFM, ModelFamily.GMF):
        raise ConfigurationError(f"Empirical fits support TFM and GMF, not {spec.family.value}")
    datasets = ingest(config.input_path, config.threshold, config.group_by, config.delimiter)
    outdir = Path(config.output_dir)
    theta_grid = np.linspace(config.theta_min, config.theta_max, config.theta_points)
    result = PipelineResult()

    for group, data in datasets.items():
        logger.info(f"Fitting group {group!r}")
        try:
            fitted = fit(spec, data, config.fit)
        except (RaterCapabilityError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.error(f"Fit failed for group {group!r}: {e}", exc_info=True)
            result.failures[group] = str(e)
            continue

        table = build_estimate_table(fitted, data, group, theta_grid)
        validation = point_biserial_validation(data, fitted.natural_theta)
        result.tables[group] = table
        result.validations[group] = validation

        bundle = fit_bundle(table)
        bundle.tables['point_biserial'] = validation.get_metric('correlations')
        bundle.summary['point_biserial_means'] = validation.get_metric('rater_means')
        directory = group_directory(outdir, group)
        result.written.extend(emit_reports(bundle, directory))
        if config.plots:
            renderer = KappaCurveRenderer()
            figure = renderer.render(table.curves, RenderConfig(title=f'Capability curves: {group}'))
            path = directory / 'curves.png'
            renderer.save(figure, str(path))
            result.written.append(path)
        logger.info(f"Group {group!r}: sigma={table.sigma:.3f}, mean kappa_bar={table.mean_kappa_bar:.3f}")

    if len(datasets) > 1 or result.failures:
        summary: ReportBundle = group_means_bundle(result.tables, result.failures)
        result.written.extend(emit_reports(summary, outdir, summary_name='group_summary.json'))
    return result
