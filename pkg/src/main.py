"""Command-line entry point"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src import __version__
from src.analysis.appendix_verifier import verify_appendix_properties
from src.analysis.capability_index import CapabilityAnalyzer
from src.core.config import RunConfig, load_run_config, merge_overrides
from src.core.exceptions import (ConfigurationError, CovarianceError, DataValidationError, IdentifiabilityError,
                                 ParameterError, QuadratureError, ReportWriteError)
from src.core.interfaces.renderer import RenderConfig
from src.core.logging_config import get_logger, setup_logging
from src.core.models.parameters import ModelFamily
from src.pipeline.empirical import fit_spec, run_empirical_pipeline
from src.reporting.reports import (appendix_bundle, capability_bundle, emit_reports, load_rater_parameters,
                                   recovery_bundle, sweep_bundle)
from src.simulation.designs import ESSAY_TOPICS, generate_study1_truth, generate_study2_design
from src.simulation.recovery import run_recovery
from src.simulation.sweep import eta_grid, run_severity_sweep
from src.visualization.renderers.kappa_curve_renderer import KappaCurveRenderer
from src.visualization.renderers.plotly_sweep_renderer import PlotlySweepRenderer

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

COMMANDS = ('fit', 'capability', 'simulate-study1', 'simulate-study2', 'verify-appendix')


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per run type"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON configuration file; flags override its values')
    common.add_argument('--out', dest='output_dir', help='Output directory')
    common.add_argument('--seed', type=int, help='Random seed')
    common.add_argument('--plots', action='store_true', default=None, help='Also write figures')
    common.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    common.add_argument('--log-dir', help='Directory for log files (default: ./logs)')
    common.add_argument('--no-log-file', action='store_true', help='Log to the console only')

    parser = argparse.ArgumentParser(prog='rater-capability',
                                     description='Rater capability estimation, simulation and reporting')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    fit = commands.add_parser('fit', parents=[common], help='Fit a rating file and report rater capability')
    fit.add_argument('--input', dest='input_path', help='Rating file (csv, tsv, txt or parquet)')
    fit.add_argument('--family', type=str.upper, choices=['GMF', 'TFM'])
    fit.add_argument('--link', choices=['logit', 'probit', 'cauchit', 'log', 'cloglog'])
    fit.add_argument('--threshold', type=float, help='Scores at or above the threshold count as 1')
    fit.add_argument('--group-by', dest='group_by', help='Column that splits the file into separate fits')
    fit.add_argument('--delimiter', choices=[',', 'tab'], help='Field delimiter (detected when omitted)')
    fit.add_argument('--max-iter', dest='fit.max_outer_iterations', type=int, help='Outer iteration limit')

    capability = commands.add_parser('capability', parents=[common],
                                     help='Capability indices from a table of rater parameters')
    capability.add_argument('--params', dest='params_path', help='Rater parameter table')
    capability.add_argument('--family', type=str.upper, choices=[f.value for f in ModelFamily])
    capability.add_argument('--link', choices=['logit', 'probit', 'cauchit', 'log', 'cloglog'])
    capability.add_argument('--sigma', type=float, help='Ability standard deviation')
    capability.add_argument('--hrm-sign', dest='hrm_sign_convention', choices=['sdt_standard', 'as_printed'])

    study1 = commands.add_parser('simulate-study1', parents=[common], help='Parameter-recovery study')
    study1.add_argument('--reps', dest='study.replications', type=int, help='Replications')
    study1.add_argument('--n-jobs', dest='study.n_jobs', type=int, help='Parallel workers')
    study1.add_argument('--families', nargs='+', type=str.upper, choices=['GMF', 'TFM'])
    study1.add_argument('--no-refit', dest='study.refit', action='store_false', default=None,
                        help='Use the true parameters instead of refitting')

    study2 = commands.add_parser('simulate-study2', parents=[common], help='Capability against rater severity')
    study2.add_argument('--eta-min', dest='study.eta_min', type=float)
    study2.add_argument('--eta-max', dest='study.eta_max', type=float)
    study2.add_argument('--eta-step', dest='study.eta_step', type=float)
    study2.add_argument('--reps', dest='study.replications', type=int, help='Replications per grid point')
    study2.add_argument('--n-jobs', dest='study.n_jobs', type=int, help='Parallel workers')
    study2.add_argument('--topics', nargs='+', choices=list(ESSAY_TOPICS), help='Topics to sweep (default: all)')
    study2.add_argument('--raters', nargs='+', help='Raters to sweep (default: all)')
    study2.add_argument('--no-refit', dest='study.refit', action='store_false', default=None,
                        help='Only compute the true-parameter curves')

    commands.add_parser('verify-appendix', parents=[common], help='Numerically verify the supremum properties')
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Configuration file (if any) with the command-line flags applied on top"""
    config = load_run_config(args.config) if args.config else RunConfig()
    values: Dict[str, Any] = dict(vars(args))
    for key in ('config', 'command', 'log_level', 'log_dir', 'no_log_file', 'topics', 'raters', 'families'):
        values.pop(key, None)
    if values.get('delimiter') == 'tab':
        values['delimiter'] = '\t'
    seed = values.pop('seed', None)
    if seed is not None:
        values['fit.seed'] = seed
        values['study.seed'] = seed
    if getattr(args, 'families', None):
        values['study.families'] = tuple(args.families)
    return merge_overrides(config, values)


def _write_figure(renderer, data, config: RenderConfig, path: Path, **kwargs) -> None:
    figure = renderer.render(data, config, **kwargs)
    renderer.save(figure, str(path))
    logger.info(f"Figure written: {path}")


def run_fit(config: RunConfig) -> int:
    if not config.input_path:
        raise ConfigurationError("fit needs --input")
    result = run_empirical_pipeline(config)
    if result.failures:
        logger.warning(f"Groups with failed fits: {sorted(result.failures)}")
    if result.failures or not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def run_capability(config: RunConfig) -> int:
    if not config.params_path:
        raise ConfigurationError("capability needs --params")
    spec = fit_spec(config)
    frame = load_rater_parameters(config.params_path, spec.family)
    grid = np.linspace(config.theta_min, config.theta_max, config.theta_points)
    analyzer = CapabilityAnalyzer(spec)
    result = analyzer.analyze(frame, sigma=config.sigma, theta_grid=grid)
    table, curves = result.get_metric('table'), result.get_metric('curves')
    outdir = Path(config.output_dir)
    emit_reports(capability_bundle(table, curves, spec.family, config.sigma), outdir)
    if config.plots:
        _write_figure(KappaCurveRenderer(), curves, RenderConfig(title='Capability curves'),
                      outdir / 'curves.png', analysis_result=result)
    return EXIT_OK


def run_study1(config: RunConfig) -> int:
    study = config.study
    design = generate_study1_truth(study.seed).configured(study)
    metrics = run_recovery(design, study, config.fit)
    emit_reports(recovery_bundle(metrics, design.name), config.output_dir)
    return EXIT_NOT_CONVERGED if any(m.failures for m in metrics.values()) else EXIT_OK


def run_study2(config: RunConfig, topics: Optional[List[str]] = None, raters: Optional[List[str]] = None) -> int:
    study = config.study
    grid = eta_grid(study.eta_min, study.eta_max, study.eta_step)
    sweeps = []
    for topic in topics or ESSAY_TOPICS:
        design = generate_study2_design(topic, study.seed, study.replications)
        sweeps.append(run_severity_sweep(design, grid, study, config.fit, raters))
    bundle = sweep_bundle(sweeps)
    outdir = Path(config.output_dir)
    emit_reports(bundle, outdir)
    if config.plots:
        renderer = PlotlySweepRenderer()
        for sweep in sweeps:
            group = str(sweep.table['group'].iloc[0])
            _write_figure(renderer, sweep.table, RenderConfig(title=f'kappa_bar against severity: {group}'),
                          outdir / f'sweep_{group}.html', group=group)
    return EXIT_NOT_CONVERGED if bundle.summary['n_failed'] else EXIT_OK


def run_verify_appendix(config: RunConfig) -> int:
    report = verify_appendix_properties()
    emit_reports(appendix_bundle(report), config.output_dir)
    if not report.passed:
        logger.error(f"Failed checks: {[c.name for c in report.checks if not c.passed]}")
    return EXIT_OK if report.passed else EXIT_NOT_CONVERGED


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the sub-command and return its exit code

    Exit codes: 0 success, 2 invalid input or configuration, 3 results
    written but a fit failed or did not converge, 4 output could not be
    written.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(log_level=getattr(logging, args.log_level), log_to_file=not args.no_log_file,
                  log_dir=args.log_dir)
    logger.info("=" * 60)
    logger.info(f"rater-capability {__version__}: {args.command}")
    logger.info(f"Python version: {sys.version.split()[0]}")
    logger.info("=" * 60)

    try:
        config = resolve_config(args)
        if args.command == 'fit':
            code = run_fit(config)
        elif args.command == 'capability':
            code = run_capability(config)
        elif args.command == 'simulate-study1':
            code = run_study1(config)
        elif args.command == 'simulate-study2':
            code = run_study2(config, args.topics, args.raters)
        else:
            code = run_verify_appendix(config)
    except ReportWriteError as e:
        logger.error(f"Output error: {e}", exc_info=True)
        return EXIT_IO
    except (ConfigurationError, DataValidationError, ParameterError, IdentifiabilityError,
            CovarianceError, QuadratureError, FileNotFoundError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        return EXIT_IO

    logger.info(f"Finished {args.command} with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
