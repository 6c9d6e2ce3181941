"""Configuration objects and JSON configuration loading"""
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from src.core.exceptions import ConfigurationError
from src.core.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class FitConfig:
    """Settings of the five-step hierarchical-likelihood fit"""
    max_outer_iterations: int = 10
    scale_change_tolerance: float = 0.01
    loglik_tolerance: float = 1e-6
    inner_newton_tolerance: float = 1e-8
    inner_max_steps: int = 100
    block_ascent_tolerance: float = 1e-6
    block_ascent_max_sweeps: int = 20
    ridge: float = 1e-6
    separation_bound: float = 8.0
    min_rho_scale: float = 1e-3
    min_sigma: float = 1e-2
    optimizer_max_iterations: int = 500
    analytic_gradient: bool = True
    seed: int = 0

    def __post_init__(self):
        positive = ('scale_change_tolerance', 'loglik_tolerance', 'inner_newton_tolerance',
                    'block_ascent_tolerance', 'separation_bound', 'min_rho_scale', 'min_sigma')
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ('max_outer_iterations', 'inner_max_steps', 'block_ascent_max_sweeps',
                     'optimizer_max_iterations'):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.ridge < 0:
            raise ConfigurationError(f"ridge must be non-negative, got {self.ridge}")


@dataclass(frozen=True)
class StudyConfig:
    """Settings of a simulation study run"""
    replications: int = 200
    n_jobs: int = 1
    seed: int = 20240101
    eta_min: float = -2.5
    eta_max: float = 2.5
    eta_step: float = 0.1
    refit: bool = True
    families: Tuple[str, ...] = ('GMF', 'TFM')

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError(f"replications must be at least 1, got {self.replications}")
        if self.eta_step <= 0 or self.eta_max < self.eta_min:
            raise ConfigurationError("eta grid needs eta_step > 0 and eta_max >= eta_min")
        object.__setattr__(self, 'families', tuple(str(f).upper() for f in self.families))


@dataclass(frozen=True)
class RunConfig:
    """Command-level settings gathered from a JSON file and command-line flags"""
    input_path: Optional[str] = None
    output_dir: str = 'results'
    family: str = 'GMF'
    link: str = 'logit'
    threshold: float = 1.0
    group_by: Optional[str] = None
    delimiter: Optional[str] = None
    sigma: float = 1.0
    params_path: Optional[str] = None
    theta_min: float = -5.0
    theta_max: float = 5.0
    theta_points: int = 201
    plots: bool = False
    hrm_sign_convention: str = 'sdt_standard'
    fit: FitConfig = field(default_factory=FitConfig)
    study: StudyConfig = field(default_factory=StudyConfig)

    def __post_init__(self):
        if self.theta_points < 2 or self.theta_max <= self.theta_min:
            raise ConfigurationError("theta grid needs at least two points and theta_max > theta_min")
        if self.sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _build(cls, values: Dict[str, Any], section: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"Unknown keys in {section}: {unknown}")
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"Invalid {section} settings: {e}") from e


def run_config_from_dict(document: Dict[str, Any]) -> RunConfig:
    """Build a RunConfig from a parsed configuration document"""
    if not isinstance(document, dict):
        raise ConfigurationError("Configuration document must be a JSON object")
    values = dict(document)
    fit = _build(FitConfig, values.pop('fit', {}) or {}, 'fit')
    study_values = dict(values.pop('study', {}) or {})
    if 'families' in study_values:
        study_values['families'] = tuple(study_values['families'])
    study = _build(StudyConfig, study_values, 'study')
    return _build(RunConfig, {**values, 'fit': fit, 'study': study}, 'configuration')


def load_run_config(path) -> RunConfig:
    """
    Load a JSON configuration document

    Args:
        path: Path to the JSON file

    Returns:
        RunConfig populated from the file

    Raises:
        ConfigurationError: If the file is missing, unparsable or has unknown keys
    """
    path = Path(path)
    logger.info(f"Loading configuration: {path}")
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as e:
        raise ConfigurationError(f"Configuration file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Configuration file {path} is not valid JSON: {e}") from e
    return run_config_from_dict(document)


def merge_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """
    Apply command-line overrides; ``None`` values are ignored

    Keys prefixed with ``fit.`` or ``study.`` address the nested sections.
    """
    top, fit, study = {}, {}, {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith('fit.'):
            fit[key[4:]] = value
        elif key.startswith('study.'):
            study[key[6:]] = value
        else:
            top[key] = value
    try:
        if fit:
            top['fit'] = replace(config.fit, **fit)
        if study:
            top['study'] = replace(config.study, **study)
        merged = replace(config, **top)
    except TypeError as e:
        raise ConfigurationError(f"Invalid override: {e}") from e
    logger.debug(f"Configuration after overrides: {merged}")
    return merged
