"""Rater capability index: normalising constants, capability curves and their averages"""
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from src.analysis.quadrature import QuadratureRule, gauss_hermite_rule, integrate_against_normal
from src.core.exceptions import CovarianceError, ParameterError
from src.core.interfaces.analyzer import AnalysisResult, IAnalyzer
from src.core.logging_config import get_logger
from src.core.models.links import LinkFunction, LinkKind
from src.core.models.parameters import HrmSignConvention, ModelFamily, ModelSpec

logger = get_logger(__name__)

FIXED_POINT_TOLERANCE = 1e-10
FIXED_POINT_MAX_ITERATIONS = 100
GRADIENT_STEP = 1e-5

_LOGIT = LinkFunction(LinkKind.LOGIT)


class CapabilityMethod(str, Enum):
    CLOSED_FORM = 'closed_form'
    QUADRATURE = 'quadrature'
    ANALYTIC = 'analytic'


@dataclass(frozen=True)
class DeltaConstant:
    """Normalising constant: supremum over rater parameters of the averaged ability slope"""
    family: ModelFamily
    sigma: float
    value: float
    computed_by: CapabilityMethod
    analytic: Optional[float] = None


@dataclass(frozen=True)
class RaterParameters:
    """
    Rater-level parameters entering the capability index

    TFM and GMF use (rho, eta); PROBIT uses (rho, eta) with
    sigma_r = sqrt(1/rho^2 - 1); HRM uses (criterion, slope).
    """
    rater_id: str = ''
    rho: float = 1.0
    eta: float = 0.0
    criterion: float = 0.0
    slope: float = 0.0

    def __post_init__(self):
        for name in ('rho', 'eta', 'criterion', 'slope'):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite for rater {self.rater_id!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho} for rater {self.rater_id!r}")

    @classmethod
    def probit(cls, noise_scale: float, threshold: float, rater_id: str = '') -> 'RaterParameters':
        """PROBIT rater from noise scale sigma_r and threshold alpha_r"""
        if noise_scale <= 0:
            raise ParameterError("PROBIT noise scale must be positive")
        return cls(rater_id=rater_id, rho=1.0 / np.sqrt(1.0 + noise_scale ** 2), eta=threshold / noise_scale)

    @property
    def noise_scale(self) -> float:
        if self.rho <= 0.0:
            return float('inf')
        return float(np.sqrt(max(1.0 / self.rho ** 2 - 1.0, 0.0)))

    @property
    def threshold(self) -> float:
        return self.eta * self.noise_scale


@dataclass(frozen=True, eq=False)
class CapabilityReport:
    """Capability summary of one rater"""
    rater_id: str
    kappa_bar: float
    kappa_bar_variance: Optional[float]
    delta_used: DeltaConstant
    theta_grid: np.ndarray = field(repr=False)
    curve: np.ndarray = field(repr=False)
    method: CapabilityMethod = CapabilityMethod.CLOSED_FORM

    @property
    def kappa_bar_se(self) -> Optional[float]:
        if self.kappa_bar_variance is None:
            return None
        return float(np.sqrt(self.kappa_bar_variance))

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'rater': self.rater_id, 'theta': self.theta_grid, 'kappa': self.curve})


def _logistic_density(x):
    return _LOGIT.pdf(x)


def _expected_density(link: LinkFunction, scale: float, shift: float = 0.0,
                      rule: Optional[QuadratureRule] = None) -> float:
    """E[F'(scale * Z + shift)]"""
    return integrate_against_normal(lambda t: link.pdf(t + shift), scale=scale, rule=rule)


def analytic_delta_gmf(sigma: float) -> float:
    """Analytic approximation 1/4 * sqrt(2 sigma^2 / (2 + sigma^2))"""
    return 0.25 * np.sqrt(2.0 * sigma ** 2 / (2.0 + sigma ** 2))


def delta_tfm(rule: Optional[QuadratureRule] = None) -> DeltaConstant:
    """Normalising constant of the Rasch-type model: E[L'(Z)] (about 0.2066)"""
    value = _expected_density(_LOGIT, 1.0, rule=rule)
    return DeltaConstant(ModelFamily.TFM, 1.0, value, CapabilityMethod.QUADRATURE, analytic_delta_gmf(1.0))


def delta_gmf(sigma: float, rule: Optional[QuadratureRule] = None,
              link: Optional[LinkFunction] = None) -> DeltaConstant:
    """
    Normalising constant of the generalized many-facet model

    The supremum of sigma * rho * E[F'(rho sigma Z - eta)] is attained at
    rho = 1 and eta = 0, giving sigma * E[F'(sigma Z)].
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    link = link or _LOGIT
    value = sigma * _expected_density(link, sigma, rule=rule)
    analytic = analytic_delta_gmf(sigma) if link.kind is LinkKind.LOGIT else None
    return DeltaConstant(ModelFamily.GMF, float(sigma), value, CapabilityMethod.QUADRATURE, analytic)


def delta_probit() -> DeltaConstant:
    """Normalising constant of the probit rater model, 1/sqrt(2 pi)"""
    value = 1.0 / np.sqrt(2.0 * np.pi)
    return DeltaConstant(ModelFamily.PROBIT, 1.0, value, CapabilityMethod.ANALYTIC, value)


def delta_hrm(alpha: float = 0.0, delta: float = 0.0, sigma: float = 1.0,
              link: Optional[LinkFunction] = None, rule: Optional[QuadratureRule] = None) -> DeltaConstant:
    """Level-2 sensitivity sigma * E[F1'(sigma Z - delta + alpha)] shared by all raters"""
    link = link or _LOGIT
    value = sigma * _expected_density(link, sigma, shift=alpha - delta, rule=rule)
    return DeltaConstant(ModelFamily.HRM, float(sigma), value, CapabilityMethod.QUADRATURE)


@lru_cache(maxsize=256)
def _cached_delta_gmf(sigma: float, link_kind: LinkKind) -> float:
    return delta_gmf(sigma, link=LinkFunction(link_kind)).value


def delta_for(spec: ModelSpec, sigma: float = 1.0) -> DeltaConstant:
    """Normalising constant appropriate for a model specification"""
    if spec.family in (ModelFamily.TFM, ModelFamily.GMF):
        value = _cached_delta_gmf(float(sigma), spec.link.kind)
        analytic = analytic_delta_gmf(sigma) if spec.link.kind is LinkKind.LOGIT else None
        return DeltaConstant(spec.family, float(sigma), value, CapabilityMethod.QUADRATURE, analytic)
    if spec.family is ModelFamily.PROBIT:
        return delta_probit()
    return delta_hrm(sigma=sigma, link=spec.link)


def _hrm_rates(spec: ModelSpec, rater: RaterParameters) -> Tuple[float, float]:
    """(F_{2,1}, F_{2,0}) under the configured sign convention"""
    c, a = rater.criterion, rater.slope
    link = spec.level1_link
    if spec.hrm_sign_convention is HrmSignConvention.SDT_STANDARD:
        return float(link.cdf(a - c)), float(link.cdf(-c))
    return float(link.cdf(c - a)), float(link.cdf(c))


def kappa_curve(spec: ModelSpec, rater: RaterParameters, theta_grid: Sequence[float],
                sigma: float = 1.0, rule: Optional[QuadratureRule] = None) -> np.ndarray:
    """
    Capability curve kappa(theta) on a grid of natural-scale abilities

    TFM/GMF: rho sigma F'(rho theta - eta) / Delta(sigma); TFM has rho = 1.
    PROBIT: exp(-S^2 / 2) / sigma_r with S = (theta - alpha_r) / sigma_r.
    HRM: F_{2,1} - F_{2,0}, constant in theta.
    """
    theta = np.asarray(theta_grid, dtype=float)
    family = spec.family
    if family in (ModelFamily.TFM, ModelFamily.GMF):
        rho = 1.0 if family is ModelFamily.TFM else rater.rho
        if rule is None:
            delta = _cached_delta_gmf(float(sigma), spec.link.kind)
        else:
            delta = delta_gmf(sigma, rule=rule, link=spec.link).value
        return rho * sigma * spec.link.pdf(rho * theta - rater.eta) / delta
    if family is ModelFamily.PROBIT:
        noise = rater.noise_scale
        if noise <= 0.0:
            raise ParameterError(f"PROBIT curve undefined for a noise-free rater {rater.rater_id!r}")
        if not np.isfinite(noise):
            return np.zeros_like(theta)
        s = (theta - rater.threshold) / noise
        return np.exp(-0.5 * s * s) / noise
    hit, false_alarm = _hrm_rates(spec, rater)
    return np.full_like(theta, hit - false_alarm)


def solve_fixed_point(rho, eta, sigma) -> np.ndarray:
    """
    Root of x = rho^2 sigma^2 (1 - e^x) / (1 + e^x) + eta

    Vectorised Newton iteration started at eta; elements that fail to
    converge are re-solved by bracketing on [eta - rho^2 sigma^2, eta + rho^2 sigma^2].
    Elements that still fail are returned as NaN.
    """
    rho, eta = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(eta, dtype=float))
    s2 = np.square(rho * sigma)
    x = np.array(eta, dtype=float, copy=True)
    converged = np.zeros(x.shape, dtype=bool)
    for iteration in range(FIXED_POINT_MAX_ITERATIONS):
        half = np.tanh(0.5 * x)
        value = x + s2 * half - eta
        slope = 1.0 + 0.5 * s2 * (1.0 - half * half)
        step = value / slope
        x = np.where(converged, x, x - step)
        converged |= np.abs(step) < FIXED_POINT_TOLERANCE
        if converged.all():
            logger.debug(f"Fixed point converged after {iteration + 1} Newton steps")
            break

    for index in zip(*np.nonzero(~converged)):
        target, width = float(eta[index]), float(s2[index])
        lo, hi = target - width - FIXED_POINT_TOLERANCE, target + width + FIXED_POINT_TOLERANCE
        try:
            x[index] = optimize.brentq(lambda v: v + width * np.tanh(0.5 * v) - target, lo, hi,
                                       xtol=FIXED_POINT_TOLERANCE, maxiter=FIXED_POINT_MAX_ITERATIONS)
            logger.debug(f"Fixed point at {index} solved by bracketing")
        except (ValueError, RuntimeError):
            x[index] = np.nan
    return x


def gmf_kappa_bar_closed_form(rho, eta, sigma) -> np.ndarray:
    """
    Closed-form average capability under the logistic GMF

    Combines a Laplace approximation of the averaging integral around the
    fixed point with the analytic normalising constant. rho, eta and sigma
    broadcast against each other; NaN marks elements whose fixed point could
    not be found.
    """
    rho, eta, sigma = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(eta, dtype=float),
                                          np.asarray(sigma, dtype=float))
    out = np.zeros(rho.shape)
    active = rho != 0.0
    if not active.any():
        return out
    r, e, sig = rho[active], eta[active], sigma[active]
    s = np.abs(r) * sig
    x = solve_fixed_point(r, e, sig)
    z = (x - e) / s
    log_value = (np.log(4.0 * np.abs(r)) + 0.5 * np.log((2.0 + sig ** 2) / 2.0)
                 + x - 2.0 * np.logaddexp(0.0, x) - 0.5 * z * z
                 - 0.5 * np.log1p(2.0 * s * s * _logistic_density(x)))
    out[active] = np.sign(r) * np.exp(log_value)
    return out


def _gmf_kappa_bar_quadrature(rho: float, eta: float, sigma: float, link: LinkFunction,
                              rule: Optional[QuadratureRule] = None) -> float:
    if rho == 0.0:
        return 0.0
    numerator = _expected_density(link, abs(rho) * sigma, shift=-eta, rule=rule)
    denominator = _expected_density(link, sigma, rule=rule)
    return rho * numerator / denominator


def probit_kappa_bar(rho: float, eta: float) -> float:
    """rho * exp(-(1 - rho^2) eta^2 / 2)"""
    return float(rho * np.exp(-0.5 * (1.0 - rho * rho) * eta * eta))


def evaluate_kappa_bar(spec: ModelSpec, rater: RaterParameters, sigma: float = 1.0,
                       method: CapabilityMethod = CapabilityMethod.CLOSED_FORM,
                       rule: Optional[QuadratureRule] = None) -> Tuple[float, CapabilityMethod]:
    """
    Average capability and the method that produced it

    The closed form applies to the logistic GMF/TFM; it falls back to
    quadrature when the fixed point cannot be solved.
    """
    method = CapabilityMethod(method)
    family = spec.family
    if family is ModelFamily.PROBIT:
        return probit_kappa_bar(rater.rho, rater.eta), CapabilityMethod.ANALYTIC
    if family is ModelFamily.HRM:
        hit, false_alarm = _hrm_rates(spec, rater)
        return hit - false_alarm, CapabilityMethod.ANALYTIC

    rho = 1.0 if family is ModelFamily.TFM else rater.rho
    if method is CapabilityMethod.CLOSED_FORM and spec.link.kind is LinkKind.LOGIT:
        value = float(gmf_kappa_bar_closed_form(rho, rater.eta, sigma))
        if np.isfinite(value):
            return value, CapabilityMethod.CLOSED_FORM
        logger.warning(f"Closed-form kappa_bar failed for rater {rater.rater_id!r}; using quadrature")
    return _gmf_kappa_bar_quadrature(rho, rater.eta, sigma, spec.link, rule), CapabilityMethod.QUADRATURE


def kappa_bar(spec: ModelSpec, rater: RaterParameters, sigma: float = 1.0,
              method: CapabilityMethod = CapabilityMethod.CLOSED_FORM,
              rule: Optional[QuadratureRule] = None) -> float:
    """Average of the capability curve over the ability distribution"""
    return evaluate_kappa_bar(spec, rater, sigma, method, rule)[0]


def kappa_bars(spec: ModelSpec, rho, eta, sigma: float = 1.0,
               method: CapabilityMethod = CapabilityMethod.CLOSED_FORM) -> np.ndarray:
    """kappa_bar for arrays of TFM/GMF/PROBIT rater parameters"""
    rho = np.asarray(rho, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if spec.family is ModelFamily.HRM:
        raise ParameterError("kappa_bars takes (rho, eta) raters; use kappa_bar for HRM")
    if spec.family is ModelFamily.TFM:
        rho = np.ones_like(rho)
    method = CapabilityMethod(method)
    if (spec.family is not ModelFamily.PROBIT and method is CapabilityMethod.CLOSED_FORM
            and spec.link.kind is LinkKind.LOGIT):
        values = gmf_kappa_bar_closed_form(rho, eta, sigma)
        for k in np.nonzero(~np.isfinite(values))[0]:
            values[k] = _gmf_kappa_bar_quadrature(rho[k], eta[k], sigma, spec.link)
        return values
    return np.array([kappa_bar(spec, RaterParameters(rho=float(r), eta=float(e)), sigma, method)
                     for r, e in zip(rho, eta)])


def _variance_coordinates(spec: ModelSpec, rater: RaterParameters) -> Tuple[str, str]:
    if spec.family is ModelFamily.HRM:
        return 'criterion', 'slope'
    return 'rho', 'eta'


def _kappa_bar_unchecked(spec: ModelSpec, rater: RaterParameters, sigma: float,
                         method: CapabilityMethod) -> float:
    """kappa_bar extended to rho outside [0, 1] for finite differencing"""
    if spec.family is ModelFamily.PROBIT:
        return probit_kappa_bar(rater.rho, rater.eta)
    if spec.family is ModelFamily.HRM:
        return kappa_bar(spec, rater, sigma, method)
    rho = 1.0 if spec.family is ModelFamily.TFM else rater.rho
    if method is CapabilityMethod.CLOSED_FORM and spec.link.kind is LinkKind.LOGIT:
        value = float(gmf_kappa_bar_closed_form(rho, rater.eta, sigma))
        if np.isfinite(value):
            return value
    return _gmf_kappa_bar_quadrature(rho, rater.eta, sigma, spec.link)


class _UncheckedRater:
    """Duck-typed rater that skips range validation"""

    def __init__(self, **values):
        self.__dict__.update(values)


def kappa_bar_gradient(spec: ModelSpec, rater: RaterParameters, sigma: float = 1.0,
                       method: CapabilityMethod = CapabilityMethod.CLOSED_FORM) -> np.ndarray:
    """Central-difference gradient of kappa_bar with respect to (sigma, rater coordinate 1, coordinate 2)"""
    first, second = _variance_coordinates(spec, rater)
    base = {'rater_id': rater.rater_id, 'rho': rater.rho, 'eta': rater.eta,
            'criterion': rater.criterion, 'slope': rater.slope}

    def evaluate(sig: float, values: Dict[str, float]) -> float:
        return _kappa_bar_unchecked(spec, _UncheckedRater(**values), sig, method)

    gradient = np.zeros(3)
    h = GRADIENT_STEP * max(1.0, abs(sigma))
    gradient[0] = (evaluate(sigma + h, base) - evaluate(sigma - h, base)) / (2.0 * h)
    for k, name in enumerate((first, second), start=1):
        value = base[name]
        h = GRADIENT_STEP * max(1.0, abs(value))
        up = dict(base, **{name: value + h})
        down = dict(base, **{name: value - h})
        gradient[k] = (evaluate(sigma, up) - evaluate(sigma, down)) / (2.0 * h)
    return gradient


def validate_covariance(cov: np.ndarray, size: Optional[int] = None) -> np.ndarray:
    """Return cov as a symmetric float matrix or raise CovarianceError"""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or (size is not None and cov.shape[0] != size):
        raise CovarianceError(f"Covariance must be a square matrix of size {size}, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise CovarianceError("Covariance contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > 1e-8 * scale:
        raise CovarianceError("Covariance is not symmetric")
    cov = 0.5 * (cov + cov.T)
    smallest = float(np.linalg.eigvalsh(cov).min())
    if smallest < -1e-10 * scale:
        raise CovarianceError(f"Covariance is not positive semidefinite (smallest eigenvalue {smallest:.3g})")
    return cov


def kappa_bar_variance(spec: ModelSpec, rater: RaterParameters, sigma: float, cov,
                       method: CapabilityMethod = CapabilityMethod.CLOSED_FORM) -> float:
    """
    Delta-method variance of kappa_bar

    Args:
        spec: Model specification
        rater: Rater parameters at the estimate
        sigma: Ability standard deviation at the estimate
        cov: 3x3 covariance over (sigma, rho_r, eta_r); for HRM over
            (sigma, criterion_r, slope_r)
        method: kappa_bar evaluation method used for the gradient

    Returns:
        g cov g^T with g the central-difference gradient

    Raises:
        CovarianceError: If cov is not symmetric positive semidefinite
    """
    cov = validate_covariance(cov, 3)
    gradient = kappa_bar_gradient(spec, rater, sigma, CapabilityMethod(method))
    return float(max(gradient @ cov @ gradient, 0.0))


def capability_report(spec: ModelSpec, rater: RaterParameters, sigma: float = 1.0,
                      theta_grid: Optional[Sequence[float]] = None, cov=None,
                      method: CapabilityMethod = CapabilityMethod.CLOSED_FORM) -> CapabilityReport:
    """Capability summary of one rater, with variance when a covariance block is given"""
    grid = np.linspace(-5.0, 5.0, 201) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    value, used = evaluate_kappa_bar(spec, rater, sigma, method)
    variance = None if cov is None else kappa_bar_variance(spec, rater, sigma, cov, method)
    if value < 0.0:
        logger.warning(f"Negative kappa_bar {value:.4f} for rater {rater.rater_id!r} reported as 0")
    if spec.family is ModelFamily.PROBIT and rater.rho >= 1.0:
        curve = np.full_like(grid, np.nan)
    else:
        curve = kappa_curve(spec, rater, grid, sigma)
    return CapabilityReport(
        rater_id=rater.rater_id,
        kappa_bar=max(float(value), 0.0),
        kappa_bar_variance=variance,
        delta_used=delta_for(spec, sigma),
        theta_grid=grid,
        curve=curve,
        method=used,
    )


class CapabilityAnalyzer(IAnalyzer):
    """
    Analyzer producing capability reports from a table of rater parameters

    Expects columns ``rater``, ``rho`` and ``eta`` (``criterion`` and
    ``slope`` for HRM). Optional ``var_sigma``, ``var_rho``/``var_criterion``
    and ``var_eta``/``var_slope`` columns give a diagonal covariance block;
    full blocks can be passed through the ``covariances`` keyword.
    """

    def __init__(self, spec: Optional[ModelSpec] = None):
        self.spec = spec or ModelSpec.default(ModelFamily.GMF)

    def get_required_columns(self) -> List[str]:
        if self.spec.family is ModelFamily.HRM:
            return ['rater', 'criterion', 'slope']
        return ['rater', 'rho', 'eta']

    def analyze(self, data: pd.DataFrame, **kwargs) -> AnalysisResult:
        """
        Build a CapabilityReport per row

        Args:
            data: Rater parameter table
            **kwargs: Optional parameters
                - sigma: Ability standard deviation (default 1.0)
                - theta_grid: Natural-scale grid for the curves
                - covariances: dict rater id -> 3x3 covariance block
                - method: CapabilityMethod for kappa_bar

        Returns:
            AnalysisResult with metrics ``reports`` (list), ``table`` (DataFrame)
            and ``curves`` (DataFrame)

        Raises:
            ValueError: If the table is invalid
        """
        if not self.validate_data(data, **kwargs):
            columns = self.get_required_columns()
            raise ParameterError(f"Rater table must contain numeric columns {columns[1:]} and {columns[0]!r}")

        sigma = float(kwargs.get('sigma', 1.0))
        theta_grid = kwargs.get('theta_grid')
        covariances: Dict[str, Any] = kwargs.get('covariances') or {}
        method = CapabilityMethod(kwargs.get('method', CapabilityMethod.CLOSED_FORM))
        first, second = _variance_coordinates(self.spec, RaterParameters())

        reports = []
        for row in data.itertuples(index=False):
            values = row._asdict()
            rater = RaterParameters(
                rater_id=str(values['rater']),
                rho=float(values.get('rho', 1.0)) if self.spec.family is not ModelFamily.TFM else 1.0,
                eta=float(values.get('eta', 0.0)),
                criterion=float(values.get('criterion', 0.0)),
                slope=float(values.get('slope', 0.0)),
            )
            cov = covariances.get(rater.rater_id)
            if cov is None and f'var_{second}' in values:
                cov = np.diag([values.get('var_sigma', 0.0), values.get(f'var_{first}', 0.0),
                               values[f'var_{second}']]).astype(float)
            reports.append(capability_report(self.spec, rater, sigma, theta_grid, cov, method))

        table = pd.DataFrame({
            'rater': [r.rater_id for r in reports],
            'kappa_bar': [r.kappa_bar for r in reports],
            'kappa_bar_se': [r.kappa_bar_se for r in reports],
            'method': [r.method.value for r in reports],
        })
        curves = pd.concat([r.curve_frame() for r in reports], ignore_index=True)
        metadata = {
            'family': self.spec.family.value,
            'sigma': sigma,
            'delta': reports[0].delta_used.value,
            'n_raters': len(reports),
        }
        logger.info(f"Computed capability for {len(reports)} raters ({self.spec.family.value}, sigma={sigma:.4f})")
        return AnalysisResult(metrics={'reports': reports, 'table': table, 'curves': curves}, metadata=metadata)

    def validate_data(self, data: pd.DataFrame, **kwargs) -> bool:
        if data is None or data.empty:
            return False
        for column in self.get_required_columns():
            if column not in data.columns:
                return False
        for column in self.get_required_columns()[1:]:
            if not pd.api.types.is_numeric_dtype(data[column]) or data[column].isna().any():
                return False
        return True
