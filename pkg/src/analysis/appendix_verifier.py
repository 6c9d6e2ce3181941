"""Numerical checks of the supremum properties behind the normalising constants"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.analysis.capability_index import (
    RaterParameters, _hrm_rates, delta_hrm, probit_kappa_bar,
)
from src.analysis.probability_model import probability_curve
from src.analysis.quadrature import (
    QuadratureRule, adaptive_rule, gauss_hermite_rule, integrate_against_normal,
)
from src.core.logging_config import get_logger
from src.core.models.links import LinkFunction, LinkKind
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet

logger = get_logger(__name__)

_LOGIT = LinkFunction(LinkKind.LOGIT)
_PROBIT = LinkFunction(LinkKind.PROBIT)

SHIFT_GRID = np.round(np.arange(-3.0, 3.0 + 1e-9, 0.1), 10)
SLOPE_GRID = np.round(np.arange(0.1, 1.0 + 1e-9, 0.1), 10)
SIGMA_GRID = (0.5, 1.0, 2.0)
NOISE_GRID = (0.25, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class PropertyCheck:
    """Outcome of one property; margin > 0 means the property holds with room to spare"""
    name: str
    passed: bool
    margin: float
    detail: str = ''


@dataclass
class AppendixReport:
    checks: List[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> PropertyCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _expected_logistic_slope(shift: float, scale: float, rule: QuadratureRule) -> float:
    return integrate_against_normal(lambda t: _LOGIT.pdf(t + shift), scale=scale, rule=rule)


def check_shift_maximum(rule: QuadratureRule) -> PropertyCheck:
    """E[L'(Z + z)] is maximised uniquely at z = 0"""
    values = np.array([_expected_logistic_slope(z, 1.0, rule) for z in SHIFT_GRID])
    centre = values[SHIFT_GRID == 0.0][0]
    others = values[SHIFT_GRID != 0.0]
    margin = float(centre - others.max())
    symmetric = float(np.max(np.abs(values - values[::-1])))
    return PropertyCheck('shift_maximum', margin > 0.0 and symmetric < 1e-10, margin,
                         f"T(0)={centre:.6f}, max T(z!=0)={others.max():.6f}")


def check_slope_monotone(rule: QuadratureRule) -> PropertyCheck:
    """sigma * rho * E[L'(rho sigma Z)] increases strictly in rho for each sigma"""
    margin = np.inf
    for sigma in SIGMA_GRID:
        values = np.array([sigma * rho * _expected_logistic_slope(0.0, rho * sigma, rule) for rho in SLOPE_GRID])
        margin = min(margin, float(np.diff(values).min()))
    return PropertyCheck('slope_monotone', margin > 0.0, margin,
                         f"smallest increment over rho grid {margin:.3g}")


def check_slope_shift_decrease(rule: QuadratureRule) -> PropertyCheck:
    """For fixed rho, the averaged slope decreases as |eta| grows"""
    margin = np.inf
    positive = SHIFT_GRID[SHIFT_GRID >= 0.0]
    for rho in (0.25, 0.5, 1.0):
        values = np.array([_expected_logistic_slope(-eta, rho, rule) for eta in positive])
        margin = min(margin, float(-np.diff(values).max()))
    return PropertyCheck('slope_shift_decrease', margin > 0.0, margin)


def check_probit_supremum(rule: QuadratureRule) -> PropertyCheck:
    """
    The probit averaged slope equals the normal density of alpha_r under N(0, 1 + sigma_r^2)

    Verifies the closed form against quadrature (adaptive rule, the integrand is
    sharply peaked for small sigma_r), its maximum at eta = 0,
    its increase as sigma_r shrinks, and the limit 1/sqrt(2 pi).
    """
    adaptive = adaptive_rule()
    worst = 0.0
    alternative_gap = 0.0
    for noise in NOISE_GRID:
        rho = 1.0 / np.sqrt(1.0 + noise ** 2)
        for eta in (-2.0, -0.5, 0.0, 1.0, 2.5):
            threshold = eta * noise
            numeric = integrate_against_normal(
                lambda t: _PROBIT.pdf((t - threshold) / noise) / noise, scale=1.0, rule=adaptive)
            closed = probit_kappa_bar(rho, eta) / np.sqrt(2.0 * np.pi)
            worst = max(worst, abs(numeric - closed))
            variant = rho * np.exp(-0.5 * noise ** 2 * eta ** 2 / np.sqrt(1.0 + noise ** 2)) / np.sqrt(2.0 * np.pi)
            alternative_gap = max(alternative_gap, abs(numeric - variant))

    at_zero = [probit_kappa_bar(1.0 / np.sqrt(1.0 + n ** 2), 0.0) for n in sorted(NOISE_GRID, reverse=True)]
    increasing = bool(np.all(np.diff(at_zero) > 0.0))
    off_centre = max(probit_kappa_bar(0.8, eta) for eta in SHIFT_GRID if eta != 0.0)
    peaked = off_centre < probit_kappa_bar(0.8, 0.0)
    tiny = 1e-6
    limit = probit_kappa_bar(1.0 / np.sqrt(1.0 + tiny ** 2), 0.0) / np.sqrt(2.0 * np.pi)
    limit_error = abs(limit - 1.0 / np.sqrt(2.0 * np.pi))

    passed = worst < 1e-8 and increasing and peaked and limit_error <= 1e-6
    return PropertyCheck('probit_supremum', passed, float(1e-8 - worst),
                         f"closed form vs quadrature {worst:.2e}; square-root variant off by {alternative_gap:.3g}; "
                         f"limit error {limit_error:.2e}")


def check_hrm_factorisation(rule: QuadratureRule) -> PropertyCheck:
    """
    The averaged HRM slope factors into F_{2,1} - F_{2,0} times a rater-free constant

    d mu / d theta' is taken by central differences of the two-level success
    probability, averaged over N(0, 1) and compared with kappa * Delta_HRM
    for several rater and level-2 settings.
    """
    spec = ModelSpec(family=ModelFamily.HRM)
    step = 1e-4
    worst = 0.0
    for alpha, delta, sigma in ((0.0, 0.0, 1.0), (0.5, -0.3, 1.0), (-0.4, 0.8, 2.0)):
        level2 = delta_hrm(alpha, delta, sigma, rule=rule).value
        for c in (-1.0, 0.0, 0.5, 1.5):
            for a in (0.5, 1.0, 3.0):
                params = ParameterSet(theta_prime=[0.0], sigma=sigma, rho=[1.0], eta=[0.0], delta=[delta],
                                      alpha=alpha, criterion=[c], slope=[[a]])

                def slope(t, params=params):
                    return (probability_curve(spec, params, t + step, 0, 0)
                            - probability_curve(spec, params, t - step, 0, 0)) / (2.0 * step)

                averaged = integrate_against_normal(slope, rule=rule)
                hit, false_alarm = _hrm_rates(spec, RaterParameters(criterion=c, slope=a))
                worst = max(worst, abs(averaged - (hit - false_alarm) * level2))
    return PropertyCheck('hrm_factorisation', worst < 1e-7, float(1e-7 - worst),
                         f"worst |E[d mu/d theta'] - kappa * Delta_HRM| = {worst:.2e}")


def verify_appendix_properties(rule: Optional[QuadratureRule] = None) -> AppendixReport:
    """
    Run all supremum property checks

    Args:
        rule: Quadrature rule (default Gauss-Hermite of order 61)

    Returns:
        AppendixReport with one PropertyCheck per property
    """
    rule = rule or gauss_hermite_rule()
    report = AppendixReport()
    for check in (check_shift_maximum, check_slope_monotone, check_slope_shift_decrease,
                  check_probit_supremum, check_hrm_factorisation):
        result = check(rule)
        report.checks.append(result)
        level = logger.info if result.passed else logger.warning
        level(f"{result.name}: {'pass' if result.passed else 'FAIL'} (margin {result.margin:.3g}) {result.detail}")
    return report
