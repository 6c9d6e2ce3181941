"""Model families, model specifications and parameter sets"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

import numpy as np

from src.core.exceptions import ParameterError
from src.core.models.links import LinkFunction, LinkKind, get_link


class ModelFamily(str, Enum):
    """IRT families under which the capability index is defined"""
    TFM = 'TFM'
    GMF = 'GMF'
    PROBIT = 'PROBIT'
    HRM = 'HRM'


class HrmSignConvention(str, Enum):
    """Orientation of the hierarchical rater model's level-1 predictor"""
    SDT_STANDARD = 'sdt_standard'
    AS_PRINTED = 'as_printed'


@dataclass(frozen=True)
class ModelSpec:
    """
    Family, link and (for the hierarchical rater model) level-1 conventions

    ``link`` drives TFM, GMF and PROBIT and the level-2 ability model of HRM;
    ``level1_link`` is the rater signal-detection link of HRM.
    """
    family: ModelFamily = ModelFamily.GMF
    link: LinkFunction = field(default_factory=lambda: LinkFunction(LinkKind.LOGIT))
    hrm_sign_convention: HrmSignConvention = HrmSignConvention.SDT_STANDARD
    level1_link: LinkFunction = field(default_factory=lambda: LinkFunction(LinkKind.LOGIT))

    def __post_init__(self):
        object.__setattr__(self, 'family', ModelFamily(self.family))
        object.__setattr__(self, 'link', get_link(self.link))
        object.__setattr__(self, 'level1_link', get_link(self.level1_link))
        object.__setattr__(self, 'hrm_sign_convention', HrmSignConvention(self.hrm_sign_convention))
        if self.family is ModelFamily.PROBIT and self.link.kind is not LinkKind.PROBIT:
            raise ParameterError("The PROBIT family requires the probit link")

    @classmethod
    def default(cls, family) -> 'ModelSpec':
        """Default specification: probit link for PROBIT, logit otherwise"""
        family = ModelFamily(family)
        link = LinkKind.PROBIT if family is ModelFamily.PROBIT else LinkKind.LOGIT
        return cls(family=family, link=LinkFunction(link))


def _as_vector(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise ParameterError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """
    Parameters of a fitted or generating model

    Natural-scale ability is ``sigma * theta_prime``. ``rho`` is the rater
    ability-sensitivity (fixed at one for TFM), ``eta`` the rater severity,
    ``delta`` the item difficulty and ``alpha`` the global intercept. PROBIT
    raters are described by (rho, eta) as well; their noise scale and
    threshold are derived. HRM adds the rater criterion ``criterion`` (c_r)
    and the rater-item slope matrix ``slope`` (a_ri).
    """
    theta_prime: np.ndarray
    sigma: float
    rho: np.ndarray
    eta: np.ndarray
    delta: np.ndarray
    alpha: float = 0.0
    criterion: Optional[np.ndarray] = None
    slope: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'theta_prime', _as_vector(self.theta_prime, 'theta_prime'))
        object.__setattr__(self, 'rho', _as_vector(self.rho, 'rho'))
        object.__setattr__(self, 'eta', _as_vector(self.eta, 'eta'))
        object.__setattr__(self, 'delta', _as_vector(self.delta, 'delta'))
        object.__setattr__(self, 'sigma', float(self.sigma))
        object.__setattr__(self, 'alpha', float(self.alpha))

        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not np.isfinite(self.alpha):
            raise ParameterError("alpha must be finite")
        if len(self.rho) != len(self.eta):
            raise ParameterError(f"rho has {len(self.rho)} raters but eta has {len(self.eta)}")
        if (self.rho < -1e-12).any() or (self.rho > 1.0 + 1e-12).any():
            raise ParameterError("rho must lie in [0, 1]")
        object.__setattr__(self, 'rho', _frozen(np.clip(self.rho, 0.0, 1.0)))

        if self.criterion is not None:
            object.__setattr__(self, 'criterion', _as_vector(self.criterion, 'criterion'))
            if len(self.criterion) != self.n_raters:
                raise ParameterError("criterion must have one entry per rater")
        if self.slope is not None:
            slope = np.array(self.slope, dtype=float, copy=True)
            if slope.shape != (self.n_raters, self.n_items):
                raise ParameterError(
                    f"slope must have shape ({self.n_raters}, {self.n_items}), got {slope.shape}"
                )
            slope.setflags(write=False)
            object.__setattr__(self, 'slope', slope)

    @property
    def n_students(self) -> int:
        return len(self.theta_prime)

    @property
    def n_raters(self) -> int:
        return len(self.rho)

    @property
    def n_items(self) -> int:
        return len(self.delta)

    @property
    def theta(self) -> np.ndarray:
        """Natural-scale abilities"""
        return self.sigma * self.theta_prime

    @property
    def noise_scale(self) -> np.ndarray:
        """PROBIT rater noise scale sigma_r = sqrt(1/rho^2 - 1)"""
        with np.errstate(divide='ignore'):
            return np.sqrt(np.maximum(1.0 / np.square(self.rho) - 1.0, 0.0))

    @property
    def threshold(self) -> np.ndarray:
        """PROBIT rater threshold alpha_r = eta_r * sigma_r"""
        return self.eta * self.noise_scale

    def replace(self, **changes) -> 'ParameterSet':
        return replace(self, **changes)

    def require_hrm(self) -> None:
        if self.criterion is None or self.slope is None:
            raise ParameterError("HRM requires criterion and slope parameters")

    def constraint_violations(self, tol: float = 1e-6, rho_max_scaled: bool = False) -> List[str]:
        """
        List the identification constraints the parameter set violates

        Args:
            tol: Absolute tolerance
            rho_max_scaled: Also require max(rho) == 1

        Returns:
            Human-readable descriptions, empty when all constraints hold
        """
        problems = []
        if self.n_students > 1:
            if abs(self.theta_prime.mean()) > tol:
                problems.append(f"mean(theta_prime) = {self.theta_prime.mean():.3g}")
            if abs(self.theta_prime.var() - 1.0) > tol:
                problems.append(f"var(theta_prime) = {self.theta_prime.var():.6g}")
        if abs(self.eta.mean()) > tol:
            problems.append(f"mean(eta) = {self.eta.mean():.3g}")
        if abs(self.delta.sum()) > tol:
            problems.append(f"sum(delta) = {self.delta.sum():.3g}")
        if rho_max_scaled and self.n_raters and abs(self.rho.max() - 1.0) > tol:
            problems.append(f"max(rho) = {self.rho.max():.6g}")
        return problems

    def standardized(self) -> 'ParameterSet':
        """
        Probability-preserving re-expression satisfying the location and scale constraints

        The ability mean moves into eta (weighted by rho * sigma), the ability
        spread into sigma, and the means of eta and delta into alpha.
        """
        theta = self.theta_prime
        shift = float(theta.mean())
        spread = float(theta.std())
        if spread <= 0.0:
            spread = 1.0
        eta = self.eta - self.rho * self.sigma * shift
        alpha = self.alpha - eta.mean() - self.delta.mean()
        return self.replace(
            theta_prime=(theta - shift) / spread,
            sigma=self.sigma * spread,
            eta=eta - eta.mean(),
            delta=self.delta - self.delta.mean(),
            alpha=alpha,
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HrmLatentSpec:
    """
    Link choices for the two HRM levels

    Only the links live here. The HRM quantities themselves are fields of
    ParameterSet: the level-2 intercept is ``alpha``, the level-2
    difficulties are ``delta``, the rater criteria c_r are ``criterion`` and
    the rater-item slopes a_ri are ``slope``.
    """
    level1_link: LinkKind = LinkKind.LOGIT
    level2_link: LinkKind = LinkKind.LOGIT

    def model_spec(self, sign_convention=HrmSignConvention.SDT_STANDARD) -> ModelSpec:
        return ModelSpec(
            family=ModelFamily.HRM,
            link=LinkFunction(self.level2_link),
            hrm_sign_convention=sign_convention,
            level1_link=LinkFunction(self.level1_link),
        )
