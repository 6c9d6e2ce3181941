"""Link functions mapping a linear predictor to a success probability"""
from enum import Enum

import numpy as np
from scipy import special

# Linear predictors are clamped to this range before evaluation
PREDICTOR_CLAMP = 35.0


class LinkKind(str, Enum):
    """Supported inverse-link families"""
    LOGIT = 'logit'
    PROBIT = 'probit'
    CAUCHIT = 'cauchit'
    LOG = 'log'
    CLOGLOG = 'cloglog'


def _clamp(x):
    return np.clip(np.asarray(x, dtype=float), -PREDICTOR_CLAMP, PREDICTOR_CLAMP)


def _scalar_or_array(values, like):
    values = np.asarray(values, dtype=float)
    if np.ndim(like) == 0:
        return float(values)
    return values


class LinkFunction:
    """
    Cumulative distribution F and its derivatives for one link kind

    All methods accept scalars or numpy arrays and return the same shape.
    Predictors outside [-35, 35] are clamped first.
    """

    def __init__(self, kind='logit'):
        self.kind = LinkKind(kind)

    def __repr__(self) -> str:
        return f"LinkFunction({self.kind.value!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, LinkFunction) and other.kind == self.kind

    def __hash__(self) -> int:
        return hash(self.kind)

    def cdf(self, x):
        """Success probability F(x)"""
        s = _clamp(x)
        kind = self.kind
        if kind is LinkKind.LOGIT:
            out = special.expit(s)
        elif kind is LinkKind.PROBIT:
            out = special.ndtr(s)
        elif kind is LinkKind.CAUCHIT:
            out = 0.5 + np.arctan(s) / np.pi
        elif kind is LinkKind.LOG:
            out = np.exp(np.minimum(s, 0.0))
        else:
            out = -np.expm1(-np.exp(s))
        return _scalar_or_array(out, x)

    def sf(self, x):
        """Failure probability 1 - F(x), computed without cancellation"""
        s = _clamp(x)
        kind = self.kind
        if kind is LinkKind.LOGIT:
            out = special.expit(-s)
        elif kind is LinkKind.PROBIT:
            out = special.ndtr(-s)
        elif kind is LinkKind.CAUCHIT:
            out = 0.5 - np.arctan(s) / np.pi
        elif kind is LinkKind.LOG:
            out = -np.expm1(np.minimum(s, 0.0))
        else:
            out = np.exp(-np.exp(s))
        return _scalar_or_array(out, x)

    def pdf(self, x):
        """Derivative F'(x)"""
        s = _clamp(x)
        kind = self.kind
        if kind is LinkKind.LOGIT:
            out = special.expit(s) * special.expit(-s)
        elif kind is LinkKind.PROBIT:
            out = np.exp(-0.5 * s * s) / np.sqrt(2.0 * np.pi)
        elif kind is LinkKind.CAUCHIT:
            out = 1.0 / (np.pi * (1.0 + s * s))
        elif kind is LinkKind.LOG:
            out = np.where(s < 0.0, np.exp(np.minimum(s, 0.0)), 0.0)
        else:
            out = np.exp(s - np.exp(s))
        return _scalar_or_array(out, x)

    def pdf_derivative(self, x):
        """Second derivative F''(x)"""
        s = _clamp(x)
        kind = self.kind
        if kind is LinkKind.LOGIT:
            p = special.expit(s)
            out = p * (1.0 - p) * (1.0 - 2.0 * p)
        elif kind is LinkKind.PROBIT:
            out = -s * np.exp(-0.5 * s * s) / np.sqrt(2.0 * np.pi)
        elif kind is LinkKind.CAUCHIT:
            out = -2.0 * s / (np.pi * (1.0 + s * s) ** 2)
        elif kind is LinkKind.LOG:
            out = np.where(s < 0.0, np.exp(np.minimum(s, 0.0)), 0.0)
        else:
            out = np.exp(s - np.exp(s)) * (1.0 - np.exp(s))
        return _scalar_or_array(out, x)

    def log_cdf(self, x):
        """log F(x)"""
        s = _clamp(x)
        kind = self.kind
        with np.errstate(divide='ignore'):
            if kind is LinkKind.LOGIT:
                out = special.log_expit(s)
            elif kind is LinkKind.PROBIT:
                out = special.log_ndtr(s)
            elif kind is LinkKind.CAUCHIT:
                # F(s) = 1 - F(-s); use the small tail directly for s < 0
                out = np.where(s < 0.0,
                               np.log(np.arctan(1.0 / np.where(s < 0.0, -s, 1.0)) / np.pi),
                               np.log1p(-np.arctan(1.0 / np.where(s > 0.0, s, 1.0)) / np.pi))
                out = np.where(s == 0.0, np.log(0.5), out)
            elif kind is LinkKind.LOG:
                out = np.minimum(s, 0.0)
            else:
                out = np.log(-np.expm1(-np.exp(s)))
        return _scalar_or_array(out, x)

    def log_sf(self, x):
        """log(1 - F(x))"""
        s = _clamp(x)
        kind = self.kind
        with np.errstate(divide='ignore'):
            if kind is LinkKind.LOGIT:
                out = special.log_expit(-s)
            elif kind is LinkKind.PROBIT:
                out = special.log_ndtr(-s)
            elif kind is LinkKind.CAUCHIT:
                out = LinkFunction(LinkKind.CAUCHIT).log_cdf(-s)
            elif kind is LinkKind.LOG:
                out = np.log(-np.expm1(np.minimum(s, 0.0)))
            else:
                out = -np.exp(s)
        return _scalar_or_array(out, x)

    def ppf(self, p):
        """Inverse F^{-1}(p) for p in (0, 1)"""
        q = np.asarray(p, dtype=float)
        kind = self.kind
        with np.errstate(divide='ignore', invalid='ignore'):
            if kind is LinkKind.LOGIT:
                out = special.logit(q)
            elif kind is LinkKind.PROBIT:
                out = special.ndtri(q)
            elif kind is LinkKind.CAUCHIT:
                out = np.tan(np.pi * (q - 0.5))
            elif kind is LinkKind.LOG:
                out = np.log(q)
            else:
                out = np.log(-np.log1p(-q))
        return _scalar_or_array(out, p)


def get_link(kind) -> LinkFunction:
    """Return a LinkFunction for a kind name or LinkKind"""
    if isinstance(kind, LinkFunction):
        return kind
    return LinkFunction(kind)
