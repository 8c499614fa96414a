"""Conformal changes of metric and the transformation law of scalar curvature."""

from dataclasses import dataclass

import numpy as np

from eqyamabe.constants import conformal_exponents
from eqyamabe.errors import InvalidSpecError
from eqyamabe.geometry.curvature import laplacian, scalar_curvature
from eqyamabe.geometry.metric import MetricField

__all__ = ["ConformalFactor", "conformal_metric", "conformal_scalar_formula"]


@dataclass(frozen=True)
class ConformalFactor:
    """A positive function ``u`` defining the metric ``u^(p-2) g``.

    Parameters
    ----------
    u : ndarray
        Samples on the chart of the metric it will multiply.
    n : int
        Dimension; fixes ``p = 2n / (n - 2)``.
    """

    u: np.ndarray
    n: int

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise InvalidSpecError("conformal factor must be finite and positive")
        object.__setattr__(self, "u", u)

    @property
    def p(self):
        return conformal_exponents(self.n)[0]


def _as_factor(u, n):
    return u if isinstance(u, ConformalFactor) else ConformalFactor(u, n)


def conformal_metric(metric, u):
    """Return ``u^(p-2) g``.

    Parameters
    ----------
    metric : MetricField
    u : ConformalFactor or ndarray

    Returns
    -------
    MetricField
    """
    cf = _as_factor(u, metric.dim)
    psi = cf.u ** (cf.p - 2.0)
    return MetricField(metric.chart, psi[..., None, None] * metric.g, name=f"conformal({metric.name})")


def conformal_scalar_formula(metric, u, scalar=None, coefficient=None):
    """Scalar curvature of ``u^(p-2) g`` from the transformation law.

    ``s_new = u^(1-p) (a Delta u + s u)`` with ``a = 4(n-1)/(n-2)`` and
    ``Delta`` the nonnegative Laplacian of ``g``.

    Parameters
    ----------
    metric : MetricField
    u : ConformalFactor or ndarray
    scalar : ndarray, optional
        Scalar curvature of ``metric``; computed if omitted.
    coefficient : float, optional
        Replaces ``a`` in front of the Laplacian. Only useful to compare
        alternative normalisations of the law.
    """
    cf = _as_factor(u, metric.dim)
    p, a = conformal_exponents(metric.dim)
    if coefficient is not None:
        a = float(coefficient)
    if scalar is None:
        scalar = scalar_curvature(metric)
    return cf.u ** (1.0 - p) * (a * laplacian(metric, cf.u) + scalar * cf.u)
