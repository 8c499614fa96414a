"""Volume, total scalar curvature and Yamabe-quotient quadrature.

All integrals use the midpoint rule on the chart cells (cell-centred
samples on open axes, the periodic trapezoid rule on periodic axes) with
density ``sqrt(det g)``. Samples inside excluded bands carry zero weight.
Sums are taken with numpy's pairwise summation over a contiguous array,
so results do not depend on thread scheduling.
"""

import numpy as np

from eqyamabe.constants import conformal_exponents
from eqyamabe.errors import DegenerateTestFunctionError
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.fd import diff1

__all__ = ["integrate", "volume", "einstein_hilbert", "yamabe_quotient", "dirichlet_density"]


def integrate(metric, f, density=None):
    """Integral of the field ``f`` against the Riemannian volume."""
    if density is None:
        density = metric.sqrt_det()
    vals = np.ascontiguousarray((np.asarray(f, dtype=float) * density)[metric.chart.mask])
    return float(np.sum(vals)) * metric.chart.cell_volume


def volume(metric):
    """Riemannian volume of the non-excluded part of the chart."""
    return integrate(metric, np.ones(metric.chart.shape))


def einstein_hilbert(metric, scalar=None):
    """Normalised total scalar curvature ``int s dV / vol^((n-2)/n)``."""
    if scalar is None:
        scalar = scalar_curvature(metric)
    dens = metric.sqrt_det()
    n = metric.dim
    vol = integrate(metric, np.ones(metric.chart.shape), dens)
    return integrate(metric, scalar, dens) / vol ** ((n - 2.0) / n)


def dirichlet_density(metric, phi, ginv=None):
    """Pointwise ``|d phi|_g^2``."""
    ch = metric.chart
    if ginv is None:
        ginv = metric.inverse()
    d = np.stack([diff1(phi, ch.spacing[a], ch.periodic[a], a) for a in range(ch.dim)], axis=-1)
    return np.einsum("...a,...ab,...b->...", d, ginv, d)


def yamabe_quotient(metric, phi, scalar=None):
    """Yamabe quotient of the conformal metric ``phi^(p-2) g``.

    ``Q = int (a |d phi|^2 + s phi^2) dV / (int |phi|^p dV)^(2/p)``.

    Parameters
    ----------
    metric : MetricField
    phi : ndarray or ConformalFactor
        Test function sampled on the chart. Need not be positive.
    scalar : ndarray, optional
        Scalar curvature of ``metric``.

    Raises
    ------
    DegenerateTestFunctionError
        If ``int |phi|^p dV`` vanishes.
    """
    phi = np.asarray(getattr(phi, "u", phi), dtype=float)
    p, a = conformal_exponents(metric.dim)
    if scalar is None:
        scalar = scalar_curvature(metric)
    dens = metric.sqrt_det()
    den = integrate(metric, np.abs(phi) ** p, dens)
    if not den > 0:
        raise DegenerateTestFunctionError("test function has zero L^p norm on the chart")
    num = integrate(metric, a * dirichlet_density(metric, phi) + scalar * phi**2, dens)
    return num / den ** (2.0 / p)
