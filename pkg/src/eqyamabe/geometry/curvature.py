"""Christoffel symbols, curvature tensors and the Laplace-Beltrami operator.

Index conventions (all arrays carry the grid axes first):

* ``dg[..., E, A, B] = d_E g_AB``
* ``christoffel[..., C, A, B] = Gamma^C_AB``
  ``= 1/2 g^CD (d_B g_AD + d_A g_BD - d_D g_AB)``
* ``riemann[..., D, A, B, C] = R^D_ABC``
  ``= d_A Gamma^D_BC - d_B Gamma^D_AC + Gamma^E_BC Gamma^D_AE - Gamma^E_AC Gamma^D_BE``
* ``Ric_BC = R^A_ABC`` and ``s = g^BC Ric_BC``.

With these choices the unit round sphere has ``s = n(n - 1)``.

The derivatives of the Christoffel symbols are expanded by the product
rule into first and second metric derivatives. Differencing ``Gamma``
directly amplifies the ``1/sin`` growth of polar charts near their poles;
working from ``dg`` and ``d^2 g`` keeps the truncation error bounded by
``h^2`` times smooth metric derivatives.
"""

import logging
from dataclasses import dataclass

import numpy as np

from eqyamabe.geometry.fd import diff1, diff2

logger = logging.getLogger(__name__)

__all__ = [
    "CurvatureData",
    "metric_derivatives",
    "christoffel",
    "riemann_ricci_scalar",
    "scalar_curvature",
    "laplacian",
    "curvature_report",
]


@dataclass
class CurvatureData:
    """Curvature of a sampled metric.

    Attributes
    ----------
    christoffel : ndarray, ``(..., n, n, n)``
        ``Gamma^C_AB`` indexed ``[..., C, A, B]``.
    ricci : ndarray, ``(..., n, n)``
    scalar : ndarray, ``(...)``
    riemann : ndarray or None
        ``R^D_ABC`` indexed ``[..., D, A, B, C]``; only filled when
        requested since it needs all second derivatives at once.
    """

    christoffel: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    riemann: np.ndarray = None


def metric_derivatives(metric):
    """First derivatives ``dg[..., E, A, B]`` of the sampled metric."""
    ch = metric.chart
    parts = [diff1(metric.g, ch.spacing[a], ch.periodic[a], a) for a in range(ch.dim)]
    return np.stack(parts, axis=-3)


def _second(metric, P, Q):
    ch = metric.chart
    g = metric.g
    if P == Q:
        return diff2(g, ch.spacing[P], ch.periodic[P], P)
    d = diff1(g, ch.spacing[P], ch.periodic[P], P)
    return diff1(d, ch.spacing[Q], ch.periodic[Q], Q)


def _first_kind(dg):
    # low[..., D, A, B] = 1/2 (d_A g_BD + d_B g_AD - d_D g_AB)
    return 0.5 * (np.einsum("...abd->...dab", dg) + np.einsum("...bad->...dab", dg) - dg)


def christoffel(metric, ginv=None):
    """Christoffel symbols of the second kind.

    Parameters
    ----------
    metric : MetricField
    ginv : ndarray, optional
        Precomputed inverse metric.

    Returns
    -------
    ndarray
        ``Gamma[..., C, A, B]``, symmetric in ``A, B``.

    Raises
    ------
    SingularMetricError
        If the metric cannot be inverted at some sample.
    """
    if ginv is None:
        ginv = metric.inverse()
    low = _first_kind(metric_derivatives(metric))
    return np.einsum("...cd,...dab->...cab", ginv, low)


def riemann_ricci_scalar(metric, full=False):
    """Christoffel symbols, Ricci tensor and scalar curvature.

    Parameters
    ----------
    metric : MetricField
    full : bool
        Also assemble the full Riemann tensor. This stores every second
        derivative of the metric and costs ``O(n^4)`` memory per point.

    Returns
    -------
    CurvatureData
    """
    n = metric.dim
    gi = metric.inverse()
    dg = metric_derivatives(metric)
    low = _first_kind(dg)
    G = np.einsum("...cd,...dab->...cab", gi, low)
    # dgi[..., E, A, D] = d_E g^AD
    dgi = -np.einsum("...af,...efg,...gd->...ead", gi, dg, gi)

    # d_A Gamma^A_BC - d_B Gamma^A_AC, first-derivative part
    ric = np.einsum("...aad,...dbc->...bc", dgi, low) - np.einsum("...bad,...dac->...bc", dgi, low)
    ric += np.einsum("...ebc,...aae->...bc", G, G) - np.einsum("...abe,...eac->...bc", G, G)

    # second-derivative part, accumulated one (P, Q) pair at a time:
    # 1/2 g^AD (d_A d_C g_BD + d_B d_D g_AC - d_A d_D g_BC - d_B d_C g_AD)
    S2 = np.zeros_like(ric)
    H_all = np.empty(ric.shape[:-2] + (n, n, n, n)) if full else None
    for P in range(n):
        for Q in range(P, n):
            H = _second(metric, P, Q)
            if full:
                H_all[..., P, Q, :, :] = H
                H_all[..., Q, P, :, :] = H
            for X, Y in ((P, Q),) if P == Q else ((P, Q), (Q, P)):
                S2[..., :, Y] += 0.5 * np.einsum("...d,...bd->...b", gi[..., X, :], H)
                S2[..., X, :] += 0.5 * np.einsum("...a,...ac->...c", gi[..., :, Y], H)
                S2 -= 0.5 * gi[..., X, Y][..., None, None] * H
                S2[..., X, Y] -= 0.5 * np.einsum("...ad,...ad->...", gi, H)
    ric += S2
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    s = np.einsum("...bc,...bc->...", gi, ric)

    riem = None
    if full:
        # dlow[..., A, E, B, C] = d_A low_EBC
        dlow = 0.5 * (
            np.einsum("...abce->...aebc", H_all)
            + np.einsum("...acbe->...aebc", H_all)
            - np.einsum("...aebc->...aebc", H_all)
        )
        dG = np.einsum("...ade,...ebc->...adbc", dgi, low) + np.einsum("...de,...aebc->...adbc", gi, dlow)
        riem = (
            np.einsum("...adbc->...dabc", dG)
            - np.einsum("...bdac->...dabc", dG)
            + np.einsum("...ebc,...dae->...dabc", G, G)
            - np.einsum("...eac,...dbe->...dabc", G, G)
        )
    return CurvatureData(christoffel=G, ricci=ric, scalar=s, riemann=riem)


def scalar_curvature(metric):
    """Scalar curvature field of ``metric``."""
    return riemann_ricci_scalar(metric).scalar


def laplacian(metric, f):
    """Laplace-Beltrami operator with nonnegative spectrum.

    ``Delta f = -g^AB (d_A d_B f - Gamma^C_AB d_C f)``, so that on the unit
    round sphere ``Delta cos(theta) = n cos(theta)``.
    """
    ch = metric.chart
    f = np.asarray(f, dtype=float)
    gi = metric.inverse()
    G = christoffel(metric, ginv=gi)
    df = np.stack([diff1(f, ch.spacing[a], ch.periodic[a], a) for a in range(ch.dim)], axis=-1)
    out = np.einsum("...abc,...bc,...a->...", G, gi, df)
    for P in range(ch.dim):
        for Q in range(P, ch.dim):
            if P == Q:
                H = diff2(f, ch.spacing[P], ch.periodic[P], P)
                out -= gi[..., P, P] * H
            else:
                H = diff1(diff1(f, ch.spacing[P], ch.periodic[P], P), ch.spacing[Q], ch.periodic[Q], Q)
                out -= 2.0 * gi[..., P, Q] * H
    return out


def curvature_report(metric, scalar=None, lower_bound=None, max_violations=20):
    """Summary statistics of the scalar curvature on the interior mask.

    Parameters
    ----------
    metric : MetricField
    scalar : ndarray, optional
        Precomputed scalar curvature.
    lower_bound : float, optional
        Points with ``s < lower_bound`` are listed as violations.

    Returns
    -------
    dict
        ``min``, ``max``, ``mean`` (volume weighted), ``points`` and
        ``violations``.
    """
    if scalar is None:
        scalar = scalar_curvature(metric)
    m = metric.chart.interior_mask
    vals = scalar[m]
    w = metric.sqrt_det()[m]
    report = {
        "name": metric.name,
        "points": int(vals.size),
        "min": float(vals.min()),
        "max": float(vals.max()),
        "mean": float(np.sum(vals * w) / np.sum(w)),
        "violations": [],
    }
    if lower_bound is not None:
        report["lower_bound"] = float(lower_bound)
        idx = np.argwhere(m & (scalar < lower_bound))
        for row in idx[:max_violations]:
            pt = [float(ax[i]) for ax, i in zip(metric.chart.axes, row)]
            report["violations"].append({"point": pt, "scalar": float(scalar[tuple(row)])})
        report["violation_count"] = int(len(idx))
    return report
