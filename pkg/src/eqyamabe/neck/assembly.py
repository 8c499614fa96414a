"""Assembly of the surgered metric from outer, bend and homotopy regions.

Near the core the surgered manifold is the hypersurface traced by the
bending curve in ``R x (tube)``. With the first-order tube metric its
induced metric is ``dL^2 + h_(r(L))``, where ``h_r`` is the boundary
metric of the tube of radius ``r``; the homotopy collar
``H_(mu r3)(z, t/d) + mu^2 dt^2`` closes it off. Region volumes are
computed as ``int r^(q-1) V(r) dL`` with ``V`` the volume of the
normalised cross-section, which stays accurate when ``r`` underflows.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from eqyamabe.errors import AssemblyError, InvalidSpecError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.curvature import curvature_report, scalar_curvature
from eqyamabe.geometry.integrals import volume
from eqyamabe.geometry.metric import MetricField
from eqyamabe.neck.bend import certify_bend, shrink_curve
from eqyamabe.neck.homotopy import (
    _measure_mask,
    _metric_func,
    _region_chart,
    _rotation_pair,
    collar_profile,
    normalized_cross_section,
    sphere_embedding,
)

logger = logging.getLogger(__name__)

__all__ = ["NeckAssembly", "section_volume_function", "curve_region_volume", "bend_region_metric",
           "assemble_surgered_metric"]

INTERFACE_TOL = 1e-6


@dataclass
class NeckAssembly:
    """Tagged regions of a surgered metric with volume and curvature data.

    Attributes
    ----------
    regions : list of dict
        ``tag`` (outer, bend, homotopy), ``metric`` (a representative
        :class:`MetricField` or ``None``), ``volume`` and ``scalar``
        (certified or computed ``(min, max)``).
    volumes : dict
        ``S``, ``T`` and ``N`` neck volumes plus per-region volumes.
    scalar_reports : dict
        Per-region ``(min, max)``.
    parameters : dict
        ``delta, eps, r0, r1, r1p, r2, r3, theta0, eps2`` and ``mu``.
    interfaces : list of dict
        Relative metric mismatch at each shared boundary.
    certified_lower_bound : float
    """

    regions: list
    volumes: dict
    scalar_reports: dict
    parameters: dict
    interfaces: list = field(default_factory=list)
    certified_lower_bound: float = -math.inf
    bend_report: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "regions": [{k: v for k, v in r.items() if k != "metric"} for r in self.regions],
            "volumes": self.volumes,
            "scalar_reports": self.scalar_reports,
            "parameters": self.parameters,
            "interfaces": self.interfaces,
            "certified_lower_bound": self.certified_lower_bound,
        }


def section_volume_function(spec, r_max, r_min=None, samples=24, nu=1.0):
    """``V(r) = vol(normalised h_r)`` tabulated on a log grid, as a callable.

    ``V`` is smooth in ``r`` with ``V(0) = vol(W) vol(S^(q-1))``; below
    the grid it is held at its smallest-radius value.
    """
    r_min = r_max * 1e-6 if r_min is None else r_min
    rr = np.geomspace(r_min, r_max, samples)
    V = np.array([volume(normalized_cross_section(spec, float(r), nu)) for r in rr])

    def f(r):
        return np.interp(np.asarray(r, dtype=float), rr, V)

    f.radii, f.values = rr, V
    return f


def curve_region_volume(curve, V, r_cut, q=None):
    """``int r^(q-1) V(r) dL`` over the part of the curve with ``r <= r_cut``.

    The straight step is integrated exactly in ``r`` (adaptive quadrature
    with ``dL = dr / cos(theta0)``); other segments use the trapezoid
    rule on their samples. Step 1 is included where it dips below
    ``r_cut``.
    """
    q = curve.q if q is None else q
    total = 0.0
    for seg in curve.segments:
        if seg.step == 2:
            r_hi = min(r_cut, float(np.exp(seg.log_r[0])))
            r_lo = float(np.exp(seg.log_r[-1]))
            if r_hi > r_lo:
                val, _ = quad(lambda r: r ** (q - 1) * float(V(r)), r_lo, r_hi, epsabs=0.0, epsrel=1e-11, limit=200,
                              points=None)
                total += val / math.cos(curve.theta0)
            continue
        lr = seg.log_r
        keep = lr <= math.log(r_cut)
        if not np.any(keep):
            continue
        with np.errstate(under="ignore"):
            f = np.exp((q - 1) * lr) * V(np.exp(lr))
        f = np.where(keep, f, 0.0)
        total += float(np.trapezoid(f, seg.ell))
    return total


def collar_volume(spec, r, mu, d=None, samples=9):
    """Volume of ``H_(mu r)(z, t/d) + mu^2 dt^2`` on ``W x S^(q-1) x [0, d]``."""
    d = spec.d if d is None else d
    t = np.linspace(0.0, 1.0, samples)
    vals = []
    for s in t:
        nu = float(collar_profile(s))
        vals.append(volume(normalized_cross_section(spec, mu * r, nu)))
    vals = np.asarray(vals)
    return float(mu * d * (mu * r) ** (spec.q - 1) * np.trapezoid(vals, t))


def bend_region_metric(curve, spec, r_cut, resolution=48, rotation=None):
    """Closed-form metric ``dL^2 + h_(r(L))`` on steps 1 and 2 down to ``r_cut``.

    Step 1 has ``theta = k1 L`` and ``r = r0 - sin(k1 L)/k1``; step 2 is
    straight. The chart is ``(L, W, sphere)``.

    Returns
    -------
    MetricField
    callable
        ``r(L)``.
    """
    k1, th0 = curve.k_step1, curve.theta0
    L1 = th0 / k1
    r_cut = max(r_cut, curve.r2)
    L_end = L1 + (curve.r1 - r_cut) / math.cos(th0)

    def radius(L):
        L = np.asarray(L, dtype=float)
        r_step1 = curve.r0 - np.sin(k1 * np.minimum(L, L1)) / k1
        return np.where(L <= L1, r_step1, curve.r1 - (L - L1) * math.cos(th0))

    base = _region_chart(spec, False)
    chart = GridChart(((0.0, L_end),) + base.bounds, (resolution,) + base.resolution,
                      (False,) + base.periodic, (None,) + base.excluded_bands)
    dim = chart.dim

    def func(L, *rest):
        r = radius(L)
        shape = np.broadcast(L, *rest).shape
        out = np.zeros(shape + (dim, dim))
        out[..., 0, 0] = 1.0
        sec = _section_with_radius(spec, np.broadcast_to(r, shape), [np.broadcast_to(c, shape) for c in rest], rotation)
        out[..., 1:, 1:] = sec
        return out

    metric = MetricField.from_function(chart, func, name="bend-region", validate=False)
    return metric, radius


def _section_with_radius(spec, r, coords, rotation=None):
    m, q = spec.m, spec.q
    k = q - 1
    x, ang = coords[:m], coords[m:]
    Y, dY = sphere_embedding(ang, rotation)
    A, B = spec.perturbation(r[..., None, None], x, Y)
    shape = r.shape
    g = np.zeros(shape + (m + k, m + k))
    g[..., :m, :m] = np.broadcast_to(spec.gW.func(*x), shape + (m, m)) + np.broadcast_to(A, shape + (m, m))
    mixed = np.einsum("...ib,...ab->...ia", np.broadcast_to(B, shape + (m, q)), dY)
    g[..., :m, m:] = mixed
    g[..., m:, :m] = np.swapaxes(mixed, -1, -2)
    g[..., m:, m:] = (r**2)[..., None, None] * np.einsum("...ab,...cb->...ac", dY, dY)
    return g


def _relative_mismatch(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def assemble_surgered_metric(outer, curve, spec, delta, eps, s_g_lower=0.0, homotopy_constant=None,
                             section_samples=24, check_outer_curvature=True, band=0.7):
    """Compose the neck ``M_(delta eps)`` and report its regions.

    Parameters
    ----------
    outer : MetricField
        Metric of ``M_0`` away from the core (for its own report).
    curve : BendCurve
        Unshrunk, certifiable curve.
    spec : HomotopyRegionSpec
        Supplies ``W``, ``q`` and the boundary perturbation.
    delta, eps : float
        The neck uses ``gamma_mu`` with ``mu = delta * eps``.
    s_g_lower : float
        Lower bound of ``s_g`` on the tube used by the bend certificate.
    homotopy_constant : float, optional
        Fitted constant ``C`` from :func:`certify_homotopy`; the collar is
        then certified at ``C / (mu r3)^2``.
    band : float
        Polar distance below which engine curvature samples are skipped
        (two rotated sphere charts are used, as in the homotopy check).

    Returns
    -------
    NeckAssembly

    Raises
    ------
    AssemblyError
        If adjacent regions disagree at a shared boundary beyond
        ``1e-6`` relative.
    """
    if not (0 < delta <= 1 and 0 < eps <= 1):
        raise InvalidSpecError("delta and eps must lie in (0, 1]")
    if spec.q != curve.q:
        raise AssemblyError("curve and homotopy region have different codimension", interface="bend/homotopy")
    mu = delta * eps
    gam = shrink_curve(curve, mu)
    bend_rep = certify_bend(gam, s_g_lower)
    q = curve.q
    r3 = gam.r3
    log_r3 = gam.params.get("log_r3", math.log(r3) if r3 > 0 else -math.inf)

    # interfaces: compare normalised cross-sections of both sides
    interfaces = []
    sec_end = normalized_cross_section(spec, max(r3, 1e-300), 1.0).g
    col0 = _metric_func(spec, 1.0, None, True, 1.0, normalized=True, radius=max(r3, 1e-300))
    ch = _region_chart(spec, True, bands=False)
    col_g = MetricField.from_function(ch, col0, validate=False).g[..., 0, :-1, :-1]
    mm = _relative_mismatch(sec_end, col_g)
    interfaces.append({"interface": "bend/homotopy", "mismatch": mm, "radius_log": log_r3})
    if mm > INTERFACE_TOL:
        raise AssemblyError(f"bend/homotopy mismatch {mm:.3g}", interface="bend/homotopy")
    bend_metric, radius_of = bend_region_metric(gam, spec, curve.r1p)
    tube_side = normalized_cross_section(spec, curve.r0, 1.0).g
    bend_side = normalized_cross_section(spec, float(radius_of(0.0)), 1.0).g
    mm = _relative_mismatch(tube_side, bend_side)
    interfaces.append({"interface": "outer/bend", "mismatch": mm})
    if mm > INTERFACE_TOL:
        raise AssemblyError(f"outer/bend mismatch {mm:.3g}", interface="outer/bend")

    V = section_volume_function(spec, curve.r0, r_min=min(curve.r0 * 1e-8, mu * curve.r2), samples=section_samples)
    vol_S_curve = curve_region_volume(gam, V, mu * curve.r1p)
    vol_T_curve = curve_region_volume(gam, V, eps * curve.r1)
    vol_N_curve = curve_region_volume(gam, V, curve.r0)
    vol_collar = collar_volume(spec, r3, 1.0, d=spec.d) * mu if r3 > 0 else 0.0
    volumes = {
        "S": vol_S_curve + vol_collar,
        "T": vol_T_curve + vol_collar,
        "N": vol_N_curve + vol_collar,
        "homotopy": vol_collar,
        "outer": volume(outer),
    }

    reports = {}
    engine = []
    # two rotated charts cover S^2 away from the polar bands; higher spheres are not covered
    for R in _rotation_pair(q) if q == 3 else []:
        gR, _ = bend_region_metric(gam, spec, curve.r1p, rotation=R)
        sR = scalar_curvature(gR)
        mask = _measure_mask(gR.chart, 1 + spec.m, q - 1, band)
        engine.append((float(np.min(sR[mask])), float(np.max(sR[mask]))))
    reports["bend"] = {
        "certified_min": bend_rep["certified_lower_bound"],
        "engine_min_steps12": min(e[0] for e in engine) if engine else None,
        "engine_max_steps12": max(e[1] for e in engine) if engine else None,
    }
    if homotopy_constant is not None and r3 > 0:
        reports["homotopy"] = {"certified_min": homotopy_constant / (mu * r3) ** 2}
    else:
        reports["homotopy"] = {"certified_min": None}
    outer_rep = curvature_report(outer) if check_outer_curvature else {"min": None, "max": None}
    reports["outer"] = {"min": outer_rep["min"], "max": outer_rep["max"]}

    bounds = [bend_rep["certified_lower_bound"]]
    if reports["homotopy"]["certified_min"] is not None:
        bounds.append(reports["homotopy"]["certified_min"])
    if outer_rep["min"] is not None:
        bounds.append(min(outer_rep["min"], s_g_lower) if outer_rep["min"] < s_g_lower else s_g_lower)
    regions = [
        {"tag": "outer", "metric": outer, "volume": volumes["outer"], "scalar": (outer_rep["min"], outer_rep["max"])},
        {"tag": "bend", "metric": bend_metric, "volume": vol_N_curve,
         "scalar": (reports["bend"]["certified_min"], None)},
        {"tag": "homotopy", "metric": None, "volume": vol_collar,
         "scalar": (reports["homotopy"]["certified_min"], None)},
    ]
    params = {
        "delta": delta, "eps": eps, "mu": mu, "r0": curve.r0, "r1": curve.r1, "r1p": mu * curve.r1p,
        "r2": gam.r2, "r3": r3, "log_r3": log_r3, "theta0": curve.theta0, "eps2": curve.eps2,
    }
    asm = NeckAssembly(regions, volumes, reports, params, interfaces, float(min(bounds)), bend_rep)
    logger.info("assembly mu=%.4g: vol S=%.6g T=%.6g N=%.6g", mu, volumes["S"], volumes["T"], volumes["N"])
    return asm
