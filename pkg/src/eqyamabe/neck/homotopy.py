"""Homotopy between the induced boundary metric and a product metric.

On ``W x S^(q-1)`` the reference metric is ``hbar_r = gW + r^2 g_S``.
A perturbation ``h_r - hbar_r`` is described through the unit normal
direction ``Y`` in ``R^q`` and its angular derivatives ``dY``: it returns
a ``W``-block ``A(r, x, Y)`` and an ambient mixed coefficient
``B(r, x, Y)`` with shape ``(m, q)``. In angular coordinates the mixed
block is ``B . dY`` and the sphere block vanishes, so the expected orders
are ``A = O(r)`` and ``B = O(r^2)``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from eqyamabe.errors import InvalidPerturbationError, InvalidSpecError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.metric import MetricField
from eqyamabe.neck.profiles import smoothstep

logger = logging.getLogger(__name__)

__all__ = [
    "HomotopyRegionSpec",
    "sphere_embedding",
    "tube_boundary_perturbation",
    "zero_perturbation",
    "block_orders",
    "homotopy_metric",
    "collar_profile",
    "certify_homotopy",
    "normalized_cross_section",
]


def sphere_embedding(angles, rotation=None):
    """Unit vector ``Y`` and its angular derivatives from polar angles.

    Parameters
    ----------
    angles : sequence of ndarray
        ``(t_1, ..., t_(k-1), phi)`` for ``S^k``.
    rotation : ndarray, optional
        Orthogonal ``(k+1, k+1)`` matrix applied to ``Y``.

    Returns
    -------
    Y : ndarray, shape (..., k+1)
    dY : ndarray, shape (..., k, k+1)
        ``dY[..., a, :] = dY / d angle_a``.
    """
    angles = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in angles])
    k = len(angles)
    shape = angles[0].shape
    s = [np.sin(a) for a in angles]
    c = [np.cos(a) for a in angles]
    Y = np.zeros(shape + (k + 1,))
    dY = np.zeros(shape + (k, k + 1))
    for j in range(k + 1):
        # Y_j = prod_{i<j} sin a_i * (cos a_j if j < k else 1)
        for a in range(k + 1):
            if a == k:
                term = np.ones(shape)
                for i in range(min(j, k)):
                    term = term * s[i]
                if j < k:
                    term = term * c[j]
                Y[..., j] = term
                continue
            if a > j:
                continue
            term = np.ones(shape)
            for i in range(min(j, k)):
                term = term * (c[i] if i == a else s[i])
            if j < k:
                term = term * (-s[j] if a == j else c[j])
            dY[..., a, j] = term
    if rotation is not None:
        R = np.asarray(rotation, dtype=float)
        Y = Y @ R.T
        dY = dY @ R.T
    return Y, dY


def zero_perturbation(m, q):
    """Perturbation with both blocks identically zero."""

    def pert(r, x, Y):
        shape = Y.shape[:-1]
        return np.zeros(shape + (m, m)), np.zeros(shape + (m, q))

    return pert


def tube_boundary_perturbation(second_fundamental, normal_connection):
    """Perturbation induced on the boundary of a canonical tube.

    On ``|y| = r`` the first-order tube metric restricts to
    ``gW - 2 r Y.Pi`` on ``W`` and has mixed terms
    ``-r^2 Gamma_i^ab Y^b dY^a``; the sphere block is exactly ``r^2 g_S``.

    Parameters
    ----------
    second_fundamental : callable
        ``Pi(*x) -> (..., q, m, m)``.
    normal_connection : callable
        ``Gamma(*x) -> (..., m, q, q)``.
    """

    def pert(r, x, Y):
        Pi = np.asarray(second_fundamental(*x))
        Ga = np.asarray(normal_connection(*x))
        A = -2.0 * r * np.einsum("...a,...aij->...ij", Y, Pi)
        B = -(r**2) * np.einsum("...iab,...b->...ia", Ga, Y)
        return A, B

    return pert


@dataclass(frozen=True)
class HomotopyRegionSpec:
    """Data of the homotopy region ``W x S^(q-1)`` (and its collar).

    Parameters
    ----------
    gW : MetricField
        Fixed metric on ``W`` with a closed-form evaluator.
    q : int
    r : float
        Sphere radius (``r3`` for the collar).
    nu_grid : tuple of float
        Interpolation parameters in ``[0, 1]``.
    d : float
        Collar length.
    mu : float
        Shrink factor in ``(0, 1]``.
    perturbation : callable
        ``(r, x, Y) -> (A, B)``; see the module docstring.
    sphere_resolution : int
        Samples per polar angle (the azimuth uses half as many).
    collar_resolution : int
        Samples along the collar.
    """

    gW: MetricField
    q: int
    r: float
    perturbation: object
    nu_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    d: float = 1.0
    mu: float = 1.0
    sphere_resolution: int = 64
    collar_resolution: int = 16
    label: str = field(default="homotopy", compare=False)

    def __post_init__(self):
        if self.q < 3:
            raise InvalidSpecError("codimension must be at least 3")
        if not self.r > 0 or not self.d > 0:
            raise InvalidSpecError("radius and collar length must be positive")
        if not 0 < self.mu <= 1:
            raise InvalidSpecError("mu must lie in (0, 1]")
        if any(not 0 <= v <= 1 for v in self.nu_grid):
            raise InvalidSpecError("nu values must lie in [0, 1]")
        if self.gW.func is None:
            raise InvalidSpecError("W metric needs a closed-form evaluator")

    @property
    def m(self):
        return self.gW.dim


def _rotation_pair(q):
    """Identity and a rotation swapping the first and last axes of ``R^q``."""
    R = np.eye(q)
    R[[0, -1]] = R[[-1, 0]]
    return [np.eye(q), R]


def _region_chart(spec, collar, bands=True):
    cW = spec.gW.chart
    k = spec.q - 1
    ns = spec.sphere_resolution
    s_bounds = [(0.0, math.pi)] * (k - 1) + [(0.0, 2.0 * math.pi)]
    s_res = [ns] * (k - 1) + [max(8, ns // 2)]
    s_bands = [2.0 * math.pi / ns if bands else None] * (k - 1) + [None]
    bounds = list(cW.bounds) + s_bounds
    res = list(cW.resolution) + s_res
    per = list(cW.periodic) + [False] * (k - 1) + [True]
    bands = list(cW.excluded_bands) + s_bands
    if collar:
        bounds.append((0.0, spec.d))
        res.append(spec.collar_resolution)
        per.append(False)
        bands.append(None)
    return GridChart(bounds, res, per, bands)


def _metric_func(spec, nu, rotation, collar, mu, normalized=False, radius=None):
    m, q = spec.m, spec.q
    k = q - 1
    gWf = spec.gW.func
    pert = spec.perturbation
    r = (spec.r if radius is None else radius) * (mu if collar else 1.0)
    # normalised form divides the sphere block by r^2 and the mixed block by r
    sphere_scale, mixed_scale = (1.0, 1.0 / r) if normalized else (r**2, 1.0)

    def func(*coords):
        coords = np.broadcast_arrays(*coords)
        x = coords[:m]
        ang = coords[m : m + k]
        shape = coords[0].shape
        Y, dY = sphere_embedding(ang, rotation)
        A, B = pert(r, x, Y)
        A = np.broadcast_to(A, shape + (m, m))
        B = np.broadcast_to(B, shape + (m, q))
        if collar:
            weight = collar_profile(coords[-1] / spec.d)
        else:
            weight = np.full(shape, float(nu))
        dim = m + k + (1 if collar else 0)
        g = np.zeros(shape + (dim, dim))
        g[..., :m, :m] = np.broadcast_to(gWf(*x), shape + (m, m)) + weight[..., None, None] * A
        mixed = mixed_scale * weight[..., None, None] * np.einsum("...ib,...ab->...ia", B, dY)
        g[..., :m, m : m + k] = mixed
        g[..., m : m + k, :m] = np.swapaxes(mixed, -1, -2)
        g[..., m : m + k, m : m + k] = sphere_scale * np.einsum("...ab,...cb->...ac", dY, dY)
        if collar:
            g[..., -1, -1] = mu**2
        return g

    return func


def collar_profile(s):
    """Smooth decreasing function equal to 1 near 0 and 0 near 1."""
    return 1.0 - smoothstep((np.asarray(s, dtype=float) - 0.15) / 0.7)


def block_orders(spec, radii=None, samples=64, seed=0):
    """Fitted exponents of ``max |A|`` and ``max |B|`` against ``r``.

    Returns
    -------
    dict
        ``w_block`` and ``mixed_block`` exponents (``inf`` for blocks that
        vanish identically) and the sampled maxima.
    """
    if radii is None:
        radii = spec.r * np.array([1.0, 0.5, 0.25, 0.125])
    rng = np.random.default_rng(seed)
    m, q = spec.m, spec.q
    x = [rng.uniform(lo, hi, samples) for lo, hi in spec.gW.chart.bounds]
    Y = rng.normal(size=(samples, q))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    a_max, b_max = [], []
    for r in radii:
        A, B = spec.perturbation(r, x, Y)
        a_max.append(float(np.max(np.abs(A))))
        b_max.append(float(np.max(np.abs(B))))
    out = {"radii": [float(r) for r in radii], "w_block_max": a_max, "mixed_block_max": b_max}
    for key, vals in (("w_block", a_max), ("mixed_block", b_max)):
        vals = np.asarray(vals)
        if np.all(vals == 0):
            out[key] = math.inf
        else:
            out[key] = float(np.polyfit(np.log(radii), np.log(np.maximum(vals, 1e-300)), 1)[0])
    return out


def homotopy_metric(spec, nu, include_collar=False, rotation=None, mu=None, check=True):
    """Metric ``nu h_r + (1 - nu) hbar_r`` or its collar version.

    Without the collar the chart is ``W x S^(q-1)``. With the collar it
    gains an axis ``t in [0, d]`` and carries
    ``H_(mu r)(z, t/d) + mu^2 dt^2`` with
    ``H_r(z, s) = phi(s) h_r + (1 - phi(s)) hbar_r`` and ``phi`` from
    :func:`collar_profile`; ``nu`` is then ignored.

    Raises
    ------
    InvalidPerturbationError
        If the block orders are lower than ``(1, 2)`` or the metric is not
        positive definite at some sample.
    """
    if not 0 <= nu <= 1:
        raise InvalidSpecError("nu must lie in [0, 1]")
    mu = spec.mu if mu is None else mu
    if check:
        orders = block_orders(spec)
        if orders["w_block"] < 0.9 or orders["mixed_block"] < 1.9:
            raise InvalidPerturbationError(
                f"perturbation orders ({orders['w_block']:.3g}, {orders['mixed_block']:.3g}) below (1, 2)"
            )
    chart = _region_chart(spec, include_collar)
    func = _metric_func(spec, nu, rotation, include_collar, mu)
    metric = MetricField.from_function(chart, func, name=f"{spec.label}(nu={nu:g})", validate=False)
    lam = np.linalg.eigvalsh(metric.g[chart.mask])[:, 0]
    if lam.min() <= 0:
        raise InvalidPerturbationError(f"perturbed metric not positive definite (min eigenvalue {lam.min():.3g})")
    return metric


def normalized_cross_section(spec, r, nu=1.0, bands=False):
    """Metric ``h_r^nu`` with the sphere block divided by ``r^2`` and mixed by ``r``.

    ``det h_r = r^(2(q-1)) det`` of this metric, so volumes of very thin
    cross-sections are ``r^(q-1)`` times a well-conditioned integral.
    """
    chart = _region_chart(spec, False, bands=bands)
    func = _metric_func(spec, nu, None, False, 1.0, normalized=True, radius=r)
    return MetricField.from_function(chart, func, name="normalized-section", validate=False)


def _measure_mask(chart, m, k, band):
    X = chart.mesh()
    mask = chart.interior_mask
    for T in X[m : m + k - 1]:
        mask = mask & (T >= band) & (T <= math.pi - band)
    return mask


def _min_scalar(spec, nu, collar, mu, band):
    k = spec.q - 1
    rotations = _rotation_pair(spec.q)
    mins = []
    for R in rotations:
        metric = homotopy_metric(spec, nu, include_collar=collar, rotation=R, mu=mu, check=False)
        s = scalar_curvature(metric)
        mask = _measure_mask(metric.chart, spec.m, k, band)
        mins.append(float(np.min(s[mask])))
    return min(mins)


def certify_homotopy(spec, r_list, mu_list=(1.0, 0.5, 0.25), band=0.7, stability=2.0):
    """Sweep ``nu`` and ``r`` (and ``mu`` on the collar) for ``min s * r^2``.

    For each radius the minimum over the ``nu`` grid of ``s r^2`` is
    recorded; the certificate requires these minima to be positive and
    within a factor ``stability`` of each other. On the collar with
    radius ``spec.r`` and each ``mu`` the quantity ``min s (mu r)^2`` must
    be positive.

    Curvature is measured on two charts of the sphere related by a
    rotation; on each, samples within ``band`` of a polar singularity are
    skipped. For ``S^2`` the two measured regions cover the sphere.

    Returns
    -------
    dict
        Block orders, per-``(r, nu)`` values, per-radius minima, the
        fitted constant, the collar sweep and a ``passed`` flag.
    """
    orders = block_orders(spec)
    if orders["w_block"] < 0.9 or orders["mixed_block"] < 1.9:
        raise InvalidPerturbationError(f"perturbation orders {orders['w_block']:.3g}, {orders['mixed_block']:.3g}")
    rows = []
    per_r = []
    worst = None
    for r in r_list:
        sub = HomotopyRegionSpec(spec.gW, spec.q, float(r), spec.perturbation, spec.nu_grid, spec.d, spec.mu,
                                 spec.sphere_resolution, spec.collar_resolution, spec.label)
        vals = []
        for nu in spec.nu_grid:
            v = _min_scalar(sub, nu, False, 1.0, band) * r**2
            rows.append({"r": float(r), "nu": float(nu), "min_s_r2": v})
            vals.append((v, nu))
        v, nu = min(vals)
        per_r.append(v)
        if worst is None or v < worst["min_s_r2"]:
            worst = {"r": float(r), "nu": float(nu), "min_s_r2": v}
    per_r = np.asarray(per_r)
    constant = float(per_r.min())
    spread = float(per_r.max() / per_r.min()) if constant > 0 else math.inf
    collar = []
    for mu in mu_list:
        v = _min_scalar(spec, 1.0, True, mu, band) * (mu * spec.r) ** 2
        collar.append({"mu": float(mu), "min_s_mur2": v})
    collar_vals = np.array([c["min_s_mur2"] for c in collar])
    report = {
        "q": spec.q,
        "block_orders": orders,
        "sweep": rows,
        "per_radius_min": [float(v) for v in per_r],
        "radii": [float(r) for r in r_list],
        "fitted_constant": constant,
        "spread": spread,
        "worst": worst,
        "collar": collar,
        "collar_spread": float(collar_vals.max() / collar_vals.min()) if collar_vals.min() > 0 else math.inf,
        "band": band,
    }
    report["passed"] = bool(constant > 0 and spread <= stability and collar_vals.min() > 0)
    logger.info("homotopy certificate: C=%.4g spread=%.3g collar=%s", constant, spread, collar_vals)
    return report
