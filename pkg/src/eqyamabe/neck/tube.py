"""Tube metrics around a submanifold, the curvature correction and gluing.

Coordinates on a tube are ``(x, y)`` with ``x`` a chart of the core ``W``
and ``y`` Cartesian coordinates along an orthonormal normal frame
``e_1, ..., e_q``. The normal connection is stored as
``Gamma[..., i, alpha, beta] = <nabla_i e_alpha, e_beta>`` and the second
fundamental form as ``Pi[..., alpha, i, j]``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from eqyamabe.constants import conformal_exponents
from eqyamabe.errors import IncompatibleJetError, InvalidSpecError, ShrinkTubeError, TubeRadiusError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.conformal import ConformalFactor
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.metric import MetricField
from eqyamabe.neck.profiles import interpolation_profile

logger = logging.getLogger(__name__)

__all__ = [
    "TubeData",
    "tube_chart",
    "tube_radius",
    "canonical_tube_metric",
    "correction_factor",
    "glue_interpolated_metric",
    "jet_order",
    "c1_distance",
    "interpolation_curvature_gap",
]


@dataclass(frozen=True)
class TubeData:
    """First-order data of a submanifold ``W`` of codimension ``q``.

    Parameters
    ----------
    q : int
        Codimension, at least 3.
    gW : MetricField
        Induced metric on ``W`` with a closed-form evaluator.
    second_fundamental : callable
        ``Pi(*x) -> (..., q, m, m)``, symmetric in the last two axes.
    normal_connection : callable
        ``Gamma(*x) -> (..., m, q, q)``, antisymmetric in the last two.
    r0 : float
        Tube radius.
    """

    q: int
    gW: MetricField
    second_fundamental: object
    normal_connection: object
    r0: float

    def __post_init__(self):
        if self.q < 3:
            raise InvalidSpecError(f"codimension must be at least 3, got {self.q}")
        if not self.r0 > 0:
            raise InvalidSpecError("tube radius must be positive")
        if self.gW.func is None:
            raise InvalidSpecError("core metric needs a closed-form evaluator")
        x = self.gW.chart.mesh()
        Pi = np.asarray(self.second_fundamental(*x))
        if np.max(np.abs(Pi - np.swapaxes(Pi, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Pi), initial=0.0)):
            raise InvalidSpecError("second fundamental form must be symmetric")

    @property
    def m(self):
        return self.gW.dim

    @classmethod
    def totally_geodesic(cls, gW, q, r0):
        """Tube data with ``Pi = 0`` and a parallel normal frame."""
        m = gW.dim
        return cls(
            q,
            gW,
            lambda *x: np.zeros(np.broadcast(*x).shape + (q, m, m)),
            lambda *x: np.zeros(np.broadcast(*x).shape + (m, q, q)),
            r0,
        )


def tube_chart(tube, y_resolution=17, half_width=None):
    """Product of the core chart with the box ``[-R, R]^q``.

    An odd ``y_resolution`` puts a sample on the core ``y = 0``.
    """
    R = tube.r0 if half_width is None else half_width
    c = tube.gW.chart
    return GridChart(
        bounds=c.bounds + ((-R, R),) * tube.q,
        resolution=c.resolution + (int(y_resolution),) * tube.q,
        periodic=c.periodic + (False,) * tube.q,
        excluded_bands=c.excluded_bands + (None,) * tube.q,
        labels=c.labels + tuple(f"y{a + 1}" for a in range(tube.q)),
    )


def tube_radius(chart, m):
    """``|y|`` on a tube chart whose first ``m`` axes belong to the core."""
    X = chart.mesh()
    return np.sqrt(sum(Y**2 for Y in X[m:]))


def _canonical_func(tube):
    m, q = tube.m, tube.q
    gWf, Pif, Gf = tube.gW.func, tube.second_fundamental, tube.normal_connection

    def func(*coords):
        coords = np.broadcast_arrays(*coords)
        x, y = coords[:m], np.stack(coords[m:], axis=-1)
        shape = coords[0].shape
        g = np.zeros(shape + (m + q, m + q))
        gw = np.broadcast_to(np.asarray(gWf(*x)), shape + (m, m))
        Pi = np.broadcast_to(np.asarray(Pif(*x)), shape + (q, m, m))
        Ga = np.broadcast_to(np.asarray(Gf(*x)), shape + (m, q, q))
        g[..., :m, :m] = gw - 2.0 * np.einsum("...a,...aij->...ij", y, Pi)
        mixed = -np.einsum("...iab,...b->...ia", Ga, y)
        g[..., :m, m:] = mixed
        g[..., m:, :m] = np.swapaxes(mixed, -1, -2)
        g[..., m:, m:] = np.eye(q)
        return g

    return func


def canonical_tube_metric(tube, y_resolution=17):
    """First-order tube metric.

    ``g_ij = gW_ij - 2 y^a Pi^a_ij``, ``g_ia = -Gamma_i^ab y^b`` and
    ``g_ab = delta_ab``. The returned field is defined on the box
    ``[-r0, r0]^q`` but positivity is checked on the ball ``|y| <= r0``.

    Raises
    ------
    TubeRadiusError
        If the metric degenerates inside the ball; ``max_radius`` is the
        largest radius (to 1e-6 relative) at which it stays positive.
    """
    chart = tube_chart(tube, y_resolution)
    func = _canonical_func(tube)
    metric = MetricField.from_function(chart, func, name="canonical-tube", validate=False)
    r = tube_radius(chart, tube.m)

    def min_eig(scale):
        X = chart.mesh()
        pts = list(X[: tube.m]) + [Y * scale for Y in X[tube.m :]]
        inside = r <= tube.r0 * (1 + 1e-12)
        G = func(*pts)[inside & chart.mask]
        return float(np.min(np.linalg.eigvalsh(G)[:, 0]))

    if min_eig(1.0) <= 0:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if min_eig(mid) > 0:
                lo = mid
            else:
                hi = mid
        raise TubeRadiusError(
            f"tube metric degenerate within r0={tube.r0:g}; admissible radius {lo * tube.r0:.6g}", max_radius=lo * tube.r0
        )
    return metric


def correction_factor(tube, s_g_on_W, s_ghat_on_W, n, chart=None, denominator="2aq"):
    """Conformal factor ``u = 1 - r^2 (s_g - s_ghat) / (2 a q)`` on the tube.

    ``u(x, 0) = 1`` and ``du/dy(x, 0) = 0``; the Laplacian of ``u`` on the
    core equals ``(s_g - s_ghat)/a``, so the conformal metric
    ``u^(p-2) ghat`` has scalar curvature ``s_g`` along ``W``.

    Parameters
    ----------
    tube : TubeData
    s_g_on_W, s_ghat_on_W : array_like
        Scalar curvatures sampled on the core chart (or scalars).
    n : int
        Ambient dimension ``dim W + q``.
    chart : GridChart, optional
        Tube chart; defaults to :func:`tube_chart`.
    denominator : {"2aq", "8aq"}
        ``"8aq"`` reproduces a variant normalisation whose Laplacian on
        the core is a quarter of the required value; kept for comparison.

    Returns
    -------
    ConformalFactor

    Raises
    ------
    ShrinkTubeError
        If ``u <= 0`` on the ball ``|y| <= r0``.
    """
    if n != tube.m + tube.q:
        raise InvalidSpecError("n must equal dim W + q")
    p, a = conformal_exponents(n)
    factor = {"2aq": 2.0, "8aq": 8.0}[denominator] * a * tube.q
    chart = chart or tube_chart(tube)
    m = tube.m
    D = np.asarray(s_g_on_W, dtype=float) - np.asarray(s_ghat_on_W, dtype=float)
    D = D.reshape(D.shape + (1,) * (chart.dim - D.ndim)) if D.ndim else D
    r = tube_radius(chart, m)
    u = 1.0 - r**2 * D / factor
    inside = r <= tube.r0 * (1 + 1e-12)
    if np.any(u[inside] <= 0):
        raise ShrinkTubeError(f"correction factor nonpositive inside r0={tube.r0:g}; shrink the tube")
    # outside the ball the factor is irrelevant; keep it positive for the type
    u = np.where(inside, u, np.maximum(u, np.min(u[inside])))
    return ConformalFactor(u, n)


def correction_function(tube, defect, n, denominator="2aq"):
    """Closed-form ``u(x, y)`` for a constant defect ``s_g - s_ghat``."""
    p, a = conformal_exponents(n)
    factor = {"2aq": 2.0, "8aq": 8.0}[denominator] * a * tube.q
    m = tube.m

    def u(*coords):
        return 1.0 - sum(np.asarray(c) ** 2 for c in coords[m:]) * defect / factor

    return u


def _pairwise_radius(coords, m):
    return np.sqrt(sum(np.asarray(c) ** 2 for c in coords[m:]))


def jet_order(g, gbar, m, radii=None, directions=8, seed=0):
    """Fitted exponent of ``max |gbar - g|`` against the core distance.

    Both metrics are evaluated in closed form along rays leaving the core
    in pseudo-random directions; the slope of the log-log fit is the
    order of contact (2 means agreement of value and first derivative).
    """
    if radii is None:
        radii = np.geomspace(1e-3, 1e-1, 9)
    rng = np.random.default_rng(seed)
    ch = g.chart
    q = ch.dim - m
    x0 = [rng.uniform(lo, hi, directions) for lo, hi in ch.bounds[:m]]
    d = rng.normal(size=(directions, q))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    errs = []
    for r in radii:
        pts = list(x0) + [r * d[:, a] for a in range(q)]
        errs.append(np.max(np.abs(gbar.evaluate(*pts) - g.evaluate(*pts))))
    errs = np.maximum(np.asarray(errs), 1e-300)
    slope = np.polyfit(np.log(radii), np.log(errs), 1)[0]
    return float(slope), np.asarray(radii), errs


def glue_interpolated_metric(g, gbar, delta, m, jet_tol=1.5, check_profile=False):
    """Interpolate ``g_delta = g + w_delta(r) (gbar - g)``.

    Parameters
    ----------
    g, gbar : MetricField
        Metrics on a common tube chart whose first ``m`` axes are the
        core. Both need closed-form evaluators.
    delta : float
    m : int
        Core dimension.
    jet_tol : float
        Minimal fitted contact order of ``gbar - g`` at the core.

    Returns
    -------
    MetricField
        Samples on the common chart, with a closed-form evaluator.

    Raises
    ------
    IncompatibleJetError
        If ``gbar`` and ``g`` do not agree to first order on the core.
    """
    if g.chart != gbar.chart:
        raise InvalidSpecError("metrics must share a chart")
    order, _, errs = jet_order(g, gbar, m)
    if errs.max() > 1e-14 and order < jet_tol:
        raise IncompatibleJetError(f"gbar - g vanishes only to order {order:.3f} < {jet_tol} on the core")
    w = interpolation_profile(delta, check=check_profile)
    gf, bf = g.func, gbar.func

    def func(*coords):
        r = _pairwise_radius(coords, m)
        G = np.asarray(gf(*coords))
        return G + np.asarray(w(r))[..., None, None] * (np.asarray(bf(*coords)) - G)

    return MetricField.from_function(g.chart, func, name=f"glue({delta:g})")


def c1_distance(g1, g2, m, r_min=1e-9, r_max=None, radii=60, directions=6, seed=0):
    """``C^1`` distance between two closed-form tube metrics.

    The transition of ``w_delta`` can be far below any grid spacing, so
    both metrics are evaluated along rays leaving the core at
    log-spaced radii. First derivatives use centred differences with a
    step proportional to the radius.

    Returns
    -------
    float
        ``max(sup |g1 - g2|, sup |d(g1 - g2)|)`` over the samples.
    """
    ch = g1.chart
    q = ch.dim - m
    if r_max is None:
        r_max = min(hi for lo, hi in ch.bounds[m:])
    rng = np.random.default_rng(seed)
    x0 = [rng.uniform(lo, hi, directions) for lo, hi in ch.bounds[:m]]
    d = rng.normal(size=(directions, q))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rr = np.geomspace(r_min, r_max, radii)
    X = [np.repeat(x[None, :], rr.size, 0) for x in x0]
    Y = [rr[:, None] * d[None, :, a] for a in range(q)]
    pts = X + Y

    def diff(coords):
        return np.asarray(g1.evaluate(*coords)) - np.asarray(g2.evaluate(*coords))

    d0 = float(np.max(np.abs(diff(pts))))
    d1 = 0.0
    h = 1e-4 * rr[:, None]
    for ax in range(ch.dim):
        plus = [c + (h if i == ax else 0.0) for i, c in enumerate(pts)]
        minus = [c - (h if i == ax else 0.0) for i, c in enumerate(pts)]
        dd = (diff(plus) - diff(minus)) / (2.0 * h[..., None, None])
        d1 = max(d1, float(np.max(np.abs(dd))))
    return max(d0, d1)


def interpolation_curvature_gap(g, gbar, delta, m, r_floor=1e-4, y_resolution=25, x_resolution=None):
    """``sup |s(g_delta) - s(g)|`` over annuli from ``2 delta`` down to ``r_floor``.

    The transition of ``w_delta`` spans many decades of ``r`` so a single
    grid cannot resolve it. The sup is taken over nested Cartesian boxes
    of half-width ``R_j = 2 delta 2^-j``, each sampled at the same
    resolution, keeping only the annulus ``R_j / 4 < r <= R_j / 2`` where
    the stencil is well inside the box. Below about ``1e-4`` second
    differences of an ``O(1)`` metric lose all digits in double precision,
    hence ``r_floor``.

    Returns
    -------
    float
        The sup.
    list of dict
        Per-annulus ``(R, gap)`` records.
    """
    gd = glue_interpolated_metric(g, gbar, delta, m)
    base = g.chart
    q = base.dim - m
    lo_r = max(r_floor, 0.25 * math.exp(-1.0 / delta))
    records = []
    R = 2.0 * delta
    while R / 4 >= lo_r / 2:
        xs = base.resolution[:m] if x_resolution is None else (x_resolution,) * m
        ch = GridChart(base.bounds[:m] + ((-R, R),) * q, tuple(xs) + (y_resolution,) * q,
                       base.periodic[:m] + (False,) * q, base.excluded_bands[:m] + (None,) * q)
        r = tube_radius(ch, m)
        sel = (r > R / 4) & (r <= R / 2) & ch.interior_mask
        s_d = scalar_curvature(MetricField.from_function(ch, gd.func, validate=False))
        s_g = scalar_curvature(MetricField.from_function(ch, g.func, validate=False))
        gap = float(np.max(np.abs(s_d - s_g)[sel]))
        records.append({"R": R, "gap": gap})
        R *= 0.5
    return max(rec["gap"] for rec in records), records
