"""Averaging over sampled isometry groups and constant test functions.

A compact one-parameter group is represented by a uniform quadrature of
its elements. Averaging a sampled function composes it with each element
through chart interpolation and takes the mean, which realizes the Haar
integral for circle actions up to quadrature and interpolation error.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from eqyamabe.errors import InvalidActionError, InvalidSpecError
from eqyamabe.geometry.integrals import einstein_hilbert

__all__ = [
    "SampledAction",
    "circle_action",
    "azimuth_action",
    "sphere_rotation_action",
    "polar_to_cartesian",
    "cartesian_to_polar",
    "group_average",
    "check_isometries",
    "evaluate_constant",
]

logger = logging.getLogger(__name__)

DEFAULT_GROUP_SAMPLES = 360


@dataclass(frozen=True)
class SampledAction:
    """Finite list of chart maps sampling a compact group.

    Parameters
    ----------
    maps : tuple of callable
        Each map takes the coordinate arrays ``(x_1, ..., x_n)`` and
        returns the image coordinates as a tuple of arrays.
    name : str
    """

    maps: tuple
    name: str = field(default="action", compare=False)

    def __post_init__(self):
        if not self.maps:
            raise InvalidSpecError("a sampled action needs at least one element")
        object.__setattr__(self, "maps", tuple(self.maps))

    def __len__(self):
        return len(self.maps)


def circle_action(generator, samples=DEFAULT_GROUP_SAMPLES, name="circle"):
    """Uniform samples ``theta_k = 2 pi k / N`` of a circle action.

    ``generator(theta, *coords)`` returns the image coordinates.
    """
    N = int(samples)
    if N < 1:
        raise InvalidSpecError("need at least one group sample")
    thetas = 2.0 * math.pi * np.arange(N) / N
    maps = tuple((lambda *x, th=th: tuple(generator(th, *x))) for th in thetas)
    return SampledAction(maps, name=f"{name}[{N}]")


def azimuth_action(chart, axis, samples=DEFAULT_GROUP_SAMPLES):
    """Translations along a periodic chart axis."""
    if not chart.periodic[axis]:
        raise InvalidSpecError(f"axis {axis} is not periodic")
    lo, hi = chart.bounds[axis]
    period = hi - lo

    def gen(theta, *x):
        out = list(x)
        out[axis] = lo + np.mod(np.asarray(x[axis]) - lo + theta * period / (2.0 * math.pi), period)
        return out

    return circle_action(gen, samples, name=f"shift[{chart.labels[axis]}]")


def polar_to_cartesian(coords, radius=1.0):
    """Iterated polar coordinates ``(t_1, ..., t_(n-1), phi)`` to ``R^(n+1)``."""
    coords = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords])
    n = len(coords)
    out = []
    prod = np.full(coords[0].shape, float(radius))
    for a in coords[:-1]:
        out.append(prod * np.cos(a))
        prod = prod * np.sin(a)
    out.append(prod * np.cos(coords[-1]))
    out.append(prod * np.sin(coords[-1]))
    assert len(out) == n + 1
    return out


def cartesian_to_polar(X):
    """Inverse of :func:`polar_to_cartesian` on the sphere through ``X``."""
    X = [np.asarray(x, dtype=float) for x in X]
    n = len(X) - 1
    out = []
    for k in range(n - 1):
        tail = np.sqrt(sum(x * x for x in X[k:]))
        out.append(np.arccos(np.clip(X[k] / np.where(tail > 0, tail, 1.0), -1.0, 1.0)))
    out.append(np.mod(np.arctan2(X[n], X[n - 1]), 2.0 * math.pi))
    return out


def sphere_rotation_action(n, plane=(0, 1), samples=DEFAULT_GROUP_SAMPLES):
    """Rotations of ``S^n`` in a coordinate plane of ``R^(n+1)``.

    The maps act on the iterated polar chart of :func:`round_sphere`.
    The plane ``(n-1, n)`` gives azimuth shifts; any other plane mixes
    the polar angles.
    """
    i, j = (int(k) for k in plane)
    if not (0 <= i < j <= n):
        raise InvalidSpecError(f"rotation plane {plane} is not a coordinate plane of R^{n + 1}")

    def gen(theta, *x):
        X = polar_to_cartesian(x)
        c, s = math.cos(theta), math.sin(theta)
        Xi, Xj = X[i], X[j]
        X[i] = c * Xi - s * Xj
        X[j] = s * Xi + c * Xj
        return cartesian_to_polar(X)

    return circle_action(gen, samples, name=f"SO(2)_{i}{j}")


def _interpolator(values, chart, method):
    axes, vals = [], np.asarray(values, dtype=float)
    pad = 3
    for ax, (x, per) in enumerate(zip(chart.axes, chart.periodic)):
        if per:
            L = chart.bounds[ax][1] - chart.bounds[ax][0]
            x = np.concatenate([x[-pad:] - L, x, x[:pad] + L])
            vals = np.concatenate(
                [np.take(vals, range(-pad, 0), axis=ax), vals, np.take(vals, range(pad), axis=ax)], axis=ax
            )
        axes.append(x)
    return RegularGridInterpolator(tuple(axes), vals, method=method, bounds_error=True)


def _wrap_clip(coords, chart):
    out = []
    for ax, c in enumerate(coords):
        lo, hi = chart.bounds[ax]
        c = np.asarray(c, dtype=float)
        if chart.periodic[ax]:
            c = lo + np.mod(c - lo, hi - lo)
        else:
            # Nearest-value extension past the outermost cell centres.
            c = np.clip(c, chart.axes[ax][0], chart.axes[ax][-1])
        out.append(c)
    return out


def check_isometries(metric, action, points=200, step=1e-5, rtol=1e-4, margin=0.05, seed=0):
    """Largest relative pullback mismatch ``|F^* g - g| / |g|``.

    The Jacobian of each map is taken by central differences at up to
    ``points`` random sample points of the chart mask. Pairs whose point
    or image lies within ``margin`` of a non-periodic chart boundary are
    skipped, since polar charts are singular there.

    Raises
    ------
    InvalidActionError
        If the mismatch exceeds ``rtol``.
    """
    ch = metric.chart
    n = ch.dim
    mesh = ch.mesh()
    idx = np.flatnonzero(ch.mask.ravel())
    rng = np.random.default_rng(seed)
    if idx.size > points:
        idx = rng.choice(idx, size=points, replace=False)
    x = [m.ravel()[idx] for m in mesh]

    def near_edge(c):
        bad = np.zeros(c[0].shape, dtype=bool)
        for ax in range(n):
            if not ch.periodic[ax]:
                lo, hi = ch.bounds[ax]
                bad |= (c[ax] - lo < margin) | (hi - c[ax] < margin)
        return bad

    keep0 = ~near_edge(x)
    g0 = metric.evaluate(*x)
    scale = float(np.max(np.abs(g0)))
    worst = 0.0
    for F in action.maps:
        y = [np.asarray(v, dtype=float) for v in F(*x)]
        keep = keep0 & ~near_edge(y)
        if not np.any(keep):
            continue
        J = np.empty(x[0].shape + (n, n))
        for b in range(n):
            xp = [c + (step if a == b else 0.0) for a, c in enumerate(x)]
            xm = [c - (step if a == b else 0.0) for a, c in enumerate(x)]
            yp, ym = F(*xp), F(*xm)
            for a in range(n):
                d = np.asarray(yp[a]) - np.asarray(ym[a])
                if ch.periodic[a]:
                    L = ch.bounds[a][1] - ch.bounds[a][0]
                    d = d - L * np.round(d / L)
                J[..., a, b] = d / (2.0 * step)
        gy = metric.evaluate(*y)
        pull = np.einsum("...ai,...ab,...bj->...ij", J, gy, J)
        err = float(np.max(np.abs(pull - g0)[keep])) / scale
        worst = max(worst, err)
        if err > rtol:
            raise InvalidActionError(
                f"{action.name}: pullback metric differs by {err:.2e} (relative) from {metric.name}"
            )
    return worst


def group_average(phi, metric, action, method="linear", check=True):
    """Average ``phi`` over a sampled group: ``(1/N) sum_k phi o g_k``.

    Parameters
    ----------
    phi : ndarray
        Samples on ``metric.chart``.
    metric : MetricField
        Must carry a closed-form evaluator when ``check`` is on.
    action : SampledAction
    method : {"linear", "cubic"}
        Chart interpolation. Linear interpolation keeps ``phi >= 0`` and
        enlarges supports by at most one cell.
    check : bool
        Verify that the sampled maps are isometries of ``metric``.

    Raises
    ------
    InvalidActionError
        If a sampled map is not an isometry.
    """
    ch = metric.chart
    phi = np.asarray(phi, dtype=float)
    if phi.shape != ch.shape:
        raise InvalidSpecError(f"phi has shape {phi.shape}, chart has {ch.shape}")
    if check:
        check_isometries(metric, action)
    interp = _interpolator(phi, ch, method)
    mesh = ch.mesh()
    acc = np.zeros(ch.shape)
    for F in action.maps:
        img = _wrap_clip(F(*mesh), ch)
        acc += interp(np.stack(img, axis=-1))
    return acc / len(action)


def evaluate_constant(metric, scalar=None):
    """Yamabe quotient of the constant test function.

    Equal to the normalized total scalar curvature
    ``int s dV / vol^((n-2)/n)``.
    """
    return einstein_hilbert(metric, scalar)
