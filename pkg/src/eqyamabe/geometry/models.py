"""Model metrics: spheres, tori, products, cylinders and warped products."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from eqyamabe.errors import InvalidSpecError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.metric import MetricField

logger = logging.getLogger(__name__)

__all__ = [
    "sphere_volume",
    "round_sphere",
    "flat_torus",
    "interval_metric",
    "product",
    "cylinder",
    "FiberSpec",
    "WarpedProductSpec",
    "warped_product",
    "build_model",
]


def sphere_volume(n, radius=1.0):
    """Volume of the round ``n``-sphere of the given radius."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0) * radius**n


def _polar_metric(n, radius):
    def func(*x):
        shape = np.broadcast(*x).shape
        g = np.zeros(shape + (n, n))
        w = np.full(shape, radius**2)
        for i in range(n):
            g[..., i, i] = w
            if i < n - 1:
                w = w * np.sin(x[i]) ** 2
        return g

    return func


def round_sphere(n, radius=1.0, resolution=64, azimuth_resolution=8, pole_band=None):
    """Round ``n``-sphere in iterated polar coordinates.

    The chart is ``(t_1, ..., t_{n-1}, phi)`` with ``t_i`` in ``[0, pi]``
    and ``phi`` periodic, carrying
    ``R^2 (dt_1^2 + sin^2 t_1 (dt_2^2 + sin^2 t_2 (... + dphi^2)))``.

    Parameters
    ----------
    n : int
        Dimension, at least 2.
    radius : float
    resolution : int or sequence of int
        Samples on each polar axis, or a full per-axis list.
    azimuth_resolution : int
        Samples on the azimuth when ``resolution`` is a scalar. The metric
        does not depend on the azimuth, so a handful suffices for
        curvature and volume.
    pole_band : float, optional
        Width of the excluded band at each pole of each polar axis.
        Defaults to two grid cells.
    """
    if n < 2:
        raise InvalidSpecError("sphere dimension must be at least 2")
    if radius <= 0:
        raise InvalidSpecError("sphere radius must be positive")
    if np.ndim(resolution) == 0:
        res = [int(resolution)] * (n - 1) + [int(azimuth_resolution)]
    else:
        res = [int(r) for r in resolution]
    if len(res) != n:
        raise InvalidSpecError(f"sphere chart needs {n} resolutions, got {len(res)}")
    bands = []
    for r in res[:-1]:
        bands.append(2.0 * math.pi / r if pole_band is None else float(pole_band))
    chart = GridChart(
        bounds=[(0.0, math.pi)] * (n - 1) + [(0.0, 2.0 * math.pi)],
        resolution=res,
        periodic=[False] * (n - 1) + [True],
        excluded_bands=bands + [None],
        labels=[f"t{i + 1}" for i in range(n - 1)] + ["phi"],
    )
    return MetricField.from_function(chart, _polar_metric(n, radius), name=f"S^{n}({radius:g})")


def flat_torus(periods, resolution=16):
    """Flat torus ``R^n / (periods)`` with the Euclidean metric."""
    periods = [float(L) for L in periods]
    if any(L <= 0 for L in periods):
        raise InvalidSpecError("torus periods must be positive")
    n = len(periods)
    res = [int(resolution)] * n if np.ndim(resolution) == 0 else list(resolution)
    chart = GridChart([(0.0, L) for L in periods], res, [True] * n)

    def func(*x):
        shape = np.broadcast(*x).shape
        return np.broadcast_to(np.eye(n), shape + (n, n)).copy()

    return MetricField.from_function(chart, func, name=f"T^{n}")


def interval_metric(length, resolution=32, start=0.0):
    """The interval ``[start, start + length]`` with ``dt^2``."""
    if length <= 0:
        raise InvalidSpecError("interval length must be positive")
    chart = GridChart([(start, start + length)], [resolution], [False], labels=["t"])
    return MetricField.from_function(chart, lambda t: np.ones(np.shape(t) + (1, 1)), name=f"I({length:g})")


def product(g1, g2, name=None):
    """Riemannian product ``g1 + g2`` on the product chart."""
    c1, c2 = g1.chart, g2.chart
    chart = GridChart(
        bounds=c1.bounds + c2.bounds,
        resolution=c1.resolution + c2.resolution,
        periodic=c1.periodic + c2.periodic,
        excluded_bands=c1.excluded_bands + c2.excluded_bands,
        labels=c1.labels + c2.labels,
    )
    n1, n2 = c1.dim, c2.dim
    s1, s2 = tuple(c1.shape), tuple(c2.shape)
    g = np.zeros(s1 + s2 + (n1 + n2, n1 + n2))
    g[..., :n1, :n1] = g1.g.reshape(s1 + (1,) * len(s2) + (n1, n1))
    g[..., n1:, n1:] = g2.g.reshape((1,) * len(s1) + s2 + (n2, n2))
    func = None
    if g1.func is not None and g2.func is not None:

        def func(*x):
            a = np.asarray(g1.func(*x[:n1]))
            b = np.asarray(g2.func(*x[n1:]))
            shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
            out = np.zeros(shape + (n1 + n2, n1 + n2))
            out[..., :n1, :n1] = a
            out[..., n1:, n1:] = b
            return out

    return MetricField(chart, g, name=name or f"{g1.name}x{g2.name}", func=func)


def cylinder(cross_section, length, resolution=32):
    """``dt^2 + cross_section`` on ``[0, length] x`` (cross-section chart)."""
    return product(interval_metric(length, resolution), cross_section, name=f"I({length:g})x{cross_section.name}")


@dataclass(frozen=True)
class FiberSpec:
    """Homogeneous fiber of a warped product.

    Parameters
    ----------
    kind : {"sphere", "torus"}
    dim : int
    radius : float
        Sphere radius (ignored for tori).
    periods : tuple of float
        Torus periods (ignored for spheres); defaults to ``2 pi`` each.
    """

    kind: str
    dim: int
    radius: float = 1.0
    periods: tuple = None

    def __post_init__(self):
        if self.kind not in ("sphere", "torus"):
            raise InvalidSpecError(f"unknown fiber kind {self.kind!r}")
        if self.dim < 1:
            raise InvalidSpecError("fiber dimension must be positive")
        if self.kind == "sphere" and self.dim < 2:
            raise InvalidSpecError("use a torus fiber of dimension 1 for circles")
        if self.kind == "torus":
            per = tuple(self.periods) if self.periods else (2.0 * math.pi,) * self.dim
            if len(per) != self.dim:
                raise InvalidSpecError("torus fiber periods do not match its dimension")
            object.__setattr__(self, "periods", per)

    @property
    def scalar(self):
        """Scalar curvature of the fiber metric."""
        if self.kind == "sphere":
            return self.dim * (self.dim - 1) / self.radius**2
        return 0.0

    @property
    def volume(self):
        if self.kind == "sphere":
            return sphere_volume(self.dim, self.radius)
        return float(np.prod(self.periods))

    def metric(self, resolution=8, azimuth_resolution=8, pole_band=None):
        if self.kind == "sphere":
            return round_sphere(self.dim, self.radius, resolution, azimuth_resolution, pole_band)
        return flat_torus(self.periods, resolution)


def _numeric_derivatives(f, scale):
    h = 1e-3 * scale

    def d1(t):
        return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)

    def d2(t):
        return (-f(t - 2 * h) + 16 * f(t - h) - 30 * f(t) + 16 * f(t + h) - f(t + 2 * h)) / (12 * h * h)

    return d1, d2


@dataclass(frozen=True)
class WarpedProductSpec:
    """Multiply warped product ``dt^2 + sum_i f_i(t)^2 g_i`` over an interval.

    Parameters
    ----------
    interval : (float, float)
    warps : sequence of callable
        Warp functions ``f_i``, positive on the open interval.
    fibers : sequence of FiberSpec
    derivatives : sequence of (callable, callable), optional
        ``(f_i', f_i'')`` per warp. Five-point differences are used when
        omitted.
    endpoint_kind : (str, str)
        ``"smooth-cap"`` where a fiber collapses smoothly, ``"boundary"``
        otherwise.
    """

    interval: tuple
    warps: tuple
    fibers: tuple
    derivatives: tuple = None
    endpoint_kind: tuple = ("boundary", "boundary")
    name: str = field(default="warped", compare=False)

    def __post_init__(self):
        t0, t1 = (float(x) for x in self.interval)
        if not t1 > t0:
            raise InvalidSpecError("warped product interval is empty")
        if len(self.warps) != len(self.fibers) or not self.warps:
            raise InvalidSpecError("need one warp function per fiber")
        for kind in self.endpoint_kind:
            if kind not in ("smooth-cap", "boundary"):
                raise InvalidSpecError(f"unknown endpoint kind {kind!r}")
        object.__setattr__(self, "interval", (t0, t1))
        object.__setattr__(self, "warps", tuple(self.warps))
        object.__setattr__(self, "fibers", tuple(self.fibers))
        if self.derivatives is None:
            scale = t1 - t0
            object.__setattr__(self, "derivatives", tuple(_numeric_derivatives(f, scale) for f in self.warps))

    @property
    def dim(self):
        return 1 + sum(f.dim for f in self.fibers)

    def check_warps(self, t):
        for i, f in enumerate(self.warps):
            v = np.asarray(f(t), dtype=float)
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise InvalidSpecError(f"warp function {i} is not positive on the interval")

    def scalar(self, t):
        """Scalar curvature at base points ``t`` (open interval)."""
        t = np.asarray(t, dtype=float)
        f = [np.asarray(w(t), dtype=float) for w in self.warps]
        f1 = [np.asarray(d[0](t), dtype=float) for d in self.derivatives]
        f2 = [np.asarray(d[1](t), dtype=float) for d in self.derivatives]
        s = np.zeros_like(t)
        for i, fib in enumerate(self.fibers):
            d = fib.dim
            s = s + fib.scalar / f[i] ** 2 - 2.0 * d * f2[i] / f[i] - d * (d - 1) * (f1[i] / f[i]) ** 2
            for j, fj in enumerate(self.fibers):
                if j != i:
                    s = s - d * fj.dim * f1[i] * f1[j] / (f[i] * f[j])
        return s

    def weight(self, t):
        """Orbit volume ``prod_i f_i^d_i vol(g_i)`` at base points ``t``."""
        t = np.asarray(t, dtype=float)
        w = np.ones_like(t)
        for f, fib in zip(self.warps, self.fibers):
            w = w * np.asarray(f(t), dtype=float) ** fib.dim * fib.volume
        return w


def warped_product(spec, resolution=64, fiber_resolution=8, base_band=None):
    """Sample a :class:`WarpedProductSpec` on its full chart.

    The chart is the base interval followed by each fiber chart. Smooth
    cap endpoints get an excluded band (two base cells by default).
    """
    t0, t1 = spec.interval
    h = (t1 - t0) / resolution
    has_cap = "smooth-cap" in spec.endpoint_kind
    band = base_band if base_band is not None else (2.0 * h if has_cap else None)
    base = GridChart([(t0, t1)], [resolution], [False], [band], labels=["t"])
    spec.check_warps(base.axes[0])
    fibers = [fib.metric(fiber_resolution) for fib in spec.fibers]
    charts = [base] + [m.chart for m in fibers]
    chart = GridChart(
        bounds=sum((c.bounds for c in charts), ()),
        resolution=sum((c.resolution for c in charts), ()),
        periodic=sum((c.periodic for c in charts), ()),
        excluded_bands=sum((c.excluded_bands for c in charts), ()),
        labels=("t",) + sum((tuple(f"{lab}_{i}" for lab in m.chart.labels) for i, m in enumerate(fibers)), ()),
    )
    dims = [m.dim for m in fibers]
    n = 1 + sum(dims)
    warps = spec.warps
    ffuncs = [m.func for m in fibers]

    def func(*x):
        t = x[0]
        shape = np.broadcast(*x).shape
        g = np.zeros(shape + (n, n))
        g[..., 0, 0] = 1.0
        k, off = 1, 1
        for w, ff, d in zip(warps, ffuncs, dims):
            blk = np.asarray(ff(*x[k : k + d]))
            g[..., off : off + d, off : off + d] = (np.asarray(w(t)) ** 2)[..., None, None] * blk
            k += d
            off += d
        return g

    return MetricField.from_function(chart, func, name=spec.name)


def build_model(descriptor):
    """Construct a model metric from a plain descriptor mapping.

    Recognised ``kind`` values and their keys:

    ``sphere``
        ``n``, ``radius``, ``resolution``, ``azimuth_resolution``, ``pole_band``.
    ``torus``
        ``periods``, ``resolution``.
    ``product``
        ``factors`` (two descriptors).
    ``cylinder``
        ``cross_section`` (descriptor), ``length``, ``resolution``.
    ``warped``
        ``spec`` (a :class:`WarpedProductSpec`), ``resolution``,
        ``fiber_resolution``.
    """
    d = dict(descriptor)
    kind = d.pop("kind", None)
    if kind == "sphere":
        return round_sphere(**d)
    if kind == "torus":
        return flat_torus(**d)
    if kind == "product":
        f1, f2 = d["factors"]
        return product(build_model(f1), build_model(f2))
    if kind == "cylinder":
        return cylinder(build_model(d["cross_section"]), d["length"], d.get("resolution", 32))
    if kind == "warped":
        return warped_product(d["spec"], d.get("resolution", 64), d.get("fiber_resolution", 8))
    raise InvalidSpecError(f"unknown model kind {kind!r}")
