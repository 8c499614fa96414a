"""One-dimensional orbit profiles of cohomogeneity-one models.

An :class:`OrbitProfile` samples the orbit-volume density ``w`` and the
scalar curvature ``s`` on a uniform grid over the orbit space. Invariant
test functions are functions of the base coordinate only, so the Yamabe
quotient restricted to them becomes a weighted one-dimensional Rayleigh
quotient.

Discretization: nodes include both endpoints, first differences are
weighted by the midpoint average of ``w`` and zeroth-order terms use the
trapezoid rule. A smooth-cap endpoint carries ``w = 0`` so it needs no
boundary condition.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eqyamabe.constants import conformal_exponents
from eqyamabe.errors import DegenerateTestFunctionError, InvalidSpecError, ReductionError
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.io import write_csv
from eqyamabe.geometry.models import FiberSpec, WarpedProductSpec, warped_product

__all__ = [
    "OrbitProfile",
    "reduce_cohomogeneity_one",
    "reduced_quotient",
    "discrete_forms",
    "sphere_spec",
    "cylinder_spec",
    "clifford_spec",
]

logger = logging.getLogger(__name__)

ENDPOINT_KINDS = ("smooth-cap", "boundary")


@dataclass(frozen=True)
class OrbitProfile:
    """Orbit-space data of a cohomogeneity-one metric.

    Parameters
    ----------
    t : ndarray
        Uniform grid on the orbit space, endpoints included.
    weight : ndarray
        Orbit volume ``w(t)``; zero exactly at smooth-cap endpoints.
    scalar : ndarray
        Scalar curvature ``s(t)``.
    n : int
        Dimension of the total space.
    endpoint_kind : (str, str)
    name : str
    """

    t: np.ndarray
    weight: np.ndarray
    scalar: np.ndarray
    n: int
    endpoint_kind: tuple = ("boundary", "boundary")
    name: str = field(default="profile", compare=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.weight, dtype=float)
        s = np.asarray(self.scalar, dtype=float)
        if t.ndim != 1 or t.size < 5:
            raise InvalidSpecError("orbit profile needs at least five grid nodes")
        if w.shape != t.shape or s.shape != t.shape:
            raise InvalidSpecError("weight and scalar must be sampled on the grid")
        h = np.diff(t)
        if not np.all(h > 0) or not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
            raise InvalidSpecError("orbit profile grid must be uniform and increasing")
        if int(self.n) < 3:
            raise InvalidSpecError("orbit profiles need total dimension at least 3")
        kinds = tuple(self.endpoint_kind)
        if len(kinds) != 2 or any(k not in ENDPOINT_KINDS for k in kinds):
            raise InvalidSpecError(f"endpoint kinds must be two of {ENDPOINT_KINDS}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(s))):
            raise InvalidSpecError("weight and scalar must be finite")
        if np.any(w[1:-1] <= 0):
            raise InvalidSpecError("orbit weight must be positive on the open interval")
        for end, kind in zip((0, -1), kinds):
            if kind == "smooth-cap" and w[end] != 0.0:
                raise InvalidSpecError("orbit weight must vanish at a smooth-cap endpoint")
            if w[end] < 0:
                raise InvalidSpecError("orbit weight must be nonnegative")
        for name, val in (("t", t), ("weight", w), ("scalar", s)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "endpoint_kind", kinds)

    @property
    def interval(self):
        return float(self.t[0]), float(self.t[-1])

    @property
    def resolution(self):
        """Number of grid cells."""
        return self.t.size - 1

    @property
    def step(self):
        return float(self.t[1] - self.t[0])

    @property
    def exponents(self):
        """``(p, a)`` for the total dimension."""
        return conformal_exponents(self.n)

    def volume(self):
        """Trapezoid integral of the orbit weight."""
        return float(np.sum(discrete_forms(self)["c"]))

    def to_csv(self, path):
        """Write the ``(t, w, s)`` table."""
        return write_csv(path, ["t", "w", "s"], [self.t, self.weight, self.scalar])

    @classmethod
    def from_csv(cls, path, n, endpoint_kind=("boundary", "boundary"), name=None):
        """Read a ``(t, w, s)`` table written by :meth:`to_csv`."""
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header = [h.strip() for h in rows[0]]
        if header[:3] != ["t", "w", "s"]:
            raise InvalidSpecError(f"{path}: expected columns t, w, s, got {header}")
        data = np.array([[float(v) for v in r[:3]] for r in rows[1:] if r], dtype=float)
        return cls(data[:, 0], data[:, 1], data[:, 2], n, endpoint_kind, name or path.stem)


def discrete_forms(profile):
    """Quadrature weights shared by the quotient and the minimizer.

    Returns
    -------
    dict
        ``h`` grid step, ``c`` trapezoid weights times ``w``, ``wm``
        midpoint weights on cells, ``p`` and ``a``.
    """
    h = profile.step
    w = profile.weight
    c = w * h
    c[0] *= 0.5
    c[-1] *= 0.5
    wm = 0.5 * (w[1:] + w[:-1])
    p, a = profile.exponents
    return {"h": h, "c": c, "wm": wm, "p": p, "a": a}


def _energy(phi, forms, scalar):
    d = np.diff(phi)
    return forms["a"] * float(np.sum(forms["wm"] * d * d)) / forms["h"] + float(np.sum(forms["c"] * scalar * phi * phi))


def reduced_quotient(profile, phi, exponent=None):
    """Weighted Rayleigh quotient of an invariant test function.

    ``Q = int (a phi'^2 + s phi^2) w dt / (int |phi|^p w dt)^(2/p)``.

    Parameters
    ----------
    profile : OrbitProfile
    phi : ndarray or callable
        Samples on ``profile.t`` or a function of ``t``.
    exponent : float, optional
        Replaces ``p`` in the denominator (used by exponent continuation).

    Raises
    ------
    DegenerateTestFunctionError
        If ``int |phi|^p w dt`` vanishes.
    """
    phi = _sample(profile, phi)
    forms = discrete_forms(profile)
    pp = forms["p"] if exponent is None else float(exponent)
    denom = float(np.sum(forms["c"] * np.abs(phi) ** pp))
    if not denom > 0.0:
        raise DegenerateTestFunctionError("test function has zero weighted L^p norm")
    return _energy(phi, forms, profile.scalar) / denom ** (2.0 / pp)


def _sample(profile, phi):
    if callable(phi):
        phi = phi(profile.t)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), profile.t.shape).copy()
    if not np.all(np.isfinite(phi)):
        raise InvalidSpecError("test function samples must be finite")
    return phi


def _extrapolate_ends(s, kinds):
    s = s.copy()
    if kinds[0] == "smooth-cap":
        s[0] = 3.0 * s[1] - 3.0 * s[2] + s[3]
    if kinds[1] == "smooth-cap":
        s[-1] = 3.0 * s[-2] - 3.0 * s[-3] + s[-4]
    return s


def reduce_cohomogeneity_one(spec, resolution=400, cross_check=True, check_resolution=48, check_band=0.7, rtol=0.05):
    """Orbit profile of a warped product ``dt^2 + sum f_i^2 g_i``.

    The orbit weight is ``prod f_i^d_i vol(g_i)``. The scalar curvature
    comes from the warped-product formula; at a smooth cap that formula
    is singular, so the endpoint value is extrapolated with the cubic
    through the next four nodes.

    Parameters
    ----------
    spec : WarpedProductSpec
    resolution : int
        Number of cells on the orbit space.
    cross_check : bool
        Compare the formula against the finite-difference curvature of the
        full chart.
    check_resolution : int
        Base resolution of the full chart used by the cross-check.
    check_band : float
        Margin kept away from caps and fiber poles, where polar charts
        degrade the finite-difference curvature.
    rtol : float
        Allowed deviation relative to ``max(1, sup|s|)``. The full chart
        is coarse, so this catches formula errors rather than measuring
        discretization accuracy.

    Raises
    ------
    ReductionError
        If the cross-check fails.
    """
    if not isinstance(spec, WarpedProductSpec):
        raise InvalidSpecError("reduce_cohomogeneity_one needs a WarpedProductSpec")
    t0, t1 = spec.interval
    t = np.linspace(t0, t1, int(resolution) + 1)
    kinds = spec.endpoint_kind
    inner = t[1:-1]
    spec.check_warps(inner)
    w = np.zeros_like(t)
    w[1:-1] = spec.weight(inner)
    s = np.zeros_like(t)
    s[1:-1] = spec.scalar(inner)
    for end, kind in zip((0, -1), kinds):
        if kind == "boundary":
            w[end] = float(spec.weight(np.array([t[end]]))[0])
            s[end] = float(spec.scalar(np.array([t[end]]))[0])
    s = _extrapolate_ends(s, kinds)
    profile = OrbitProfile(t, w, s, spec.dim, kinds, spec.name)
    if cross_check:
        err = _cross_check(spec, check_resolution, check_band)
        scale = max(1.0, float(np.max(np.abs(s))))
        logger.info("reduction cross-check %s: max deviation %.3e", spec.name, err)
        if err > rtol * scale:
            raise ReductionError(
                f"warped-product curvature deviates from the full chart by {err:.3e} (allowed {rtol * scale:.3e})"
            )
    return profile


def _cross_check(spec, resolution, band):
    fiber_res = 32 if max(f.dim for f in spec.fibers) <= 2 else 16
    metric = warped_product(spec, resolution=resolution, fiber_resolution=fiber_res)
    ch = metric.chart
    s_fd = scalar_curvature(metric)
    mesh = ch.mesh()
    keep = ch.mask.copy()
    t0, t1 = spec.interval
    tb = mesh[0]
    if spec.endpoint_kind[0] == "smooth-cap":
        keep &= tb - t0 >= band
    if spec.endpoint_kind[1] == "smooth-cap":
        keep &= t1 - tb >= band
    for ax in range(1, ch.dim):
        if not ch.periodic[ax]:
            lo, hi = ch.bounds[ax]
            keep &= (mesh[ax] - lo >= band) & (hi - mesh[ax] >= band)
    if not np.any(keep):
        raise ReductionError("cross-check region is empty; lower check_band")
    s_formula = spec.scalar(tb[keep])
    return float(np.max(np.abs(s_fd[keep] - s_formula)))


def sphere_spec(n, radius=1.0):
    """Round ``S^n(radius)`` as ``dt^2 + (R sin(t/R))^2 g_{S^{n-1}}``."""
    if n < 3:
        raise InvalidSpecError("need n >= 3")
    R = float(radius)
    return WarpedProductSpec(
        interval=(0.0, math.pi * R),
        warps=(lambda t: R * np.sin(t / R),),
        fibers=(FiberSpec("sphere", n - 1),),
        derivatives=((lambda t: np.cos(t / R), lambda t: -np.sin(t / R) / R),),
        endpoint_kind=("smooth-cap", "smooth-cap"),
        name=f"S^{n}({R:g})",
    )


def cylinder_spec(n, length, radius=1.0):
    """Product ``[0, length] x S^{n-1}(radius)``."""
    if n < 3:
        raise InvalidSpecError("need n >= 3")
    R = float(radius)
    return WarpedProductSpec(
        interval=(0.0, float(length)),
        warps=(lambda t: R + 0.0 * np.asarray(t, dtype=float),),
        fibers=(FiberSpec("sphere", n - 1),),
        derivatives=((lambda t: 0.0 * np.asarray(t, dtype=float),) * 2,),
        endpoint_kind=("boundary", "boundary"),
        name=f"[0,{length:g}]xS^{n - 1}({R:g})",
    )


def clifford_spec(eps=0.0):
    """Round ``S^3`` in torus coordinates with a warp perturbation.

    ``dt^2 + f_1^2 dtheta_1^2 + f_2^2 dtheta_2^2`` on ``[0, pi/2]`` with
    ``f_1 = cos t (1 + eps sin^2 2t)`` and ``f_2 = sin t``. The perturbation
    vanishes to second order at both caps, so each member is smooth, and
    ``eps = 0`` is the unit sphere. The torus acts with circle orbits at
    the caps, so the family has no fixed points.
    """
    eps = float(eps)

    def f1(t):
        return np.cos(t) * (1.0 + eps * np.sin(2 * t) ** 2)

    def f1p(t):
        return -np.sin(t) * (1.0 + eps * np.sin(2 * t) ** 2) + np.cos(t) * eps * 2.0 * np.sin(4 * t)

    def f1pp(t):
        b = np.sin(2 * t) ** 2
        return -np.cos(t) * (1.0 + eps * b) - 4.0 * np.sin(t) * eps * np.sin(4 * t) + 8.0 * np.cos(t) * eps * np.cos(4 * t)

    circle = FiberSpec("torus", 1)
    return WarpedProductSpec(
        interval=(0.0, 0.5 * math.pi),
        warps=(f1, np.sin),
        fibers=(circle, circle),
        derivatives=((f1p, f1pp), (np.cos, lambda t: -np.sin(t))),
        endpoint_kind=("smooth-cap", "smooth-cap"),
        name=f"clifford(eps={eps:g})",
    )
