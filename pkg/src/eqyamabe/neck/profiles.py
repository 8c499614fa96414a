"""Smooth cutoff profiles in linear and logarithmic radius.

All profiles are built from the smooth step

    T(x) = psi(x) / (psi(x) + psi(1 - x)),   psi(x) = exp(-1/x) for x > 0,

which is 0 for ``x <= 0``, 1 for ``x >= 1`` and infinitely differentiable.
It is evaluated as a logistic function of ``1/(1-x) - 1/x`` so that it
never overflows.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import expit

from eqyamabe.errors import FeasibilityError, ProfileConstructionError

logger = logging.getLogger(__name__)

__all__ = [
    "smoothstep",
    "Profile",
    "cutoff_xi",
    "interpolation_profile",
    "cutoff_eta",
    "log_derivative_bounds",
]


def smoothstep(x, order=0):
    """Smooth step ``T`` and its first two derivatives.

    Parameters
    ----------
    x : array_like
    order : {0, 1, 2}

    Returns
    -------
    ndarray
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    if order == 0:
        out[x >= 1] = 1.0
    if xi.size:
        # T = expit(1/(1-x) - 1/x); the logistic derivative gives T' and T''.
        z = 1.0 / (1.0 - xi) - 1.0 / xi
        T = expit(z)
        if order == 0:
            out[inside] = T
        else:
            zp = 1.0 / (1.0 - xi) ** 2 + 1.0 / xi**2
            s1 = T * (1.0 - T)
            if order == 1:
                out[inside] = s1 * zp
            elif order == 2:
                zpp = 2.0 / (1.0 - xi) ** 3 - 2.0 / xi**3
                out[inside] = s1 * (1.0 - 2.0 * T) * zp**2 + s1 * zpp
            else:
                raise ValueError("order must be 0, 1 or 2")
    return out


@dataclass(frozen=True)
class Profile:
    """A smooth radial profile with analytic first and second derivatives.

    Attributes
    ----------
    name : str
    support : (float, float)
        Interval outside which the profile is locally constant.
    value, d1, d2 : callable
        The profile and its derivatives in the radial variable.
    params : dict
        Construction parameters, echoed in reports.
    """

    name: str
    support: tuple
    value: object
    d1: object
    d2: object
    params: dict

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def derivative(self, r, order=1):
        r = np.asarray(r, dtype=float)
        return self.d1(r) if order == 1 else self.d2(r)

    def sample_grid(self, n=2000, oversample=10, pad=0.5):
        """Log-spaced samples covering the transition with a margin.

        ``n * oversample`` points in ``ln r`` from a factor ``exp(pad)``
        below the support to the same factor above it.
        """
        lo, hi = self.support
        if lo > 0:
            return np.exp(np.linspace(math.log(lo) - pad, math.log(hi) + pad, n * oversample))
        width = hi - lo
        return np.linspace(lo - pad * width, hi + pad * width, n * oversample)


def cutoff_xi():
    """Profile equal to 1 on ``(-inf, 0]`` and ``[2, inf)``, 0 on ``[2/3, 4/3]``.

    Built as ``T(1 - 3t/2) + T(3t/2 - 2)``; the two terms have disjoint
    supports so values stay in ``[0, 1]``.
    """

    def value(t):
        return smoothstep(1.0 - 1.5 * t) + smoothstep(1.5 * t - 2.0)

    def d1(t):
        return -1.5 * smoothstep(1.0 - 1.5 * t, 1) + 1.5 * smoothstep(1.5 * t - 2.0, 1)

    def d2(t):
        return 2.25 * (smoothstep(1.0 - 1.5 * t, 2) + smoothstep(1.5 * t - 2.0, 2))

    return Profile("xi", (0.0, 2.0), value, d1, d2, {})


def _log_step(r_lo, r_hi, decreasing):
    """``T`` (or ``1 - T``) of ``ln(r / r_lo) / ln(r_hi / r_lo)``."""
    L = math.log(r_hi / r_lo)
    sign = -1.0 if decreasing else 1.0

    def x_of(r):
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(r, 1e-300) / r_lo) / L

    def value(r):
        T = smoothstep(x_of(r))
        return 1.0 - T if decreasing else T

    def d1(r):
        return sign * smoothstep(x_of(r), 1) / (L * r)

    def d2(r):
        x = x_of(r)
        return sign * (smoothstep(x, 2) / L**2 - smoothstep(x, 1) / L) / r**2

    return value, d1, d2


def log_derivative_bounds(profile, r):
    """Sampled ``max |r f'|``, ``max |r f''|`` and ``max |r^2 f''|`` with argmax."""
    r = np.asarray(r, dtype=float)
    a = np.abs(r * profile.d1(r))
    b = np.abs(r * profile.d2(r))
    c = np.abs(r**2 * profile.d2(r))
    out = {}
    for key, v in (("r_d1", a), ("r_d2", b), ("r2_d2", c)):
        i = int(np.argmax(v))
        out[key] = (float(v[i]), float(r[i]))
    return out


def interpolation_profile(delta, check=True, samples=4000, oversample=10):
    """Profile equal to 1 on ``[0, e^(-1/delta)/4]`` and 0 on ``[delta, inf)``.

    The transition is a smooth step in ``ln r``. When ``check`` is true the
    bounds ``|r w'| < delta`` and ``|r w''| < delta`` are verified on an
    oversampled logarithmic grid.

    Parameters
    ----------
    delta : float
        In ``(0, 1)`` with ``e^(-1/delta)/4 < delta``.
    check : bool
        Verify the derivative bounds. Gluing code that only needs the
        plateaus passes ``False``.

    Raises
    ------
    ValueError
        If ``delta`` is outside its domain.
    ProfileConstructionError
        If a bound fails; ``worst_point`` is ``(r, quantity)``.

    Notes
    -----
    Over ``[r0, delta]`` the function drops by 1 while ``|r w'| < delta``
    allows a total drop of at most ``delta ln(delta / r0) = 1 + delta
    ln(4 delta)``, which is below 1 whenever ``delta < 1/4``. For those
    parameters the first bound cannot hold for any profile and the check
    reports the violation.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    r0 = 0.25 * math.exp(-1.0 / delta)
    if not r0 < delta:
        raise ValueError("delta too large: plateau end exceeds delta")
    value, d1, d2 = _log_step(r0, delta, decreasing=True)
    prof = Profile("w_delta", (r0, delta), value, d1, d2, {"delta": delta, "r_plateau": r0})
    if check:
        r = prof.sample_grid(samples, oversample)
        b = log_derivative_bounds(prof, r)
        for key in ("r_d1", "r_d2"):
            val, at = b[key]
            if not val < delta:
                raise ProfileConstructionError(
                    f"w_delta bound {key} violated: {val:.4g} >= {delta:g} at r={at:.4g}",
                    worst_point=(at, key),
                    worst_value=val,
                )
    return prof


def _plateau_bump(beta, n_table=20001):
    """Smooth trapezoid on ``[0, 1]`` with ramps of width ``beta``, unit area."""
    x = np.linspace(0.0, 1.0, n_table)
    shape = smoothstep(x / beta) * smoothstep((1.0 - x) / beta)
    cum = cumulative_simpson(shape, x=x, initial=0.0)
    height = 1.0 / cum[-1]
    table = cum * height
    table[-1] = 1.0

    def dens(x):
        x = np.asarray(x, dtype=float)
        return height * smoothstep(x / beta) * smoothstep((1.0 - x) / beta)

    def dens1(x):
        x = np.asarray(x, dtype=float)
        a, b = smoothstep(x / beta), smoothstep((1.0 - x) / beta)
        return height * (smoothstep(x / beta, 1) * b - a * smoothstep((1.0 - x) / beta, 1)) / beta

    def prim(x):
        return np.interp(np.asarray(x, dtype=float), x_tab, table)

    x_tab = x
    return prim, dens, dens1, height


def cutoff_eta(q, theta0, r1p, r2, samples=4000, oversample=10):
    """Cutoff equal to 0 for ``r <= r2`` and 1 for ``r >= r1p``.

    With ``c = sqrt((q-1)(q-2)/2)`` the profile satisfies
    ``r |eta'(r)| <= c sin(theta0)``. In ``x = ln(r/r2) / ln(r1p/r2)`` it
    is the primitive of a smooth trapezoid of height ``2 rho / (rho + 1)``
    where ``rho = c sin(theta0) ln(r1p/r2)``; the height is below ``rho``
    exactly when ``rho > 1``.

    Raises
    ------
    FeasibilityError
        If ``rho <= 1``; ``limit`` holds the supremum of admissible ``r2``.
    ProfileConstructionError
        If the sampled bound fails.
    """
    if q < 3:
        raise ValueError("codimension must be at least 3")
    if not 0 < r2 < r1p:
        raise ValueError("need 0 < r2 < r1p")
    c = math.sqrt((q - 1) * (q - 2) / 2.0)
    bound = c * math.sin(theta0)
    L = math.log(r1p / r2)
    rho = bound * L
    r2_max = r1p * math.exp(-1.0 / bound)
    if not rho > 1.0:
        raise FeasibilityError(
            f"eta infeasible: c sin(theta0) ln(r1p/r2) = {rho:.6g} <= 1; need r2 < {r2_max:.6g}", limit=r2_max
        )
    beta = 0.5 * (1.0 - 1.0 / rho)
    prim, dens, dens1, height = _plateau_bump(beta)

    def x_of(r):
        return np.clip(np.log(np.maximum(np.asarray(r, dtype=float), 1e-300) / r2) / L, -1.0, 2.0)

    def value(r):
        return prim(np.clip(x_of(r), 0.0, 1.0))

    def d1(r):
        r = np.asarray(r, dtype=float)
        return dens(x_of(r)) / (L * r)

    def d2(r):
        r = np.asarray(r, dtype=float)
        x = x_of(r)
        return (dens1(x) / L**2 - dens(x) / L) / r**2

    prof = Profile(
        "eta",
        (r2, r1p),
        value,
        d1,
        d2,
        {"q": q, "theta0": theta0, "r1p": r1p, "r2": r2, "rho": rho, "ramp": beta, "height": height, "bound": bound},
    )
    r = prof.sample_grid(samples, oversample)
    val, at = log_derivative_bounds(prof, r)["r_d1"]
    if val > bound:
        raise ProfileConstructionError(
            f"eta bound violated: r|eta'| = {val:.6g} > {bound:.6g} at r={at:.4g}", worst_point=(at, "r_d1"), worst_value=val
        )
    return prof
