"""The bending curve of a surgery neck and its curvature certificate.

The curve lives in the quarter plane ``(t, r)``: ``t`` runs along the
added interval direction and ``r`` is the distance to the core. It is
parameterised by arc length ``L`` with angle ``theta`` measured from the
``-r`` direction:

    dt/dL = sin(theta),   dr/dL = -cos(theta),   dtheta/dL = k.

At ``theta = 0`` the curve is a radial segment (the unmodified slice) and
at ``theta = pi/2`` it runs parallel to ``t`` at constant radius, so the
hypersurface is a cylinder over the normal sphere. Along the curve the
added scalar curvature is bounded below by the defect

    D = (q-1)(q-2)/2 sin^2(theta)/r^2 - 3(q-1) k sin(theta)/r.

The radius shrinks by many orders of magnitude during the last step. To
keep full precision each segment stores its own local arc length and the
radius is carried as ``log r``; the defect sign is decided from the
dimensionless product ``D r^2``.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from eqyamabe.errors import CertificationError, ConstructionError

logger = logging.getLogger(__name__)

__all__ = [
    "BendSegment",
    "BendCurve",
    "build_bend_curve",
    "certify_bend",
    "shrink_curve",
    "predicted_bump_count",
    "count_bumps",
    "step1_defect",
    "THETA0_CAP",
]

THETA0_CAP = 0.3


def _coefficients(q):
    return (q - 1) * (q - 2) / 2.0, 3.0 * (q - 1)


def step1_defect(q, theta, r, k):
    """Defect ``D`` for explicit arrays (no scaling)."""
    A, B = _coefficients(q)
    s = np.sin(theta)
    return A * s**2 / r**2 - B * k * s / r


@dataclass
class BendSegment:
    """One smooth piece of the curve.

    Attributes
    ----------
    step : int
        1 (initial bend), 2 (straight descent) or 3 (bumps).
    index : int
        Bump number within step 3, else 0.
    L0 : float
        Global arc length at the segment start.
    ell : ndarray
        Local arc length from the segment start.
    t, log_r, theta : ndarray
    kr : ndarray
        Dimensionless product ``k r``.
    """

    step: int
    index: int
    L0: float
    ell: np.ndarray
    t: np.ndarray
    log_r: np.ndarray
    theta: np.ndarray
    kr: np.ndarray

    @property
    def r(self):
        return np.exp(self.log_r)

    @property
    def k(self):
        with np.errstate(over="ignore"):
            return self.kr * np.exp(-self.log_r)

    @property
    def length(self):
        return float(self.ell[-1])

    def scaled_defect(self, q):
        """``D r^2``; has the sign of ``D`` and never overflows."""
        A, B = _coefficients(q)
        s = np.sin(self.theta)
        return A * s**2 - B * self.kr * s

    def defect(self, q):
        with np.errstate(over="ignore"):
            return self.scaled_defect(q) * np.exp(-2.0 * self.log_r)


@dataclass
class BendCurve:
    """Arc-length parameterised bending curve.

    Radii satisfy ``r0 > r1 > r1p > r2 > r3 > 0``. ``segments`` hold the
    samples; the flat views (``L``, ``t``, ``r``, ...) drop the duplicated
    first sample of every segment after the first.
    """

    q: int
    theta0: float
    r0: float
    r1: float
    r1p: float
    r2: float
    r3: float
    eps2: float
    bump_count: int
    bump_dtheta: float
    k_step1: float
    segments: list = field(repr=False)
    params: dict = field(default_factory=dict)

    def _cat(self, getter):
        parts = []
        for i, seg in enumerate(self.segments):
            v = np.asarray(getter(seg))
            parts.append(v if i == 0 else v[1:])
        return np.concatenate(parts)

    @property
    def L(self):
        return self._cat(lambda s: s.L0 + s.ell)

    @property
    def t(self):
        return self._cat(lambda s: s.t)

    @property
    def r(self):
        return self._cat(lambda s: s.r)

    @property
    def log_r(self):
        return self._cat(lambda s: s.log_r)

    @property
    def theta(self):
        return self._cat(lambda s: s.theta)

    @property
    def k(self):
        return self._cat(lambda s: s.k)

    @property
    def step(self):
        return self._cat(lambda s: np.full(s.ell.size, s.step))

    def defect(self):
        return self._cat(lambda s: s.defect(self.q))

    def scaled_defect(self):
        return self._cat(lambda s: s.scaled_defect(self.q))

    def step_segments(self, step):
        return [s for s in self.segments if s.step == step]

    def step_length(self, step):
        return math.fsum(s.length for s in self.step_segments(step))

    @property
    def terminal_angle(self):
        return float(self.segments[-1].theta[-1])

    def to_columns(self):
        """Columns ``(L, t, r, theta, k, defect)`` for CSV export."""
        return {
            "L": self.L,
            "t": self.t,
            "r": self.r,
            "theta": self.theta,
            "k": self.k,
            "defect": self.defect(),
        }


def predicted_bump_count(q, theta0):
    """``ceil((pi/2 - theta0) / dtheta)`` with ``dtheta = (q-2) sin(theta0)/12``."""
    dtheta = (q - 2) * math.sin(theta0) / 12.0
    return int(math.ceil((0.5 * math.pi - theta0) / dtheta - 1e-9))


def count_bumps(curve):
    """Bump count recovered from the samples alone.

    Integrates ``k dL`` over step 3 with the trapezoid rule on each
    segment's local arc length and divides by the nominal per-bump angle.
    """
    total = math.fsum(float(np.trapezoid(s.k * 1.0, s.ell)) if s.log_r[-1] > -600 else
                      float(np.trapezoid(s.kr * np.exp(s.log_r[0] - s.log_r), s.ell / math.exp(s.log_r[0])))
                      for s in curve.step_segments(3))
    return int(math.ceil(total / curve.bump_dtheta - 1e-6))


def _step1_profile(q, theta0, r0, k, n):
    theta = np.linspace(0.0, theta0, n)
    s = np.sin(theta)
    r = r0 - s / k
    return theta, r


def _step1_min_defect(q, theta0, r0, k, n):
    theta, r = _step1_profile(q, theta0, r0, k, n)
    if r[-1] <= 0:
        return -math.inf
    return float(np.min(step1_defect(q, theta, r, k)))


def _choose_step1_curvature(q, theta0, r0, eps2, n):
    """Largest constant ``k`` with ``min D > -eps2/2`` on step 1."""
    target = -0.5 * eps2
    k_floor = math.sin(theta0) / r0  # r1 = 0 at this curvature
    grid = k_floor * np.geomspace(1.0 + 1e-9, 1e6, 600)
    ok = np.array([_step1_min_defect(q, theta0, r0, k, n) > target for k in grid])
    if not ok.any():
        A, B = _coefficients(q)
        k_c = math.sqrt(eps2 * A) / B
        raise ConstructionError(
            f"step 1 infeasible for r0={r0:g}: need r0 of order sin(theta0)/k_c = {math.sin(theta0) / k_c:.4g}",
            trace=[{"r0": r0, "k_c": k_c}],
        )
    i = int(np.flatnonzero(ok)[-1])
    if i == grid.size - 1:
        return float(grid[-1])
    lo, hi = float(grid[i]), float(grid[i + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _step1_min_defect(q, theta0, r0, mid, n) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return lo


def _bump(q, theta0, theta_s, t_s, log_r_s, scale, n_samples, refine=16):
    """Raised-cosine bump starting at radius ``exp(log_r_s)``.

    Support length equals the starting radius and the peak curvature is
    ``scale * (q-2) sin(theta0) / (6 r_s)``, so the angle increases by
    ``scale * (q-2) sin(theta0) / 12``.
    """
    m = (n_samples - 1) * refine + 1
    lam = np.linspace(0.0, 1.0, m)
    kh_r = scale * (q - 2) * math.sin(theta0) / 6.0  # peak k times r_s
    theta = theta_s + kh_r * (0.5 * lam - np.sin(2.0 * math.pi * lam) / (4.0 * math.pi))
    rho = 1.0 - cumulative_simpson(np.cos(theta), x=lam, initial=0.0)  # r / r_s
    tau = cumulative_simpson(np.sin(theta), x=lam, initial=0.0)  # (t - t_s) / r_s
    if np.any(rho <= 0):
        raise ConstructionError("bump radius reached zero", trace=[{"theta_s": theta_s}])
    kr_s = kh_r * 0.5 * (1.0 - np.cos(2.0 * math.pi * lam))  # k * r_s
    sl = slice(None, None, refine)
    r_s = math.exp(log_r_s)
    return {
        "ell_unit": lam[sl],
        "theta": theta[sl],
        "log_r": log_r_s + np.log(rho[sl]),
        "t": t_s + r_s * tau[sl],
        "kr": kr_s[sl] * rho[sl],
        "dtheta": 0.5 * kh_r,
    }


def build_bend_curve(
    q,
    theta0,
    r0,
    eps2,
    r1p_ratio=0.5,
    safety=1.2,
    n_step1=401,
    n_step2=201,
    n_bump=65,
    theta0_cap=THETA0_CAP,
):
    """Construct the three-step bending curve.

    Step 1 bends from ``theta = 0`` to ``theta0`` with the largest constant
    curvature keeping ``D > -eps2/2``. Step 2 descends straight
    (``k = 0``) from ``r1`` to ``r2 = r1p exp(-safety / (c sin theta0))``
    where ``r1p = r1p_ratio * r1`` and ``c = sqrt((q-1)(q-2)/2)``. Step 3
    adds raised-cosine curvature bumps, each with support equal to the
    current radius and peak ``(q-2) sin(theta0) / (6 r)``, until the angle
    reaches ``pi/2``; the last bump is scaled down to land exactly.

    Parameters
    ----------
    q : int
        Codimension, at least 3.
    theta0 : float
        Step-1 angle in ``(0, theta0_cap)``.
    r0 : float
        Starting radius.
    eps2 : float
        Allowed curvature loss on step 1.
    r1p_ratio : float
        ``r1p / r1`` in ``(0, 1)``.
    safety : float
        At least 1; margin for the feasibility of the ``eta`` cutoff.

    Returns
    -------
    BendCurve

    Raises
    ------
    ValueError
        For out-of-range parameters.
    ConstructionError
        If step 1 has no admissible curvature or the bump iteration fails.
    """
    if q < 3:
        raise ValueError("codimension must be at least 3")
    if not 0 < theta0 < theta0_cap:
        raise ValueError(f"theta0 must lie in (0, {theta0_cap})")
    if not eps2 > 0 or not r0 > 0:
        raise ValueError("eps2 and r0 must be positive")
    if not 0 < r1p_ratio < 1:
        raise ValueError("r1p_ratio must lie in (0, 1)")
    if safety < 1:
        raise ValueError("safety must be at least 1")

    segments = []
    # step 1: constant curvature
    k1 = _choose_step1_curvature(q, theta0, r0, eps2, n_step1)
    theta, r = _step1_profile(q, theta0, r0, k1, n_step1)
    segments.append(
        BendSegment(1, 0, 0.0, theta / k1, (1.0 - np.cos(theta)) / k1, np.log(r), theta, k1 * r)
    )
    r1 = float(r[-1])
    t1 = float((1.0 - math.cos(theta0)) / k1)
    L1 = theta0 / k1
    logger.debug("step 1: k=%.6g r1=%.6g", k1, r1)

    # step 2: straight, log-spaced in r
    c = math.sqrt((q - 1) * (q - 2) / 2.0)
    r1p = r1p_ratio * r1
    r2 = r1p * math.exp(-safety / (c * math.sin(theta0)))
    log_r = np.linspace(math.log(r1), math.log(r2), n_step2)
    log_r[0], log_r[-1] = math.log(r1), math.log(r2)
    ell = (r1 - np.exp(log_r)) / math.cos(theta0)
    ell[0] = 0.0
    segments.append(
        BendSegment(2, 0, L1, ell, t1 + ell * math.sin(theta0), log_r, np.full(n_step2, theta0), np.zeros(n_step2))
    )
    L2 = L1 + float(ell[-1])
    t2 = float(t1 + ell[-1] * math.sin(theta0))

    # step 3: bumps
    dtheta = (q - 2) * math.sin(theta0) / 12.0
    theta_s, t_s, log_r_s, L_s = theta0, t2, math.log(r2), L2
    target = 0.5 * math.pi
    trace = []
    max_bumps = 10 * predicted_bump_count(q, theta0) + 10
    while target - theta_s > 1e-15:
        rem = target - theta_s
        scale = 1.0 if rem > dtheta * (1.0 + 1e-12) else rem / dtheta
        b = _bump(q, theta0, theta_s, t_s, log_r_s, scale, n_bump)
        r_s = math.exp(log_r_s)
        idx = len(segments) - 1
        if scale < 1.0:
            b["theta"][-1] = target
        segments.append(BendSegment(3, idx, L_s, b["ell_unit"] * r_s, b["t"], b["log_r"], b["theta"], b["kr"]))
        trace.append({"bump": idx, "theta_start": theta_s, "log_r_start": log_r_s, "scale": scale})
        theta_s = float(b["theta"][-1])
        t_s = float(b["t"][-1])
        log_r_s = float(b["log_r"][-1])
        L_s = L_s + r_s
        if not math.isfinite(log_r_s):
            raise ConstructionError("radius underflow in step 3", trace=trace)
        if len(trace) > max_bumps:
            raise ConstructionError("bump iteration did not reach pi/2", trace=trace)
    r3 = math.exp(log_r_s)
    curve = BendCurve(
        q=q,
        theta0=theta0,
        r0=r0,
        r1=r1,
        r1p=r1p,
        r2=r2,
        r3=r3,
        eps2=eps2,
        bump_count=len(trace),
        bump_dtheta=dtheta,
        k_step1=k1,
        segments=segments,
        params={"r1p_ratio": r1p_ratio, "safety": safety, "log_r3": log_r_s, "mu": 1.0},
    )
    logger.info("bend curve: %d bumps, log10 r3 = %.2f", curve.bump_count, log_r_s / math.log(10))
    return curve


def certify_bend(curve, s_g_lower=0.0, raise_on_failure=True):
    """Check the pointwise defect along the curve.

    Step 1 must satisfy ``D > -eps2`` and steps 2 and 3 ``D >= 0``. The
    certified scalar-curvature lower bound is ``s_g_lower - eps2`` on
    step 1 and ``s_g_lower`` elsewhere.

    Returns
    -------
    dict
        Per-step minima, the worst ``(L, D)`` pair, the step-3 length
        against its bound and a ``passed`` flag.

    Raises
    ------
    CertificationError
        On violation when ``raise_on_failure`` is true.
    """
    q = curve.q
    report = {"q": q, "theta0": curve.theta0, "eps2": curve.eps2, "s_g_lower": s_g_lower, "steps": {}}
    passed = True
    worst = None
    for step in (1, 2, 3):
        segs = curve.step_segments(step)
        if not segs:
            continue
        scaled = np.concatenate([s.scaled_defect(q) for s in segs])
        D = np.concatenate([s.defect(q) for s in segs])
        L = np.concatenate([s.L0 + s.ell for s in segs])
        if step == 1:
            ok_pts = D > -curve.eps2
            key = D
        else:
            ok_pts = scaled >= 0
            key = scaled
        i = int(np.argmin(key))
        entry = {
            "samples": int(D.size),
            "min_defect": float(D[i]),
            "min_scaled_defect": float(scaled[i]),
            "at_L": float(L[i]),
            "violations": int(np.count_nonzero(~ok_pts)),
            "certified_lower_bound": s_g_lower - (curve.eps2 if step == 1 else 0.0),
        }
        report["steps"][str(step)] = entry
        if entry["violations"]:
            passed = False
            j = int(np.flatnonzero(~ok_pts)[0])
            worst = worst or {"step": step, "L": float(L[j]), "defect": float(D[j])}
    L3 = curve.step_length(3)
    bound = 3.0 * math.pi * curve.r2 / ((q - 2) * math.sin(curve.theta0)) + 0.5 * curve.r2
    report["step3_length"] = L3
    report["step3_length_bound"] = bound
    report["step3_length_ok"] = L3 <= bound
    report["terminal_angle"] = curve.terminal_angle
    report["terminal_angle_error"] = abs(curve.terminal_angle - 0.5 * math.pi)
    report["bump_count"] = curve.bump_count
    report["predicted_bump_count"] = predicted_bump_count(q, curve.theta0)
    report["radii"] = {"r0": curve.r0, "r1": curve.r1, "r1p": curve.r1p, "r2": curve.r2, "r3": curve.r3,
                       "log_r3": curve.params.get("log_r3", math.log(curve.r3) if curve.r3 > 0 else -math.inf)}
    report["certified_lower_bound"] = s_g_lower - curve.eps2
    report["worst"] = worst
    report["passed"] = bool(passed and report["step3_length_ok"] and report["terminal_angle_error"] <= 1e-6)
    if raise_on_failure and not report["passed"]:
        raise CertificationError(f"bend certification failed: {worst}", report=report)
    return report


def shrink_curve(curve, mu):
    """Homothetically shrink the last step by ``mu``.

    Step 3 is scaled about its starting point (``r -> mu r``,
    ``k -> k / mu``, lengths times ``mu``) and the straight step-2 segment
    is extended from ``r2`` down to ``mu r2`` so the curve stays
    connected. Angles are unchanged as functions of normalised arc length,
    so the defect on step 3 becomes ``D / mu^2``.
    """
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if mu == 1:
        return curve
    q, theta0 = curve.q, curve.theta0
    segs = [curve.segments[0]]
    s2 = curve.step_segments(2)[0]
    lm = math.log(mu)
    n2 = s2.ell.size
    log_r = np.linspace(s2.log_r[0], s2.log_r[-1] + lm, n2)
    r1 = math.exp(s2.log_r[0])
    ell = (r1 - np.exp(log_r)) / math.cos(theta0)
    ell[0] = 0.0
    segs.append(replace(s2, ell=ell, t=s2.t[0] + ell * math.sin(theta0), log_r=log_r))
    L_s = s2.L0 + float(ell[-1])
    t_s = float(segs[-1].t[-1])
    old3 = curve.step_segments(3)
    t_old = old3[0].t[0]
    for s in old3:
        segs.append(
            BendSegment(
                3, s.index, L_s + mu * (s.L0 - old3[0].L0), mu * s.ell, t_s + mu * (s.t - t_old),
                s.log_r + lm, s.theta.copy(), s.kr.copy(),
            )
        )
    params = dict(curve.params)
    params["mu"] = params.get("mu", 1.0) * mu
    params["log_r3"] = params.get("log_r3", math.log(curve.r3)) + lm
    return replace(curve, r2=mu * curve.r2, r3=mu * curve.r3, segments=segs, params=params)
