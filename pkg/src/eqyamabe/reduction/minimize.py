"""Projected-gradient minimization of the reduced Yamabe quotient.

The iterate is kept on the sphere ``int |phi|^p w dt = 1`` and in the
positive cone (``phi -> |phi|`` never raises the quotient). Directions
are preconditioned by the weighted ``H^1`` Gram matrix ``a K + diag(c)``,
a tridiagonal solve per step, which makes the iteration count
essentially independent of the resolution.
"""

import logging
from pathlib import Path
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from eqyamabe.errors import InvalidSpecError, NonConvergenceError
from eqyamabe.geometry.io import write_csv, write_json
from eqyamabe.reduction.profile import _energy, _sample, discrete_forms, reduced_quotient

__all__ = ["YamabeEstimate", "minimize_reduced", "euler_lagrange_residual", "DEFAULT_CONTINUATION"]

logger = logging.getLogger(__name__)

DEFAULT_CONTINUATION = (4.0, 5.0, 5.5, 5.8)
ARMIJO = 0.5
BACKTRACK = 0.5
MAX_STEP = 1e3
MIN_STEP = 1e-14


@dataclass
class YamabeEstimate:
    """Result of :func:`minimize_reduced`.

    Attributes
    ----------
    value : float
        Reduced quotient of the final iterate, an upper bound for the
        discrete infimum.
    minimizer : ndarray
        Positive samples normalized to ``int phi^p w dt = 1``.
    iterations : int
        Iterations of the final stage.
    residual : float
        Dual ``H^1`` norm of the Euler-Lagrange residual.
    history : list of float
        Quotient after every accepted step of the final stage.
    t : ndarray
    stages : list of dict
        Per-exponent summaries when continuation is used.
    """

    value: float
    minimizer: np.ndarray
    iterations: int
    residual: float
    history: list
    t: np.ndarray = None
    stages: list = field(default_factory=list)

    def sup_deviation(self):
        """``max |phi / mean(phi) - 1|`` over the grid."""
        m = float(np.mean(self.minimizer))
        return float(np.max(np.abs(self.minimizer / m - 1.0)))

    def to_dict(self):
        return {
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "sup_deviation": self.sup_deviation(),
            "stages": self.stages,
        }

    def save(self, stem):
        """Write ``<stem>.json`` and the minimizer table ``<stem>.csv``."""
        stem = Path(stem)
        j = write_json(stem.with_suffix(".json"), self.to_dict())
        c = write_csv(stem.with_suffix(".csv"), ["t", "phi"], [self.t, self.minimizer])
        return j, c


def _gram_banded(forms):
    a, h, wm, c = forms["a"], forms["h"], forms["wm"], forms["c"]
    n = c.size
    off = -a * wm / h
    diag = np.array(c, dtype=float)
    diag[:-1] += a * wm / h
    diag[1:] += a * wm / h
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def _stiffness(phi, forms):
    f = forms["a"] * forms["wm"] * np.diff(phi) / forms["h"]
    out = np.zeros_like(phi)
    out[:-1] -= f
    out[1:] += f
    return out


def _normalize(phi, c, pp):
    phi = np.abs(phi)
    return phi / float(np.sum(c * phi**pp)) ** (1.0 / pp)


def euler_lagrange_residual(profile, phi, exponent=None):
    """Dual-norm residual of ``a Delta_w phi + s phi - Q phi^(p-1)``.

    ``phi`` is normalized first. The residual vector (in weak form) is
    measured in the norm dual to the weighted ``H^1`` Gram matrix.
    """
    forms = discrete_forms(profile)
    pp = forms["p"] if exponent is None else float(exponent)
    phi = _normalize(_sample(profile, phi), forms["c"], pp)
    return _dual_residual(phi, forms, profile.scalar, pp, _gram_banded(forms))


def _residual_vector(phi, forms, scalar, pp):
    e = _energy(phi, forms, scalar)
    c = forms["c"]
    return _stiffness(phi, forms) + c * scalar * phi - e * c * phi ** (pp - 1.0)


def _run_stage(profile, forms, ab, phi, pp, tol, max_iter):
    c, s = forms["c"], profile.scalar

    def Q(f):
        return _energy(f, forms, s) / float(np.sum(c * np.abs(f) ** pp)) ** (2.0 / pp)

    phi = _normalize(phi, c, pp)
    q = Q(phi)
    history = [q]
    alpha = 1.0
    res = np.inf
    for it in range(1, max_iter + 1):
        r = _residual_vector(phi, forms, s, pp)
        z = solve_banded((1, 1), ab, r)
        res = float(np.sqrt(max(r @ z, 0.0)))
        grad = 2.0 * r
        d = -2.0 * z
        slope = float(grad @ d)
        alpha = min(2.0 * alpha, MAX_STEP)
        accepted = False
        while alpha >= MIN_STEP:
            trial = phi + alpha * d
            qt = Q(trial)
            if qt <= q + ARMIJO * alpha * slope:
                accepted = True
                break
            alpha *= BACKTRACK
        if not accepted:
            # No descent left at machine precision: the iterate is stationary.
            if res < 10.0 * tol:
                return phi, q, it, res, history
            raise NonConvergenceError(
                f"line search stalled at residual {res:.3e} (exponent {pp:g})", history=history
            )
        phi = _normalize(trial, c, pp)
        qn = Q(phi)
        rel = abs(q - qn) / max(abs(qn), 1e-300)
        q = qn
        history.append(q)
        if rel < tol and res < 10.0 * tol:
            res = _dual_residual(phi, forms, s, pp, ab)
            return phi, q, it, res, history
    raise NonConvergenceError(
        f"no convergence in {max_iter} iterations (exponent {pp:g}, residual {res:.3e})", history=history
    )


def _dual_residual(phi, forms, scalar, pp, ab):
    r = _residual_vector(phi, forms, scalar, pp)
    return float(np.sqrt(max(r @ solve_banded((1, 1), ab, r), 0.0)))


def minimize_reduced(profile, init=None, tol=1e-8, max_iter=50000, continuation=None):
    """Minimize the reduced quotient over positive invariant functions.

    Parameters
    ----------
    profile : OrbitProfile
    init : ndarray or callable, optional
        Positive starting function, ``phi = 1`` by default.
    tol : float
        Stop when the relative quotient change is below ``tol`` and the
        Euler-Lagrange residual is below ``10 tol``.
    max_iter : int
        Iteration budget per stage.
    continuation : sequence of float or True, optional
        Subcritical exponents ``p_1 < p_2 < ... < p`` solved in turn, each
        stage starting from the previous minimizer. ``True`` selects
        :data:`DEFAULT_CONTINUATION` clipped below ``p``. Off by default.

    Returns
    -------
    YamabeEstimate

    Raises
    ------
    NonConvergenceError
        If a stage exhausts ``max_iter`` or its line search stalls away
        from a critical point. The exception carries the quotient history.
    """
    forms = discrete_forms(profile)
    p = forms["p"]
    phi = np.ones_like(profile.t) if init is None else _sample(profile, init)
    if np.any(phi <= 0):
        raise InvalidSpecError("initial function must be positive")
    if continuation is True:
        continuation = DEFAULT_CONTINUATION
    exps = [float(e) for e in (continuation or ()) if 2.0 < float(e) < p]
    if exps != sorted(exps):
        raise InvalidSpecError("continuation exponents must increase")
    exps.append(p)
    ab = _gram_banded(forms)
    stages = []
    for pp in exps:
        phi, q, it, res, history = _run_stage(profile, forms, ab, phi, pp, tol, max_iter)
        stages.append({"exponent": pp, "value": q, "iterations": it, "residual": res})
        logger.info("reduced minimization p=%g: Q=%.10g after %d iterations, residual %.2e", pp, q, it, res)
    value = reduced_quotient(profile, phi)
    return YamabeEstimate(value, phi, it, res, history, np.array(profile.t), stages)
