"""Continuity of reduced Yamabe estimates along converging profiles."""

import logging

import numpy as np

from eqyamabe.errors import InvalidSpecError
from eqyamabe.reduction.minimize import minimize_reduced
from eqyamabe.reduction.profile import clifford_spec, reduce_cohomogeneity_one

__all__ = ["continuity_experiment", "clifford_family"]

logger = logging.getLogger(__name__)


def clifford_family(k_max=4, resolution=400, cross_check=False):
    """Warp-perturbed ``S^3`` profiles with amplitude ``2^-k``.

    Returns
    -------
    profiles : list of OrbitProfile
        ``k = 0, ..., k_max``.
    limit : OrbitProfile
        The unperturbed round sphere on the same grid.
    """
    profiles = [
        reduce_cohomogeneity_one(clifford_spec(2.0**-k), resolution, cross_check=cross_check) for k in range(k_max + 1)
    ]
    limit = reduce_cohomogeneity_one(clifford_spec(0.0), resolution, cross_check=cross_check)
    return profiles, limit


def continuity_experiment(profiles, limit=None, limit_value=None, tol=1e-8, continuation=True, max_iter=50000):
    """Minimize along a profile sequence and compare with the limit.

    Parameters
    ----------
    profiles : sequence of OrbitProfile
        Sharing one grid and dimension.
    limit : OrbitProfile, optional
        Limit profile on the same grid; its estimate becomes the
        reference value.
    limit_value : float, optional
        Reference value used when ``limit`` is not given.
    tol : float
        Solver tolerance; gaps below ``10 tol`` times the reference count
        as converged.
    continuation : bool or sequence of float
        Passed to :func:`minimize_reduced`.

    Returns
    -------
    dict
        ``values``, ``limit_value``, ``gaps`` (absolute differences from
        the reference), ``ratios`` of successive gaps, ``monotone`` (gaps
        nonincreasing within solver tolerance) and per-profile solver
        summaries.
    """
    profiles = list(profiles)
    if not profiles:
        raise InvalidSpecError("continuity experiment needs at least one profile")
    t0 = profiles[0].t
    for pr in profiles[1:] + ([limit] if limit is not None else []):
        if pr.t.shape != t0.shape or not np.allclose(pr.t, t0) or pr.n != profiles[0].n:
            raise InvalidSpecError("profiles must share the grid and dimension")
    if limit is not None:
        ref = minimize_reduced(limit, tol=tol, max_iter=max_iter, continuation=continuation).value
    elif limit_value is not None:
        ref = float(limit_value)
    else:
        raise InvalidSpecError("give a limit profile or a limit value")
    runs = [minimize_reduced(pr, tol=tol, max_iter=max_iter, continuation=continuation) for pr in profiles]
    values = [r.value for r in runs]
    gaps = [abs(v - ref) for v in values]
    slack = 10.0 * tol * max(abs(ref), 1.0)
    ratios = [g0 / g1 if g1 > 0 else np.inf for g0, g1 in zip(gaps[:-1], gaps[1:])]
    monotone = all(g1 <= g0 + slack for g0, g1 in zip(gaps[:-1], gaps[1:]))
    for pr, v, g in zip(profiles, values, gaps):
        logger.info("continuity %s: value %.10g gap %.3e", pr.name, v, g)
    return {
        "values": values,
        "limit_value": ref,
        "gaps": gaps,
        "ratios": ratios,
        "min_ratio": min(ratios) if ratios else None,
        "monotone": monotone,
        "runs": [r.to_dict() for r in runs],
        "names": [pr.name for pr in profiles],
    }
