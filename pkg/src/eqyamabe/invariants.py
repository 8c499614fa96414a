"""Closed-form Yamabe constants, bounds and combination rules.

Values are wrapped in :class:`YamabeValue` so that reports can carry
where a number came from (an exact formula, a numerical estimate or an
assumption supplied by the caller).
"""

import logging
import math
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

__all__ = [
    "YamabeValue",
    "CheckedValue",
    "sphere_volume",
    "lambda_n",
    "hebey_vaugon_bound",
    "kobayashi_interval",
    "disjoint_union_yamabe",
    "surgery_lower_bound",
    "section4_examples",
]

INF = math.inf


@dataclass(frozen=True)
class YamabeValue:
    """A Yamabe-type constant.

    Parameters
    ----------
    value : float
        Finite value or ``math.inf`` when a bound is vacuous.
    n : int
        Dimension, at least 3.
    provenance : {"formula", "estimate", "assumption"}
    """

    value: float
    n: int
    provenance: str = "formula"

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"Yamabe values need dimension >= 3, got {self.n}")
        if self.provenance not in ("formula", "estimate", "assumption"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def is_finite(self):
        return math.isfinite(self.value)

    def to_dict(self):
        return {"value": self.value if self.is_finite else "inf", "n": self.n, "provenance": self.provenance}


@dataclass(frozen=True)
class CheckedValue:
    """A value returned together with the hypotheses it depends on."""

    value: float
    valid: bool
    reasons: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {"value": self.value, "valid": self.valid, "reasons": list(self.reasons)}


def sphere_volume(n):
    """Volume of the unit round ``n``-sphere, ``2 pi^((n+1)/2) / Gamma((n+1)/2)``."""
    if n < 0:
        raise ValueError("sphere dimension must be nonnegative")
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def lambda_n(n):
    """Yamabe constant of the unit round ``n``-sphere.

    ``n (n - 1) vol(S^n)^(2/n)``.

    Raises
    ------
    ValueError
        If ``n < 2``.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"lambda_n needs an integer n >= 2, got {n}")
    n = int(n)
    return n * (n - 1) * sphere_volume(n) ** (2.0 / n)


def hebey_vaugon_bound(n, min_orbit_cardinality):
    """Upper bound ``Lambda_n k^(2/n)`` for the invariant Yamabe constant.

    Parameters
    ----------
    n : int
        Dimension, at least 3.
    min_orbit_cardinality : int or math.inf
        Smallest orbit size ``k``. Infinite orbits give a vacuous bound,
        returned as ``math.inf``.
    """
    if n < 3:
        raise ValueError("bound needs dimension >= 3")
    k = min_orbit_cardinality
    if k == INF:
        return YamabeValue(INF, n)
    if int(k) != k or k < 1:
        raise ValueError(f"orbit cardinality must be a positive integer or inf, got {k}")
    return YamabeValue(lambda_n(n) * int(k) ** (2.0 / n), n)


def kobayashi_interval(s_min, s_max, vol, n):
    """Bracket ``[s_min vol^(2/n), s_max vol^(2/n)]``.

    Valid for a nonpositive Yamabe constant; the caller is responsible for
    that hypothesis.
    """
    if not vol > 0:
        raise ValueError("volume must be positive")
    if s_min > s_max:
        raise ValueError("s_min exceeds s_max")
    f = vol ** (2.0 / n)
    return (s_min * f, s_max * f)


def disjoint_union_yamabe(y1, y2, n):
    """Yamabe constant of a disjoint union.

    If both values are nonpositive the result is
    ``-(|y1|^(n/2) + |y2|^(n/2))^(2/n)``; otherwise it is ``min(y1, y2)``.
    When one value is zero both expressions agree, and the ``min`` branch
    is used because it is exact in floating point.
    """
    if n < 3:
        raise ValueError("dimension must be at least 3")
    if y1 < 0 and y2 < 0:
        return -((abs(y1) ** (n / 2.0) + abs(y2) ** (n / 2.0)) ** (2.0 / n))
    return min(y1, y2)


def surgery_lower_bound(y0, q, n):
    """Lower bound for the invariant Yamabe constant after surgery.

    Returns ``y0`` flagged valid when the codimension satisfies
    ``3 <= q <= n``. Invalid inputs are returned flagged rather than
    raised so derivation chains can show where they break.
    """
    reasons = []
    if q < 3:
        reasons.append(f"codimension q={q} < 3")
    if q > n:
        reasons.append(f"codimension q={q} exceeds dimension n={n}")
    return CheckedValue(float(y0), not reasons, tuple(reasons))


def _step(operation, inputs, output, valid, justification):
    return {"operation": operation, "inputs": inputs, "output": output, "valid": valid, "justification": justification}


def section4_examples(n, q, l=0, m=0):
    """Derivation chain for products of spheres and their connected sums.

    The chain starts at the round sphere with an orthogonal action that
    fixes a great ``(q-1)``-sphere, performs codimension-``q`` surgery on
    two copies to reach ``S^(n-q+1) x S^(q-1)``, closes the two-sided
    estimate with the fixed-point bound, and then adds ``l + m`` summands
    one at a time by connected sum at fixed points (codimension ``n``
    surgery).

    Returns
    -------
    dict
        ``value`` (the final constant), ``valid`` and an ordered ``steps``
        list. Invalid hypotheses are flagged, not raised.
    """
    if l < 0 or m < 0:
        raise ValueError("l and m must be nonnegative")
    steps = []
    valid = n >= 3 and 3 <= q <= n
    if not valid:
        steps.append(_step("hypotheses", {"n": n, "q": q}, None, False, "need n >= 3 and 3 <= q <= n"))
        return {"n": n, "q": q, "l": l, "m": m, "value": None, "valid": False, "steps": steps}

    lam = lambda_n(n)
    steps.append(_step("lambda_n", {"n": n}, lam, True,
                       "round metric is an invariant Yamabe metric and the action has fixed points"))
    du = disjoint_union_yamabe(lam, lam, n)
    steps.append(_step("disjoint_union_yamabe", {"y1": lam, "y2": lam, "n": n}, du, True,
                       "positive constants combine by min"))
    lb = surgery_lower_bound(du, q, n)
    steps.append(_step("surgery_lower_bound", {"y0": du, "q": q, "n": n}, lb.value, lb.valid,
                       f"surgery on S^{n - q} in two spheres gives S^{n - q + 1} x S^{q - 1}"))
    hv = hebey_vaugon_bound(n, 1)
    value = min(lb.value, hv.value) if lb.valid else None
    ok = lb.valid and lb.value == hv.value
    steps.append(_step("hebey_vaugon_bound", {"n": n, "min_orbit_cardinality": 1}, hv.value, ok,
                       "fixed points bound the constant above, so lower and upper bounds coincide"))
    valid = valid and ok

    current = lam  # the empty connected sum is the sphere itself
    for j in range(l + m):
        kind = "S^{0} x S^{1}".format(n - q + 1, q - 1) + (" (reversed)" if j >= l else "")
        du = disjoint_union_yamabe(current, value, n)
        cs = surgery_lower_bound(du, n, n)
        hv = hebey_vaugon_bound(n, 1)
        ok = cs.valid and cs.value == hv.value
        steps.append(_step("connected_sum", {"summand": kind, "index": j + 1, "y_left": current, "y_right": value},
                           cs.value, ok, "disjoint union, point surgery at a fixed point, fixed-point upper bound"))
        valid = valid and ok
        current = cs.value
    if l + m:
        value = current
    return {"n": n, "q": q, "l": l, "m": m, "value": value, "valid": valid, "steps": steps}
