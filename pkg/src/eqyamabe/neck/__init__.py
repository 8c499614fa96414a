"""Constructions for the surgery neck: profiles, tubes, bending curves and assembly."""

from eqyamabe.neck.bend import (
    BendCurve,
    BendSegment,
    build_bend_curve,
    certify_bend,
    count_bumps,
    predicted_bump_count,
    shrink_curve,
)
from eqyamabe.neck.profiles import Profile, cutoff_eta, cutoff_xi, interpolation_profile, smoothstep
from eqyamabe.neck.tube import (
    TubeData,
    c1_distance,
    canonical_tube_metric,
    correction_factor,
    glue_interpolated_metric,
    tube_chart,
)

__all__ = [
    "BendCurve",
    "BendSegment",
    "build_bend_curve",
    "certify_bend",
    "count_bumps",
    "predicted_bump_count",
    "shrink_curve",
    "Profile",
    "cutoff_eta",
    "cutoff_xi",
    "interpolation_profile",
    "smoothstep",
    "TubeData",
    "c1_distance",
    "canonical_tube_metric",
    "correction_factor",
    "glue_interpolated_metric",
    "tube_chart",
]
