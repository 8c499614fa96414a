"""Reduction of the invariant Yamabe problem to the orbit space."""

from eqyamabe.reduction.averaging import (
    SampledAction,
    azimuth_action,
    cartesian_to_polar,
    check_isometries,
    circle_action,
    evaluate_constant,
    group_average,
    polar_to_cartesian,
    sphere_rotation_action,
)
from eqyamabe.reduction.continuity import clifford_family, continuity_experiment
from eqyamabe.reduction.minimize import DEFAULT_CONTINUATION, YamabeEstimate, euler_lagrange_residual, minimize_reduced
from eqyamabe.reduction.profile import (
    OrbitProfile,
    clifford_spec,
    cylinder_spec,
    reduce_cohomogeneity_one,
    reduced_quotient,
    sphere_spec,
)

__all__ = [
    "OrbitProfile",
    "YamabeEstimate",
    "SampledAction",
    "reduce_cohomogeneity_one",
    "reduced_quotient",
    "minimize_reduced",
    "euler_lagrange_residual",
    "evaluate_constant",
    "group_average",
    "check_isometries",
    "circle_action",
    "azimuth_action",
    "sphere_rotation_action",
    "polar_to_cartesian",
    "cartesian_to_polar",
    "continuity_experiment",
    "clifford_family",
    "sphere_spec",
    "cylinder_spec",
    "clifford_spec",
    "DEFAULT_CONTINUATION",
]
