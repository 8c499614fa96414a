"""Curvature engine and quotient quadrature on coordinate charts."""

from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.conformal import ConformalFactor, conformal_metric, conformal_scalar_formula
from eqyamabe.geometry.curvature import (
    CurvatureData,
    christoffel,
    curvature_report,
    laplacian,
    riemann_ricci_scalar,
    scalar_curvature,
)
from eqyamabe.geometry.integrals import einstein_hilbert, volume, yamabe_quotient
from eqyamabe.geometry.metric import MetricField
from eqyamabe.geometry.models import (
    FiberSpec,
    WarpedProductSpec,
    build_model,
    cylinder,
    flat_torus,
    product,
    round_sphere,
    sphere_volume,
    warped_product,
)

__all__ = [
    "GridChart",
    "MetricField",
    "CurvatureData",
    "ConformalFactor",
    "FiberSpec",
    "WarpedProductSpec",
    "christoffel",
    "riemann_ricci_scalar",
    "scalar_curvature",
    "laplacian",
    "curvature_report",
    "conformal_metric",
    "conformal_scalar_formula",
    "volume",
    "einstein_hilbert",
    "yamabe_quotient",
    "build_model",
    "round_sphere",
    "flat_torus",
    "product",
    "cylinder",
    "warped_product",
    "sphere_volume",
]
