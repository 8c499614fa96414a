"""Numerical toolkit for equivariant Yamabe constants and surgery necks.

The package is organised in four layers:

``eqyamabe.geometry``
    Finite-difference curvature on coordinate charts, conformal changes,
    volume and Yamabe-quotient quadrature, model metrics.
``eqyamabe.neck``
    Tube metrics, cutoff profiles, the bending curve of a surgery neck,
    homotopy collars and region assembly.
``eqyamabe.reduction``
    One-dimensional reduction of invariant Yamabe quotients and their
    minimisation.
``eqyamabe.invariants``
    Closed-form constants and bounds.
"""

__version__ = "0.1.0"

from eqyamabe.constants import conformal_exponents

__all__ = ["__version__", "conformal_exponents"]
