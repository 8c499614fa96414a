"""Sampled Riemannian metrics on grid charts."""

import logging
from dataclasses import dataclass, field

import numpy as np

from eqyamabe.errors import InvalidSpecError, SingularMetricError
from eqyamabe.geometry.chart import GridChart

logger = logging.getLogger(__name__)

__all__ = ["MetricField", "symmetrize"]

SYMMETRY_TOL = 1e-12


def symmetrize(g):
    """Return ``(g + g^T) / 2`` over the trailing two axes."""
    return 0.5 * (g + np.swapaxes(g, -1, -2))


@dataclass(frozen=True)
class MetricField:
    """A Riemannian metric sampled on a :class:`GridChart`.

    Parameters
    ----------
    chart : GridChart
        Coordinate chart.
    g : ndarray, shape ``chart.shape + (n, n)``
        Metric components at the sample points.
    name : str
        Free-form label used in reports.
    func : callable, optional
        Closed-form evaluator ``func(*coords) -> array (..., n, n)``.
        When present it is used for off-grid evaluation (interfaces,
        interpolation); the sampled array is always ``func`` on the mesh.
    validate : bool
        Check symmetry and positive definiteness on construction.
    """

    chart: GridChart
    g: np.ndarray
    name: str = "metric"
    func: object = field(default=None, compare=False, repr=False)
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        n = self.chart.dim
        if g.shape != tuple(self.chart.shape) + (n, n):
            raise InvalidSpecError(
                f"metric array shape {g.shape} does not match chart {tuple(self.chart.shape) + (n, n)}"
            )
        object.__setattr__(self, "g", g)
        if self.validate:
            self.check()

    @classmethod
    def from_function(cls, chart, func, name="metric", validate=True):
        """Sample a closed-form metric on ``chart``."""
        coords = chart.mesh()
        g = np.asarray(func(*coords), dtype=float)
        return cls(chart, g, name=name, func=func, validate=validate)

    @property
    def dim(self):
        return self.chart.dim

    def check(self):
        """Raise if the metric is asymmetric or not positive definite.

        Symmetry is checked everywhere, positivity only at points outside
        the excluded bands.
        """
        g = self.g
        scale = max(float(np.max(np.abs(g))), 1e-300)
        asym = float(np.max(np.abs(g - np.swapaxes(g, -1, -2)))) / scale
        if asym > SYMMETRY_TOL:
            raise InvalidSpecError(f"{self.name}: metric asymmetric (relative {asym:.3e})")
        m = self.chart.mask
        lam = np.linalg.eigvalsh(g[m])
        bad = lam[:, 0] <= 0
        if np.any(bad):
            flat = np.flatnonzero(m)[np.argmax(bad)]
            idx = np.unravel_index(flat, self.chart.shape)
            pt = tuple(float(ax[i]) for ax, i in zip(self.chart.axes, idx))
            raise SingularMetricError(
                f"{self.name}: metric not positive definite at index {idx}, point {pt}", index=idx, point=pt
            )

    def min_eigenvalue(self):
        """Smallest metric eigenvalue over the non-excluded points."""
        return float(np.min(np.linalg.eigvalsh(self.g[self.chart.mask])[:, 0]))

    def inverse(self):
        """Pointwise inverse metric, raising on singular points."""
        det = np.linalg.det(self.g)
        bad = ~np.isfinite(det) | (det == 0)
        if np.any(bad):
            idx = np.unravel_index(int(np.argmax(bad)), self.chart.shape)
            pt = tuple(float(ax[i]) for ax, i in zip(self.chart.axes, idx))
            raise SingularMetricError(f"{self.name}: singular metric at index {idx}, point {pt}", index=idx, point=pt)
        return np.linalg.inv(self.g)

    def sqrt_det(self):
        """Riemannian volume density ``sqrt(det g)``.

        Computed from a Cholesky factor so that tiny but well-conditioned
        metrics do not underflow through the determinant.
        """
        out = np.zeros(self.chart.shape)
        m = self.chart.mask
        L = np.linalg.cholesky(self.g[m])
        out[m] = np.prod(np.diagonal(L, axis1=-2, axis2=-1), axis=-1)
        return out

    def evaluate(self, *coords):
        """Closed-form evaluation at arbitrary coordinates."""
        if self.func is None:
            raise InvalidSpecError(f"{self.name}: no closed-form evaluator attached")
        return np.asarray(self.func(*coords), dtype=float)

    def scaled(self, c2, name=None):
        """Homothetic metric ``c2 * g``."""
        func = None if self.func is None else (lambda *x, f=self.func: c2 * f(*x))
        return MetricField(self.chart, c2 * self.g, name or f"{c2:g}*{self.name}", func=func)

    def resampled(self, chart):
        """Re-evaluate the closed-form metric on another chart."""
        if self.func is None:
            raise InvalidSpecError(f"{self.name}: cannot resample without a closed-form evaluator")
        return MetricField.from_function(chart, self.func, name=self.name)
