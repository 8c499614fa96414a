"""Tensor-product coordinate charts."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from eqyamabe.errors import InvalidSpecError

__all__ = ["GridChart"]


@dataclass(frozen=True)
class GridChart:
    """A box of coordinates sampled on a regular grid.

    Periodic axes are sampled at ``lo + i * L / N`` for ``i < N``.
    Non-periodic axes use cell centres ``lo + (i + 1/2) h`` with
    ``h = L / N``, which keeps samples off coordinate singularities that
    sit on the boundary (sphere poles, the core of a polar chart).

    Parameters
    ----------
    bounds : sequence of (float, float)
        Closed coordinate interval per axis.
    resolution : sequence of int
        Samples per axis, each at least 4.
    periodic : sequence of bool, optional
        Periodicity flag per axis. Defaults to all False.
    excluded_bands : sequence of float or None, optional
        Width of the margin removed at both ends of a non-periodic axis.
        Points inside a band carry zero quadrature weight and are skipped
        by validity checks and curvature reports.
    """

    bounds: tuple
    resolution: tuple
    periodic: tuple = None
    excluded_bands: tuple = None
    labels: tuple = field(default=None, compare=False)

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        res = tuple(int(r) for r in self.resolution)
        n = len(bounds)
        if n == 0 or len(res) != n:
            raise InvalidSpecError("bounds and resolution must have the same nonzero length")
        per = tuple(bool(x) for x in (self.periodic or (False,) * n))
        bands = tuple(None if b is None else float(b) for b in (self.excluded_bands or (None,) * n))
        if len(per) != n or len(bands) != n:
            raise InvalidSpecError("periodic and excluded_bands must match the chart dimension")
        for ax, ((lo, hi), r, b) in enumerate(zip(bounds, res, bands)):
            if r < 4:
                raise InvalidSpecError(f"axis {ax}: resolution {r} < 4")
            if not hi > lo:
                raise InvalidSpecError(f"axis {ax}: empty interval [{lo}, {hi}]")
            if b is not None:
                if b < 0:
                    raise InvalidSpecError(f"axis {ax}: negative band width {b}")
                if 2.0 * b >= hi - lo:
                    raise InvalidSpecError(f"axis {ax}: band {b} does not fit inside [{lo}, {hi}]")
        labels = tuple(self.labels) if self.labels else tuple(f"x{i}" for i in range(n))
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "periodic", per)
        object.__setattr__(self, "excluded_bands", bands)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def shape(self):
        return self.resolution

    @cached_property
    def spacing(self):
        """Grid step per axis."""
        return tuple((hi - lo) / r for (lo, hi), r in zip(self.bounds, self.resolution))

    @cached_property
    def axes(self):
        """One-dimensional sample coordinates per axis."""
        out = []
        for (lo, _), r, h, per in zip(self.bounds, self.resolution, self.spacing, self.periodic):
            i = np.arange(r, dtype=float)
            out.append(lo + i * h if per else lo + (i + 0.5) * h)
        return tuple(out)

    def mesh(self):
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        return np.meshgrid(*self.axes, indexing="ij")

    def _axis_mask(self, ax, extra_cells=0):
        x = self.axes[ax]
        lo, hi = self.bounds[ax]
        if self.periodic[ax]:
            return np.ones(x.size, dtype=bool)
        b = self.excluded_bands[ax] or 0.0
        keep = (x > lo + b) & (x < hi - b)
        if extra_cells:
            idx = np.arange(x.size)
            keep &= (idx >= extra_cells) & (idx < x.size - extra_cells)
        return keep

    def _outer(self, masks):
        out = masks[0]
        for m in masks[1:]:
            out = np.logical_and.outer(out, m)
        return out

    @cached_property
    def mask(self):
        """Boolean array, True at points outside every excluded band."""
        return self._outer([self._axis_mask(ax) for ax in range(self.dim)])

    @cached_property
    def interior_mask(self):
        """``mask`` with a further two-cell layer removed at open ends.

        Curvature reports use this mask because one-sided stencils at the
        chart boundary are only first-order accurate in the second
        derivative.
        """
        return self._outer([self._axis_mask(ax, extra_cells=2) for ax in range(self.dim)])

    @cached_property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def with_resolution(self, resolution):
        """Same chart at another resolution."""
        return GridChart(self.bounds, resolution, self.periodic, self.excluded_bands, self.labels)

    def to_dict(self):
        return {
            "dim": self.dim,
            "bounds": [list(b) for b in self.bounds],
            "resolution": list(self.resolution),
            "periodic": list(self.periodic),
            "excluded_bands": list(self.excluded_bands),
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            bounds=[tuple(b) for b in d["bounds"]],
            resolution=d["resolution"],
            periodic=d.get("periodic"),
            excluded_bands=d.get("excluded_bands"),
            labels=d.get("labels"),
        )
