"""Second-order finite differences along grid axes."""

import numpy as np

__all__ = ["diff1", "diff2", "gradient"]


def _sl(ax, a, b):
    return (slice(None),) * ax + (slice(a, b),)


def diff1(f, h, periodic, axis):
    """First derivative along ``axis``.

    Centred differences in the interior (and everywhere on periodic axes),
    second-order one-sided stencils at open ends.
    """
    if periodic:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
    return np.gradient(f, h, axis=axis, edge_order=2)


def diff2(f, h, periodic, axis):
    """Second derivative along ``axis``.

    The one-sided end stencil ``(2f0 - 5f1 + 4f2 - f3) / h^2`` keeps the
    boundary rows second-order accurate.
    """
    if periodic:
        return (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) / h**2
    out = np.empty_like(f)
    out[_sl(axis, 1, -1)] = (f[_sl(axis, 2, None)] - 2.0 * f[_sl(axis, 1, -1)] + f[_sl(axis, None, -2)]) / h**2
    out[_sl(axis, 0, 1)] = (
        2.0 * f[_sl(axis, 0, 1)] - 5.0 * f[_sl(axis, 1, 2)] + 4.0 * f[_sl(axis, 2, 3)] - f[_sl(axis, 3, 4)]
    ) / h**2
    out[_sl(axis, -1, None)] = (
        2.0 * f[_sl(axis, -1, None)] - 5.0 * f[_sl(axis, -2, -1)] + 4.0 * f[_sl(axis, -3, -2)] - f[_sl(axis, -4, -3)]
    ) / h**2
    return out


def gradient(f, chart):
    """Stack of partial derivatives, new leading-trailing axis ``[..., A]``.

    ``f`` may carry trailing tensor axes; derivatives are taken along the
    leading ``chart.dim`` axes and the derivative index is inserted right
    after them.
    """
    parts = [diff1(f, chart.spacing[a], chart.periodic[a], a) for a in range(chart.dim)]
    return np.stack(parts, axis=chart.dim)
