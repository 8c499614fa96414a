import math

import numpy as np
import pytest

from eqyamabe.errors import IncompatibleJetError, InvalidSpecError, ShrinkTubeError, TubeRadiusError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.conformal import conformal_scalar_formula
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.metric import MetricField
from eqyamabe.neck.tube import (
    TubeData,
    c1_distance,
    canonical_tube_metric,
    correction_factor,
    correction_function,
    glue_interpolated_metric,
    interpolation_curvature_gap,
    jet_order,
    tube_chart,
    tube_radius,
)


def circle_core(length=2 * math.pi, periodic=True):
    chart = GridChart(((0.0, length),), (4,), (periodic,))
    return MetricField.from_function(chart, lambda x: np.ones(np.shape(x) + (1, 1)))


def fermi_sphere_metric(*c):
    """Round unit S^4 in Fermi coordinates around a great circle."""
    y = np.stack(np.broadcast_arrays(*c[1:]), -1)
    r = np.linalg.norm(y, axis=-1)
    g = np.zeros(r.shape + (4, 4))
    g[..., 0, 0] = np.cos(r) ** 2
    rs = np.where(r > 0, r, 1.0)
    yh = y / rs[..., None]
    ratio = np.where(r > 0, np.sin(r) / rs, 1.0) ** 2
    P = yh[..., :, None] * yh[..., None, :]
    g[..., 1:, 1:] = P + ratio[..., None, None] * (np.eye(3) - P)
    return g


@pytest.fixture(scope="module")
def sphere_tube():
    tube = TubeData.totally_geodesic(circle_core(), 3, 0.4)
    ghat = canonical_tube_metric(tube, 17)
    g = MetricField.from_function(ghat.chart, fermi_sphere_metric, validate=False)
    u = correction_function(tube, 12.0, 4)
    gbar = MetricField.from_function(
        ghat.chart, lambda *c: u(*c)[..., None, None] ** 2 * ghat.func(*c), validate=False
    )
    return tube, g, ghat, gbar


def test_codimension_invariant():
    with pytest.raises(InvalidSpecError):
        TubeData.totally_geodesic(circle_core(), 2, 0.1)


def test_totally_geodesic_flat_tube_is_product(sphere_tube):
    _, _, ghat, _ = sphere_tube
    expected = np.broadcast_to(np.eye(4), ghat.g.shape)
    assert np.array_equal(ghat.g, expected)


def test_restriction_to_core_is_core_metric():
    L = 1.0
    core = circle_core(L, periodic=False)
    tube = TubeData(
        3,
        core,
        lambda x: np.broadcast_to(np.array([[[0.7]], [[-0.2]], [[0.1]]]), np.shape(x) + (3, 1, 1)),
        lambda x: np.zeros(np.shape(x) + (1, 3, 3)),
        0.2,
    )
    ghat = canonical_tube_metric(tube, 9)
    mid = ghat.g[:, 4, 4, 4]
    np.testing.assert_array_equal(mid[:, 0, 0], 1.0)
    np.testing.assert_array_equal(mid[:, 1:, 1:], np.broadcast_to(np.eye(3), (4, 3, 3)))


def test_great_circle_first_order_contact(sphere_tube):
    _, g, ghat, _ = sphere_tube
    slope, _, _ = jet_order(g, ghat, 1)
    assert slope >= 2 - 0.01


def test_curved_core_second_fundamental_form():
    # circle of radius R in R^4 with outward normal e_1; Pi^1 = -1/R
    R = 2.0
    core = circle_core(2 * math.pi * R)
    Pi = np.zeros((3, 1, 1))
    Pi[0, 0, 0] = -1.0 / R
    tube = TubeData(3, core, lambda x: np.broadcast_to(Pi, np.shape(x) + Pi.shape),
                    lambda x: np.zeros(np.shape(x) + (1, 3, 3)), 0.5)
    ghat = canonical_tube_metric(tube, 9)

    def exact(*c):
        y1 = np.broadcast_to(c[1], np.broadcast(*c).shape)
        g = np.broadcast_to(np.eye(4), y1.shape + (4, 4)).copy()
        g[..., 0, 0] = ((R + y1) / R) ** 2
        return g

    g = MetricField.from_function(ghat.chart, exact)
    slope, _, _ = jet_order(g, ghat, 1)
    assert slope >= 2 - 0.01


def test_twisted_normal_frame_convention():
    # normal frame rotating with rate w in the (e1, e2) plane along a straight core in R^4
    w = 1.5
    Gam = np.zeros((1, 3, 3))
    Gam[0, 0, 1], Gam[0, 1, 0] = w, -w
    tube = TubeData(3, circle_core(1.0, periodic=False), lambda x: np.zeros(np.shape(x) + (3, 1, 1)),
                    lambda x: np.broadcast_to(Gam, np.shape(x) + Gam.shape), 0.3)
    ghat = canonical_tube_metric(tube, 9)

    def exact(*c):
        x, y1, y2, y3 = np.broadcast_arrays(*c)
        g = np.broadcast_to(np.eye(4), x.shape + (4, 4)).copy()
        g[..., 0, 0] = 1 + w**2 * (y1**2 + y2**2)
        g[..., 0, 1] = g[..., 1, 0] = -w * y2
        g[..., 0, 2] = g[..., 2, 0] = w * y1
        return g

    g = MetricField.from_function(ghat.chart, exact)
    slope, _, errs = jet_order(g, ghat, 1)
    assert slope >= 2 - 0.01
    # the opposite connection sign is only first-order accurate
    flipped = TubeData(3, tube.gW, tube.second_fundamental, lambda x: -tube.normal_connection(x), 0.3)
    assert jet_order(g, canonical_tube_metric(flipped, 9), 1)[0] < 1.1


def test_tube_radius_error_reports_admissible_radius():
    Pi = np.zeros((3, 1, 1))
    Pi[0, 0, 0] = 5.0  # g_xx = 1 - 10 y1 degenerates at y1 = 0.1
    make = lambda r0: TubeData(3, circle_core(1.0, False), lambda x: np.broadcast_to(Pi, np.shape(x) + Pi.shape),  # noqa: E731
                               lambda x: np.zeros(np.shape(x) + (1, 3, 3)), r0)
    with pytest.raises(TubeRadiusError) as info:
        canonical_tube_metric(make(0.4), 17)
    assert 0.1 <= info.value.max_radius <= 0.12
    canonical_tube_metric(make(0.09), 17)


@pytest.mark.parametrize("denominator, expected", [("2aq", 12.0), ("8aq", 3.0)])
def test_correction_restores_core_curvature(sphere_tube, denominator, expected):
    tube, _, ghat, _ = sphere_tube
    ch = tube_chart(tube, 21, half_width=0.2)
    u = correction_function(tube, 12.0, 4, denominator)
    gh = MetricField.from_function(ch, ghat.func)
    centre = (0, 10, 10, 10)
    formula = conformal_scalar_formula(gh, u(*ch.mesh()))
    direct = scalar_curvature(MetricField.from_function(ch, lambda *c: u(*c)[..., None, None] ** 2 * ghat.func(*c)))
    assert formula[centre] == pytest.approx(expected, rel=1e-9)
    assert direct[centre] == pytest.approx(expected, rel=1e-3)


def test_correction_factor_properties(sphere_tube):
    tube = sphere_tube[0]
    ch = tube_chart(tube, 17)
    cf = correction_factor(tube, 12.0, 0.0, 4, chart=ch)
    centre = (slice(None), 8, 8, 8)
    np.testing.assert_array_equal(cf.u[centre], 1.0)
    h = ch.spacing[1]
    du = (cf.u[:, 9, 8, 8] - cf.u[:, 7, 8, 8]) / (2 * h)
    assert np.max(np.abs(du)) <= h**2
    same = correction_factor(tube, 12.0, 12.0, 4, chart=ch)
    np.testing.assert_array_equal(same.u, 1.0)


def test_correction_factor_shrink_error(sphere_tube):
    tube = sphere_tube[0]
    with pytest.raises(ShrinkTubeError):
        correction_factor(tube, 400.0, 0.0, 4)


def test_glue_identity(sphere_tube):
    _, g, _, _ = sphere_tube
    gd = glue_interpolated_metric(g, g, 0.1, 1)
    np.testing.assert_array_equal(gd.g, g.g)


@pytest.mark.parametrize("delta", [0.3, 0.1])
def test_glue_plateaus_are_exact(sphere_tube, delta):
    _, g, _, gbar = sphere_tube
    gd = glue_interpolated_metric(g, gbar, delta, 1)
    r = tube_radius(g.chart, 1)
    outside = r >= delta
    assert np.array_equal(gd.g[outside], g.g[outside])
    r0 = 0.25 * math.exp(-1 / delta)
    pts = [np.zeros(5), np.linspace(0.1, 0.9, 5) * r0, np.zeros(5), np.zeros(5)]
    np.testing.assert_array_equal(gd.evaluate(*pts), gbar.evaluate(*pts))


def test_glue_rejects_first_order_mismatch(sphere_tube):
    _, g, ghat, _ = sphere_tube
    shifted = MetricField.from_function(g.chart, lambda *c: ghat.func(*c) * (1 + 0.1 * c[1])[..., None, None],
                                        validate=False)
    with pytest.raises(IncompatibleJetError):
        glue_interpolated_metric(g, shifted, 0.1, 1)


def test_glue_converges_under_delta_halving(sphere_tube):
    _, g, _, gbar = sphere_tube
    c1 = []
    gaps = []
    for delta in (0.2, 0.1, 0.05):
        gd = glue_interpolated_metric(g, gbar, delta, 1)
        c1.append(c1_distance(gd, g, 1))
        gaps.append(interpolation_curvature_gap(g, gbar, delta, 1, y_resolution=13)[0])
    assert c1[0] > c1[1] > c1[2]
    assert gaps[0] > gaps[1] > gaps[2]
