import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from eqyamabe.errors import DegenerateTestFunctionError, InvalidSpecError, SingularMetricError
from eqyamabe.geometry import (
    GridChart,
    MetricField,
    FiberSpec,
    WarpedProductSpec,
    build_model,
    christoffel,
    conformal_metric,
    conformal_scalar_formula,
    curvature_report,
    cylinder,
    einstein_hilbert,
    flat_torus,
    laplacian,
    product,
    riemann_ricci_scalar,
    round_sphere,
    scalar_curvature,
    volume,
    warped_product,
    yamabe_quotient,
)
from eqyamabe.geometry.io import load_metric, save_metric
from oracles import lambda_recursive, lambdify_metric, symbolic_curvature


def interior(metric, field):
    return field[metric.chart.interior_mask]


# ---------------------------------------------------------------- charts


def test_chart_rejects_small_resolution():
    with pytest.raises(InvalidSpecError):
        GridChart([(0, 1)], [3])


def test_chart_rejects_band_wider_than_axis():
    with pytest.raises(InvalidSpecError):
        GridChart([(0, 1)], [8], [False], [0.6])


def test_chart_samples():
    ch = GridChart([(0, 1), (0, 2 * math.pi)], [4, 8], [False, True])
    np.testing.assert_allclose(ch.axes[0], [0.125, 0.375, 0.625, 0.875])
    assert ch.axes[1][0] == 0.0
    assert ch.mask.all()
    assert ch.interior_mask[:, 0].tolist() == [False, False, False, False]


def test_metric_rejects_indefinite():
    ch = GridChart([(0, 1), (0, 1)], [4, 4], [True, True])
    g = np.zeros((4, 4, 2, 2))
    g[..., 0, 0] = 1
    g[..., 1, 1] = -1
    with pytest.raises(SingularMetricError):
        MetricField(ch, g)


def test_metric_rejects_asymmetric():
    ch = GridChart([(0, 1), (0, 1)], [4, 4], [True, True])
    g = np.broadcast_to(np.array([[1.0, 0.1], [0.0, 1.0]]), (4, 4, 2, 2)).copy()
    with pytest.raises(InvalidSpecError):
        MetricField(ch, g)


# ---------------------------------------------------------------- christoffel


def test_flat_box_christoffel_vanishes():
    g = flat_torus([1.0, 2.0, 3.0], resolution=8)
    assert np.abs(christoffel(g)).max() == 0.0


def polar_plane(N=64):
    ch = GridChart([(0.5, 2.0), (0, 2 * math.pi)], [N, 16], [False, True])
    return MetricField.from_function(ch, lambda r, th: np.stack(
        [np.stack([np.ones_like(r), 0 * r], -1), np.stack([0 * r, r**2], -1)], -2))


def test_polar_plane_christoffel_hand_values():
    g = polar_plane()
    G = christoffel(g)
    r = g.chart.mesh()[0]
    m = g.chart.interior_mask
    np.testing.assert_allclose(G[..., 0, 1, 1][m], -r[m], atol=1e-12)
    np.testing.assert_allclose(G[..., 1, 0, 1][m], 1 / r[m], rtol=1e-3)
    np.testing.assert_allclose(G[..., 1, 1, 0][m], 1 / r[m], rtol=1e-3)


@pytest.mark.parametrize(
    "metric_fn, bounds, periodic",
    [
        (lambda r, th: sp.diag(1, r**2), [(0.5, 2.0), (0, 2 * math.pi)], [False, True]),
        (lambda th, ph: sp.diag(1, sp.sin(th) ** 2), [(0.3, math.pi - 0.3), (0, 2 * math.pi)], [False, True]),
        (
            lambda x, y: sp.Matrix([[1 + 0.2 * sp.sin(x), 0.1 * sp.cos(y)], [0.1 * sp.cos(y), 1 + 0.3 * sp.cos(x + y) ** 2]]),
            [(0, 2 * math.pi), (0, 2 * math.pi)],
            [True, True],
        ),
    ],
    ids=["polar-plane", "round-s2", "generic-torus"],
)
def test_christoffel_matches_symbolic_oracle(metric_fn, bounds, periodic):
    gam, scal = symbolic_curvature(metric_fn, 2)
    errs = []
    for N in (32, 64):
        ch = GridChart(bounds, [N, N], periodic)
        g = MetricField.from_function(ch, lambdify_metric(metric_fn, 2))
        X = g.chart.mesh()
        m = g.chart.interior_mask
        G = christoffel(g)
        errs.append(np.abs(G[m] - gam(*X)[m]).max())
    assert errs[1] < 1e-2
    assert errs[1] <= errs[0] / 3 or errs[1] < 1e-12


def test_round_s2_christoffel_theta_phi_phi():
    g = round_sphere(2, resolution=[64, 8], pole_band=0.3)
    th = g.chart.mesh()[0]
    G = christoffel(g)
    m = g.chart.interior_mask
    np.testing.assert_allclose(G[..., 0, 1, 1][m], (-np.sin(th) * np.cos(th))[m], atol=1e-3)


# ---------------------------------------------------------------- curvature


def test_generic_metric_scalar_matches_symbolic():
    fn = lambda x, y: sp.Matrix([[1 + 0.2 * sp.sin(x), 0.1 * sp.cos(y)], [0.1 * sp.cos(y), 1 + 0.3 * sp.cos(x + y) ** 2]])
    _, scal = symbolic_curvature(fn, 2)
    errs = []
    for N in (32, 64):
        ch = GridChart([(0, 2 * math.pi)] * 2, [N, N], [True, True])
        g = MetricField.from_function(ch, lambdify_metric(fn, 2))
        errs.append(np.abs(scalar_curvature(g) - scal(*g.chart.mesh())).max())
    assert errs[1] < 5e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


@pytest.mark.parametrize("periods", [(1.0, 1.0, 1.0), (2.0, 1.0, 0.5, 3.0)])
def test_flat_torus_scalar_zero(periods):
    g = flat_torus(periods, resolution=6)
    assert np.abs(scalar_curvature(g)).max() == 0.0


def test_round_s3_scalar():
    g = round_sphere(3, resolution=[100, 100, 4], pole_band=0.4)
    s = scalar_curvature(g)
    assert np.abs(interior(g, s) - 6).max() < 0.1


@pytest.mark.parametrize("radius", [0.5, 2.0])
def test_sphere_radius_scaling(radius):
    g = round_sphere(2, radius=radius, resolution=[128, 8], pole_band=0.4)
    s = scalar_curvature(g)
    np.testing.assert_allclose(interior(g, s), 2 / radius**2, rtol=5e-3)


def test_product_s2_s2_scalar_four():
    s2 = round_sphere(2, resolution=[48, 6], pole_band=0.5)
    g = product(s2, s2)
    assert g.g.shape[-2:] == (4, 4)
    s = scalar_curvature(g)
    assert np.abs(interior(g, s) - 4).max() < 0.1


def test_product_additivity_pointwise():
    s2 = round_sphere(2, radius=1.5, resolution=[40, 6], pole_band=0.5)
    t1 = GridChart([(0, 2 * math.pi)], [16], [True])
    circ = MetricField.from_function(t1, lambda x: np.ones(np.shape(x) + (1, 1)))
    s_prod = scalar_curvature(product(s2, circ))
    s_fac = scalar_curvature(s2)
    np.testing.assert_allclose(s_prod, np.broadcast_to(s_fac[..., None], s_prod.shape), atol=1e-10)


@pytest.mark.parametrize("n", [3, 4])
def test_cylinder_scalar(n):
    cross = round_sphere(n - 1, resolution=[32] * (n - 2) + [6], pole_band=0.5)
    g = cylinder(cross, 4.0, resolution=8)
    s = scalar_curvature(g)
    np.testing.assert_allclose(interior(g, s), (n - 1) * (n - 2), rtol=0.05)


def test_full_riemann_consistent_with_ricci():
    ch = GridChart([(0, 2 * math.pi)] * 3, [12, 12, 12], [True] * 3)

    def func(x, y, z):
        x, y, z = np.broadcast_arrays(x, y, z)
        g = np.zeros(x.shape + (3, 3))
        g[..., 0, 0] = 1 + 0.2 * np.sin(y)
        g[..., 1, 1] = 1 + 0.1 * np.cos(x + z)
        g[..., 2, 2] = 1.5
        g[..., 0, 2] = g[..., 2, 0] = 0.1 * np.sin(x)
        return g

    c = riemann_ricci_scalar(MetricField.from_function(ch, func), full=True)
    R = c.riemann
    np.testing.assert_allclose(np.einsum("...aabc->...bc", R), c.ricci, atol=1e-10)
    np.testing.assert_allclose(R, -np.swapaxes(R, -3, -2), atol=1e-12)
    np.testing.assert_allclose(c.christoffel, np.swapaxes(c.christoffel, -1, -2), atol=1e-14)


def test_s3_second_order_convergence():
    errs = []
    for N in (50, 100, 200):
        g = round_sphere(3, resolution=[N, N, 4], pole_band=0.5)
        errs.append(np.abs(interior(g, scalar_curvature(g)) - 6).max())
    for e0, e1 in zip(errs, errs[1:]):
        assert 3.0 <= e0 / e1 <= 5.0


def test_curvature_report_fields():
    g = round_sphere(2, resolution=[32, 6], pole_band=0.5)
    rep = curvature_report(g, lower_bound=2.5)
    assert rep["min"] == pytest.approx(2.0, rel=5e-2)
    assert rep["violation_count"] == rep["points"]
    assert len(rep["violations"]) == 20


# ---------------------------------------------------------------- laplacian


def test_laplacian_constant_zero():
    g = round_sphere(2, resolution=[32, 6], pole_band=0.5)
    assert np.abs(laplacian(g, np.full(g.chart.shape, 3.0))).max() < 1e-12


@pytest.mark.parametrize("L", [1.0, 2.5])
def test_laplacian_torus_eigenfunction(L):
    g = flat_torus([L, 1.0], resolution=[64, 4])
    x = g.chart.mesh()[0]
    f = np.cos(2 * math.pi * x / L)
    np.testing.assert_allclose(laplacian(g, f), (2 * math.pi / L) ** 2 * f, atol=1e-2 * (2 * math.pi / L) ** 2)


def test_laplacian_s2_first_harmonic():
    g = round_sphere(2, resolution=[128, 6], pole_band=0.3)
    th = g.chart.mesh()[0]
    m = g.chart.interior_mask
    np.testing.assert_allclose(laplacian(g, np.cos(th))[m], 2 * np.cos(th)[m], atol=2e-3)


# ---------------------------------------------------------------- conformal


def test_conformal_identity():
    g = round_sphere(3, resolution=[16, 16, 4])
    g2 = conformal_metric(g, np.ones(g.chart.shape))
    assert np.array_equal(g2.g, g.g)


def test_conformal_constant_factor_homothety():
    g = round_sphere(3, resolution=[64, 64, 4], pole_band=0.5)
    c = 1.7
    g2 = conformal_metric(g, np.full(g.chart.shape, c))  # multiplies g by c^4
    s1, s2 = scalar_curvature(g), scalar_curvature(g2)
    m = g.chart.interior_mask
    np.testing.assert_allclose(s2[m], s1[m] * c**-4, rtol=1e-10)
    np.testing.assert_allclose(conformal_scalar_formula(g, np.full(g.chart.shape, c), s1)[m], s2[m], rtol=1e-10)


def test_conformal_formula_unit_factor():
    g = round_sphere(3, resolution=[32, 32, 4])
    s = scalar_curvature(g)
    np.testing.assert_allclose(conformal_scalar_formula(g, np.ones(g.chart.shape), s), s, rtol=1e-12, atol=1e-9)


def test_conformal_law_on_sphere_random_factor():
    g = round_sphere(3, resolution=[96, 96, 8], pole_band=0.5)
    t, th, ph = g.chart.mesh()
    u = 1 + 0.1 * np.cos(t) + 0.05 * np.sin(th) ** 2 * np.cos(ph)
    direct = scalar_curvature(conformal_metric(g, u))
    formula = conformal_scalar_formula(g, u)
    m = g.chart.interior_mask
    assert np.abs(direct - formula)[m].max() < 0.1


# ---------------------------------------------------------------- integrals


def test_torus_volume_and_quotient():
    g = flat_torus([1.0, 1.0, 1.0], resolution=6)
    assert volume(g) == pytest.approx(1.0, rel=1e-14)
    assert yamabe_quotient(g, np.ones(g.chart.shape)) == 0.0


def test_s3_volume_and_einstein_hilbert():
    g = round_sphere(3, resolution=[200, 200, 4])
    assert volume(g) == pytest.approx(2 * math.pi**2, rel=5e-3)
    assert einstein_hilbert(g) == pytest.approx(lambda_recursive(3), rel=5e-3)


def test_quotient_of_constant_is_einstein_hilbert():
    g = round_sphere(3, resolution=[64, 64, 4])
    s = scalar_curvature(g)
    assert yamabe_quotient(g, np.ones(g.chart.shape), s) == pytest.approx(einstein_hilbert(g, s), rel=1e-12)


def test_quotient_degenerate():
    g = flat_torus([1.0, 1.0, 1.0], resolution=6)
    with pytest.raises(DegenerateTestFunctionError):
        yamabe_quotient(g, np.zeros(g.chart.shape))


def random_torus_metric(seed, N=12):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3, 3)) * 0.1
    ch = GridChart([(0, 2 * math.pi)] * 3, [N] * 3, [True] * 3)

    def func(*x):
        x = np.broadcast_arrays(*x)
        g = np.zeros(x[0].shape + (3, 3))
        for i in range(3):
            for j in range(3):
                g[..., i, j] = (i == j) + sum(A[k, i, j] + A[k, j, i] for k in range(3)) * 0.5 * np.sin(x[(i + j) % 3])
        return g

    return MetricField.from_function(ch, func)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.01, 100.0))
def test_quotient_scale_invariance(seed, c):
    g = random_torus_metric(seed)
    x = g.chart.mesh()
    phi = 1.5 + np.sin(x[0]) * np.cos(x[1])
    s = scalar_curvature(g)
    q1 = yamabe_quotient(g, phi, s)
    q2 = yamabe_quotient(g, c * phi, s)
    assert abs(q2 - q1) <= 1e-10 * abs(q1)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.2, 5.0))
def test_homothety_law(seed, c):
    g = random_torus_metric(seed)
    gc = g.scaled(c**2)
    s, sc = scalar_curvature(g), scalar_curvature(gc)
    np.testing.assert_allclose(sc, s / c**2, rtol=1e-9, atol=1e-12)
    assert volume(gc) == pytest.approx(volume(g) * c**3, rel=1e-12)
    assert einstein_hilbert(gc, sc) == pytest.approx(einstein_hilbert(g, s), rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------- models


def test_build_model_dispatch():
    g = build_model({"kind": "cylinder", "cross_section": {"kind": "sphere", "n": 2, "resolution": 16}, "length": 4.0})
    assert g.dim == 3
    assert g.chart.bounds[0] == (0.0, 4.0)
    with pytest.raises(InvalidSpecError):
        build_model({"kind": "klein-bottle"})


def test_sphere_chart_band_default_two_cells():
    g = round_sphere(3, resolution=[40, 20, 4])
    assert g.chart.excluded_bands[0] == pytest.approx(2 * math.pi / 40)
    assert g.chart.excluded_bands[1] == pytest.approx(2 * math.pi / 20)


def test_warped_product_nonpositive_warp_rejected():
    spec = WarpedProductSpec((0, 2), [lambda t: 1 - t], [FiberSpec("torus", 1)])
    with pytest.raises(InvalidSpecError):
        warped_product(spec, resolution=8)


def test_warped_round_sphere_matches_engine():
    spec = WarpedProductSpec(
        (0, math.pi), [np.sin], [FiberSpec("sphere", 2)],
        derivatives=[(np.cos, lambda t: -np.sin(t))], endpoint_kind=("smooth-cap", "smooth-cap"),
    )
    g = warped_product(spec, resolution=96, fiber_resolution=96)
    s = scalar_curvature(g)
    t = g.chart.mesh()[0]
    m = g.chart.interior_mask & (t > 0.5) & (t < math.pi - 0.5)
    m &= (g.chart.mesh()[1] > 0.5) & (g.chart.mesh()[1] < math.pi - 0.5)
    np.testing.assert_allclose(s[m], spec.scalar(t[m]), atol=0.05)
    np.testing.assert_allclose(spec.scalar(np.linspace(0.1, 3.0, 7)), 6.0, atol=1e-6)


def test_metric_io_roundtrip(tmp_path):
    g = round_sphere(2, resolution=[8, 6])
    save_metric(g, tmp_path / "m")
    h = load_metric(tmp_path / "m")
    assert h.chart == g.chart
    np.testing.assert_array_equal(h.g, g.g)
