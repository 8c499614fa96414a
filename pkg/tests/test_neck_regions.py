import math

import numpy as np
import pytest

from eqyamabe.errors import AssemblyError, InvalidPerturbationError, InvalidSpecError
from eqyamabe.geometry.chart import GridChart
from eqyamabe.geometry.curvature import scalar_curvature
from eqyamabe.geometry.metric import MetricField
from eqyamabe.geometry.models import flat_torus, sphere_volume
from eqyamabe.neck.assembly import assemble_surgered_metric, curve_region_volume, section_volume_function
from eqyamabe.neck.bend import build_bend_curve
from eqyamabe.neck.blowup import cylindrical_blowup
from eqyamabe.neck.homotopy import (
    HomotopyRegionSpec,
    block_orders,
    certify_homotopy,
    collar_profile,
    homotopy_metric,
    sphere_embedding,
    tube_boundary_perturbation,
    zero_perturbation,
)


def circle(res=4):
    chart = GridChart(((0.0, 2 * math.pi),), (res,), (True,))
    return MetricField.from_function(chart, lambda x: np.ones(np.shape(x) + (1, 1)))


def constant_tube_perturbation(q, pi, gamma):
    Pi = np.zeros((q, 1, 1))
    Pi[0, 0, 0] = pi
    Ga = np.zeros((1, q, q))
    Ga[0, 0, 1], Ga[0, 1, 0] = gamma, -gamma
    return tube_boundary_perturbation(
        lambda x: np.broadcast_to(Pi, np.shape(x) + Pi.shape), lambda x: np.broadcast_to(Ga, np.shape(x) + Ga.shape)
    )


# blow-up


@pytest.mark.parametrize("n, res, ang", [(3, 400, 64)])
def test_blowup_matches_cylinder(n, res, ang):
    _, rep = cylindrical_blowup(n, (math.exp(-4), 1.0), resolution=res, angular_resolution=ang)
    assert rep["cylinder_length"] == pytest.approx(4.0, rel=1e-14)
    assert rep["cylinder_volume"] == pytest.approx(4 * sphere_volume(n - 1))
    assert rep["volume_rel_error"] < 0.005
    assert rep["scalar_direct_rel_error"] < 0.02
    assert rep["scalar_law_rel_error"] < 0.005


def test_blowup_scalar_is_independent_of_radius():
    blown, _ = cylindrical_blowup(3, (0.1, 0.2), resolution=64, angular_resolution=48)
    s = scalar_curvature(blown)
    axis_t = blown.chart.axes[1]
    j = int(np.argmin(np.abs(axis_t - math.pi / 2)))
    profile = s[2:-2, j, 0]
    assert np.ptp(profile) < 1e-3
    assert profile.mean() == pytest.approx(2.0, rel=5e-3)  # polar resolution 48


# homotopy


def test_sphere_embedding_is_unit_and_tangent():
    rng = np.random.default_rng(1)
    ang = [rng.uniform(0, math.pi, 50), rng.uniform(0, math.pi, 50), rng.uniform(0, 2 * math.pi, 50)]
    Y, dY = sphere_embedding(ang)
    np.testing.assert_allclose(np.linalg.norm(Y, axis=-1), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.einsum("...ab,...b->...a", dY, Y), 0.0, atol=1e-14)
    h = 1e-6
    for a in range(3):
        shifted = [x + (h if i == a else 0.0) for i, x in enumerate(ang)]
        np.testing.assert_allclose((sphere_embedding(shifted)[0] - Y) / h, dY[:, a], atol=1e-5)


def test_sphere_embedding_induces_round_metric():
    from eqyamabe.geometry.models import _polar_metric

    rng = np.random.default_rng(2)
    ang = [rng.uniform(0, math.pi, 20), rng.uniform(0, 2 * math.pi, 20)]
    _, dY = sphere_embedding(ang)
    np.testing.assert_allclose(dY @ np.swapaxes(dY, -1, -2), _polar_metric(2, 1.0)(*ang), atol=1e-14)


def test_collar_profile():
    assert collar_profile(0.0) == 1.0
    assert collar_profile(0.1) == 1.0
    assert collar_profile(0.9) == 0.0
    assert collar_profile(1.0) == 0.0
    assert np.all(np.diff(collar_profile(np.linspace(0, 1, 200))) <= 0)


def test_block_orders_of_tube_perturbation():
    spec = HomotopyRegionSpec(circle(), 3, 0.2, constant_tube_perturbation(3, 0.5, 0.5))
    orders = block_orders(spec)
    assert orders["w_block"] == pytest.approx(1.0, abs=1e-9)
    assert orders["mixed_block"] == pytest.approx(2.0, abs=1e-9)


def test_low_order_perturbation_rejected():
    def bad(r, x, Y):
        shape = Y.shape[:-1]
        return np.zeros(shape + (1, 1)), 0.1 * r * np.ones(shape + (1, 3))

    spec = HomotopyRegionSpec(circle(), 3, 0.2, bad)
    with pytest.raises(InvalidPerturbationError):
        homotopy_metric(spec, 0.5)


def test_indefinite_perturbation_rejected():
    spec = HomotopyRegionSpec(circle(), 3, 0.2, constant_tube_perturbation(3, 5.0, 0.0))
    with pytest.raises(InvalidPerturbationError):
        homotopy_metric(spec, 1.0)


def test_nu_domain():
    spec = HomotopyRegionSpec(circle(), 3, 0.2, zero_perturbation(1, 3))
    with pytest.raises(InvalidSpecError):
        homotopy_metric(spec, 1.5)
    with pytest.raises(InvalidSpecError):
        HomotopyRegionSpec(circle(), 3, 0.2, zero_perturbation(1, 3), mu=0.0)


@pytest.mark.parametrize("nu", [0.0, 1.0])
def test_product_metric_curvature(nu):
    spec = HomotopyRegionSpec(circle(), 3, 0.2, zero_perturbation(1, 3))
    g0 = homotopy_metric(spec, 0.0)
    g = homotopy_metric(spec, nu)
    np.testing.assert_array_equal(g.g, g0.g)
    s = scalar_curvature(g)
    mid = g.chart.shape[1] // 2
    assert s[:, mid].mean() * 0.2**2 == pytest.approx(2.0, rel=1e-3)


def test_collar_without_t_dependence_is_product():
    spec = HomotopyRegionSpec(circle(), 3, 0.2, zero_perturbation(1, 3), sphere_resolution=32)
    g = homotopy_metric(spec, 1.0, include_collar=True)
    s = scalar_curvature(g)
    mid = g.chart.shape[1] // 2
    assert np.ptp(s[:, mid, :, 2:-2]) < 1e-9 * abs(s[:, mid].mean())
    assert s[:, mid].mean() * 0.2**2 == pytest.approx(2.0, rel=5e-3)  # polar resolution 32


@pytest.fixture(scope="module")
def zero_report():
    spec = HomotopyRegionSpec(circle(), 3, 0.2, zero_perturbation(1, 3))
    return certify_homotopy(spec, [0.2, 0.1])


def test_zero_perturbation_constant(zero_report):
    for row in zero_report["sweep"]:
        assert row["min_s_r2"] == pytest.approx(2.0, rel=0.01)
    vals = [c["min_s_mur2"] for c in zero_report["collar"]]
    assert max(vals) / min(vals) < 1.05
    assert zero_report["passed"]


# assembly


@pytest.fixture(scope="module")
def assembly_inputs():
    curve = build_bend_curve(3, 0.1, 20.0, 1e-3)
    spec = HomotopyRegionSpec(circle(), 3, 0.1, constant_tube_perturbation(3, 0.01, 0.01), sphere_resolution=32)
    return flat_torus((1.0, 1.0, 1.0, 1.0), 6), curve, spec


def test_assembly_report(assembly_inputs):
    outer, curve, spec = assembly_inputs
    asm = assemble_surgered_metric(outer, curve, spec, 0.5, 1.0)
    assert [r["tag"] for r in asm.regions] == ["outer", "bend", "homotopy"]
    assert all(i["mismatch"] <= 1e-6 for i in asm.interfaces)
    assert asm.certified_lower_bound >= 0.0 - curve.eps2
    assert asm.scalar_reports["bend"]["engine_min_steps12"] >= -curve.eps2
    assert asm.volumes["S"] < asm.volumes["T"] < asm.volumes["N"]
    d = asm.to_dict()
    assert "metric" not in d["regions"][0]


def test_region_volume_of_straight_cone():
    # zero perturbation: V(r) = vol(S^1) vol(S^2), step 2 volume is a cone frustum
    curve = build_bend_curve(3, 0.1, 20.0, 1e-3)
    spec = HomotopyRegionSpec(circle(), 3, 0.1, zero_perturbation(1, 3), sphere_resolution=32)
    V = section_volume_function(spec, 20.0, samples=4)
    c = V(1.0)
    (s2,) = curve.step_segments(2)
    r_hi, r_lo = curve.r1p, curve.r2
    only2 = type(curve)(**{**curve.__dict__, "segments": [s2]})
    expected = c * (r_hi**3 - r_lo**3) / 3 / math.cos(curve.theta0)
    assert curve_region_volume(only2, V, r_hi) == pytest.approx(expected, rel=1e-10)
    assert c == pytest.approx(2 * math.pi * 4 * math.pi, rel=1e-3)


@pytest.mark.parametrize("q", [3, 4])
def test_volume_scaling_exponent(q):
    curve = build_bend_curve(q, 0.1, 20.0, 1e-3)
    spec = HomotopyRegionSpec(circle(), q, 0.1, constant_tube_perturbation(q, 0.01, 0.01),
                              sphere_resolution=32 if q == 3 else 12)
    outer = flat_torus((1.0,) * 4, 4)
    eps = np.array([1.0, 0.5, 0.25])
    vols = np.array([assemble_surgered_metric(outer, curve, spec, 0.5, e, check_outer_curvature=False).volumes["S"]
                     for e in eps])
    np.testing.assert_allclose(vols[:-1] / vols[1:], 2.0**q, rtol=0.05)
    assert abs(np.polyfit(np.log(eps), np.log(vols), 1)[0] - q) <= 0.1
    assert np.all(np.diff(vols) < 0)


def test_codimension_mismatch(assembly_inputs):
    outer, _, spec = assembly_inputs
    curve4 = build_bend_curve(4, 0.1, 20.0, 1e-3)
    with pytest.raises(AssemblyError):
        assemble_surgered_metric(outer, curve4, spec, 0.5, 1.0)
