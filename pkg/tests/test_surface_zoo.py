import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisgraph.graph_calculus import energy, intrinsic_gradient
from heisgraph.heis_core import GraphAutomorphism, proj_Pi
from heisgraph.surface_zoo import (
    FanLayout,
    FlexSurface,
    IntervalComplement,
    RayFan,
    broken_herringbone_value,
    make_broken_herringbone,
    make_cantor,
    make_flex,
    make_herringbone,
    make_lambda_K,
    make_sigma_K,
    rayfan_apply_stretch,
    rayfan_sample,
    rayfan_to_graph,
    scale_angles,
)


def test_cantor_intervals_frozen():
    assert make_cantor(0).intervals == ()
    assert make_cantor(1).intervals == ((F(-1, 3), F(1, 3)),)
    assert make_cantor(2).intervals == ((F(-7, 9), F(-5, 9)), (F(-1, 3), F(1, 3)),
                                        (F(5, 9), F(7, 9)))
    K = make_cantor(3, F(1, 2))
    assert len(K.intervals) == 7
    assert K.intervals[0] == (F(-25, 54), F(-23, 54))


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_cantor_removed_length(depth):
    K = make_cantor(depth)
    removed = sum(b - a for a, b in K.intervals)
    assert removed == 2 * (1 - F(2, 3) ** depth)


def test_interval_complement_validation():
    with pytest.raises(ValueError):
        IntervalComplement(1, ((F(1, 2), F(1, 4)),))
    with pytest.raises(ValueError):
        IntervalComplement(1, ((F(-2), F(0)),))
    with pytest.raises(ValueError):
        IntervalComplement(1, ((F(0), F(1, 2)), (F(1, 4), F(3, 4))))
    with pytest.raises(ValueError):
        IntervalComplement(0, ())


def test_interval_complement_membership_and_json():
    K = make_cantor(2)
    assert K.contains([-1.0, -0.6, 0.0, 1 / 3, 0.5, 1.0]).tolist() == [
        True, False, False, True, True, True]
    back = IntervalComplement.from_json(json.dumps(K.to_json()))
    assert [(float(a), float(b)) for a, b in back.intervals] == \
        [(float(a), float(b)) for a, b in K.intervals]
    assert K.midpoints[1] == 0 and K.half_widths[1] == F(1, 3)


def test_lambda_K_structure():
    fan = make_lambda_K(make_cantor(1), n_branch=2, n_fan=2)
    kinds = [r.kind for r in fan.rays]
    assert kinds.count("nexus") == 2
    assert kinds.count("branch") == 8
    assert kinds.count("fan") == 4
    back = fan.rays[0]
    assert back.direction == -1 and back.slope == 0.0
    slopes = sorted({r.slope for r in fan.rays if r.parent == 5})
    assert slopes == pytest.approx([-1 / 3, 1 / 3])


def test_rayfan_json_round_trip():
    fan = make_lambda_K(make_cantor(2), n_branch=3)
    back = RayFan.from_json(json.dumps(fan.to_json()))
    assert back.rays == fan.rays
    assert back.layout == fan.layout
    assert back.extent == fan.extent


def test_sample_points_lie_on_the_fan():
    fan = make_lambda_K(make_cantor(2), n_branch=6)
    pts = rayfan_sample(fan, density=16)
    assert np.max(np.abs(pts[:, 2] - fan.height(pts[:, 0], pts[:, 1]))) < 1e-12


def test_fan_height_is_continuous():
    fan = make_lambda_K(make_cantor(2))
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, 2000)
    y = rng.uniform(-1, 1, 2000)
    h = 1e-7
    jump = np.abs(fan.height(x + h, y) - fan.height(x, y)) + \
        np.abs(fan.height(x, y + h) - fan.height(x, y))
    assert np.max(jump) < 1e-6


def test_graph_value_inverts_height():
    fan = make_lambda_K(make_cantor(2))
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, 500)
    y = rng.uniform(-1, 1, 500)
    p = np.stack([x, y, fan.height(x, y)], axis=-1)
    xz = proj_Pi(p)
    assert np.allclose(fan.graph_value(xz[:, 0], xz[:, 1]), y, atol=1e-10)


def test_fan_graph_gradient_equals_branch_slope():
    fan = make_lambda_K(make_cantor(1))
    g = rayfan_to_graph(fan, (0.2, 1.0, -0.4, 0.4), 81)
    grad = intrinsic_gradient(g)
    xz = g.nodes()
    y = g.values
    expected = fan.tau(xz[..., 0], y)
    # away from the masked cells and the cone over K the pieces are ruled
    ok = np.isfinite(grad) & (np.abs(grad - expected) < 0.5)
    assert ok.mean() > 0.9
    assert np.median(np.abs(grad - expected)[ok]) < 1e-8


def test_sigma_K_has_a_nexus_per_angular_gap():
    fan = make_sigma_K([-0.1, 0.0, 0.1], n_branch=1)
    layout = fan.layout
    assert len(layout.nexus_curves()) == 3
    assert layout.gaps[0][1] == pytest.approx(math.tan(-0.05))
    assert layout.m0 == 0.0
    with pytest.raises(ValueError):
        make_sigma_K([-2.0, 0.0])
    with pytest.raises(ValueError):
        make_sigma_K([])


def test_stretch_multiplies_slopes():
    fan = make_sigma_K([-0.2, 0.0, 0.2])
    n = 4
    image = rayfan_apply_stretch(fan, 1 / n, n)
    assert image.layout.hi == pytest.approx(n * n * math.tan(0.2))
    q = GraphAutomorphism.stretch(1 / n, n)
    pts = rayfan_sample(fan, density=4)
    moved = q.apply(pts)
    assert np.max(np.abs(moved[:, 2] - image.height(moved[:, 0], moved[:, 1]))) < 1e-12


def test_scaled_angles_converge_to_slope_set():
    K = make_cantor(2)
    for n in (2, 4, 8):
        fan = rayfan_apply_stretch(make_sigma_K(scale_angles(K, 1 / n**2)), 1 / n, n)
        err = abs(fan.layout.hi - 1.0)
        assert err == pytest.approx(n * n * math.tan(1 / n**2) - 1.0)
    assert scale_angles([0.5, -0.5], 2) == [1.0, -1.0]


def test_fan_layout_validation():
    with pytest.raises(ValueError):
        FanLayout(0.1, 1.0, 0.0, (), ())
    with pytest.raises(ValueError):
        FanLayout(-1.0, 1.0, 0.0, ((0.0, 0.5, 0.2),), ())


def test_broken_herringbone_values_and_slopes():
    f = broken_herringbone_value(-0.1, 0.3)
    assert f(0.0, 0.5) == pytest.approx(-math.sqrt(0.1))
    assert f(0.0, -0.5) == pytest.approx(math.sqrt(0.3))
    g, pg = make_broken_herringbone(-0.1, 0.3, resolution=33)
    grad = intrinsic_gradient(g)
    X, Z = g.mesh()
    ok = np.isfinite(grad) & (Z != 0)
    assert np.allclose(grad[ok], np.where(Z > 0, -0.1, 0.3)[ok], atol=1e-12)
    assert pg.slope_defect(np.array([0.5]))[0] == pytest.approx(0.01 - 0.09)
    with pytest.raises(ValueError):
        broken_herringbone_value(0.1, 0.3)


def test_herringbone_has_no_slope_defect():
    _, pg = make_herringbone(1.3)
    assert np.all(pg.slope_defect(np.linspace(0, 1, 7)) == 0.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.0))
def test_herringbone_energy_scales_like_a_to_the_fourth(a):
    g, _ = make_herringbone(a, resolution=17)
    assert energy(g) == pytest.approx(a**4 / 4, rel=1e-12)


def test_flex_surface_points_lie_on_graph():
    fs = FlexSurface(directrix=(0.0, 0.0, 0.1), spread=(0.5,), s_range=(-2.0, 1.0), extent=2.0)
    rng = np.random.default_rng(7)
    s = rng.uniform(-0.5, 0.5, 200)
    t = rng.uniform(-0.5, 0.5, 200)
    p = fs.point(s, t)
    xz = proj_Pi(p)
    assert np.allclose(fs.evaluate(xz[:, 0], xz[:, 1]), p[:, 1], atol=1e-10)


def test_flex_leaves_have_the_prescribed_slopes():
    fs = FlexSurface(directrix=(0.0, 0.0, 0.1), spread=(0.5,), s_range=(-2.0, 1.0), extent=2.0)
    cloud, g, pg = make_flex(fs, (0.0, 1.0, -0.4, 0.4), 65)
    grad = intrinsic_gradient(g)
    X, Z = g.mesh()
    far = np.isfinite(grad) & (np.abs(Z - fs.zeta(X)) > 0.15)
    # the leaf through (x, z) starts at s = x - t; find t by bisection
    above = Z >= fs.zeta(X)
    side = np.where(above, -1.0, 1.0)
    lo, hi = np.zeros_like(X), np.full_like(X, fs.extent)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        zm, _ = fs._z_of(X, mid, side)
        past = np.where(above, zm >= Z, zm <= Z)
        hi, lo = np.where(past, mid, hi), np.where(past, lo, mid)
    s0 = X - 0.5 * (lo + hi)
    tau = fs.sigma(s0) + side * fs.delta(s0)
    assert np.max(np.abs(grad - tau)[far]) < 5e-3
    assert cloud.shape[1] == 3
