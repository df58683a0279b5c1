import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisgraph.calibration import (
    Diagnostic,
    bar_M,
    box_surface_area,
    div_residual,
    flux_box,
    flux_graph,
    horizontal_divergence,
    jump_residual,
    jump_value,
    smooth_sample_points,
    stencil_is_smooth,
    tau_field,
    tau_K,
)
from heisgraph.graph_calculus import GraphGrid, domain_measure, energy, m_gamma
from heisgraph.surface_zoo import (
    FlexSurface,
    IntervalComplement,
    make_cantor,
    make_flex,
    make_parabola,
    make_plane,
)


@pytest.mark.parametrize("depth", [0, 1, 2, 3])
def test_jumps_vanish_exactly(depth):
    diags = jump_residual(make_cantor(depth))
    assert len(diags) == 2**depth
    assert all(d.value == 0 and isinstance(d.value, F) for d in diags)


def test_perturbed_jump_frozen():
    field = tau_field(make_cantor(1)).perturbed(1, "above", F(1, 20))
    values = [d.value for d in jump_residual(field)]
    # (1/3 + 1/20 + 1/3) * (0 - (1/3 + 1/20 - 1/3) / 2)
    assert values == [0, F(-43, 2400)]


def test_jump_value_is_exact_for_fractions():
    assert jump_value(F(-1, 3), F(0), F(1, 3)) == 0
    assert jump_value(F(0), F(1, 4), F(1, 2)) == 0
    assert jump_value(F(0), F(1, 3), F(1, 2)) == F(1, 2) * F(1, 12)


def test_diagnostic_json():
    d = Diagnostic("jump", [1.0, 0.0, 0.0], F(1, 4), 0.01)
    assert json.loads(json.dumps(d.to_json())) == {
        "residual_type": "jump", "location": [1.0, 0.0, 0.0], "value": 0.25, "h": 0.01}


def test_tau_values_frozen():
    K = make_cantor(1)
    pts = np.array([[1.0, 0.1, 0.0], [1.0, -0.1, 0.0], [1.0, 0.5, 0.0], [-1.0, 0.2, 0.0],
                    [-1.0, -0.2, 0.0], [1.0, 0.0, 0.0]])
    assert np.allclose(tau_K(K, pts), [1 / 3, -1 / 3, 0.5, 1.0, -1.0, 1 / 3])
    M = bar_M(K, pts[:1])
    assert np.allclose(M, [[-1 / 3, 1 - 1 / 18]])


@pytest.mark.parametrize("depth", [0, 1, 2, 3])
def test_divergence_vanishes_inside_pieces(depth):
    field = tau_field(make_cantor(depth))
    pts = smooth_sample_points(field, np.random.default_rng(depth), 200, 1e-3)
    assert np.max(np.abs(div_residual(field, pts, 1e-3))) <= 1e-6


def test_cone_only_field_is_divergence_free():
    field = tau_field(IntervalComplement(1, ()))
    assert jump_residual(field)[0].value == 0
    pts = smooth_sample_points(field, np.random.default_rng(9), 200, 1e-3)
    assert np.max(np.abs(div_residual(field, pts, 1e-3))) <= 1e-6


def test_divergence_detects_a_source():
    # V = x X has X-divergence 1 everywhere
    V = lambda p: np.stack([p[..., 0], 0 * p[..., 0]], axis=-1)  # noqa: E731
    p = np.random.default_rng(3).normal(size=(20, 3))
    assert np.allclose(horizontal_divergence(V, p, 1e-3), 1.0)


def test_stencil_filter_rejects_points_on_interfaces():
    field = tau_field(make_cantor(1))
    on_nexus = np.array([[0.5, 0.0, 0.1], [0.5, 1e-4, 0.0], [0.5, 0.2, 0.0]])
    assert stencil_is_smooth(field, on_nexus, 1e-3).tolist() == [False, False, True]


def test_flux_box_of_a_source_is_the_volume():
    V = lambda p: np.stack([p[..., 0], 0 * p[..., 0]], axis=-1)  # noqa: E731
    box = ((0, 1), (-0.5, 0.5), (0, 2))
    assert flux_box(V, box, 16) == pytest.approx(2.0, abs=1e-12)
    assert box_surface_area(box) == 2 * (1 + 2 + 2)


def test_constant_fields_have_zero_flux():
    V = lambda p: np.broadcast_to([0.3, -0.7], p.shape[:-1] + (2,))  # noqa: E731
    assert abs(flux_box(V, ((0.2, 1.1), (-0.3, 0.4), (-1, 0.5)), 16)) < 1e-13


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(-0.3, 0.3), st.floats(0.1, 0.5))
def test_straddling_boxes_are_conservative(u, zc, side):
    field = tau_field(make_cantor(2))
    centre = np.array([u, 0.0, zc])
    box = [(c - side / 2, c + side / 2) for c in centre]
    flux = flux_box(lambda q: bar_M(field, q), box, 32, 16)
    assert abs(flux) <= 0.05 * box_surface_area(box) * side / 32


def test_perturbed_field_leaks_flux():
    field = tau_field(make_cantor(1)).perturbed(1, "above", F(1, 5))
    box = ((0.3, 0.7), (-0.2, 0.2), (-0.2, 0.2))
    flux = flux_box(lambda q: bar_M(field, q), box, 32, 16)
    assert abs(flux) > 0.05 * box_surface_area(box) * 0.4 / 32


@pytest.mark.parametrize("name", ["plane", "parabola", "flex"])
def test_flux_of_own_field_is_area_plus_energy(name):
    if name == "plane":
        g = make_plane(0.7, resolution=33)
    elif name == "parabola":
        g = make_parabola(resolution=65)
    else:
        fs = FlexSurface((0.0, 0.0, 0.1), (0.5,), (-2.0, 1.0), 2.0)
        _, g, _ = make_flex(fs, (0.0, 1.0, -0.4, 0.4), 65)
    target = domain_measure(g) + energy(g)
    assert flux_graph(g, m_gamma(g)) == pytest.approx(target, rel=1e-12)


def test_flux_graph_accepts_callables():
    g = GraphGrid.from_function(lambda X, Z: 0.2 * X + 0 * Z, 0, 1, 0, 1, 9, 9)
    const = lambda p: np.broadcast_to([-0.2, 1 - 0.02], p.shape[:-1] + (2,))  # noqa: E731
    assert flux_graph(g, const) == pytest.approx(1.02, abs=1e-14)
