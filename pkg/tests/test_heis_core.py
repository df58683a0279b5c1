import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisgraph.heis_core import (
    GraphAutomorphism,
    LipschitzCone,
    ballbox_dist,
    ballbox_norm,
    exp_horizontal,
    frame,
    horizontal_vector,
    inverse,
    mul,
    point,
    proj_Pi,
    v0_point,
)

coord = st.floats(-5, 5, allow_nan=False)
points = st.tuples(coord, coord, coord).map(np.array)


def test_product_frozen_values():
    assert np.array_equal(mul(point(1, 2, 3), point(4, 5, 6)), [5.0, 7.0, 7.5])
    assert np.array_equal(mul(point(1, 0, 0), point(0, 1, 0)), [1.0, 1.0, 0.5])
    assert np.array_equal(mul(point(0, 1, 0), point(1, 0, 0)), [1.0, 1.0, -0.5])


def test_commutator_of_unit_steps_is_vertical():
    X, Y = point(1, 0, 0), point(0, 1, 0)
    c = mul(mul(X, Y), mul(inverse(X), inverse(Y)))
    assert np.allclose(c, [0.0, 0.0, 1.0])


@given(points, points, points)
def test_product_is_associative(p, q, r):
    assert np.allclose(mul(mul(p, q), r), mul(p, mul(q, r)), atol=1e-9)


@given(points)
def test_inverse(p):
    assert np.allclose(mul(p, inverse(p)), 0.0, atol=1e-12)
    assert np.allclose(mul(inverse(p), p), 0.0, atol=1e-12)


def test_frame_frozen():
    F = frame(point(2.0, 4.0, 7.0))
    assert np.array_equal(F[0], [1.0, 0.0, -2.0])
    assert np.array_equal(F[1], [0.0, 1.0, 1.0])
    assert np.array_equal(F[2], [0.0, 0.0, 1.0])


def test_frame_fields_are_euclidean_divergence_free():
    # X = (1, 0, -y/2) and Y = (0, 1, x/2): each component is independent
    # of its own coordinate, checked by differencing
    rng = np.random.default_rng(1)
    p = rng.normal(size=(50, 3))
    h = 1e-6
    for k in range(2):
        div = sum((frame(p + h * np.eye(3)[i])[:, k, i] - frame(p - h * np.eye(3)[i])[:, k, i])
                  / (2 * h) for i in range(3))
        assert np.max(np.abs(div)) < 1e-9


@given(points, st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1))
def test_horizontal_flow_is_left_translation_and_tangent(p, a, b, t):
    q = exp_horizontal(p, a, b, t)
    assert np.allclose(q, mul(p, point(a * t, b * t, 0.0)), atol=1e-9)
    h = 1e-6
    fd = (exp_horizontal(p, a, b, t + h) - exp_horizontal(p, a, b, t - h)) / (2 * h)
    assert np.allclose(fd, horizontal_vector(q, a, b), atol=1e-5)


@given(points)
def test_projection_along_Y_cosets(p):
    v = v0_point(proj_Pi(p))
    assert v[1] == 0.0
    # p = v . Y^y(p)
    assert np.allclose(mul(v, point(0.0, p[1], 0.0)), p, atol=1e-9)


def test_ballbox_frozen():
    assert ballbox_norm(point(1.0, 2.0, 4.0)) == 2.0
    assert ballbox_norm(point(0.5, 0.0, 9.0)) == 3.0
    assert ballbox_dist(point(1.0, 1.0, 0.0), point(1.0, 1.0, 0.0)) == 0.0


@given(points, points, st.floats(0.1, 10))
def test_ballbox_is_left_invariant_and_homogeneous(p, q, lam):
    h = point(0.3, -1.2, 2.0)
    assert np.isclose(ballbox_dist(mul(h, p), mul(h, q)), ballbox_dist(p, q), atol=1e-7)
    s = GraphAutomorphism.stretch(lam, lam)
    assert np.isclose(ballbox_norm(s.apply(p)), lam * ballbox_norm(p), rtol=1e-9, atol=1e-12)


def test_cone_frozen_membership():
    cone = LipschitzCone(1.0)
    assert cone.contains(point(0.0, 1.0, 0.0))
    assert not cone.contains(point(1.0, 1.0, 0.0))
    assert not cone.contains(point(0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        LipschitzCone(0.0)


@given(points, st.floats(0.05, 20))
def test_cone_is_scale_invariant(p, lam):
    cone = LipschitzCone(0.7)
    s = GraphAutomorphism.stretch(lam, lam)
    assert cone.contains(p) == cone.contains(s.apply(p)) or np.isclose(
        abs(p[1]), max(2.8 * abs(p[0]), np.sqrt(22.4 * abs(p[2]))))


AUTOS = [GraphAutomorphism.stretch(1.5, 0.7), GraphAutomorphism.shear(0.8),
         GraphAutomorphism.translate((0.3, -0.4, 1.1))]


@pytest.mark.parametrize("q", AUTOS, ids=lambda q: q.kind)
def test_automorphisms_are_homomorphisms(q):
    rng = np.random.default_rng(2)
    p, r = rng.normal(size=(2, 40, 3))
    if q.kind == "translate":
        # left translation: q(p r) = q(p) r
        assert np.allclose(q.apply(mul(p, r)), mul(q.apply(p), r))
    else:
        assert np.allclose(q.apply(mul(p, r)), mul(q.apply(p), q.apply(r)))


@pytest.mark.parametrize("q", AUTOS, ids=lambda q: q.kind)
def test_automorphisms_map_Y_cosets_to_Y_cosets(q):
    rng = np.random.default_rng(3)
    xz = rng.normal(size=(30, 2))
    ys = rng.normal(size=(30,))
    p = mul(v0_point(xz), np.stack([0 * ys, ys, 0 * ys], -1))
    assert np.allclose(proj_Pi(q.apply(p)), q.induced_v0_map(xz))
    assert np.allclose(q.inverse_v0_map(q.induced_v0_map(xz)), xz)


@pytest.mark.parametrize("q", AUTOS, ids=lambda q: q.kind)
def test_graph_points_map_to_graph_points(q):
    rng = np.random.default_rng(4)
    xz = rng.normal(size=(30, 2))
    f = np.sin(xz[:, 0]) + xz[:, 1]
    p = mul(v0_point(xz), np.stack([0 * f, f, 0 * f], -1))
    image = q.apply(p)
    assert np.allclose(image[:, 1], q.transform_values(xz, f))


def test_gradient_laws_and_energy_factor_frozen():
    assert GraphAutomorphism.stretch(2.0, 3.0).gradient_law(1.0) == 1.5
    assert GraphAutomorphism.shear(0.25).gradient_law(1.0) == 1.25
    assert GraphAutomorphism.translate((1, 2, 3)).gradient_law(1.0) == 1.0
    assert GraphAutomorphism.stretch(2.0, 0.5).energy_factor() == 0.125
    # b^3 coincides with b^2/a when ab = 1
    assert GraphAutomorphism.stretch(4.0, 0.25).energy_factor() == 0.25**2 / 4.0
    with pytest.raises(ValueError):
        GraphAutomorphism.shear(1.0).energy_factor()


def test_automorphism_validation():
    with pytest.raises(ValueError):
        GraphAutomorphism("rotate", (1.0,))
    with pytest.raises(ValueError):
        GraphAutomorphism("stretch", (1.0,))
    with pytest.raises(ValueError):
        GraphAutomorphism.stretch(-1.0, 1.0)


@settings(max_examples=25)
@given(st.floats(0.5, 2), st.floats(0.5, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_horizontal_lines_map_to_lines_with_scaled_slope(a, b, slope, base):
    s = GraphAutomorphism.stretch(a, b)
    p0 = point(base, 0.2, -0.1)
    line = exp_horizontal(p0, 1.0, slope, np.linspace(-1, 1, 5))
    image = s.apply(line)
    d = np.diff(image, axis=0)
    assert np.allclose(d[:, 1] / d[:, 0], slope * b / a)
    # image stays horizontal: dz = (x dy - y dx)/2 along it
    mids = 0.5 * (image[1:] + image[:-1])
    assert np.allclose(d[:, 2], 0.5 * (mids[:, 0] * d[:, 1] - mids[:, 1] * d[:, 0]), atol=1e-12)
