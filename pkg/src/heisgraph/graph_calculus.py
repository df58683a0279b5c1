"""Intrinsic graphs sampled on rectangular grids of the plane y = 0.

A graph is a function f(x, z) on a rectangle D.  Its lift is
Psi_f(x, z) = (x, f, z + x f / 2) and its intrinsic gradient is
grad_f f = d_x f - f d_z f, which we evaluate in the flux form
d_x f - d_z (f^2 / 2) so that pieces with f^2 affine in z come out exact.

Derivatives use centred differences in the interior and three-point
one-sided differences at the boundary and next to masked cells.  A stencil
never uses a link between two nodes whose every neighbouring cell is masked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .heis_core import LipschitzCone, ballbox_dist, inverse, mul

Region = tuple[float, float, float, float]


@dataclass
class GraphGrid:
    x0: float
    x1: float
    z0: float
    z1: float
    values: np.ndarray
    singular_mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise ValueError("values must be a 2-D array with at least 2x2 nodes")
        if not (self.x1 > self.x0 and self.z1 > self.z0):
            raise ValueError("empty domain")
        if self.singular_mask is not None:
            self.singular_mask = np.asarray(self.singular_mask, dtype=bool)
            if self.singular_mask.shape != (self.nx - 1, self.nz - 1):
                raise ValueError("singular_mask must have one flag per cell")
            if not self.singular_mask.any():
                self.singular_mask = None

    @classmethod
    def from_function(cls, func: Callable, x0, x1, z0, z1, nx, nz, singular_mask=None):
        xs = np.linspace(x0, x1, nx)
        zs = np.linspace(z0, z1, nz)
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        vals = np.broadcast_to(np.asarray(func(X, Z), dtype=float), X.shape).copy()
        mask = singular_mask(X, Z) if callable(singular_mask) else singular_mask
        return cls(float(x0), float(x1), float(z0), float(z1), vals, mask)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def nz(self) -> int:
        return self.values.shape[1]

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hz(self) -> float:
        return (self.z1 - self.z0) / (self.nz - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def zs(self) -> np.ndarray:
        return np.linspace(self.z0, self.z1, self.nz)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.zs, indexing="ij")

    def nodes(self) -> np.ndarray:
        X, Z = self.mesh()
        return np.stack([X, Z], axis=-1)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.z1 - self.z0)

    def with_values(self, values) -> GraphGrid:
        return GraphGrid(self.x0, self.x1, self.z0, self.z1, values, self.singular_mask)

    def to_json(self) -> dict:
        out = {
            "x0": self.x0, "x1": self.x1, "z0": self.z0, "z1": self.z1,
            "nx": self.nx, "nz": self.nz,
            "values": [float(v) for v in self.values.ravel()],
        }
        if self.singular_mask is not None:
            out["singular_mask"] = [bool(m) for m in self.singular_mask.ravel()]
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> GraphGrid:
        if isinstance(data, str):
            data = json.loads(data)
        nx, nz = int(data["nx"]), int(data["nz"])
        values = np.asarray(data["values"], dtype=float)
        if values.size != nx * nz:
            raise ValueError("values length does not match nx * nz")
        mask = data.get("singular_mask")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool).reshape(nx - 1, nz - 1)
        return cls(float(data["x0"]), float(data["x1"]), float(data["z0"]),
                   float(data["z1"]), values.reshape(nx, nz), mask)


@dataclass
class PiecewiseGraph:
    """A graph that is smooth off one singular characteristic curve.

    ``nexus(s)`` returns the (z, y) coordinates of the lifted curve above x = s,
    so the curve in the plane is z = nexus(s)[0] and the graph takes the value
    nexus(s)[1] there.  ``slopes(s)`` returns (sigma_minus, sigma_0, sigma_plus),
    the intrinsic gradient below the curve, along it, and above it.
    ``evaluate(x, z)`` gives exact graph values for asymptotic fits.
    """

    grid: GraphGrid
    nexus: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    slopes: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    s_range: tuple[float, float] = field(default=(0.0, 1.0))

    def slope_defect(self, s) -> np.ndarray:
        """(sigma_+ - sigma_0)^2 - (sigma_0 - sigma_-)^2 along the nexus."""
        lo, mid, hi = self.slopes(np.asarray(s, dtype=float))
        return (hi - mid) ** 2 - (mid - lo) ** 2


# -- finite differences -----------------------------------------------------

def _links(g: GraphGrid) -> tuple[np.ndarray, np.ndarray]:
    """Usable links: x-links have shape (nx-1, nz), z-links (nx, nz-1)."""
    xl = np.ones((g.nx - 1, g.nz), dtype=bool)
    zl = np.ones((g.nx, g.nz - 1), dtype=bool)
    m = g.singular_mask
    if m is None:
        return xl, zl
    # a link is cut when every cell having it as an edge is masked
    below = np.ones((g.nx - 1, g.nz), dtype=bool)
    above = np.ones((g.nx - 1, g.nz), dtype=bool)
    below[:, 1:] = m
    above[:, :-1] = m
    xl = ~(below & above)
    left = np.ones((g.nx, g.nz - 1), dtype=bool)
    right = np.ones((g.nx, g.nz - 1), dtype=bool)
    left[1:, :] = m
    right[:-1, :] = m
    zl = ~(left & right)
    return xl, zl


def _diff(u: np.ndarray, h: float, links: np.ndarray, axis: int) -> np.ndarray:
    """Derivative along ``axis`` respecting the usable ``links``."""
    u = np.moveaxis(np.asarray(u, dtype=float), axis, 0)
    ok = np.moveaxis(links, axis, 0)
    n = u.shape[0]
    out = np.full(u.shape, np.nan)

    fwd = np.zeros(u.shape, dtype=bool)
    bwd = np.zeros(u.shape, dtype=bool)
    fwd[:-1] = ok
    bwd[1:] = ok
    fwd2 = np.zeros(u.shape, dtype=bool)
    bwd2 = np.zeros(u.shape, dtype=bool)
    if n > 2:
        fwd2[:-2] = ok[:-1] & ok[1:]
        bwd2[2:] = ok[:-1] & ok[1:]

    with np.errstate(invalid="ignore"):
        central = np.full(u.shape, np.nan)
        central[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        f1 = np.full(u.shape, np.nan)
        f1[:-1] = (u[1:] - u[:-1]) / h
        b1 = np.full(u.shape, np.nan)
        b1[1:] = (u[1:] - u[:-1]) / h
        f2 = np.full(u.shape, np.nan)
        b2 = np.full(u.shape, np.nan)
        if n > 2:
            f2[:-2] = (-3 * u[:-2] + 4 * u[1:-1] - u[2:]) / (2 * h)
            b2[2:] = (3 * u[2:] - 4 * u[1:-1] + u[:-2]) / (2 * h)

    both = fwd & bwd
    out = np.where(both, central, out)
    only_f = fwd & ~bwd
    out = np.where(only_f & fwd2, f2, np.where(only_f, f1, out))
    only_b = bwd & ~fwd
    out = np.where(only_b & bwd2, b2, np.where(only_b, b1, out))
    return np.moveaxis(out, 0, axis)


def d_x(g: GraphGrid, w) -> np.ndarray:
    xl, _ = _links(g)
    return _diff(w, g.hx, xl, 0)


def d_z(g: GraphGrid, w) -> np.ndarray:
    _, zl = _links(g)
    return _diff(w, g.hz, zl, 1)


def intrinsic_gradient(g: GraphGrid) -> np.ndarray:
    """grad_f f at every node, NaN at isolated masked nodes."""
    f = g.values
    return d_x(g, f) - d_z(g, 0.5 * f * f)


def nabla_f(g: GraphGrid, w) -> np.ndarray:
    """The derivation d_x - f d_z applied to a scalar field on the grid."""
    return d_x(g, w) - g.values * d_z(g, w)


def nabla_f_power(g: GraphGrid, k: int) -> np.ndarray:
    """grad_f^k f, the first one in flux form."""
    out = intrinsic_gradient(g)
    for _ in range(k - 1):
        out = nabla_f(g, out)
    return out


def delta_f(g: GraphGrid, w, grad=None) -> np.ndarray:
    """The operator grad_f[d_x w] - f grad_f[d_z w] - (grad_f f) d_z w."""
    if grad is None:
        grad = intrinsic_gradient(g)
    wx = d_x(g, w)
    wz = d_z(g, w)
    return nabla_f(g, wx) - g.values * nabla_f(g, wz) - grad * wz


# -- quadrature ---------------------------------------------------------------

def cell_weights(g: GraphGrid, region: Region | None = None) -> np.ndarray:
    """Cell areas, zero for cells whose centre lies outside ``region``."""
    w = np.full((g.nx - 1, g.nz - 1), g.hx * g.hz)
    if region is not None:
        rx0, rx1, rz0, rz1 = region
        cx = 0.5 * (g.xs[1:] + g.xs[:-1])
        cz = 0.5 * (g.zs[1:] + g.zs[:-1])
        inside = ((cx >= rx0) & (cx <= rx1))[:, None] & ((cz >= rz0) & (cz <= rz1))[None, :]
        w = np.where(inside, w, 0.0)
    return w


def integrate(g: GraphGrid, integrand, region: Region | None = None) -> float:
    """Midpoint rule over cells with the integrand averaged from the corners.

    Corners where the integrand is NaN (isolated masked nodes) are left out of
    their cell's average.
    """
    u = np.asarray(integrand, dtype=float)
    corners = np.stack([u[:-1, :-1], u[1:, :-1], u[:-1, 1:], u[1:, 1:]])
    valid = np.isfinite(corners)
    count = valid.sum(axis=0)
    total = np.where(valid, corners, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    return float(np.sum(avg * cell_weights(g, region)))


def energy(g: GraphGrid, region: Region | None = None) -> float:
    grad = intrinsic_gradient(g)
    return integrate(g, 0.5 * grad**2, region)


def area(g: GraphGrid, region: Region | None = None) -> float:
    grad = intrinsic_gradient(g)
    return integrate(g, np.sqrt(1.0 + grad**2), region)


def excess_area(g: GraphGrid, scale: float = 1.0, region: Region | None = None) -> float:
    """Integral of sqrt(1 + scale * (grad_f f)^2) - 1, without cancellation."""
    q = scale * intrinsic_gradient(g) ** 2
    return integrate(g, q / (np.sqrt(1.0 + q) + 1.0), region)


def domain_measure(g: GraphGrid, region: Region | None = None) -> float:
    return float(np.sum(cell_weights(g, region)))


# -- pointwise geometry -------------------------------------------------------

def bilinear(g: GraphGrid, xz, values=None) -> np.ndarray:
    """Bilinear interpolation of node values at points (x, z), clamped to D."""
    vals = g.values if values is None else np.asarray(values, dtype=float)
    xz = np.asarray(xz, dtype=float)
    fx = np.clip((xz[..., 0] - g.x0) / g.hx, 0.0, g.nx - 1)
    fz = np.clip((xz[..., 1] - g.z0) / g.hz, 0.0, g.nz - 1)
    i = np.minimum(fx.astype(int), g.nx - 2)
    j = np.minimum(fz.astype(int), g.nz - 2)
    s = fx - i
    t = fz - j
    return ((1 - s) * (1 - t) * vals[i, j] + s * (1 - t) * vals[i + 1, j]
            + (1 - s) * t * vals[i, j + 1] + s * t * vals[i + 1, j + 1])


def lift(xz, y) -> np.ndarray:
    """Psi: (x, z) with graph value y goes to (x, 0, z) . Y^y."""
    xz = np.asarray(xz, dtype=float)
    x, z = xz[..., 0], xz[..., 1]
    y = np.asarray(y, dtype=float)
    return np.stack(np.broadcast_arrays(x, y, z + 0.5 * x * y), axis=-1)


def psi_f(g: GraphGrid, xz=None) -> np.ndarray:
    """Lift of grid nodes (default) or of arbitrary points of D."""
    if xz is None:
        return lift(g.nodes(), g.values)
    return lift(xz, bilinear(g, xz))


def unit_normal(g: GraphGrid, grad=None) -> np.ndarray:
    """Horizontal unit normal (-tau X + Y) / sqrt(1 + tau^2) as (a, b) pairs."""
    tau = intrinsic_gradient(g) if grad is None else grad
    s = np.sqrt(1.0 + tau**2)
    return np.stack([-tau / s, 1.0 / s], axis=-1)


def m_gamma(g: GraphGrid, grad=None) -> np.ndarray:
    """The field -tau X + (1 - tau^2/2) Y along the graph, as (a, b) pairs."""
    tau = intrinsic_gradient(g) if grad is None else grad
    return np.stack([-tau, 1.0 - 0.5 * tau**2], axis=-1)


def characteristic_curve(g: GraphGrid, start, x_end: float, step: float) -> np.ndarray:
    """Solve dz/dx = -f(x, z) from ``start`` = (x, z) to x_end with RK4."""
    x, z = float(start[0]), float(start[1])
    n = max(1, int(np.ceil(abs(x_end - x) / step)))
    h = (x_end - x) / n

    def rhs(xx, zz):
        return -float(bilinear(g, np.array([xx, zz])))

    out = [(x, z)]
    for _ in range(n):
        k1 = rhs(x, z)
        k2 = rhs(x + h / 2, z + h / 2 * k1)
        k3 = rhs(x + h / 2, z + h / 2 * k2)
        k4 = rhs(x + h, z + h * k3)
        z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
        out.append((x, z))
    return np.array(out)


def lift_characteristic(g: GraphGrid, curve) -> np.ndarray:
    """Lift a characteristic curve to a horizontal curve on the surface."""
    return psi_f(g, np.asarray(curve, dtype=float))


def horizontality_residual(curve3d) -> float:
    """Max of |z' - (x y' - y x')/2| along a sampled space curve."""
    c = np.asarray(curve3d, dtype=float)
    d = np.diff(c, axis=0)
    mid = 0.5 * (c[1:] + c[:-1])
    res = d[:, 2] - 0.5 * (mid[:, 0] * d[:, 1] - mid[:, 1] * d[:, 0])
    return float(np.max(np.abs(res)))


def excess(g: GraphGrid, p, r: float, nu="optimize") -> tuple[float, np.ndarray]:
    """Normalised flatness r^-3 * integral over B(p, r) of |nu_G - nu|^2 d(area).

    With nu = "optimize" the best constant unit normal is used, which is the
    normalised mean of nu_G over the ball.  Returns (excess, nu).
    """
    pts = psi_f(g)
    grad = intrinsic_gradient(g)
    normals = unit_normal(g, grad)
    inside = (ballbox_dist(np.asarray(p, dtype=float), pts) < r) & np.isfinite(grad)
    # trapezoid node weights
    wx = np.full(g.nx, g.hx)
    wx[[0, -1]] *= 0.5
    wz = np.full(g.nz, g.hz)
    wz[[0, -1]] *= 0.5
    w = np.outer(wx, wz) * np.sqrt(1.0 + np.where(np.isfinite(grad), grad, 0.0) ** 2)
    w = np.where(inside, w, 0.0)
    if isinstance(nu, str):
        if nu != "optimize":
            raise ValueError("nu must be a vector or 'optimize'")
        mean = np.einsum("ij,ijk->k", w, normals)
        norm = np.linalg.norm(mean)
        nu = mean / norm if norm > 0 else np.array([0.0, 1.0])
    nu = np.asarray(nu, dtype=float)
    dev = np.sum((normals - nu) ** 2, axis=-1)
    return float(np.sum(np.where(inside, w * dev, 0.0)) / r**3), nu


def boundary_integral(g: GraphGrid, P, Q) -> float:
    """Counter-clockwise line integral of P dx + Q dz around the grid boundary."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    trap = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    bottom = trap(P[:, 0], g.xs)
    right = trap(Q[-1, :], g.zs)
    top = -trap(P[:, -1], g.xs)
    left = -trap(Q[0, :], g.zs)
    return float(bottom + right + top + left)


def ibp_residual(g: GraphGrid, w) -> float:
    """Integral of grad_f w minus its boundary and d_z f terms."""
    w = np.asarray(w, dtype=float)
    lhs = integrate(g, nabla_f(g, w))
    rhs = boundary_integral(g, g.values * w, w) + integrate(g, w * d_z(g, g.values))
    return lhs - rhs


def lipschitz_violations(points, c: float) -> int:
    """Number of ordered pairs (p, q) with p^-1 q inside the cone of constant c."""
    pts = np.asarray(points, dtype=float)
    cone = LipschitzCone(c)
    bad = 0
    for k in range(len(pts)):
        rel = mul(inverse(pts[k]), pts)
        hit = cone.contains(rel)
        hit[k] = False
        bad += int(np.count_nonzero(hit))
    return bad


def lipschitz_check(points, c: float) -> bool:
    return lipschitz_violations(points, c) == 0
