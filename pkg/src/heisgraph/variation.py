"""Contact variations of intrinsic graphs and their first variation of energy.

A contact potential is psi(h) = u0(Pi h) + y(h) u1(Pi h).  Its contact field
    V = (Y psi) X - (X psi) Y + psi Z
has a flow that maps cosets of Y to cosets of Y, so it moves intrinsic graphs
to intrinsic graphs.  Along a graph f, u1 = w1 and u0 = w2 - f w1, and the
induced field on the plane y = 0 is w1 grad_f + w2 d_z.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .expressions import PlaneFunction, Zero
from .graph_calculus import (
    GraphGrid,
    PiecewiseGraph,
    d_x,
    d_z,
    delta_f,
    energy,
    integrate,
    intrinsic_gradient,
    lift,
    nabla_f,
    nabla_f_power,
)
from .heis_core import exp_horizontal, proj_Pi, v0_point


@dataclass
class ContactPotential:
    """psi = u0(Pi h) + y u1(Pi h); ``support`` bounds where u0, u1 are nonzero."""

    u0: PlaneFunction
    u1: PlaneFunction
    support: tuple[float, float, float, float] | None = None

    @classmethod
    def vertical(cls, w2: PlaneFunction, support=None) -> ContactPotential:
        """Potential of the flow w2 d_z on the plane (u1 = 0)."""
        return cls(w2, Zero(), support)

    def psi(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        xz = proj_Pi(p)
        x, z = xz[..., 0], xz[..., 1]
        return self.u0(x, z) + p[..., 1] * self.u1(x, z)

    def derivatives(self, p):
        """(psi, X psi, Y psi) at p."""
        p = np.asarray(p, dtype=float)
        xz = proj_Pi(p)
        x, z = xz[..., 0], xz[..., 1]
        y = p[..., 1]
        u0, u1 = self.u0(x, z), self.u1(x, z)
        # X at p pushes forward to d_x - y d_z at Pi(p)
        D0 = self.u0.dx(x, z) - y * self.u0.dz(x, z)
        D1 = self.u1.dx(x, z) - y * self.u1.dz(x, z)
        return u0 + y * u1, D0 + y * D1, u1

    def w1(self, g: GraphGrid) -> np.ndarray:
        X, Z = g.mesh()
        return self.u1(X, Z)

    def w2(self, g: GraphGrid) -> np.ndarray:
        X, Z = g.mesh()
        return self.u0(X, Z) + g.values * self.u1(X, Z)


def contact_field(pot: ContactPotential, p) -> np.ndarray:
    """Euclidean components of (Y psi) X - (X psi) Y + psi Z at p."""
    p = np.asarray(p, dtype=float)
    psi, Xpsi, Ypsi = pot.derivatives(p)
    x, y = p[..., 0], p[..., 1]
    return np.stack([Ypsi, -Xpsi, psi - 0.5 * y * Ypsi - 0.5 * x * Xpsi], axis=-1)


def flow(pot: ContactPotential, p, t: float, steps: int = 8) -> np.ndarray:
    """Time-t map of the contact field by classical RK4."""
    q = np.array(p, dtype=float)
    if t == 0:
        return q
    h = t / steps
    for _ in range(steps):
        k1 = contact_field(pot, q)
        k2 = contact_field(pot, q + 0.5 * h * k1)
        k3 = contact_field(pot, q + 0.5 * h * k2)
        k4 = contact_field(pot, q + h * k3)
        q = q + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return q


def flow_energy(g: GraphGrid, pot: ContactPotential, t: float, region=None,
                eps: float = 1e-4, eta: float = 1e-4, steps: int = 8) -> float:
    """Energy of the flowed graph over the flowed domain, by change of variables.

    At each node u the tangent line of the graph is pushed forward by two
    companion points p (X + grad_f f(u) Y)^(+-eps), giving the new gradient;
    the area factor of the induced map on y = 0 comes from central differences
    of step ``eta``.
    """
    xz = g.nodes()
    grad = intrinsic_gradient(g)
    safe = np.where(np.isfinite(grad), grad, 0.0)
    p = lift(xz, g.values)
    v = v0_point(xz)
    ex = np.array([eta, 0.0, 0.0])
    ez = np.array([0.0, 0.0, eta])
    batch = np.stack([
        exp_horizontal(p, 1.0, safe, eps),
        exp_horizontal(p, 1.0, safe, -eps),
        v + ex, v - ex, v + ez, v - ez,
    ])
    moved = flow(pot, batch, t, steps)
    slope = (moved[0, ..., 1] - moved[1, ..., 1]) / (moved[0, ..., 0] - moved[1, ..., 0])
    P = proj_Pi(moved[2:])
    jxx = (P[0, ..., 0] - P[1, ..., 0]) / (2 * eta)
    jzx = (P[0, ..., 1] - P[1, ..., 1]) / (2 * eta)
    jxz = (P[2, ..., 0] - P[3, ..., 0]) / (2 * eta)
    jzz = (P[2, ..., 1] - P[3, ..., 1]) / (2 * eta)
    jac = jxx * jzz - jxz * jzx
    integrand = np.where(np.isfinite(grad), 0.5 * slope**2 * jac, np.nan)
    return integrate(g, integrand, region)


def A1(g: GraphGrid, w1, region=None) -> float:
    """Horizontal part: int w1 grad_f f grad_f^2 f + (grad_f f)^2/2 (d_x w1 - d_z[f w1]).

    The first term is the w1 part of the derivative of the gradient along
    the flow times the gradient itself, so A1 vanishes by parts when w1 has
    compact support.
    """
    w1 = np.asarray(w1, dtype=float)
    grad = intrinsic_gradient(g)
    second = nabla_f(g, grad)
    integrand = w1 * grad * second + 0.5 * grad**2 * (d_x(g, w1) - d_z(g, g.values * w1))
    return integrate(g, integrand, region)


def B2(g: GraphGrid, w, grad=None) -> np.ndarray:
    """Pointwise -Delta_f w grad_f f + (grad_f f)^2/2 d_z w."""
    grad = intrinsic_gradient(g) if grad is None else grad
    w = np.asarray(w, dtype=float)
    return -delta_f(g, w, grad) * grad + 0.5 * grad**2 * d_z(g, w)


def B1(g: GraphGrid, w, grad=None) -> np.ndarray:
    """Pointwise f B2(f, w) - (3/2)(grad_f f)^2 grad_f w."""
    grad = intrinsic_gradient(g) if grad is None else grad
    return g.values * B2(g, w, grad) - 1.5 * grad**2 * nabla_f(g, w)


def A2(g: GraphGrid, w2, region=None) -> float:
    """Vertical part: int -grad_f^2 w2 grad_f f + (grad_f f)^2/2 d_z w2.

    grad_f^2 w2 is evaluated as Delta_f w2, the same operator written
    without derivatives of f, which stays bounded on ruled pieces that meet
    a singular curve.
    """
    return integrate(g, B2(g, w2), region)


def first_variation(g: GraphGrid, pot: ContactPotential, region=None) -> tuple[float, float]:
    return A1(g, pot.w1(g), region), A2(g, pot.w2(g), region)


def harmonic_residual(g: GraphGrid) -> np.ndarray:
    """2 d_z f grad_f^2 f - grad_f^3 f at every node."""
    second = nabla_f_power(g, 2)
    third = nabla_f(g, second)
    return 2 * d_z(g, g.values) * second - third


def fvf_perturbation(g: GraphGrid, h, t: float = 1e-3, region=None) -> tuple[float, float]:
    """d/dt E(f + t h) at 0: the formula -int grad_f^2 f h and a central difference."""
    h = np.asarray(h, dtype=float)
    analytic = -integrate(g, nabla_f_power(g, 2) * h, region)
    up = energy(g.with_values(g.values + t * h), region)
    down = energy(g.with_values(g.values - t * h), region)
    return analytic, (up - down) / (2 * t)


def herringbone_A2(pg: PiecewiseGraph, w2: PlaneFunction, n_line: int = 2001) -> dict:
    """Split of the vertical first variation on a piecewise ruled graph.

    boundary_term = 1/2 int w2(gamma(s)) delta(s) ds along the singular curve,
    bulk_term = int (w2 d_z f + grad_f w2) grad_f^2 f over the smooth pieces.
    """
    g = pg.grid
    s = np.linspace(pg.s_range[0], pg.s_range[1], n_line)
    gz, _ = pg.nexus(s)
    line = w2(s, gz) * pg.slope_defect(s)
    trap = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    boundary = 0.5 * float(trap(line, s))
    X, Z = g.mesh()
    w = w2(X, Z)
    second = nabla_f_power(g, 2)
    bulk = integrate(g, (w * d_z(g, g.values) + nabla_f(g, w)) * second)
    return {"total": boundary + bulk, "boundary_term": boundary, "bulk_term": bulk}


def near_sing_fit(pg: PiecewiseGraph, s: float, nus, side: int = 1) -> dict:
    """Log-log fits of f(gamma(s) Z^nu) - f(gamma(s)) and d_z f against nu.

    ``side`` = +1 probes above the singular curve and -1 below.
    """
    nus = np.asarray(nus, dtype=float)
    gz, gy = pg.nexus(np.array([s]))
    z = gz[0] + side * nus
    xs = np.full_like(nus, s)
    gap = np.abs(pg.evaluate(xs, z) - gy[0])
    step = 1e-3 * nus
    dz = np.abs(pg.evaluate(xs, z + step) - pg.evaluate(xs, z - step)) / (2 * step)
    e1, c1 = np.polyfit(np.log(nus), np.log(gap), 1)
    e2, c2 = np.polyfit(np.log(nus), np.log(dz), 1)
    return {"exponent": float(e1), "coefficient": float(np.exp(c1)),
            "dz_exponent": float(e2), "dz_coefficient": float(np.exp(c2))}


def stretched_grid(g: GraphGrid, r: float) -> GraphGrid:
    """Image of the graph under (x, y, z) -> (r x, y / r, z)."""
    return GraphGrid(r * g.x0, r * g.x1, g.z0, g.z1, g.values / r, g.singular_mask)


def stretch_energy_fit(g: GraphGrid, rs=(2, 4, 8, 16)) -> dict:
    """Fit the area of stretched copies to r mu(D) + beta r^-3 (+ c r^-7).

    The excess S(r) - r mu(D) is integrated directly so the small terms do
    not drown in cancellation.  ``remainder_order`` is the log-log slope of
    S(r) - r mu(D) - beta r^-3.
    """
    from .graph_calculus import domain_measure, excess_area

    rs = np.asarray(rs, dtype=float)
    mu = domain_measure(g)
    excess = np.array([excess_area(stretched_grid(g, r)) for r in rs])
    y = rs**3 * excess
    A = np.stack([np.ones_like(rs), rs**-4.0], axis=-1)
    (beta, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    remainder = excess - beta * rs**-3.0
    order = float(np.polyfit(np.log(rs), np.log(np.abs(remainder)), 1)[0])
    return {"beta": float(beta), "c": float(c), "energy": energy(g), "mu": mu,
            "areas": [float(r * mu + e) for r, e in zip(rs, excess)],
            "remainder_order": order}


@dataclass
class VariationReport:
    t: list[float]
    E_t: list[float]
    analytic_slope: float
    fd_slope: float
    C_fit: list[float]

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def variation_report(g: GraphGrid, pot: ContactPotential, ts=(1e-2, 5e-3, 2.5e-3),
                     region=None, steps: int = 8) -> VariationReport:
    """Energies along the flow, both slopes at t = 0 and the remainder ratios."""
    ts = [float(t) for t in ts]
    e0 = flow_energy(g, pot, 0.0, region, steps=steps)
    a1, a2 = first_variation(g, pot, region)
    slope = a1 + a2
    Et = [flow_energy(g, pot, t, region, steps=steps) for t in ts]
    tmin = min(ts)
    back = flow_energy(g, pot, -tmin, region, steps=steps)
    fd = (Et[ts.index(tmin)] - back) / (2 * tmin)
    C = [(e - e0 - t * slope) / t**2 for t, e in zip(ts, Et)]
    return VariationReport(ts, Et, slope, fd, C)


def epigraph_indicator(surface, pts) -> np.ndarray:
    """Membership of points in {p Y^t : p on the surface, t >= 0}.

    ``surface`` is a RayFan, a GraphGrid, a PiecewiseGraph or a callable
    f(x, z).  For an intrinsic graph the test is y >= f(Pi(p)).  Fans are
    also graphs z = height(x, y) with z - xy/2 decreasing in y along each
    coset of Y, so for them the same set is {z >= height(x, y)}.
    """
    from .graph_calculus import bilinear
    from .surface_zoo import RayFan

    pts = np.asarray(pts, dtype=float)
    if isinstance(surface, RayFan):
        return pts[..., 2] >= surface.height(pts[..., 0], pts[..., 1])
    xz = proj_Pi(pts)
    if isinstance(surface, GraphGrid):
        f = bilinear(surface, xz)
    elif isinstance(surface, PiecewiseGraph):
        f = surface.evaluate(xz[..., 0], xz[..., 1])
    else:
        f = surface(xz[..., 0], xz[..., 1])
    return pts[..., 1] >= f


def indicator_L1_distance(A, B, box=((-0.5, 0.5), (-0.5, 0.5), (-0.5, 0.5)),
                          voxels: int = 128) -> float:
    """Volume of the symmetric difference of two epigraphs inside a box.

    Computed as the fraction of voxel centres where the indicators differ,
    times the box volume.  Fans are tested a column at a time, since their
    height does not depend on z.
    """
    (x0, x1), (y0, y1), (z0, z1) = box
    n = int(voxels)
    cx = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    cy = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    cz = z0 + (np.arange(n) + 0.5) * (z1 - z0) / n
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    differ = 0
    for k, z in enumerate(cz):
        pts = np.stack([X, Y, np.full_like(X, z)], axis=-1)
        differ += int(np.count_nonzero(epigraph_indicator(A, pts) != epigraph_indicator(B, pts)))
    volume = (x1 - x0) * (y1 - y0) * (z1 - z0)
    return differ / n**3 * volume
