"""Explicit energy minimizers, ruled surfaces and cone-like ray fans.

Ray fans are unions of horizontal half-lines.  Every fan built here has the
same layout: a closed set K of slopes inside [lo, hi] with lo < 0 < hi, a
nexus half-line R0 pointing in the -x direction with slope m0, one nexus
half-line from the origin with slope m inside each gap (a, b) of K, and
branch half-lines of slope a and b leaving every nexus point in the +x
direction.  Directions inside K are filled by half-lines from the origin.
Such a fan is the graph z = height(x, y) of a continuous function and also an
intrinsic graph over the plane y = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .graph_calculus import GraphGrid, PiecewiseGraph
from .heis_core import mul

Number = float | Fraction


def _num(v) -> Number:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class IntervalComplement:
    """Open gaps (a_i, b_i) removed from [-alpha, alpha]; K is what remains."""

    alpha: Number
    intervals: tuple[tuple[Number, Number], ...]

    def __post_init__(self):
        ivs = tuple(sorted((_num(a), _num(b)) for a, b in self.intervals))
        object.__setattr__(self, "alpha", _num(self.alpha))
        object.__setattr__(self, "intervals", ivs)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        prev = -self.alpha
        for a, b in ivs:
            if not (a < b):
                raise ValueError(f"empty interval ({a}, {b})")
            if a < prev:
                raise ValueError("intervals overlap or leave [-alpha, alpha]")
            prev = b
        if prev > self.alpha:
            raise ValueError("intervals leave [-alpha, alpha]")

    @property
    def midpoints(self) -> list[Number]:
        return [(a + b) / 2 for a, b in self.intervals]

    @property
    def half_widths(self) -> list[Number]:
        return [(b - a) / 2 for a, b in self.intervals]

    def contains(self, k) -> np.ndarray:
        """Membership of slopes in K."""
        k = np.asarray(k, dtype=float)
        alpha = float(self.alpha)
        inside = (k >= -alpha) & (k <= alpha)
        for a, b in self.intervals:
            inside &= ~((k > float(a)) & (k < float(b)))
        return inside

    def to_json(self) -> dict:
        return {"alpha": float(self.alpha),
                "intervals": [[float(a), float(b)] for a, b in self.intervals]}

    @classmethod
    def from_json(cls, data: dict | str) -> IntervalComplement:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["alpha"], tuple((a, b) for a, b in data["intervals"]))


def make_cantor(depth: int, alpha: Number = 1) -> IntervalComplement:
    """Middle-thirds construction on [-alpha, alpha], kept in exact arithmetic."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    alpha = Fraction(str(alpha)) if not isinstance(alpha, Fraction) else alpha
    pieces = [(-alpha, alpha)]
    gaps = []
    for _ in range(depth):
        nxt = []
        for lo, hi in pieces:
            third = (hi - lo) / 3
            gaps.append((lo + third, hi - third))
            nxt += [(lo, lo + third), (hi - third, hi)]
        pieces = nxt
    return IntervalComplement(alpha, tuple(sorted(gaps)))


# -- ray fans -------------------------------------------------------------------

@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    slope: float
    kind: str  # "nexus", "branch" or "fan"
    parent: int | None = None
    direction: int = 1

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        d = self.direction
        step = np.stack([d * t, d * self.slope * t, np.zeros_like(t)], axis=-1)
        return mul(np.asarray(self.origin, dtype=float), step)


@dataclass(frozen=True)
class FanLayout:
    """Slope data of a fan: K-bounds, R0 slope and the gaps (a, m, b)."""

    lo: float
    hi: float
    m0: float
    gaps: tuple[tuple[float, float, float], ...]
    flat: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not (self.lo < 0 < self.hi):
            raise ValueError("fans need slopes of both signs in K")
        for a, m, b in self.gaps:
            if not (self.lo <= a < m < b <= self.hi):
                raise ValueError("each nexus slope must lie inside its gap")

    def region(self, x, y) -> np.ndarray:
        """-1 for the wedge around R0, k >= 0 for gap k, -2 for the cone over K."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, -2, dtype=int)
        pos = x > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(pos, y / np.where(pos, x, 1.0), 0.0)
        in_cone = pos & (k >= self.lo) & (k <= self.hi)
        out = np.where(in_cone, out, -1)
        for i, (a, _, b) in enumerate(self.gaps):
            out = np.where(in_cone & (k > a) & (k < b), i, out)
        return out

    def _wedge_data(self, reg):
        """Arrays (a, m, b) per point; the cone over K gets NaNs."""
        a = np.full(reg.shape, np.nan)
        m = np.full(reg.shape, np.nan)
        b = np.full(reg.shape, np.nan)
        sel = reg == -1
        a[sel], m[sel], b[sel] = self.lo, self.m0, self.hi
        for i, (ga, gm, gb) in enumerate(self.gaps):
            sel = reg == i
            a[sel], m[sel], b[sel] = ga, gm, gb
        return a, m, b

    def height(self, x, y) -> np.ndarray:
        """z-coordinate of the fan above (x, y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        reg = self.region(x, y)
        a, m, b = self._wedge_data(reg)
        off = y - m * x
        k = np.where(off >= 0, b, a)
        with np.errstate(invalid="ignore"):
            t = off / (k - m)
            z = 0.5 * (x - t) * off
        return np.where(reg == -2, 0.0, z)

    def tau(self, x, y) -> np.ndarray:
        """Slope of the branch through (x, y); on interfaces the larger one."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        reg = self.region(x, y)
        a, m, b = self._wedge_data(reg)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = y / x
        t = np.where(y - m * x >= 0, b, a)
        return np.where(reg == -2, ratio, t)

    def graph_value(self, x, z, tol: float = 1e-13) -> np.ndarray:
        """Intrinsic graph value f(x, z): the y with height(x, y) - xy/2 = z."""
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        shape = x.shape
        x = x.ravel()
        z = z.ravel()

        def h(y):
            return self.height(x, y) - 0.5 * x * y

        lo = np.full(x.shape, -1.0)
        hi = np.full(x.shape, 1.0)
        for _ in range(200):
            grow = h(lo) < z
            if not grow.any():
                break
            lo = np.where(grow, 2 * lo, lo)
        for _ in range(200):
            grow = h(hi) > z
            if not grow.any():
                break
            hi = np.where(grow, 2 * hi, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = h(mid) > z
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.max(hi - lo) < tol:
                break
        return (0.5 * (lo + hi)).reshape(shape)

    def nexus_curves(self) -> list[tuple[float, int]]:
        """(slope, direction) of every nexus half-line."""
        return [(self.m0, -1)] + [(m, 1) for _, m, _ in self.gaps]

    def stretched(self, a: float, b: float) -> FanLayout:
        """Layout of the image under (x, y, z) -> (ax, by, abz)."""
        r = b / a
        return FanLayout(r * self.lo, r * self.hi, r * self.m0,
                         tuple((r * p, r * q, r * s) for p, q, s in self.gaps),
                         tuple((r * p, r * q) for p, q in self.flat))

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "m0": self.m0,
                "gaps": [list(g) for g in self.gaps],
                "flat": [list(f) for f in self.flat]}

    @classmethod
    def from_json(cls, data: dict) -> FanLayout:
        return cls(float(data["lo"]), float(data["hi"]), float(data["m0"]),
                   tuple(tuple(float(v) for v in g) for g in data["gaps"]),
                   tuple(tuple(float(v) for v in f) for f in data["flat"]))


@dataclass
class RayFan:
    rays: list[Ray]
    layout: FanLayout
    extent: float = 1.0

    def height(self, x, y):
        return self.layout.height(x, y)

    def graph_value(self, x, z):
        return self.layout.graph_value(x, z)

    def tau(self, x, y):
        return self.layout.tau(x, y)

    def to_json(self) -> dict:
        rays = []
        for r in self.rays:
            item = {"origin": [float(c) for c in r.origin], "slope": float(r.slope),
                    "kind": r.kind}
            if r.parent is not None:
                item["parent"] = r.parent
            if r.direction != 1:
                item["direction"] = r.direction
            rays.append(item)
        return {"rays": rays, "extent": self.extent, "structure": self.layout.to_json()}

    @classmethod
    def from_json(cls, data: dict | str) -> RayFan:
        if isinstance(data, str):
            data = json.loads(data)
        rays = [Ray(tuple(r["origin"]), float(r["slope"]), r["kind"], r.get("parent"),
                    int(r.get("direction", 1))) for r in data["rays"]]
        return cls(rays, FanLayout.from_json(data["structure"]), float(data.get("extent", 1.0)))


def _build_fan(layout: FanLayout, extent: float, n_branch: int, n_fan: int) -> RayFan:
    rays: list[Ray] = []
    origin = (0.0, 0.0, 0.0)
    us = extent * np.arange(1, n_branch + 1) / n_branch
    for m, d in layout.nexus_curves():
        if d == -1:
            a, b = layout.lo, layout.hi
        else:
            a, b = next((ga, gb) for ga, gm, gb in layout.gaps if gm == m)
        parent = len(rays)
        nexus = Ray(origin, m, "nexus", None, d)
        rays.append(nexus)
        for u in us:
            p = tuple(float(c) for c in nexus.points(u))
            rays.append(Ray(p, a, "branch", parent))
            rays.append(Ray(p, b, "branch", parent))
    for c, d in layout.flat:
        count = 1 if c == d else max(2, n_fan)
        for k in np.linspace(c, d, count):
            rays.append(Ray(origin, float(k), "fan"))
    return RayFan(rays, layout, extent)


def make_lambda_K(K: IntervalComplement, extent: float = 1.0, n_branch: int = 16,
                  n_fan: int = 8) -> RayFan:
    """The energy-minimizing fan: branch slopes at the gap ends, nexus at the midpoint."""
    alpha = float(K.alpha)
    gaps = tuple((float(a), float((a + b) / 2), float(b)) for a, b in K.intervals)
    layout = FanLayout(-alpha, alpha, 0.0, gaps, _flat_pieces(K))
    return _build_fan(layout, extent, n_branch, n_fan)


def _flat_pieces(K: IntervalComplement) -> tuple[tuple[float, float], ...]:
    pieces = []
    prev = -K.alpha
    for a, b in K.intervals:
        pieces.append((float(prev), float(a)))
        prev = b
    pieces.append((float(prev), float(K.alpha)))
    return tuple(pieces)


def _angle_components(K) -> list[tuple[float, float]]:
    """Closed components of K in angle space as (start, end) pairs."""
    if isinstance(K, IntervalComplement):
        return [tuple(map(float, p)) for p in _flat_pieces(K)]
    angles = sorted(float(v) for v in K)
    return [(v, v) for v in angles]


def make_sigma_K(K, extent: float = 1.0, n_branch: int = 16, n_fan: int = 8) -> RayFan:
    """The area-minimizing fan over a set K of angles in (-pi/2, pi/2).

    K is a finite list of angles or an IntervalComplement read in angle
    units.  Nexus directions bisect the angular gaps and branches leave
    along the gap ends.
    """
    comps = _angle_components(K)
    if not comps:
        raise ValueError("K is empty")
    first, last = comps[0][0], comps[-1][1]
    if not (-math.pi / 2 < first and last < math.pi / 2):
        raise ValueError("angles must lie strictly between -pi/2 and pi/2")
    gaps = []
    for (_, e0), (s1, _) in zip(comps[:-1], comps[1:]):
        gaps.append((math.tan(e0), math.tan(0.5 * (e0 + s1)), math.tan(s1)))
    flat = tuple((math.tan(s), math.tan(e)) for s, e in comps)
    layout = FanLayout(math.tan(first), math.tan(last), math.tan(0.5 * (first + last)),
                       tuple(gaps), flat)
    return _build_fan(layout, extent, n_branch, n_fan)


def scale_angles(K, factor: float):
    """K scaled by ``factor`` in angle space, same representation as K."""
    if isinstance(K, IntervalComplement):
        f = Fraction(str(factor)) if isinstance(K.alpha, Fraction) else factor
        return IntervalComplement(K.alpha * f, tuple((a * f, b * f) for a, b in K.intervals))
    return [factor * v for v in K]


def rayfan_apply_stretch(fan: RayFan, a: float, b: float) -> RayFan:
    """Image of a fan under the stretch (x, y, z) -> (ax, by, abz)."""
    rays = [Ray((a * r.origin[0], b * r.origin[1], a * b * r.origin[2]),
                r.slope * b / a, r.kind, r.parent, r.direction) for r in fan.rays]
    return RayFan(rays, fan.layout.stretched(a, b), fan.extent * a)


def rayfan_sample(fan: RayFan, box=None, density: float = 32.0) -> np.ndarray:
    """Points along every ray at parameter spacing 1/density, clipped to a box."""
    pts = []
    n = max(2, int(round(fan.extent * density)) + 1)
    t = np.linspace(0.0, fan.extent, n)
    for r in fan.rays:
        pts.append(r.points(t))
    out = np.concatenate(pts, axis=0)
    if box is not None:
        (x0, x1), (y0, y1), (z0, z1) = box
        keep = ((out[:, 0] >= x0) & (out[:, 0] <= x1) & (out[:, 1] >= y0)
                & (out[:, 1] <= y1) & (out[:, 2] >= z0) & (out[:, 2] <= z1))
        out = out[keep]
    return out


def nexus_mask(layout: FanLayout, xs: np.ndarray, zs: np.ndarray) -> np.ndarray | None:
    """Flag cells met by a nexus curve z = -m x^2 / 2 of the plane y = 0."""
    mask = np.zeros((len(xs) - 1, len(zs) - 1), dtype=bool)
    for m, d in layout.nexus_curves():
        x0 = xs[:-1]
        x1 = xs[1:]
        if d == 1:
            lo_x, hi_x = np.maximum(x0, 0.0), x1
        else:
            lo_x, hi_x = x0, np.minimum(x1, 0.0)
        live = hi_x >= lo_x
        za = -0.5 * m * lo_x**2
        zb = -0.5 * m * hi_x**2
        zmin = np.minimum(za, zb)
        zmax = np.maximum(za, zb)
        hit = live[:, None] & (zmax[:, None] >= zs[None, :-1]) & (zmin[:, None] <= zs[None, 1:])
        mask |= hit
    return mask if mask.any() else None


def rayfan_to_graph(fan: RayFan, domain, resolution: int | tuple[int, int]) -> GraphGrid:
    """Sample the fan as an intrinsic graph, masking cells on nexus curves."""
    x0, x1, z0, z1 = domain
    nx, nz = (resolution, resolution) if np.isscalar(resolution) else resolution
    xs = np.linspace(x0, x1, nx)
    zs = np.linspace(z0, z1, nz)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    vals = fan.graph_value(X, Z)
    return GraphGrid(x0, x1, z0, z1, vals, nexus_mask(fan.layout, xs, zs))


# -- explicit graphs ------------------------------------------------------------

def _grid(func, domain, resolution, mask_fn=None) -> GraphGrid:
    x0, x1, z0, z1 = domain
    nx, nz = (resolution, resolution) if np.isscalar(resolution) else resolution
    return GraphGrid.from_function(func, x0, x1, z0, z1, nx, nz, mask_fn)


def make_plane(m: float = 0.0, c: float = 0.0, domain=(0.0, 1.0, 0.0, 1.0),
               resolution=65) -> GraphGrid:
    """f = m x + c, a ruled surface with constant gradient m."""
    return _grid(lambda x, z: m * x + c + 0.0 * z, domain, resolution)


def make_parabola(domain=(-1.0, 1.0, -1.0, 1.0), resolution=65) -> GraphGrid:
    """f = x^2, whose gradient 2x has constant derivative 2 along the graph."""
    return _grid(lambda x, z: x * x + 0.0 * z, domain, resolution)


def _straddle_mask(curve):
    def mask(X, Z):
        xs = X[:, 0]
        zs = Z[0, :]
        zc = curve(xs)
        lo = np.minimum(zc[:-1], zc[1:])
        hi = np.maximum(zc[:-1], zc[1:])
        return (hi[:, None] >= zs[None, :-1]) & (lo[:, None] <= zs[None, 1:])
    return mask


def broken_herringbone_value(upper: float, lower: float):
    """Exact graph with gradient ``upper`` < 0 above z = 0 and ``lower`` > 0 below."""
    if not (upper < 0 < lower):
        raise ValueError("need upper < 0 < lower")

    def f(x, z):
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        return np.where(z >= 0, -np.sqrt(-2 * upper * np.abs(z)),
                        np.sqrt(2 * lower * np.abs(z)))
    return f


def make_broken_herringbone(upper: float, lower: float, domain=(0.0, 1.0, -1.0, 1.0),
                            resolution=64) -> tuple[GraphGrid, PiecewiseGraph]:
    """Two ruled pieces meeting along the x-axis with slopes upper and lower."""
    f = broken_herringbone_value(upper, lower)
    g = _grid(f, domain, resolution, _straddle_mask(lambda x: np.zeros_like(x)))

    def nexus(s):
        s = np.asarray(s, dtype=float)
        return np.zeros_like(s), np.zeros_like(s)

    def slopes(s):
        s = np.asarray(s, dtype=float)
        return (np.full_like(s, lower), np.zeros_like(s), np.full_like(s, upper))

    return g, PiecewiseGraph(g, nexus, slopes, f, (domain[0], domain[1]))


def make_herringbone(a: float = 1.0, domain=(0.0, 1.0, -1.0, 1.0),
                     resolution=64) -> tuple[GraphGrid, PiecewiseGraph]:
    """f = -a sqrt|z| sign(z), gradient -a^2/2 above the x-axis and a^2/2 below."""
    s = 0.5 * a * a
    return make_broken_herringbone(-s, s, domain, resolution)


@dataclass
class FlexSurface:
    """Ruled surface spanned by two families of leaves from one horizontal curve.

    The curve is the lift of y = c(s) with c a polynomial (coefficients in
    increasing degree); its slope is sigma = c'.  The leaves above it have
    slope sigma - delta and those below sigma + delta, for a positive
    polynomial delta.  Leaves run in the +x direction for parameter length
    ``extent``.
    """

    directrix: Sequence[float] = (0.0,)
    spread: Sequence[float] = (0.5,)
    s_range: tuple[float, float] = (-1.0, 1.0)
    extent: float = 1.0
    c: Polynomial = field(init=False, repr=False)
    sigma: Polynomial = field(init=False, repr=False)
    delta: Polynomial = field(init=False, repr=False)
    zeta: Polynomial = field(init=False, repr=False)

    def __post_init__(self):
        self.c = Polynomial(list(self.directrix))
        self.sigma = self.c.deriv()
        self.delta = Polynomial(list(self.spread))
        # z-coordinate of the projected directrix: zeta' = -c
        self.zeta = -self.c.integ()

    def point(self, s, t) -> np.ndarray:
        """rho(s, t) = gamma(s) . (X + (sigma(s) +- delta(s)) Y)^|t|, + below for t >= 0."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        s, t = np.broadcast_arrays(s, t)
        cs = self.c(s)
        gz = self.zeta(s) + 0.5 * s * cs
        k = self.sigma(s) + np.where(t >= 0, 1.0, -1.0) * self.delta(s)
        tau = np.abs(t)
        base = np.stack([s, cs, gz], axis=-1)
        step = np.stack([tau, k * tau, np.zeros_like(tau)], axis=-1)
        return mul(base, step)

    def _z_of(self, X, tau, side):
        s = X - tau
        k = self.sigma(s) + side * self.delta(s)
        return self.zeta(s) - self.c(s) * tau - 0.5 * k * tau**2, self.c(s) + k * tau

    def evaluate(self, x, z) -> np.ndarray:
        """Exact graph value at (x, z), found by bisection in the leaf parameter."""
        X, Zt = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        above = Zt >= self.zeta(X)
        side = np.where(above, -1.0, 1.0)
        lo = np.zeros(X.shape)
        hi = np.full(X.shape, float(self.extent))
        zmax, _ = self._z_of(X, hi, side)
        reach = np.where(above, zmax >= Zt, zmax <= Zt)
        if not np.all(reach):
            raise ValueError("point not covered by the leaves; shrink the domain")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            zm, _ = self._z_of(X, mid, side)
            past = np.where(above, zm >= Zt, zm <= Zt)
            hi = np.where(past, mid, hi)
            lo = np.where(past, lo, mid)
        _, y = self._z_of(X, 0.5 * (lo + hi), side)
        return y


def make_flex(fs: FlexSurface, domain, resolution=64, density: int = 32):
    """Point cloud of the leaves plus the graph sampled on ``domain``."""
    s = np.linspace(fs.s_range[0], fs.s_range[1], density)
    t = np.linspace(-fs.extent, fs.extent, 2 * density)
    S, T = np.meshgrid(s, t, indexing="ij")
    cloud = fs.point(S, T).reshape(-1, 3)
    g = _grid(fs.evaluate, domain, resolution, _straddle_mask(fs.zeta))

    def nexus(x):
        x = np.asarray(x, dtype=float)
        return fs.zeta(x), fs.c(x)

    def slopes(x):
        x = np.asarray(x, dtype=float)
        sig, dl = fs.sigma(x), fs.delta(x)
        return sig + dl, sig, sig - dl

    return cloud, g, PiecewiseGraph(g, nexus, slopes, fs.evaluate, (domain[0], domain[1]))
