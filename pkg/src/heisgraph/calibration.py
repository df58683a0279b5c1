"""Calibrating vector fields for ray fans and their divergence checks.

The field attached to a slope function tau is
    M = -tau X + (1 - tau^2 / 2) Y,
which agrees with the flux field of any graph whose intrinsic gradient
equals tau.  Where tau is smooth, M is divergence free exactly when
X[tau] + tau Y[tau] = 0.  Across an interface of slope sigma with values
tau_- and tau_+ on its two sides, the normal component of M is continuous
exactly when (tau_+ - tau_-)(sigma - (tau_+ + tau_-)/2) = 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .graph_calculus import GraphGrid, integrate, intrinsic_gradient, psi_f
from .heis_core import exp_horizontal
from .surface_zoo import FanLayout, IntervalComplement, make_lambda_K

Number = float | Fraction


@dataclass
class Diagnostic:
    residual_type: str
    location: list[float]
    value: float
    h: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["value"] = float(self.value)
        out["location"] = [float(c) for c in self.location]
        return out


@dataclass
class Interface:
    """A nexus ray with the slopes on its two sides."""

    name: str
    slope: Number
    below: Number
    above: Number
    direction: int = 1

    def point(self, u: float = 1.0) -> list[float]:
        d = self.direction
        return [d * u, d * float(self.slope) * u, 0.0]


@dataclass
class TauField:
    """Piecewise slope function over the wedges of a fan layout.

    ``values`` holds the (below, above) slopes for the R0 wedge followed by one
    pair per gap.  On the cone over K the slope is y/x.
    """

    layout: FanLayout
    values: list[tuple[Number, Number]]
    interfaces: list[Interface]

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        reg = self.layout.region(x, y)
        m = np.full(reg.shape, self.layout.m0)
        lo = np.full(reg.shape, float(self.values[0][0]))
        hi = np.full(reg.shape, float(self.values[0][1]))
        for i, (_, gm, _) in enumerate(self.layout.gaps):
            sel = reg == i
            m[sel] = gm
            lo[sel] = float(self.values[i + 1][0])
            hi[sel] = float(self.values[i + 1][1])
        # ties on a nexus ray go to the larger slope
        off = y - m * x
        upper = (off > 0) | ((off == 0) & (hi >= lo))
        t = np.where(upper, hi, lo)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = y / x
        return np.where(reg == -2, ratio, t)

    def perturbed(self, index: int, side: str, amount: Number) -> TauField:
        """Copy with the slope on one side of interface ``index`` shifted."""
        vals = list(self.values)
        lo, hi = vals[index]
        if side == "above":
            hi = hi + amount
        else:
            lo = lo + amount
        vals[index] = (lo, hi)
        faces = list(self.interfaces)
        f = faces[index]
        faces[index] = Interface(f.name, f.slope, lo, hi, f.direction)
        return TauField(self.layout, vals, faces)


def tau_field(K: IntervalComplement) -> TauField:
    """Calibration slopes for the fan built from K, kept in K's arithmetic."""
    alpha = K.alpha
    layout = make_lambda_K(K, n_branch=1).layout
    values = [(-alpha, alpha)]
    faces = [Interface("R0", alpha * 0, -alpha, alpha, -1)]
    for i, (a, b) in enumerate(K.intervals):
        values.append((a, b))
        faces.append(Interface(f"R{i + 1}", (a + b) / 2, a, b, 1))
    return TauField(layout, values, faces)


def tau_K(K: IntervalComplement | TauField, p) -> np.ndarray:
    field = K if isinstance(K, TauField) else tau_field(K)
    return field(p)


def bar_M(K: IntervalComplement | TauField, p) -> np.ndarray:
    """The calibrating field as (X, Y) coefficient pairs."""
    t = tau_K(K, p)
    return np.stack([-t, 1.0 - 0.5 * t * t], axis=-1)


def jump_value(below: Number, slope: Number, above: Number) -> Number:
    """(tau_+ - tau_-)(sigma - (tau_+ + tau_-)/2), exact for Fractions."""
    return (above - below) * (slope - (above + below) / 2)


def jump_residual(K: IntervalComplement | TauField, h: float = 0.0) -> list[Diagnostic]:
    """Interface conditions of the field on every nexus ray."""
    field = K if isinstance(K, TauField) else tau_field(K)
    out = []
    for f in field.interfaces:
        out.append(Diagnostic("jump", f.point(), jump_value(f.below, f.slope, f.above), h))
    return out


def horizontal_divergence(V: Callable, p, h: float) -> np.ndarray:
    """X[v1] + Y[v2] by fourth-order central differences along the frame flows."""
    p = np.asarray(p, dtype=float)
    steps = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    dx = sum(w * V(exp_horizontal(p, 1.0, 0.0, k * h))[..., 0] for k, w in steps)
    dy = sum(w * V(exp_horizontal(p, 0.0, 1.0, k * h))[..., 1] for k, w in steps)
    return (dx + dy) / (12 * h)


def div_residual(K: IntervalComplement | TauField, p, h: float) -> np.ndarray:
    field = K if isinstance(K, TauField) else tau_field(K)
    return horizontal_divergence(lambda q: bar_M(field, q), p, h)


def piece_key(layout: FanLayout, pts) -> np.ndarray:
    """Wedge id and side of its nexus ray; tau is smooth on each key's set."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    reg = layout.region(x, y)
    m = np.where(reg == -1, layout.m0, 0.0)
    for i, (_, gm, _) in enumerate(layout.gaps):
        m = np.where(reg == i, gm, m)
    side = np.where(reg == -2, 0, np.sign(y - m * x))
    return reg * 3 + side


def stencil_is_smooth(field: TauField, pts, h: float, reach: int = 3) -> np.ndarray:
    """True where the points p exp(kh X), p exp(kh Y), |k| <= reach, share p's piece."""
    pts = np.asarray(pts, dtype=float)
    key = piece_key(field.layout, pts)
    ok = np.ones(key.shape, dtype=bool)
    for a, b in ((1.0, 0.0), (0.0, 1.0)):
        for k in range(-reach, reach + 1):
            ok &= piece_key(field.layout, exp_horizontal(pts, a, b, k * h)) == key
    return ok


def smooth_sample_points(field: TauField, rng: np.random.Generator, count: int, h: float,
                         box=((0.25, 2.0), (-1.5, 1.5), (-1.0, 1.0))) -> np.ndarray:
    """Uniform random points of a box whose divergence stencils avoid every interface."""
    found, total = [np.empty((0, 3))], 0
    while total < count:
        p = np.stack([rng.uniform(lo, hi, 4 * count) for lo, hi in box], axis=-1)
        p = p[stencil_is_smooth(field, p, h)]
        found.append(p)
        total += len(p)
    return np.concatenate(found)[:count]


def _face_flux(V, face_points, normal_axis, sign, dA, refine):
    """Flux through one face sampled at cell midpoints, refining near jumps.

    A cell is refined when its midpoint value and corner values spread far
    more than is typical on the face, which is how jumps show up.
    """
    vals = _normal_component(V, face_points(0.5, 0.5), normal_axis)
    corners = _normal_component(V, face_points(0.0, 0.0, corners=True), normal_axis)
    spread = np.zeros(vals.shape)
    for da in (0, 1):
        for db in (0, 1):
            c = corners[da:da + vals.shape[0], db:db + vals.shape[1]]
            spread = np.maximum(spread, np.abs(c - vals))
    flagged = spread > 2.5 * np.median(spread) + 1e-14
    total = vals.sum()
    if refine > 1 and flagged.any():
        idx = np.argwhere(flagged)
        sub = (np.arange(refine) + 0.5) / refine
        acc = np.zeros(len(idx))
        for su in sub:
            for sv in sub:
                acc += _normal_component(V, face_points(su, sv, idx=idx), normal_axis)
        total += np.sum(acc / refine**2 - vals[flagged])
    return sign * total * dA


def _normal_component(V, pts, axis):
    v = V(pts)
    v1, v2 = v[..., 0], v[..., 1]
    if axis == 0:
        return v1
    if axis == 1:
        return v2
    return 0.5 * (pts[..., 0] * v2 - pts[..., 1] * v1)


def flux_box(V: Callable, box, resolution: int = 64, refine: int = 16) -> float:
    """Euclidean flux of v1 X + v2 Y out of an axis-aligned box.

    ``box`` is ((x0, x1), (y0, y1), (z0, z1)).  Each face is split into
    resolution^2 cells evaluated at their midpoints; cells next to a jump of
    the integrand are re-evaluated on a refine^2 sub-grid.
    """
    lims = [tuple(map(float, b)) for b in box]
    n = int(resolution)
    total = 0.0
    for axis in range(3):
        others = [k for k in range(3) if k != axis]
        (a0, a1), (b0, b1) = lims[others[0]], lims[others[1]]
        ha, hb = (a1 - a0) / n, (b1 - b0) / n
        for sign, level in ((-1.0, lims[axis][0]), (1.0, lims[axis][1])):
            def face_points(su, sv, idx=None, corners=False, axis=axis, others=others,
                            level=level, a0=a0, b0=b0, ha=ha, hb=hb):
                m = n + 1 if corners else n
                if idx is None:
                    ia, ib = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
                else:
                    ia, ib = idx[:, 0], idx[:, 1]
                pts = np.empty(ia.shape + (3,))
                pts[..., axis] = level
                pts[..., others[0]] = a0 + (ia + su) * ha
                pts[..., others[1]] = b0 + (ib + sv) * hb
                return pts

            total += _face_flux(V, face_points, axis, sign, ha * hb, refine)
    return float(total)


def box_surface_area(box) -> float:
    (x0, x1), (y0, y1), (z0, z1) = box
    a, b, c = x1 - x0, y1 - y0, z1 - z0
    return 2 * (a * b + b * c + a * c)


def flux_graph(g: GraphGrid, V, region=None) -> float:
    """Integral over D of <V(Psi_f(v)), -grad_f f X + Y> with X, Y orthonormal.

    V is a callable on points or an array of (X, Y) coefficients at the nodes.
    """
    grad = intrinsic_gradient(g)
    vals = V(psi_f(g)) if callable(V) else np.asarray(V, dtype=float)
    return integrate(g, -grad * vals[..., 0] + vals[..., 1], region)
