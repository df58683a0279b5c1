"""Group law, frames, projections and automorphisms of the first Heisenberg group.

Points are numpy arrays whose last axis has length 3 and holds (x, y, z).
Every function here broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

ArrayLike = np.ndarray | list | tuple


def point(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def _split(p: ArrayLike):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def mul(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Group product p . q."""
    x, y, z = _split(p)
    u, v, w = _split(q)
    return np.stack([x + u, y + v, z + w + 0.5 * (x * v - y * u)], axis=-1)


def inverse(p: ArrayLike) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def frame(p: ArrayLike) -> np.ndarray:
    """Euclidean components of X, Y, Z at p, stacked along axis -2.

    X = (1, 0, -y/2), Y = (0, 1, x/2), Z = (0, 0, 1).
    """
    x, y, _ = _split(p)
    one, zero = np.ones_like(x), np.zeros_like(x)
    X = np.stack([one, zero, -0.5 * y], axis=-1)
    Y = np.stack([zero, one, 0.5 * x], axis=-1)
    Z = np.stack([zero, zero, one], axis=-1)
    return np.stack([X, Y, Z], axis=-2)


def horizontal_vector(p: ArrayLike, a, b) -> np.ndarray:
    """Euclidean components of aX + bY at p."""
    x, y, _ = _split(p)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(np.broadcast_arrays(a, b, 0.5 * (b * x - a * y)), axis=-1)


def horizontal_components(p: ArrayLike, v: ArrayLike) -> np.ndarray:
    """Coefficients (a, b) of the horizontal part of a Euclidean vector v at p."""
    v = np.asarray(v, dtype=float)
    return v[..., :2]


def proj_pi(p: ArrayLike) -> np.ndarray:
    """Projection to the xy-plane."""
    return np.asarray(p, dtype=float)[..., :2]


def proj_Pi(p: ArrayLike) -> np.ndarray:
    """Projection along Y-cosets to the plane y = 0, returned as (x, z).

    The full point is (x, 0, z - xy/2); use ``v0_point`` to lift back.
    """
    x, y, z = _split(p)
    return np.stack([x, z - 0.5 * x * y], axis=-1)


def v0_point(xz: ArrayLike) -> np.ndarray:
    """Embed (x, z) coordinates as the point (x, 0, z)."""
    xz = np.asarray(xz, dtype=float)
    return np.stack([xz[..., 0], np.zeros_like(xz[..., 0]), xz[..., 1]], axis=-1)


def exp_horizontal(p: ArrayLike, a, b, t) -> np.ndarray:
    """p . (aX + bY)^t, the horizontal line through p."""
    t = np.asarray(t, dtype=float)
    step = np.stack(np.broadcast_arrays(a * t, b * t, 0.0 * t), axis=-1)
    return mul(p, step)


def ballbox_norm(p: ArrayLike) -> np.ndarray:
    x, y, z = _split(p)
    return np.maximum(np.maximum(np.abs(x), np.abs(y)), np.sqrt(np.abs(z)))


def ballbox_dist(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Left-invariant ball-box quasi-distance d(p, q) = N(p^-1 q)."""
    return ballbox_norm(mul(inverse(p), q))


@dataclass(frozen=True)
class LipschitzCone:
    """The open cone {|y| > max(4c|x|, sqrt(32c|z|))}."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("cone constant must be positive")

    def contains(self, p: ArrayLike) -> np.ndarray:
        x, y, z = _split(p)
        bound = np.maximum(4 * self.c * np.abs(x), np.sqrt(32 * self.c * np.abs(z)))
        return np.abs(y) > bound


def cone_contains(cone: LipschitzCone, p: ArrayLike) -> np.ndarray:
    return cone.contains(p)


AutoKind = Literal["stretch", "shear", "translate"]


@dataclass(frozen=True)
class GraphAutomorphism:
    """Automorphism of the group that preserves the family of intrinsic graphs.

    ``stretch`` uses params (a, b) and sends (x, y, z) to (ax, by, abz).
    ``shear`` uses params (b,) and sends (x, y, z) to (x, y + bx, z).
    ``translate`` uses params (hx, hy, hz) and is left multiplication by h.
    """

    kind: AutoKind
    params: tuple[float, ...]

    def __post_init__(self):
        sizes = {"stretch": 2, "shear": 1, "translate": 3}
        if self.kind not in sizes:
            raise ValueError(f"unknown automorphism kind {self.kind!r}")
        if len(self.params) != sizes[self.kind]:
            raise ValueError(f"{self.kind} takes {sizes[self.kind]} parameters")
        if self.kind == "stretch" and not (self.params[0] > 0 and self.params[1] > 0):
            raise ValueError("stretch factors must be positive")

    @classmethod
    def stretch(cls, a: float, b: float) -> GraphAutomorphism:
        return cls("stretch", (float(a), float(b)))

    @classmethod
    def shear(cls, b: float) -> GraphAutomorphism:
        return cls("shear", (float(b),))

    @classmethod
    def translate(cls, h: ArrayLike) -> GraphAutomorphism:
        return cls("translate", tuple(float(c) for c in h))

    def apply(self, p: ArrayLike) -> np.ndarray:
        x, y, z = _split(p)
        if self.kind == "stretch":
            a, b = self.params
            return np.stack([a * x, b * y, a * b * z], axis=-1)
        if self.kind == "shear":
            (b,) = self.params
            return np.stack([x, y + b * x, z], axis=-1)
        return mul(np.array(self.params), p)

    def induced_v0_map(self, xz: ArrayLike) -> np.ndarray:
        """The map v -> Pi(q(v)) on the plane y = 0, in (x, z) coordinates."""
        return proj_Pi(self.apply(v0_point(xz)))

    def inverse_v0_map(self, xz: ArrayLike) -> np.ndarray:
        xz = np.asarray(xz, dtype=float)
        x, z = xz[..., 0], xz[..., 1]
        if self.kind == "stretch":
            a, b = self.params
            return np.stack([x / a, z / (a * b)], axis=-1)
        if self.kind == "shear":
            (b,) = self.params
            return np.stack([x, z + 0.5 * b * x**2], axis=-1)
        hx, hy, hz = self.params
        u = x - hx
        return np.stack([u, z - hz + 0.5 * hy * u + 0.5 * x * hy], axis=-1)

    def transform_values(self, xz: ArrayLike, f_values) -> np.ndarray:
        """Graph value of the image surface at q(v), given f(v)."""
        xz = np.asarray(xz, dtype=float)
        f_values = np.asarray(f_values, dtype=float)
        if self.kind == "stretch":
            return self.params[1] * f_values
        if self.kind == "shear":
            return f_values + self.params[0] * xz[..., 0]
        return f_values + self.params[1]

    def gradient_law(self, grad) -> np.ndarray:
        """Intrinsic gradient of the image graph at q(v) from the one at v."""
        grad = np.asarray(grad, dtype=float)
        if self.kind == "stretch":
            a, b = self.params
            return grad * (b / a)
        if self.kind == "shear":
            return grad + self.params[0]
        return grad.copy()

    def energy_factor(self) -> float:
        """Ratio of image energy to original energy, for stretches only.

        Gradients scale by b/a and the induced map (x, z) -> (ax, abz) of
        the plane y = 0 has Jacobian a^2 b, so the energy scales by b^3.
        This agrees with b^2/a exactly when ab = 1.
        """
        if self.kind != "stretch":
            raise ValueError("only stretches scale the energy by a constant")
        b = self.params[1]
        return b**3


def apply_auto(q: GraphAutomorphism, p: ArrayLike) -> np.ndarray:
    return q.apply(p)


def induced_v0_map(q: GraphAutomorphism, xz: ArrayLike) -> np.ndarray:
    return q.induced_v0_map(xz)
