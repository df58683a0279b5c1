"""Check the slope field that calibrates a Cantor fan, and break it on purpose.

    python demos/calibration.py
"""

from fractions import Fraction

import numpy as np

from heisgraph import (
    bar_M,
    box_surface_area,
    div_residual,
    flux_box,
    jump_residual,
    make_cantor,
    smooth_sample_points,
    tau_field,
)


def report(field, label: str) -> None:
    jumps = [d.value for d in jump_residual(field)]
    pts = smooth_sample_points(field, np.random.default_rng(0), 50, 1e-3)
    div = np.max(np.abs(div_residual(field, pts, 1e-3)))
    box = ((0.3, 0.7), (-0.2, 0.2), (-0.2, 0.2))
    flux = flux_box(lambda p: bar_M(field, p), box, 32, 16)
    scale = box_surface_area(box) * 0.4 / 32
    print(f"{label}: jumps {[str(j) for j in jumps]}, max div {div:.1e}, "
          f"box flux {flux:+.2e} ({abs(flux) / scale:.3f} of area x h)")


def main() -> None:
    K = make_cantor(2)
    print("removed intervals:", [(str(a), str(b)) for a, b in K.intervals])
    field = tau_field(K)
    report(field, "Cantor depth 2")
    # raising one slope above the middle nexus breaks the equal-slope condition
    report(tau_field(make_cantor(1)).perturbed(1, "above", Fraction(1, 20)), "perturbed")


if __name__ == "__main__":
    main()
