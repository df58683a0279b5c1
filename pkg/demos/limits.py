"""Stretched copies: area expansions and convergence of fans.

    python demos/limits.py
"""

from heisgraph import (
    Zero,
    indicator_L1_distance,
    make_cantor,
    make_herringbone,
    make_lambda_K,
    make_plane,
    make_sigma_K,
    rayfan_apply_stretch,
    scale_angles,
    stretch_energy_fit,
)


def main() -> None:
    for name, g in (("plane", make_plane(0.5)), ("herringbone", make_herringbone(1.0)[0])):
        fit = stretch_energy_fit(g)
        print(f"{name}: r^-3 coefficient {fit['beta']:.6f}, energy {fit['energy']:.6f}, "
              f"remainder order {fit['remainder_order']:.2f}")

    for eps in (0.4, 0.2, 0.1):
        d = indicator_L1_distance(make_sigma_K([-eps, 0.0, eps]), Zero())
        print(f"three half-planes at angle {eps}: distance to the xz-plane {d:.3f}")

    K = make_cantor(2)
    target = make_lambda_K(K)
    for n in (2, 4, 8):
        fan = rayfan_apply_stretch(make_sigma_K(scale_angles(K, 1 / n**2)), 1 / n, n)
        print(f"n = {n}: distance to the Cantor fan {indicator_L1_distance(fan, target):.2e}")


if __name__ == "__main__":
    main()
