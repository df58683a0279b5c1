"""First variation of the energy along contact flows, smooth and singular.

    python demos/variation.py
"""

import numpy as np

from heisgraph import (
    Bump,
    ContactPotential,
    ExprFunction,
    GraphGrid,
    Zero,
    herringbone_A2,
    make_broken_herringbone,
    make_parabola,
    near_sing_fit,
    variation_report,
)


def main() -> None:
    pot = ContactPotential(Bump(0.1, -0.1, 0.5, 0.6, 0.4), Bump(-0.1, 0.2, 0.6, 0.5, 0.3))

    g = GraphGrid.from_function(ExprFunction("0.3*sin(2*x) + 0.2*z + 0.1*x*z"), -1, 1, -1, 1, 129, 129)
    rep = variation_report(g, pot)
    print(f"smooth graph: analytic slope {rep.analytic_slope:.5f}, finite difference {rep.fd_slope:.5f}")
    print("  remainder / t^2:", np.round(rep.C_fit, 3))

    rep = variation_report(make_parabola(resolution=129), pot, ts=(1e-3,))
    print(f"parabola (critical): analytic {rep.analytic_slope:.1e}, finite difference {rep.fd_slope:.1e}")

    _, pg = make_broken_herringbone(-0.1, 0.3, resolution=129)
    w = Bump(0.5, 0.2, 0.3, 0.3, 0.1)
    split = herringbone_A2(pg, w)
    rep = variation_report(pg.grid, ContactPotential(w, Zero()), ts=(1e-3, 5e-4, 2.5e-4))
    print(f"broken herringbone: boundary term {split['boundary_term']:.3e}, "
          f"bulk {split['bulk_term']:.1e}, finite difference {rep.fd_slope:.3e}")
    for side in (1, -1):
        fit = near_sing_fit(pg, 0.5, np.logspace(-6, -2, 9), side)
        print(f"  side {side:+d}: f ~ nu^{fit['exponent']:.3f}, d_z f ~ nu^{fit['dz_exponent']:.3f}")


if __name__ == "__main__":
    main()
