"""Build the basic surfaces, print their energies and export meshes.

    python demos/surfaces.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from heisgraph import (
    energy,
    intrinsic_gradient,
    make_cantor,
    make_herringbone,
    make_lambda_K,
    make_parabola,
    make_plane,
    mesh_from_grid,
    mesh_from_rayfan,
    write_obj,
)


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)

    plane = make_plane(0.5)
    print(f"plane f = x/2: gradient {intrinsic_gradient(plane).mean():.3f}, energy {energy(plane):.4f}")

    parabola = make_parabola(resolution=129)
    grad = intrinsic_gradient(parabola)
    X, _ = parabola.mesh()
    print(f"parabola: max |grad_f f - 2x| = {np.max(np.abs(grad - 2 * X)):.2e}")

    for a in (0.5, 1.0, 2.0):
        g, _ = make_herringbone(a, resolution=65)
        print(f"herringbone a = {a}: energy {energy(g):.4f} (a^4/4 = {a**4 / 4:.4f})")
    g, _ = make_herringbone(1.0, resolution=33)
    write_obj(mesh_from_grid(g), out / "herringbone.obj")

    fan = make_lambda_K(make_cantor(2), n_branch=12, n_fan=6)
    mesh = mesh_from_rayfan(fan, samples=12)
    write_obj(mesh, out / "cantor_fan.obj")
    print(f"Cantor fan: {len(fan.rays)} rays, {mesh.n_faces} triangles -> {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out"))
