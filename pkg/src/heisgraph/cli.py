"""Command-line runs driven by JSON configs.

    heisgraph <command> --config run.json --out results/ [--seed N] [--tol T]
                        [--resolution N]

Commands: construct, analyze, calibrate, vary, limits.  Each writes files
into the output directory and a JSON report that embeds the SHA-256 of the
canonical config, the seed and the tolerances used.  Exit status is 0 when
every check passes, 1 when a residual exceeds its tolerance and 2 for usage,
config or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import calibration as cal
from . import graph_calculus as gc
from . import mesh_io
from . import surface_zoo as zoo
from . import variation as var
from .expressions import Bump, Constant, ExprFunction, Zero

COMMANDS = ("construct", "analyze", "calibrate", "vary", "limits")

DEFAULT_TOLERANCES = {
    "harmonic": 1e-6,
    "divergence": 1e-6,
    "jump": 0.0,
    "flux": 0.05,
    "slope": 1e-3,
    "energy": 0.02,
}

DEFAULT_DOMAINS = {
    "plane": (0.0, 1.0, 0.0, 1.0),
    "parabola": (-1.0, 1.0, -1.0, 1.0),
    "herringbone": (0.0, 1.0, -1.0, 1.0),
    "broken_herringbone": (0.0, 1.0, -1.0, 1.0),
    "expression": (-1.0, 1.0, -1.0, 1.0),
    "cantor_fan": (0.05, 1.0, -0.5, 0.5),
    "sigma_fan": (0.05, 1.0, -0.5, 0.5),
    "flex": (0.0, 1.0, -0.4, 0.4),
}


class ConfigError(Exception):
    """Invalid config or unreadable input; maps to exit status 2."""


def load_schema() -> dict:
    text = resources.files("heisgraph").joinpath("config.schema.json").read_text()
    return json.loads(text)


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _clean(value):
    """Plain JSON types, with non-finite floats written as null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating, Fraction)):
        v = float(value)
        return v if np.isfinite(v) else None
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    return value


# -- surfaces --------------------------------------------------------------------

@dataclass
class Surface:
    kind: str
    grid: gc.GraphGrid
    piecewise: gc.PiecewiseGraph | None = None
    fan: zoo.RayFan | None = None
    K: zoo.IntervalComplement | None = None


def _exact(v) -> Fraction:
    return Fraction(str(v))


def _cantor(spec: dict) -> zoo.IntervalComplement:
    alpha = _exact(spec.get("alpha", 1))
    if "intervals" in spec:
        try:
            return zoo.IntervalComplement(alpha, tuple((_exact(a), _exact(b))
                                                       for a, b in spec["intervals"]))
        except ValueError as exc:
            raise ConfigError(f"bad intervals: {exc}") from None
    return zoo.make_cantor(int(spec.get("depth", 2)), alpha)


def build_surface(config: dict) -> Surface:
    spec = config.get("surface")
    if spec is None:
        raise ConfigError("config needs a 'surface'")
    kind = spec["kind"]
    res = int(config.get("resolution", 65))
    if kind == "grid_file":
        try:
            g = gc.GraphGrid.from_json(Path(spec["path"]).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read grid file: {exc}") from None
        return Surface(kind, g)
    domain = tuple(float(v) for v in config.get("domain", DEFAULT_DOMAINS[kind]))
    if not (domain[1] > domain[0] and domain[3] > domain[2]):
        raise ConfigError("domain must satisfy x0 < x1 and z0 < z1")
    try:
        if kind == "plane":
            return Surface(kind, zoo.make_plane(spec.get("m", 0.0), spec.get("c", 0.0), domain, res))
        if kind == "parabola":
            return Surface(kind, zoo.make_parabola(domain, res))
        if kind == "herringbone":
            g, pg = zoo.make_herringbone(spec.get("a", 1.0), domain, res)
            return Surface(kind, g, pg)
        if kind == "broken_herringbone":
            g, pg = zoo.make_broken_herringbone(spec["upper"], spec["lower"], domain, res)
            return Surface(kind, g, pg)
        if kind == "expression":
            f = ExprFunction(spec["f"])
            return Surface(kind, gc.GraphGrid.from_function(f, *domain, res, res))
        if kind == "cantor_fan":
            K = _cantor(spec)
            fan = zoo.make_lambda_K(K, n_branch=spec.get("n_branch", 16), n_fan=spec.get("n_fan", 8))
            return Surface(kind, zoo.rayfan_to_graph(fan, domain, res), fan=fan, K=K)
        if kind == "sigma_fan":
            fan = zoo.make_sigma_K(spec["angles"], n_branch=spec.get("n_branch", 16))
            return Surface(kind, zoo.rayfan_to_graph(fan, domain, res), fan=fan)
        if kind == "flex":
            fs = zoo.FlexSurface(tuple(spec.get("directrix", (0.0,))), tuple(spec.get("spread", (0.5,))),
                                 tuple(spec.get("s_range", (-1.0, 1.0))), spec.get("extent", 1.0))
            _, g, pg = zoo.make_flex(fs, domain, res)
            return Surface(kind, g, pg)
    except ValueError as exc:
        raise ConfigError(f"cannot build surface: {exc}") from None
    raise ConfigError(f"unknown surface kind {kind!r}")


def _plane_function(spec):
    if spec is None:
        return Zero()
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, str):
        try:
            return ExprFunction(spec)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    b = spec["bump"]
    return Bump(b["cx"], b["cz"], b["rx"], b["rz"], b.get("amplitude", 1.0))


def build_potential(config: dict, g: gc.GraphGrid) -> var.ContactPotential:
    spec = config.get("potential")
    if spec is None:
        raise ConfigError("config needs a 'potential'")
    u0, u1 = _plane_function(spec.get("u0")), _plane_function(spec.get("u1"))
    for u in (u0, u1):
        if isinstance(u, Bump):
            a, b, c, d = u.support
            if not (a > g.x0 and b < g.x1 and c > g.z0 and d < g.z1):
                raise ConfigError("potential support is not compact in the domain")
    return var.ContactPotential(u0, u1)


# -- commands --------------------------------------------------------------------

@dataclass
class Run:
    config: dict
    out: Path
    seed: int
    tol: dict

    def write_json(self, name: str, data: dict) -> None:
        mesh_io.write_json(_clean(data), self.out / name)

    def report(self, name: str, body: dict, checks: dict[str, bool]) -> int:
        passed = all(checks.values())
        data = {"command": name, "config_sha256": config_hash(self.config), "seed": self.seed,
                "tolerances": self.tol, "checks": checks, "passed": passed, **body}
        self.write_json(f"{name}_report.json", data)
        return 0 if passed else 1


def cmd_construct(run: Run) -> int:
    s = build_surface(run.config)
    outputs = run.config.get("outputs", {})
    files = []
    if s.fan is not None:
        run.write_json("fan.json", s.fan.to_json())
        files.append("fan.json")
        mesh = mesh_io.mesh_from_rayfan(s.fan, outputs.get("samples_per_ray", 16))
    else:
        mesh = mesh_io.mesh_from_grid(s.grid)
    run.write_json("grid.json", s.grid.to_json())
    files.append("grid.json")
    if outputs.get("obj", True):
        mesh_io.write_obj(mesh, run.out / "surface.obj")
        files.append("surface.obj")
    plane = outputs.get("cross_section")
    if plane is not None:
        target = s.fan if (s.fan is not None and "x" in plane) else s.grid
        mesh_io.write_cross_section(target, plane, run.out / "cross_section.csv")
        files.append("cross_section.csv")
    body = {"surface": s.kind, "files": files, "vertices": len(mesh.vertices),
            "triangles": mesh.n_faces}
    return run.report("construct", body, {})


def _lipschitz_sample(g: gc.GraphGrid, count: int = 24) -> np.ndarray:
    si = np.unique(np.linspace(0, g.nx - 1, min(count, g.nx)).round().astype(int))
    sj = np.unique(np.linspace(0, g.nz - 1, min(count, g.nz)).round().astype(int))
    pts = gc.psi_f(g)[np.ix_(si, sj)].reshape(-1, 3)
    return pts[np.all(np.isfinite(pts), axis=1)]


def cmd_analyze(run: Run) -> int:
    s = build_surface(run.config)
    g = s.grid
    resid = np.abs(var.harmonic_residual(g))
    finite = resid[np.isfinite(resid)]
    rmax = float(finite.max()) if finite.size else 0.0
    c = float(run.config.get("lipschitz_constant", 1.0))
    lip = gc.lipschitz_check(_lipschitz_sample(g), c)
    body = {"surface": s.kind, "h": max(g.hx, g.hz), "energy": gc.energy(g), "area": gc.area(g),
            "domain_measure": gc.domain_measure(g), "harmonic_residual_max": rmax,
            "lipschitz_constant": c, "lipschitz_check": lip}
    checks = {"harmonic": rmax <= run.tol["harmonic"], "lipschitz": lip}
    return run.report("analyze", body, checks)


def cmd_calibrate(run: Run) -> int:
    s = build_surface(run.config)
    if s.K is None:
        raise ConfigError("calibrate needs a 'cantor_fan' surface")
    opts = run.config.get("calibration", {})
    field = cal.tau_field(s.K)
    if "perturb" in opts:
        p = opts["perturb"]
        if p["interface"] >= len(field.interfaces):
            raise ConfigError("perturb.interface is out of range")
        field = field.perturbed(p["interface"], p["side"], _exact(p["amount"]))
    rng = np.random.default_rng(run.seed)
    h = float(opts.get("h", 1e-3))

    jumps = cal.jump_residual(field, h)
    jump_max = max((abs(d.value) for d in jumps), default=Fraction(0))

    pts = cal.smooth_sample_points(field, rng, int(opts.get("points", 32)), h)
    div = np.abs(cal.div_residual(field, pts, h)) if len(pts) else np.zeros(0)
    div_diags = [cal.Diagnostic("divergence", list(p), float(v), h) for p, v in zip(pts, div)]

    V = lambda q: cal.bar_M(field, q)  # noqa: E731
    boxes = []
    res = 32
    for _ in range(int(opts.get("boxes", 8))):
        face = field.interfaces[int(rng.integers(len(field.interfaces)))]
        centre = np.asarray(face.point(rng.uniform(0.2, 1.0)))
        centre[2] = rng.uniform(-0.2, 0.2)
        side = rng.uniform(0.1, 0.6)
        box = [(c - side / 2, c + side / 2) for c in centre]
        flux = cal.flux_box(V, box, res, 16)
        ratio = abs(flux) / (cal.box_surface_area(box) * side / res)
        boxes.append({"box": box, "flux": flux, "ratio": ratio})
    ratio_max = max((b["ratio"] for b in boxes), default=0.0)

    g = s.grid
    mu, E = gc.domain_measure(g), gc.energy(g)
    flux_g = cal.flux_graph(g, V)
    identity_err = abs(flux_g - (mu + E)) / (mu + E)

    body = {"interfaces": len(field.interfaces),
            "jump_residuals": [d.to_json() | {"exact": str(d.value)} for d in jumps],
            "div_residuals": [d.to_json() for d in div_diags],
            "box_fluxes": boxes,
            "flux_energy_identity": {"flux": flux_g, "domain_measure": mu, "energy": E,
                                     "relative_error": identity_err}}
    checks = {"jump": abs(jump_max) <= run.tol["jump"],
              "divergence": bool(div.size == 0 or div.max() <= run.tol["divergence"]),
              "flux": ratio_max <= run.tol["flux"],
              "flux_energy_identity": identity_err <= run.tol["energy"]}
    return run.report("calibrate", body, checks)


def cmd_vary(run: Run) -> int:
    s = build_surface(run.config)
    g = s.grid
    pot = build_potential(run.config, g)
    ts = run.config.get("ts", [1e-2, 5e-3, 2.5e-3])
    rep = var.variation_report(g, pot, ts)
    body = {"surface": s.kind, "report": rep.to_json()}
    expected = rep.analytic_slope
    if s.piecewise is not None:
        # on a piecewise graph the smooth formula misses the singular curve;
        # the split into bulk and boundary terms is the slope to compare with
        pg = s.piecewise

        def w2(x, z):
            return pot.u0(x, z) + pg.evaluate(x, z) * pot.u1(x, z)
        split = var.herringbone_A2(pg, w2)
        expected = var.A1(g, pot.w1(g)) + split["total"]
        body["singular_split"] = split
        body["singular_slope"] = expected
    gap = abs(expected - rep.fd_slope)
    checks = {"slope": gap <= run.tol["slope"] * max(1.0, abs(rep.fd_slope))}
    return run.report("vary", body, checks)


def cmd_limits(run: Run) -> int:
    opts = run.config.get("limits", {})
    body: dict = {}
    checks: dict[str, bool] = {}
    if "surface" in run.config:
        s = build_surface(run.config)
        fit = var.stretch_energy_fit(s.grid, opts.get("rs", [2, 4, 8, 16]))
        body["stretch_energy_fit"] = fit
        rel = abs(fit["beta"] - fit["energy"]) / max(abs(fit["energy"]), 1e-300)
        checks["stretch_energy"] = fit["energy"] == 0 and abs(fit["beta"]) < 1e-9 or \
            rel <= run.tol["energy"]
    voxels = int(opts.get("voxels", 64))
    plane = Zero()
    eps = opts.get("epsilons", [0.4, 0.2, 0.1])
    dists = [var.indicator_L1_distance(zoo.make_sigma_K([-e, 0.0, e]), plane, voxels=voxels)
             for e in eps]
    ns = opts.get("ns", [2, 4, 8])
    K = zoo.make_cantor(int(opts.get("cantor_depth", 2)))
    lam = zoo.make_lambda_K(K)
    stretched = []
    for n in ns:
        fan = zoo.make_sigma_K(zoo.scale_angles(K, 1.0 / n**2))
        stretched.append(var.indicator_L1_distance(zoo.rayfan_apply_stretch(fan, 1.0 / n, n),
                                                   lam, voxels=voxels))
    body["indicator_distances"] = {
        "plane": [{"epsilon": e, "distance": d} for e, d in zip(eps, dists)],
        "cantor": [{"n": n, "distance": d} for n, d in zip(ns, stretched)],
        "voxels": voxels}
    checks["plane_decreasing"] = bool(np.all(np.diff(dists) < 0))
    checks["cantor_decreasing"] = _decreasing_to_zero(stretched)
    return run.report("limits", body, checks)


def _decreasing_to_zero(values) -> bool:
    """Strictly decreasing until the first exact zero, which then persists.

    Once two sets agree on every voxel centre the distance cannot drop further.
    """
    values = list(values)
    if 0.0 in values:
        k = values.index(0.0)
        if any(v != 0.0 for v in values[k:]):
            return False
        values = values[:k + 1]
    return bool(np.all(np.diff(values) < 0))


HANDLERS = {"construct": cmd_construct, "analyze": cmd_analyze, "calibrate": cmd_calibrate,
            "vary": cmd_vary, "limits": cmd_limits}


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heisgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__doc__ or name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized samples (default 0)")
        p.add_argument("--tol", type=float, help="override every tolerance")
        p.add_argument("--resolution", type=int, help="override the grid resolution")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        try:
            config = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        if args.resolution is not None:
            config["resolution"] = args.resolution
        if args.seed is not None:
            config["seed"] = args.seed
        validate_config(config)
        if config.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {config['command']!r}, not {args.command!r}")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(config.get("tolerances", {}))
        if args.tol is not None:
            tol = {k: args.tol for k in tol}
        run = Run(config, Path(args.out), int(config.get("seed", 0)), tol)
        status = HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"heisgraph: {exc}", file=sys.stderr)
        return 2
    print(f"heisgraph {args.command}: {'pass' if status == 0 else 'FAIL'} -> {args.out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
