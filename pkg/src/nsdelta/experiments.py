"""Experiment presets, flat key=value configuration and output writers."""
from __future__ import annotations

import csv
import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nsdelta.adaptivity import AdaptiveRun, ProblemSpec, adapt, convergence_slope
from nsdelta.domains import CATALOG, catalog_shape
from nsdelta.mesh import Mesh, write_mesh
from nsdelta.quadrature import check_alpha
from nsdelta.solver import SolverConfig
from nsdelta.spaces import FAMILIES, HOMOGENEOUS, INFLOW, DiscreteField

OUTPUT_ENV = "NSDELTA_OUTPUT_DIR"

DEFAULT_ALPHAS = (0.25, 0.75, 1.0, 1.25, 1.5, 1.75)

OBSTACLE_POINTS = "1.011635,0.198805;1.011635,0.801195;5.354725,0.200869;5.264444,0.719518"

PRESETS = {
    "square-single-delta": {"domain": "unit_square", "z": "0.5,0.5", "force": "1,1",
                            "refinements": "15"},
    "lshape-single-delta": {"domain": "l_shape", "z": "0.5,0.5", "force": "1,1",
                            "refinements": "30"},
    "square-four-deltas": {"domain": "unit_square",
                           "z": "0.25,0.25;0.25,0.75;0.75,0.25;0.75,0.75",
                           "force": "1,1", "refinements": "30"},
    "channel": {"domain": "channel_4x1", "z": "0.5,0.5", "force": "10,10", "bc": "inflow",
                "refinements": "30"},
    "channel-obstacle": {"domain": "channel_10x1_obstacle", "z": OBSTACLE_POINTS,
                         "force": "10,10", "bc": "inflow", "refinements": "100"},
}

BOUNDARY_CONDITIONS = {"homogeneous": HOMOGENEOUS, "inflow": INFLOW}

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _points(text, what):
    try:
        pts = [tuple(float(t) for t in item.split(",")) for item in text.split(";") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what} {text!r}: {exc}") from None
    if not pts or any(len(p) != 2 for p in pts):
        raise ConfigError(f"{what} must be 'x,y' pairs separated by ';', got {text!r}")
    return [np.array(p) for p in pts]


@dataclass
class ExperimentConfig:
    name: str = "run"
    domain: str = "unit_square"
    z: str = "0.5,0.5"
    force: str = "1,1"
    alpha: float = 1.5
    refinements: int = 15
    element: str = "taylor_hood"
    tol: float = 1e-8
    max_picard_iters: int = 50
    mode: str = "auto"
    bc: str = "homogeneous"
    ndof_cap: int = 200_000
    time_limit: float = 0.0  # seconds; 0 disables the limit
    output_dir: str = "output"
    write_fields: bool = True
    write_meshes: bool = False
    write_indicators: bool = False
    window: int = 8

    def sources(self):
        Z = _points(self.z, "z")
        F = _points(self.force, "force")
        if len(F) == 1:
            F = F * len(Z)
        if len(F) != len(Z):
            raise ConfigError(f"{len(Z)} source points but {len(F)} forces")
        return list(zip(Z, F))

    def to_problem(self) -> ProblemSpec:
        if self.domain not in CATALOG:
            raise ConfigError(f"unknown domain {self.domain!r}; expected one of {CATALOG}")
        if self.element not in FAMILIES:
            raise ConfigError(f"unknown element {self.element!r}; expected one of {FAMILIES}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"unknown bc {self.bc!r}; expected one of {tuple(BOUNDARY_CONDITIONS)}")
        if self.mode not in ("auto", "single", "multi"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        try:
            check_alpha(self.alpha)
            solver = SolverConfig(self.tol, self.max_picard_iters)
            return ProblemSpec(catalog_shape(self.domain), self.sources(), self.alpha, self.element,
                               BOUNDARY_CONDITIONS[self.bc], solver, self.refinements,
                               None if self.mode == "auto" else self.mode, self.ndof_cap,
                               self.time_limit if self.time_limit > 0 else None)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def make_config(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string ``values`` to ``base`` (or the defaults), rejecting unknown keys.

    The key ``preset`` loads one of :data:`PRESETS` first.
    """
    values = dict(values)
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    preset = values.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {tuple(PRESETS)}")
        cfg = make_config(PRESETS[preset], cfg)
        cfg.name = preset
    for key, raw in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        kind = _FIELDS[key].type
        raw = str(raw).strip()
        try:
            if kind == "bool":
                if raw.lower() not in _BOOL:
                    raise ValueError(f"not a boolean: {raw!r}")
                val = _BOOL[raw.lower()]
            elif kind == "int":
                val = int(raw)
            elif kind == "float":
                val = float(raw)
            else:
                val = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        setattr(cfg, key, val)
    return cfg


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_config_text(text)
    values.update(overrides or {})
    return make_config(values)


def output_root(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)


# -- writers ---------------------------------------------------------------

def visualization_mesh(mesh: Mesh):
    """Vertices plus edge midpoints, four sub-triangles per cell."""
    nv = mesh.n_vertices
    pts = np.vstack([mesh.vertices, mesh.vertices[mesh.edges].mean(axis=1)])
    v = mesh.cells
    m = nv + mesh.cell_edges  # m[:, k] is the midpoint opposite vertex k
    sub = np.stack([
        np.stack([v[:, 0], m[:, 2], m[:, 1]], 1),
        np.stack([v[:, 1], m[:, 0], m[:, 2]], 1),
        np.stack([v[:, 2], m[:, 1], m[:, 0]], 1),
        np.stack([m[:, 0], m[:, 1], m[:, 2]], 1),
    ], axis=1).reshape(-1, 3)
    return pts, sub


def _point_values(u: DiscreteField, p: DiscreteField):
    space = u.space
    mesh = space.mesh
    nv = mesh.n_vertices
    ends = mesh.edges
    U = u.coefficients.reshape(2, space.n_scalar).T
    if space.family == "taylor_hood":
        vel = U.copy()
    else:
        # bubbles vanish on edges, so midpoint values are vertex averages
        vel = np.vstack([U[:nv], U[ends].mean(axis=1)])
    pr = np.concatenate([p.coefficients, p.coefficients[ends].mean(axis=1)])
    return vel, pr


def export_fields(fields, mesh: Mesh, path, indicator=None) -> None:
    """Write velocity, speed, pressure and an optional per-cell indicator as legacy VTK.

    The output lives on the once-subdivided mesh (vertices and edge
    midpoints), so quadratic velocities keep their nodal values.
    """
    u, p = fields
    if u.space.mesh is not mesh or p.space.mesh is not mesh:
        raise ValueError("fields are not defined on this mesh")
    pts, sub = visualization_mesh(mesh)
    vel, pr = _point_values(u, p)
    speed = np.linalg.norm(vel, axis=1)
    n, nc = len(pts), len(sub)
    lines = ["# vtk DataFile Version 3.0", "nsdelta velocity and pressure", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in pts.tolist()]
    lines.append(f"CELLS {nc} {4 * nc}")
    lines += [f"3 {a} {b} {c}" for a, b, c in sub.tolist()]
    lines.append(f"CELL_TYPES {nc}")
    lines += ["5"] * nc
    lines += [f"POINT_DATA {n}", "FIELD point_fields 3", f"velocity 2 {n} double"]
    lines += [f"{a!r} {b!r}" for a, b in vel.tolist()]
    lines.append(f"speed 1 {n} double")
    lines += [repr(s) for s in speed.tolist()]
    lines.append(f"pressure 1 {n} double")
    lines += [repr(s) for s in pr.tolist()]
    if indicator is not None:
        ind = np.repeat(np.asarray(indicator, float).reshape(mesh.n_cells), 4)
        lines += [f"CELL_DATA {nc}", "FIELD cell_fields 1", f"indicator 1 {nc} double"]
        lines += [repr(s) for s in ind.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


# -- runs --------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    run: AdaptiveRun
    directory: Path
    slope: float | None

    @property
    def ok(self) -> bool:
        return self.run.status in ("completed", "zero_indicators", "ndof_cap", "time_limit")


def summary_slope(run: AdaptiveRun, window: int = 8):
    n = len(run.iterations)
    if n < 3:
        return None
    return convergence_slope(run, min(window, n - 1))


def run_experiment(cfg: ExperimentConfig, quiet: bool = False) -> ExperimentResult:
    """Run one adaptive experiment and write its outputs.

    Writes ``run_log.csv``, the final ``mesh.txt`` and ``fields.vtk`` and,
    if enabled, per-iteration meshes and indicator tables into
    ``<output>/<name>/``. Partial outputs are kept when the run halts.
    """
    problem = cfg.to_problem()
    out = output_root(cfg) / cfg.name
    out.mkdir(parents=True, exist_ok=True)

    def callback(it, space, fields, report):
        if cfg.write_indicators:
            report.to_csv(out / f"indicators_{it:03d}.csv")
        if cfg.write_meshes:
            write_mesh(space.mesh, out / f"mesh_{it:03d}.txt")

    run = adapt(problem, callback=callback)
    run.write_log(out / "run_log.csv")
    if run.space is not None:
        write_mesh(run.mesh, out / "mesh.txt")
        if cfg.write_fields:
            export_fields(run.fields, run.mesh, out / "fields.vtk", run.report.indicators)
    slope = summary_slope(run, cfg.window)
    if not quiet:
        last = run.iterations[-1] if run.iterations else None
        print(f"{cfg.name}: {run.status}; {len(run.iterations)} solves"
              + (f", final {last.n_cells} cells, Ndof {last.ndof}, estimator {last.estimator:.4e}" if last else ""))
        if slope is not None:
            print(f"{cfg.name}: estimator slope vs Ndof (last {min(cfg.window, len(run.iterations) - 1)}) = {slope:.3f}")
        if run.message:
            print(f"{cfg.name}: {run.message}")
    return ExperimentResult(cfg, run, out, slope)


def alpha_sweep(cfg: ExperimentConfig, alphas, quiet: bool = False):
    """One run per alpha and a combined ``sweep.csv`` (alpha, iter, ndof, estimator)."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigError("alpha list is empty")
    for a in alphas:
        try:
            check_alpha(a)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    results = []
    for a in alphas:
        sub = dataclasses.replace(cfg, alpha=a, name=f"{cfg.name}_alpha{a:g}")
        results.append(run_experiment(sub, quiet=quiet))
    path = output_root(cfg) / f"{cfg.name}_sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "iter", "ndof", "estimator"])
        for a, res in zip(alphas, results):
            for r in res.run.iterations:
                w.writerow([a, r.iteration, r.ndof, repr(r.estimator)])
    return results, path
