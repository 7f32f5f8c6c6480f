"""Scenario documents, scenario construction and run output.

Scenarios are TOML documents::

    [grid]      dims, points, side, boundary
    [time]      horizon, steps
    [model]     epsilon
    [initial]   shape = "gaussian" | "uniform" | "indicator" | "file", ...
    [terminal]  kind = "fixed" (plus shape keys) | "free"
    [running]   kind = "none" | "congestion" | "potential" | "nonlocal", cap
    [[obstacles]]  radius, waypoints, times
    [nonlocal]  kernel = "polar-gaussian" | "file", ...
    [solver]    max_sweeps, tolerance, ...
    [output]    format

Missing keys take the values in :data:`DEFAULTS`; the resolved document is
echoed into the run manifest.
"""

import copy
import hashlib
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ValidationError
from .functionals import (
    CongestionPlusPotential, CostSchedule, Congestion, FixedMarginal, Free, Nonlocal, Potential,
)
from .grid import OBSTACLE, GridSpec, TimeAxis
from .sinkhorn import SolverConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "grid": {"dims": 2, "points": 64, "side": 1.0, "boundary": "periodic"},
    "time": {"horizon": 1.0, "steps": 31},
    "model": {"epsilon": 1.0},
    "initial": {"shape": "gaussian", "center": None, "sigma": None},
    "terminal": {"kind": "free"},
    "running": {"kind": "none", "cap": None},
    "obstacles": [],
    "nonlocal": None,
    "solver": {
        "max_sweeps": 20000,
        "tolerance": 1e-8,
        "potential_tolerance": None,
        "fixed_point_tolerance": 1e-6,
        "stabilization": "auto",
        "outer_max_iters": 200,
        "damping": 1.0,
    },
    "output": {"format": "csv"},
}

#: Bump width as a fraction of the side length when ``sigma`` is omitted.
DEFAULT_SIGMA_FRACTION = 0.08

_SHAPE_KEYS = {"shape", "center", "sigma", "region", "radius", "lower", "upper", "path"}
_SECTION_KEYS = {
    "grid": set(DEFAULTS["grid"]),
    "time": set(DEFAULTS["time"]),
    "model": set(DEFAULTS["model"]),
    "initial": _SHAPE_KEYS,
    "terminal": _SHAPE_KEYS | {"kind"},
    "running": {"kind", "cap"},
    "solver": set(DEFAULTS["solver"]),
    "output": {"format"},
    "nonlocal": {"kernel", "amplitude", "radial_mean", "radial_sigma", "angular_sigma",
                 "direction_deg", "symmetric", "path"},
    "obstacles": {"radius", "waypoints", "times"},
}
_NONLOCAL_DEFAULTS = {"kernel": "polar-gaussian", "amplitude": 1.0, "radial_mean": 0.0,
                      "radial_sigma": 0.1, "angular_sigma": 0.5, "direction_deg": 45.0,
                      "symmetric": False}
FORMATS = ("csv", "pgm", "both")


@dataclass
class ScenarioConfig:
    """A fully resolved scenario document.

    ``document`` holds the resolved key-value tree (defaults filled in);
    ``base_dir`` resolves relative ``path`` entries.
    """

    document: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.document[key]

    @property
    def grid(self):
        return GridSpec(**self.document["grid"])

    @property
    def time_axis(self):
        return TimeAxis(**self.document["time"])

    @property
    def epsilon(self):
        return float(self.document["model"]["epsilon"])

    def solver_config(self):
        s = self.document["solver"]
        return SolverConfig(
            max_sweeps=int(s["max_sweeps"]),
            marginal_tolerance=float(s["tolerance"]),
            potential_tolerance=None if s["potential_tolerance"] is None else float(s["potential_tolerance"]),
            fixed_point_tolerance=float(s["fixed_point_tolerance"]),
            stabilization=s["stabilization"],
            outer_max_iters=int(s["outer_max_iters"]),
            damping=float(s["damping"]),
        )


def _check_keys(section, table, allowed):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ParseError(f"[{section}]: unknown key(s) {', '.join(unknown)}")


def _number(section, key, value, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"[{section}] {key}: expected a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ParseError(f"[{section}] {key}: expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ValidationError(f"[{section}] {key}: must be positive, got {value!r}")
    return int(value) if integer else float(value)


def parse_config(text, base_dir=None):
    """Parse a TOML scenario document and fill in defaults.

    Raises
    ------
    ParseError
        Malformed TOML (the message carries line and column), unknown keys or
        wrongly typed values.
    ValidationError
        Well-formed but inconsistent scenarios.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed scenario document: {exc}") from exc
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ParseError(f"unknown section(s) {', '.join(unknown)}")

    doc = copy.deepcopy(DEFAULTS)
    for section, value in raw.items():
        if section == "obstacles":
            if not isinstance(value, list):
                raise ParseError("obstacles: expected an array of tables ([[obstacles]])")
            for i, ob in enumerate(value):
                _check_keys(f"obstacles.{i}", ob, _SECTION_KEYS["obstacles"])
            doc["obstacles"] = [dict(ob) for ob in value]
            continue
        if not isinstance(value, dict):
            raise ParseError(f"{section}: expected a table")
        _check_keys(section, value, _SECTION_KEYS[section])
        if section == "nonlocal":
            doc["nonlocal"] = {**_NONLOCAL_DEFAULTS, **value}
        elif section in ("initial", "terminal"):
            doc[section] = {**({"kind": doc[section]["kind"]} if section == "terminal" else {}),
                            **value}
        else:
            doc[section].update(value)

    cfg = ScenarioConfig(doc, Path(base_dir) if base_dir is not None else Path.cwd())
    _validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def _validate(cfg):
    doc = cfg.document
    g = doc["grid"]
    for key in ("dims", "points"):
        g[key] = _number("grid", key, g[key], positive=True, integer=True)
    g["side"] = _number("grid", "side", g["side"], positive=True)
    t = doc["time"]
    t["horizon"] = _number("time", "horizon", t["horizon"], positive=True)
    t["steps"] = _number("time", "steps", t["steps"], positive=True, integer=True)
    doc["model"]["epsilon"] = _number("model", "epsilon", doc["model"]["epsilon"], positive=True)
    try:
        grid = cfg.grid
    except ValueError as exc:
        raise ValidationError(f"[grid]: {exc}") from exc

    _resolve_shape("initial", doc["initial"], grid)
    term = doc["terminal"]
    if term.get("kind") not in ("fixed", "free"):
        raise ValidationError(f"[terminal] kind: expected 'fixed' or 'free', got {term.get('kind')!r}")
    if term["kind"] == "fixed":
        _resolve_shape("terminal", term, grid)

    run = doc["running"]
    if run["kind"] not in ("none", "congestion", "potential", "nonlocal"):
        raise ValidationError(f"[running] kind: unknown cost {run['kind']!r}")
    if run["cap"] is not None:
        run["cap"] = _number("running", "cap", run["cap"], positive=True)
        if run["cap"] * grid.volume < 1.0:
            raise ValidationError(
                f"[running] cap: {run['cap']} times domain volume {grid.volume} is below 1")
    if run["kind"] == "congestion" and run["cap"] is None:
        raise ValidationError("[running] congestion needs a cap")
    if run["kind"] == "potential" and not doc["obstacles"]:
        raise ValidationError("[running] potential needs at least one [[obstacles]] entry")
    if run["kind"] == "nonlocal" and doc["nonlocal"] is None:
        raise ValidationError("[running] nonlocal needs a [nonlocal] table")
    if doc["obstacles"] and run["kind"] != "potential":
        raise ValidationError("[[obstacles]] require [running] kind = 'potential'")

    for i, ob in enumerate(doc["obstacles"]):
        sec = f"obstacles.{i}"
        if "radius" not in ob or "waypoints" not in ob:
            raise ParseError(f"[{sec}]: radius and waypoints are required")
        ob["radius"] = _number(sec, "radius", ob["radius"], positive=True)
        if 2 * ob["radius"] >= grid.side:
            raise ValidationError(f"[{sec}] radius {ob['radius']} does not fit in a domain of side {grid.side}")
        pts = np.asarray(ob["waypoints"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != grid.dims or len(pts) < 1:
            raise ValidationError(f"[{sec}] waypoints: expected a list of {grid.dims}-vectors")
        times = ob.get("times")
        if times is None:
            times = list(np.linspace(0.0, doc["time"]["horizon"], len(pts))) if len(pts) > 1 else [0.0]
        if len(times) != len(pts) or np.any(np.diff(times) <= 0):
            raise ValidationError(f"[{sec}] times: need one increasing time per waypoint")
        ob["times"] = [float(x) for x in times]
        ob["waypoints"] = pts.tolist()

    if doc["nonlocal"] is not None:
        nl = doc["nonlocal"]
        if nl["kernel"] == "polar-gaussian":
            if grid.dims != 2:
                raise ValidationError("[nonlocal] polar-gaussian kernels need dims = 2")
            for key in ("amplitude", "radial_mean", "direction_deg"):
                nl[key] = _number("nonlocal", key, nl[key])
            for key in ("radial_sigma", "angular_sigma"):
                nl[key] = _number("nonlocal", key, nl[key], positive=True)
        elif nl["kernel"] == "file":
            if "path" not in nl:
                raise ValidationError("[nonlocal] file kernels need a path")
        else:
            raise ValidationError(f"[nonlocal] kernel: unknown kind {nl['kernel']!r}")
        if not isinstance(nl["symmetric"], bool):
            raise ParseError("[nonlocal] symmetric: expected true or false")

    fmt = doc["output"]["format"]
    if fmt not in FORMATS:
        raise ValidationError(f"[output] format: expected one of {FORMATS}, got {fmt!r}")
    try:
        cfg.solver_config()
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"[solver]: {exc}") from exc


def _resolve_shape(section, spec, grid):
    shape = spec.get("shape", "gaussian")
    spec["shape"] = shape
    if shape == "gaussian":
        if spec.get("center") is None:
            spec["center"] = [0.5 * grid.side] * grid.dims
        if spec.get("sigma") is None:
            spec["sigma"] = DEFAULT_SIGMA_FRACTION * grid.side
        spec["sigma"] = _number(section, "sigma", spec["sigma"], positive=True)
    elif shape == "indicator":
        region = spec.setdefault("region", "disk")
        if region == "disk":
            if spec.get("center") is None:
                spec["center"] = [0.5 * grid.side] * grid.dims
            if "radius" not in spec:
                raise ValidationError(f"[{section}] indicator disk needs a radius")
            spec["radius"] = _number(section, "radius", spec["radius"], positive=True)
        elif region == "box":
            if "lower" not in spec or "upper" not in spec:
                raise ValidationError(f"[{section}] indicator box needs lower and upper corners")
        else:
            raise ValidationError(f"[{section}] region: expected 'disk' or 'box'")
    elif shape == "file":
        if "path" not in spec:
            raise ValidationError(f"[{section}] file densities need a path")
    elif shape != "uniform":
        raise ValidationError(f"[{section}] shape: unknown density {shape!r}")
    for key in ("center", "lower", "upper"):
        if spec.get(key) is not None:
            vec = np.asarray(spec[key], dtype=float)
            if vec.shape != (grid.dims,):
                raise ValidationError(f"[{section}] {key}: expected {grid.dims} coordinates")
            spec[key] = vec.tolist()
    for key in [k for k, v in spec.items() if v is None]:
        del spec[key]


# ---------------------------------------------------------------- construction

@dataclass
class Scenario:
    """Everything needed to run a solve, built from a :class:`ScenarioConfig`."""

    config: ScenarioConfig
    grid: GridSpec
    time_axis: TimeAxis
    epsilon: float
    schedule: CostSchedule
    initial: np.ndarray
    terminal: object
    potentials: list
    obstacle_centers: list
    interaction_kernel: object
    solver_config: SolverConfig


def density_from_spec(spec, grid, base_dir=Path(".")):
    """Rasterize a named density and normalize it to a probability field."""
    shape = spec["shape"]
    if shape == "uniform":
        f = np.ones(grid.shape)
    elif shape == "gaussian":
        r = grid.distance_to(spec["center"])
        f = np.exp(-(r**2) / (2.0 * spec["sigma"] ** 2))
    elif shape == "indicator" and spec["region"] == "disk":
        f = (grid.distance_to(spec["center"]) < spec["radius"]).astype(float)
    elif shape == "indicator":
        inside = np.ones(grid.shape, dtype=bool)
        for axis, x in enumerate(grid.mesh()):
            inside &= (x >= spec["lower"][axis]) & (x < spec["upper"][axis])
        f = inside.astype(float)
    else:
        f = read_frame(Path(base_dir) / spec["path"], grid)
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValidationError(f"{spec['path']}: densities must be finite and nonnegative")
    return _normalize(f, grid, spec)


def _normalize(f, grid, what):
    mass = grid.cell_volume * f.sum()
    if not mass > 0:
        raise ValidationError(f"density {what} has no mass on this grid")
    return f / mass


def obstacle_center(ob, t):
    """Centre of an obstacle at time ``t`` (piecewise-linear, clamped)."""
    pts = np.asarray(ob["waypoints"], dtype=float)
    return np.array([np.interp(t, ob["times"], pts[:, a]) for a in range(pts.shape[1])])


def obstacle_potential(obstacles, grid, t):
    """``OBSTACLE`` on cells whose centre lies strictly inside a disk, else 0."""
    V = np.zeros(grid.shape)
    centers = []
    for ob in obstacles:
        c = obstacle_center(ob, t)
        centers.append(c.tolist())
        V[grid.distance_to(c) < ob["radius"]] = OBSTACLE
    return V, centers


def displacement_grid(grid):
    """Signed per-axis displacement of each kernel index (wrapped)."""
    j = np.arange(grid.points)
    signed = np.where(j < grid.points - j, j, j - grid.points)
    return signed * grid.spacing


def polar_gaussian_kernel(grid, amplitude, radial_mean, radial_sigma, angular_sigma,
                          direction_deg, symmetric=False):
    """Gaussian in radius times Gaussian in direction, on the displacement grid.

    ``symmetric`` averages the kernel with its point reflection so that
    ``K(z) == K(-z)`` exactly.
    """
    z = displacement_grid(grid)
    zx, zy = np.meshgrid(z, z, indexing="ij")
    r = np.hypot(zx, zy)
    dtheta = np.arctan2(zy, zx) - math.radians(direction_deg)
    dtheta = (dtheta + np.pi) % (2 * np.pi) - np.pi
    dtheta[r == 0] = 0.0
    K = amplitude * np.exp(-((r - radial_mean) ** 2) / (2 * radial_sigma**2)) \
        * np.exp(-(dtheta**2) / (2 * angular_sigma**2))
    if symmetric:
        K = symmetrize(K)
    return K


def symmetrize(K):
    """``(K(z) + K(-z)) / 2`` with indices reflected modulo the grid size."""
    reflected = K
    for axis in range(K.ndim):
        m = K.shape[axis]
        reflected = np.take(reflected, (-np.arange(m)) % m, axis=axis)
    return 0.5 * (K + reflected)


def build_scenario(cfg):
    """Turn a resolved config into a cost schedule and its input fields."""
    doc = cfg.document
    grid, axis = cfg.grid, cfg.time_axis
    N, T = axis.steps, axis.horizon
    times = axis.times()
    run = doc["running"]
    cap = run["cap"]

    potentials, centers = [], []
    if doc["obstacles"]:
        for t in times:
            V, c = obstacle_potential(doc["obstacles"], grid, t)
            potentials.append(V)
            centers.append(c)

    def masked(f, k, what):
        if potentials:
            f = np.where(np.isinf(potentials[k]), 0.0, f)
            f = _normalize(f, grid, what)
        return f

    rho0 = masked(density_from_spec(doc["initial"], grid, cfg.base_dir), 0, "initial")
    rho1 = None
    if doc["terminal"]["kind"] == "fixed":
        rho1 = masked(density_from_spec(doc["terminal"], grid, cfg.base_dir), N, "terminal")

    kernel = None
    if run["kind"] == "nonlocal":
        nl = doc["nonlocal"]
        if nl["kernel"] == "file":
            kernel = read_frame(cfg.base_dir / nl["path"], grid)
            if nl["symmetric"]:
                kernel = symmetrize(kernel)
        else:
            kernel = polar_gaussian_kernel(
                grid, nl["amplitude"], nl["radial_mean"], nl["radial_sigma"],
                nl["angular_sigma"], nl["direction_deg"], nl["symmetric"])

    def local(k):
        if run["kind"] == "potential":
            return Potential(potentials[k]) if cap is None else CongestionPlusPotential(cap, potentials[k])
        return Free() if cap is None else Congestion(cap)

    costs = [FixedMarginal(rho0)]
    for k in range(1, N):
        costs.append(Nonlocal(kernel, doc["nonlocal"]["symmetric"], cap)
                     if run["kind"] == "nonlocal" else local(k))
    # a free terminal keeps the local part of the running cost (caps and
    # obstacles) but not the interaction term
    costs.append(FixedMarginal(rho1) if rho1 is not None else local(N))

    schedule = CostSchedule(costs).validate(grid)
    return Scenario(cfg, grid, axis, cfg.epsilon, schedule, rho0, rho1,
                    potentials, centers, kernel, cfg.solver_config())


# ---------------------------------------------------------------- output

def format_frame(values):
    """CSV text: one line per last-axis slice, shortest round-trip decimals."""
    arr = np.asarray(values, dtype=float)
    rows = arr.reshape(-1, arr.shape[-1]) if arr.ndim > 1 else arr.reshape(1, -1)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in rows)


def read_frame(path, grid):
    """Read a CSV frame written by :func:`write_frames` back into an array."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        values = [float(x) for line in text.splitlines() if line.strip() for x in line.split(",")]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(values) != grid.size:
        raise ParseError(f"{path}: {len(values)} values for a grid of {grid.size} cells")
    return np.asarray(values).reshape(grid.shape)


def graymap_bytes(values, scale):
    """Binary 16-bit PGM (P5); ``scale`` maps to 65535."""
    arr = np.asarray(values, dtype=float)
    rows = arr.reshape(-1, arr.shape[-1]) if arr.ndim > 1 else arr.reshape(1, -1)
    levels = np.zeros(rows.shape) if scale <= 0 else np.clip(np.rint(rows / scale * 65535.0), 0, 65535)
    header = f"P5\n{rows.shape[1]} {rows.shape[0]}\n65535\n".encode("ascii")
    return header + levels.astype(">u2").tobytes()


def read_graymap(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ParseError(f"{path}: not a binary graymap")
    width, height = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(height, width)


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


@dataclass
class RunManifest:
    config: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    frames: list = field(default_factory=list)
    choices: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable({"config": self.config, "versions": self.versions, "residuals": self.residuals,
                          "metrics": self.metrics, "frames": self.frames, "choices": self.choices})

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def versions():
    from . import __version__
    return {"mfg_sinkhorn": __version__, "numpy": np.__version__,
            "python": platform.python_version()}


def write_frames(marginals, out_dir, format="csv", manifest=None):
    """Write one frame per time index plus ``manifest.json``.

    Frames are ``frame_0000.csv`` ... (and/or ``.pgm``).  Graymaps share one
    scale: the largest cell over all frames maps to 65535.

    Returns
    -------
    RunManifest
        ``manifest`` (or a fresh one) with its frame index filled in.
    """
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest() if manifest is None else manifest
    manifest.frames = []
    scale = max(float(np.max(m)) for m in marginals) if marginals else 0.0
    for k, mu in enumerate(marginals):
        entry = {"index": k}
        if format in ("csv", "both"):
            data = format_frame(mu).encode("ascii")
            name = f"frame_{k:04d}.csv"
            (out / name).write_bytes(data)
            entry["csv"] = {"file": name, "sha256": _sha256(data)}
        if format in ("pgm", "both"):
            data = graymap_bytes(mu, scale)
            name = f"frame_{k:04d}.pgm"
            (out / name).write_bytes(data)
            entry["pgm"] = {"file": name, "sha256": _sha256(data)}
        manifest.frames.append(entry)
    manifest.choices.setdefault("graymap_scale", scale)
    (out / "manifest.json").write_text(manifest.dumps(), encoding="utf-8")
    return manifest


ARTIFACT_CHOICES = {
    "cell_centres": "(i + 0.5) * side / points",
    "kernel": "periodic image sum (relative cutoff 1e-18), columns normalized to unit mass",
    "log_domain": "max-shifted log-sum-exp per output cell; auto when a kernel entry < 1e-300",
    "update_order": "Gauss-Seidel k = 0..N, all scalings start at 1",
    "stopping": "L1 marginal residual and L-inf log-scaling change both below tolerance",
    "nonlocal": "interaction potential -K*rho without the factor 1/2; outer loop with "
                "inexact inner solves, final inner solve at full tolerance",
    "obstacles": "cell centre strictly inside a disk is blocked; tracks sampled at t = kT/N; "
                 "fixed endpoint densities are zeroed inside obstacles and renormalized",
    "terminal_free": "free terminal keeps caps and obstacles of the running cost, not the interaction",
    "default_bump_sigma": f"{DEFAULT_SIGMA_FRACTION} * side",
}


def build_manifest(scenario, report, metrics):
    return RunManifest(
        config=scenario.config.document,
        versions=versions(),
        residuals={"marginal": report.residuals, "report": report.to_dict()},
        metrics=metrics.to_dict() if metrics is not None else {},
        choices={**ARTIFACT_CHOICES, "obstacle_centers": scenario.obstacle_centers},
    )


def shipped_scenarios():
    """Names of the example scenarios bundled with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def shipped_scenario_path(name):
    path = resources.files(__package__) / "scenarios" / f"{name}.toml"
    if not path.is_file():
        raise KeyError(f"no shipped scenario named {name!r}")
    return Path(os.fspath(path))
