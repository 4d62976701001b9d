"""Scenario configuration, validation and the artifact-producing runner.

A scenario is a single YAML document describing the potential (explicit
constants or a calibration directive), the preselected superposition, the
postselection, the meters and the requested output products. Positions and
momenta of postselections and meters may be given literally or as
``{branch: LABEL[, t: TIME]}`` directives that resolve to the corresponding
guiding-trajectory point, so the bundled scenarios stay readable and exactly
consistent with the computed dynamics.

Runs are deterministic: identical config + seed produce byte-identical CSV
and JSON artifacts, and every run writes a manifest with the config hash,
package and library versions and the effective seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

from .bohmian import dwell_sequence, fig2b_family
from .classical import PotentialParams, calibrate_return_time, make_grid
from .errors import ConfigError
from .gaussians import ComplexGaussian, normalize
from .propagation import (Branch, Superposition, backward_postselected,
                          propagate_superposition, write_snapshot_csv)
from .weak import Meter, pointer_readout, simulate_shots, weak_trajectory

__all__ = [
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "bundled_scenarios",
    "bundled_config_text",
    "resolve",
    "run",
]

_PRODUCTS = ("classical", "propagate", "weak-traj", "average-traj", "pointer")
DEFAULT_SEED = 20211215
DEFAULT_SHOTS = 10000


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def _fail(path: str, message: str):
    raise ConfigError(path, message)


def _expect_map(obj, path: str, required: tuple, optional: tuple = ()) -> dict:
    if not isinstance(obj, dict):
        _fail(path, f"expected a mapping, got {type(obj).__name__}")
    known = set(required) | set(optional)
    for key in obj:
        if key not in known:
            _fail(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            _fail(f"{path}.{key}", "missing required key")
    return obj


def _number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        _fail(path, f"expected a number, got {type(obj).__name__}")
    return float(obj)


def _vector2(obj, path: str) -> np.ndarray:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        _fail(path, "expected a 2-element list")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(obj)])


def _string(obj, path: str) -> str:
    if not isinstance(obj, str):
        _fail(path, f"expected a string, got {type(obj).__name__}")
    return obj


# ---------------------------------------------------------------------------
# parsed configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description; directives are still symbolic and get
    resolved against the propagated branches inside run()."""

    name: str
    description: str
    potential: dict
    preselection: dict
    postselection: dict
    meters: tuple
    time_grid: dict
    outputs: tuple  # (product, options) pairs
    seed: int
    raw_text: str

    def config_sha256(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()


def _parse_point(obj, path: str, allow_time: bool):
    """A literal [x, y] or a {branch: LABEL[, t: TIME]} directive."""
    if isinstance(obj, dict):
        keys = ("branch", "t") if allow_time else ("branch",)
        spec = _expect_map(obj, path, required=("branch",),
                          optional=tuple(k for k in keys if k != "branch"))
        out = {"branch": _string(spec["branch"], f"{path}.branch")}
        if "t" in spec:
            out["t"] = _number(spec["t"], f"{path}.t")
        return out
    return _vector2(obj, path)


def _parse_potential(obj, path: str) -> dict:
    spec = _expect_map(obj, path, required=(), optional=("calibration", "explicit"))
    if ("calibration" in spec) == ("explicit" in spec):
        _fail(path, "exactly one of 'calibration' or 'explicit' is required")
    if "calibration" in spec:
        cal = _expect_map(spec["calibration"], f"{path}.calibration",
                          required=("t_return",),
                          optional=("xi_ratio", "ups_ratio", "m", "zero_index"))
        out = {"t_return": _number(cal["t_return"], f"{path}.calibration.t_return"),
               "xi_ratio": _number(cal.get("xi_ratio", 1.0), f"{path}.calibration.xi_ratio"),
               "ups_ratio": _number(cal.get("ups_ratio", 0.3), f"{path}.calibration.ups_ratio"),
               "m": _number(cal.get("m", 1.0), f"{path}.calibration.m")}
        zi = cal.get("zero_index", [2, 1])
        if not isinstance(zi, (list, tuple)) or len(zi) != 2:
            _fail(f"{path}.calibration.zero_index", "expected a 2-element list")
        out["zero_index"] = tuple(int(_number(v, f"{path}.calibration.zero_index[{i}]"))
                                  for i, v in enumerate(zi))
        return {"calibration": out}
    exp = _expect_map(spec["explicit"], f"{path}.explicit",
                      required=("xi_x", "xi_y", "ups_x", "ups_y",
                                "omega_x", "omega_y"), optional=("m",))
    return {"explicit": {k: _number(v, f"{path}.explicit.{k}")
                         for k, v in exp.items()}}


def _parse_outputs(obj, path: str) -> tuple:
    if not isinstance(obj, list) or not obj:
        _fail(path, "expected a non-empty list of products")
    out = []
    for i, entry in enumerate(obj):
        epath = f"{path}[{i}]"
        if isinstance(entry, str):
            product, options = entry, {}
        elif isinstance(entry, dict) and len(entry) == 1:
            product, options = next(iter(entry.items()))
            if not isinstance(options, dict):
                _fail(f"{epath}.{product}", "product options must be a mapping")
        else:
            _fail(epath, "expected a product name or single-key mapping")
        if product not in _PRODUCTS:
            _fail(epath, f"unknown product {product!r}; known: {', '.join(_PRODUCTS)}")
        checked = {}
        if product == "propagate":
            opts = _expect_map(options, f"{epath}.propagate", required=(),
                              optional=("times", "points", "half_width"))
            if "times" in opts:
                if not isinstance(opts["times"], list) or not opts["times"]:
                    _fail(f"{epath}.propagate.times", "expected a non-empty list")
                checked["times"] = [_number(t, f"{epath}.propagate.times[{j}]")
                                    for j, t in enumerate(opts["times"])]
            checked["points"] = int(_number(opts.get("points", 81),
                                            f"{epath}.propagate.points"))
            checked["half_width"] = _number(opts.get("half_width", 4.0),
                                            f"{epath}.propagate.half_width")
        elif product == "average-traj":
            opts = _expect_map(options, f"{epath}.average-traj", required=(),
                              optional=("branch", "offset", "step"))
            checked["branch"] = _string(opts.get("branch", "I"),
                                        f"{epath}.average-traj.branch")
            checked["offset"] = _number(opts.get("offset", 0.05),
                                        f"{epath}.average-traj.offset")
            checked["step"] = _number(opts.get("step", 1e-3),
                                      f"{epath}.average-traj.step")
        elif product == "pointer":
            opts = _expect_map(options, f"{epath}.pointer", required=(),
                              optional=("shots",))
            checked["shots"] = int(_number(opts.get("shots", DEFAULT_SHOTS),
                                           f"{epath}.pointer.shots"))
        else:
            _expect_map(options, f"{epath}.{product}", required=())
        out.append((product, checked))
    return tuple(out)


def parse_config(text: str, name: str = "scenario") -> ScenarioConfig:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from exc
    root = _expect_map(doc, "", required=("potential", "preselection",
                                          "postselection", "time_grid",
                                          "outputs"),
                       optional=("name", "description", "meters", "seed"))
    name = _string(root.get("name", name), "name")
    description = _string(root.get("description", ""), "description")
    potential = _parse_potential(root["potential"], "potential")

    pre = _expect_map(root["preselection"], "preselection",
                      required=("r0", "delta", "branches"))
    r0 = _vector2(pre["r0"], "preselection.r0")
    delta = _number(pre["delta"], "preselection.delta")
    if delta <= 0.0:
        _fail("preselection.delta", "must be positive")
    if not isinstance(pre["branches"], list) or not pre["branches"]:
        _fail("preselection.branches", "expected a non-empty list")
    branches = []
    for i, b in enumerate(pre["branches"]):
        bpath = f"preselection.branches[{i}]"
        spec = _expect_map(b, bpath, required=("c", "p"))
        branches.append({"c": _number(spec["c"], f"{bpath}.c"),
                         "p": _vector2(spec["p"], f"{bpath}.p")})
    preselection = {"r0": r0, "delta": delta, "branches": branches}

    post = _expect_map(root["postselection"], "postselection",
                       required=("t_f", "states"))
    t_f = _number(post["t_f"], "postselection.t_f")
    if not isinstance(post["states"], list) or not post["states"]:
        _fail("postselection.states", "expected a non-empty list")
    states = []
    for i, s in enumerate(post["states"]):
        spath = f"postselection.states[{i}]"
        spec = _expect_map(s, spath, required=("r_f", "p_f"),
                          optional=("delta_f", "c"))
        delta_f = spec.get("delta_f", "match")
        if delta_f != "match":
            delta_f = _number(delta_f, f"{spath}.delta_f")
            if delta_f <= 0.0:
                _fail(f"{spath}.delta_f", "must be positive")
        states.append({"r_f": _parse_point(spec["r_f"], f"{spath}.r_f", False),
                       "p_f": _parse_point(spec["p_f"], f"{spath}.p_f", False),
                       "delta_f": delta_f,
                       "c": _number(spec.get("c", 1.0), f"{spath}.c")})
    postselection = {"t_f": t_f, "states": states}

    meters = []
    raw_meters = root.get("meters", [])
    if not isinstance(raw_meters, list):
        _fail("meters", "expected a list")
    for i, m in enumerate(raw_meters):
        mpath = f"meters[{i}]"
        spec = _expect_map(m, mpath, required=("id", "r0"),
                          optional=("delta", "g", "tau"))
        meters.append({"id": _string(spec["id"], f"{mpath}.id"),
                       "r0": _parse_point(spec["r0"], f"{mpath}.r0", True),
                       "delta": _number(spec.get("delta", 0.1), f"{mpath}.delta"),
                       "g": _number(spec.get("g", 0.01), f"{mpath}.g"),
                       "tau": _number(spec.get("tau", 0.01), f"{mpath}.tau")})
    ids = [m["id"] for m in meters]
    if len(set(ids)) != len(ids):
        _fail("meters", "meter ids must be distinct")

    grid = _expect_map(root["time_grid"], "time_grid",
                       required=("t0", "t1", "step"))
    t0 = _number(grid["t0"], "time_grid.t0")
    t1 = _number(grid["t1"], "time_grid.t1")
    step = _number(grid["step"], "time_grid.step")
    if t1 <= t0:
        _fail("time_grid.t1", "must exceed t0")
    if step <= 0.0 or step > (t1 - t0):
        _fail("time_grid.step", "must be positive and smaller than the span")
    if abs(t_f - t1) > 1e-12:
        _fail("postselection.t_f", "must equal time_grid.t1 (postselection "
              "happens at the end of the evolution)")
    time_grid = {"t0": t0, "t1": t1, "step": step}

    outputs = _parse_outputs(root["outputs"], "outputs")
    products = [p for p, _ in outputs]
    if len(set(products)) != len(products):
        _fail("outputs", "each product may be requested once")
    if ("weak-traj" in products or "pointer" in products) and not meters:
        _fail("meters", "weak-traj/pointer products need at least one meter")

    seed = root.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int):
        _fail("seed", "expected an integer")

    # referenced times must lie inside the grid
    for i, m in enumerate(meters):
        if isinstance(m["r0"], dict) and "t" in m["r0"]:
            t = m["r0"]["t"]
            if not (t0 <= t <= t1):
                _fail(f"meters[{i}].r0.t", f"time {t} outside grid [{t0}, {t1}]")
    for product, opts in outputs:
        if product == "propagate" and "times" in opts:
            for j, t in enumerate(opts["times"]):
                if not (t0 <= t <= t1):
                    _fail(f"outputs.propagate.times[{j}]",
                          f"time {t} outside grid [{t0}, {t1}]")

    return ScenarioConfig(name=name, description=description,
                          potential=potential, preselection=preselection,
                          postselection=postselection, meters=tuple(meters),
                          time_grid=time_grid, outputs=outputs, seed=seed,
                          raw_text=text)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        text = fh.read()
    import os
    return parse_config(text, name=os.path.splitext(os.path.basename(path))[0])


def bundled_scenarios() -> list:
    """Names of the scenario files shipped with the package."""
    pkg = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".yaml"))


def bundled_config_text(name: str) -> str:
    pkg = resources.files(__package__) / "scenarios" / f"{name}.yaml"
    if not pkg.is_file():
        known = ", ".join(bundled_scenarios())
        raise ConfigError("scenario", f"no bundled scenario {name!r}; known: {known}")
    return pkg.read_text()


# ---------------------------------------------------------------------------
# resolution and execution
# ---------------------------------------------------------------------------

def _resolve_potential(spec: dict) -> PotentialParams:
    if "explicit" in spec:
        e = spec["explicit"]
        return PotentialParams(xi_x=e["xi_x"], xi_y=e["xi_y"], ups_x=e["ups_x"],
                               ups_y=e["ups_y"], omega_x=e["omega_x"],
                               omega_y=e["omega_y"], m=e.get("m", 1.0))
    c = spec["calibration"]
    template = PotentialParams.isotropic(c["xi_ratio"], c["ups_ratio"], 1.0, c["m"])
    return calibrate_return_time(template, c["t_return"], zero_index=c["zero_index"])


def _branch_by_label(psi: Superposition, label: str, path: str) -> Branch:
    for b in psi.branches:
        if b.label == label:
            return b
    known = ", ".join(b.label for b in psi.branches)
    raise ConfigError(path, f"no branch {label!r}; branches: {known}")


def _resolve_point(spec, psi: Superposition, default_t: float, path: str,
                   momentum: bool = False) -> np.ndarray:
    if isinstance(spec, dict):
        b = _branch_by_label(psi, spec["branch"], f"{path}.branch")
        state = b.state_at(spec.get("t", default_t))
        return state.p.copy() if momentum else state.q.copy()
    return np.asarray(spec, float)


def _build_postselection(config: ScenarioConfig, psi: Superposition,
                         params: PotentialParams, t_grid) -> Superposition:
    t_f = config.postselection["t_f"]
    branches = []
    for i, s in enumerate(config.postselection["states"]):
        spath = f"postselection.states[{i}]"
        r_f = _resolve_point(s["r_f"], psi, t_f, f"{spath}.r_f")
        p_f = _resolve_point(s["p_f"], psi, t_f, f"{spath}.p_f", momentum=True)
        if s["delta_f"] == "match":
            if not isinstance(s["r_f"], dict):
                raise ConfigError(f"{spath}.delta_f",
                                  "'match' needs a branch directive in r_f")
            matched = _branch_by_label(psi, s["r_f"]["branch"], f"{spath}.r_f.branch")
            alpha_f = np.abs(matched.state_at(t_f).alpha)
        else:
            alpha_f = np.full(2, 1.0 / s["delta_f"] ** 2)
        anchor = normalize(ComplexGaussian(q=r_f, p=p_f, alpha=alpha_f, phase=0.0))
        branch = backward_postselected(anchor, params, t_grid, label=f"f{i}")
        branches.append(Branch(guide=branch.guide, anchor_state=anchor,
                               coefficient=complex(s["c"]), label=branch.label))
    return Superposition(branches=tuple(branches))


def _resolve_meters(config: ScenarioConfig, psi: Superposition) -> list:
    t_f = config.postselection["t_f"]
    out = []
    for i, m in enumerate(config.meters):
        r0 = _resolve_point(m["r0"], psi, t_f, f"meters[{i}].r0")
        out.append(Meter(id=m["id"], r0=r0, delta=m["delta"], g=m["g"],
                         tau=m["tau"]))
    return out


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


@dataclass(frozen=True)
class RunResult:
    out_dir: str
    products: tuple
    manifest: dict


def resolve(config: ScenarioConfig):
    """Resolve a parsed config into live objects.

    Returns (params, t_grid, psi, chi, meters): the calibrated potential, the
    time grid, the propagated preselection, the backward-constructed
    postselection and the meter list, exactly as run() uses them."""
    params = _resolve_potential(config.potential)
    tg = config.time_grid
    t_grid = make_grid(tg["t0"], tg["t1"], tg["step"])
    pre = config.preselection
    psi = propagate_superposition([(b["c"], b["p"]) for b in pre["branches"]],
                                 pre["r0"], pre["delta"], params, t_grid)
    chi = _build_postselection(config, psi, params, t_grid)
    meters = _resolve_meters(config, psi)
    return params, t_grid, psi, chi, meters


def run(config: ScenarioConfig, out_dir, seed: int | None = None,
        threads: int | None = None) -> RunResult:
    """Execute the scenario pipeline and write the artifact bundle.

    threads caps the BLAS/FFT worker count; determinism is independent of it.
    """
    import os
    if threads is not None and threads > 0:
        os.environ.setdefault("OMP_NUM_THREADS", str(threads))
    os.makedirs(out_dir, exist_ok=True)
    effective_seed = config.seed if seed is None else int(seed)

    params, t_grid, psi, chi, meters = resolve(config)
    tg = config.time_grid

    written = []

    def emit(name):
        written.append(name)
        return os.path.join(out_dir, name)

    for product, opts in config.outputs:
        if product == "classical":
            for b in psi.branches:
                b.guide.write_csv(emit(f"trajectory_{b.label}.csv"))
        elif product == "propagate":
            times = opts.get("times")
            if times is None:
                times = sorted({round(float(t), 9) for m in config.meters
                                if isinstance(m["r0"], dict) and "t" in m["r0"]
                                for t in [m["r0"]["t"]]} | {tg["t1"]})
            for t in times:
                lo = np.min([b.state_at(t).q for b in psi.branches], axis=0)
                hi = np.max([b.state_at(t).q for b in psi.branches], axis=0)
                w = opts["half_width"]
                n = opts["points"]
                xs = np.linspace(lo[0] - w, hi[0] + w, n)
                ys = np.linspace(lo[1] - w, hi[1] + w, n)
                write_snapshot_csv(emit(f"snapshot_t{t:g}.csv"), psi, t, xs, ys)
        elif product == "weak-traj":
            wt = weak_trajectory(psi, chi, meters)
            wt.write_csv(emit("weak_trajectory.csv"))
        elif product == "average-traj":
            labels = [b.label for b in psi.branches]
            idx = labels.index(opts["branch"]) if opts["branch"] in labels else None
            if idx is None:
                raise ConfigError("outputs.average-traj.branch",
                                  f"no branch {opts['branch']!r}")
            family = fig2b_family(psi, branch_index=idx, t_f=tg["t1"],
                                  offset=opts["offset"], step=opts["step"])
            summary = []
            for i, traj in enumerate(family, start=1):
                traj.write_csv(emit(f"average_trajectory_{i:02d}.csv"))
                summary.append({"index": i,
                                "final_position": traj.positions[0],
                                "sequence": dwell_sequence(traj),
                                "aborted": traj.aborted})
            _write_json(emit("average_trajectory_summary.json"),
                        {"trajectories": summary})
        elif product == "pointer":
            wt = weak_trajectory(psi, chi, meters)
            by_id = {m.id: m for m in meters}
            readings = []
            for k, s in enumerate(wt.samples):
                meter = by_id[s.meter]
                ro = pointer_readout(meter, s.value)
                shots = simulate_shots(ro, opts["shots"],
                                       seed=effective_seed + k)
                readings.append({"meter_id": s.meter, "t_k": s.t_k,
                                 "weak_value_re": s.value.real,
                                 "weak_value_im": s.value.imag,
                                 "momentum_shift": ro.momentum_shift,
                                 "position_shift": ro.position_shift,
                                 "shots": shots})
            _write_json(emit("pointer_readout.json"),
                        {"readings": readings,
                         "silent": [{"meter_id": mid, "reason": r}
                                    for mid, r in wt.silent]})

    manifest = {
        "scenario": config.name,
        "description": config.description,
        "config_sha256": config.config_sha256(),
        "seed": effective_seed,
        "versions": _versions(),
        "potential": {"xi_x": params.xi_x, "xi_y": params.xi_y,
                      "ups_x": params.ups_x, "ups_y": params.ups_y,
                      "omega_x": params.omega_x, "omega_y": params.omega_y,
                      "m": params.m},
        "products": sorted(written),
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return RunResult(out_dir=str(out_dir), products=tuple(sorted(written)),
                     manifest=manifest)


def _versions() -> dict:
    import scipy
    from . import __version__
    return {"weaktraj": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__}
