"""Experiment scenarios: configuration, sweep drivers, and report emission.

A scenario is described by a flat JSON document (see docs/config_schema.md).
Every run writes machine-readable reports into the configured output
directory; identical configurations produce identical report contents, with
the recorded wall time as the only run-to-run variable.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import initial_data
from .errors import ConfigError
from .mesh import SimParams, TriodState, energy, junction_sector_angles, min_segment_length
from .metrics import NestedErrorAccumulator, angle_error_sup, eoc, equilibrium_errors
from .reporting import write_csv, write_snapshot_svg, write_summary
from .spectral import conditioning_eoc, equilibrated_mass_spectrum, system_condition
from .stepper import StoppingRule, Trajectory, evolve, time_step

SCENARIOS = (
    "convergence",
    "convergence_time",
    "epsilon_study",
    "conditioning_mass",
    "conditioning_system",
    "spiral",
    "self_intersect",
    "custom",
)

_DELTA_RULES = {
    "0.2h^2": 0.2,
    "0.4h^2": 0.4,
    "h^2": 1.0,
}

# keys each scenario accepts beyond ("scenario", "output_dir", "workers")
_ALLOWED_KEYS = {
    "convergence": {"epsilon", "j_list", "j_ref", "delta_rule", "final_time",
                    "rotation_deg", "paper_scale", "snapshot_times"},
    "convergence_time": {"epsilon", "j", "n_list", "n_ref", "final_time", "rotation_deg"},
    "epsilon_study": {"j", "delta", "epsilon_list", "velocity_threshold", "z", "max_steps"},
    "conditioning_mass": {"j", "delta", "epsilon_list", "rotation_deg"},
    "conditioning_system": {"j_list", "delta_rule", "epsilon_list", "rotation_deg"},
    "spiral": {"j", "epsilon", "delta_list", "final_time", "snapshot_times", "snapshot_delta"},
    "self_intersect": {"j", "epsilon", "delta", "final_time", "snapshot_times", "junction_fix"},
    "custom": {"initial", "epsilon", "j", "delta", "num_steps", "stride",
               "velocity_threshold", "snapshot_times", "z", "junction_fix", "rotation_deg"},
}


@dataclass
class ScenarioConfig:
    """Validated scenario description; unknown or missing keys are rejected
    with explicit messages."""

    scenario: str
    output_dir: Path
    workers: int = 1
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"configuration must be a JSON object, got {type(doc).__name__}")
        missing = [k for k in ("scenario", "output_dir") if k not in doc]
        if missing:
            raise ConfigError(f"missing required keys: {', '.join(missing)}")
        scenario = doc["scenario"]
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
        allowed = _ALLOWED_KEYS[scenario] | {"scenario", "output_dir", "workers"}
        unknown = sorted(set(doc) - allowed)
        if unknown:
            raise ConfigError(
                f"scenario {scenario!r} does not accept keys: {', '.join(unknown)}; "
                f"allowed: {', '.join(sorted(allowed))}"
            )
        workers = doc.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {workers!r}")
        options = {k: v for k, v in doc.items() if k not in ("scenario", "output_dir", "workers")}
        return cls(scenario, Path(doc["output_dir"]), workers, options)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(doc)

    def effective_workers(self) -> int:
        cap = os.environ.get("TRIODFLOW_WORKERS")
        if cap:
            try:
                return max(1, min(self.workers, int(cap)))
            except ValueError as exc:
                raise ConfigError(f"TRIODFLOW_WORKERS must be an integer, got {cap!r}") from exc
        return self.workers


def delta_from_rule(rule, num_elements: int) -> float:
    """Resolve a time step that is either a number or a mesh-size rule."""
    if isinstance(rule, (int, float)):
        value = float(rule)
        if value <= 0.0:
            raise ConfigError(f"time step must be positive, got {value}")
        return value
    if rule in _DELTA_RULES:
        return _DELTA_RULES[rule] / (num_elements * num_elements)
    raise ConfigError(f"unknown time step rule {rule!r}; expected a number or one of {sorted(_DELTA_RULES)}")


def _check_positive(name, value):
    if not isinstance(value, (int, float)) or value <= 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return value


def _steps_for(final_time: float, delta: float, name: str) -> int:
    steps = round(final_time / delta)
    if steps < 1 or abs(steps * delta - final_time) > 1e-9 * final_time:
        raise ConfigError(f"{name}: final_time {final_time} is not an integer multiple of the time step {delta}")
    return steps


def _map_points(fn, points, workers: int):
    if workers <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
        return list(pool.map(fn, points))


def _snapshot_steps(snapshot_times, delta: float, num_steps: int, name: str) -> dict[int, float]:
    out = {}
    for t in snapshot_times:
        n = round(t / delta)
        if abs(n * delta - t) > 1e-9 * max(t, delta) or n < 0 or n > num_steps:
            raise ConfigError(f"{name}: snapshot time {t} is not a step multiple within the run")
        out[n] = t
    return out


# --- convergence scenarios -------------------------------------------------

def _convergence_coarse_run(args):
    num_elements, epsilon, factor, final_time, rotation = args
    delta = factor / (num_elements * num_elements)
    steps = _steps_for(final_time, delta, "convergence")
    params = SimParams(epsilon, num_elements, delta, steps)
    initial = initial_data.convergence_initial(num_elements, rotation_deg=rotation)
    return evolve(initial, params, stride=1)


def _stream_reference(ref_initial: TriodState, ref_params: SimParams, accumulators):
    state = ref_initial
    for acc in accumulators:
        acc.feed_state(0, state.nodes)
    for n_ref in range(1, ref_params.num_steps + 1):
        state, _ = time_step(state, ref_params)
        for acc in accumulators:
            acc.feed_state(n_ref, state.nodes)
    return state


def run_convergence(config: ScenarioConfig) -> dict:
    o = config.options
    paper_scale = bool(o.get("paper_scale", False))
    epsilon = _check_positive("epsilon", o.get("epsilon", 1e-3))
    j_list = list(o.get("j_list", [20, 30, 36, 45, 60, 90, 120, 180] if paper_scale else [20, 30, 36, 45, 60]))
    j_ref = int(o.get("j_ref", 360 if paper_scale else 180))
    rule = o.get("delta_rule", "0.2h^2")
    if rule not in _DELTA_RULES:
        raise ConfigError(f"convergence: delta_rule must be one of {sorted(_DELTA_RULES)}, got {rule!r}")
    factor = _DELTA_RULES[rule]
    final_time = _check_positive("final_time", o.get("final_time", 0.2))
    rotation = float(o.get("rotation_deg", 18.0))
    for J in j_list:
        if j_ref % J != 0:
            raise ConfigError(f"convergence: j_ref={j_ref} is not an integer multiple of J={J}")

    t_start = time.time()
    trajectories = _map_points(
        _convergence_coarse_run,
        [(J, epsilon, factor, final_time, rotation) for J in j_list],
        config.effective_workers(),
    )

    ref_delta = factor / (j_ref * j_ref)
    ref_params = SimParams(epsilon, j_ref, ref_delta, _steps_for(final_time, ref_delta, "convergence"))
    ref_initial = initial_data.convergence_initial(j_ref, rotation_deg=rotation)
    accumulators = [NestedErrorAccumulator(traj, ref_params) for traj in trajectories]
    _stream_reference(ref_initial, ref_params, accumulators)

    rows = []
    for J, traj, acc in zip(j_list, trajectories, accumulators):
        e_pos, e_der, e_vel = acc.results()
        rows.append({
            "j": J,
            "n": traj.params.num_steps,
            "err_position": e_pos,
            "err_derivative": e_der,
            "err_velocity": e_vel,
            "err_angle": angle_error_sup(traj),
        })

    columns = ("err_position", "err_derivative", "err_velocity", "err_angle")
    eocs = {c: [None] + eoc([(r["j"], r[c]) for r in rows]) for c in columns}
    table = []
    for i, r in enumerate(rows):
        line = [r["j"], r["n"]]
        for c in columns:
            line += [r[c], eocs[c][i]]
        table.append(line)
    header = ["j", "n"]
    for c in columns:
        header += [c, c.replace("err_", "eoc_")]

    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "convergence.csv", header, table)
    params_doc = {"scenario": "convergence", "epsilon": epsilon, "j_list": j_list,
                  "j_ref": j_ref, "delta_rule": rule, "final_time": final_time,
                  "rotation_deg": rotation, "paper_scale": paper_scale}
    result_doc = {"rows": [dict(zip(header, line)) for line in table],
                  "wall_time_s": time.time() - t_start}
    for r, traj in zip(rows, trajectories):
        write_summary(config.output_dir / f"run_j{r['j']}.json",
                      {**params_doc, "j": r["j"]},
                      {"n_total": traj.n_total,
                       "final_energy": traj.reports[-1].energy_after,
                       "junction": traj.states[-1].junction,
                       "min_segment_length": min(rep.min_segment_length_after for rep in traj.reports)})
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


def run_convergence_time(config: ScenarioConfig) -> dict:
    o = config.options
    epsilon = _check_positive("epsilon", o.get("epsilon", 1e-3))
    J = int(o.get("j", 60))
    n_list = [int(n) for n in o.get("n_list", [3456, 4320, 5760, 6912, 8640])]
    n_ref = int(o.get("n_ref", 34560))
    final_time = _check_positive("final_time", o.get("final_time", 0.2))
    rotation = float(o.get("rotation_deg", 18.0))
    for n in n_list:
        if n_ref % n != 0:
            raise ConfigError(f"convergence_time: n_ref={n_ref} is not an integer multiple of N={n}")

    t_start = time.time()
    initial = initial_data.convergence_initial(J, rotation_deg=rotation)

    def coarse(n):
        return evolve(initial, SimParams(epsilon, J, final_time / n, n), stride=1)

    trajectories = _map_points(coarse, n_list, config.effective_workers())
    ref_params = SimParams(epsilon, J, final_time / n_ref, n_ref)
    accumulators = [NestedErrorAccumulator(traj, ref_params) for traj in trajectories]
    _stream_reference(initial, ref_params, accumulators)

    rows = []
    for n, traj, acc in zip(n_list, trajectories, accumulators):
        e_pos, e_der, e_vel = acc.results()
        rows.append({"j": J, "n": n, "err_position": e_pos, "err_derivative": e_der,
                     "err_velocity": e_vel, "err_angle": angle_error_sup(traj)})
    columns = ("err_position", "err_derivative", "err_velocity", "err_angle")
    eocs = {c: [None] + eoc([(r["n"], r[c]) for r in rows]) for c in columns}
    table = []
    for i, r in enumerate(rows):
        line = [r["j"], r["n"]]
        for c in columns:
            line += [r[c], eocs[c][i]]
        table.append(line)
    header = ["j", "n"]
    for c in columns:
        header += [c, c.replace("err_", "eoc_")]

    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "convergence_time.csv", header, table)
    params_doc = {"scenario": "convergence_time", "epsilon": epsilon, "j": J,
                  "n_list": n_list, "n_ref": n_ref, "final_time": final_time,
                  "rotation_deg": rotation}
    result_doc = {"rows": [dict(zip(header, line)) for line in table],
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


# --- relaxation study ------------------------------------------------------

def _epsilon_point(args):
    epsilon, J, delta, threshold, z, max_steps = args
    initial = initial_data.epsilon_study_initial(J, z=z)
    params = SimParams(epsilon, J, delta, max_steps)
    traj = evolve(initial, params, stop=StoppingRule(velocity_threshold=threshold),
                  stride=max_steps)
    final = traj.states[-1]
    e_ang, e_pos = equilibrium_errors(final, epsilon, z)
    return {"epsilon": epsilon, "n_total": traj.n_total, "err_angle": e_ang,
            "err_position": e_pos, "junction": final.junction,
            "final_energy": traj.reports[-1].energy_after,
            "stopped": traj.reports[-1].max_nodal_speed < threshold}


def run_epsilon_study(config: ScenarioConfig) -> dict:
    o = config.options
    J = int(o.get("j", 20))
    delta = _check_positive("delta", o.get("delta", 0.01))
    eps_list = [float(e) for e in o.get("epsilon_list", [1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5])]
    threshold = _check_positive("velocity_threshold", o.get("velocity_threshold", 1e-6))
    z = float(o.get("z", 0.1))
    max_steps = int(o.get("max_steps", 60000))

    t_start = time.time()
    points = _map_points(_epsilon_point,
                         [(e, J, delta, threshold, z, max_steps) for e in eps_list],
                         config.effective_workers())
    eoc_ang = [None] + eoc([(1.0 / p["epsilon"], p["err_angle"]) for p in points])
    eoc_pos = [None] + eoc([(1.0 / p["epsilon"], p["err_position"]) for p in points])

    header = ["epsilon", "n_total", "err_angle", "eoc_angle", "err_position", "eoc_position"]
    table = [[p["epsilon"], p["n_total"], p["err_angle"], eoc_ang[i], p["err_position"], eoc_pos[i]]
             for i, p in enumerate(points)]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "epsilon_study.csv", header, table)
    params_doc = {"scenario": "epsilon_study", "j": J, "delta": delta,
                  "epsilon_list": eps_list, "velocity_threshold": threshold,
                  "z": z, "max_steps": max_steps}
    result_doc = {"rows": [dict(zip(header, line)) for line in table],
                  "wall_time_s": time.time() - t_start}
    for p in points:
        write_summary(config.output_dir / f"run_eps{p['epsilon']:g}.json",
                      {**params_doc, "epsilon": p["epsilon"]},
                      {k: p[k] for k in ("n_total", "err_angle", "err_position",
                                         "junction", "final_energy", "stopped")})
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


# --- conditioning studies --------------------------------------------------

def run_conditioning_mass(config: ScenarioConfig) -> dict:
    o = config.options
    J = int(o.get("j", 20))
    delta = _check_positive("delta", o.get("delta", 0.0025))
    eps_list = [float(e) for e in o.get("epsilon_list", [0.3 ** l for l in range(11)])]
    rotation = float(o.get("rotation_deg", 18.0))

    t_start = time.time()
    triod = initial_data.convergence_initial(J, rotation_deg=rotation)
    reports = [equilibrated_mass_spectrum(triod, SimParams(e, J, delta, 1)) for e in eps_list]
    eocs = [None] + conditioning_eoc([(e, r.cond2) for e, r in zip(eps_list, reports)])

    header = ["index", "epsilon", "lambda_max", "lambda_min", "cond2", "eoc"]
    table = [[i + 1, e, r.lambda_max, r.lambda_min, r.cond2, eocs[i]]
             for i, (e, r) in enumerate(zip(eps_list, reports))]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "conditioning_mass.csv", header, table)
    params_doc = {"scenario": "conditioning_mass", "j": J, "delta": delta,
                  "epsilon_list": eps_list, "rotation_deg": rotation}
    result_doc = {"rows": [dict(zip(header, line)) for line in table],
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


def _conditioning_system_point(args):
    J, factor, eps_list, rotation = args
    delta = factor / (J * J)
    triod = initial_data.convergence_initial(J, rotation_deg=rotation)
    conds = [system_condition(triod, SimParams(e, J, delta, 1)).cond2 for e in eps_list]
    return {"j": J, "h": 1.0 / J, "delta": delta, "conds": conds}


def run_conditioning_system(config: ScenarioConfig) -> dict:
    o = config.options
    j_list = [int(j) for j in o.get("j_list", [10, 16, 24, 36, 48, 64])]
    rule = o.get("delta_rule", "0.4h^2")
    if rule not in _DELTA_RULES:
        raise ConfigError(f"conditioning_system: delta_rule must be one of {sorted(_DELTA_RULES)}, got {rule!r}")
    factor = _DELTA_RULES[rule]
    eps_list = [float(e) for e in o.get("epsilon_list", [1e-1, 1e-5])]
    if len(eps_list) != 2:
        raise ConfigError(f"conditioning_system: epsilon_list must have exactly 2 entries, got {len(eps_list)}")
    rotation = float(o.get("rotation_deg", 18.0))

    t_start = time.time()
    points = _map_points(_conditioning_system_point,
                         [(J, factor, eps_list, rotation) for J in j_list],
                         config.effective_workers())
    header = ["j", "h", "delta", f"cond_eps{eps_list[0]:g}", f"cond_eps{eps_list[1]:g}", "ratio"]
    table = [[p["j"], p["h"], p["delta"], p["conds"][0], p["conds"][1],
              p["conds"][1] / p["conds"][0]] for p in points]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(config.output_dir / "conditioning_system.csv", header, table)
    params_doc = {"scenario": "conditioning_system", "j_list": j_list, "delta_rule": rule,
                  "epsilon_list": eps_list, "rotation_deg": rotation}
    result_doc = {"rows": [dict(zip(header, line)) for line in table],
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


# --- stress tests ----------------------------------------------------------

def _spiral_point(args):
    J, epsilon, delta, final_time, snap_steps = args
    params = SimParams(epsilon, J, delta, _steps_for(final_time, delta, "spiral"))
    initial = initial_data.spiral_initial(J)
    stride = max(1, params.num_steps // 500)
    traj = evolve(initial, params, stride=stride)
    snaps = {}
    if snap_steps:
        state = initial
        snaps[0] = state
        needed = sorted(n for n in snap_steps if n > 0)
        k = 0
        for n in range(1, max(needed) + 1):
            state, _ = time_step(state, params)
            if k < len(needed) and n == needed[k]:
                snaps[n] = state
                k += 1
    return traj, snaps


def run_spiral(config: ScenarioConfig) -> dict:
    o = config.options
    J = int(o.get("j", 60))
    epsilon = _check_positive("epsilon", o.get("epsilon", 1e-3))
    delta_list = [float(d) for d in o.get("delta_list", [4e-4, 2e-4, 1e-4])]
    final_time = _check_positive("final_time", o.get("final_time", 0.48))
    snapshot_times = o.get("snapshot_times", [0.0, 0.04, 0.08, 0.16, 0.28, 0.48])
    snapshot_delta = float(o.get("snapshot_delta", delta_list[min(1, len(delta_list) - 1)]))

    t_start = time.time()
    jobs = []
    for d in delta_list:
        steps = _steps_for(final_time, d, "spiral")
        snap = _snapshot_steps(snapshot_times, d, steps, "spiral") if d == snapshot_delta else {}
        jobs.append((J, epsilon, d, final_time, snap))
    results = _map_points(_spiral_point, jobs, config.effective_workers())

    rows = []
    config.output_dir.mkdir(parents=True, exist_ok=True)
    min_over_run = {}
    for (J_, eps_, d, T_, snap), (traj, snaps) in zip(jobs, results):
        start_min = min_segment_length(traj.states[0])
        rows.append([d, 0, 0.0, start_min])
        for n, rep in enumerate(traj.reports, start=1):
            rows.append([d, n, n * d, rep.min_segment_length_after])
        min_over_run[d] = min(r.min_segment_length_after for r in traj.reports)
        for n, state in snaps.items():
            write_snapshot_svg(config.output_dir / "snapshots" / f"spiral_t{n * d:g}.svg", state)
    write_csv(config.output_dir / "min_segment.csv",
              ["delta", "step", "time", "min_segment_length"], rows)
    final_traj = results[-1][0]
    params_doc = {"scenario": "spiral", "j": J, "epsilon": epsilon,
                  "delta_list": delta_list, "final_time": final_time,
                  "snapshot_delta": snapshot_delta}
    result_doc = {"min_segment_by_delta": {f"{d:g}": min_over_run[d] for d in delta_list},
                  "final_energy": final_traj.reports[-1].energy_after,
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


def run_self_intersect(config: ScenarioConfig) -> dict:
    o = config.options
    J = int(o.get("j", 60))
    epsilon = _check_positive("epsilon", o.get("epsilon", 1e-3))
    delta = _check_positive("delta", o.get("delta", 1e-4))
    final_time = _check_positive("final_time", o.get("final_time", 0.5))
    snapshot_times = o.get("snapshot_times", [0.0, 0.02, 0.05, 0.06, 0.07, 0.5])
    junction_fix = o.get("junction_fix", "shift")

    t_start = time.time()
    steps = _steps_for(final_time, delta, "self_intersect")
    snap_steps = _snapshot_steps(snapshot_times, delta, steps, "self_intersect")
    params = SimParams(epsilon, J, delta, steps)
    initial = initial_data.self_intersect_initial(J, junction_fix=junction_fix)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    state = initial
    rows = [[0, 0.0, min_segment_length(initial), energy(initial, epsilon)]]
    if 0 in snap_steps:
        write_snapshot_svg(config.output_dir / "snapshots" / "self_intersect_t0.svg", state)
    for n in range(1, steps + 1):
        state, rep = time_step(state, params)
        rows.append([n, n * delta, rep.min_segment_length_after, rep.energy_after])
        if n in snap_steps:
            write_snapshot_svg(
                config.output_dir / "snapshots" / f"self_intersect_t{n * delta:g}.svg", state)
    write_csv(config.output_dir / "min_segment.csv",
              ["step", "time", "min_segment_length", "energy"], rows)
    params_doc = {"scenario": "self_intersect", "j": J, "epsilon": epsilon, "delta": delta,
                  "final_time": final_time, "junction_fix": junction_fix}
    result_doc = {"n_total": steps, "final_energy": rows[-1][3],
                  "final_junction": state.junction,
                  "min_segment_over_run": min(r[2] for r in rows),
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


# --- free-form runs --------------------------------------------------------

_INITIAL_BUILDERS = {
    "convergence": lambda J, o: initial_data.convergence_initial(
        J, rotation_deg=float(o.get("rotation_deg", 18.0))),
    "epsilon_study": lambda J, o: initial_data.epsilon_study_initial(J, z=float(o.get("z", 0.1))),
    "spiral": lambda J, o: initial_data.spiral_initial(J),
    "self_intersect": lambda J, o: initial_data.self_intersect_initial(
        J, junction_fix=o.get("junction_fix", "shift")),
    "equilateral": lambda J, o: initial_data.equilateral_initial(J),
}


def run_custom(config: ScenarioConfig) -> dict:
    o = config.options
    for key in ("initial", "epsilon", "j", "delta", "num_steps"):
        if key not in o:
            raise ConfigError(f"custom scenario requires key {key!r}")
    name = o["initial"]
    if name not in _INITIAL_BUILDERS:
        raise ConfigError(f"unknown initial data {name!r}; expected one of {sorted(_INITIAL_BUILDERS)}")
    J = int(o["j"])
    params = SimParams(float(o["epsilon"]), J, float(o["delta"]), int(o["num_steps"]))
    stride = int(o.get("stride", 1))
    threshold = o.get("velocity_threshold")
    stop = StoppingRule(velocity_threshold=float(threshold)) if threshold is not None else None

    t_start = time.time()
    initial = _INITIAL_BUILDERS[name](J, o)
    traj = evolve(initial, params, stop=stop, stride=stride)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    rows = [[n + 1, (n + 1) * params.time_step, r.energy_after, r.min_segment_length_after,
             r.max_nodal_speed, r.cg_iterations] for n, r in enumerate(traj.reports)]
    write_csv(config.output_dir / "trace.csv",
              ["step", "time", "energy", "min_segment_length", "max_nodal_speed", "cg_iterations"],
              rows)
    snapshot_times = o.get("snapshot_times", [])
    if snapshot_times:
        by_step = {s: st for s, st in zip(traj.state_steps, traj.states)}
        for n, t in _snapshot_steps(snapshot_times, params.time_step, traj.n_total, "custom").items():
            if n not in by_step:
                raise ConfigError(f"custom: snapshot step {n} was not recorded (stride {stride})")
            write_snapshot_svg(config.output_dir / "snapshots" / f"custom_t{t:g}.svg", by_step[n])
    final = traj.states[-1]
    params_doc = {"scenario": "custom", "initial": name, "epsilon": params.epsilon,
                  "j": J, "delta": params.time_step, "num_steps": params.num_steps,
                  "stride": stride, "velocity_threshold": threshold}
    result_doc = {"n_total": traj.n_total,
                  "final_energy": traj.reports[-1].energy_after if traj.reports else energy(final, params.epsilon),
                  "junction": final.junction,
                  "sector_angles": junction_sector_angles(final),
                  "wall_time_s": time.time() - t_start}
    write_summary(config.output_dir / "summary.json", params_doc, result_doc)
    return result_doc


_RUNNERS = {
    "convergence": run_convergence,
    "convergence_time": run_convergence_time,
    "epsilon_study": run_epsilon_study,
    "conditioning_mass": run_conditioning_mass,
    "conditioning_system": run_conditioning_system,
    "spiral": run_spiral,
    "self_intersect": run_self_intersect,
    "custom": run_custom,
}


def run_scenario(config: ScenarioConfig) -> dict:
    """Execute a validated scenario and write its reports; returns the result
    document that also lands in summary.json."""
    return _RUNNERS[config.scenario](config)
