"""Scenario runner: single runs and parameter sweeps from the command line.

    taylorcbf run   --scenario corridor --method attcbf --classk linear --out results/
    taylorcbf sweep --scenario corridor --method ttcbf,attcbf \
                    --classk linear,exponential,rational --gain 0.2,0.3,0.4 --out sweep/

Each run writes ``trajectory.csv`` (full-precision log), ``metrics.json``
(metrics plus the complete effective configuration, so a run is reproducible
from its own output), and a human-readable ``summary.txt``.  A sweep writes
one subdirectory per grid cell plus a combined ``comparison.csv``.

Exit status: 0 success, 2 configuration error, 3 if any barrier dipped below
-1e-6 during the run.  Sweep cells may execute in parallel; set
``TAYLORCBF_WORKERS`` to the desired process count.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barriers import ClassK
from .metrics import compute_metrics, count_design_parameters
from .scenarios.corridor import CorridorParams, corridor_setup
from .scenarios.spring_mass import SpringMassParams, spring_mass_setup
from .simulate import METHODS, Trajectory, simulate

SCENARIOS = ("spring_mass", "corridor")
CLASSK_CHOICES = ("linear", "exponential", "rational")
SAFETY_TOL = -1e-6

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSAFE = 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """One run's effective settings.

    ``gain = None`` means the scenario default: the spring-mass benchmark's
    tuned linear coefficient for its safety filter, 0.2 for the corridor,
    1.0 for the chain baseline.
    """

    scenario: str = "corridor"
    method: str = "ttcbf"
    classk: str = "linear"
    gain: float | None = None
    duration: float | None = None
    seed: int = 0
    out: str = "out"
    overrides: dict = field(default_factory=dict)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected {SCENARIOS}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected {METHODS}")
        if self.classk not in CLASSK_CHOICES:
            raise ConfigError(f"unknown class-K kind {self.classk!r}; expected {CLASSK_CHOICES}")
        if self.gain is not None and self.gain < 0:
            raise ConfigError("gain must be nonnegative")
        if self.duration is not None and self.duration < 0:
            raise ConfigError("duration must be nonnegative")

    def effective_gain(self, params) -> float:
        if self.gain is not None:
            return self.gain
        if self.method == "hocbf":
            return 1.0
        if self.scenario == "spring_mass":
            return params.classk_gain
        return 0.2


def _parse_obstacles(text: str) -> tuple:
    """'x1,y1; x2,y2; ...' -> tuple of center pairs."""
    pairs = []
    for i, chunk in enumerate(text.split(";")):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"obstacle {i}: expected 'x,y', got {chunk!r}")
        pairs.append((float(parts[0]), float(parts[1])))
    return tuple(pairs)


def _convert(cls, name: str, value):
    if not isinstance(value, str):
        return value
    default = getattr(cls(), name)
    try:
        if isinstance(default, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {exc}") from exc
    return value


def build_params(config: RunConfig):
    """Scenario parameter object with overrides applied."""
    over = dict(config.overrides)
    if config.scenario == "spring_mass":
        cls = SpringMassParams
    else:
        cls = CorridorParams
        if "obstacles" in over and isinstance(over["obstacles"], str):
            over["obstacles"] = _parse_obstacles(over["obstacles"])
    if config.duration is not None:
        over["duration"] = config.duration
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(over) - fields
    if unknown:
        raise ConfigError(f"unknown {config.scenario} parameter(s): {sorted(unknown)}")
    typed = {name: value if name == "obstacles" else _convert(cls, name, value)
             for name, value in over.items()}
    try:
        return cls(**typed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {config.scenario} parameters: {exc}") from exc


def execute_run(config: RunConfig):
    """Simulate one configuration; returns (trajectory, metrics dict, params)."""
    config.validate()
    params = build_params(config)
    gain = config.effective_gain(params)
    if config.scenario == "spring_mass":
        system, barriers, clfs, nominal, cfg, x0 = spring_mass_setup(params)
        barriers = [dataclasses.replace(barriers[0],
                                        classk=ClassK(config.classk, gain))]
        if config.method == "hocbf":
            cfg.hocbf_alphas = tuple([gain] * 6)
    else:
        ck = ClassK(config.classk, gain)
        system, barriers, clfs, nominal, cfg, x0 = corridor_setup(
            params, ck, adaptive=(config.method == "attcbf"))
        if config.method == "hocbf":
            cfg.hocbf_alphas = (gain, gain)

    t0 = time.perf_counter()
    tr = simulate(system, barriers, clfs, nominal, config.method, cfg, x0)
    wall = time.perf_counter() - t0

    if config.scenario == "corridor":
        metrics = compute_metrics(tr, params).as_dict()
    else:
        x3 = tr.states[:, 2]
        k_peak = int(np.argmax(x3))
        metrics = {
            "peak_x3": float(x3[k_peak]),
            "t_peak": float(tr.t[k_peak]),
            "min_barrier": tr.min_barrier(),
            "infeasible_steps": tr.fallback_count(),
            "position_bound": params.x3_safe,
        }
    metrics["wall_time_s"] = wall
    if tr.n_steps:
        metrics["mean_step_ms"] = 1000.0 * wall / tr.n_steps
    return tr, metrics, params


def _param_echo(params) -> dict:
    d = dataclasses.asdict(params)
    if isinstance(params, CorridorParams):
        d["obstacles"] = [list(c) for c in np.asarray(params.obstacle_array())]
    return d


def write_outputs(out_dir: Path, config: RunConfig, tr: Trajectory, metrics: dict, params):
    out_dir.mkdir(parents=True, exist_ok=True)
    tr.to_csv(out_dir / "trajectory.csv")
    payload = {
        "config": {
            "scenario": config.scenario, "method": config.method,
            "classk": config.classk, "gain": config.effective_gain(params),
            "duration": params.duration, "seed": config.seed,
        },
        "parameters": _param_echo(params),
        "metrics": metrics,
    }
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    lines = [
        f"scenario : {config.scenario}",
        f"method   : {config.method}",
        f"class-K  : {config.classk} (gain {config.effective_gain(params)})",
        f"duration : {params.duration} s ({tr.n_steps} steps)",
        "",
    ]
    lines += [f"{k:18s} {v}" for k, v in metrics.items()]
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")


def run_cell(config: RunConfig) -> tuple[int, dict]:
    """Execute one run and write its outputs; returns (exit code, metrics)."""
    tr, metrics, params = execute_run(config)
    write_outputs(Path(config.out), config, tr, metrics, params)
    unsafe = tr.min_barrier() < SAFETY_TOL
    return (EXIT_UNSAFE if unsafe else EXIT_OK), metrics


def sweep_cells(base: RunConfig, methods: list[str], kinds: list[str],
                gains: list[float]) -> list[RunConfig]:
    """Grid of runs: adaptive cells ignore the gain axis (one cell per kind)."""
    cells = []
    for method in methods:
        for kind in kinds:
            if method == "attcbf":
                cell_gains = [1.0]
            elif method in ("ttcbf", "hocbf"):
                cell_gains = gains
            else:
                cell_gains = [0.0]
            for g in cell_gains:
                name = f"{method}_{kind}" if method == "attcbf" else f"{method}_{kind}_a{g:g}"
                if method == "nominal":
                    name = "nominal"
                cells.append(dataclasses.replace(
                    base, method=method, classk=kind, gain=g,
                    out=str(Path(base.out) / name)))
    # nominal ignores the class-K axis entirely; drop duplicates
    seen, unique = set(), []
    for c in cells:
        if c.out not in seen:
            seen.add(c.out)
            unique.append(c)
    return unique


def run_sweep(base: RunConfig, methods, kinds, gains) -> int:
    cells = sweep_cells(base, methods, kinds, gains)
    if not cells:
        print("error: empty sweep grid", file=sys.stderr)
        return EXIT_CONFIG
    workers = int(os.environ.get("TAYLORCBF_WORKERS", "1"))
    results: list[tuple[int, dict]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]

    rows = []
    for cell, (code, metrics) in zip(cells, results):
        row = {"cell": Path(cell.out).name, "method": cell.method,
               "classk": cell.classk, "gain": cell.gain, "exit": code}
        row.update({k: v for k, v in metrics.items() if not isinstance(v, (list, dict))})
        if "effort" in metrics:
            for j, e in enumerate(metrics["effort"]):
                row[f"effort_u{j + 1}"] = e
        rows.append(row)
    keys = sorted({k for r in rows for k in r}, key=lambda k: (k != "cell", k))
    out = Path(base.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(repr(r[k]) if isinstance(r[k], float) else str(r.get(k, ""))
                              for k in keys) + "\n")
    print(f"wrote {len(rows)} cells to {out / 'comparison.csv'}")
    return max(code for code, _ in results)


def load_config_file(path: str) -> dict:
    """INI config: a [run] section plus optional per-scenario override sections."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    out = {"run": dict(parser["run"]) if parser.has_section("run") else {}}
    for section in ("spring_mass", "corridor", "sweep"):
        if parser.has_section(section):
            out[section] = dict(parser[section])
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taylorcbf",
        description="Safety-filter scenario runner (truncated-Taylor barrier constraints)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", choices=["spring_mass", "spring-mass", "corridor"])
        sp.add_argument("--method")
        sp.add_argument("--classk")
        sp.add_argument("--gain")
        sp.add_argument("--duration", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--config")
    return parser


def _assemble_config(args) -> tuple[RunConfig, dict]:
    """Merge config file with flags (flags win); returns (RunConfig, sweep section)."""
    file_cfg = load_config_file(args.config) if args.config else {"run": {}}
    run_section = dict(file_cfg.get("run", {}))
    sweep_section = dict(file_cfg.get("sweep", {}))

    def pick(flag, key, cast=str):
        if flag is not None:
            return flag
        if key in run_section:
            return cast(run_section.pop(key))
        return None

    cfg = RunConfig()
    scenario = pick(args.scenario, "scenario")
    if scenario:
        cfg.scenario = scenario.replace("-", "_")
    method = pick(args.method, "method")
    if method:
        cfg.method = method
    classk = pick(args.classk, "classk")
    if classk:
        cfg.classk = classk
    gain = pick(args.gain, "gain")
    if gain is not None and not isinstance(gain, float):
        try:
            gain = float(gain)
        except ValueError:
            raise ConfigError(f"bad gain value {gain!r}")
    if gain is not None:
        cfg.gain = gain
    duration = pick(args.duration, "duration", float)
    if duration is not None:
        cfg.duration = duration
    seed = pick(args.seed, "seed", int)
    if seed is not None:
        cfg.seed = seed
    out = pick(args.out, "out")
    if out:
        cfg.out = out
    run_section.pop("scenario", None)
    cfg.overrides = dict(file_cfg.get(cfg.scenario, {}))
    # leftover [run] keys are treated as scenario overrides too
    cfg.overrides.update(run_section)
    return cfg, sweep_section


def _split_list(text, cast=str) -> list:
    return [cast(t.strip()) for t in str(text).split(",") if t.strip()]


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg, _ = _assemble_config(args)
            cfg.validate()
            code, metrics = run_cell(cfg)
            for k, v in metrics.items():
                print(f"{k}: {v}")
            return code
        # sweep: method/classk/gain flags hold comma lists describing the
        # grid, so they bypass the single-run config; an explicitly empty
        # flag means an empty grid, absent flags take the default grid
        grid_flags = (args.method, args.classk, args.gain)
        args.method = args.classk = args.gain = None
        cfg, sweep_sec = _assemble_config(args)
        methods = _split_list(grid_flags[0] if grid_flags[0] is not None
                              else sweep_sec.get("methods", "ttcbf,attcbf"))
        kinds = _split_list(grid_flags[1] if grid_flags[1] is not None
                            else sweep_sec.get("kinds", "linear,exponential,rational"))
        gains = _split_list(grid_flags[2] if grid_flags[2] is not None
                            else sweep_sec.get("gains", "0.2,0.3,0.4"), float)
        if not methods or not kinds or not gains:
            print("error: empty sweep grid", file=sys.stderr)
            return EXIT_CONFIG
        bad = [m for m in methods if m not in METHODS] + \
              [k for k in kinds if k not in CLASSK_CHOICES]
        if bad:
            raise ConfigError(f"unknown sweep values: {bad}")
        return run_sweep(cfg, methods, kinds, gains)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
