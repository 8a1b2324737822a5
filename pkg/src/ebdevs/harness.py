"""Experiment runner: realisation batches, parameter sweeps and CSV output.

Each run gets its own seed derived from the master seed, the sweep index and
the realisation index, so results do not depend on execution order or on the
number of worker processes.  Time series are sampled on a uniform grid of
201 points between 0 and ``t_end``.
"""

from __future__ import annotations

import configparser
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import ConfigurationError, EBDevsError
from .models import culture, epidemic, network, segregation, sugarscape
from .models.base import resolve_params
from .rng import derive_seed
from .stats import uniform_grid

log = logging.getLogger(__name__)

MODELS = {
    "culture": culture,
    "segregation": segregation,
    "network": network,
    "sugarscape": sugarscape,
    "epidemic": epidemic,
}

GRID_POINTS = 200
MAX_SEED = (1 << 64) - 1


@dataclass
class ExperimentConfig:
    model: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    realisations: int = 1
    sweep: tuple[str, list] | None = None
    t_end: float | None = None
    out_dir: Path = Path("results")
    workers: int = 1

    @property
    def module(self):
        try:
            return MODELS[self.model]
        except KeyError:
            raise ConfigurationError(
                f"unknown model {self.model!r}; choose from {', '.join(MODELS)}"
            ) from None

    def resolved_t_end(self) -> float:
        if self.t_end is not None:
            return float(self.t_end)
        return float(resolve_params(self.module.DEFAULTS, self.params)["t_end"])

    def validate(self) -> None:
        module = self.module
        params = module.check(resolve_params(module.DEFAULTS, self.params))
        if self.sweep is not None:
            key, values = self.sweep
            if key not in module.DEFAULTS:
                raise ConfigurationError(f"sweep key {key!r} is not a parameter of {self.model}")
            if not values:
                raise ConfigurationError("sweep needs at least one value")
            for v in values:
                module.check(resolve_params(module.DEFAULTS, {**self.params, key: v}))
        if not isinstance(self.realisations, int) or self.realisations < 1:
            raise ConfigurationError(f"realisations must be a positive integer, got {self.realisations!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        t_end = self.t_end if self.t_end is not None else params["t_end"]
        if not (t_end >= 0 and math.isfinite(t_end)):
            raise ConfigurationError(f"t_end must be finite and non-negative, got {t_end}")

    def sweep_points(self) -> list[tuple[int, object, dict]]:
        """(sweep index, sweep value, params) for every point of the sweep."""
        if self.sweep is None:
            return [(0, None, dict(self.params))]
        key, values = self.sweep
        return [(i, v, {**self.params, key: v}) for i, v in enumerate(values)]


def run_seed(master: int, sweep_index: int, realisation: int) -> int:
    return derive_seed(master, "run", sweep_index, realisation)


def _split_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def parse_sweep(text: str) -> tuple[str, list[str]]:
    """``"HT: 0.2, 0.35"`` -> ``("HT", ["0.2", "0.35"])``."""
    if ":" not in text:
        raise ConfigurationError(f"sweep must look like 'KEY: v1, v2, ...', got {text!r}")
    key, values = text.split(":", 1)
    return key.strip(), _split_list(values)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI-style config with ``[experiment]`` and ``[params]`` sections.

    ``overrides`` maps key -> string value; experiment keys win over the file,
    anything else is treated as a model parameter.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # parameter names are case sensitive
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigurationError(f"{path}: missing [experiment] section")
    exp = dict(parser["experiment"])
    params = dict(parser["params"]) if parser.has_section("params") else {}
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key in ("model", "seed", "realisations", "t_end", "out_dir", "sweep", "workers"):
            exp[key] = value
        else:
            params[key] = value
    if "model" not in exp:
        raise ConfigurationError(f"{path}: [experiment] needs a model")
    try:
        config = ExperimentConfig(
            model=exp["model"].strip(),
            params=params,
            seed=int(exp.get("seed", 0)),
            realisations=int(exp.get("realisations", 1)),
            sweep=parse_sweep(exp["sweep"]) if exp.get("sweep") else None,
            t_end=float(exp["t_end"]) if exp.get("t_end") else None,
            out_dir=Path(exp.get("out_dir", "results")),
            workers=int(exp.get("workers", 1)),
        )
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    config.validate()
    return config


@dataclass
class RunRecord:
    sweep_index: int
    sweep_value: object
    realisation: int
    seed: int
    csv_path: Path | None
    final: dict
    steps: int
    wall_time: float
    error: str | None = None


@dataclass
class ResultBundle:
    config: ExperimentConfig
    runs: list[RunRecord]
    aggregates: list[Path]
    summary_path: Path

    @property
    def failed(self) -> list[RunRecord]:
        return [r for r in self.runs if r.error is not None]


def _run_task(task) -> dict:
    model, params, seed, t_end = task
    module = MODELS[model]
    grid = uniform_grid(t_end, GRID_POINTS)
    start = time.perf_counter()
    try:
        result = module.run(params, seed, t_end=t_end, sample_times=grid)
    except EBDevsError as exc:
        return {"error": f"{type(exc).__name__}: {exc}", "wall_time": time.perf_counter() - start}
    columns = {}
    for label in module.OBSERVABLES:
        columns[label] = result.series[label].resample(grid).values
    final = {k: v for k, v in result.final.items() if isinstance(v, (int, float)) or v is None}
    return {
        "columns": columns,
        "final": final,
        "steps": result.steps,
        "wall_time": time.perf_counter() - start,
        "error": None,
    }


def write_csv(path: Path, times, columns: dict) -> None:
    labels = list(columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["time", *labels]) + "\n")
        for i, t in enumerate(times):
            row = [repr(float(t))] + [repr(float(columns[k][i])) for k in labels]
            fh.write(",".join(row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and a float matrix (one row per time point)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        return [], np.empty((0, 0))
    header = lines[0].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def aggregate(runs: list[dict]) -> dict:
    """Column-wise mean and population std across runs."""
    out = {}
    for label in runs[0]:
        stack = np.array([r[label] for r in runs], dtype=float)
        out[f"{label}_mean"] = stack.mean(axis=0)
        out[f"{label}_std"] = stack.std(axis=0)
    return out


def run_experiment(config: ExperimentConfig) -> ResultBundle:
    """Run every sweep point x realisation and write CSVs under ``out_dir``."""
    config.validate()
    t_end = config.resolved_t_end()
    grid = uniform_grid(t_end, GRID_POINTS)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks, keys = [], []
    for si, value, params in config.sweep_points():
        for ri in range(config.realisations):
            seed = run_seed(config.seed, si, ri)
            tasks.append((config.model, params, seed, t_end))
            keys.append((si, value, ri, seed))

    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]

    records, aggregates = [], []
    by_sweep: dict[int, list[dict]] = {}
    for (si, value, ri, seed), outcome in zip(keys, outcomes):
        path = None
        if outcome["error"] is None:
            path = out_dir / f"{config.model}_s{si:02d}_r{ri:03d}.csv"
            write_csv(path, grid, outcome["columns"])
            by_sweep.setdefault(si, []).append(outcome["columns"])
        else:
            log.error("run sweep=%d realisation=%d seed=%d failed: %s", si, ri, seed, outcome["error"])
        records.append(
            RunRecord(
                si,
                value,
                ri,
                seed,
                path,
                outcome.get("final", {}),
                outcome.get("steps", 0),
                outcome["wall_time"],
                outcome["error"],
            )
        )
    for si, runs in sorted(by_sweep.items()):
        path = out_dir / f"{config.model}_s{si:02d}_aggregate.csv"
        write_csv(path, grid, aggregate(runs))
        aggregates.append(path)

    summary_path = out_dir / "summary.json"
    summary = {
        "model": config.model,
        "seed": config.seed,
        "t_end": t_end,
        "params": config.params,
        "sweep_key": config.sweep[0] if config.sweep else None,
        "runs": [
            {
                "sweep_index": r.sweep_index,
                "sweep_value": r.sweep_value,
                "realisation": r.realisation,
                "seed": r.seed,
                "csv": r.csv_path.name if r.csv_path else None,
                "final": r.final,
                "steps": r.steps,
                "wall_time": round(r.wall_time, 6),
                "error": r.error,
            }
            for r in records
        ],
    }
    summary_path.write_text(json.dumps(summary, indent=2, default=str) + "\n", encoding="utf-8")
    return ResultBundle(config, records, aggregates, summary_path)


def trace_run(config: ExperimentConfig, out: TextIO) -> dict:
    """Run the first realisation of the first sweep point, writing the event log to ``out``."""
    config.validate()
    _, _, params = config.sweep_points()[0]
    seed = run_seed(config.seed, 0, 0)
    result = config.module.run(params, seed, t_end=config.resolved_t_end(), trace=out)
    return result.final
