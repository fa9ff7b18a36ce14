"""Seeded benchmark sweeps: point-mass planning and the smooth-function ablation.

Seeds flow root -> environment -> task -> planner:

* environment ``i`` uses seed ``root_seed + i``;
* its tasks are drawn from ``make_rng((env_seed, TASK_STREAM))``;
* task ``k`` is planned with ``make_rng((env_seed, k, PLAN_STREAM))``.

Every finished task is stored as its own JSON file under ``out/tasks`` so an
interrupted sweep resumes where it stopped, and the CSV is rebuilt from those
rows in sweep order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .functions import get_function
from .metrics import Metrics, aggregate, path_length, smoothness
from .ot import SinkhornConfig, SinkhornDivergenceError
from .planner import PlannerConfig, plan
from .polytope import PolytopeKind
from .step import StepConfig, cosine_similarity_diagnostic, optimize
from .world import InfeasibleEnvironmentError, gen_environment, make_rng, sample_task

__all__ = [
    "BenchConfig",
    "BenchmarkReport",
    "CSV_COLUMNS",
    "run_benchmark",
    "task_row",
    "rows_to_csv",
    "OptFnConfig",
    "run_optfn",
    "atomic_write",
]

TASK_STREAM = 1
PLAN_STREAM = 2
CSV_COLUMNS = ("seed", "task", "time_s", "suc", "good", "S", "PL", "ot_iters_first_q", "ot_iters_last_q")


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@dataclass(frozen=True)
class BenchConfig:
    n_seeds: int = 20
    tasks_per_env: int = 5
    root_seed: int = 0
    n_shapes: int = 15
    min_separation: float = 10.0
    task_margin: float = 0.05
    svg: bool = False
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.n_seeds < 1 or self.tasks_per_env < 1:
            raise ValueError("need at least one seed and one task per environment")

    @property
    def env_seeds(self) -> list[int]:
        return [self.root_seed + i for i in range(self.n_seeds)]

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "planner"}
        out["planner"] = self.planner.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown bench config keys: {sorted(unknown)}")
        if "planner" in data:
            data["planner"] = PlannerConfig.from_dict(data["planner"])
        return cls(**data)


@dataclass
class BenchmarkReport:
    rows: list
    metrics: Metrics
    config: BenchConfig
    csv_text: str

    @property
    def seeds(self) -> list[int]:
        return self.config.env_seeds


def _median(xs) -> float:
    return float(np.median(xs)) if len(xs) else float("nan")


def task_row(seed: int, k: int, result) -> dict:
    """Per-task metrics; S and PL are means over the task's collision-free trajectories."""
    free = np.asarray(result.free, dtype=bool)
    n_free = int(free.sum())
    trajs = result.trajectories
    its = result.trace.ot_iterations
    q = max(1, len(its) // 4)
    return {
        "seed": seed,
        "task": k,
        "time_s": float(result.time_s),
        "suc": int(n_free > 0),
        "good": 100.0 * n_free / free.size,
        "n_free": n_free,
        "S": float(np.mean(smoothness(trajs[free]))) if n_free else float("nan"),
        "PL": float(np.mean(path_length(trajs[free]))) if n_free else float("nan"),
        "ot_iters_first_q": _median(its[:q]),
        "ot_iters_last_q": _median(its[-q:]),
        "initial_cost": float(result.trace.mean_cost[0]) if len(result.trace) else float("nan"),
        "final_cost": float(result.final_mean_cost),
        "diverged": bool(result.diverged),
        # largest per-iteration waypoint move beyond the step radius (normalized units)
        "max_step_excess": max((d - a for d, a in zip(result.trace.max_displacement, result.trace.alpha)),
                               default=float("nan")),
        "error": None,
    }


def _failed_row(seed, k, message) -> dict:
    nan = float("nan")
    return {"seed": seed, "task": k, "time_s": 0.0, "suc": 0, "good": 0.0, "n_free": 0, "S": nan, "PL": nan,
            "ot_iters_first_q": nan, "ot_iters_last_q": nan, "initial_cost": nan, "final_cost": nan,
            "diverged": False, "max_step_excess": nan, "error": message}


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _row_path(out: Path, seed: int, k: int) -> Path:
    return out / "tasks" / f"seed{seed}_task{k}.json"


def run_benchmark(config: BenchConfig, out_dir, progress=None) -> BenchmarkReport:
    """Plan every (environment, task) pair, resuming from rows already on disk.

    Writes ``metrics.csv``, ``summary.json`` and, when ``config.svg`` is set,
    one SVG per task with all trajectories overlaid. Failures (an
    environment without a feasible task, a diverged OT solve) become rows
    with ``suc = 0`` rather than aborting the sweep.
    """
    from .plots import trajectory_svg

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in config.env_seeds:
        env = gen_environment(seed, n_shapes=config.n_shapes)
        task_rng = make_rng((seed, TASK_STREAM))
        for k in range(config.tasks_per_env):
            path = _row_path(out, seed, k)
            # tasks are drawn even when resuming so the rng stream stays aligned
            try:
                task = sample_task(env, task_rng, config.task_margin, config.min_separation)
            except InfeasibleEnvironmentError as err:
                task = None
                message = str(err)
            if path.exists():
                rows.append(json.loads(path.read_text()))
                continue
            if task is None:
                row = _failed_row(seed, k, message)
            else:
                try:
                    result = plan(env, task, config.planner, seed=(seed, k, PLAN_STREAM))
                    row = task_row(seed, k, result)
                    if config.svg:
                        atomic_write(out / "svg" / f"seed{seed}_task{k}.svg",
                                     trajectory_svg(env, result.trajectories, result.free, result.best, task))
                except SinkhornDivergenceError as err:
                    row = _failed_row(seed, k, str(err))
            atomic_write(path, json.dumps(row, sort_keys=True))
            rows.append(row)
            if progress is not None:
                progress(row)
    csv_text = rows_to_csv(rows)
    atomic_write(out / "metrics.csv", csv_text)
    metrics = aggregate(rows)
    summary = {"config": config.to_dict(), "seeds": config.env_seeds, "metrics": metrics.as_dict()}
    atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True))
    return BenchmarkReport(rows, metrics, config, csv_text)


@dataclass(frozen=True)
class OptFnConfig:
    function: str = "styblinski_tang"
    dim: int = 10
    n_points: int = 1000
    polytope: PolytopeKind = PolytopeKind.CUBE
    lam: float = 0.5
    alpha: float = 0.1
    beta: float = 0.1
    h: int = 5
    iters: int = 200
    low: float = -5.0
    high: float = 5.0
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)

    def __post_init__(self):
        object.__setattr__(self, "polytope", PolytopeKind.parse(self.polytope))
        if self.dim % 2:
            raise ValueError(f"dimension must be even for random rotations, got {self.dim}")
        get_function(self.function)


def _optfn_seed(cfg: OptFnConfig, seed: int):
    f = get_function(cfg.function)
    rng = make_rng(seed)
    X0 = rng.uniform(cfg.low, cfg.high, size=(cfg.n_points, cfg.dim))
    step = StepConfig(cfg.polytope, cfg.alpha, cfg.beta, cfg.h, cfg.lam, 0.0, sinkhorn=cfg.sinkhorn)
    cs = np.full(cfg.iters, np.nan)

    def record(k, X, info):
        g = f.gradient(X - info.step)
        cs[k] = np.nanmean(cosine_similarity_diagnostic(info.step, g))

    X, trace = optimize(X0, step, f, rng, cfg.iters, callback=record)
    costs = np.append(trace.mean_cost, float(np.mean(f(X))))
    return cs, costs


def run_optfn(cfg: OptFnConfig, seeds, out_dir=None) -> dict:
    """Run the ablation cell ``(cfg.polytope, cfg.lam)`` over ``seeds``.

    Returns per-iteration arrays ``cs`` and ``cost`` of shape
    ``(len(seeds), iters)`` and ``(len(seeds), iters + 1)``; with ``out_dir``
    also writes ``<function>_<polytope>_lam<lam>.csv`` holding the
    across-seed mean and std per iteration.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    runs = [_optfn_seed(cfg, s) for s in seeds]
    cs = np.array([r[0] for r in runs])
    cost = np.array([r[1] for r in runs])
    out = {"cs": cs, "cost": cost, "config": cfg}
    if out_dir is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("iter", "cs_mean", "cs_std", "cost_mean", "cost_std"))
        for k in range(cfg.iters):
            w.writerow((k, _fmt(float(np.mean(cs[:, k]))), _fmt(float(np.std(cs[:, k]))),
                        _fmt(float(np.mean(cost[:, k]))), _fmt(float(np.std(cost[:, k])))))
        name = f"{cfg.function}_{cfg.polytope.value}_lam{cfg.lam:g}.csv"
        atomic_write(Path(out_dir) / name, buf.getvalue())
        out["path"] = str(Path(out_dir) / name)
    return out
