"""Trajectory quality metrics and their aggregation over a benchmark."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "smoothness",
    "path_length",
    "success_rate",
    "good_rate",
    "Stat",
    "Metrics",
    "aggregate",
]


def smoothness(traj, dim: int | None = None) -> float | np.ndarray:
    """Mean norm of consecutive velocity changes, ``(1/T) sum_t |v_{t+1} - v_t|``.

    ``traj`` is ``(..., T + 1, 2 * d_cfg)`` with velocities in the second half
    of the state, unless ``dim`` gives the configuration dimension explicitly.
    """
    traj = np.asarray(traj, dtype=np.float64)
    if traj.shape[-2] < 3:
        raise ValueError("smoothness needs T >= 2")
    k = traj.shape[-1] // 2 if dim is None else dim
    vel = traj[..., k:]
    out = np.linalg.norm(np.diff(vel, axis=-2), axis=-1).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def path_length(traj, dim: int | None = None) -> float | np.ndarray:
    """Sum of consecutive position-difference norms; positions are the first ``dim`` entries."""
    traj = np.asarray(traj, dtype=np.float64)
    if traj.shape[-2] < 2:
        raise ValueError("path length needs T >= 1")
    k = traj.shape[-1] // 2 if dim is None else dim
    out = np.linalg.norm(np.diff(traj[..., :k], axis=-2), axis=-1).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def success_rate(task_success) -> float:
    """Percentage of tasks with at least one successful trajectory."""
    s = np.asarray(task_success, dtype=bool)
    if s.size == 0:
        raise ValueError("no tasks")
    return 100.0 * float(s.mean())


def good_rate(traj_free) -> float:
    """Percentage of successful trajectories within one task."""
    f = np.asarray(traj_free, dtype=bool)
    if f.size == 0:
        raise ValueError("no trajectories")
    return 100.0 * float(f.mean())


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float

    @classmethod
    def of(cls, values, weights=None) -> "Stat":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            return cls(float("nan"), float("nan"))
        if weights is None:
            return cls(float(v.mean()), float(v.std()))
        w = np.asarray(weights, dtype=np.float64)
        if w.sum() <= 0:
            return cls(float("nan"), float("nan"))
        mu = float(np.average(v, weights=w))
        return cls(mu, float(np.sqrt(np.average((v - mu) ** 2, weights=w))))


@dataclass(frozen=True)
class Metrics:
    plan_time_s: Stat
    success_rate_pct: Stat
    good_pct: Stat
    smoothness: Stat
    path_length: Stat

    def as_dict(self) -> dict:
        return {k: {"mean": v.mean, "std": v.std} for k, v in self.__dict__.items()}


def aggregate(rows) -> Metrics:
    """Benchmark summary from per-task rows.

    Each row needs ``seed``, ``time_s``, ``suc`` (0/1), ``good`` (percent),
    ``n_free``, ``S`` and ``PL``. SUC is computed per environment seed and then
    averaged over seeds; GOOD is averaged over all tasks; S and PL average over
    successful trajectories (each task's mean weighted by its free count).
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to aggregate")
    seeds = sorted({r["seed"] for r in rows})
    suc_per_seed = [success_rate([r["suc"] for r in rows if r["seed"] == s]) for s in seeds]
    ok = [r for r in rows if r["n_free"] > 0]
    w = [r["n_free"] for r in ok]
    return Metrics(
        plan_time_s=Stat.of([r["time_s"] for r in rows]),
        success_rate_pct=Stat.of(suc_per_seed),
        good_pct=Stat.of([r["good"] for r in rows]),
        smoothness=Stat.of([r["S"] for r in ok], w),
        path_length=Stat.of([r["PL"] for r in ok], w),
    )
