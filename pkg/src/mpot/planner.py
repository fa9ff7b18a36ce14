"""Batch trajectory optimization for the 2D point mass via Sinkhorn Steps.

All ``N_p`` trajectories of ``T + 1`` waypoints are flattened into one batch
of ``N_p * (T + 1)`` points in the normalized state space. Each waypoint's
probe cost combines binary occupancy with the constant-velocity transition
cost to both of its neighbours; endpoints are frozen.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .gp import GPSpec, TransitionBlocks, sample_prior, transition_blocks, transition_cost
from .ot import SinkhornConfig, SinkhornDivergenceError
from .polytope import PolytopeKind
from .step import StepConfig, StepTrace, anneal, draw_directions, normalize_cost_matrix, sinkhorn_step
from .world import Environment2D, Task2D, collision_free, make_rng, occupancy, probe_occupancy

__all__ = [
    "StateBounds",
    "PlannerConfig",
    "PlanResult",
    "normalize_states",
    "denormalize_states",
    "waypoint_cost_matrix",
    "trajectory_costs",
    "plan",
    "select_best",
]


@dataclass(frozen=True)
class StateBounds:
    """Per-dimension affine box ``[low, high]`` mapped onto ``[-1, 1]``."""

    low: tuple
    high: tuple

    def __post_init__(self):
        lo = np.asarray(self.low, dtype=np.float64)
        hi = np.asarray(self.high, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be two 1D sequences of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(hi <= lo):
            raise ValueError("degenerate bounds: every high must exceed its low")

    @classmethod
    def for_point_mass(cls, limits, vel_limit: float) -> "StateBounds":
        (x0, x1), (y0, y1) = limits
        return cls((x0, y0, -vel_limit, -vel_limit), (x1, y1, vel_limit, vel_limit))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.low) + np.asarray(self.high))

    @property
    def half_range(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.high) - np.asarray(self.low))


def normalize_states(batch, bounds: StateBounds) -> np.ndarray:
    return (np.asarray(batch, dtype=np.float64) - bounds.center) / bounds.half_range


def denormalize_states(batch, bounds: StateBounds) -> np.ndarray:
    return np.asarray(batch, dtype=np.float64) * bounds.half_range + bounds.center


@dataclass(frozen=True)
class PlannerConfig:
    n_plans: int = 100
    horizon: int = 64
    polytope: PolytopeKind = PolytopeKind.CUBE
    alpha0: float = 0.38
    beta0: float = 0.5
    h: int = 10
    eps: float = 0.032
    lam: float = 0.01
    eta: float = 10.0
    cost_floor: float | None = None
    gp: GPSpec = field(default_factory=lambda: GPSpec(dim=2, dt=1.0, qc=1000.0, sigma_init=0.001))
    margin: float = 0.05
    vel_limit: float = 1.0
    max_iters: int = 100
    displacement_tol: float = 0.0
    pin_start: bool = True
    pin_goal: bool = True
    interp: int = 5
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)

    def __post_init__(self):
        object.__setattr__(self, "polytope", PolytopeKind.parse(self.polytope))
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if self.n_plans < 1:
            raise ValueError("need at least one trajectory")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        # validates the step invariants up front
        self.step_config()

    def step_config(self, freeze_mask=None) -> StepConfig:
        return StepConfig(self.polytope, self.alpha0, self.beta0, self.h, self.lam, self.eps,
                          True, self.scale_floor, freeze_mask, self.sinkhorn)

    @property
    def scale_floor(self) -> float:
        # by default one obstacle hit is the unit of contrast, whatever the GP spread
        return self.eta if self.cost_floor is None else self.cost_floor

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("gp", "sinkhorn")}
        out["polytope"] = self.polytope.value
        out["gp"] = dict(self.gp.__dict__)
        out["sinkhorn"] = dict(self.sinkhorn.__dict__)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PlannerConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown planner config keys: {sorted(unknown)}")
        if "gp" in data:
            gp = dict(PlannerConfig().gp.__dict__)
            gp.update(data["gp"])
            data["gp"] = GPSpec(**gp)
        if "sinkhorn" in data:
            data["sinkhorn"] = SinkhornConfig(**data["sinkhorn"])
        return cls(**data)


@dataclass
class PlanResult:
    """Output of :func:`plan`.

    ``trajectories`` are de-normalized, shape ``(N_p, T + 1, 4)``.
    ``final_mean_cost`` is the batch mean cost after the last step; the trace
    holds the mean cost before each step.
    """

    trajectories: np.ndarray
    costs: np.ndarray
    free: np.ndarray
    best: int
    time_s: float
    trace: StepTrace
    final_mean_cost: float
    diverged: bool = False
    retries: int = 0

    @property
    def best_free(self) -> bool:
        return bool(self.free[self.best])

    def to_dict(self) -> dict:
        return {
            "plans": self.trajectories.tolist(),
            "costs": [float(c) for c in self.costs],
            "free": [bool(f) for f in self.free],
            "best": int(self.best),
            "time_s": float(self.time_s),
        }


def _radius_moments(radii):
    r = np.asarray(radii, dtype=np.float64)
    return float(r.mean()), float(np.mean(r * r))


def waypoint_cost_matrix(trajs, directions, radii, env: Environment2D, blocks: TransitionBlocks,
                         bounds: StateBounds, eta: float = 1.0, margin: float = 0.05,
                         normalize: bool = True, scale_floor: float | None = None) -> np.ndarray:
    """Mean probe cost of every (waypoint, direction) pair.

    Parameters
    ----------
    trajs : (N_p, T + 1, 2 * d_cfg) physical states; rows are flattened
        trajectory-major.
    directions : (N_p * (T + 1), m, 2 * d_cfg) unit directions in normalized space.
    radii : probe distances along each direction (normalized units).

    A candidate placement of waypoint ``t`` is ``x_t + r * diag(half_range) d``.
    Its cost is ``eta * occupancy`` of the candidate position plus the
    transition cost from ``x_{t-1}`` to the candidate and from the candidate
    to ``x_{t+1}``, with neighbours held at their current values. Transition
    terms are quadratic in ``r`` so their probe means use the first two radius
    moments exactly.
    """
    trajs = np.asarray(trajs, dtype=np.float64)
    n_plans, n_wp, ds = trajs.shape
    X = trajs.reshape(-1, ds)
    Y = np.asarray(directions, dtype=np.float64) * bounds.half_range
    radii = np.asarray(radii, dtype=np.float64)
    m1, m2 = _radius_moments(radii)
    dcfg = ds // 2

    C = np.zeros(Y.shape[:2])
    if eta > 0:
        C += eta * probe_occupancy(env, X[:, :dcfg], Y[..., :dcfg], radii, margin)

    Yt = Y.reshape(n_plans, n_wp, -1, ds)
    Ct = C.reshape(n_plans, n_wp, -1)
    phi, qi = blocks.phi, blocks.q_inv
    # residual of segment t: Phi x_t - x_{t+1}
    e = trajs[:, :-1] @ phi.T - trajs[:, 1:]
    base = 0.5 * np.einsum("pti,ij,ptj->pt", e, qi, e)[..., None]
    eq = e @ qi
    # forward term of row t: 0.5 |e_t + r Phi y|^2
    A = Yt[:, :-1] @ phi.T
    Ct[:, :-1] += (base + m1 * np.einsum("pti,ptmi->ptm", eq, A)
                   + 0.5 * m2 * np.sum((A @ qi) * A, axis=-1))
    # backward term of row t + 1: 0.5 |e_t - r y|^2
    B = Yt[:, 1:]
    Ct[:, 1:] += (base - m1 * np.einsum("pti,ptmi->ptm", eq, B)
                  + 0.5 * m2 * np.sum((B @ qi) * B, axis=-1))
    if not normalize:
        return C
    return normalize_cost_matrix(C, eta if scale_floor is None else scale_floor)[0]


def trajectory_costs(trajs, env: Environment2D, blocks: TransitionBlocks, eta: float = 1.0,
                     margin: float = 0.05) -> np.ndarray:
    """Per-trajectory ``eta * sum_t occupancy(x_t) + sum_t transition_cost(x_t, x_{t+1})``."""
    trajs = np.asarray(trajs, dtype=np.float64)
    dcfg = trajs.shape[-1] // 2
    occ = occupancy(env, trajs[..., :dcfg], margin).sum(axis=-1)
    gp = transition_cost(trajs[:, :-1], trajs[:, 1:], blocks).sum(axis=-1)
    return eta * occ + gp


def select_best(costs, free) -> tuple[int, bool]:
    """Lowest-cost collision-free index, else the global lowest cost; returns ``(index, is_free)``."""
    costs = np.asarray(costs, dtype=np.float64)
    free = np.asarray(free, dtype=bool)
    if costs.size == 0:
        raise ValueError("empty batch")
    if free.any():
        idx = np.flatnonzero(free)
        best = int(idx[np.argmin(costs[idx])])
    else:
        best = int(np.argmin(costs))
    return best, bool(free[best])


def _freeze_mask(cfg: PlannerConfig) -> np.ndarray:
    mask = np.zeros((cfg.n_plans, cfg.horizon + 1), dtype=bool)
    mask[:, 0] = cfg.pin_start
    mask[:, -1] = cfg.pin_goal
    return mask.ravel()


def plan(env: Environment2D, task: Task2D, cfg: PlannerConfig | None = None, seed=0,
         callback=None) -> PlanResult:
    """Optimize ``cfg.n_plans`` trajectories from ``task.start`` to ``task.goal``.

    Initial trajectories are drawn from the GP prior around the straight line.
    Each iteration anneals the radii, draws fresh per-waypoint rotations,
    builds the waypoint cost matrix and applies one Sinkhorn Step. A step
    whose OT solve diverges is retried once with doubled ``lam``; a second
    failure stops the loop and flags the result as diverged.
    """
    cfg = cfg or PlannerConfig()
    t0 = time.perf_counter()
    rng = make_rng(seed)
    spec = cfg.gp
    blocks = transition_blocks(spec)
    bounds = StateBounds.for_point_mass(env.limits, cfg.vel_limit)
    T = cfg.horizon

    init = sample_prior(spec, np.asarray(task.start), np.asarray(task.goal), cfg.n_plans, T, rng)
    Xn = normalize_states(init, bounds).reshape(-1, spec.state_dim)
    step_cfg = cfg.step_config(_freeze_mask(cfg))
    trace = StepTrace()
    diverged = False
    retries = 0

    def cost_fn(Xq, D, radii):
        trajs = denormalize_states(Xq, bounds).reshape(cfg.n_plans, T + 1, -1)
        return waypoint_cost_matrix(trajs, D, radii, env, blocks, bounds, cfg.eta, cfg.margin, normalize=False)

    def batch_cost(Xq):
        trajs = denormalize_states(Xq, bounds).reshape(cfg.n_plans, T + 1, -1)
        return trajectory_costs(trajs, env, blocks, cfg.eta, cfg.margin)

    for k in range(cfg.max_iters):
        if step_cfg.eps > 0:
            step_cfg = anneal(step_cfg)
        mean_cost = float(batch_cost(Xn).mean())
        D = draw_directions(step_cfg, Xn.shape[0], Xn.shape[1], rng)
        try:
            X_new, info = sinkhorn_step(Xn, step_cfg, None, rng, cost_fn=cost_fn, directions=D)
        except SinkhornDivergenceError:
            retries += 1
            try:
                X_new, info = sinkhorn_step(Xn, replace(step_cfg, lam=2.0 * step_cfg.lam), None, rng,
                                            cost_fn=cost_fn, directions=D)
            except SinkhornDivergenceError:
                diverged = True
                break
        Xn = X_new
        trace.append(info, mean_cost)
        if callback is not None:
            callback(k, Xn, info)
        if info.mean_displacement < cfg.displacement_tol:
            break

    trajs = denormalize_states(Xn, bounds).reshape(cfg.n_plans, T + 1, -1)
    costs = trajectory_costs(trajs, env, blocks, cfg.eta, cfg.margin)
    free = np.asarray(collision_free(env, trajs[..., :2], cfg.interp, cfg.margin), dtype=bool).reshape(-1)
    if diverged:
        free[:] = False
    best, _ = select_best(costs, free)
    return PlanResult(trajs, costs, free, best, time.perf_counter() - t0, trace,
                      float(costs.mean()), diverged, retries)
