"""Sinkhorn Step: batch zero-order update by entropic-OT barycentric projection.

Every point probes the objective along the vertex directions of a randomly
rotated regular polytope. The mean probe cost per direction forms an
``n x m`` cost matrix; the entropic OT plan against uniform marginals gives
each point a convex weighting of its directions, and the point moves by
``alpha`` times that weighted direction.

An objective is any callable mapping ``(q, d)`` points to ``q`` costs. It may
additionally expose ``probe_mean(X, D, radii)`` returning the ``(n, m)``
matrix of mean probe costs directly (exploiting structure), and
``gradient(X)`` for diagnostics. The optimizer itself never reads gradients.
With random rotations an objective may instead expose
``probe_mean_rotated(X, V, theta, radii)``, taking the shared vertex set and
per-point block angles, so the ``(n, m, d)`` direction tensor is never built.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .ot import SinkhornConfig, solve_entropic_ot
from .polytope import PolytopeKind, probe_radii, random_rotation_angles, rotate_batch, rotate_rows, vertices

__all__ = [
    "StepConfig",
    "StepInfo",
    "StepTrace",
    "build_cost_matrix",
    "barycentric_step",
    "rotated_barycentric_step",
    "draw_directions",
    "probe_mean_costs",
    "normalize_cost_matrix",
    "sinkhorn_step",
    "anneal",
    "optimize",
    "cosine_similarity_diagnostic",
]

# below this spread the probed costs are treated as constant
COST_FLOOR = 1e-12
# probe evaluations per oracle call in the generic path
_CHUNK = 1 << 18


@dataclass(frozen=True)
class StepConfig:
    polytope: PolytopeKind = PolytopeKind.ORTHOPLEX
    alpha: float = 0.1
    beta: float = 0.1
    h: int = 1
    lam: float = 0.01
    eps: float = 0.0
    rotate: bool = True
    scale_floor: float = 0.0
    freeze_mask: np.ndarray | None = field(default=None, compare=False)
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)

    def __post_init__(self):
        object.__setattr__(self, "polytope", PolytopeKind.parse(self.polytope))
        if not 0 < self.alpha <= self.beta:
            raise ValueError(f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        if not 0 <= self.eps < 1:
            raise ValueError("annealing rate must lie in [0, 1)")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if self.scale_floor < 0:
            raise ValueError("scale_floor must be nonnegative")

    def ot_config(self) -> SinkhornConfig:
        return replace(self.sinkhorn, lam=self.lam)


@dataclass
class StepInfo:
    """Diagnostics of one step.

    ``directions`` is ``None`` when the objective evaluated rotated probes
    directly; ``angles`` then holds the per-point rotations of the vertex set.
    """

    step: np.ndarray
    directions: np.ndarray | None
    cost: np.ndarray
    ot_iterations: int
    converged: bool
    alpha: float
    beta: float
    angles: np.ndarray | None = None

    @property
    def max_displacement(self) -> float:
        return float(np.linalg.norm(self.step, axis=1).max()) if self.step.size else 0.0

    @property
    def mean_displacement(self) -> float:
        return float(np.linalg.norm(self.step, axis=1).mean()) if self.step.size else 0.0


@dataclass
class StepTrace:
    mean_cost: list = field(default_factory=list)
    max_displacement: list = field(default_factory=list)
    mean_displacement: list = field(default_factory=list)
    ot_iterations: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    beta: list = field(default_factory=list)

    def append(self, info: StepInfo, mean_cost: float):
        self.mean_cost.append(float(mean_cost))
        self.max_displacement.append(info.max_displacement)
        self.mean_displacement.append(info.mean_displacement)
        self.ot_iterations.append(int(info.ot_iterations))
        self.alpha.append(float(info.alpha))
        self.beta.append(float(info.beta))

    def __len__(self):
        return len(self.mean_cost)

    def as_dict(self) -> dict:
        return {k: list(v) for k, v in self.__dict__.items()}


def probe_mean_costs(X, directions, radii, oracle) -> np.ndarray:
    """Mean oracle value over the probes of every (point, direction) pair."""
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(directions, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    fast = getattr(oracle, "probe_mean", None)
    if fast is not None:
        C = np.asarray(fast(X, D, radii), dtype=np.float64)
        _check_finite(C, "probe_mean")
        return C
    n, m, d = D.shape
    h = radii.size
    C = np.empty((n, m))
    rows = max(1, _CHUNK // (m * h))
    for s in range(0, n, rows):
        pts = X[s : s + rows, None, None, :] + radii[:, None] * D[s : s + rows, :, None, :]
        vals = np.asarray(oracle(pts.reshape(-1, d)), dtype=np.float64).reshape(-1, m, h)
        _check_finite(vals, "oracle", offset=s)
        # fixed-shape reduction keeps the sum order deterministic
        C[s : s + rows] = vals.mean(axis=2)
    return C


def _check_finite(vals, what, offset=0):
    if not np.all(np.isfinite(vals)):
        idx = np.argwhere(~np.isfinite(vals))[0]
        idx = (idx[0] + offset, *idx[1:])
        raise ValueError(f"{what} returned a non-finite value at index {tuple(int(i) for i in idx)}")


def normalize_cost_matrix(C, scale_floor: float = 0.0) -> tuple[np.ndarray, bool]:
    """Shift to a zero minimum and divide by ``max(spread, scale_floor)``.

    Returns ``(C, is_constant)``; a spread below ``COST_FLOOR`` yields zeros.
    A positive ``scale_floor`` stops faint cost differences from being blown
    up to full contrast when the batch spread is small.
    """
    C = np.asarray(C, dtype=np.float64)
    C = C - C.min()
    spread = C.max()
    if spread < COST_FLOOR:
        return np.zeros_like(C), True
    return C / max(spread, scale_floor), False


def build_cost_matrix(X, directions, radii, oracle) -> np.ndarray:
    """Probe-averaged cost matrix, shifted and normalized into [0, 1]."""
    return normalize_cost_matrix(probe_mean_costs(X, directions, radii, oracle))[0]


def draw_angles(d: int, n: int, rng) -> np.ndarray:
    # one rotation per point, drawn for frozen points too so draws stay aligned
    return random_rotation_angles(d, rng, size=n)


def draw_directions(cfg: StepConfig, n: int, d: int, rng) -> np.ndarray:
    """Per-point polytope directions ``(n, m, d)``, randomly rotated unless ``cfg.rotate`` is off."""
    base = vertices(cfg.polytope, d)
    if not cfg.rotate:
        return np.broadcast_to(base, (n,) + base.shape).copy()
    return rotate_batch(base, draw_angles(d, n, rng))


def _row_weights(W):
    W = np.asarray(W)
    return W / np.maximum(W.sum(axis=1, keepdims=True), np.finfo(np.float64).tiny)


def barycentric_step(coupling, directions, alpha: float) -> np.ndarray:
    """``alpha * diag(W 1)^-1 W D`` applied per point with its own direction set."""
    return alpha * np.einsum("nm,nmd->nd", _row_weights(coupling), directions)


def rotated_barycentric_step(coupling, base, angles, alpha: float) -> np.ndarray:
    """:func:`barycentric_step` for directions ``base`` rotated per point; rotation commutes with averaging."""
    return alpha * rotate_rows(_row_weights(coupling) @ base, angles)


def sinkhorn_step(X, cfg: StepConfig, oracle, rng, cost_fn=None, directions=None) -> tuple[np.ndarray, StepInfo]:
    """One batch update ``X + S``.

    ``cost_fn(X, D, radii)`` overrides the oracle-based probe costs; the planner
    uses it to inject neighbour-coupled waypoint costs. Passing ``directions``
    skips the rotation draw (used to retry a step on the same polytopes).
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    radii = probe_radii(cfg.beta, cfg.h)
    fused = (directions is None and cost_fn is None and cfg.rotate
             and getattr(oracle, "probe_mean_rotated", None) is not None)
    D = angles = None
    if fused:
        base = vertices(cfg.polytope, d)
        angles = draw_angles(d, n, rng)
        raw = np.asarray(oracle.probe_mean_rotated(X, base, angles, radii), dtype=np.float64)
        _check_finite(raw, "probe_mean_rotated")
    else:
        D = draw_directions(cfg, n, d, rng) if directions is None else np.asarray(directions, dtype=np.float64)
        raw = cost_fn(X, D, radii) if cost_fn is not None else probe_mean_costs(X, D, radii, oracle)
    C, constant = normalize_cost_matrix(raw, cfg.scale_floor)
    if constant:
        S = np.zeros_like(X)
        iters, converged = 0, True
    else:
        plan = solve_entropic_ot(C, config=cfg.ot_config())
        if fused:
            S = rotated_barycentric_step(plan.coupling, base, angles, cfg.alpha)
        else:
            S = barycentric_step(plan.coupling, D, cfg.alpha)
        iters, converged = plan.iterations_used, plan.converged
    if cfg.freeze_mask is not None:
        S[np.asarray(cfg.freeze_mask, dtype=bool)] = 0.0
    info = StepInfo(S, D, C, iters, converged, cfg.alpha, cfg.beta, angles)
    return X + S, info


def anneal(cfg: StepConfig) -> StepConfig:
    f = 1.0 - cfg.eps
    return replace(cfg, alpha=cfg.alpha * f, beta=cfg.beta * f)


def optimize(X0, cfg: StepConfig, oracle, rng, max_iters: int = 100, displacement_tol: float = 0.0,
             anneal_steps: bool = True, callback=None) -> tuple[np.ndarray, StepTrace]:
    """Iterate Sinkhorn Steps until ``max_iters`` or the mean displacement falls below the tolerance.

    Annealing (when ``anneal_steps`` and ``cfg.eps > 0``) shrinks the radii at
    the start of every iteration. ``callback(k, X, info)`` is called after each
    step.
    """
    X = np.array(X0, dtype=np.float64, copy=True)
    trace = StepTrace()
    for k in range(max_iters):
        if anneal_steps and cfg.eps > 0:
            cfg = anneal(cfg)
        mean_cost = float(np.mean(oracle(X)))
        X, info = sinkhorn_step(X, cfg, oracle, rng)
        trace.append(info, mean_cost)
        if callback is not None:
            callback(k, X, info)
        if info.mean_displacement < displacement_tol:
            break
    return X, trace


def cosine_similarity_diagnostic(steps, gradients) -> np.ndarray:
    """Per-point cosine between the step and the negative gradient; NaN where either vanishes."""
    S = np.asarray(steps, dtype=np.float64)
    G = np.asarray(gradients, dtype=np.float64)
    if S.shape != G.shape:
        raise ValueError(f"shape mismatch: steps {S.shape}, gradients {G.shape}")
    ns = np.linalg.norm(S, axis=-1)
    ng = np.linalg.norm(G, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cs = -np.sum(S * G, axis=-1) / (ns * ng)
    cs[(ns == 0) | (ng == 0)] = np.nan
    return np.clip(cs, -1.0, 1.0)
