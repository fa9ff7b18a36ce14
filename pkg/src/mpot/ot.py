"""Entropic optimal transport with the log-domain stabilized Sinkhorn scheme.

The solver keeps a redundant parameterization of the scaling vectors,
``u = u_tilde * exp(a / lam)`` and ``v = v_tilde * exp(b / lam)``, and folds
``u_tilde`` / ``v_tilde`` into the dual potentials ``a`` / ``b`` whenever they
grow beyond ``absorb_threshold``. The kernel is always rebuilt from
``(a + b - C) / lam`` so large costs and potentials cancel before
exponentiation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SinkhornConfig",
    "TransportPlan",
    "SinkhornDivergenceError",
    "solve_entropic_ot",
    "ot_objective",
    "marginal_residual",
    "uniform_histogram",
]

_TINY = np.finfo(np.float64).tiny


class SinkhornDivergenceError(FloatingPointError):
    """Raised when the scaling iterations overflow despite absorption."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (sinkhorn iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver settings.

    ``lam_start`` enables epsilon-scaling: the entropy scale is halved from
    ``lam_start`` down to ``lam``, each stage warm-starting the dual
    potentials of the previous one and running at most ``stage_iters``
    iterations. ``None`` starts directly at ``lam`` from zero potentials.
    """

    lam: float = 0.01
    max_iters: int = 1000
    tol: float = 1e-5
    absorb_threshold: float = 1e3
    lam_start: float | None = None
    stage_iters: int = 200

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.absorb_threshold > 1:
            raise ValueError("absorb_threshold must exceed 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")

    def schedule(self) -> list[float]:
        lams = []
        if self.lam_start is not None:
            lam = float(self.lam_start)
            while lam > self.lam:
                lams.append(lam)
                lam *= 0.5
        lams.append(self.lam)
        return lams


@dataclass
class TransportPlan:
    coupling: np.ndarray
    iterations_used: int
    converged: bool
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    b: np.ndarray
    residual: float = np.inf


def uniform_histogram(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _check_histogram(h, n, name):
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (n,):
        raise ValueError(f"{name} has shape {h.shape}, expected ({n},)")
    if np.any(h <= 0) or abs(h.sum() - 1.0) > 1e-12 * max(1, n):
        raise ValueError(f"{name} must be strictly positive and sum to 1")
    return h


def _kernel(a, b, cost, lam):
    return np.exp((a[:, None] + b[None, :] - cost) / lam)


def solve_entropic_ot(cost, src=None, dst=None, config: SinkhornConfig | None = None) -> TransportPlan:
    """Solve ``min <W, C> - lam * H(W)`` over couplings with marginals ``src``, ``dst``.

    Parameters
    ----------
    cost : array-like, shape (n, m)
        Finite, nonnegative cost matrix.
    src, dst : array-like, optional
        Row and column histograms. Uniform when omitted.
    config : SinkhornConfig, optional

    Returns
    -------
    TransportPlan
        ``converged`` is True once the max-norm marginal residual drops to
        ``config.tol``; otherwise ``iterations_used == config.max_iters``.

    Raises
    ------
    ValueError
        Non-finite or negative cost entries, or malformed histograms.
    SinkhornDivergenceError
        The stabilized kernel or scalings became non-finite.
    """
    cfg = config or SinkhornConfig()
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] < 1 or C.shape[1] < 1:
        raise ValueError(f"cost must be a non-empty 2D array, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        bad = np.argwhere(~np.isfinite(C))[0]
        raise ValueError(f"cost has a non-finite entry at {tuple(int(i) for i in bad)}")
    if np.any(C < 0):
        raise ValueError("cost must be nonnegative")
    n, m = C.shape
    src = uniform_histogram(n) if src is None else _check_histogram(src, n, "src")
    dst = uniform_histogram(m) if dst is None else _check_histogram(dst, m, "dst")

    a = np.zeros(n)
    b = np.zeros(m)
    it = 0
    stages = cfg.schedule()
    for k, lam in enumerate(stages):
        final = k == len(stages) - 1
        budget = cfg.max_iters - it if final else min(cfg.stage_iters, cfg.max_iters - it)
        a, b, u, v, P, used, residual = _stabilized_scaling(
            C, src, dst, lam, a, b, cfg.tol, budget, cfg.absorb_threshold, it
        )
        it += used
        if not final:
            # fold the scalings into the potentials before shrinking lam
            a = a + lam * np.log(u)
            b = b + lam * np.log(v)

    W = u[:, None] * P * v[None, :]
    if not np.all(np.isfinite(W)):
        raise SinkhornDivergenceError("coupling is not finite", it)
    return TransportPlan(W, it, bool(residual <= cfg.tol), u, v, a, b, float(residual))


def _stabilized_scaling(C, src, dst, lam, a, b, tol, max_iters, big, it0):
    n, m = C.shape
    u = np.ones(n)
    v = np.ones(m)
    P = _kernel(a, b, C, lam)
    if not np.all(np.isfinite(P)):
        raise SinkhornDivergenceError("stabilized kernel overflowed", it0)
    Pv = P @ v
    residual = np.inf
    it = 0
    while it < max_iters:
        it += 1
        # floor guards the division when a kernel row underflows entirely
        u = src / np.maximum(Pv, _TINY)
        Ptu = P.T @ u
        v = dst / np.maximum(Ptu, _TINY)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SinkhornDivergenceError("scaling vectors overflowed", it0 + it)

        if u.max() > big or v.max() > big:
            a = a + lam * np.log(u)
            b = b + lam * np.log(v)
            P = _kernel(a, b, C, lam)
            if not np.all(np.isfinite(P)):
                raise SinkhornDivergenceError("stabilized kernel overflowed", it0 + it)
            u = np.ones(n)
            v = np.ones(m)

        Pv = P @ v
        row_err = np.abs(u * Pv - src).max()
        col_err = np.abs(v * (P.T @ u) - dst).max()
        residual = max(row_err, col_err)
        if residual <= tol:
            break
    return a, b, u, v, P, it, residual


def ot_objective(plan: TransportPlan | np.ndarray, cost) -> float:
    W = plan.coupling if isinstance(plan, TransportPlan) else np.asarray(plan)
    C = np.asarray(cost, dtype=np.float64)
    if W.shape != C.shape:
        raise ValueError(f"plan shape {W.shape} does not match cost shape {C.shape}")
    return float(np.sum(W * C))


def marginal_residual(plan: TransportPlan | np.ndarray, src, dst) -> float:
    """Max-norm violation of the row and column marginal constraints."""
    W = plan.coupling if isinstance(plan, TransportPlan) else np.asarray(plan)
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if W.shape != (src.size, dst.size):
        raise ValueError(f"plan shape {W.shape} does not match marginals ({src.size}, {dst.size})")
    return float(max(np.abs(W.sum(axis=1) - src).max(), np.abs(W.sum(axis=0) - dst).max()))
