"""Constant-velocity Gaussian-process trajectory prior.

States are ordered ``[position (d_cfg), velocity (d_cfg)]``. The power
spectral density is isotropic, ``Qc = qc * I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

__all__ = [
    "GPSpec",
    "TransitionBlocks",
    "transition_blocks",
    "straight_line_mean",
    "difference_operator",
    "noise_precision",
    "build_precision",
    "prior_covariance",
    "sample_prior",
    "transition_cost",
]


@dataclass(frozen=True)
class GPSpec:
    """Parameters of the constant-velocity prior.

    ``sigma_init`` scales the prior covariance used for initial samples:
    ``K0 = sigma_init**2 * inv(K^-1)``.
    """

    dim: int = 2
    dt: float = 0.1
    qc: float = 1.0
    sigma_start: float = 1e-3
    sigma_goal: float = 1e-3
    sigma_init: float = 0.5
    goal_conditioned: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("configuration dimension must be >= 1")
        for name in ("dt", "qc", "sigma_start", "sigma_goal"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_init < 0:
            raise ValueError("sigma_init must be nonnegative")

    @property
    def state_dim(self) -> int:
        return 2 * self.dim


@dataclass(frozen=True)
class TransitionBlocks:
    phi: np.ndarray
    q: np.ndarray
    q_inv: np.ndarray


def transition_blocks(spec: GPSpec) -> TransitionBlocks:
    dt, qc, I = spec.dt, spec.qc, np.eye(spec.dim)
    phi = np.kron(np.array([[1.0, dt], [0.0, 1.0]]), I)
    q = qc * np.kron(np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]]), I)
    q_inv = np.kron(np.array([[12.0 / dt**3, -6.0 / dt**2], [-6.0 / dt**2, 4.0 / dt]]), I) / qc
    return TransitionBlocks(phi, q, q_inv)


def straight_line_mean(start, goal, T: int, dt: float, dim: int | None = None) -> np.ndarray:
    """Constant-velocity line from ``start`` to ``goal`` over ``T`` steps.

    ``start`` and ``goal`` are positions, or full states when ``dim`` gives
    the configuration dimension (only the first ``dim`` entries are used).
    Returns ``(T + 1, 2 * d_cfg)``.
    """
    if T < 1:
        raise ValueError("horizon must be at least one step")
    start = np.asarray(start, dtype=np.float64).ravel()
    goal = np.asarray(goal, dtype=np.float64).ravel()
    if start.shape != goal.shape:
        raise ValueError("start and goal must have the same shape")
    k = start.size if dim is None else dim
    p0, p1 = start[:k], goal[:k]
    s = np.arange(T + 1)[:, None] / T
    pos = p0 + s * (p1 - p0)
    vel = np.broadcast_to((p1 - p0) / (T * dt), pos.shape)
    return np.hstack([pos, vel])


def difference_operator(spec: GPSpec, T: int) -> sp.csr_matrix:
    """Sparse lifted-difference matrix: start prior row, T transitions, goal row."""
    d = spec.state_dim
    phi = transition_blocks(spec).phi
    n_rows = T + 2 if spec.goal_conditioned else T + 1
    blocks = [[None] * (T + 1) for _ in range(n_rows)]
    I = sp.identity(d, format="csr")
    blocks[0][0] = I
    for t in range(T):
        blocks[t + 1][t] = sp.csr_matrix(-phi)
        blocks[t + 1][t + 1] = I
    if spec.goal_conditioned:
        blocks[T + 1][T] = I
    for j in range(T + 1):
        if all(blocks[i][j] is None for i in range(n_rows)):
            blocks[0][j] = sp.csr_matrix((d, d))
    return sp.bmat(blocks, format="csr")


def noise_precision(spec: GPSpec, T: int) -> sp.csr_matrix:
    d = spec.state_dim
    q_inv = transition_blocks(spec).q_inv
    diag = [np.eye(d) / spec.sigma_start**2] + [q_inv] * T
    if spec.goal_conditioned:
        diag.append(np.eye(d) / spec.sigma_goal**2)
    return sp.block_diag(diag, format="csr")


def build_precision(spec: GPSpec, T: int) -> sp.csr_matrix:
    """Block-tridiagonal trajectory precision ``D^T Q^-1 D``."""
    if T < 2:
        raise ValueError("horizon must be >= 2")
    D = difference_operator(spec, T)
    return (D.T @ noise_precision(spec, T) @ D).tocsr()


def prior_covariance(spec: GPSpec, T: int) -> np.ndarray:
    """Dense initialization covariance ``sigma_init**2 * inv(K^-1)``."""
    K_inv = build_precision(spec, T).toarray()
    L = np.linalg.cholesky(K_inv)
    L_inv = np.linalg.solve(L, np.eye(L.shape[0]))
    K = L_inv.T @ L_inv
    return spec.sigma_init**2 * 0.5 * (K + K.T)


def sample_prior(spec: GPSpec, start, goal, n_samples: int, T: int, rng) -> np.ndarray:
    """Draw trajectories ``N(mu0, K0)`` around the straight-line mean.

    Returns ``(n_samples, T + 1, 2 * d_cfg)``.
    """
    mu = straight_line_mean(start, goal, T, spec.dt, dim=spec.dim)
    K_inv = build_precision(spec, T).toarray()
    try:
        L = np.linalg.cholesky(K_inv)
    except np.linalg.LinAlgError as err:
        raise RuntimeError("GP precision is not positive definite; assembly bug") from err
    # x = mu + sigma_init * L^-T z has covariance sigma_init^2 (L L^T)^-1
    z = rng.standard_normal((n_samples, L.shape[0]))
    dev = solve_triangular(L, z.T, lower=True, trans="T").T
    return mu[None] + spec.sigma_init * dev.reshape(n_samples, T + 1, spec.state_dim)


def transition_cost(x_t, x_next, blocks: TransitionBlocks) -> np.ndarray | float:
    """``0.5 * ||Phi x_t - x_next||^2`` in the ``Q^-1`` metric, batched over leading axes."""
    x_t = np.asarray(x_t, dtype=np.float64)
    x_next = np.asarray(x_next, dtype=np.float64)
    if x_t.shape[-1] != blocks.phi.shape[0] or x_next.shape[-1] != blocks.phi.shape[0]:
        raise ValueError("state dimension does not match transition blocks")
    r = x_t @ blocks.phi.T - x_next
    out = 0.5 * np.einsum("...i,ij,...j->...", r, blocks.q_inv, r)
    return float(out) if out.ndim == 0 else out
