"""Regular-polytope search directions, cosine measures and random rotations."""
from __future__ import annotations

import itertools
from enum import Enum

import numpy as np
from numba import njit

__all__ = [
    "PolytopeKind",
    "vertices",
    "vertex_count",
    "reference_cosine_measure",
    "empirical_cosine_measure",
    "random_rotation",
    "random_rotation_angles",
    "rotation_from_angles",
    "rotate",
    "rotate_batch",
    "rotate_rows",
    "probe_radii",
    "probe_points",
]

MAX_CUBE_DIM = 20


class PolytopeKind(str, Enum):
    SIMPLEX = "simplex"
    ORTHOPLEX = "orthoplex"
    CUBE = "cube"

    @classmethod
    def parse(cls, value) -> "PolytopeKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        aliases = {"d-cube": "cube", "hypercube": "cube", "cross": "orthoplex", "d-orthoplex": "orthoplex"}
        return cls(aliases.get(key, key))


def vertex_count(kind, d: int) -> int:
    kind = PolytopeKind.parse(kind)
    return {PolytopeKind.SIMPLEX: d + 1, PolytopeKind.ORTHOPLEX: 2 * d, PolytopeKind.CUBE: 2**d}[kind]


def _simplex(d: int) -> np.ndarray:
    # standard (d-1)-simplex plus an apex on the diagonal at distance sqrt(2)
    # from every basis vector; of the two admissible apexes take the one below
    # the standard simplex, then recenter and rescale to unit circumradius
    apex = (1.0 - np.sqrt(d + 1.0)) / d * np.ones(d)
    V = np.vstack([np.eye(d), apex])
    V -= V.mean(axis=0)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V


def _orthoplex(d: int) -> np.ndarray:
    V = np.zeros((2 * d, d))
    idx = np.arange(d)
    V[2 * idx, idx] = 1.0
    V[2 * idx + 1, idx] = -1.0
    return V


def _cube(d: int) -> np.ndarray:
    # binary counting, first coordinate most significant, bit 0 -> negative
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    return signs / np.sqrt(d)


def vertices(kind, d: int) -> np.ndarray:
    """Unit-circumradius vertex set of a regular polytope centred at the origin.

    Returns an ``(m, d)`` array with ``m = d + 1`` (simplex), ``2d``
    (orthoplex) or ``2**d`` (cube).
    """
    kind = PolytopeKind.parse(kind)
    if d < 2:
        raise ValueError(f"polytope dimension must be >= 2, got {d}")
    if kind is PolytopeKind.CUBE and d > MAX_CUBE_DIM:
        raise ValueError(f"cube with d={d} has 2**{d} vertices; limit is d <= {MAX_CUBE_DIM}")
    if kind is PolytopeKind.SIMPLEX:
        return _simplex(d)
    if kind is PolytopeKind.ORTHOPLEX:
        return _orthoplex(d)
    return _cube(d)


def reference_cosine_measure(kind, d: int) -> float:
    """Closed-form cosine measure table: 1/sqrt(d(d+1)), 1/sqrt(d), 1/sqrt(2).

    The cube entry is the exact cosine measure only for ``d == 2``; the
    minimum over directions of the best cube-vertex alignment is
    ``1/sqrt(d)`` (attained at the coordinate axes).
    """
    kind = PolytopeKind.parse(kind)
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if kind is PolytopeKind.SIMPLEX:
        return 1.0 / np.sqrt(d * (d + 1.0))
    if kind is PolytopeKind.ORTHOPLEX:
        return 1.0 / np.sqrt(d)
    return 1.0 / np.sqrt(2.0)


def empirical_cosine_measure(directions, trials: int = 100_000, seed=0, samples=None) -> float:
    """Monte-Carlo estimate of ``min_a max_i <a, d_i> / (|a| |d_i|)``.

    The minimum is taken over ``trials`` uniformly random unit vectors (or
    over ``samples`` when given), so the estimate can only overshoot the true
    cosine measure.
    """
    D = np.asarray(directions, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] == 0:
        raise ValueError("direction set must be a non-empty (m, d) array")
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    if samples is None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((trials, D.shape[1]))
    else:
        A = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    A = A / np.linalg.norm(A, axis=1, keepdims=True)
    best = np.empty(A.shape[0])
    chunk = max(1, 2_000_000 // D.shape[0])
    for s in range(0, A.shape[0], chunk):
        best[s : s + chunk] = (A[s : s + chunk] @ D.T).max(axis=1)
    return float(best.min())


def rotation_from_angles(theta) -> np.ndarray:
    """Block-diagonal rotation(s) built from 2x2 planar blocks.

    ``theta`` has shape ``(..., d // 2)``; the result has shape ``(..., d, d)``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    k = theta.shape[-1]
    R = np.zeros(theta.shape[:-1] + (2 * k, 2 * k))
    c, s = np.cos(theta), np.sin(theta)
    idx = 2 * np.arange(k)
    R[..., idx, idx] = c
    R[..., idx, idx + 1] = -s
    R[..., idx + 1, idx] = s
    R[..., idx + 1, idx + 1] = c
    return R


def random_rotation_angles(d: int, rng, size=None) -> np.ndarray:
    if d % 2:
        raise ValueError(f"random rotations are only supported for even dimension, got d={d}")
    shape = (d // 2,) if size is None else (size, d // 2)
    return rng.uniform(0.0, 2.0 * np.pi, size=shape)


def random_rotation(d: int, rng) -> np.ndarray:
    """Random element of the maximal torus of SO(d) for even ``d``."""
    return rotation_from_angles(random_rotation_angles(d, rng))


def rotate(directions, R) -> np.ndarray:
    D = np.asarray(directions, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (D.shape[-1], D.shape[-1]):
        raise ValueError(f"rotation shape {R.shape} does not match direction dim {D.shape[-1]}")
    return D @ R.T


@njit(cache=True)
def _rotate_pairs(V, c, s, out):
    n, k = c.shape
    for t in range(n):
        for i in range(V.shape[0]):
            for l in range(k):
                x = V[i, 2 * l]
                y = V[i, 2 * l + 1]
                out[t, i, 2 * l] = c[t, l] * x - s[t, l] * y
                out[t, i, 2 * l + 1] = s[t, l] * x + c[t, l] * y


def rotate_batch(directions, theta) -> np.ndarray:
    """Rotate one direction set by a batch of block-diagonal rotations.

    Equivalent to ``rotate(directions, rotation_from_angles(theta[t]))`` for
    every ``t`` but applies each 2x2 block in place of a dense matmul.
    Returns shape ``(n, m, d)``.
    """
    D = np.ascontiguousarray(directions, dtype=np.float64)
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    if D.shape[1] != 2 * theta.shape[1]:
        raise ValueError(f"{theta.shape[1]} rotation angles do not match direction dim {D.shape[1]}")
    out = np.empty((theta.shape[0],) + D.shape)
    _rotate_pairs(D, np.cos(theta), np.sin(theta), out)
    return out


def rotate_rows(X, theta) -> np.ndarray:
    """Rotate row ``t`` of ``X`` (shape ``(n, d)``) by the block rotation with angles ``theta[t]``."""
    X = np.asarray(X, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if X.shape[1] != 2 * theta.shape[-1]:
        raise ValueError(f"{theta.shape[-1]} rotation angles do not match vector dim {X.shape[1]}")
    c, s = np.cos(theta), np.sin(theta)
    a, b = X[:, 0::2], X[:, 1::2]
    out = np.empty_like(X)
    out[:, 0::2] = c * a - s * b
    out[:, 1::2] = s * a + c * b
    return out


def probe_radii(beta: float, h: int) -> np.ndarray:
    if not beta > 0:
        raise ValueError("probe radius must be positive")
    if h < 1:
        raise ValueError("need at least one probe per direction")
    return beta * np.arange(1, h + 1) / h


def probe_points(directions, beta: float, h: int) -> np.ndarray:
    """Equidistant probe offsets ``j * beta / h * d_i`` for ``j = 1..h``.

    ``directions`` may carry leading batch axes; the output inserts the probe
    axis before the last one: ``(..., m, h, d)``.
    """
    D = np.asarray(directions, dtype=np.float64)
    r = probe_radii(beta, h)
    return D[..., :, None, :] * r[:, None]
