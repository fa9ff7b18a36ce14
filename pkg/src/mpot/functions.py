"""Smooth test objectives with analytic gradients and closed-form probe means."""
from __future__ import annotations

import numpy as np
from numba import njit

from .polytope import rotate_rows

__all__ = ["StyblinskiTang", "Sphere", "styblinski_tang", "sphere", "get_function", "STATIONARY_POINT"]

# negative root of 4x^3 - 32x + 5 = 0, the global minimiser per coordinate
STATIONARY_POINT = -2.903534027771177


def _radius_moments(radii, k: int) -> list[float]:
    r = np.asarray(radii, dtype=np.float64)
    return [float(np.mean(r**p)) for p in range(1, k + 1)]


@njit(cache=True)
def _st_coefficients(X, m1, m2, m3, m4):
    # mean over r of the quartic in (x + r y), minus its r = 0 value, is
    # y * (c1 + y * (c2 + y * (c3 + y * c4))) per coordinate
    n, d = X.shape
    coef = np.empty((n, d, 4))
    for t in range(n):
        for k in range(d):
            x = X[t, k]
            coef[t, k, 0] = m1 * (4.0 * x**3 - 32.0 * x + 5.0)
            coef[t, k, 1] = m2 * (6.0 * x * x - 16.0)
            coef[t, k, 2] = m3 * 4.0 * x
            coef[t, k, 3] = m4
    return coef


@njit(cache=True)
def _st_probe_mean(X, D, m1, m2, m3, m4, out):
    n, m, d = D.shape
    coef = _st_coefficients(X, m1, m2, m3, m4)
    for t in range(n):
        for i in range(m):
            acc = 0.0
            for k in range(d):
                y = D[t, i, k]
                acc += y * (coef[t, k, 0] + y * (coef[t, k, 1] + y * (coef[t, k, 2] + y * coef[t, k, 3])))
            out[t, i] = 0.5 * acc


@njit(cache=True)
def _st_probe_mean_rotated(X, V, c, s, m1, m2, m3, m4, out):
    # same as _st_probe_mean on the directions V rotated per point by the 2x2 blocks (c, s)
    n, d = X.shape
    m = V.shape[0]
    coef = _st_coefficients(X, m1, m2, m3, m4)
    for t in range(n):
        for i in range(m):
            acc = 0.0
            for l in range(d // 2):
                a = V[i, 2 * l]
                b = V[i, 2 * l + 1]
                y = c[t, l] * a - s[t, l] * b
                k = 2 * l
                acc += y * (coef[t, k, 0] + y * (coef[t, k, 1] + y * (coef[t, k, 2] + y * coef[t, k, 3])))
                y = s[t, l] * a + c[t, l] * b
                k += 1
                acc += y * (coef[t, k, 0] + y * (coef[t, k, 1] + y * (coef[t, k, 2] + y * coef[t, k, 3])))
            out[t, i] = 0.5 * acc


class StyblinskiTang:
    """``f(x) = 0.5 * sum(x_i^4 - 16 x_i^2 + 5 x_i)``."""

    name = "styblinski_tang"

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return 0.5 * np.sum(X**4 - 16.0 * X**2 + 5.0 * X, axis=-1)

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return 0.5 * (4.0 * X**3 - 32.0 * X + 5.0)

    def probe_mean(self, X, D, radii) -> np.ndarray:
        """Exact mean of ``f(x_t + r_j d_ti)`` over the radii via the quartic expansion."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        D = np.ascontiguousarray(D, dtype=np.float64)
        out = np.empty(D.shape[:2])
        _st_probe_mean(X, D, *_radius_moments(radii, 4), out)
        return out + self(X)[:, None]

    def probe_mean_rotated(self, X, V, theta, radii) -> np.ndarray:
        """:meth:`probe_mean` for ``V`` rotated per point by block angles ``theta``, without materializing it."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        V = np.ascontiguousarray(V, dtype=np.float64)
        theta = np.asarray(theta, dtype=np.float64)
        out = np.empty((X.shape[0], V.shape[0]))
        _st_probe_mean_rotated(X, V, np.cos(theta), np.sin(theta), *_radius_moments(radii, 4), out)
        return out + self(X)[:, None]


class Sphere:
    """``f(x) = ||x||^2``."""

    name = "sphere"

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.sum(X * X, axis=-1)

    def gradient(self, X) -> np.ndarray:
        return 2.0 * np.asarray(X, dtype=np.float64)

    def probe_mean(self, X, D, radii) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        D = np.asarray(D, dtype=np.float64)
        m1, m2 = _radius_moments(radii, 2)
        return (self(X)[:, None] + 2.0 * m1 * np.einsum("nd,nmd->nm", X, D)
                + m2 * np.sum(D * D, axis=-1))

    def probe_mean_rotated(self, X, V, theta, radii) -> np.ndarray:
        # <x, R v> = <R^T x, v>, and rotations keep |v|
        X = np.asarray(X, dtype=np.float64)
        V = np.asarray(V, dtype=np.float64)
        m1, m2 = _radius_moments(radii, 2)
        return (self(X)[:, None] + 2.0 * m1 * (rotate_rows(X, -np.asarray(theta)) @ V.T)
                + m2 * np.sum(V * V, axis=-1)[None, :])


styblinski_tang = StyblinskiTang()
sphere = Sphere()

_REGISTRY = {"styblinski_tang": styblinski_tang, "sphere": sphere}


def get_function(name: str):
    try:
        return _REGISTRY[name.lower().replace("-", "_")]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(_REGISTRY)}") from None
