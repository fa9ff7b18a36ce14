"""Seeded 2D point-mass worlds: circle/square obstacles, occupancy, tasks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "Circle",
    "Square",
    "Environment2D",
    "Task2D",
    "InfeasibleEnvironmentError",
    "make_rng",
    "gen_environment",
    "occupancy",
    "probe_occupancy",
    "sample_task",
    "collision_free",
    "interpolate_path",
]

LIMITS = ((-10.0, 10.0), (-10.0, 10.0))


class InfeasibleEnvironmentError(RuntimeError):
    pass


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox generator; every seeded draw in the package goes through here."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    def to_dict(self):
        return {"kind": "circle", "center": [float(c) for c in self.center], "radius": float(self.radius)}


@dataclass(frozen=True)
class Square:
    center: tuple[float, float]
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("square half width must be positive")

    def to_dict(self):
        return {"kind": "square", "center": [float(c) for c in self.center], "half_width": float(self.half_width)}


@dataclass
class Environment2D:
    shapes: list = field(default_factory=list)
    limits: tuple = LIMITS
    seed: int | None = None

    def __post_init__(self):
        self._circles = np.array(
            [[*s.center, s.radius] for s in self.shapes if isinstance(s, Circle)], dtype=np.float64
        ).reshape(-1, 3)
        self._squares = np.array(
            [[*s.center, s.half_width] for s in self.shapes if isinstance(s, Square)], dtype=np.float64
        ).reshape(-1, 3)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "limits": [list(map(float, lim)) for lim in self.limits],
            "shapes": [s.to_dict() for s in self.shapes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Environment2D":
        shapes = []
        for s in data.get("shapes", []):
            kind = s.get("kind")
            if kind == "circle":
                shapes.append(Circle(tuple(s["center"]), float(s["radius"])))
            elif kind == "square":
                shapes.append(Square(tuple(s["center"]), float(s["half_width"])))
            else:
                raise ValueError(f"unknown shape kind {kind!r}")
        limits = tuple(tuple(map(float, lim)) for lim in data.get("limits", LIMITS))
        return cls(shapes, limits, data.get("seed"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "Environment2D":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Task2D:
    start: tuple[float, float]
    goal: tuple[float, float]

    def start_state(self) -> np.ndarray:
        return np.array([*self.start, 0.0, 0.0])

    def goal_state(self) -> np.ndarray:
        return np.array([*self.goal, 0.0, 0.0])

    def to_dict(self):
        return {"start": [float(v) for v in self.start], "goal": [float(v) for v in self.goal]}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(map(float, data["start"])), tuple(map(float, data["goal"])))


def gen_environment(seed: int, n_shapes: int = 15, radius: float = 2.0, width: float = 2.0,
                    limits=LIMITS) -> Environment2D:
    """Uniformly scattered circles (radius ``radius``) and squares (full width ``width``)."""
    rng = make_rng(seed)
    (x0, x1), (y0, y1) = limits
    shapes = []
    for _ in range(n_shapes):
        is_circle = rng.random() < 0.5
        center = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        shapes.append(Circle(center, radius) if is_circle else Square(center, width / 2.0))
    return Environment2D(shapes, tuple(map(tuple, limits)), seed)


@njit(cache=True)
def _point_hit(x, y, circles, squares, margin):
    for c in range(circles.shape[0]):
        dx = x - circles[c, 0]
        dy = y - circles[c, 1]
        r = circles[c, 2] + margin
        if dx * dx + dy * dy <= r * r:
            return 1
    m2 = margin * margin
    for s in range(squares.shape[0]):
        dx = abs(x - squares[s, 0]) - squares[s, 2]
        dy = abs(y - squares[s, 1]) - squares[s, 2]
        if dx <= margin and dy <= margin:
            # inflated square has rounded corners
            ex = dx if dx > 0.0 else 0.0
            ey = dy if dy > 0.0 else 0.0
            if ex * ex + ey * ey <= m2:
                return 1
    return 0


@njit(cache=True)
def _occupancy_kernel(px, py, circles, squares, margin, out):
    for k in range(px.shape[0]):
        out[k] = _point_hit(px[k], py[k], circles, squares, margin)


def occupancy(env: Environment2D, points, margin: float = 0.0) -> np.ndarray:
    """Binary occupancy of ``points`` (shape ``(..., 2)``) against obstacles inflated by ``margin``.

    Obstacles are closed sets: a point on the inflated boundary is occupied.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    P = np.asarray(points, dtype=np.float64)
    if P.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of 2")
    flat = P.reshape(-1, 2)
    out = np.empty(flat.shape[0], dtype=np.int8)
    _occupancy_kernel(np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]),
                      env._circles, env._squares, float(margin), out)
    return out.reshape(P.shape[:-1])


@njit(cache=True)
def _probe_occupancy_kernel(origins, dirs, radii, circles, squares, margin, out):
    n, m = out.shape
    h = radii.shape[0]
    rmax = 0.0
    for j in range(h):
        rmax = max(rmax, abs(radii[j]))
    near_c = np.empty_like(circles)
    near_s = np.empty_like(squares)
    for t in range(n):
        ox = origins[t, 0]
        oy = origins[t, 1]
        reach = 0.0
        for i in range(m):
            reach = max(reach, rmax * np.sqrt(dirs[t, i, 0] ** 2 + dirs[t, i, 1] ** 2))
        # obstacles no probe of this point can touch are skipped
        nc = 0
        for c in range(circles.shape[0]):
            lim = reach + circles[c, 2] + margin
            if (ox - circles[c, 0]) ** 2 + (oy - circles[c, 1]) ** 2 <= lim * lim:
                near_c[nc] = circles[c]
                nc += 1
        ns = 0
        for s in range(squares.shape[0]):
            lim = reach + squares[s, 2] + margin
            if abs(ox - squares[s, 0]) <= lim and abs(oy - squares[s, 1]) <= lim:
                near_s[ns] = squares[s]
                ns += 1
        if nc == 0 and ns == 0:
            out[t] = 0.0
            continue
        cs = near_c[:nc]
        ss = near_s[:ns]
        for i in range(m):
            total = 0
            for j in range(h):
                x = ox + radii[j] * dirs[t, i, 0]
                y = oy + radii[j] * dirs[t, i, 1]
                total += _point_hit(x, y, cs, ss, margin)
            out[t, i] = total / h


def probe_occupancy(env: Environment2D, origins, directions, radii, margin: float = 0.0) -> np.ndarray:
    """Mean occupancy over ``origins[t] + radii[j] * directions[t, i]``.

    Same result as averaging :func:`occupancy` over the ``(n, m, h, 2)`` probe
    grid, without materializing it. Returns ``(n, m)``.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    O = np.ascontiguousarray(origins, dtype=np.float64)
    D = np.ascontiguousarray(directions, dtype=np.float64)
    r = np.ascontiguousarray(radii, dtype=np.float64)
    if O.ndim != 2 or O.shape[1] != 2 or D.ndim != 3 or D.shape[0] != O.shape[0] or D.shape[2] != 2:
        raise ValueError("expected origins (n, 2) and directions (n, m, 2)")
    out = np.empty(D.shape[:2])
    _probe_occupancy_kernel(O, D, r, env._circles, env._squares, float(margin), out)
    return out


def sample_task(env: Environment2D, rng, margin: float = 0.05, min_separation: float = 5.0,
                max_tries: int = 10_000) -> Task2D:
    """Rejection-sample a collision-free start/goal pair at least ``min_separation`` apart."""
    (x0, x1), (y0, y1) = env.limits
    lo = np.array([x0, y0])
    hi = np.array([x1, y1])

    def draw_free():
        for _ in range(max_tries):
            p = rng.uniform(lo, hi)
            if occupancy(env, p, margin) == 0:
                return p
        raise InfeasibleEnvironmentError(f"no free point found in {max_tries} draws")

    for _ in range(max_tries):
        start = draw_free()
        goal = draw_free()
        if np.linalg.norm(goal - start) >= min_separation:
            return Task2D(tuple(map(float, start)), tuple(map(float, goal)))
    raise InfeasibleEnvironmentError(f"no start/goal pair {min_separation} m apart in {max_tries} draws")


def interpolate_path(positions, interp: int) -> np.ndarray:
    """Waypoints plus ``interp - 1`` evenly spaced points inside every segment."""
    if interp < 1:
        raise ValueError("interp must be >= 1")
    P = np.asarray(positions, dtype=np.float64)
    s = np.arange(interp) / interp
    seg = P[..., :-1, None, :] + s[:, None] * (P[..., 1:, None, :] - P[..., :-1, None, :])
    seg = seg.reshape(P.shape[:-2] + (-1, P.shape[-1]))
    return np.concatenate([seg, P[..., -1:, :]], axis=-2)


def collision_free(env: Environment2D, positions, interp: int = 5, margin: float = 0.05):
    """True where a path (``(..., T+1, 2)``) never touches an inflated obstacle."""
    dense = interpolate_path(positions, interp)
    occ = occupancy(env, dense, margin)
    free = ~occ.astype(bool).any(axis=-1)
    return bool(free) if free.ndim == 0 else free
