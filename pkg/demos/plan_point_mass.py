"""Plan a batch of point-mass trajectories through a random 2D world and save an SVG.

Run: ``python demos/plan_point_mass.py [out.svg]``.
"""
import sys

from mpot import PlannerConfig, gen_environment, make_rng, plan, sample_task
from mpot.metrics import path_length, smoothness
from mpot.plots import trajectory_svg

env = gen_environment(seed=3)
task = sample_task(env, make_rng((3, 1)), min_separation=10.0)
result = plan(env, task, PlannerConfig(), seed=0)

best = result.trajectories[result.best]
print(f"{int(result.free.sum())}/{len(result.free)} trajectories collision-free in {result.time_s:.1f}s")
print(f"best: length {path_length(best, 2):.2f} m, smoothness {smoothness(best, 2):.3f}")
print(f"mean cost {result.trace.mean_cost[0]:.2f} -> {result.final_mean_cost:.2f}")

out = sys.argv[1] if len(sys.argv) > 1 else "plan.svg"
with open(out, "w") as fh:
    fh.write(trajectory_svg(env, result.trajectories, result.free, result.best, task))
print("wrote", out)
