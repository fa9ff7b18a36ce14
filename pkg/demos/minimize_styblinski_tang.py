"""Drive a cloud of points down the Styblinski-Tang landscape with Sinkhorn Steps.

Prints the batch mean cost and how many points sit in the global basin every
20 iterations. Run: ``python demos/minimize_styblinski_tang.py``.
"""
import numpy as np

from mpot import StepConfig, make_rng, optimize
from mpot.functions import STATIONARY_POINT, styblinski_tang

DIM, N = 4, 500

rng = make_rng(7)
X0 = rng.uniform(-5.0, 5.0, size=(N, DIM))
cfg = StepConfig(polytope="orthoplex", alpha=0.3, beta=0.3, h=5, lam=0.05, eps=0.01)


def report(k, X, info):
    if k % 20 == 19:
        in_basin = np.all(X < 0, axis=1).mean()
        print(f"iter {k + 1:3d}  mean f {styblinski_tang(X).mean():9.3f}  "
              f"in global basin {100 * in_basin:5.1f}%")


X, trace = optimize(X0, cfg, styblinski_tang, rng, max_iters=200, callback=report)
best = X[np.argmin(styblinski_tang(X))]
print("best point", np.round(best, 3), "global minimizer per coordinate", round(STATIONARY_POINT, 3))
