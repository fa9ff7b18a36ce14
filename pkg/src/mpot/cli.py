"""Command-line entry point ``mpot``.

Exit status: 0 on success, 1 for invalid input, 2 when the OT solver diverges.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bench import BenchConfig, OptFnConfig, atomic_write, run_benchmark, run_optfn
from .ot import SinkhornDivergenceError
from .planner import PlannerConfig, plan
from .plots import curves_svg, trajectory_svg
from .world import Environment2D, InfeasibleEnvironmentError, Task2D, gen_environment, make_rng, sample_task

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2


def _load_json(path):
    return json.loads(Path(path).read_text())


def cmd_gen_env(args):
    env = gen_environment(args.seed, n_shapes=args.shapes)
    atomic_write(args.out, env.dumps() + "\n")
    return EXIT_OK


def cmd_gen_task(args):
    env = Environment2D.from_dict(_load_json(args.env))
    task = sample_task(env, make_rng(args.seed), args.margin, args.min_separation)
    atomic_write(args.out, json.dumps(task.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_plan(args):
    env = Environment2D.from_dict(_load_json(args.env))
    task = Task2D.from_dict(_load_json(args.task))
    cfg = PlannerConfig.from_dict(_load_json(args.config)) if args.config else PlannerConfig()
    result = plan(env, task, cfg, seed=args.seed)
    atomic_write(args.out, json.dumps(result.to_dict()) + "\n")
    if args.svg:
        atomic_write(args.svg, trajectory_svg(env, result.trajectories, result.free, result.best, task))
    n_free = int(result.free.sum())
    print(f"{n_free}/{len(result.free)} collision-free, best={result.best}, time={result.time_s:.2f}s")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def cmd_bench(args):
    data = _load_json(args.config) if args.config else {}
    if args.n_seeds is not None:
        data["n_seeds"] = args.n_seeds
    if args.tasks is not None:
        data["tasks_per_env"] = args.tasks
    if args.svg:
        data["svg"] = True
    cfg = BenchConfig.from_dict(data)

    def progress(row):
        if not args.quiet:
            print(f"seed={row['seed']} task={row['task']} suc={row['suc']} good={row['good']:.0f} "
                  f"time={row['time_s']:.2f}s", flush=True)

    report = run_benchmark(cfg, args.out, progress)
    m = report.metrics
    print(f"SUC {m.success_rate_pct.mean:.1f} +- {m.success_rate_pct.std:.1f} | "
          f"GOOD {m.good_pct.mean:.1f} +- {m.good_pct.std:.1f} | "
          f"S {m.smoothness.mean:.3f} +- {m.smoothness.std:.3f} | "
          f"PL {m.path_length.mean:.2f} +- {m.path_length.std:.2f} | "
          f"T {m.plan_time_s.mean:.2f}s")
    return EXIT_OK


def cmd_optfn(args):
    cfg = OptFnConfig(function=args.fn, dim=args.dim, n_points=args.points, polytope=args.polytope,
                      lam=args.lam, alpha=args.alpha, beta=args.beta, h=args.h, iters=args.iters)
    res = run_optfn(cfg, range(args.seed0, args.seed0 + args.seeds), args.out)
    cs = res["cs"].mean(axis=0)
    if args.svg:
        out = Path(res["path"]).with_suffix(".svg")
        atomic_write(out, curves_svg({f"{cfg.polytope.value}, lam={cfg.lam:g}": cs},
                                     title=f"{cfg.function} d={cfg.dim}", ylabel="cosine similarity",
                                     bands={f"{cfg.polytope.value}, lam={cfg.lam:g}": res["cs"].std(axis=0)}))
    print(f"wrote {res['path']}; mean CS first 50 iters {cs[:50].mean():.3f}, "
          f"final cost {res['cost'][:, -1].mean():.3f}")
    return EXIT_OK


def cmd_plot(args):
    src = Path(args.input)
    if src.suffix == ".json":
        data = _load_json(src)
        if "plans" not in data:
            raise ValueError(f"{src} is not a trajectory file")
        if not args.env:
            raise ValueError("plotting trajectories needs --env")
        env = Environment2D.from_dict(_load_json(args.env))
        task = Task2D.from_dict(_load_json(args.task)) if args.task else None
        svg = trajectory_svg(env, data["plans"], data.get("free"), data.get("best"), task)
    elif src.suffix == ".csv":
        with src.open() as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "cs_mean" not in rows[0]:
            raise ValueError(f"{src} is not an ablation trace")
        mean = [float(r["cs_mean"]) for r in rows]
        std = [float(r["cs_std"]) for r in rows]
        svg = curves_svg({src.stem: mean}, title=src.stem, ylabel="cosine similarity", bands={src.stem: std})
    else:
        raise ValueError(f"unsupported input {src}")
    atomic_write(args.out, svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpot", description="Batch trajectory optimization with Sinkhorn Steps.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-env", help="generate a random 2D environment")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--shapes", type=int, default=15)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_env)

    s = sub.add_parser("gen-task", help="sample a collision-free start/goal pair")
    s.add_argument("--env", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--margin", type=float, default=0.05)
    s.add_argument("--min-separation", type=float, default=5.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_task)

    s = sub.add_parser("plan", help="plan a batch of trajectories for one task")
    s.add_argument("--env", required=True)
    s.add_argument("--task", required=True)
    s.add_argument("--config", help="planner config JSON (defaults if omitted)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--svg", help="also write an SVG overlay here")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("bench", help="run the point-mass benchmark sweep")
    s.add_argument("--config", help="benchmark config JSON (defaults if omitted)")
    s.add_argument("--out", required=True)
    s.add_argument("--n-seeds", type=int)
    s.add_argument("--tasks", type=int)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("optfn", help="cosine-similarity ablation on a smooth test function")
    s.add_argument("--fn", default="styblinski_tang")
    s.add_argument("--dim", type=int, default=10)
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--polytope", default="cube")
    s.add_argument("--lambda", dest="lam", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--beta", type=float, default=0.1)
    s.add_argument("--h", type=int, default=5)
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--seeds", type=int, default=10)
    s.add_argument("--seed0", type=int, default=0)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_optfn)

    s = sub.add_parser("plot", help="render a trajectory JSON or ablation CSV as SVG")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--env")
    s.add_argument("--task")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SinkhornDivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, KeyError, TypeError, OSError, InfeasibleEnvironmentError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
