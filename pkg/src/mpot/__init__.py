"""Batch zero-order optimization and motion planning with Sinkhorn Steps."""
from .gp import GPSpec, build_precision, sample_prior, straight_line_mean, transition_blocks
from .ot import SinkhornConfig, SinkhornDivergenceError, TransportPlan, solve_entropic_ot
from .planner import PlannerConfig, PlanResult, plan, select_best
from .polytope import PolytopeKind, empirical_cosine_measure, vertices
from .step import StepConfig, StepTrace, anneal, optimize, sinkhorn_step
from .world import Environment2D, Task2D, gen_environment, make_rng, occupancy, sample_task

__all__ = [
    "GPSpec",
    "build_precision",
    "sample_prior",
    "straight_line_mean",
    "transition_blocks",
    "SinkhornConfig",
    "SinkhornDivergenceError",
    "TransportPlan",
    "solve_entropic_ot",
    "PlannerConfig",
    "PlanResult",
    "plan",
    "select_best",
    "PolytopeKind",
    "empirical_cosine_measure",
    "vertices",
    "StepConfig",
    "StepTrace",
    "anneal",
    "optimize",
    "sinkhorn_step",
    "Environment2D",
    "Task2D",
    "gen_environment",
    "make_rng",
    "occupancy",
    "sample_task",
]
