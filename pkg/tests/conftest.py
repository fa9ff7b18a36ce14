"""Shared fixtures plus two suite-wide hooks.

Every OT solve made anywhere in the session is recorded so the marginal
feasibility check can inspect all of them. Tests marked ``criterion(n, name)``
are tallied and reported as one pass/fail line per criterion at the end.
"""
from __future__ import annotations

import functools

import numpy as np
import pytest

import mpot
import mpot.ot
import mpot.step

OT_LOG: list[tuple[bool, float, float]] = []
_CRITERIA: dict[int, dict] = {}


def _recording(fn):
    @functools.wraps(fn)
    def wrapper(cost, src=None, dst=None, config=None):
        plan = fn(cost, src, dst, config)
        n, m = plan.coupling.shape
        s = mpot.ot.uniform_histogram(n) if src is None else np.asarray(src, dtype=np.float64)
        t = mpot.ot.uniform_histogram(m) if dst is None else np.asarray(dst, dtype=np.float64)
        OT_LOG.append((plan.converged, mpot.ot.marginal_residual(plan, s, t), float(plan.coupling.min())))
        return plan

    return wrapper


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion this test belongs to")
    config.addinivalue_line("markers", "suite_wide: inspects state gathered by the whole session; runs last")
    wrapped = _recording(mpot.ot.solve_entropic_ot)
    mpot.ot.solve_entropic_ot = wrapped
    mpot.step.solve_entropic_ot = wrapped
    mpot.solve_entropic_ot = wrapped


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda it: it.get_closest_marker("suite_wide") is not None)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or rep.failed or rep.skipped:
        n, name = mark.args
        entry = _CRITERIA.setdefault(n, {"name": name, "ok": True, "ran": False})
        entry["ran"] = True
        if rep.failed or rep.skipped:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} ({e['name']}): {'PASS' if e['ok'] else 'FAIL'}")


@pytest.fixture
def rng():
    from mpot.world import make_rng

    return make_rng(1234)
