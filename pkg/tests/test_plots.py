import numpy as np
import pytest

from mpot.plots import curves_svg, trajectory_svg
from mpot.world import Environment2D, Task2D, gen_environment


def straight(n=5):
    return np.column_stack([np.linspace(-5, 5, n), np.zeros(n), np.ones(n), np.zeros(n)])


def test_empty_environment_single_trajectory():
    svg = trajectory_svg(Environment2D([]), straight())
    assert svg.count("<polyline") == 1
    assert 'class="obstacle"' not in svg


def test_every_obstacle_drawn():
    svg = trajectory_svg(gen_environment(0), straight()[None])
    assert svg.count('class="obstacle"') == 15


def test_byte_deterministic():
    env = gen_environment(4)
    trajs = np.random.default_rng(0).normal(size=(3, 6, 4))
    a = trajectory_svg(env, trajs, [True, False, True], 2, Task2D((0, 0), (1, 1)))
    b = trajectory_svg(env, trajs, [True, False, True], 2, Task2D((0, 0), (1, 1)))
    assert a == b
    assert a.count('class="marker"') == 2
    # the best path is drawn last, on top
    assert a.rindex('stroke-width="2.5"') > a.rindex('stroke-width="0.8"')


def test_curves():
    svg = curves_svg({"a": [1.0, 0.5, 0.2], "b": [0.0, np.nan, 0.3]}, title="t", bands={"a": [0.1, 0.1, 0.1]})
    assert svg.count('class="series"') == 2
    assert svg.count('class="band"') == 1
    assert svg == curves_svg({"a": [1.0, 0.5, 0.2], "b": [0.0, np.nan, 0.3]}, title="t",
                             bands={"a": [0.1, 0.1, 0.1]})
    with pytest.raises(ValueError):
        curves_svg({})
