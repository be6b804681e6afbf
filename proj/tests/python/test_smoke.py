"""Smoke tests for the Python bindings: frozen arithmetic, a callback-driven
enumeration, and one short end-to-end run from a shipped config."""

import math
import os
import tempfile

import pytest

import mwopt

CONFIG_DIR = os.environ.get("MWOPT_CONFIG_DIR")


def test_geometry_helpers():
    square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    # diameter() is the 2 * max-norm upper bound, not the exact pairwise max.
    assert mwopt.diameter(square) == pytest.approx(2.0 * math.sqrt(2.0))
    assert mwopt.max_point_norm(square) == pytest.approx(math.sqrt(2.0))


def test_step_size_limits():
    # Linear case: the curvature term drops out and only gamma matters.
    assert mwopt.beta_bound(0.05, 0.5, 0.0, 2.0) == pytest.approx(0.5)
    # exp_example geometry: mu * xbar^2 = 1 exactly.
    s = 1.0 / math.sqrt(1.8)
    assert mwopt.beta_bound(0.05, 0.5, 0.6, s * math.sqrt(3.0)) == pytest.approx(
        0.025
    )
    assert mwopt.alpha_bound(0.05, 0.5, 0.4, 0.025, 3, 0.6211, 0.0) == pytest.approx(
        7.20068e-5, rel=1e-4
    )


def test_brackets_shrink_with_k():
    lo_small, hi_small = mwopt.bound_main(100, 0.003, 0.05, 0.0, 8.0, 0.5, 1)
    lo_large, hi_large = mwopt.bound_main(100000, 0.003, 0.05, 0.0, 8.0, 0.5, 1)
    assert lo_small < lo_large <= 0.0
    assert hi_large < hi_small
    assert mwopt.feasibility_cap(1000, 0.003, 8.0) == pytest.approx(
        8.0 / (0.003 * 1000)
    )
    lo, hi = mwopt.bound_slackness(1000, 0.003, 8.0, 0.5, 1)
    assert lo < 0.0 < hi
    lo, hi = mwopt.bound_lagrangian_average(1000, 0.003, 0.05, 8.0, 0.5, 1)
    assert lo == pytest.approx(-hi)
    assert mwopt.tracking_gap_bound(1.0, 0.1, 2.0, 0.0, 1) == pytest.approx(40.0)


def test_bracket_rejects_bad_count():
    with pytest.raises(ValueError):
        mwopt.bound_main(0, 0.003, 0.05, 0.0, 8.0, 0.5, 1)


def test_clipped_accumulator():
    assert mwopt.clipped_accumulator_closed_form(0.0, [2.0, -1.0, 3.0]) == 4.0
    assert mwopt.clipped_accumulator_closed_form(1.0, [-5.0, 2.0]) == 2.0


def test_brute_argmin_callback():
    points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    index, value = mwopt.brute_argmin(lambda x: x[0] - x[1], points)
    assert index == 2
    assert value == -1.0


@pytest.mark.skipif(CONFIG_DIR is None, reason="MWOPT_CONFIG_DIR not set")
def test_run_experiment_end_to_end():
    config = os.path.join(CONFIG_DIR, "custom_quadratic.cfg")
    with tempfile.TemporaryDirectory() as out:
        summary = mwopt.run_experiment(config, out)
        assert summary["exit_code"] == 0
        assert summary["mode"] == "unconstrained"
        assert summary["within_two_epsilon"] is True
        assert summary["f_star"] == pytest.approx(-0.125, abs=1e-6)
        assert os.path.exists(os.path.join(out, "trace.csv"))
        assert os.path.exists(os.path.join(out, "summary.json"))


@pytest.mark.skipif(CONFIG_DIR is None, reason="MWOPT_CONFIG_DIR not set")
def test_bounds_and_oracle_from_config():
    config = os.path.join(CONFIG_DIR, "exp_gap.cfg")
    bounds = mwopt.experiment_bounds(config)
    assert bounds["beta_limit"] == pytest.approx(0.025, rel=1e-9)
    assert len(bounds["brackets"]) == 5

    oracle = mwopt.experiment_oracle(config, [0.0, 0.0, 0.0])
    assert oracle["f_star"] == pytest.approx(4.095074, rel=1e-4)
    assert oracle["q_lambda"] == pytest.approx(3.0, abs=1e-6)

    with pytest.raises(ValueError):
        mwopt.experiment_oracle(config, [-1.0, 0.0, 0.0])
