import math

import numpy as np
import pytest

from bellspace.config import ScanParam, StateSpec, default_config
from bellspace.errors import DomainError
from bellspace.scan import (
    ScanSpec,
    coordinate_search,
    evaluate,
    grid_points,
    grid_scan,
    landscape_csv,
    refine,
    run_scan,
    violation_objective,
    window_breach,
)
from bellspace.space1 import BellChoice
from bellspace.space2 import particular_case_arm
from bellspace.stats import ProbTable

OPTIMUM = (math.sqrt(2) - 1) / 2
THETAS = ("A.omega1.theta", "A.omega2.theta", "B.omega1.theta", "B.omega2.theta")


def singlet_spec(params, objective="standard", state=None):
    cfg = default_config()
    return ScanSpec(tuple(params), objective, state or cfg.state, cfg.arm_a, cfg.arm_b, cfg.choice)


class TestObjective:
    @pytest.mark.parametrize("c, want", [(-0.5, 0.0), (-1.2071, 0.2071), (0.1, 0.1), (0.0, 0.0), (-1.0, 0.0)])
    def test_window_breach(self, c, want):
        assert window_breach(c) == pytest.approx(want, abs=1e-12)

    def test_uniform_table(self):
        t = ProbTable.uniform(("j", "alpha", "k", "beta"))
        assert violation_objective("standard", t, BellChoice()) == 0

    def test_quasi_negativity(self):
        assert violation_objective("quasi-negativity", ProbTable(("a",), [1.1, -0.1], quasi=True)) == pytest.approx(0.1)

    def test_evaluate_default(self):
        value, raw = evaluate(singlet_spec([ScanParam("A.omega1.theta", 0, 0, 1)]), [0.0])
        assert raw == pytest.approx(-(1 + math.sqrt(2)) / 2, abs=1e-12)
        assert value == pytest.approx(OPTIMUM, abs=1e-12)

    def test_unknown_objective(self):
        with pytest.raises(DomainError):
            singlet_spec([ScanParam("A.r", 0, 1, 2)], objective="fun")

    def test_unknown_parameter(self):
        with pytest.raises(DomainError):
            singlet_spec([ScanParam("A.omega3.theta", 0, 1, 2)])


class TestGrid:
    def test_single_point(self):
        r = grid_scan(singlet_spec([ScanParam("A.omega2.theta", 1.0, 1.0, 1)]))
        assert r.best_x == (1.0,) and r.evaluations == 1 and len(r.grid) == 1

    def test_grid_points_lexicographic(self):
        pts = grid_points(singlet_spec([ScanParam("A.r", 0, 1, 2), ScanParam("B.r", 0.2, 0.4, 3)]))
        assert pts == sorted(pts) and len(pts) == 6

    def test_singlet_coarse_grid(self):
        spec = singlet_spec(
            [ScanParam("A.omega2.theta", 0, 2 * math.pi, 37), ScanParam("B.omega1.theta", 0, 2 * math.pi, 37)]
        )
        r = grid_scan(spec)
        assert r.best_value >= 0.20
        assert len(r.grid) == 37 * 37 and r.skipped == 0

    def test_product_state_never_breaches(self):
        state = StateSpec("product", s_a=(0.3, -0.2, 0.8), s_b=(0.0, 0.6, -0.7))
        spec = singlet_spec(
            [ScanParam("A.omega2.theta", 0, 2 * math.pi, 13), ScanParam("B.omega1.theta", 0, 2 * math.pi, 13)],
            state=state,
        )
        assert grid_scan(spec).best_value == pytest.approx(0, abs=1e-9)

    def test_ties_go_to_smallest_point(self):
        state = StateSpec("product", s_a=(0, 0, 1), s_b=(0, 0, 1))
        r = grid_scan(singlet_spec([ScanParam("A.omega2.theta", 0, math.pi, 5)], state=state))
        assert r.best_x == (0.0,)

    def test_threads_match_serial(self):
        spec = singlet_spec([ScanParam("A.omega2.theta", 0, 2 * math.pi, 9), ScanParam("B.r", 0.1, 0.9, 5)])
        a, b = grid_scan(spec), grid_scan(spec, workers=4)
        assert a.best_x == b.best_x and a.best_value == b.best_value and a.grid == b.grid

    def test_invalid_points_skipped(self):
        spec = singlet_spec([ScanParam("A.r", 0, 1, 3)])
        r = grid_scan(spec)
        # r = 0 makes alpha = +1 impossible, so the conditionals are undefined
        assert r.skipped == 2 and r.best_x == (0.5,)


class TestRefine:
    def test_recovers_optimum(self):
        spec = singlet_spec([ScanParam(n, 0, math.pi, 5) for n in THETAS])
        r = run_scan(spec)
        assert r.best_value == pytest.approx(OPTIMUM, abs=1e-6)
        assert r.best_raw == pytest.approx(-(1 + math.sqrt(2)) / 2, abs=1e-6)

    def test_start_at_optimum(self):
        spec = singlet_spec([ScanParam(n, 0, math.pi, 2) for n in THETAS])
        start = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)
        r = refine(spec, start)
        assert r.best_x == start
        assert r.best_value == pytest.approx(OPTIMUM, abs=1e-12)

    def test_constant_coordinate_unchanged(self):
        # at theta = 0 the azimuth does not affect the setting
        spec = singlet_spec([ScanParam("A.omega1.phi", 0, 1, 2), ScanParam("A.omega2.theta", 0, math.pi, 2)])
        r = refine(spec, (0.7, 1.2))
        assert r.best_x[0] == 0.7
        assert r.best_x[1] != 1.2

    def test_deterministic(self):
        spec = singlet_spec([ScanParam(n, 0, math.pi, 3) for n in THETAS])
        a, b = run_scan(spec), run_scan(spec)
        assert a.best_x == b.best_x and a.trace == b.trace and a.evaluations == b.evaluations

    def test_trace_monotone(self):
        spec = singlet_spec([ScanParam(n, 0, math.pi, 3) for n in THETAS])
        r = run_scan(spec)
        assert all(x <= y for x, y in zip(r.trace, r.trace[1:]))


class TestCoordinateSearch:
    def test_quadratic(self):
        x, best, trace, evals = coordinate_search(lambda v: -((v[0] - 0.3) ** 2) - (v[1] + 0.2) ** 2, [0, 0])
        assert x == pytest.approx([0.3, -0.2], abs=1e-5)
        assert evals <= 10_000

    def test_bounds_clamped(self):
        x, *_ = coordinate_search(lambda v: v[0], [0.5], bounds=[(0, 1)])
        assert x[0] == 1.0

    def test_periodic_wrap(self):
        x, *_ = coordinate_search(lambda v: math.cos(v[0] - 0.1), [6.2], periods=[2 * math.pi])
        assert 0 <= x[0] < 2 * math.pi
        assert x[0] == pytest.approx(0.1, abs=1e-5)

    def test_budget(self):
        _, _, _, evals = coordinate_search(lambda v: float(np.sum(v)), [0.0] * 3, max_evals=50)
        assert evals == 50


class TestQuasiObjective:
    def test_singlet_negativity_scan(self):
        cfg = default_config()
        arm = particular_case_arm(1 / math.sqrt(2))
        spec = ScanSpec((ScanParam("A.r", 0.4, 0.9, 6),), "quasi-negativity", cfg.state, arm, arm)
        r = grid_scan(spec)
        assert r.best_value > 1e-3 and r.best_raw < -1e-3


def test_landscape_csv():
    r = grid_scan(singlet_spec([ScanParam("A.omega2.theta", 0, math.pi, 3)]))
    lines = landscape_csv(r, "standard").strip().split("\n")
    assert lines[0] == "A.omega2.theta,objective,C"
    assert len(lines) == 4
