import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitbounds import bounds, engine
from hitbounds.generators import random_graph, unit_path
from hitbounds.graph import WeightedGraph
from hitbounds.refwalk import (
    ParameterError,
    advance_pgf,
    mean_advance_time,
    rate_function,
)

RATIOS = st.floats(1e-8, 1e8, allow_nan=False)
SIZES = st.integers(1, 200)


@given(SIZES, RATIOS)
@settings(max_examples=150, deadline=None)
def test_solve_drift_satisfies_equation(n, ratio):
    g = bounds.solve_drift(n, ratio)
    assert g > 1.0
    lhs = (g - 1.0) ** 2 * g ** (n - 2)
    if math.isfinite(lhs) and lhs > 0.0:
        assert lhs == pytest.approx(2.0 * ratio, rel=1e-8)


def test_solve_drift_monotone_in_ratio():
    values = [bounds.solve_drift(5, r) for r in (0.1, 1.0, 10.0, 1e4)]
    assert all(x < y for x, y in zip(values, values[1:]))


def test_solve_drift_tiny_ratio_degenerates():
    g = bounds.solve_drift(10, 1e-300)
    assert 1.0 <= g <= 1.0 + 1e-10


@given(st.integers(3, 120), RATIOS)
@settings(max_examples=150, deadline=None)
def test_rough_estimate_dominates(n, ratio):
    g_exact = bounds.solve_drift(n, ratio)
    g_rough = bounds.drift_upper_estimate(n, ratio)
    assert g_rough >= g_exact * (1.0 - 1e-12)
    assert (g_rough - 1.0) ** 2 * g_rough ** (n - 2) >= 2.0 * ratio * (1.0 - 1e-12)


def test_drift_from_resistance_unit_path():
    # w_z = 1, r = n, d = n: g = n^(1/(n-1))
    for n in (3, 5, 12):
        g = bounds.drift_from_resistance(unit_path(n))
        assert g == pytest.approx(n ** (1.0 / (n - 1)), rel=1e-12)


def test_drift_from_resistance_needs_distance():
    with pytest.raises(ParameterError):
        bounds.drift_from_resistance(unit_path(1))
    island = WeightedGraph([(0, 1, 1.0), (2, 3, 1.0)], origin=0, targets=[3])
    assert bounds.drift_from_resistance(island) == math.inf


def test_bound_formulas():
    assert bounds.mean_lower_bound(5, 3.0) == 11.0  # 2*5 + 1
    assert bounds.mean_lower_bound(0, 3.0) == 1.0
    assert bounds.mean_lower_bound(5, 1.0) == math.inf
    assert bounds.tail_upper_bound(10, 2.0, 1.5) == pytest.approx(
        math.exp(-10 * rate_function(2.0, 1.5)), rel=1e-12)
    assert bounds.transform_upper_bound(4, 2.0, 0.5) == pytest.approx(
        0.5 * advance_pgf(2.0, 0.5) ** 4, rel=1e-12)
    assert bounds.poly_mean_asymptote(100, 0.0) == pytest.approx(
        2 * 100 ** 2 / (2 * math.log(100)), rel=1e-12)


def test_default_grids():
    grid = bounds.default_a_grid(3.0)
    assert len(grid) == 12
    m = mean_advance_time(3.0)
    assert all(1.0 < a < m for a in grid)
    assert all(x < y for x, y in zip(grid, grid[1:]))
    assert bounds.default_a_grid(1.0) == ()

    betas = bounds.default_beta_grid()
    assert len(betas) == 19
    assert betas[0] == 0.05 and betas[-1] == 0.95


def test_check_report_structure(corpus_sample):
    report = bounds.check_theorem1(corpus_sample[0])
    assert set(report.drift) >= {"weight_ratio", "resistance"}
    kinds = {c.kind for c in report.checks}
    assert kinds == {"mean", "tail", "transform"}
    assert report.all_pass
    assert report.min_margin() > 0.0
    d = report.to_dict()
    assert d["expected"] == report.expected
    assert len(d["checks"]) == len(report.checks)


def test_check_counts_default_grids(corpus_sample):
    report = bounds.check_theorem1(corpus_sample[1])
    per_kind = {}
    for c in report.checks:
        per_kind[c.kind] = per_kind.get(c.kind, 0) + 1
    assert per_kind["mean"] == 2
    assert per_kind["tail"] == 2 * 12
    assert per_kind["transform"] == 2 * 19


def test_check_unreachable_is_vacuous():
    g = WeightedGraph([(0, 1, 1.0), (2, 3, 1.0)], origin=0, targets=[3])
    report = bounds.check_theorem1(g)
    assert report.all_pass
    assert report.expected == math.inf
    assert not report.checks or all(c.vacuous for c in report.checks)


def test_check_adjacent_target_is_trivial():
    g = WeightedGraph([(0, 1, 1.0)], origin=0, targets=[1])
    report = bounds.check_theorem1(g)
    assert report.all_pass
    assert report.n == 0


def test_check_filters_user_a_grid(corpus_sample):
    report = bounds.check_theorem1(corpus_sample[2], a_grid=(1.0, 2.0, 1e9))
    assert any("skipped" in note for note in report.notes)
    assert report.all_pass


def test_mean_bound_below_exact_on_sample(corpus_sample):
    for g in corpus_sample[:20]:
        report = bounds.check_theorem1(g)
        for c in report.checks:
            if c.kind == "mean" and not c.vacuous:
                assert report.expected >= c.bound * (1.0 - 1e-9)


@given(st.integers(0, 100_000))
@settings(max_examples=30, deadline=None)
def test_bounds_hold_on_random_graphs(seed):
    report = bounds.check_theorem1(random_graph(seed=seed))
    assert report.all_pass, report.failures()
