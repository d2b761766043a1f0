import math

import numpy as np
import pytest

from hitbounds import engine
from hitbounds.corpus import corpus_graph
from hitbounds.generators import (
    biased_line,
    concatenated_fast,
    fast_path_expected,
    poly_growth_drift,
    unit_path,
)
from hitbounds.graph import GraphError, WeightedGraph
from hitbounds.montecarlo import (
    SimConfig,
    escape_ratios,
    estimate_tail,
    simulate_hitting,
    to_csv_text,
)
from hitbounds.refwalk import BiasedWalk, ParameterError


def test_simconfig_validation():
    SimConfig(seed=0, replications=1, max_steps=1)
    with pytest.raises(ParameterError):
        SimConfig(seed=-1, replications=1, max_steps=1)
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=0, max_steps=1)
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=0)
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=9, estimator="median")
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=9, record_steps=(3, 2))
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=9, record_steps=(2, 2))
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=9, record_steps=(10,))
    with pytest.raises(ParameterError):
        SimConfig(seed=0, replications=1, max_steps=9, record_steps=(0,))


def test_simconfig_frozen():
    cfg = SimConfig(seed=0, replications=1, max_steps=1)
    with pytest.raises(AttributeError):
        cfg.seed = 5


def test_hitting_deterministic():
    cfg = SimConfig(seed=5, replications=40, max_steps=10_000)
    a = simulate_hitting(unit_path(3), cfg)
    b = simulate_hitting(unit_path(3), cfg)
    assert (a.times == b.times).all()
    assert (a.censored == b.censored).all()
    assert to_csv_text(a) == to_csv_text(b)


def test_replications_use_isolated_streams():
    # replication r depends only on (seed, r), not on the batch size
    small = simulate_hitting(unit_path(4),
                             SimConfig(seed=8, replications=2, max_steps=50_000))
    large = simulate_hitting(unit_path(4),
                             SimConfig(seed=8, replications=7, max_steps=50_000))
    assert (large.times[:2] == small.times).all()


def _reference_times(graph, seed, replications, max_steps):
    """Scalar per-replication walker consuming the documented stream layout."""
    weights = graph.vertex_weights
    out = []
    for r in range(replications):
        rng = np.random.Generator(np.random.Philox(key=(seed, r)))
        blocks = []
        pos = graph.origin_index
        t = max_steps
        for k in range(1, max_steps + 1):
            idx = k - 1
            if idx % 256 == 0:
                blocks.append(rng.random(256))
            u = blocks[idx // 256][idx % 256]
            nbrs = graph.adjacency[pos]
            cols = sorted(nbrs)
            cum = np.cumsum([nbrs[j] for j in cols]) / weights[pos]
            cum[-1] = 1.0
            pos = cols[int((u >= cum).sum())]
            if pos in graph.target_indices:
                t = k
                break
        out.append(t)
    return np.array(out)


def test_matches_scalar_reference_walker():
    # crosses the 256-step buffer boundary (seed chosen so max time > 256)
    g = unit_path(16)
    cfg = SimConfig(seed=1, replications=6, max_steps=40_000)
    sample = simulate_hitting(g, cfg)
    assert sample.times.max() > 256
    ref = _reference_times(g, 1, 6, 40_000)
    assert (sample.times == ref).all()

    mixed = corpus_graph(2)  # branching degrees exercise the padded sampler
    cfg = SimConfig(seed=4, replications=5, max_steps=40_000)
    sample = simulate_hitting(mixed, cfg)
    ref = _reference_times(mixed, 4, 5, 40_000)
    assert (sample.times == ref).all()


def test_censoring_when_horizon_too_short():
    sample = simulate_hitting(unit_path(6),
                              SimConfig(seed=0, replications=10, max_steps=5))
    assert sample.censored.all()
    assert (sample.times == 5).all()
    assert sample.censored_count == 10
    assert sample.cdf_at(100.0) == 0.0
    assert sample.mean() == 5.0


def test_unreachable_target_censors():
    g = WeightedGraph([(0, 1, 1.0)], origin=0, targets=[5], vertices=[5])
    sample = simulate_hitting(g, SimConfig(seed=0, replications=4, max_steps=30))
    assert sample.censored.all()


def test_zero_weight_interior_vertex_rejected():
    g = WeightedGraph([(0, 1, 1.0)], origin=0, targets=[1], vertices=[5])
    with pytest.raises(GraphError):
        simulate_hitting(g, SimConfig(seed=0, replications=1, max_steps=5))


def test_mean_and_cdf_match_exact_law():
    g = unit_path(3)
    stats = engine.hitting_time_pmf(g)
    ks = np.arange(len(stats.pmf))
    var = float(ks**2 @ stats.pmf) - stats.expected**2
    reps = 20_000
    sample = simulate_hitting(g, SimConfig(seed=12, replications=reps,
                                           max_steps=20_000))
    assert sample.censored_count == 0
    se = math.sqrt(var / reps)
    assert abs(sample.mean() - stats.expected) < 4 * se
    for x in (3.0, 9.0, 25.0):
        exact = stats.cdf_at(x)
        half = 4 * math.sqrt(exact * (1 - exact) / reps)
        assert abs(sample.cdf_at(x) - exact) < half


def test_escape_shapes_and_summary():
    cfg = SimConfig(seed=3, replications=50, max_steps=64,
                    record_steps=(4, 16, 64), estimator="speed")
    es = escape_ratios(BiasedWalk(2.0), cfg)
    assert es.distances.shape == (50, 3)
    assert es.speed_ratios().shape == (50, 3)
    run = es.running_max("single_log")
    assert (np.diff(run, axis=1) >= 0).all()
    summary = es.summary()
    assert set(summary) == {"speed", "single_log"}
    assert set(summary["speed"]) == {"mean", "q10", "median", "q90"}
    assert summary["speed"]["q10"] <= summary["speed"]["q90"]
    assert len(list(es.to_rows())) == 50 * 3 * 3
    with pytest.raises(ParameterError):
        es.running_max("nonsense")


def test_escape_biased_parity_and_speed():
    cfg = SimConfig(seed=21, replications=200, max_steps=4096,
                    record_steps=(15, 64, 4096))
    es = escape_ratios(BiasedWalk(2.0), cfg)
    dists = es.distances
    assert ((dists[:, 0] % 2) == 1).all()  # |X_k| has the parity of k
    assert ((dists[:, 1] % 2) == 0).all()
    speed = dists[:, 2] / 4096.0
    assert abs(speed.mean() - BiasedWalk(2.0).speed) < 0.01


def test_escape_on_graph_line():
    g = biased_line(20, 1.0, tail=20)  # safe through 20 steps
    cfg = SimConfig(seed=6, replications=40, max_steps=20, record_steps=(5, 20))
    es = escape_ratios(g, cfg)
    assert (es.distances[:, 0] <= 5).all()
    assert ((es.distances[:, 0] % 2) == 1).all()
    assert (es.distances[:, 1] <= 20).all()


def test_escape_respects_safe_horizon():
    g = biased_line(20, 1.0, tail=20)
    cfg = SimConfig(seed=6, replications=4, max_steps=50, record_steps=(50,))
    with pytest.raises(ParameterError):
        escape_ratios(g, cfg)


def test_escape_argument_validation():
    cfg = SimConfig(seed=0, replications=2, max_steps=10)
    with pytest.raises(ParameterError):
        escape_ratios(BiasedWalk(2.0), cfg)  # no record steps
    cfg = SimConfig(seed=0, replications=2, max_steps=10, record_steps=(5,))
    with pytest.raises(ParameterError):
        escape_ratios("not a walk", cfg)


def test_csv_format():
    sample = simulate_hitting(unit_path(2),
                              SimConfig(seed=2, replications=3, max_steps=1000))
    text = to_csv_text(sample)
    lines = text.splitlines()
    assert lines[0] == "replication,statistic,k,value,censored"
    assert len(lines) == 4
    for line in lines[1:]:
        rep, stat, k, value, censored = line.split(",")
        assert stat == "hitting_time"
        assert censored in ("true", "false")
        assert float(value) == float(k)
    assert text.endswith("\n")

    cfg = SimConfig(seed=2, replications=2, max_steps=8, record_steps=(2, 8))
    es = escape_ratios(BiasedWalk(3.0), cfg)
    stats = {line.split(",")[1] for line in to_csv_text(es).splitlines()[1:]}
    assert stats == {"distance", "speed_ratio", "single_log_ratio"}


def test_estimate_tail_brackets_exact_value():
    # unit path 0..4: P(T <= 4) is exactly 1/8 (straight descent)
    g = unit_path(4)
    exact = engine.hitting_time_pmf(g).cdf_at(4.0)
    assert exact == pytest.approx(0.125, abs=1e-12)
    cfg = SimConfig(seed=9, replications=20_000, max_steps=4)
    est = estimate_tail(g, 1.2, 3, cfg)
    assert est.threshold == 4.0
    assert est.lower <= exact <= est.upper
    assert abs(est.estimate - exact) < 0.01
    assert est.successes == int(est.estimate * est.replications)


def test_estimate_tail_validation():
    g = unit_path(4)
    cfg = SimConfig(seed=0, replications=10, max_steps=4)
    with pytest.raises(ParameterError):
        estimate_tail(g, 0.9, 3, cfg)
    with pytest.raises(ParameterError):
        estimate_tail(g, 3.0, 3, cfg)  # threshold 10 beyond max_steps
    with pytest.raises(ParameterError):
        estimate_tail(g, 1.2, 3, cfg, level=1.0)


def test_single_log_schedule_trend():
    """Crossing-time schedule of the squared-cut construction.

    Summing the closed-form block crossing times along cuts x, x^2, ... the
    normalized ratio x / sqrt(t log t) rises toward sqrt(2)/2 from below,
    the signature of single-log escape behaviour.
    """
    cuts = [16, 256, 65536, 65536**2]
    total = 0.0
    prev = 0
    ratios = []
    for x in cuts:
        n = x - prev
        total += fast_path_expected(n, poly_growth_drift(n))
        ratios.append(x / math.sqrt(total * math.log(total)))
        prev = x
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert all(r < math.sqrt(2) / 2 for r in ratios)
    assert ratios[-1] > 0.6


def test_single_log_sim_band():
    # seeded regression: the sqrt(k log k) normalization keeps the walk at
    # order one on the concatenated construction
    g = concatenated_fast(cuts=[16, 256, 65536])
    cfg = SimConfig(seed=2026, replications=30, max_steps=65536,
                    record_steps=(1024, 4096, 16384, 65536),
                    estimator="single_log")
    final = escape_ratios(g, cfg).running_max("single_log")[:, -1]
    assert 0.25 < final.mean() < 0.45
    assert final.max() < 1.2
    assert final.min() > 0.0
