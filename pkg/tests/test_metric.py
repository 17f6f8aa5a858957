import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rspmetric import (
    InvalidParameterError, RandomMetric, WeightedGraph, all_pairs_shortest_paths,
    ball_profile, diameter, distances_from, full_relaxation_apsp, generate_weights,
    harmonic, random_metric, stream,
)
from rspmetric.metric import ball, dump_instance, edge_index, load_instance, n_edges


def test_single_weight_is_inverse_transform_of_first_uniform():
    for s in (0, 7, 12345):
        g = generate_weights(2, "exp1", s)
        u = np.random.default_rng(s).random()
        assert g.weights.shape == (1,)
        assert g.weights[0] == -math.log1p(-u)


def test_generation_is_deterministic():
    a = generate_weights(5, "exp1", 42)
    b = generate_weights(5, "exp1", 42)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, generate_weights(5, "exp1", 43).weights)


def test_weight_mean_large_instance():
    g = generate_weights(1000, "exp1", 3)
    assert len(g.weights) == 499500
    assert abs(g.weights.mean() - 1.0) <= 0.01


def test_uniform_weights_in_unit_interval():
    g = generate_weights(50, "uniform01", 1)
    assert g.weights.min() >= 0 and g.weights.max() < 1
    m = all_pairs_shortest_paths(g)
    assert np.all(m.dist <= g.matrix() + 1e-15)


def test_weights_read_only_and_too_small_n():
    g = generate_weights(4, seed=0)
    with pytest.raises(ValueError):
        g.weights[0] = 1.0
    with pytest.raises(InvalidParameterError):
        generate_weights(1, seed=0)


def test_edge_index_layout():
    n = 6
    iu, ju = np.triu_indices(n, 1)
    for pos, (u, v) in enumerate(zip(iu, ju)):
        assert edge_index(n, u, v) == pos
        assert edge_index(n, v, u) == pos
    with pytest.raises(InvalidParameterError):
        edge_index(n, 2, 2)


def test_from_edges_requires_every_pair():
    with pytest.raises(InvalidParameterError):
        WeightedGraph.from_edges(3, {(0, 1): 1.0, (1, 2): 1.0})
    with pytest.raises(InvalidParameterError):
        WeightedGraph.from_edges(2, {(0, 1): -1.0})


def test_two_edge_path_beats_direct_edge(triangle_graph):
    m = all_pairs_shortest_paths(triangle_graph)
    assert m.dist[0, 2] == 2.0
    assert diameter(m) == 2.0
    assert full_relaxation_apsp(triangle_graph).dist[0, 2] == 2.0


def test_two_vertices():
    g = WeightedGraph.from_edges(2, {(0, 1): 0.7})
    m = all_pairs_shortest_paths(g)
    assert m.dist[0, 1] == 0.7 and diameter(m) == 0.7


def test_matches_cubic_relaxation():
    for s in range(5):
        g = generate_weights(64, seed=s)
        assert np.abs(all_pairs_shortest_paths(g).dist - full_relaxation_apsp(g).dist).max() <= 1e-9


def test_pruning_retry_on_heavy_weights():
    # every weight far above the initial cutoff forces the doubling path
    rng = np.random.default_rng(0)
    n = 30
    w = {(u, v): 5.0 + rng.random() for u in range(n) for v in range(u + 1, n)}
    g = WeightedGraph.from_edges(n, w)
    assert np.allclose(all_pairs_shortest_paths(g).dist, full_relaxation_apsp(g).dist, atol=1e-12)


def test_zero_weight_edge_kept():
    g = WeightedGraph.from_edges(3, {(0, 1): 0.0, (1, 2): 0.5, (0, 2): 2.0})
    m = all_pairs_shortest_paths(g)
    assert m.dist[0, 2] == pytest.approx(0.5)
    assert m.dist[0, 1] == pytest.approx(0.0, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**32), uniform=st.booleans())
def test_metric_invariants(n, seed, uniform):
    g = generate_weights(n, "uniform01" if uniform else "exp1", seed)
    d = all_pairs_shortest_paths(g).dist
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert np.all(d >= 0)
    # d(u,v) <= d(u,x) + d(x,v) for all triples
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)
    assert np.all(d <= g.matrix() + 1e-15)


def test_triangle_inequality_full_scan_n200():
    d = random_metric(200, 11).dist
    for x in range(200):
        assert np.all(d <= d[:, x, None] + d[None, x, :] + 1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 60), seed=st.integers(0, 2**32), data=st.data())
def test_distances_from_matches_full_matrix(n, seed, data):
    g = generate_weights(n, seed=seed)
    d = all_pairs_shortest_paths(g).dist
    v = data.draw(st.integers(0, n - 1))
    assert np.allclose(distances_from(g, v), d[v], atol=1e-12)
    srcs = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    assert np.allclose(distances_from(g, srcs), d[srcs].min(axis=0), atol=1e-12)


def test_distances_from_bad_sources():
    g = generate_weights(5, seed=0)
    with pytest.raises(InvalidParameterError):
        distances_from(g, 5)
    with pytest.raises(InvalidParameterError):
        distances_from(g, [])


def test_ball_profile_queries():
    m = random_metric(30, 4)
    for v in (0, 17, 29):
        p = ball_profile(m, v)
        assert p.sorted_dists[0] == 0 and np.all(np.diff(p.sorted_dists) >= 0)
        assert p.ball_size(0.0) == 1
        assert p.tau(1) == 0.0
        assert p.tau(30) == m.dist[v].max()
        for k in range(1, 31):
            assert p.ball_size(p.tau(k)) >= k
        assert len(ball(m, v, p.tau(5))) == p.ball_size(p.tau(5))
    assert ball_profile(m.dist[3], 3).tau(30) == ball_profile(m, 3).tau(30)
    with pytest.raises(InvalidParameterError):
        ball_profile(m, 30)
    with pytest.raises(InvalidParameterError):
        ball_profile(m, 0).tau(0)


def test_from_matrix_validation():
    with pytest.raises(InvalidParameterError):
        RandomMetric.from_matrix([[0, 1], [2, 0]])
    with pytest.raises(InvalidParameterError):
        RandomMetric.from_matrix([[1, 1], [1, 0]])
    with pytest.raises(InvalidParameterError):
        RandomMetric.from_matrix([[0, 1, 2]])


def test_dump_round_trip():
    g = generate_weights(7, "exp1", 99)
    buf = io.StringIO()
    dump_instance(g, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "7 99 exp1"
    assert len(lines) == 1 + n_edges(7)
    h = load_instance(io.StringIO(buf.getvalue()))
    assert np.array_equal(h.weights, g.weights)
    assert h.seed == 99 and h.distribution == g.distribution


def test_mean_edge_distance_small_sample():
    # mean d(0,1) is H_{n-1}/(n-1); a loose check, the acceptance run is tighter
    n, trials = 40, 400
    vals = [distances_from(generate_weights(n, seed=s), 0)[1] for s in range(trials)]
    se = np.std(vals, ddof=1) / math.sqrt(trials)
    assert abs(np.mean(vals) - harmonic(n - 1) / (n - 1)) <= 4 * se


def test_stream_rejects_negative_seed():
    with pytest.raises(ValueError):
        stream(-1)
