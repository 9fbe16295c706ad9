import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_simple_path_latencies, random_connected_edges
from topobandit.network import (
    BIDIRECTIONAL,
    OUTGOING_ONLY,
    ConstraintViolation,
    NetworkSpec,
    RewardRules,
    UnreachablePercentile,
    average_percentile_latency,
    brute_force_percentile,
    build_topology,
    evaluate_action,
    percentile_latency,
    percentile_node,
    percentile_nodes,
    percentile_profile,
    player_reward,
    reward_from_percentiles,
    shortest_path_latencies,
    validate_action,
)


def bare_spec(n, player=0, delta=1, gamma=None, edges=()):
    lat = np.ones((n, n)) - np.eye(n)
    return NetworkSpec(
        hash=np.ones(n), latency=lat, fixed_edges=edges, delta=delta, gamma=gamma or n, player=player
    )


# --- topology -------------------------------------------------------------


def test_build_topology_modes():
    spec = bare_spec(2)
    assert build_topology(spec, [1], BIDIRECTIONAL) == {(0, 1), (1, 0)}
    assert build_topology(spec, [1], OUTGOING_ONLY) == {(0, 1)}


def test_build_topology_keeps_fixed_edges(small_spec):
    topo = build_topology(small_spec, [1, 3])
    assert small_spec.fixed_edges <= topo
    assert {(0, 1), (1, 0), (0, 3), (3, 0)} <= topo


def test_build_topology_rejects_invalid(small_spec):
    with pytest.raises(ConstraintViolation) as info:
        build_topology(small_spec, [0, 1])
    assert "self-connection" in info.value.violations


def test_player_link_gives_others_a_shortcut():
    # b's only fixed route to a is long; the player sits between them
    lat = np.array([[0, 1, 1], [1, 0, 50], [1, 50, 0]], dtype=float)  # v, a, b
    spec = NetworkSpec(hash=np.ones(3), latency=lat, fixed_edges={(1, 2), (2, 1), (1, 0)},
                       delta=1, gamma=3, player=0)
    dist = shortest_path_latencies(build_topology(spec, [2]), spec.latency)
    assert dist[2, 1] == 2.0  # b -> v -> a


# --- shortest paths -------------------------------------------------------


def test_single_edge_directed():
    lat = np.array([[0, 7], [7, 0]], dtype=float)
    d = shortest_path_latencies({(0, 1)}, lat)
    assert d[0, 1] == 7 and math.isinf(d[1, 0])


def test_triangle_relaxation():
    lat = np.array([[0, 3, 10], [3, 0, 4], [10, 4, 0]], dtype=float)
    d = shortest_path_latencies({(0, 1), (1, 2), (0, 2)}, lat)
    assert d[0, 2] == 7


def test_zero_weight_edges_are_edges():
    lat = np.zeros((3, 3))
    d = shortest_path_latencies({(0, 1), (1, 2)}, lat)
    assert d[0, 2] == 0 and math.isinf(d[2, 0])


@pytest.mark.parametrize("seed", range(25))
def test_shortest_paths_match_path_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    lat = rng.uniform(0, 50, (n, n))
    np.fill_diagonal(lat, 0)
    edges = {(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < 0.4}
    expected = all_simple_path_latencies(n, edges, lat)
    got = shortest_path_latencies(edges, lat)
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-9)


def test_relaxation_fixpoint():
    rng = np.random.default_rng(3)
    n = 12
    lat = rng.uniform(1, 30, (n, n))
    np.fill_diagonal(lat, 0)
    edges = random_connected_edges(rng, n, 0.1)
    d = shortest_path_latencies(edges, lat)
    assert np.all(np.diag(d) == 0)
    for v, u in edges:
        assert np.all(d[v] <= lat[v, u] + d[u] + 1e-9)


# --- percentile -----------------------------------------------------------


def test_single_other_node_forced():
    row = np.array([0.0, 12.0])
    h = np.array([0.05, 0.95])
    assert percentile_latency(0, row, h, include_self=False) == 12.0
    assert brute_force_percentile(0, row, h, include_self=False) == 12.0


@pytest.mark.parametrize("include_self", [True, False])
def test_all_equal_rows(include_self):
    row = np.array([0.0, 4.5, 4.5, 4.5, 4.5])
    h = np.array([0.05, 0.1, 0.2, 0.45, 0.2])
    assert percentile_latency(0, row, h, include_self=include_self) == 4.5
    assert brute_force_percentile(0, row, h, include_self=include_self) == 4.5


def test_own_hash_suffices():
    row = np.array([0.0, 3.0, 5.0])
    h = np.array([0.95, 0.03, 0.02])
    assert percentile_latency(0, row, h, include_self=True) == 0.0
    assert brute_force_percentile(0, row, h, include_self=True) == 0.0
    # without its own share the others hold only 5%
    with pytest.raises(UnreachablePercentile):
        percentile_latency(0, row, h, include_self=False)
    with pytest.raises(UnreachablePercentile):
        brute_force_percentile(0, row, h, include_self=False)


def test_threshold_strictness_on_exact_boundary():
    # uniform shares: self + 8 of 9 others is exactly 90%
    row = np.arange(10, dtype=float)
    h = np.full(10, 0.1)
    assert percentile_latency(0, row, h, strict=True) == 9.0
    assert percentile_latency(0, row, h, strict=False) == 8.0
    assert brute_force_percentile(0, row, h, strict=True) == 9.0
    assert brute_force_percentile(0, row, h, strict=False) == 8.0


def test_unreachable_percentile_raises():
    row = np.array([0.0, 1.0, math.inf])
    h = np.array([0.1, 0.1, 0.8])
    with pytest.raises(UnreachablePercentile):
        percentile_latency(0, row, h)
    with pytest.raises(UnreachablePercentile):
        brute_force_percentile(0, row, h)


def test_unreachable_low_hash_is_ignored():
    row = np.array([0.0, 2.0, math.inf])
    h = np.array([0.1, 0.89, 0.01])
    assert percentile_latency(0, row, h, include_self=True, strict=False) == 2.0


def test_brute_force_refuses_large():
    with pytest.raises(ValueError):
        brute_force_percentile(0, np.zeros(13), np.ones(13))


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("include_self", [True, False])
def test_sorted_prefix_property(seed, include_self):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    row = rng.uniform(0, 100, n)
    row[0] = 0
    h = rng.exponential(size=n)
    if not include_self and h[1:].sum() <= 0.9 * h.sum():
        with pytest.raises(UnreachablePercentile):
            percentile_node(0, row, h, include_self=False)
        return
    node = percentile_node(0, row, h, include_self=include_self)
    value = percentile_latency(0, row, h, include_self=include_self)
    others = sorted(range(1, n), key=lambda u: (row[u], u))
    acc = h[0] if include_self else 0.0
    m = 0
    while not acc > 0.9 * h.sum():
        acc += h[others[m]]
        m += 1
    expected = 0.0 if m == 0 else row[others[m - 1]]
    assert value == expected
    assert node == (0 if m == 0 else others[m - 1])


@pytest.mark.parametrize("seed", range(10))
def test_vectorized_rows_match_scalar(seed):
    rng = np.random.default_rng(seed)
    n = 9
    lat = rng.uniform(0, 10, (n, n))
    np.fill_diagonal(lat, 0)
    dist = shortest_path_latencies(random_connected_edges(rng, n), lat)
    h = rng.exponential(size=n)
    for rules in (RewardRules(), RewardRules(include_self=False), RewardRules(strict=False)):
        scalar = []
        for v in range(n):
            try:
                scalar.append(percentile_node(v, dist[v], h, rules.threshold, rules.include_self, rules.strict))
            except UnreachablePercentile:
                scalar.append(None)
        if None in scalar:
            with pytest.raises(UnreachablePercentile):
                percentile_nodes(dist, h, rules)
        else:
            assert percentile_nodes(dist, h, rules).tolist() == scalar


# --- averages and reward --------------------------------------------------


def test_average_of_stated_values():
    assert np.mean([5, 4, 5, 4, 3]) == pytest.approx(4.2, abs=1e-12)
    assert np.mean([5.7, 5.7, 4.7, 4, 3]) == pytest.approx(4.62, abs=1e-12)


def test_toy_rewards():
    assert reward_from_percentiles([5, 4, 5, 4, 3], player=4) == pytest.approx(-3 / 4.2, abs=1e-9)
    assert reward_from_percentiles([5.7, 5.7, 4.7, 4, 3], player=4) == pytest.approx(-3 / 4.62, abs=1e-9)


def test_equal_percentiles_give_minus_beta():
    assert reward_from_percentiles([7.0] * 6, player=2, beta=2.5) == pytest.approx(-2.5)


def test_average_percentile_on_complete_graph():
    n = 5
    spec = bare_spec(n, edges={(a, b) for a in range(1, n) for b in range(n) if a != b}, delta=4)
    topo = build_topology(spec, [1, 2, 3, 4])
    assert average_percentile_latency(spec, topo) == pytest.approx(1.0)
    assert player_reward(spec, [1, 2, 3, 4]) == pytest.approx(-1.0)


def _random_spec(rng, n, delta=2):
    lat = rng.uniform(1, 50, (n, n))
    np.fill_diagonal(lat, 0)
    edges = {e for e in random_connected_edges(rng, n, 0.2) if e[0] != 0}
    return NetworkSpec(hash=rng.exponential(size=n), latency=lat, fixed_edges=edges,
                       delta=delta, gamma=n, player=0)


@pytest.mark.parametrize("seed", range(15))
def test_reward_bounds_and_beta_scaling(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    spec = _random_spec(rng, n)
    action = sorted(rng.choice(np.arange(1, n), 2, replace=False).tolist())
    r1 = player_reward(spec, action, beta=1.0)
    assert -n <= r1 <= 0
    assert player_reward(spec, action, beta=3.7) == pytest.approx(3.7 * r1, rel=1e-12)


def test_evaluate_action_consistent(small_spec):
    out = evaluate_action(small_spec, [1, 3])
    assert out.reward == pytest.approx(-out.player_latency / out.mean_latency)
    topo = build_topology(small_spec, [1, 3])
    assert out.mean_latency == pytest.approx(average_percentile_latency(small_spec, topo))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), extra=st.sampled_from([0.0, 0.2]))
def test_adding_edges_never_hurts(seed, extra):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    lat = rng.uniform(0, 40, (n, n))
    np.fill_diagonal(lat, 0)
    h = rng.exponential(size=n) + 1e-3
    edges = random_connected_edges(rng, n, extra)
    a, b = rng.choice(n, 2, replace=False)
    more = edges | {(int(a), int(b))}
    d0 = shortest_path_latencies(edges, lat)
    d1 = shortest_path_latencies(more, lat)
    assert np.all(d1 <= d0)
    assert np.all(percentile_profile(d1, h) <= percentile_profile(d0, h))


# --- validation -----------------------------------------------------------


def test_validate_cardinality():
    spec = bare_spec(6, delta=4)
    assert "cardinality" in validate_action(spec, [1, 2, 3])


def test_validate_self_connection():
    spec = bare_spec(6, delta=2)
    assert "self-connection" in validate_action(spec, [0, 1])


def test_validate_gamma():
    spec = bare_spec(4, delta=1, gamma=1, edges={(2, 1)})
    assert validate_action(spec, [1]) == ["gamma"]
    assert validate_action(spec, [1], enforce_gamma=False) == []
    assert validate_action(spec, [3]) == []


def test_validate_reports_everything():
    spec = bare_spec(5, delta=2)
    problems = validate_action(spec, [0, 0, 9])
    assert {"duplicate", "cardinality", "self-connection", "unknown-node"} <= set(problems)


def test_spec_rejects_player_edges_and_bad_inputs():
    lat = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(ValueError, match="originates at the player"):
        NetworkSpec(hash=np.ones(3), latency=lat, fixed_edges={(0, 1)}, delta=1, gamma=3, player=0)
    with pytest.raises(ValueError):
        NetworkSpec(hash=[1, -1, 1], latency=lat, fixed_edges=(), delta=1, gamma=3)
    with pytest.raises(ValueError):
        NetworkSpec(hash=np.ones(3), latency=lat[:2], fixed_edges=(), delta=1, gamma=3)
    # edges into the player are allowed
    NetworkSpec(hash=np.ones(3), latency=lat, fixed_edges={(1, 0)}, delta=1, gamma=3, player=0)


def test_with_player_drops_edges_touching_player():
    lat = np.ones((3, 3)) - np.eye(3)
    spec = NetworkSpec(hash=np.ones(3), latency=lat, fixed_edges={(0, 1), (1, 0), (1, 2)},
                       delta=1, gamma=3, labels=["x", "y", "z"])
    p = spec.with_player("x")
    assert p.player == 0 and p.fixed_edges == {(1, 2)}
