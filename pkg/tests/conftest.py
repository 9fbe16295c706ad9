import itertools
import math

import numpy as np
import pytest

from topobandit.network import NetworkSpec


def all_simple_path_latencies(n, edges, latency):
    """Minimum over every simple path, found by exhaustive DFS (n <= 8)."""
    adj = {u: [] for u in range(n)}
    for a, b in edges:
        adj[a].append(b)
    best = np.full((n, n), math.inf)

    def dfs(src, node, cost, seen):
        best[src, node] = min(best[src, node], cost)
        for nxt in adj[node]:
            if nxt not in seen:
                dfs(src, nxt, cost + latency[node][nxt], seen | {nxt})

    for s in range(n):
        dfs(s, s, 0.0, {s})
    return best


def random_connected_edges(rng, n, extra=0.3):
    """A random bidirectional spanning tree plus random extra directed edges."""
    order = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(i)])
        edges.add((a, b))
        edges.add((b, a))
    for a, b in itertools.permutations(range(n), 2):
        if rng.random() < extra:
            edges.add((a, b))
    return edges


@pytest.fixture
def small_spec():
    lat = np.array(
        [
            [0, 5, 2, 9, 4],
            [5, 0, 3, 7, 6],
            [2, 3, 0, 4, 8],
            [9, 7, 4, 0, 1],
            [4, 6, 8, 1, 0],
        ],
        dtype=float,
    )
    edges = {(1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3), (1, 4), (4, 1)}
    return NetworkSpec(
        hash=[0.1, 0.3, 0.2, 0.25, 0.15], latency=lat, fixed_edges=edges, delta=2, gamma=3, player=0
    )


def random_model_instance(rng, n=None, k=3):
    """A random coordinate model, hash vector, feasible action and observation."""
    from topobandit.oracle import init_model

    n = n or int(rng.integers(3, 9))
    delta = int(rng.integers(1, min(3, n - 1) + 1))
    model = init_model(n, k=k, seed=int(rng.integers(2**31)), player=0,
                       density=float(rng.uniform(0.3, 0.9)), spread=float(rng.uniform(5, 100)))
    h = rng.exponential(size=n) + 0.05
    action = sorted(int(u) for u in rng.choice(np.arange(1, n), delta, replace=False))
    observed = -float(rng.uniform(0.3, 2.0))
    return model, h, action, observed


def finite_difference_pairs(model, action, observed, hash, beta=1.0, rules=None, step=1e-5):
    """(analytic, central-difference) pairs for every coordinate where the
    critical nodes and paths are the same at both probe points.

    Returns ``None`` when the base point itself is a sentinel.
    """
    from topobandit.network import DEFAULT_RULES
    from topobandit.oracle import estimate_reward, loss_gradient

    rules = rules or DEFAULT_RULES
    loss, grad, est = loss_gradient(model, action, observed, hash, beta, rules)
    if loss is None:
        return None
    pairs = []
    base = model.coords
    for i in range(base.shape[0]):
        for j in range(base.shape[1]):
            probes = []
            for sign in (1, -1):
                x = base.copy()
                x[i, j] += sign * step
                probe = model.copy()
                probe.coords = x
                e = estimate_reward(probe, action, hash, beta, rules, with_paths=True)
                if e.sentinel or list(e.critical_nodes) != list(est.critical_nodes) \
                        or e.critical_paths != est.critical_paths:
                    break
                probes.append((observed - e.value) ** 2)
            if len(probes) == 2:
                pairs.append((float(grad[i, j]), (probes[0] - probes[1]) / (2 * step)))
    return pairs


def relative_errors(pairs):
    """Componentwise relative error; components that are zero up to rounding
    (below 1e-7 of the largest entry) are measured against that floor."""
    scale = max([abs(a) for a, _ in pairs] + [1e-300])
    floor = 1e-7 * scale
    return [abs(a - f) / max(abs(a), abs(f), floor) for a, f in pairs]


# acceptance results, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
