"""Network-coordinate environment model used by the bandit agent.

Every node gets a point in R^k; the Euclidean distance between two points is
the estimated link latency. Together with a fixed guess of the non-player
topology this predicts the reward of any candidate action, and the points
are fitted by gradient descent on the squared prediction error.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .network import (
    DEFAULT_RULES,
    RewardRules,
    UnreachablePercentile,
    augment_edges,
    percentile_nodes,
    shortest_path_latencies,
)

RANDOM_TOPOLOGY = "random"
EXACT_TOPOLOGY = "exact"


@dataclass
class CoordinateModel:
    coords: np.ndarray
    est_edges: frozenset
    player: int
    eta: float = 10000.0
    dist_floor: float = 1e-6
    sentinel: float = -10.0

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def copy(self) -> "CoordinateModel":
        return CoordinateModel(
            self.coords.copy(), self.est_edges, self.player, self.eta, self.dist_floor, self.sentinel
        )

    def latency_matrix(self, coords: np.ndarray | None = None) -> np.ndarray:
        x = self.coords if coords is None else coords
        diff = x[:, None, :] - x[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass
class RewardEstimate:
    value: float
    sentinel: bool
    percentiles: np.ndarray | None = None
    critical_nodes: np.ndarray | None = None
    # critical_paths[u]: edges of the shortest path from u to its critical node
    critical_paths: list | None = None


def default_density(n: int, delta: int) -> float:
    """Edge probability giving each non-player node ~2*delta estimated out-links."""
    if n <= 2:
        return 1.0
    return min(1.0, 2.0 * delta / (n - 2))


def init_model(
    n: int,
    k: int = 5,
    seed=None,
    player: int = 0,
    density: float = 0.5,
    mode: str = RANDOM_TOPOLOGY,
    fixed_edges: Iterable[tuple[int, int]] | None = None,
    spread: float = 100.0,
    eta: float = 10000.0,
    dist_floor: float = 1e-6,
    sentinel: float = -10.0,
) -> CoordinateModel:
    """Random coordinates plus an estimated non-player topology.

    In ``random`` mode every ordered pair of non-player nodes is an edge
    with probability ``density``; in ``exact`` mode ``fixed_edges`` is
    copied (minus anything leaving the player).
    """
    if k < 1:
        raise ValueError("coordinate dimension must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    rng = np.random.default_rng(seed)
    coords = rng.standard_normal((n, k)) * spread
    if mode == EXACT_TOPOLOGY:
        if fixed_edges is None:
            raise ValueError("exact mode needs the true fixed edges")
        edges = frozenset((int(a), int(b)) for a, b in fixed_edges if a != player)
    elif mode == RANDOM_TOPOLOGY:
        pairs = [(a, b) for a in range(n) for b in range(n) if a != b and a != player and b != player]
        keep = rng.random(len(pairs)) < density
        edges = frozenset(p for p, kept in zip(pairs, keep) if kept)
    else:
        raise ValueError(f"unknown oracle topology mode {mode!r}")
    return CoordinateModel(coords, edges, player, eta, dist_floor, sentinel)


def warm_start(model: CoordinateModel, ping_row: Sequence[float]) -> None:
    """Move every node along its ray from the player to its measured ping distance.

    After this, model distances from the player equal ``ping_row`` exactly;
    everything else about the embedding stays random.
    """
    v0 = model.player
    x0 = model.coords[v0]
    for u in range(model.n):
        if u == v0:
            continue
        d = model.coords[u] - x0
        norm = float(np.linalg.norm(d))
        if norm < model.dist_floor:
            d, norm = np.eye(model.dim)[0], 1.0
        model.coords[u] = x0 + d * (float(ping_row[u]) / norm)


def estimated_latency(model: CoordinateModel, u: int, w: int) -> float:
    return float(np.linalg.norm(model.coords[u] - model.coords[w]))


def _edges_for(model: CoordinateModel, action: Iterable[int], link_mode: str) -> frozenset:
    return augment_edges(model.est_edges, model.player, action, link_mode)


def _trace(pred_row: np.ndarray, src: int, dst: int) -> list[tuple[int, int]]:
    path = []
    node = dst
    while node != src:
        prev = int(pred_row[node])
        path.append((prev, node))
        node = prev
    path.reverse()
    return path


def estimate_reward(
    model: CoordinateModel,
    action: Sequence[int],
    hash: np.ndarray,
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
    coords: np.ndarray | None = None,
    with_paths: bool = False,
) -> RewardEstimate:
    """Predicted reward of ``action`` under the model.

    Returns a sentinel estimate (``model.sentinel * beta``) when the
    estimated topology cannot reach the threshold share of hash.
    """
    lat = model.latency_matrix(coords)
    edges = _edges_for(model, action, rules.link_mode)
    if with_paths:
        dist, pred = shortest_path_latencies(edges, lat, return_predecessors=True)
    else:
        dist = shortest_path_latencies(edges, lat)
    try:
        nodes = percentile_nodes(dist, hash, rules)
    except UnreachablePercentile:
        return RewardEstimate(value=model.sentinel * beta, sentinel=True)
    idx = np.arange(model.n)
    a = dist[idx, nodes]
    value = float(-beta * a[model.player] / a.mean())
    paths = None
    if with_paths:
        paths = [_trace(pred[u], u, int(nodes[u])) for u in range(model.n)]
    return RewardEstimate(value, False, a, nodes, paths)


def reward_gradient(model: CoordinateModel, est: RewardEstimate, beta: float = 1.0) -> np.ndarray:
    """Gradient of the predicted reward w.r.t. the coordinates, discrete choices frozen."""
    x = model.coords
    a = est.percentiles
    n = model.n
    mean = a.mean()
    # d(-beta * a0 / mean) / d a_u
    weights = np.full(n, beta * a[model.player] / (n * mean**2))
    weights[model.player] -= beta / mean
    grad = np.zeros_like(x)
    for u, path in enumerate(est.critical_paths):
        if weights[u] == 0.0:
            continue
        for s, t in path:
            d = x[s] - x[t]
            g = weights[u] * d / max(float(np.linalg.norm(d)), model.dist_floor)
            grad[s] += g
            grad[t] -= g
    return grad


def loss_gradient(
    model: CoordinateModel,
    action: Sequence[int],
    observed: float,
    hash: np.ndarray,
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
):
    """Squared prediction error, its gradient, and the estimate (``None`` gradient on sentinel)."""
    est = estimate_reward(model, action, hash, beta, rules, with_paths=True)
    if est.sentinel:
        return None, None, est
    residual = observed - est.value
    grad = -2.0 * residual * reward_gradient(model, est, beta)
    return residual**2, grad, est


def update_model(
    model: CoordinateModel,
    action: Sequence[int],
    observed: float,
    hash: np.ndarray,
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
):
    """One gradient step on the squared prediction error, in place.

    Returns ``(loss, estimate)``; loss is ``None`` and the model untouched
    when the prediction was a sentinel.
    """
    if not np.isfinite(observed):
        raise ValueError("observed reward must be finite")
    loss, grad, est = loss_gradient(model, action, observed, hash, beta, rules)
    if loss is None:
        return None, est
    stepped = model.coords - model.eta * grad
    if not np.all(np.isfinite(stepped)):
        raise FloatingPointError("coordinate update produced non-finite values")
    model.coords = stepped
    return loss, est


def single_swap_candidates(current: Sequence[int], eligible: Sequence[int]) -> list[tuple[int, ...]]:
    """``current`` plus every action that replaces exactly one neighbour."""
    cur = tuple(sorted(current))
    out = [cur]
    outside = [u for u in sorted(eligible) if u not in cur]
    for drop in cur:
        kept = [u for u in cur if u != drop]
        for add in outside:
            out.append(tuple(sorted(kept + [add])))
    return out


def exhaustive_candidates(eligible: Sequence[int], delta: int) -> list[tuple[int, ...]]:
    return [tuple(c) for c in itertools.combinations(sorted(eligible), delta)]


def subsample_candidates(candidates: Sequence, size: int, rng: np.random.Generator) -> list:
    if size >= len(candidates):
        return list(candidates)
    picks = rng.choice(len(candidates), size=size, replace=False)
    return [candidates[i] for i in sorted(picks)]


def best_action(
    model: CoordinateModel,
    candidates: Sequence[Sequence[int]],
    hash: np.ndarray,
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
):
    """Highest-estimate candidate; ties go to the lexicographically smallest sorted action."""
    if not candidates:
        raise ValueError("no candidate actions")
    best = None
    best_key = None
    for cand in candidates:
        key = tuple(sorted(int(u) for u in cand))
        value = estimate_reward(model, key, hash, beta, rules).value
        if best is None or value > best[1] or (value == best[1] and key < best_key):
            best, best_key = (key, value), key
    return best[0]


def write_coordinates(model: CoordinateModel, path, labels: Sequence[str] | None = None) -> None:
    """CSV dump: ``node,label,dim_0..dim_{k-1}``."""
    labels = labels or [str(i) for i in range(model.n)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["node", "label"] + [f"dim_{j}" for j in range(model.dim)])
        for i, row in enumerate(model.coords):
            writer.writerow([i, labels[i]] + [format(float(x), ".17g") for x in row])
