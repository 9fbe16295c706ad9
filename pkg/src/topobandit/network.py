"""Ground-truth environment for the single-player topology game.

A network is a set of miners with public hash shares, a latency matrix
(milliseconds) and a fixed edge set made by every node except the player.
The player picks ``delta`` neighbours; the resulting effective topology
determines every node's percentile latency and the player's relative reward.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

BIDIRECTIONAL = "bidirectional"
OUTGOING_ONLY = "outgoing-only"
LINK_MODES = (BIDIRECTIONAL, OUTGOING_ONLY)

# hash comparisons against the threshold are made at this fraction of total hash
HASH_RTOL = 1e-12


class ConstraintViolation(ValueError):
    """Raised when an action breaks one or more connection constraints."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid action: " + ", ".join(self.violations))


class UnreachablePercentile(ValueError):
    """The hash reachable from a node never reaches the percentile threshold."""


@dataclass(frozen=True)
class RewardRules:
    """Knobs that pin down how percentile latency and reward are evaluated.

    ``include_self`` counts the evaluating node's own hash towards the
    threshold. ``strict`` requires accumulated hash strictly above
    ``threshold * total``; otherwise reaching it is enough.
    """

    threshold: float = 0.9
    include_self: bool = True
    strict: bool = True
    link_mode: str = BIDIRECTIONAL

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.link_mode not in LINK_MODES:
            raise ValueError(f"unknown link mode {self.link_mode!r}")


DEFAULT_RULES = RewardRules()


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    hash: np.ndarray
    latency: np.ndarray
    fixed_edges: frozenset
    delta: int
    gamma: int
    player: int | None = None
    labels: tuple = field(default=())

    def __post_init__(self):
        h = np.asarray(self.hash, dtype=float)
        lat = np.asarray(self.latency, dtype=float)
        object.__setattr__(self, "hash", h)
        object.__setattr__(self, "latency", lat)
        object.__setattr__(
            self, "fixed_edges", frozenset((int(a), int(b)) for a, b in self.fixed_edges)
        )
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(h))))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))
        self._check()

    @property
    def n(self) -> int:
        return len(self.hash)

    def _check(self):
        n = self.n
        if self.hash.ndim != 1 or n < 2:
            raise ValueError("hash must be a vector with at least two entries")
        if self.latency.shape != (n, n):
            raise ValueError(f"latency matrix must be {n}x{n}, got {self.latency.shape}")
        if len(self.labels) != n:
            raise ValueError("one label per node required")
        if np.any(self.hash < 0) or not np.all(np.isfinite(self.hash)):
            bad = int(np.flatnonzero(~(self.hash >= 0))[0])
            raise ValueError(f"hash of node {self.labels[bad]!r} must be non-negative")
        if self.hash.sum() <= 0:
            raise ValueError("total hash must be positive")
        if np.any(np.diag(self.latency) != 0):
            raise ValueError("latency diagonal must be zero")
        if np.any(self.latency < 0) or not np.all(np.isfinite(self.latency)):
            raise ValueError("latencies must be finite and non-negative")
        if self.player is not None and not 0 <= self.player < n:
            raise ValueError(f"player index {self.player} out of range")
        if self.delta < 1 or self.delta > n - 1:
            raise ValueError(f"delta must be in [1, {n - 1}]")
        indeg = np.zeros(n, dtype=int)
        for a, b in self.fixed_edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"fixed edge ({a}, {b}) references an unknown node")
            if a == b:
                raise ValueError(f"fixed edge ({a}, {b}) is a self-loop")
            if self.player is not None and a == self.player:
                raise ValueError(f"fixed edge ({a}, {b}) originates at the player")
            indeg[b] += 1
        if np.any(indeg > self.gamma):
            raise ValueError("a node exceeds gamma incoming fixed edges")

    def in_degree(self) -> np.ndarray:
        indeg = np.zeros(self.n, dtype=int)
        for _, b in self.fixed_edges:
            indeg[b] += 1
        return indeg

    def with_player(self, player) -> "NetworkSpec":
        """Same network with ``player`` (index or label) as the strategic node.

        Every fixed edge touching that node is dropped: its links now come
        from its action alone.
        """
        player = self.index_of(player)
        edges = frozenset(e for e in self.fixed_edges if player not in e)
        return NetworkSpec(
            hash=self.hash,
            latency=self.latency,
            fixed_edges=edges,
            delta=self.delta,
            gamma=self.gamma,
            player=player,
            labels=self.labels,
        )

    def index_of(self, label) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < self.n:
                raise KeyError(f"unknown node {label!r}")
            return int(label)
        try:
            return self.labels.index(label)
        except ValueError:
            if str(label).isdigit() and int(label) < self.n:
                return int(label)
            raise KeyError(f"unknown node {label!r}") from None


def eligible_targets(spec: NetworkSpec, enforce_gamma: bool = True) -> list[int]:
    """Nodes the player may connect to."""
    indeg = spec.in_degree()
    return [
        u
        for u in range(spec.n)
        if u != spec.player and (not enforce_gamma or indeg[u] < spec.gamma)
    ]


def validate_action(spec: NetworkSpec, action: Iterable[int], enforce_gamma: bool = True) -> list[str]:
    """Return every constraint the action violates (empty list when valid)."""
    nodes = list(action)
    problems = []
    if len(set(nodes)) != len(nodes):
        problems.append("duplicate")
    if len(nodes) != spec.delta:
        problems.append("cardinality")
    if spec.player in nodes:
        problems.append("self-connection")
    if any(not (0 <= int(u) < spec.n) for u in nodes):
        problems.append("unknown-node")
    elif enforce_gamma:
        indeg = spec.in_degree()
        if any(u != spec.player and indeg[u] >= spec.gamma for u in nodes):
            problems.append("gamma")
    return problems


def augment_edges(fixed, player: int, action: Iterable[int], mode: str = BIDIRECTIONAL) -> frozenset:
    """``fixed`` plus the player's links.

    In bidirectional mode every link touching the player carries traffic
    both ways, including fixed edges other nodes opened towards it.
    """
    if mode not in LINK_MODES:
        raise ValueError(f"unknown link mode {mode!r}")
    edges = set(fixed)
    for u in action:
        edges.add((player, int(u)))
    if mode == BIDIRECTIONAL:
        edges |= {(b, a) for a, b in edges if a == player or b == player}
    return frozenset(edges)


def build_topology(
    spec: NetworkSpec,
    action: Iterable[int],
    mode: str = BIDIRECTIONAL,
    enforce_gamma: bool = True,
) -> frozenset:
    """Fixed edges plus the player's links for ``action``."""
    if spec.player is None:
        raise ValueError("network has no player assigned")
    action = list(action)
    problems = validate_action(spec, action, enforce_gamma)
    if problems:
        raise ConstraintViolation(problems)
    return augment_edges(spec.fixed_edges, spec.player, action, mode)


def _graph(edges: Iterable[tuple[int, int]], weights: np.ndarray) -> csr_matrix:
    n = weights.shape[0]
    pairs = np.array(sorted(set(edges)), dtype=np.int64).reshape(-1, 2)
    data = weights[pairs[:, 0], pairs[:, 1]].astype(float)
    # explicit zero-weight entries are kept as edges by csgraph
    return csr_matrix((data, (pairs[:, 0], pairs[:, 1])), shape=(n, n))


def shortest_path_latencies(edges, latency, return_predecessors: bool = False):
    """All-pairs minimum path latency over ``edges``; ``inf`` where unreachable.

    With ``return_predecessors`` also returns the predecessor matrix
    (``-9999`` marks no predecessor) describing one shortest-path tree per source.
    """
    latency = np.asarray(latency, dtype=float)
    graph = _graph(edges, latency)
    return dijkstra(graph, directed=True, return_predecessors=return_predecessors)


def _qualifies(acc: float, target: float, total: float, strict: bool) -> bool:
    tol = HASH_RTOL * total
    return acc > target + tol if strict else acc >= target - tol


def percentile_node(
    v: int,
    row: np.ndarray,
    hash: np.ndarray,
    threshold: float = 0.9,
    include_self: bool = True,
    strict: bool = True,
) -> int:
    """Index of the node whose distance defines ``v``'s percentile latency.

    Nodes are visited by ascending distance (ties by index) and hash is
    accumulated until the threshold is met. Returns ``v`` itself when its
    own hash already suffices.
    """
    row = np.asarray(row, dtype=float)
    hash = np.asarray(hash, dtype=float)
    total = float(hash.sum())
    target = threshold * total
    base = float(hash[v]) if include_self else 0.0
    if _qualifies(base, target, total, strict):
        return v
    others = np.delete(np.arange(len(row)), v)
    order = others[np.lexsort((others, row[others]))]
    acc = base + np.cumsum(hash[order])
    tol = HASH_RTOL * total
    hit = acc > target + tol if strict else acc >= target - tol
    if not hit.any():
        raise UnreachablePercentile(f"node {v}: total hash never meets the threshold")
    node = int(order[int(np.argmax(hit))])
    if not np.isfinite(row[node]):
        raise UnreachablePercentile(f"node {v}: not enough hash reachable")
    return node


def percentile_latency(
    v: int,
    row: np.ndarray,
    hash: np.ndarray,
    threshold: float = 0.9,
    include_self: bool = True,
    strict: bool = True,
) -> float:
    """Smallest worst-case path latency from ``v`` to a node set holding the threshold share of hash."""
    node = percentile_node(v, row, hash, threshold, include_self, strict)
    return 0.0 if node == v else float(row[node])


def brute_force_percentile(
    v: int,
    row,
    hash,
    threshold: float = 0.9,
    include_self: bool = True,
    strict: bool = True,
    max_nodes: int = 12,
) -> float:
    """Exhaustive min over qualifying subsets of the max distance. Test oracle only."""
    n = len(row)
    if n > max_nodes:
        raise ValueError(f"brute force refuses n={n} > {max_nodes}")
    row = [float(x) for x in row]
    hash = [float(x) for x in hash]
    total = math.fsum(hash)
    target = threshold * total
    base = hash[v] if include_self else 0.0
    others = [u for u in range(n) if u != v]
    best = math.inf
    for size in range(len(others) + 1):
        for subset in itertools.combinations(others, size):
            acc = math.fsum([base] + [hash[u] for u in subset])
            if not _qualifies(acc, target, total, strict):
                continue
            worst = max((row[u] for u in subset), default=0.0)
            best = min(best, worst)
    if math.isinf(best):
        raise UnreachablePercentile(f"node {v}: no qualifying reachable subset")
    return best


def percentile_nodes(dist: np.ndarray, hash: np.ndarray, rules: RewardRules = DEFAULT_RULES) -> np.ndarray:
    """Row-wise :func:`percentile_node` over a full distance matrix."""
    dist = np.asarray(dist, dtype=float)
    hash = np.asarray(hash, dtype=float)
    n = dist.shape[0]
    idx = np.arange(n)
    keyed = dist.copy()
    keyed[idx, idx] = -1.0  # each node sorts first in its own row
    order = np.lexsort((np.broadcast_to(idx, (n, n)), keyed), axis=-1)
    contrib = hash[order]
    if not rules.include_self:
        contrib[:, 0] = 0.0
    acc = np.cumsum(contrib, axis=1)
    total = float(hash.sum())
    target = rules.threshold * total
    tol = HASH_RTOL * total
    hit = acc > target + tol if rules.strict else acc >= target - tol
    missing = ~hit.any(axis=1)
    if missing.any():
        raise UnreachablePercentile(f"node {int(np.flatnonzero(missing)[0])}: total hash never meets the threshold")
    pos = np.argmax(hit, axis=1)
    nodes = order[idx, pos]
    if not np.all(np.isfinite(dist[idx, nodes])):
        bad = int(np.flatnonzero(~np.isfinite(dist[idx, nodes]))[0])
        raise UnreachablePercentile(f"node {bad}: not enough hash reachable")
    return nodes


def percentile_profile(dist: np.ndarray, hash: np.ndarray, rules: RewardRules = DEFAULT_RULES) -> np.ndarray:
    """Percentile latency of every node given an all-pairs distance matrix."""
    nodes = percentile_nodes(dist, hash, rules)
    return np.asarray(dist, dtype=float)[np.arange(len(nodes)), nodes]


def average_percentile_latency(spec: NetworkSpec, topology, rules: RewardRules = DEFAULT_RULES) -> float:
    dist = shortest_path_latencies(topology, spec.latency)
    return float(percentile_profile(dist, spec.hash, rules).mean())


def reward_from_percentiles(percentiles: Sequence[float], player: int, beta: float = 1.0) -> float:
    """Relative reward: minus beta times the player's percentile latency over the network mean."""
    a = np.asarray(percentiles, dtype=float)
    return float(-beta * a[player] / a.mean())


@dataclass(frozen=True)
class Outcome:
    reward: float
    player_latency: float
    mean_latency: float
    percentiles: np.ndarray


def evaluate_action(
    spec: NetworkSpec,
    action: Iterable[int],
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
    enforce_gamma: bool = True,
) -> Outcome:
    topology = build_topology(spec, action, rules.link_mode, enforce_gamma)
    dist = shortest_path_latencies(topology, spec.latency)
    a = percentile_profile(dist, spec.hash, rules)
    return Outcome(
        reward=reward_from_percentiles(a, spec.player, beta),
        player_latency=float(a[spec.player]),
        mean_latency=float(a.mean()),
        percentiles=a,
    )


def player_reward(
    spec: NetworkSpec,
    action: Iterable[int],
    beta: float = 1.0,
    rules: RewardRules = DEFAULT_RULES,
    enforce_gamma: bool = True,
) -> float:
    return evaluate_action(spec, action, beta, rules, enforce_gamma).reward
