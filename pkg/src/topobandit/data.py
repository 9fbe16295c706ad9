"""Dataset files, hash-share generators and synthetic networks."""

from __future__ import annotations

import json
import logging
from importlib import resources
from pathlib import Path

import numpy as np

from .network import NetworkSpec

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SAMPLE_DATASET = "sample_network.json"

HASH_REAL = "real"
HASH_UNIFORM = "uniform"
HASH_EXPONENTIAL = "exponential"


class DatasetError(ValueError):
    pass


def sample_dataset_path() -> Path:
    return Path(str(resources.files("topobandit") / "data" / SAMPLE_DATASET))


def _require(cond, msg):
    if not cond:
        raise DatasetError(msg)


def parse_dataset(doc: dict, player=None) -> NetworkSpec:
    """Validate a decoded dataset document and build a :class:`NetworkSpec`."""
    for key in ("version", "nodes", "latency_ms", "fixed_edges"):
        _require(key in doc, f"missing top-level key {key!r}")
    _require(doc["version"] == SCHEMA_VERSION, f"unsupported schema version {doc['version']!r}")
    nodes = doc["nodes"]
    _require(isinstance(nodes, list) and len(nodes) >= 2, "need at least two nodes")
    labels, hashes = [], []
    for i, node in enumerate(nodes):
        _require(isinstance(node, dict) and "hash" in node, f"node {i}: expected object with 'hash'")
        label = str(node.get("label", i))
        h = float(node["hash"])
        _require(h >= 0, f"node {i} ({label!r}): negative hash {h}")
        labels.append(label)
        hashes.append(h)
    _require(len(set(labels)) == len(labels), "node labels must be unique")
    n = len(nodes)
    rows = doc["latency_ms"]
    _require(len(rows) == n, f"latency_ms has {len(rows)} rows, expected {n}")
    for i, row in enumerate(rows):
        _require(len(row) == n, f"latency_ms row {i} has {len(row)} columns, expected {n}")
        for j, x in enumerate(row):
            _require(x is not None and float(x) >= 0, f"latency_ms[{i}][{j}] must be non-negative")
        _require(float(row[i]) == 0, f"latency_ms[{i}][{i}] must be zero")
    lat = np.array(rows, dtype=float)
    edges = []
    for k, edge in enumerate(doc["fixed_edges"]):
        _require(len(edge) == 2, f"fixed_edges[{k}] is not a pair")
        a, b = int(edge[0]), int(edge[1])
        _require(0 <= a < n and 0 <= b < n, f"fixed_edges[{k}] = {edge} references an unknown node")
        _require(a != b, f"fixed_edges[{k}] = {edge} is a self-loop")
        edges.append((a, b))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(lat - lat.T) / np.maximum(lat, lat.T)
    if np.nanmax(rel) > 0.1:
        i, j = np.unravel_index(np.nanargmax(rel), rel.shape)
        log.warning("latency matrix asymmetric beyond 10%% at (%s, %s)", labels[i], labels[j])
    delta = int(doc.get("delta", 4))
    gamma = int(doc.get("gamma", n))
    spec = NetworkSpec(
        hash=np.array(hashes), latency=lat, fixed_edges=edges, delta=delta, gamma=gamma, labels=labels
    )
    return spec if player is None else spec.with_player(player)


def load_dataset(path, player=None) -> NetworkSpec:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: not valid JSON ({exc})") from exc
    return parse_dataset(doc, player)


def dataset_document(spec: NetworkSpec, notes: str | None = None) -> dict:
    doc = {
        "version": SCHEMA_VERSION,
        "nodes": [{"label": lab, "hash": float(h)} for lab, h in zip(spec.labels, spec.hash)],
        "latency_ms": [[float(x) for x in row] for row in spec.latency],
        "fixed_edges": [list(e) for e in sorted(spec.fixed_edges)],
        "delta": spec.delta,
        "gamma": spec.gamma,
    }
    if notes:
        doc["notes"] = notes
    return doc


def save_dataset(spec: NetworkSpec, path, notes: str | None = None) -> None:
    with open(path, "w") as f:
        json.dump(dataset_document(spec, notes), f, indent=1)
        f.write("\n")


def generate_hash(mode: str, n: int, seed=None, rate: float = 1.0) -> np.ndarray:
    """Hash shares summing to one: equal split, or normalized exponential draws."""
    if n < 2:
        raise ValueError("need at least two nodes")
    if mode == HASH_UNIFORM:
        return np.full(n, 1.0 / n)
    if mode == HASH_EXPONENTIAL:
        draws = np.random.default_rng(seed).exponential(1.0 / rate, size=n)
        return draws / draws.sum()
    raise ValueError(f"cannot generate hash for mode {mode!r}")


def apply_hash_mode(spec: NetworkSpec, mode: str, seed=None) -> NetworkSpec:
    if mode == HASH_REAL:
        return spec
    return NetworkSpec(
        hash=generate_hash(mode, spec.n, seed),
        latency=spec.latency,
        fixed_edges=spec.fixed_edges,
        delta=spec.delta,
        gamma=spec.gamma,
        player=spec.player,
        labels=spec.labels,
    )


def generate_connections(n, v0, delta, gamma, seed=None, max_retries=200):
    """Random connections ``(initiator, target)``: every node but ``v0`` opens ``delta``.

    Each connection is a two-way link, so both endpoints' incoming counts
    grow by one (except that nothing leaves ``v0``). Dead ends restart the
    whole draw; after ``max_retries`` restarts the parameters are rejected.
    """
    rng = np.random.default_rng(seed)
    if delta > n - 1:
        raise ValueError("delta exceeds the number of possible targets")
    for _ in range(max_retries):
        indeg = np.zeros(n, dtype=int)
        linked = [set() for _ in range(n)]
        conns = []
        ok = True
        for u in rng.permutation(n):
            u = int(u)
            if u == v0:
                continue
            for _ in range(delta):
                options = [
                    t
                    for t in range(n)
                    if t != u
                    and t not in linked[u]
                    and indeg[t] < gamma
                    and (t == v0 or indeg[u] < gamma)
                ]
                if not options:
                    ok = False
                    break
                t = int(options[rng.integers(len(options))])
                conns.append((u, t))
                linked[u].add(t)
                linked[t].add(u)
                indeg[t] += 1
                if t != v0:
                    indeg[u] += 1
            if not ok:
                break
        if ok:
            return conns
    raise ValueError(f"no topology with n={n}, delta={delta}, gamma={gamma} after {max_retries} attempts")


def generate_fixed_topology(n, v0, delta, gamma, seed=None, max_retries=200) -> frozenset:
    """Two-way fixed edges from :func:`generate_connections`, with nothing leaving ``v0``."""
    edges = set()
    for u, t in generate_connections(n, v0, delta, gamma, seed, max_retries):
        edges.add((u, t))
        if t != v0:
            edges.add((t, u))
    return frozenset(edges)


def synthetic_network(
    n: int = 10,
    delta: int = 4,
    gamma: int | None = None,
    seed=None,
    hash_mode: str = HASH_UNIFORM,
    player: int = 0,
    dim: int = 2,
    scale: float = 100.0,
    return_points: bool = False,
):
    """Network whose latencies are Euclidean distances between random points.

    No fixed edge touches ``player``, so saving the network and loading it
    back with the same player gives an identical game.

    Such a latency matrix is exactly embeddable in any coordinate space of
    dimension >= ``dim``.
    """
    rng = np.random.default_rng(seed)
    gamma = n if gamma is None else gamma
    pts = rng.uniform(0.0, scale, size=(n, dim))
    lat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    np.fill_diagonal(lat, 0.0)
    seeds = rng.integers(0, 2**32, size=2)
    # links other nodes opened towards the player are dropped as well: the
    # player's links come from its action, as for a dataset loaded with a player
    drawn = generate_fixed_topology(n, player, delta, gamma, seed=int(seeds[0]))
    edges = frozenset(e for e in drawn if player not in e)
    hashes = generate_hash(hash_mode, n, int(seeds[1])) if hash_mode != HASH_REAL else np.full(n, 1.0 / n)
    spec = NetworkSpec(hash=hashes, latency=lat, fixed_edges=edges, delta=delta, gamma=gamma, player=player)
    return (spec, pts) if return_points else spec
