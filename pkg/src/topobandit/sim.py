"""Seeded multi-round experiments: config, runner, logs and policy comparison."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .agent import COBALT, FIXED, POLICIES, Agent, Environment, RoundRecord
from .data import apply_hash_mode, load_dataset, sample_dataset_path
from .network import NetworkSpec, RewardRules

log = logging.getLogger(__name__)

ROUND_FIELDS = ["t", "explore", "action", "observed_reward", "predicted_reward", "loss", "player_Av", "network_Abar"]
SUMMARY_FIELDS = [
    "policy", "player", "rounds", "window", "mean_reward", "mean_player_Av", "mean_network_Abar",
    "mean_loss", "error_rounds",
]
SAMPLE = "sample"


def fmt(x) -> str:
    """Round-trippable decimal rendering; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class SimConfig:
    dataset: str = SAMPLE
    player: str | int = 0
    policy: str = COBALT
    rounds: int = 300
    delta: int = 4
    gamma: int | None = None
    enforce_gamma: bool = True
    epsilon: float = 0.1
    beta: float = 1.0
    dim: int = 5
    eta: float = 10000.0
    spread: float = 100.0
    dist_floor: float = 1e-6
    sentinel: float = -10.0
    warm_start: bool = False
    hash_mode: str = "real"
    oracle_topology: str = "random"
    oracle_density: float | None = None
    link_mode: str = "bidirectional"
    include_self: bool = True
    strict: bool = True
    threshold: float = 0.9
    candidates: str = "single-swap"
    subsample_size: int = 50
    explore: str = "swap"
    fixed_action: list | None = None
    window: int = 100
    seed_env: int = 0
    seed_agent: int = 0
    seed_oracle: int = 0
    svg: bool = False

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if self.window < 1:
            raise ValueError("window must be positive")
        if self.oracle_topology not in (oracle.RANDOM_TOPOLOGY, oracle.EXACT_TOPOLOGY):
            raise ValueError(f"unknown oracle topology {self.oracle_topology!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as f:
            doc = json.load(f)
        cfg = cls.from_dict(doc)
        # dataset paths are relative to the config file
        if cfg.dataset != SAMPLE and not Path(cfg.dataset).is_absolute():
            cfg.dataset = str((Path(path).parent / cfg.dataset).resolve())
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def rules(self) -> RewardRules:
        return RewardRules(self.threshold, self.include_self, self.strict, self.link_mode)


def resolve_network(cfg: SimConfig) -> NetworkSpec:
    path = sample_dataset_path() if cfg.dataset == SAMPLE else cfg.dataset
    base = load_dataset(path)
    base = NetworkSpec(
        hash=base.hash,
        latency=base.latency,
        fixed_edges=base.fixed_edges,
        delta=cfg.delta,
        gamma=base.gamma if cfg.gamma is None else cfg.gamma,
        labels=base.labels,
    )
    spec = base.with_player(cfg.player)
    return apply_hash_mode(spec, cfg.hash_mode, cfg.seed_env)


def build_model(cfg: SimConfig, spec: NetworkSpec) -> oracle.CoordinateModel:
    density = cfg.oracle_density
    if density is None:
        density = oracle.default_density(spec.n, spec.delta)
    model = oracle.init_model(
        spec.n,
        cfg.dim,
        seed=cfg.seed_oracle,
        player=spec.player,
        density=density,
        mode=cfg.oracle_topology,
        fixed_edges=spec.fixed_edges,
        spread=cfg.spread,
        eta=cfg.eta,
        dist_floor=cfg.dist_floor,
        sentinel=cfg.sentinel,
    )
    if cfg.warm_start:
        oracle.warm_start(model, spec.latency[spec.player])
    return model


@dataclass
class RunResult:
    config: SimConfig
    spec: NetworkSpec
    records: list
    summary: dict
    initial_model: oracle.CoordinateModel | None = None
    final_model: oracle.CoordinateModel | None = None
    out_dir: Path | None = None
    extra: dict = field(default_factory=dict)


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summarize(records: list, cfg: SimConfig, spec: NetworkSpec) -> dict:
    tail = records[-cfg.window:]
    return {
        "policy": cfg.policy,
        "player": spec.labels[spec.player],
        "rounds": len(records),
        "window": len(tail),
        "mean_reward": _mean(r.observed for r in tail),
        "mean_player_Av": _mean(r.player_latency for r in tail),
        "mean_network_Abar": _mean(r.mean_latency for r in tail),
        "mean_loss": _mean(r.loss for r in tail),
        "error_rounds": sum(r.error is not None for r in records),
    }


def round_row(rec: RoundRecord, spec: NetworkSpec) -> list[str]:
    action = ";".join(sorted(spec.labels[u] for u in rec.action))
    return [
        fmt(rec.t), fmt(rec.explore), action, fmt(rec.observed), fmt(rec.predicted),
        fmt(rec.loss), fmt(rec.player_latency), fmt(rec.mean_latency),
    ]


def run(cfg: SimConfig, out_dir=None) -> RunResult:
    """Play ``cfg.rounds`` rounds; when ``out_dir`` is given write the run directory."""
    spec = resolve_network(cfg)
    env = Environment(spec, cfg.beta, cfg.rules, cfg.enforce_gamma)
    model = build_model(cfg, spec) if cfg.policy == COBALT else None
    initial = model.copy() if model is not None else None
    fixed = None
    if cfg.policy == FIXED:
        if not cfg.fixed_action:
            raise ValueError("fixed policy needs fixed_action")
        fixed = [spec.index_of(u) for u in cfg.fixed_action]
    agent = Agent(
        spec,
        cfg.policy,
        model=model,
        epsilon=cfg.epsilon,
        beta=cfg.beta,
        rules=cfg.rules,
        rng=np.random.default_rng(cfg.seed_agent),
        candidate_mode=cfg.candidates,
        subsample_size=cfg.subsample_size,
        explore_mode=cfg.explore,
        enforce_gamma=cfg.enforce_gamma,
        fixed_action=fixed,
    )

    writer = fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "config.json", "w") as f:
            json.dump(cfg.to_dict(), f, indent=2)
            f.write("\n")
        if initial is not None:
            oracle.write_coordinates(initial, out_dir / "coords_initial.csv", spec.labels)
        fh = open(out_dir / "rounds.csv", "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROUND_FIELDS)

    records = []
    try:
        for t in range(cfg.rounds):
            rec = agent.step(env, t)
            if rec.error:
                log.warning("round %d: %s", t, rec.error)
            records.append(rec)
            if writer is not None:
                writer.writerow(round_row(rec, spec))
    finally:
        if fh is not None:
            fh.close()

    summary = summarize(records, cfg, spec)
    result = RunResult(cfg, spec, records, summary, initial, model, out_dir)
    if out_dir is not None:
        write_csv(out_dir / "summary.csv", SUMMARY_FIELDS, [summary])
        if model is not None:
            oracle.write_coordinates(model, out_dir / "coords_final.csv", spec.labels)
        if cfg.svg:
            from .plotting import reward_curve

            reward_curve(out_dir / "rounds.csv", out_dir / "reward_curve.svg", title=f"{cfg.policy} @ {summary['player']}")
    return result


def write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([fmt(row[k]) if not isinstance(row[k], str) else row[k] for k in fields])


COMPARE_FIELDS = ["policy", "A_v", "reward", "loss", "runs"]


def _summary_only(cfg: SimConfig) -> dict:
    return run(cfg).summary


def compare(cfg: SimConfig, policies, seeds=(0,), jobs: int = 1) -> list[dict]:
    """Trailing-window averages per policy, each averaged over ``seeds``.

    Seed ``s`` sets all three seeds (environment, agent, oracle) to
    ``cfg.seed_* + s`` so every policy faces the same environment draws.
    """
    configs = []
    for policy in policies:
        for s in seeds:
            configs.append(
                cfg.replace(
                    policy=policy,
                    seed_env=cfg.seed_env + s,
                    seed_agent=cfg.seed_agent + s,
                    seed_oracle=cfg.seed_oracle + s,
                    svg=False,
                )
            )
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            summaries = list(pool.map(_summary_only, configs))
    else:
        summaries = [_summary_only(c) for c in configs]
    rows = []
    per = len(seeds)
    for i, policy in enumerate(policies):
        chunk = summaries[i * per:(i + 1) * per]
        rows.append({
            "policy": policy,
            "A_v": _mean(s["mean_player_Av"] for s in chunk),
            "reward": _mean(s["mean_reward"] for s in chunk),
            "loss": _mean(s["mean_loss"] for s in chunk),
            "runs": per,
        })
    return rows


def compare_configs(configs: list[SimConfig]) -> list[dict]:
    """One row per explicit config; all must share dataset and player."""
    if len(configs) < 2:
        raise ValueError("compare needs at least two configs")
    first = configs[0]
    for c in configs[1:]:
        if c.dataset != first.dataset or c.player != first.player:
            raise ValueError("compared runs must share dataset and player")
    rows = []
    for c in configs:
        s = run(c).summary
        rows.append({
            "policy": c.policy,
            "A_v": s["mean_player_Av"],
            "reward": s["mean_reward"],
            "loss": s["mean_loss"],
            "runs": 1,
        })
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'policy':<18}{'A_v':>12}{'reward':>12}{'loss':>12}"]
    for r in rows:
        av = "" if r["A_v"] is None else f"{r['A_v']:.3f}"
        reward = "" if r["reward"] is None else f"{r['reward']:.4f}"
        loss = "" if r["loss"] is None else f"{r['loss']:.3g}"
        lines.append(f"{r['policy']:<18}{av:>12}{reward:>12}{loss:>12}")
    return "\n".join(lines)
