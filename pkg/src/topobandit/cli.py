"""Command line: ``run``, ``compare`` and ``generate``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import typing
from pathlib import Path

from . import sim
from .data import HASH_UNIFORM, save_dataset, synthetic_network

log = logging.getLogger("topobandit")

# handled specially or not exposed as plain flags
_SPECIAL = {"oracle_topology", "oracle_density", "fixed_action", "svg"}


def _field_type(f):
    hints = typing.get_type_hints(sim.SimConfig)
    t = hints[f.name]
    args = [a for a in typing.get_args(t) if a is not type(None)]
    if args:
        t = args[0]
    if f.name == "player":
        return str
    return t


def _add_config_flags(p: argparse.ArgumentParser):
    for f in dataclasses.fields(sim.SimConfig):
        if f.name in _SPECIAL:
            continue
        flag = "--" + f.name.replace("_", "-")
        t = _field_type(f)
        if t is bool:
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(flag, dest=f.name, type=t, default=None)
    p.add_argument("--oracle-topology", dest="oracle_topology", default=None,
                   help="random[:<density>] or exact")
    p.add_argument("--fixed-action", dest="fixed_action", default=None,
                   help="comma-separated node labels for the fixed policy")


def _resolve_config(args) -> sim.SimConfig:
    cfg = sim.SimConfig.from_json(args.config) if args.config else sim.SimConfig()
    changes = {}
    for f in dataclasses.fields(sim.SimConfig):
        if f.name in _SPECIAL:
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            changes[f.name] = value
    if args.oracle_topology:
        mode, _, density = args.oracle_topology.partition(":")
        changes["oracle_topology"] = mode
        if density:
            changes["oracle_density"] = float(density)
    if args.fixed_action:
        changes["fixed_action"] = [s.strip() for s in args.fixed_action.split(",")]
    if isinstance(changes.get("player"), str) and changes["player"].isdigit():
        changes["player"] = int(changes["player"])
    if getattr(args, "svg", False):
        changes["svg"] = True
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out) if args.out else None
    result = sim.run(cfg, out)
    s = result.summary
    reward = "n/a" if s["mean_reward"] is None else f"{s['mean_reward']:.6f}"
    av = "n/a" if s["mean_player_Av"] is None else f"{s['mean_player_Av']:.3f}"
    print(f"{s['policy']} @ {s['player']}: mean reward {reward}, mean A_v {av} over last {s['window']} rounds")
    if s["error_rounds"]:
        print(f"{s['error_rounds']} of {s['rounds']} rounds had no defined reward", file=sys.stderr)
    if out:
        print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if len(policies) < 2:
        raise ValueError("compare needs at least two policies")
    rows = sim.compare(cfg, policies, seeds=range(args.seeds), jobs=args.jobs)
    print(sim.format_table(rows))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        sim.write_csv(out / "comparison.csv", sim.COMPARE_FIELDS, rows)
        if args.svg:
            from .plotting import comparison_chart

            comparison_chart(rows, out / "comparison.svg")
        print(f"wrote {out}")
    return 0


def cmd_generate(args) -> int:
    spec = synthetic_network(args.n, args.delta, args.gamma, seed=args.seed, hash_mode=args.hash_mode)
    full = spec.__class__(
        hash=spec.hash, latency=spec.latency, fixed_edges=spec.fixed_edges,
        delta=spec.delta, gamma=spec.gamma, labels=spec.labels,
    )
    save_dataset(full, args.out, notes=f"synthetic network, seed {args.seed}, player node 0")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topobandit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play one seeded experiment")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="run directory for logs and dumps")
    p.add_argument("--svg", action="store_true", help="also render reward_curve.svg")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="trailing-window averages for several policies")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--policies", default="cobalt,random,least-latency,most-hash-power")
    p.add_argument("--seeds", type=int, default=1, help="number of seed offsets to average")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="directory for comparison.csv")
    p.add_argument("--svg", action="store_true", help="also render comparison.svg")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--delta", type=int, default=4)
    p.add_argument("--gamma", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hash-mode", default=HASH_UNIFORM)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
