"""Per-round neighbour selection: the epsilon-greedy coordinate agent and baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import oracle
from .network import (
    DEFAULT_RULES,
    ConstraintViolation,
    NetworkSpec,
    RewardRules,
    UnreachablePercentile,
    eligible_targets,
    evaluate_action,
    validate_action,
)

COBALT = "cobalt"
RANDOM = "random"
LEAST_LATENCY = "least-latency"
MOST_HASH = "most-hash-power"
FIXED = "fixed"
POLICIES = (COBALT, RANDOM, LEAST_LATENCY, MOST_HASH, FIXED)

SINGLE_SWAP = "single-swap"
EXHAUSTIVE = "exhaustive"
SUBSAMPLE = "subsample"
CANDIDATE_MODES = (SINGLE_SWAP, EXHAUSTIVE, SUBSAMPLE)

EXPLORE_SWAP = "swap"
EXPLORE_RESAMPLE = "resample"


@dataclass
class RoundRecord:
    t: int
    action: tuple
    observed: float | None
    predicted: float | None = None
    loss: float | None = None
    explore: bool = False
    player_latency: float | None = None
    mean_latency: float | None = None
    error: str | None = None


class Environment:
    """Ground truth the agent plays against; only rewards leak out."""

    def __init__(self, spec: NetworkSpec, beta: float = 1.0, rules: RewardRules = DEFAULT_RULES,
                 enforce_gamma: bool = True):
        self.spec = spec
        self.beta = beta
        self.rules = rules
        self.enforce_gamma = enforce_gamma

    def play(self, action):
        return evaluate_action(self.spec, action, self.beta, self.rules, self.enforce_gamma)


def random_action(rng: np.random.Generator, spec: NetworkSpec, enforce_gamma: bool = True) -> tuple:
    """Uniformly random ``delta``-subset of the eligible targets."""
    pool = eligible_targets(spec, enforce_gamma)
    if len(pool) < spec.delta:
        raise ValueError(f"only {len(pool)} eligible targets for delta={spec.delta}")
    picks = rng.choice(len(pool), size=spec.delta, replace=False)
    return tuple(sorted(pool[i] for i in picks))


def least_latency_action(spec: NetworkSpec, enforce_gamma: bool = True) -> tuple:
    row = spec.latency[spec.player]
    pool = sorted(eligible_targets(spec, enforce_gamma), key=lambda u: (row[u], u))
    if len(pool) < spec.delta:
        raise ValueError("not enough eligible targets")
    return tuple(sorted(pool[: spec.delta]))


def most_hash_action(spec: NetworkSpec, enforce_gamma: bool = True) -> tuple:
    pool = sorted(eligible_targets(spec, enforce_gamma), key=lambda u: (-spec.hash[u], u))
    if len(pool) < spec.delta:
        raise ValueError("not enough eligible targets")
    return tuple(sorted(pool[: spec.delta]))


class Agent:
    """One strategic node choosing its ``delta`` neighbours each round.

    Only public information is read from ``spec``: hash shares, the
    player's own ping row, ``delta``/``gamma`` and which targets still
    accept connections. Rewards come from the :class:`Environment`.
    """

    def __init__(
        self,
        spec: NetworkSpec,
        policy: str = COBALT,
        *,
        model: oracle.CoordinateModel | None = None,
        epsilon: float = 0.1,
        beta: float = 1.0,
        rules: RewardRules = DEFAULT_RULES,
        rng: np.random.Generator | None = None,
        candidate_mode: str = SINGLE_SWAP,
        subsample_size: int = 50,
        explore_mode: str = EXPLORE_SWAP,
        enforce_gamma: bool = True,
        fixed_action: Sequence[int] | None = None,
    ):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if policy == COBALT and model is None:
            raise ValueError("cobalt policy needs a coordinate model")
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if candidate_mode not in CANDIDATE_MODES:
            raise ValueError(f"unknown candidate mode {candidate_mode!r}")
        self.spec = spec
        self.policy = policy
        self.model = model
        self.epsilon = epsilon
        self.beta = beta
        self.rules = rules
        self.rng = rng if rng is not None else np.random.default_rng()
        self.candidate_mode = candidate_mode
        self.subsample_size = subsample_size
        self.explore_mode = explore_mode
        self.enforce_gamma = enforce_gamma
        self.eligible = eligible_targets(spec, enforce_gamma)

        if policy == FIXED:
            if fixed_action is None:
                raise ValueError("fixed policy needs an action")
            self.current = tuple(sorted(int(u) for u in fixed_action))
        elif policy == LEAST_LATENCY:
            self.current = least_latency_action(spec, enforce_gamma)
        elif policy == MOST_HASH:
            self.current = most_hash_action(spec, enforce_gamma)
        else:
            self.current = random_action(self.rng, spec, enforce_gamma)
        problems = validate_action(spec, self.current, enforce_gamma)
        if problems:
            raise ConstraintViolation(problems)

    def candidates(self) -> list[tuple]:
        if self.candidate_mode == SINGLE_SWAP:
            return oracle.single_swap_candidates(self.current, self.eligible)
        full = oracle.exhaustive_candidates(self.eligible, self.spec.delta)
        if self.candidate_mode == EXHAUSTIVE:
            return full
        return oracle.subsample_candidates(full, self.subsample_size, self.rng)

    def choose(self) -> tuple[tuple, bool]:
        """Action for this round and whether it came from the explore branch."""
        if self.policy == RANDOM:
            return random_action(self.rng, self.spec, self.enforce_gamma), False
        if self.policy != COBALT:
            return self.current, False
        draw = self.rng.random()
        cands = self.candidates()
        if draw < self.epsilon:
            if self.explore_mode == EXPLORE_RESAMPLE:
                return random_action(self.rng, self.spec, self.enforce_gamma), True
            return cands[int(self.rng.integers(len(cands)))], True
        return oracle.best_action(self.model, cands, self.spec.hash, self.beta, self.rules), False

    def step(self, env: Environment, t: int) -> RoundRecord:
        action, explore = self.choose()
        self.current = action
        try:
            outcome = env.play(action)
        except (UnreachablePercentile, ConstraintViolation) as exc:
            return RoundRecord(t, action, None, explore=explore, error=str(exc))
        rec = RoundRecord(
            t,
            action,
            outcome.reward,
            explore=explore,
            player_latency=outcome.player_latency,
            mean_latency=outcome.mean_latency,
        )
        if self.policy == COBALT:
            loss, est = oracle.update_model(self.model, action, outcome.reward, self.spec.hash, self.beta, self.rules)
            rec.predicted = est.value
            rec.loss = loss
        return rec
