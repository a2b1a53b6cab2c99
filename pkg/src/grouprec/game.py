"""Non-cooperative topic-selection game among group members.

Each member picks one topic. Their profit is their normalized interest in
the topic split across everyone who picked it, their cost grows with social
influence and lack of interest, and utility is the scaled difference.
Sequential best responses search for a pure Nash equilibrium; the share of
members on each topic is the group recommendation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cbn import CbnModel
from .data import Group


@dataclass(frozen=True)
class GameConfig:
    eta1: float = 0.6
    eta2: float = 0.4
    n: float = 2.0
    max_rounds: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.eta1 < 0:
            raise ValueError("eta1 must be nonnegative")
        if self.eta2 <= 0:
            raise ValueError("eta2 must be positive")
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class NormalizedModel:
    I_N: np.ndarray
    S_N: np.ndarray

    @property
    def num_topics(self) -> int:
        return self.I_N.shape[1]


def _minmax(x: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        return np.full(x.shape, 0.5)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def normalize(model: CbnModel) -> NormalizedModel:
    """Global min-max scaling of ``I`` and ``S`` to [0, 1]; constant matrices map to 0.5."""
    return NormalizedModel(_minmax(model.I), _minmax(model.S))


@dataclass(frozen=True)
class StrategyProfile:
    """Topic choice of each group member, aligned with ``members`` (user indices)."""

    members: tuple[int, ...]
    strategies: tuple[int, ...]
    round: int = 0

    def count(self, topic: int) -> int:
        return sum(1 for s in self.strategies if s == topic)

    def deviate(self, pos: int, topic: int) -> StrategyProfile:
        s = list(self.strategies)
        s[pos] = int(topic)
        return replace(self, strategies=tuple(s))


def profit(pos: int, profile: StrategyProfile, I_N: np.ndarray) -> float:
    """Normalized interest in the chosen topic divided by how many members chose it."""
    topic = profile.strategies[pos]
    return float(I_N[profile.members[pos], topic]) / profile.count(topic)


def cost(user: int, topic: int, S_N: np.ndarray, I_N: np.ndarray, cfg: GameConfig) -> float:
    return cfg.eta1 * float(S_N[user, topic] + 1.0 - I_N[user, topic]) ** cfg.n


def utility(pos: int, profile: StrategyProfile, models: NormalizedModel, cfg: GameConfig) -> float:
    user, topic = profile.members[pos], profile.strategies[pos]
    return cfg.eta2 * (profit(pos, profile, models.I_N)
                       - cost(user, topic, models.S_N, models.I_N, cfg))


def best_response(pos: int, profile: StrategyProfile, models: NormalizedModel,
                  cfg: GameConfig) -> int:
    """Utility-maximizing topic for member ``pos`` with everyone else held fixed.

    Ties go to the smallest topic index.
    """
    best, best_h = 0, -np.inf
    for d in range(models.num_topics):
        h = utility(pos, profile.deviate(pos, d), models, cfg)
        if h > best_h:
            best, best_h = d, h
    return best


@dataclass
class Equilibrium:
    profile: StrategyProfile
    utilities: list[float]
    converged: bool
    rounds_used: int

    @property
    def strategies(self) -> tuple[int, ...]:
        return self.profile.strategies

    def to_dict(self, group_id=None, num_topics: int | None = None) -> dict:
        out = {
            "group_id": group_id,
            "members": list(self.profile.members),
            "strategies": list(self.profile.strategies),
            "utilities": self.utilities,
            "converged": self.converged,
            "rounds_used": self.rounds_used,
        }
        if num_topics is not None:
            out["ratios"] = recommend(self, num_topics).tolist()
        return out

    def to_json(self, group_id=None, num_topics: int | None = None) -> str:
        return json.dumps(self.to_dict(group_id, num_topics))


def _members_of(group: Group | Sequence[int]) -> tuple[int, ...]:
    members = group.members if isinstance(group, Group) else group
    return tuple(int(m) for m in members)


def find_equilibrium(group: Group | Sequence[int], models: NormalizedModel,
                     cfg: GameConfig) -> Equilibrium:
    """Sequential best-response dynamics from each member's most interesting topic.

    Members move in a seeded random order each round, and only on a strict
    utility gain. A round with no move means a pure Nash equilibrium. If
    ``max_rounds`` runs out, the profile with the highest total utility seen
    is returned with ``converged=False``.
    """
    members = _members_of(group)
    if not members:
        raise ValueError("group has no members")
    rng = np.random.default_rng([cfg.seed, *members])
    start = tuple(int(np.argmax(models.I_N[u])) for u in members)
    profile = StrategyProfile(members, start, 0)

    def utilities(p):
        return [utility(k, p, models, cfg) for k in range(len(members))]

    best_seen, best_total = profile, sum(utilities(profile))
    for rnd in range(1, cfg.max_rounds + 1):
        moved = False
        for pos in rng.permutation(len(members)):
            current = utility(pos, profile, models, cfg)
            d = best_response(pos, profile, models, cfg)
            candidate = profile.deviate(pos, d)
            if utility(pos, candidate, models, cfg) > current:
                profile = candidate
                moved = True
        profile = replace(profile, round=rnd)
        if not moved:
            return Equilibrium(profile, utilities(profile), True, rnd)
        total = sum(utilities(profile))
        if total > best_total:
            best_seen, best_total = profile, total
    return Equilibrium(best_seen, utilities(best_seen), False, cfg.max_rounds)


def is_nash(profile: StrategyProfile, models: NormalizedModel, cfg: GameConfig) -> bool:
    """Exhaustive unilateral-deviation check over every member and topic."""
    for pos in range(len(profile.members)):
        h = utility(pos, profile, models, cfg)
        for d in range(models.num_topics):
            if utility(pos, profile.deviate(pos, d), models, cfg) > h:
                return False
    return True


def recommend(eq: Equilibrium | StrategyProfile, num_topics: int) -> np.ndarray:
    """Share of members settled on each topic."""
    strategies = eq.strategies
    return np.bincount(strategies, minlength=num_topics).astype(np.float64) / len(strategies)
