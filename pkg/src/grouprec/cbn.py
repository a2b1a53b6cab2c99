"""Collaborative Bayesian network: logistic likelihood with Gaussian priors, fit by SGD.

For user i and an item of topic d the selection probability is
``sigmoid(pi(i, d) * I(i, d) + S(i, d))`` where ``pi`` is the share of the
user's training interactions on topic d, ``I`` the inherent interest and
``S`` the social influence. ``I`` and ``S`` carry Gaussian priors and are
fit by per-example SGD on the negative log posterior.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .data import InteractionDataset

EPS = 1e-12


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class CbnHyperparams:
    mu1: float = 45.0
    sigma1_sq: float = 70.0
    mu2: float = 12.0
    sigma2_sq: float = 30.0
    learning_rate: float = 0.01
    convergence_threshold: float = 0.001
    max_epochs: int = 200
    negative_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma1_sq <= 0 or self.sigma2_sq <= 0:
            raise ValueError("prior variances must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.convergence_threshold <= 0:
            raise ValueError("convergence_threshold must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.negative_ratio < 0:
            raise ValueError("negative_ratio must be nonnegative")


@dataclass(frozen=True)
class CbnModel:
    """Latent interest ``I``, social influence ``S`` and contribution rates ``pi``, all ``(users, D)``."""

    I: np.ndarray
    S: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        for name in ("I", "S", "pi"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.I.shape == self.S.shape == self.pi.shape) or self.I.ndim != 2:
            raise ValueError("I, S and pi must share a (users, D) shape")

    @property
    def num_users(self) -> int:
        return self.I.shape[0]

    @property
    def num_topics(self) -> int:
        return self.I.shape[1]

    def to_json(self, hp: CbnHyperparams | None = None) -> str:
        obj = {
            "num_users": self.num_users,
            "num_topics": self.num_topics,
            "hyperparams": asdict(hp) if hp is not None else None,
            # repr round-trips float64 exactly
            "I": [float(x) for x in self.I.ravel()],
            "S": [float(x) for x in self.S.ravel()],
            "pi": [float(x) for x in self.pi.ravel()],
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> CbnModel:
        obj = json.loads(text)
        shape = (obj["num_users"], obj["num_topics"])
        return cls(*(np.asarray(obj[k], dtype=np.float64).reshape(shape) for k in ("I", "S", "pi")))


@dataclass(frozen=True)
class TrainingExample:
    user: int
    item: int
    topic: int
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


@dataclass
class TrainReport:
    epochs_run: int
    final_objective: float
    initial_objective: float
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False


def compute_contribution_rates(train: InteractionDataset) -> np.ndarray:
    counts = train.topic_counts().astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    pi = np.full_like(counts, 1.0 / train.num_topics)
    active = totals[:, 0] > 0
    pi[active] = counts[active] / totals[active]
    return pi


def selection_probability(pi_id, I_id, S_id):
    """P(B=1) = 1 / (1 + exp(-pi*I - S)), computed without overflow."""
    z = np.asarray(pi_id * I_id + S_id, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def rejection_probability(pi_id, I_id, S_id):
    """P(B=0), the complement of :func:`selection_probability`."""
    return 1.0 - selection_probability(pi_id, I_id, S_id)


def _loss(y, pi, I, S, hp: CbnHyperparams):
    z = pi * I + S
    # -log sigmoid(+-z) via logaddexp, clipped where p would be clamped to [EPS, 1 - EPS]
    with np.errstate(over="ignore", invalid="ignore"):
        nll = y * np.logaddexp(0.0, -z) + (1 - y) * np.logaddexp(0.0, z)
        nll = np.clip(nll, -math.log1p(-EPS), -math.log(EPS))
        return nll + (I - hp.mu1) ** 2 / (2 * hp.sigma1_sq) + (S - hp.mu2) ** 2 / (2 * hp.sigma2_sq)


def example_loss(ex: TrainingExample, model: CbnModel, hp: CbnHyperparams) -> float:
    u, d = ex.user, ex.topic
    return float(_loss(ex.label, model.pi[u, d], model.I[u, d], model.S[u, d], hp))


def example_gradients(ex: TrainingExample, model: CbnModel, hp: CbnHyperparams) -> tuple[float, float]:
    """Partial derivatives of :func:`example_loss` w.r.t. ``I[u, d]`` and ``S[u, d]``."""
    u, d = ex.user, ex.topic
    pi, I, S = model.pi[u, d], model.I[u, d], model.S[u, d]
    r = ex.label - selection_probability(pi, I, S)
    return (float(-r * pi + (I - hp.mu1) / hp.sigma1_sq),
            float(-r + (S - hp.mu2) / hp.sigma2_sq))


def objective(model: CbnModel, users, topics, labels, hp: CbnHyperparams) -> float:
    """Mean per-example objective over a batch of ``(user, topic, label)`` triples."""
    users, topics = np.asarray(users), np.asarray(topics)
    losses = _loss(np.asarray(labels, dtype=np.float64), model.pi[users, topics],
                   model.I[users, topics], model.S[users, topics], hp)
    return float(np.mean(losses))


def _negative_counts(positives: int, ratio: float, available: int) -> int:
    # round first so that e.g. 0.1 * 30 does not ceil to 4
    return min(available, math.ceil(round(ratio * positives, 9)))


def _negative_pairs(train: InteractionDataset, ratio: float, rng: np.random.Generator,
                    candidates: list[np.ndarray] | None = None) -> np.ndarray:
    if candidates is None:
        candidates = _candidate_items(train)
    counts = train.interaction_counts()
    chunks = []
    for u, cand in enumerate(candidates):
        k = _negative_counts(int(counts[u]), ratio, len(cand))
        if k:
            picked = rng.choice(cand, size=k, replace=False)
            chunks.append(np.column_stack([np.full(k, u), picked]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def _candidate_items(train: InteractionDataset) -> list[np.ndarray]:
    all_items = np.arange(train.num_items)
    return [np.setdiff1d(all_items, train.items_of_user(u), assume_unique=True)
            for u in range(train.num_users)]


def sample_negatives(train: InteractionDataset, ratio: float, seed) -> list[TrainingExample]:
    """Draw ``ceil(ratio * positives)`` unobserved items per user, without replacement."""
    if ratio < 0:
        raise ValueError("ratio must be nonnegative")
    pairs = _negative_pairs(train, ratio, np.random.default_rng(seed))
    topics = train.topic_of_item
    return [TrainingExample(int(u), int(j), int(topics[j]), 0) for u, j in pairs]


@njit(cache=True)
def _sgd_epoch(users, topics, labels, pi, I, S, lr, mu1, s1, mu2, s2):
    for k in range(users.shape[0]):
        u = users[k]
        d = topics[k]
        p_ = pi[u, d]
        z = p_ * I[u, d] + S[u, d]
        if z >= 0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            p = e / (1.0 + e)
        r = labels[k] - p
        gI = -r * p_ + (I[u, d] - mu1) / s1
        gS = -r + (S[u, d] - mu2) / s2
        I[u, d] -= lr * gI
        S[u, d] -= lr * gS


def train(train: InteractionDataset, hp: CbnHyperparams) -> tuple[CbnModel, TrainReport]:
    """Fit ``I`` and ``S`` by per-example SGD, starting from the prior means.

    Every epoch pairs all positives with freshly sampled negatives, shuffles
    them and takes one SGD step per example. The epoch objective is the mean
    per-example loss over that epoch's examples after its updates; training
    stops when it moves by less than ``convergence_threshold`` (the first
    epoch compares against the same examples before any update).
    """
    if train.num_interactions == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(hp.seed)
    pi = compute_contribution_rates(train)
    I = np.full((train.num_users, train.num_topics), hp.mu1, dtype=np.float64)
    S = np.full_like(I, hp.mu2)
    topic_of = train.topic_of_item
    pos = train.interactions
    candidates = _candidate_items(train)

    trace: list[float] = []
    prev = None
    initial = math.nan
    converged = False
    epoch = 0
    for epoch in range(1, hp.max_epochs + 1):
        neg = _negative_pairs(train, hp.negative_ratio, rng, candidates)
        pairs = np.concatenate([pos, neg])
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        order = rng.permutation(len(pairs))
        users = np.ascontiguousarray(pairs[order, 0])
        topics = np.ascontiguousarray(topic_of[pairs[order, 1]])
        labels = labels[order]
        if prev is None:
            prev = objective(CbnModel(I, S, pi), users, topics, labels, hp)
            initial = prev
        _sgd_epoch(users, topics, labels, pi, I, S, hp.learning_rate,
                   hp.mu1, hp.sigma1_sq, hp.mu2, hp.sigma2_sq)
        J = objective(CbnModel(I, S, pi), users, topics, labels, hp)
        if not (math.isfinite(J) and np.isfinite(I).all() and np.isfinite(S).all()):
            raise TrainingDivergedError(f"objective became non-finite at epoch {epoch}")
        trace.append(J)
        if abs(J - prev) < hp.convergence_threshold:
            converged = True
            break
        prev = J

    report = TrainReport(epochs_run=epoch, final_objective=trace[-1],
                         initial_objective=initial, objective_trace=trace,
                         converged=converged)
    return CbnModel(I, S, pi), report
