"""Interaction datasets, ingestion, splitting, group sampling and synthetic data."""
from __future__ import annotations

import json
import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

_logger = logging.getLogger(__name__)


class DataError(ValueError):
    """Raised for malformed input files or datasets that end up empty."""


class GroupShortfallWarning(UserWarning):
    """Fewer groups than requested satisfied the density constraint."""


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.int64).reshape(-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class InteractionDataset:
    """Binary user-item interactions with a social graph and one topic per item.

    Users and items are dense 0-based indices; ``user_ids``/``item_ids`` keep the
    original opaque identifiers. ``interactions`` is an ``(n, 2)`` array of
    unique ``(user, item)`` rows (each meaning B(i, j) = 1), sorted
    lexicographically. ``social_edges`` holds undirected ``(u, v)`` rows with
    ``u < v``.
    """

    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    interactions: np.ndarray
    social_edges: np.ndarray
    topic_of_item: np.ndarray
    num_topics: int

    def __post_init__(self):
        inter = _canonical_pairs(self.interactions, ordered=False)
        edges = _canonical_pairs(self.social_edges, ordered=True)
        topics = _frozen(self.topic_of_item)
        object.__setattr__(self, "interactions", inter)
        object.__setattr__(self, "social_edges", edges)
        object.__setattr__(self, "topic_of_item", topics)
        object.__setattr__(self, "user_ids", tuple(self.user_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

        if self.num_topics < 1:
            raise DataError("num_topics must be positive")
        if len(topics) != len(self.item_ids):
            raise DataError("every item needs exactly one topic indicator")
        if len(topics) and (topics.min() < 0 or topics.max() >= self.num_topics):
            raise DataError(f"topic indicators must lie in [0, {self.num_topics})")
        n_users, n_items = len(self.user_ids), len(self.item_ids)
        if len(inter):
            if inter[:, 0].min() < 0 or inter[:, 0].max() >= n_users:
                raise DataError("interaction references an unknown user")
            if inter[:, 1].min() < 0 or inter[:, 1].max() >= n_items:
                raise DataError("interaction references an unknown item")
        if len(edges):
            if edges.min() < 0 or edges.max() >= n_users:
                raise DataError("social edge references an unknown user")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise DataError("social edges may not be self-loops")

    @property
    def num_users(self) -> int:
        return len(self.user_ids)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    @property
    def num_interactions(self) -> int:
        return len(self.interactions)

    def interaction_counts(self) -> np.ndarray:
        return np.bincount(self.interactions[:, 0], minlength=self.num_users)

    def items_of_user(self, user: int) -> np.ndarray:
        lo, hi = np.searchsorted(self.interactions[:, 0], [user, user + 1])
        return self.interactions[lo:hi, 1]

    def topic_counts(self) -> np.ndarray:
        """``(num_users, D)`` matrix of per-user interaction counts by topic."""
        counts = np.zeros((self.num_users, self.num_topics), dtype=np.int64)
        topics = self.topic_of_item[self.interactions[:, 1]]
        np.add.at(counts, (self.interactions[:, 0], topics), 1)
        return counts

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_users)]
        for u, v in self.social_edges:
            adj[u].add(int(v))
            adj[v].add(int(u))
        return adj

    def with_interactions(self, interactions) -> InteractionDataset:
        """Same users, items, edges and topics over a different interaction set."""
        return InteractionDataset(
            self.user_ids, self.item_ids, interactions, self.social_edges,
            self.topic_of_item, self.num_topics,
        )

    def summary(self) -> dict:
        return {
            "users": self.num_users,
            "items": self.num_items,
            "interactions": self.num_interactions,
            "social_edges": len(self.social_edges),
            "topics": self.num_topics,
        }

    def id_mapping(self) -> dict:
        return {
            "users": {uid: i for i, uid in enumerate(self.user_ids)},
            "items": {iid: j for j, iid in enumerate(self.item_ids)},
        }

    def to_json(self) -> str:
        return json.dumps({
            "num_topics": self.num_topics,
            "user_ids": list(self.user_ids),
            "item_ids": list(self.item_ids),
            "topic_of_item": self.topic_of_item.tolist(),
            "interactions": self.interactions.tolist(),
            "social_edges": self.social_edges.tolist(),
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> InteractionDataset:
        obj = json.loads(text)
        return cls(
            obj["user_ids"], obj["item_ids"], obj["interactions"],
            obj["social_edges"], obj["topic_of_item"], obj["num_topics"],
        )


def _canonical_pairs(pairs, ordered: bool) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.size == 0:
        arr = np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError("expected an (n, 2) array of index pairs")
    if ordered:
        arr = np.sort(arr, axis=1)
    arr = np.unique(arr, axis=0)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Group:
    members: tuple[int, ...]
    internal_edges: int

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(m) for m in self.members))
        if len(self.members) < 2:
            raise DataError("a group needs at least two members")
        if len(set(self.members)) != len(self.members):
            raise DataError("group members must be distinct")
        if not 0 <= self.internal_edges <= self.size * (self.size - 1) // 2:
            raise DataError("internal edge count out of range")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def social_density(self) -> float:
        return social_density(self.internal_edges, self.size)

    @classmethod
    def from_members(cls, members: Sequence[int], adjacency: list[set[int]]) -> Group:
        return cls(tuple(members), count_internal_edges(members, adjacency))


def social_density(internal_edges: int, size: int) -> float:
    return 2.0 * internal_edges / (size * (size - 1))


def count_internal_edges(members: Sequence[int], adjacency: list[set[int]]) -> int:
    mset = set(int(m) for m in members)
    return sum(len(adjacency[m] & mset) for m in mset) // 2


@dataclass(frozen=True)
class SplitDataset:
    train: InteractionDataset
    test: InteractionDataset
    train_fraction: float


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic ground-truth generator.

    ``edge_probability`` controls an Erdos-Renyi social graph so that groups
    can be sampled under a density constraint.
    """

    num_users: int = 200
    num_items: int = 60
    num_topics: int = 5
    mu1: float = 0.0
    sigma1_sq: float = 100.0
    mu2: float = -1.0
    sigma2_sq: float = 0.01
    interactions_per_user: int = 30
    seed: int = 0
    edge_probability: float = 0.3

    def __post_init__(self):
        for name in ("num_users", "num_items", "num_topics", "interactions_per_user"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.sigma1_sq <= 0 or self.sigma2_sq <= 0:
            raise ValueError("prior variances must be positive")
        if not 0.0 <= self.edge_probability <= 1.0:
            raise ValueError("edge_probability must lie in [0, 1]")


# ---------------------------------------------------------------- ingestion

def _read_tsv(path: Path, ncols: int) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < ncols or any(not c.strip() for c in cols[:ncols]):
                raise DataError(f"{path}:{lineno}: expected {ncols} tab-separated fields")
            yield lineno, [c.strip() for c in cols[:ncols]]


def load_hetrec(interaction_path, social_path, topic_path,
                num_topics: int | None = None) -> InteractionDataset:
    """Read the interaction / social / topic TSV trio into a dense dataset.

    Positive weights collapse to B(i, j) = 1 and non-positive rows are
    dropped. Items without a topic are dropped together with their
    interactions. When ``num_topics`` is omitted it is inferred as
    ``max(topic_index) + 1``.
    """
    interaction_path, social_path, topic_path = map(Path, (interaction_path, social_path, topic_path))
    for p in (interaction_path, social_path, topic_path):
        if not p.exists():
            raise FileNotFoundError(f"no such file: {p}")

    topic_of: dict[str, int] = {}
    for lineno, (item, topic) in _read_tsv(topic_path, 2):
        try:
            t = int(topic)
        except ValueError:
            raise DataError(f"{topic_path}:{lineno}: topic index must be an integer") from None
        if t < 0 or (num_topics is not None and t >= num_topics):
            raise DataError(f"{topic_path}:{lineno}: topic index {t} out of range")
        topic_of[item] = t

    raw_pairs: list[tuple[str, str]] = []
    for lineno, (user, item, weight) in _read_tsv(interaction_path, 3):
        try:
            w = float(weight)
        except ValueError:
            raise DataError(f"{interaction_path}:{lineno}: weight must be numeric") from None
        if w > 0:
            raw_pairs.append((user, item))

    kept = [(u, i) for u, i in raw_pairs if i in topic_of]
    dropped_items = {i for _, i in raw_pairs if i not in topic_of}
    if dropped_items:
        _logger.warning("dropped %d items without a topic (%d interactions)",
                        len(dropped_items), len(raw_pairs) - len(kept))
    if not kept:
        raise DataError("dataset is empty after ingestion")

    edges_raw = [(a, b) for _, (a, b) in _read_tsv(social_path, 2)]

    # unknown items in the topic file are ignored; users come from interactions
    user_ids = sorted({u for u, _ in kept})
    item_ids = sorted({i for _, i in kept})
    uidx = {u: k for k, u in enumerate(user_ids)}
    iidx = {i: k for k, i in enumerate(item_ids)}
    interactions = [(uidx[u], iidx[i]) for u, i in kept]
    edges = [(uidx[a], uidx[b]) for a, b in edges_raw
             if a in uidx and b in uidx and a != b]
    if num_topics is None:
        num_topics = max(topic_of[i] for i in item_ids) + 1
    topics = [topic_of[i] for i in item_ids]
    return InteractionDataset(user_ids, item_ids, interactions, edges, topics, num_topics)


def assign_topics_from_tags(tag_assignments: Sequence[tuple[str, str]], num_topics: int) -> dict[str, int]:
    """Fallback topic labelling: most frequent tag id of an item, modulo D.

    ``tag_assignments`` are ``(item_id, tag_id)`` pairs with integer-valued tag
    ids. Frequency ties go to the smallest tag id.
    """
    per_item: dict[str, Counter] = {}
    for item, tag in tag_assignments:
        per_item.setdefault(item, Counter())[int(tag)] += 1
    out = {}
    for item, counts in per_item.items():
        best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        out[item] = best % num_topics
    return out


# ------------------------------------------------------------ transformations

def filter_inactive(ds: InteractionDataset, min_interactions: int) -> InteractionDataset:
    """Drop users with fewer than ``min_interactions`` interactions and re-index."""
    if min_interactions < 1:
        raise ValueError("min_interactions must be >= 1")
    # items are kept regardless, so one pass already reaches the fixed point;
    # the loop guards that property if item pruning is ever added
    while True:
        counts = ds.interaction_counts()
        keep = counts >= min_interactions
        if not keep.any():
            raise DataError(f"no user has >= {min_interactions} interactions")
        if keep.all():
            return ds
        ds = _subset_users(ds, np.flatnonzero(keep))


def _subset_users(ds: InteractionDataset, users: np.ndarray) -> InteractionDataset:
    remap = np.full(ds.num_users, -1, dtype=np.int64)
    remap[users] = np.arange(len(users))
    inter = ds.interactions
    inter = inter[remap[inter[:, 0]] >= 0]
    inter = np.column_stack([remap[inter[:, 0]], inter[:, 1]])
    edges = ds.social_edges
    if len(edges):
        ok = (remap[edges[:, 0]] >= 0) & (remap[edges[:, 1]] >= 0)
        edges = remap[edges[ok]]
    return InteractionDataset(
        [ds.user_ids[u] for u in users], ds.item_ids, inter, edges,
        ds.topic_of_item, ds.num_topics,
    )


def split(ds: InteractionDataset, train_fraction: float, seed: int) -> SplitDataset:
    """Per-user random split; users with at least one interaction keep one in train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    is_train = np.zeros(ds.num_interactions, dtype=bool)
    starts = np.searchsorted(ds.interactions[:, 0], np.arange(ds.num_users + 1))
    for u in range(ds.num_users):
        lo, hi = starts[u], starts[u + 1]
        m = hi - lo
        if m == 0:
            continue
        n_train = min(m, max(1, math.floor(train_fraction * m + 0.5)))
        chosen = rng.permutation(m)[:n_train]
        is_train[lo + chosen] = True
    return SplitDataset(
        train=ds.with_interactions(ds.interactions[is_train]),
        test=ds.with_interactions(ds.interactions[~is_train]),
        train_fraction=train_fraction,
    )


def build_groups(ds: InteractionDataset, group_size: int, num_groups: int,
                 min_density: float, seed: int) -> list[Group]:
    """Rejection-sample distinct groups whose social density is at least ``min_density``.

    The attempt budget is ``1000 * num_groups``. If it runs out, the groups
    found so far are returned and a :class:`GroupShortfallWarning` reports
    how many are missing.
    """
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    if not 0.0 <= min_density <= 1.0:
        raise ValueError("min_density must lie in [0, 1]")
    if group_size > ds.num_users:
        raise ValueError("group_size exceeds the number of users")
    rng = np.random.default_rng(seed)
    adj = ds.adjacency()
    seen: set[tuple[int, ...]] = set()
    groups: list[Group] = []
    budget = 1000 * num_groups
    attempts = 0
    while len(groups) < num_groups and attempts < budget:
        attempts += 1
        members = tuple(sorted(int(u) for u in rng.choice(ds.num_users, group_size, replace=False)))
        if members in seen:
            continue
        group = Group.from_members(members, adj)
        if group.social_density >= min_density:
            seen.add(members)
            groups.append(group)
    if len(groups) < num_groups:
        warnings.warn(
            f"only {len(groups)} of {num_groups} groups met density >= {min_density} "
            f"after {attempts} attempts ({num_groups - len(groups)} missing)",
            GroupShortfallWarning, stacklevel=2,
        )
    return groups


# ------------------------------------------------------------------ synthetic

def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def generate_synthetic(spec: SyntheticSpec) -> tuple[InteractionDataset, np.ndarray, np.ndarray]:
    """Sample a dataset from the logistic interest/social-influence model.

    Returns the dataset together with the true interest and social-influence
    matrices. Each user walks once through a random permutation of the items
    and accepts item j of topic d with probability
    ``sigmoid(pi(i, d) * I(i, d) + S(i, d))``, where the contribution rate is
    recomputed from the user's accepted items so far (uniform before the
    first). The walk stops at ``interactions_per_user`` acceptances.
    """
    rng = np.random.default_rng(spec.seed)
    D = spec.num_topics
    true_I = rng.normal(spec.mu1, math.sqrt(spec.sigma1_sq), size=(spec.num_users, D))
    true_S = rng.normal(spec.mu2, math.sqrt(spec.sigma2_sq), size=(spec.num_users, D))
    topics = rng.integers(0, D, size=spec.num_items)

    pairs = []
    for u in range(spec.num_users):
        counts = np.zeros(D)
        total = 0
        order = rng.permutation(spec.num_items)
        draws = rng.random(spec.num_items)
        for j, r in zip(order, draws):
            d = topics[j]
            share = counts[d] / total if total else 1.0 / D
            if r < _logistic(share * true_I[u, d] + true_S[u, d]):
                pairs.append((u, int(j)))
                counts[d] += 1
                total += 1
                if total >= spec.interactions_per_user:
                    break

    n = spec.num_users
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < spec.edge_probability
    edges = np.column_stack([iu[keep], iv[keep]])

    ds = InteractionDataset(
        [f"u{u}" for u in range(n)], [f"i{j}" for j in range(spec.num_items)],
        pairs, edges, topics, D,
    )
    return ds, true_I, true_S
