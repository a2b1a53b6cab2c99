"""Baselines, ground truth, distribution distances and experiment reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import Group, InteractionDataset
from .game import GameConfig, NormalizedModel, find_equilibrium, recommend


class Metric(str, Enum):
    EUC = "EucDist"
    MAN = "ManDist"
    CHE = "CheDist"
    COR = "CorDist"
    MAE = "MAEDist"
    MSE = "MSEDist"


METRICS = tuple(Metric)


def _topic_histogram(users: Sequence[int], ds: InteractionDataset) -> np.ndarray:
    mask = np.isin(ds.interactions[:, 0], list(users))
    topics = ds.topic_of_item[ds.interactions[mask, 1]]
    return np.bincount(topics, minlength=ds.num_topics).astype(np.float64)


def _normalized(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    if total == 0:
        return np.full(len(counts), 1.0 / len(counts))
    return counts / total


def ground_truth_distribution(group: Group, test: InteractionDataset) -> tuple[np.ndarray, bool]:
    """Topic shares of the group's pooled test interactions.

    Returns ``(distribution, excluded)``; a group without test interactions
    gets the uniform distribution and ``excluded=True``.
    """
    counts = _topic_histogram(group.members, test)
    return _normalized(counts), bool(counts.sum() == 0)


def frequency_baseline(group: Group, train: InteractionDataset) -> np.ndarray:
    """Equal-weight mean of each member's own topic-frequency distribution."""
    dists = [_normalized(_topic_histogram([u], train)) for u in group.members]
    return _normalized(np.mean(dists, axis=0))


def fregroup_baseline(group: Group, train: InteractionDataset) -> np.ndarray:
    """Topic frequencies of all member interactions pooled into one group profile."""
    return _normalized(_topic_histogram(group.members, train))


def distance(metric: Metric | str, p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"distributions must be 1-D and equal length, got {p.shape} and {q.shape}")
    if len(p) < 1:
        raise ValueError("distributions must be non-empty")
    metric = Metric(metric)
    diff = p - q
    if metric is Metric.EUC:
        return float(np.sqrt(np.sum(diff ** 2)))
    if metric is Metric.MAN:
        return float(np.sum(np.abs(diff)))
    if metric is Metric.CHE:
        return float(np.max(np.abs(diff)))
    if metric is Metric.MAE:
        return float(np.mean(np.abs(diff)))
    if metric is Metric.MSE:
        return float(np.mean(diff ** 2))
    pc, qc = p - p.mean(), q - q.mean()
    denom = math.sqrt(float(np.dot(pc, pc)) * float(np.dot(qc, qc)))
    if denom == 0.0:
        # undefined correlation: identical vectors are at distance 0, anything else at 1
        return 0.0 if np.array_equal(p, q) else 1.0
    return float(min(2.0, max(0.0, 1.0 - float(np.dot(pc, qc)) / denom)))


def all_distances(p, q) -> dict[str, float]:
    return {m.value: distance(m, p, q) for m in METRICS}


# a method maps (group_id, group) to a predicted topic distribution
Method = Callable[[int, Group], np.ndarray]


def baseline_method(fn, train: InteractionDataset) -> Method:
    return lambda gid, group: fn(group, train)


def game_method(models: NormalizedModel, cfg: GameConfig, sink: dict | None = None) -> Method:
    """Method wrapper for the equilibrium recommender; equilibria are stored in ``sink``."""
    def predict(gid, group):
        eq = find_equilibrium(group, models, cfg)
        if sink is not None:
            sink[gid] = eq
        return recommend(eq, models.num_topics)
    return predict


def external_method(predictions: Mapping[int, Sequence[float]]) -> Method:
    def predict(gid, group):
        if gid not in predictions:
            raise KeyError(f"no external prediction for group {gid}")
        return _normalized(np.asarray(predictions[gid], dtype=np.float64))
    return predict


def load_external_predictions(path) -> dict[int, np.ndarray]:
    """Read ``{group_id: ratio vector}`` JSON produced by an outside method."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {int(k): np.asarray(v, dtype=np.float64) for k, v in raw.items()}


@dataclass
class EvalReport:
    methods: list[str]
    mean: dict[str, dict[str, float]]
    per_group: list[dict]
    group_count: int
    curves: dict[str, dict[str, list[float]]]
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method"] + [m.value for m in METRICS])
        for name in self.methods:
            w.writerow([name] + [f"{self.mean[name][m.value]:.10f}" for m in METRICS])
        return buf.getvalue()

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["topic_index", "real", "predicted", "method"])
        for name in self.methods:
            c = self.curves[name]
            for k, (r, p) in enumerate(zip(c["real"], c["predicted"])):
                w.writerow([k, f"{r:.10f}", f"{p:.10f}", name])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "methods": self.methods,
            "metrics": [m.value for m in METRICS],
            "mean": self.mean,
            "group_count": self.group_count,
            "per_group": self.per_group,
            "curves": self.curves,
            "config": self.config,
        }, indent=1)


def run_experiment(train: InteractionDataset, test: InteractionDataset,
                   groups: Sequence[Group], methods: Mapping[str, Method],
                   config: dict | None = None) -> EvalReport:
    """Score every method on every group against the pooled test distribution.

    Means are taken over groups that have at least one test interaction.
    ``curves`` holds per-topic means of the real and predicted distributions.
    """
    if not methods:
        raise ValueError("at least one method is required")
    names = list(methods)
    per_group, kept_truth = [], []
    kept_pred: dict[str, list[np.ndarray]] = {n: [] for n in names}
    for gid, group in enumerate(groups):
        truth, excluded = ground_truth_distribution(group, test)
        row = {"group_id": gid, "members": list(group.members), "excluded": excluded,
               "real": truth.tolist(), "predicted": {}, "distances": {}}
        for name in names:
            pred = np.asarray(methods[name](gid, group), dtype=np.float64)
            row["predicted"][name] = pred.tolist()
            row["distances"][name] = all_distances(truth, pred)
            if not excluded:
                kept_pred[name].append(pred)
        if not excluded:
            kept_truth.append(truth)
        per_group.append(row)

    scored = [r for r in per_group if not r["excluded"]]
    if not scored:
        raise ValueError("no group has test interactions to evaluate against")
    mean = {n: {m.value: float(np.mean([r["distances"][n][m.value] for r in scored]))
                for m in METRICS} for n in names}
    real_curve = np.mean(kept_truth, axis=0).tolist()
    curves = {n: {"real": real_curve, "predicted": np.mean(kept_pred[n], axis=0).tolist()}
              for n in names}
    return EvalReport(names, mean, per_group, len(scored), curves, dict(config or {}))
