"""Run configuration, presets and the end-to-end pipeline used by the CLI."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import cbn, data, evaluate, game


@dataclass(frozen=True)
class RunConfig:
    dataset: str | None = None
    interactions_path: str | None = None
    social_path: str | None = None
    topics_path: str | None = None
    min_interactions: int = 5
    num_topics: int = 6
    mu1: float = 45.0
    sigma1_sq: float = 70.0
    mu2: float = 12.0
    sigma2_sq: float = 30.0
    learning_rate: float = 0.01
    convergence_threshold: float = 0.001
    max_epochs: int = 200
    negative_ratio: float = 1.0
    train_fraction: float = 0.7
    group_size: int = 5
    num_groups: int = 100
    min_density: float = 0.25
    eta1: float = 0.6
    eta2: float = 0.4
    n: float = 2.0
    max_rounds: int = 100
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        # construct the component configs once so invalid values fail early
        self.hyperparams()
        self.game_config()
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.num_topics < 1:
            raise ValueError("num_topics must be positive")

    def hyperparams(self) -> cbn.CbnHyperparams:
        return cbn.CbnHyperparams(
            mu1=self.mu1, sigma1_sq=self.sigma1_sq, mu2=self.mu2, sigma2_sq=self.sigma2_sq,
            learning_rate=self.learning_rate, convergence_threshold=self.convergence_threshold,
            max_epochs=self.max_epochs, negative_ratio=self.negative_ratio, seed=self.seed,
        )

    def game_config(self) -> game.GameConfig:
        return game.GameConfig(eta1=self.eta1, eta2=self.eta2, n=self.n,
                               max_rounds=self.max_rounds, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_file(cls, path) -> RunConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


PRESETS = {
    "lastfm": dict(num_topics=6, mu1=45.0, sigma1_sq=70.0, mu2=12.0, sigma2_sq=30.0),
    "delicious": dict(num_topics=10, mu1=45.0, sigma1_sq=75.0, mu2=10.0, sigma2_sq=25.0),
}


def preset(name: str, **overrides) -> RunConfig:
    return RunConfig(**{**PRESETS[name], **overrides})


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def load_dataset(cfg: RunConfig) -> data.InteractionDataset:
    if cfg.dataset:
        path = Path(cfg.dataset)
        if path.is_dir():
            path = path / "dataset.json"
        return data.InteractionDataset.from_json(path.read_text(encoding="utf-8"))
    if not (cfg.interactions_path and cfg.social_path and cfg.topics_path):
        raise ValueError("config needs either 'dataset' or all three raw file paths")
    ds = data.load_hetrec(cfg.interactions_path, cfg.social_path, cfg.topics_path, cfg.num_topics)
    return data.filter_inactive(ds, cfg.min_interactions)


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def run_pipeline(cfg: RunConfig, ds: data.InteractionDataset | None = None) -> dict:
    """Split, sample groups, train, solve each group's game and evaluate.

    Writes ``resolved_config.json``, ``model.json``, ``equilibria.json``,
    ``report.csv``, ``report.json`` and ``curves.csv`` into ``cfg.output_dir``.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "resolved_config.json", json.dumps(cfg.to_dict(), indent=1, sort_keys=True))

    stage = "ingest"
    try:
        if ds is None:
            ds = load_dataset(cfg)
        if ds.num_topics != cfg.num_topics:
            raise ValueError(f"dataset has {ds.num_topics} topics, config says {cfg.num_topics}")
        stage = "split"
        sp = data.split(ds, cfg.train_fraction, cfg.seed)
        stage = "groups"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", data.GroupShortfallWarning)
            groups = data.build_groups(sp.train, cfg.group_size, cfg.num_groups,
                                       cfg.min_density, cfg.seed)
        shortfall = [str(w.message) for w in caught]
        if not groups:
            raise ValueError("no group satisfied the density constraint")
        stage = "train"
        hp = cfg.hyperparams()
        model, report = cbn.train(sp.train, hp)
        _write(out / "model.json", model.to_json(hp))
        stage = "equilibrium"
        models = game.normalize(model)
        equilibria: dict[int, game.Equilibrium] = {}
        methods = {
            "SAIoT-GR": evaluate.game_method(models, cfg.game_config(), equilibria),
            "Frequency": evaluate.baseline_method(evaluate.frequency_baseline, sp.train),
            "FreGroup": evaluate.baseline_method(evaluate.fregroup_baseline, sp.train),
        }
        stage = "evaluate"
        rpt = evaluate.run_experiment(sp.train, sp.test, groups, methods,
                                      {"config_file": "resolved_config.json"})
    except Exception as exc:
        raise StageError(stage, exc) from exc

    eq_json = [equilibria[g].to_dict(g, cfg.num_topics) for g in sorted(equilibria)]
    _write(out / "equilibria.json", json.dumps(eq_json, indent=1))
    _write(out / "report.csv", rpt.to_csv())
    _write(out / "report.json", rpt.to_json())
    _write(out / "curves.csv", rpt.curves_csv())
    _write(out / "training.json", json.dumps(asdict(report), indent=1))
    return {"report": rpt, "train_report": report, "groups": groups,
            "group_warnings": shortfall, "output_dir": str(out)}
