"""Event-sourced annotation session: issue batches, accept labels, retrain.

A session is a deterministic function of (config, dataset, submitted labels):
elapsed times are supplied by the caller, never read from a wall clock, so
simulation and replay are exact. The optional ``clock`` only stamps events
with an informational wall_clock field that is excluded from determinism
checks.

Randomness fan-out: the dataset split uses ``config.rng_seed``; selection for
batch i uses ``config.rng_seed + 1 + i``; batch clustering for batch i uses
``config.cluster.rng_seed + i``; every retrain reuses ``config.train.rng_seed``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classifier import LinearMarginClassifier, TrainConfig
from .clustering import ClusterConfig, PLAN_MODES, PresentationPlan, build_plan
from .dataset import split as make_split
from .records import ContextDimension, Dataset, DatasetSplit, EmbeddingTable, Gazetteer
from .selection import STRATEGIES, SelectionConfig, select

EVENT_KINDS = ("session_created", "batch_issued", "label_submitted",
               "batch_completed", "model_retrained", "session_completed")


class SessionError(Exception):
    """Base class for session protocol violations."""


class UnknownItemError(SessionError):
    """Label for an item that is not part of the open batch."""


class DuplicateLabelError(SessionError):
    """Label for an item already labeled in the open batch."""


class SessionCompletedError(SessionError):
    """Label submitted after the session finished."""


class BadLabelError(SessionError):
    """Unknown class name or negative elapsed time."""


@dataclass(frozen=True)
class SessionConfig:
    dimension: ContextDimension
    mode: str = "caiaf"
    batch_size: int = 5
    total_batches: int = 10
    strategy: str = "informative_diverse"
    train: TrainConfig = field(default_factory=TrainConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    rng_seed: int = 0
    seed_per_class: int = 10
    holdout_frac: float = 0.2
    dataset: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "dimension", ContextDimension(self.dimension))
        if self.mode not in PLAN_MODES:
            raise ValueError(f"mode must be one of {PLAN_MODES}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.total_batches < 1:
            raise ValueError("total_batches must be >= 1")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "dimension": self.dimension.value,
            "mode": self.mode,
            "batch_size": self.batch_size,
            "total_batches": self.total_batches,
            "strategy": self.strategy,
            "train": self.train.to_dict(),
            "cluster": self.cluster.to_dict(),
            "rng_seed": self.rng_seed,
            "seed_per_class": self.seed_per_class,
            "holdout_frac": self.holdout_frac,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(
            dimension=ContextDimension(d["dimension"]),
            mode=d.get("mode", "caiaf"),
            batch_size=d.get("batch_size", 5),
            total_batches=d.get("total_batches", 10),
            strategy=d.get("strategy", "informative_diverse"),
            train=TrainConfig.from_dict(d.get("train", {})),
            cluster=ClusterConfig.from_dict(d.get("cluster", {})),
            rng_seed=d.get("rng_seed", 0),
            seed_per_class=d.get("seed_per_class", 10),
            holdout_frac=d.get("holdout_frac", 0.2),
            dataset=d.get("dataset"),
        )


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    payload: dict
    wall_clock: str | None = None

    def to_dict(self) -> dict:
        out = {"seq": self.seq, "kind": self.kind, "payload": self.payload}
        if self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SessionEvent":
        return cls(seq=d["seq"], kind=d["kind"], payload=d["payload"],
                   wall_clock=d.get("wall_clock"))


@dataclass(frozen=True)
class BatchMetrics:
    batch_index: int
    batch_ms: float
    cumulative_ms: float
    holdout_f1: float
    labeled_count: int


@dataclass
class SessionMetrics:
    batches: list[BatchMetrics] = field(default_factory=list)
    final_f1: float | None = None


def f1_binary(y_true: Sequence, y_pred: Sequence, positive_class) -> float:
    """F1 = 2TP / (2TP + FP + FN) for one class as positive; 0 on empty denominator."""
    tp = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if p == positive_class and t == positive_class:
            tp += 1
        elif p == positive_class:
            fp += 1
        elif t == positive_class:
            fn += 1
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def macro_f1(y_true: Sequence, y_pred: Sequence, classes: Sequence) -> float:
    """Mean of per-class F1 with each class treated as positive in turn."""
    return float(np.mean([f1_binary(y_true, y_pred, c) for c in classes]))


class Session:
    """One annotator, one open batch at a time, retraining after each batch."""

    def __init__(self, config: SessionConfig, dataset: Dataset,
                 embeddings: EmbeddingTable | None = None,
                 gazetteer: Gazetteer | None = None,
                 clock: Callable[[], str] | None = None,
                 split_override: DatasetSplit | None = None):
        if len(dataset.classes) != 2:
            raise SessionError(
                f"session needs exactly two classes, dataset has {len(dataset.classes)}")
        self.config = config
        self.dataset = dataset
        self.embeddings = embeddings
        self.gazetteer = gazetteer
        self._clock = clock
        self._by_id = dataset.by_id()
        self._events: list[SessionEvent] = []
        self._completed_batches = 0
        self._annotated: dict[str, str] = {}
        self._open_ids: list[str] = []
        self._open_labels: dict[str, tuple[str, float]] = {}
        self._current_plan: PresentationPlan | None = None
        self._complete = False

        if split_override is not None:
            self.split = split_override
        else:
            self.split = make_split(dataset.records, config.seed_per_class,
                                    config.holdout_frac, rng_seed=config.rng_seed)
        self._validate_split()
        self._pool_ids: list[str] = list(self.split.pool)

        self._emit("session_created", {
            "config": config.to_dict(),
            "classes": list(dataset.classes),
            "split": self.split.to_dict(),
        })
        self._retrain(after_batch=None)
        self._issue_batch()

    # -- setup ------------------------------------------------------------

    def _validate_split(self):
        if not self.split.seed_labeled:
            raise SessionError("seed set is empty; cannot train the initial model")
        seed_labels = {self._by_id[i].label for i in self.split.seed_labeled}
        if seed_labels != set(self.dataset.classes):
            raise SessionError(
                f"seed set must contain both classes, has {sorted(seed_labels - {None})}")
        if not self.split.pool:
            raise SessionError("pool is empty; nothing to select")
        dim = self.config.dimension
        for pid in self.split.pool:
            if not self._by_id[pid].metadata.has_dimension(dim):
                raise SessionError(
                    f"pool record {pid!r} missing context dimension {dim.value}; "
                    "ingest with require_complete")

    # -- event plumbing ----------------------------------------------------

    def _emit(self, kind: str, payload: dict):
        wall = self._clock() if self._clock is not None else None
        self._events.append(SessionEvent(seq=len(self._events), kind=kind,
                                         payload=payload, wall_clock=wall))

    @property
    def events(self) -> list[SessionEvent]:
        return list(self._events)

    def event_dicts(self) -> list[dict]:
        return [e.to_dict() for e in self._events]

    # -- loop --------------------------------------------------------------

    @property
    def is_complete(self) -> bool:
        return self._complete

    @property
    def current_plan(self) -> PresentationPlan | None:
        return self._current_plan

    @property
    def open_item_ids(self) -> list[str]:
        return list(self._open_ids)

    @property
    def labeled_in_open_batch(self) -> list[str]:
        if self._current_plan is None:
            return []
        return [i for i in self._current_plan.item_ids() if i in self._open_labels]

    @property
    def model(self) -> LinearMarginClassifier:
        return self._model

    def _retrain(self, after_batch: int | None):
        seed_examples = [(self._by_id[i], self._by_id[i].label)
                         for i in self.split.seed_labeled]
        annotated = [(self._by_id[i], cls) for i, cls in self._annotated.items()]
        examples = sorted(seed_examples + annotated, key=lambda e: e[0].id)
        X = np.array([r.features for r, _ in examples])
        y = np.array([cls for _, cls in examples])
        self._model = LinearMarginClassifier.from_config(self.config.train).fit(X, y)
        f1 = self._holdout_f1()
        self._emit("model_retrained", {
            "after_batch": after_batch,
            "holdout_f1": f1,
            "trained_on": len(examples),
        })

    def _holdout_f1(self) -> float:
        if not self.split.holdout:
            return 0.0
        X = np.array([self._by_id[i].features for i in self.split.holdout])
        truth = [self._by_id[i].label for i in self.split.holdout]
        preds = self._model.predict(X)
        return macro_f1(truth, preds, self.dataset.classes)

    def _issue_batch(self):
        batch_index = self._completed_batches
        pool_records = [self._by_id[i] for i in self._pool_ids]
        sel = SelectionConfig(strategy=self.config.strategy,
                              batch_size=self.config.batch_size,
                              rng_seed=self.config.rng_seed + 1 + batch_index)
        ids = select(pool_records, self._model, sel)
        cluster_cfg = replace(self.config.cluster,
                              rng_seed=self.config.cluster.rng_seed + batch_index)
        plan = build_plan(ids, self._by_id, self.config.dimension, self.config.mode,
                          cluster_cfg, self._model, table=self.embeddings,
                          gazetteer=self.gazetteer, batch_index=batch_index)
        self._current_plan = plan
        self._open_ids = ids
        self._open_labels = {}
        self._emit("batch_issued", {"plan": plan.to_dict(),
                                    "total_batches": self.config.total_batches})

    def submit_label(self, item_id: str, chosen_class: str, elapsed_ms: float) -> str:
        """Record one label. Returns 'ok', 'batch_complete', or 'session_complete'."""
        if self._complete:
            raise SessionCompletedError("session already completed")
        if item_id in self._open_labels:
            raise DuplicateLabelError(f"item {item_id!r} already labeled in this batch")
        if item_id not in self._open_ids:
            raise UnknownItemError(f"item {item_id!r} is not in the open batch")
        if chosen_class not in self.dataset.classes:
            raise BadLabelError(f"unknown class {chosen_class!r}")
        elapsed_ms = float(elapsed_ms)
        if elapsed_ms < 0:
            raise BadLabelError("elapsed_ms must be >= 0")

        self._open_labels[item_id] = (chosen_class, elapsed_ms)
        self._emit("label_submitted", {"item_id": item_id, "chosen_class": chosen_class,
                                       "elapsed_ms": elapsed_ms})
        if len(self._open_labels) < len(self._open_ids):
            return "ok"
        return self._complete_batch()

    def _complete_batch(self) -> str:
        batch_index = self._completed_batches
        batch_ms = float(sum(ms for _, ms in self._open_labels.values()))
        self._emit("batch_completed", {"batch_index": batch_index, "batch_ms": batch_ms})
        for item_id, (cls, _) in self._open_labels.items():
            self._annotated[item_id] = cls
        labeled = set(self._open_ids)
        self._pool_ids = [i for i in self._pool_ids if i not in labeled]
        self._open_ids = []
        self._open_labels = {}
        self._current_plan = None
        self._completed_batches += 1
        self._retrain(after_batch=batch_index)

        if self._completed_batches >= self.config.total_batches or not self._pool_ids:
            self._complete = True
            self._emit("session_completed", {
                "completed_batches": self._completed_batches,
                "final_f1": self._events[-1].payload["holdout_f1"],
                "labeled_total": len(self._annotated) + len(self.split.seed_labeled),
            })
            return "session_complete"
        self._issue_batch()
        return "batch_complete"

    # -- metrics -----------------------------------------------------------

    def metrics(self) -> SessionMetrics:
        return metrics_from_events(self.event_dicts())

    # -- resume ------------------------------------------------------------

    @classmethod
    def resume(cls, events: Sequence[dict | SessionEvent], dataset: Dataset,
               embeddings: EmbeddingTable | None = None,
               gazetteer: Gazetteer | None = None,
               clock: Callable[[], str] | None = None) -> "Session":
        """Rebuild a session by replaying an event log's submitted labels.

        The engine is deterministic, so replay regenerates every derived
        event; a truncated log resumes mid-batch with the remaining items
        still open.
        """
        dicts = [e.to_dict() if isinstance(e, SessionEvent) else e for e in events]
        if not dicts or dicts[0]["kind"] != "session_created":
            raise SessionError("event log must start with session_created")
        payload = dicts[0]["payload"]
        config = SessionConfig.from_dict(payload["config"])
        override = DatasetSplit.from_dict(payload["split"])
        session = cls(config, dataset, embeddings=embeddings, gazetteer=gazetteer,
                      clock=clock, split_override=override)
        for d in dicts:
            if d["kind"] == "label_submitted":
                p = d["payload"]
                session.submit_label(p["item_id"], p["chosen_class"], p["elapsed_ms"])
        return session


def metrics_from_events(events: Sequence[dict]) -> SessionMetrics:
    """Derive per-batch metrics from an event log."""
    seed_count = 0
    labeled = 0
    cumulative = 0.0
    batches: list[BatchMetrics] = []
    pending: dict | None = None
    final_f1 = None
    for e in events:
        kind, payload = e["kind"], e["payload"]
        if kind == "session_created":
            seed_count = len(payload["split"]["seed_labeled"])
        elif kind == "label_submitted":
            labeled += 1
        elif kind == "batch_completed":
            cumulative += payload["batch_ms"]
            pending = {"batch_index": payload["batch_index"],
                       "batch_ms": payload["batch_ms"], "cumulative_ms": cumulative}
        elif kind == "model_retrained":
            final_f1 = payload["holdout_f1"]
            if pending is not None:
                batches.append(BatchMetrics(
                    batch_index=pending["batch_index"],
                    batch_ms=pending["batch_ms"],
                    cumulative_ms=pending["cumulative_ms"],
                    holdout_f1=payload["holdout_f1"],
                    labeled_count=seed_count + labeled,
                ))
                pending = None
    return SessionMetrics(batches=batches, final_f1=final_f1)


def export_metrics_csv(metrics: SessionMetrics, path) -> None:
    """Write per-batch metrics: batch_index, batch_ms, cumulative_ms, holdout_f1."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_index", "batch_ms", "cumulative_ms", "holdout_f1"])
        for b in metrics.batches:
            writer.writerow([b.batch_index, b.batch_ms, b.cumulative_ms, b.holdout_f1])


def write_event_log(path, events: Sequence[dict | SessionEvent]) -> None:
    """Append-only JSON-lines event log, one event per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in events:
            d = e.to_dict() if isinstance(e, SessionEvent) else e
            fh.write(json.dumps(d, separators=(",", ":")) + "\n")


def read_event_log(path) -> list[dict]:
    path = Path(path)
    events = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(json.loads(line))
    return events


def strip_wall_clock(events: Sequence[dict]) -> list[dict]:
    """Copy of the events with the informational wall_clock fields removed."""
    return [{k: v for k, v in e.items() if k != "wall_clock"} for e in events]
