"""K-means clustering and the grouped, ordered presentation plan for one batch."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .classifier import LinearMarginClassifier
from .context import EARTH_RADIUS_KM, ContextPayload, context_payload, keyword_tokens, mean_tag_vector
from .records import ContextDimension, EmbeddingTable, Gazetteer, ImageRecord
from .validation import as_feature_matrix

PLAN_MODES = ("caiaf", "plain")


@dataclass(frozen=True)
class ClusterConfig:
    """Batch-clustering knobs. k defaults to 2: one separator for a batch of 5."""

    k: int = 2
    max_iter: int = 100
    tol: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def to_dict(self) -> dict:
        return {"k": self.k, "max_iter": self.max_iter, "tol": self.tol,
                "rng_seed": self.rng_seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterConfig":
        return cls(k=d.get("k", 2), max_iter=d.get("max_iter", 100),
                   tol=d.get("tol", 1e-6), rng_seed=d.get("rng_seed", 0))


class KMeans(BaseEstimator):
    """Lloyd's k-means with k-means++ seeding and empty-cluster repair.

    Seeding draw protocol (fixed so runs are reproducible from ``rng_seed``):
    with ``rng = np.random.default_rng(rng_seed)``, the first center index is
    ``rng.integers(n)``; each next center is ``rng.choice(n, p=d2/d2.sum())``
    where d2 holds squared distances to the nearest chosen center, falling
    back to ``rng.integers(n)`` when all d2 are zero.

    Iterations assign points to the nearest center (ties to the lowest center
    index), repair any empty cluster by moving the point farthest from its
    assigned center (ties to the lowest point index; only points from
    clusters with >= 2 members move), then recompute centers. The squared-
    Euclidean objective is non-increasing across iterations; convergence is
    declared when it improves by less than ``tol``.
    """

    def __init__(self, n_clusters: int = 2, max_iter: int = 100, tol: float = 1e-6,
                 rng_seed: int = 0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.rng_seed = rng_seed

    @classmethod
    def from_config(cls, config: ClusterConfig, n_clusters: int | None = None) -> "KMeans":
        return cls(n_clusters=config.k if n_clusters is None else n_clusters,
                   max_iter=config.max_iter, tol=config.tol, rng_seed=config.rng_seed)

    def _seed_centers(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = X.shape[0]
        k = self.n_clusters
        centers = np.empty((k, X.shape[1]))
        centers[0] = X[int(rng.integers(n))]
        for j in range(1, k):
            diffs = X[:, None, :] - centers[None, :j, :]
            d2 = np.min(np.sum(diffs * diffs, axis=2), axis=1)
            total = d2.sum()
            if total == 0.0:
                idx = int(rng.integers(n))
            else:
                idx = int(rng.choice(n, p=d2 / total))
            centers[j] = X[idx]
        return centers

    def fit(self, X) -> "KMeans":
        X = as_feature_matrix(X)
        n = X.shape[0]
        k = self.n_clusters
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if k > n:
            raise ValueError(f"n_clusters={k} exceeds {n} points")

        rng = np.random.default_rng(self.rng_seed)
        centers = self._seed_centers(X, rng)
        labels = np.zeros(n, dtype=int)
        history: list[float] = []
        prev_obj = math.inf
        for it in range(self.max_iter):
            diffs = X[:, None, :] - centers[None, :, :]
            d2 = np.sum(diffs * diffs, axis=2)
            labels = np.argmin(d2, axis=1)

            counts = np.bincount(labels, minlength=k)
            for empty in np.flatnonzero(counts == 0):
                movable = counts[labels] >= 2
                point_d2 = np.where(movable, d2[np.arange(n), labels], -np.inf)
                donor = int(np.argmax(point_d2))
                counts[labels[donor]] -= 1
                labels[donor] = empty
                counts[empty] += 1

            for j in range(k):
                centers[j] = X[labels == j].mean(axis=0)

            deltas = X - centers[labels]
            obj = float(np.sum(deltas * deltas))
            history.append(obj)
            if prev_obj - obj < self.tol:
                break
            prev_obj = obj

        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = history[-1]
        self.objective_history_ = history
        self.n_iter_ = len(history)
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError("KMeans is not fitted")
        X = as_feature_matrix(X, dim=self.cluster_centers_.shape[1])
        diffs = X[:, None, :] - self.cluster_centers_[None, :, :]
        return np.argmin(np.sum(diffs * diffs, axis=2), axis=1)

    def fit_predict(self, X) -> np.ndarray:
        return self.fit(X).labels_


def latlon_to_cartesian_km(lat: float, lon: float) -> np.ndarray:
    """Map (lat, lon) to 3-D coordinates on a sphere of Earth's radius (km).

    Euclidean distances between such points approximate geodesics at city
    scales and avoid longitude wraparound artifacts in k-means.
    """
    phi = math.radians(lat)
    lam = math.radians(lon)
    return np.array([
        EARTH_RADIUS_KM * math.cos(phi) * math.cos(lam),
        EARTH_RADIUS_KM * math.cos(phi) * math.sin(lam),
        EARTH_RADIUS_KM * math.sin(phi),
    ])


def embed_for_clustering(records: list[ImageRecord], dimension: ContextDimension,
                         table: EmbeddingTable | None = None) -> np.ndarray:
    """Vectorize records for k-means under the active context dimension.

    location: 3-D unit-sphere Cartesian scaled by Earth radius; time: 1-D
    seconds; user_tags / description_keywords: mean embedding vector, with
    all-out-of-vocabulary items at the zero vector.

    Raises when a record is missing the active dimension; those should have
    been filtered at ingest.
    """
    for r in records:
        if not r.metadata.has_dimension(dimension):
            raise ValueError(f"record {r.id!r} missing context dimension {dimension.value}")

    if dimension is ContextDimension.LOCATION:
        return np.array([latlon_to_cartesian_km(r.metadata.lat, r.metadata.lon)
                         for r in records])
    if dimension is ContextDimension.TIME:
        return np.array([[float(r.metadata.timestamp)] for r in records])

    dim = table.dim if table is not None else 0
    if dim <= 0:
        return np.zeros((len(records), 1))
    out = np.zeros((len(records), dim))
    for i, r in enumerate(records):
        if dimension is ContextDimension.USER_TAGS:
            tokens = list(r.metadata.tags)
        else:
            tokens = keyword_tokens(r.metadata.description, r.metadata.tags)
        vec = mean_tag_vector(tokens, table)
        if vec is not None:
            out[i] = vec
    return out


@dataclass(frozen=True)
class PlanItem:
    item_id: str
    context: ContextPayload

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "context": self.context.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PlanItem":
        return cls(item_id=d["item_id"], context=ContextPayload.from_dict(d["context"]))


@dataclass
class PresentationPlan:
    """One batch as an ordered list of ordered groups with context payloads."""

    batch_index: int
    mode: str
    groups: list[list[PlanItem]] = field(default_factory=list)

    def item_ids(self) -> list[str]:
        return [item.item_id for group in self.groups for item in group]

    def to_dict(self) -> dict:
        return {
            "batch_index": self.batch_index,
            "mode": self.mode,
            "groups": [[item.to_dict() for item in group] for group in self.groups],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PresentationPlan":
        return cls(
            batch_index=d["batch_index"],
            mode=d["mode"],
            groups=[[PlanItem.from_dict(i) for i in group] for group in d["groups"]],
        )


def build_plan(batch_ids: list[str], records: Mapping[str, ImageRecord],
               dimension: ContextDimension, mode: str, cluster_config: ClusterConfig,
               model: LinearMarginClassifier, table: EmbeddingTable | None = None,
               gazetteer: Gazetteer | None = None, batch_index: int = 0) -> PresentationPlan:
    """Group and order one selected batch for presentation.

    caiaf mode clusters by the active dimension's embedding; groups are
    ordered by size descending (ties by smallest member position in
    ``batch_ids``) and items within a group by ascending model uncertainty
    (ties by position). plain mode keeps the selection order as one group.
    Grouping never changes the selected set, only its arrangement.
    """
    if mode not in PLAN_MODES:
        raise ValueError(f"mode must be one of {PLAN_MODES}")
    batch = [records[i] for i in batch_ids]
    payloads = [context_payload(r, gazetteer) for r in batch]
    items = [PlanItem(r.id, p) for r, p in zip(batch, payloads)]

    if mode == "plain" or len(batch) == 1:
        groups = [items] if items else []
        return PresentationPlan(batch_index=batch_index, mode=mode, groups=groups)

    points = embed_for_clustering(batch, dimension, table)
    k = min(cluster_config.k, len(batch))
    km = KMeans.from_config(cluster_config, n_clusters=k).fit(points)
    features = np.array([r.features for r in batch])
    scores = model.uncertainty(features)

    member_lists = [[int(i) for i in np.flatnonzero(km.labels_ == c)] for c in range(k)]
    order = sorted(range(k), key=lambda c: (-len(member_lists[c]), min(member_lists[c])))
    groups = []
    for c in order:
        ranked = sorted(member_lists[c], key=lambda i: (scores[i], i))
        groups.append([items[i] for i in ranked])
    return PresentationPlan(batch_index=batch_index, mode=mode, groups=groups)
