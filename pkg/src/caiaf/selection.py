"""Batch selection from the unlabeled pool: informative-and-diverse plus baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import LinearMarginClassifier
from .clustering import KMeans
from .records import ImageRecord

STRATEGIES = ("informative_diverse", "uncertainty", "random")


@dataclass(frozen=True)
class SelectionConfig:
    strategy: str = "informative_diverse"
    batch_size: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "batch_size": self.batch_size,
                "rng_seed": self.rng_seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionConfig":
        return cls(strategy=d.get("strategy", "informative_diverse"),
                   batch_size=d.get("batch_size", 5), rng_seed=d.get("rng_seed", 0))


def zscore(X: np.ndarray) -> np.ndarray:
    """Per-dimension standardization with population std; constant dims map to 0."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (X - mean) / std


def _informative_diverse(pool: list[ImageRecord], model: LinearMarginClassifier,
                         m: int, rng_seed: int) -> list[int]:
    """Cluster the standardized pool features and round-robin the clusters,
    taking each cluster's most uncertain remaining item per visit.

    Clusters are visited by size descending (ties by smallest member index);
    uncertainty ties also break by smallest index, which makes round-1
    behavior deterministic even under a constant decision function.
    """
    n = len(pool)
    X = zscore(np.array([r.features for r in pool]))
    k = min(m, n)
    km = KMeans(n_clusters=k, max_iter=100, tol=1e-6, rng_seed=rng_seed).fit(X)
    scores = model.uncertainty(np.array([r.features for r in pool]))

    members = [[int(i) for i in np.flatnonzero(km.labels_ == c)] for c in range(k)]
    for lst in members:
        lst.sort(key=lambda i: (scores[i], i))
    cluster_order = sorted(range(k), key=lambda c: (-len(members[c]), min(members[c])))

    taken: list[int] = []
    cursor = [0] * k
    while len(taken) < min(m, n):
        progressed = False
        for c in cluster_order:
            if len(taken) >= min(m, n):
                break
            if cursor[c] < len(members[c]):
                taken.append(members[c][cursor[c]])
                cursor[c] += 1
                progressed = True
        if not progressed:
            break
    return taken


def select(pool: list[ImageRecord], model: LinearMarginClassifier,
           config: SelectionConfig) -> list[str]:
    """Pick the ids of the next batch (length min(batch_size, |pool|))."""
    if not pool:
        raise ValueError("pool is empty")
    m = min(config.batch_size, len(pool))
    if config.strategy == "random":
        return select_random(pool, m, config.rng_seed)
    if config.strategy == "uncertainty":
        scores = model.uncertainty(np.array([r.features for r in pool]))
        ranked = sorted(range(len(pool)), key=lambda i: (scores[i], i))
        return [pool[i].id for i in ranked[:m]]
    picked = _informative_diverse(pool, model, m, config.rng_seed)
    return [pool[i].id for i in picked]


def select_random(pool: list[ImageRecord], m: int, rng_seed: int) -> list[str]:
    """Uniform sample of m distinct pool ids, deterministic given the seed."""
    if not pool:
        raise ValueError("pool is empty")
    m = min(m, len(pool))
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(pool), size=m, replace=False)
    return [pool[int(i)].id for i in idx]
