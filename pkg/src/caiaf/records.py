"""Core domain types: image records, metadata, datasets, lookup tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .validation import check_coordinates, check_timestamp


class ContextDimension(str, Enum):
    """Metadata axis used to cluster a batch and render context."""

    LOCATION = "location"
    TIME = "time"
    USER_TAGS = "user_tags"
    DESCRIPTION_KEYWORDS = "description_keywords"


@dataclass(frozen=True)
class Metadata:
    """Per-image metadata. All fields optional; lat/lon come as a pair.

    ``exif`` is kept for display completeness only; no distance is defined
    over it.
    """

    lat: float | None = None
    lon: float | None = None
    timestamp: int | None = None
    tags: tuple[str, ...] = ()
    description: str | None = None
    headline: str | None = None
    exif: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if (self.lat is None) != (self.lon is None):
            raise ValueError("lat and lon must be present together")
        if self.lat is not None:
            check_coordinates(self.lat, self.lon)
        if self.timestamp is not None:
            check_timestamp(self.timestamp)

    @property
    def location(self) -> tuple[float, float] | None:
        if self.lat is None:
            return None
        return (self.lat, self.lon)

    def has_dimension(self, dim: ContextDimension) -> bool:
        """Whether this metadata is complete for the given context dimension.

        ``description_keywords`` counts as present when either a non-empty
        description or at least one tag supplies tokens.
        """
        if dim is ContextDimension.LOCATION:
            return self.lat is not None
        if dim is ContextDimension.TIME:
            return self.timestamp is not None
        if dim is ContextDimension.USER_TAGS:
            return len(self.tags) > 0
        if dim is ContextDimension.DESCRIPTION_KEYWORDS:
            return bool(self.description) or len(self.tags) > 0
        raise ValueError(f"unknown dimension {dim!r}")

    def to_dict(self) -> dict:
        out: dict = {}
        if self.lat is not None:
            out["lat"] = self.lat
            out["lon"] = self.lon
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        if self.tags:
            out["tags"] = list(self.tags)
        if self.description is not None:
            out["description"] = self.description
        if self.headline is not None:
            out["headline"] = self.headline
        if self.exif:
            out["exif"] = dict(self.exif)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Metadata":
        return cls(
            lat=d.get("lat"),
            lon=d.get("lon"),
            timestamp=d.get("timestamp"),
            tags=tuple(d.get("tags", ())),
            description=d.get("description"),
            headline=d.get("headline"),
            exif=tuple(sorted(d.get("exif", {}).items())),
        )


@dataclass
class ImageRecord:
    """One image: feature vector, metadata, optional label and display URI.

    ``alpha`` is the intrinsic ambiguity attached by the synthetic generator;
    it is consumed by the simulated annotator only and never by the learner.
    """

    id: str
    features: np.ndarray
    metadata: Metadata
    label: str | None = None
    image_uri: str | None = None
    alpha: float | None = None

    def to_dict(self) -> dict:
        out: dict = {"id": self.id, "features": [float(v) for v in self.features]}
        if self.label is not None:
            out["label"] = self.label
        out["metadata"] = self.metadata.to_dict()
        if self.image_uri is not None:
            out["image_uri"] = self.image_uri
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRecord":
        return cls(
            id=str(d["id"]),
            features=np.asarray(d["features"], dtype=np.float64),
            metadata=Metadata.from_dict(d.get("metadata", {})),
            label=d.get("label"),
            image_uri=d.get("image_uri"),
            alpha=d.get("alpha"),
        )


@dataclass
class Dataset:
    """A validated collection of records sharing one feature dimension."""

    feature_dim: int
    classes: tuple[str, ...]
    records: list[ImageRecord]

    def __post_init__(self):
        self.classes = tuple(self.classes)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.id: r for r in self.records}

    def restrict(self, classes) -> "Dataset":
        """Subset to the records of the given classes (e.g. one binary pair)."""
        wanted = tuple(classes)
        missing = [c for c in wanted if c not in self.classes]
        if missing:
            raise ValueError(f"classes not in dataset: {missing}")
        kept = [r for r in self.records if r.label in wanted]
        return Dataset(self.feature_dim, wanted, kept)


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint id lists: initial labeled seed, query pool, held-out eval set."""

    seed_labeled: tuple[str, ...]
    pool: tuple[str, ...]
    holdout: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "seed_labeled": list(self.seed_labeled),
            "pool": list(self.pool),
            "holdout": list(self.holdout),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSplit":
        return cls(
            seed_labeled=tuple(d["seed_labeled"]),
            pool=tuple(d["pool"]),
            holdout=tuple(d["holdout"]),
        )


@dataclass
class EmbeddingTable:
    """Word-vector lookup for tag/keyword distances. Words are lowercase."""

    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, word: str) -> np.ndarray | None:
        return self.entries.get(word)


@dataclass
class Gazetteer:
    """Offline table of named places used to render location context."""

    entries: list[tuple[str, float, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)
