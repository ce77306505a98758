"""Dataset I/O, splitting, and the synthetic two-class generator.

File format: line-delimited JSON. The first line is a header
``{"format": "caiaf-dataset", "version": 1, "feature_dim": D, "classes": [...]}``
and every following line is one record with absent fields omitted.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .context import EARTH_RADIUS_KM
from .records import ContextDimension, Dataset, DatasetSplit, EmbeddingTable, Gazetteer, ImageRecord
from .validation import check_coordinates

DATASET_FORMAT = "caiaf-dataset"
DATASET_VERSION = 1


class DatasetFormatError(ValueError):
    """Raised for structural problems in a dataset/embedding/gazetteer file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class IngestReport:
    """Counts from one ingest pass."""

    kept: int = 0
    dropped: int = 0
    dropped_ids: list[str] = field(default_factory=list)
    missing_counts: dict[str, int] = field(default_factory=dict)


def _coerce_dimensions(dims) -> tuple[ContextDimension, ...]:
    return tuple(d if isinstance(d, ContextDimension) else ContextDimension(d) for d in dims)


def ingest(path, require_complete=()) -> tuple[Dataset, IngestReport]:
    """Load and validate a dataset file, dropping records whose metadata is
    incomplete for any of the required context dimensions.

    Kept records preserve file order. Structural problems (malformed line,
    duplicate id, feature-length mismatch, unknown label) raise
    DatasetFormatError with the offending line number; incompleteness only
    drops and counts.
    """
    required = _coerce_dimensions(require_complete)
    path = Path(path)
    report = IngestReport()
    records: list[ImageRecord] = []
    seen_ids: set[str] = set()

    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DatasetFormatError("missing header", line=1)
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"invalid header JSON: {exc}", line=1) from exc
        if header.get("format") != DATASET_FORMAT:
            raise DatasetFormatError(f"unexpected format {header.get('format')!r}", line=1)
        if header.get("version") != DATASET_VERSION:
            raise DatasetFormatError(f"unsupported version {header.get('version')!r}", line=1)
        feature_dim = header.get("feature_dim")
        if not isinstance(feature_dim, int) or feature_dim < 1:
            raise DatasetFormatError("feature_dim must be a positive integer", line=1)
        classes = header.get("classes")
        if not isinstance(classes, list) or not classes or len(set(classes)) != len(classes):
            raise DatasetFormatError("classes must be a non-empty list of unique names", line=1)

        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"invalid JSON: {exc}", line=lineno) from exc
            try:
                record = ImageRecord.from_dict(obj)
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"invalid record: {exc}", line=lineno) from exc
            if record.id in seen_ids:
                raise DatasetFormatError(f"duplicate id {record.id!r}", line=lineno)
            seen_ids.add(record.id)
            if record.features.shape[0] != feature_dim:
                raise DatasetFormatError(
                    f"feature length {record.features.shape[0]} != {feature_dim}", line=lineno)
            if record.label is not None and record.label not in classes:
                raise DatasetFormatError(f"unknown label {record.label!r}", line=lineno)

            missing = [d for d in required if not record.metadata.has_dimension(d)]
            if missing:
                report.dropped += 1
                report.dropped_ids.append(record.id)
                for d in missing:
                    report.missing_counts[d.value] = report.missing_counts.get(d.value, 0) + 1
                continue
            records.append(record)

    report.kept = len(records)
    return Dataset(feature_dim=feature_dim, classes=tuple(classes), records=records), report


def write_dataset(path, dataset: Dataset) -> None:
    """Serialize a dataset back to its line-delimited JSON form."""
    path = Path(path)
    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "feature_dim": dataset.feature_dim,
        "classes": list(dataset.classes),
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for record in dataset.records:
            fh.write(json.dumps(record.to_dict(), separators=(",", ":")) + "\n")


def split(records: list[ImageRecord], seed_per_class: int, holdout_frac: float,
          rng_seed: int = 0) -> DatasetSplit:
    """Stratified three-way split into seed, pool, and holdout ids.

    Per class: seed_per_class labeled records go to the seed set,
    round(holdout_frac * n_class) to the holdout, the rest to the pool.
    Unlabeled records always land in the pool. Deterministic given rng_seed.
    """
    if not (0.0 < holdout_frac < 0.5):
        raise ValueError("holdout_frac must be in (0, 0.5)")
    if seed_per_class < 0:
        raise ValueError("seed_per_class must be >= 0")

    by_class: dict[str, list[str]] = {}
    unlabeled: list[str] = []
    for r in records:
        if r.label is None:
            unlabeled.append(r.id)
        else:
            by_class.setdefault(r.label, []).append(r.id)

    rng = np.random.default_rng(rng_seed)
    seed_ids: list[str] = []
    holdout_ids: list[str] = []
    pool_ids: list[str] = []
    for cls in sorted(by_class):
        ids = by_class[cls]
        n_holdout = round(holdout_frac * len(ids))
        if len(ids) < seed_per_class + n_holdout:
            raise ValueError(
                f"class {cls!r} has {len(ids)} labeled records; "
                f"needs {seed_per_class + n_holdout} for seed + holdout")
        perm = [ids[int(i)] for i in rng.permutation(len(ids))]
        seed_ids.extend(perm[:seed_per_class])
        holdout_ids.extend(perm[seed_per_class:seed_per_class + n_holdout])
        pool_ids.extend(perm[seed_per_class + n_holdout:])
    pool_ids.extend(unlabeled)
    return DatasetSplit(seed_labeled=tuple(seed_ids), pool=tuple(pool_ids),
                        holdout=tuple(holdout_ids))


_VOCAB_A = ("skyline", "bridge", "museum", "ferry", "subway", "avenue", "harbor", "deli")
_VOCAB_B = ("thames", "pub", "tube", "palace", "market", "cathedral", "mews", "pier")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the two-class synthetic generator.

    Features are class-conditional isotropic Gaussians (per-dimension means
    mean_a / mean_b, shared sigma). With probability rho an item's
    location/timestamp/tags come from its own class's anchor/window/vocabulary,
    otherwise from the other class's.
    """

    n_per_class: int = 100
    feature_dim: int = 2
    class_names: tuple[str, str] = ("class0", "class1")
    mean_a: float = -1.5
    mean_b: float = 1.5
    sigma: float = 1.0
    rho: float = 0.9
    anchor_a: tuple[float, float] = (40.7128, -74.0060)
    anchor_b: tuple[float, float] = (51.5074, -0.1278)
    radius_km: float = 50.0
    window_a: tuple[int, int] = (1609459200, 1617235199)
    window_b: tuple[int, int] = (1625097600, 1632959999)
    vocab_a: tuple[str, ...] = _VOCAB_A
    vocab_b: tuple[str, ...] = _VOCAB_B
    tags_per_item: int = 3
    tag_noise: float = 0.05

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must be in [0, 1]")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sigma == 0 and self.mean_a == self.mean_b:
            raise ValueError("degenerate config: identical class means with sigma=0")
        if len(self.class_names) != 2 or self.class_names[0] == self.class_names[1]:
            raise ValueError("class_names must be two distinct names")
        check_coordinates(*self.anchor_a)
        check_coordinates(*self.anchor_b)


def mixture_ambiguity(features, config: SynthConfig) -> float:
    """Intrinsic ambiguity from the exact two-Gaussian posterior:
    alpha = 1 - 2*|P(class_b | features) - 0.5|, in [0, 1]."""
    x = np.asarray(features, dtype=np.float64)
    mu_a = np.full(config.feature_dim, config.mean_a)
    mu_b = np.full(config.feature_dim, config.mean_b)
    da = float(np.sum((x - mu_a) ** 2))
    db = float(np.sum((x - mu_b) ** 2))
    if config.sigma == 0:
        return 1.0 if da == db else 0.0
    delta = (da - db) / (2.0 * config.sigma ** 2)
    # P(class_b | x) = sigmoid(delta); guard the exp against overflow
    if delta >= 0:
        p_b = 1.0 / (1.0 + math.exp(-delta))
    else:
        e = math.exp(delta)
        p_b = e / (1.0 + e)
    return 1.0 - 2.0 * abs(p_b - 0.5)


def _destination(lat: float, lon: float, bearing_rad: float, dist_km: float) -> tuple[float, float]:
    """Point at the given great-circle distance and initial bearing."""
    delta = dist_km / EARTH_RADIUS_KM
    phi1 = math.radians(lat)
    lam1 = math.radians(lon)
    phi2 = math.asin(math.sin(phi1) * math.cos(delta)
                     + math.cos(phi1) * math.sin(delta) * math.cos(bearing_rad))
    lam2 = lam1 + math.atan2(math.sin(bearing_rad) * math.sin(delta) * math.cos(phi1),
                             math.cos(delta) - math.sin(phi1) * math.sin(phi2))
    lon2 = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return math.degrees(phi2), lon2


def synth(config: SynthConfig, rng_seed: int = 0) -> Dataset:
    """Generate a labeled two-class dataset with class-correlated metadata.

    Per item the draw order is fixed: features, metadata-source coin (rho),
    location (distance then bearing, uniform in the anchor disk), timestamp,
    tags (plus per-tag noise replacements), then two description words.
    Each record carries its analytic mixture ambiguity in ``alpha``.
    """
    rng = np.random.default_rng(rng_seed)
    means = (config.mean_a, config.mean_b)
    anchors = (config.anchor_a, config.anchor_b)
    windows = (config.window_a, config.window_b)
    vocabs = (tuple(config.vocab_a), tuple(config.vocab_b))
    combined = vocabs[0] + vocabs[1]

    records: list[ImageRecord] = []
    for cls_idx, cls_name in enumerate(config.class_names):
        for j in range(config.n_per_class):
            features = means[cls_idx] + config.sigma * rng.standard_normal(config.feature_dim)
            alpha = mixture_ambiguity(features, config)

            source = cls_idx if rng.random() < config.rho else 1 - cls_idx
            dist = config.radius_km * math.sqrt(rng.random())
            bearing = 2.0 * math.pi * rng.random()
            lat, lon = _destination(*anchors[source], bearing_rad=bearing, dist_km=dist)
            w0, w1 = windows[source]
            timestamp = int(rng.integers(w0, w1 + 1))
            vocab = vocabs[source]
            n_tags = min(config.tags_per_item, len(vocab))
            tags = [vocab[int(i)] for i in rng.choice(len(vocab), size=n_tags, replace=False)]
            tags = [combined[int(rng.integers(len(combined)))]
                    if rng.random() < config.tag_noise else t for t in tags]
            words = [vocab[int(i)] for i in rng.choice(len(vocab), size=min(2, len(vocab)),
                                                       replace=False)]
            records.append(ImageRecord(
                id=f"{cls_name}-{j:04d}",
                features=features,
                metadata=_make_metadata(lat, lon, timestamp, tags, " ".join(words)),
                label=cls_name,
                alpha=alpha,
            ))
    return Dataset(feature_dim=config.feature_dim, classes=tuple(config.class_names),
                   records=records)


def _make_metadata(lat, lon, timestamp, tags, description):
    from .records import Metadata

    return Metadata(lat=lat, lon=lon, timestamp=timestamp, tags=tuple(tags),
                    description=description)


def load_embeddings(path) -> EmbeddingTable:
    """Parse a text embedding table: ``word<TAB>v1 v2 ...`` per line.

    The first row fixes the dimension; later rows of a different length are
    rejected with their line number. Words are lowercased and must be unique.
    An empty file yields an empty (dim 0) table.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise DatasetFormatError("expected 'word<TAB>values'", line=lineno)
            word, values = line.split("\t", 1)
            word = word.strip().lower()
            if not word:
                raise DatasetFormatError("empty word", line=lineno)
            if word in entries:
                raise DatasetFormatError(f"duplicate word {word!r}", line=lineno)
            try:
                vec = np.array([float(v) for v in values.split()], dtype=np.float64)
            except ValueError as exc:
                raise DatasetFormatError(f"bad vector value: {exc}", line=lineno) from exc
            if vec.size == 0:
                raise DatasetFormatError("empty vector", line=lineno)
            if not entries:
                dim = vec.size
            elif vec.size != dim:
                raise DatasetFormatError(f"vector length {vec.size} != {dim}", line=lineno)
            entries[word] = vec
    return EmbeddingTable(dim=dim, entries=entries)


def load_gazetteer(path) -> Gazetteer:
    """Parse a gazetteer CSV (``name,lat,lon`` with a header row)."""
    path = Path(path)
    entries: list[tuple[str, float, float]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if len(row) < 3:
                    raise DatasetFormatError("expected header 'name,lat,lon'", line=1)
                continue
            if not row:
                continue
            if len(row) != 3:
                raise DatasetFormatError(f"expected 3 columns, got {len(row)}", line=lineno)
            name = row[0].strip()
            if not name:
                raise DatasetFormatError("empty place name", line=lineno)
            try:
                lat, lon = float(row[1]), float(row[2])
            except ValueError as exc:
                raise DatasetFormatError(f"bad coordinate: {exc}", line=lineno) from exc
            try:
                check_coordinates(lat, lon)
            except ValueError as exc:
                raise DatasetFormatError(str(exc), line=lineno) from exc
            entries.append((name, lat, lon))
    return Gazetteer(entries=entries)
