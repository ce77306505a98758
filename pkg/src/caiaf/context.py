"""Distance functions over context dimensions and the per-image display payload.

Camera (Exif) tags intentionally carry no distance function; they are housed
on records for display completeness only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .records import EmbeddingTable, Gazetteer, ImageRecord
from .validation import check_coordinates

EARTH_RADIUS_KM = 6371.0088

# Nearest gazetteer entry further away than this renders as raw coordinates.
PLACE_MATCH_KM = 200.0

_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")


def geodesic_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) pairs (haversine)."""
    lat1, lon1 = check_coordinates(*a)
    lat2, lon2 = check_coordinates(*b)
    if lat1 == lat2 and lon1 == lon2:
        return 0.0
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def time_distance_s(a: int, b: int) -> int:
    """Absolute difference between two epoch-second timestamps."""
    return abs(int(a) - int(b))


def _unique_lower(tags) -> list[str]:
    seen: dict[str, None] = {}
    for t in tags:
        seen.setdefault(t.lower(), None)
    return list(seen)


def mean_tag_vector(tags, table: EmbeddingTable) -> np.ndarray | None:
    """Mean embedding over the unique lowercase in-vocabulary tags.

    Returns None when no tag is in vocabulary. Duplicates collapse before
    averaging (tags are a set).
    """
    vecs = [table.get(t) for t in _unique_lower(tags)]
    vecs = [v for v in vecs if v is not None]
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def _jaccard_distance(a: list[str], b: list[str]) -> float:
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 1.0
    return 1.0 - len(sa & sb) / len(union)


def tag_distance(a, b, table: EmbeddingTable) -> float:
    """Distance between two tag lists.

    Cosine branch: 1 - cosine(mean in-vocab vectors), range [0, 2].
    Falls back to 1 - Jaccard over the lowercase tag sets when either side
    has no in-vocabulary tags (or a mean vector with zero norm); two empty
    tag sets are at distance 1.
    """
    la, lb = _unique_lower(a), _unique_lower(b)
    va = mean_tag_vector(la, table)
    vb = mean_tag_vector(lb, table)
    if va is not None and vb is not None:
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na > 0.0 and nb > 0.0:
            cos = float(np.dot(va, vb) / (na * nb))
            return 1.0 - max(-1.0, min(1.0, cos))
    return _jaccard_distance(la, lb)


def keyword_tokens(description: str | None, tags) -> list[str]:
    """Lowercase alphanumeric tokens of the description, followed by the tags."""
    tokens = []
    if description:
        tokens = [t.lower() for t in _TOKEN_SPLIT.split(description) if t]
    return tokens + [t.lower() for t in tags]


def keyword_distance(a: ImageRecord, b: ImageRecord, table: EmbeddingTable) -> float:
    """Distance over description tokens plus tags, via ``tag_distance``."""
    ta = keyword_tokens(a.metadata.description, a.metadata.tags)
    tb = keyword_tokens(b.metadata.description, b.metadata.tags)
    return tag_distance(ta, tb, table)


@dataclass
class ContextPayload:
    """Display-ready context for one presented image."""

    time_display: str | None = None
    place_display: str | None = None
    tags_display: list[str] = field(default_factory=list)
    description_display: str | None = None

    def to_dict(self) -> dict:
        return {
            "time_display": self.time_display,
            "place_display": self.place_display,
            "tags_display": list(self.tags_display),
            "description_display": self.description_display,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextPayload":
        return cls(
            time_display=d.get("time_display"),
            place_display=d.get("place_display"),
            tags_display=list(d.get("tags_display", [])),
            description_display=d.get("description_display"),
        )


def format_utc(timestamp: int) -> str:
    dt = datetime.fromtimestamp(int(timestamp), tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def place_name(lat: float, lon: float, gazetteer: Gazetteer | None) -> str:
    """Nearest gazetteer name within PLACE_MATCH_KM, else '<lat>,<lon>'."""
    best_name, best_km = None, math.inf
    if gazetteer is not None:
        for name, glat, glon in gazetteer.entries:
            d = geodesic_km((lat, lon), (glat, glon))
            if d < best_km:
                best_name, best_km = name, d
    if best_name is not None and best_km <= PLACE_MATCH_KM:
        return best_name
    return f"{lat:.4f},{lon:.4f}"


def context_payload(record: ImageRecord, gazetteer: Gazetteer | None = None) -> ContextPayload:
    """Build the display payload for one record (formatted time, place, tags)."""
    md = record.metadata
    payload = ContextPayload(
        tags_display=list(md.tags),
        description_display=md.description,
    )
    if md.timestamp is not None:
        payload.time_display = format_utc(md.timestamp)
    if md.lat is not None:
        payload.place_display = place_name(md.lat, md.lon, gazetteer)
    return payload
