import math

import numpy as np
import pytest

from caiaf.context import (EARTH_RADIUS_KM, context_payload, geodesic_km,
                           keyword_distance, keyword_tokens, tag_distance,
                           time_distance_s)
from caiaf.records import EmbeddingTable, Gazetteer, ImageRecord, Metadata

# Independent haversine oracle values, computed before the build.
JFK = (40.6413, -73.7781)
LHR = (51.4700, -0.4543)
JFK_LHR_KM = 5540.0189701660875


def _random_coords(rng, n):
    return [(float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
            for _ in range(n)]


class TestGeodesic:
    def test_identity(self):
        assert geodesic_km((12.5, -33.25), (12.5, -33.25)) == 0.0

    def test_equatorial_antipodes(self):
        d = geodesic_km((0.0, 0.0), (0.0, 180.0))
        assert d == pytest.approx(math.pi * EARTH_RADIUS_KM, rel=1e-6)

    def test_jfk_lhr_against_precomputed_oracle(self):
        assert geodesic_km(JFK, LHR) == pytest.approx(JFK_LHR_KM, rel=0.005)

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for a, b in zip(_random_coords(rng, 200), _random_coords(rng, 200)):
            assert geodesic_km(a, b) == geodesic_km(b, a)

    def test_triangle_inequality_on_random_triples(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            a, b, c = _random_coords(rng, 3)
            assert geodesic_km(a, c) <= geodesic_km(a, b) + geodesic_km(b, c) + 1e-9

    def test_bounded_by_half_circumference(self):
        rng = np.random.default_rng(5)
        for a, b in zip(_random_coords(rng, 300), _random_coords(rng, 300)):
            assert geodesic_km(a, b) <= math.pi * EARTH_RADIUS_KM + 1e-9

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            geodesic_km((91.0, 0.0), (0.0, 0.0))
        with pytest.raises(ValueError):
            geodesic_km((0.0, 0.0), (0.0, 181.0))


class TestTimeDistance:
    def test_identity(self):
        assert time_distance_s(1234, 1234) == 0

    def test_absolute_difference(self):
        assert time_distance_s(100, 40) == 60

    def test_symmetry_sweep(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            a, b = int(rng.integers(0, 2**31)), int(rng.integers(0, 2**31))
            assert time_distance_s(a, b) == time_distance_s(b, a) >= 0


@pytest.fixture
def table():
    return EmbeddingTable(dim=2, entries={
        "u": np.array([1.0, 0.0]),
        "v": np.array([0.0, 1.0]),
        "w": np.array([1.0, 1.0]),
    })


class TestTagDistance:
    def test_identical_in_vocab(self, table):
        assert tag_distance(["u", "w"], ["u", "w"], table) == pytest.approx(0.0)

    def test_orthogonal_vectors(self, table):
        assert tag_distance(["u"], ["v"], table) == pytest.approx(1.0)

    def test_jaccard_fallback_out_of_vocab(self, table):
        # {x,y} vs {y,z}: intersection 1, union 3
        assert tag_distance(["x", "y"], ["y", "z"], table) == pytest.approx(1 - 1 / 3)

    def test_both_empty(self, table):
        assert tag_distance([], [], table) == 1.0

    def test_symmetric_and_in_range(self, table):
        rng = np.random.default_rng(9)
        vocab = ["u", "v", "w", "x", "y", "z"]
        for _ in range(200):
            a = [vocab[i] for i in rng.integers(0, len(vocab), size=rng.integers(0, 4))]
            b = [vocab[i] for i in rng.integers(0, len(vocab), size=rng.integers(0, 4))]
            d1, d2 = tag_distance(a, b, table), tag_distance(b, a, table)
            assert d1 == d2
            assert 0.0 <= d1 <= 2.0

    def test_order_and_duplicates_irrelevant(self, table):
        base = tag_distance(["u", "w"], ["v"], table)
        assert tag_distance(["w", "u", "u"], ["v", "v"], table) == base

    def test_case_insensitive(self, table):
        assert tag_distance(["U"], ["u"], table) == pytest.approx(0.0)


class TestKeywordDistance:
    def _rec(self, description=None, tags=()):
        return ImageRecord(id="x", features=np.zeros(2),
                           metadata=Metadata(description=description, tags=tuple(tags)))

    def test_identical_text(self, table):
        a = self._rec(description="u and v", tags=["w"])
        b = self._rec(description="u and v", tags=["w"])
        assert keyword_distance(a, b, table) == pytest.approx(0.0)

    def test_disjoint_oov_tokens(self, table):
        a = self._rec(description="foo bar")
        b = self._rec(description="baz qux")
        assert keyword_distance(a, b, table) == 1.0

    def test_reduces_to_tag_distance_without_description(self, table):
        a = self._rec(tags=["u"])
        b = self._rec(tags=["v"])
        assert keyword_distance(a, b, table) == tag_distance(["u"], ["v"], table)

    def test_tokenizer_splits_non_alphanumerics(self):
        assert keyword_tokens("Hello, world-2!", ["Tag"]) == ["hello", "world", "2", "tag"]


class TestContextPayload:
    def test_gazetteer_hit(self):
        gaz = Gazetteer(entries=[("New York City", 40.71, -74.01)])
        rec = ImageRecord(id="a", features=np.zeros(1),
                          metadata=Metadata(lat=40.69, lon=-74.04))
        assert context_payload(rec, gaz).place_display == "New York City"

    def test_empty_gazetteer_falls_back_to_coordinates(self):
        rec = ImageRecord(id="a", features=np.zeros(1),
                          metadata=Metadata(lat=40.69, lon=-74.04))
        assert context_payload(rec, Gazetteer()).place_display == "40.6900,-74.0400"

    def test_far_gazetteer_falls_back(self):
        gaz = Gazetteer(entries=[("London", 51.5074, -0.1278)])
        rec = ImageRecord(id="a", features=np.zeros(1),
                          metadata=Metadata(lat=40.69, lon=-74.04))
        assert context_payload(rec, gaz).place_display == "40.6900,-74.0400"

    def test_epoch_timestamp(self):
        rec = ImageRecord(id="a", features=np.zeros(1), metadata=Metadata(timestamp=0))
        assert context_payload(rec).time_display == "1970-01-01T00:00:00Z"

    def test_tags_and_description_pass_through(self):
        rec = ImageRecord(id="a", features=np.zeros(1),
                          metadata=Metadata(tags=("Sunset", "Beach"), description="warm"))
        p = context_payload(rec)
        assert p.tags_display == ["Sunset", "Beach"]
        assert p.description_display == "warm"
        assert p.time_display is None and p.place_display is None
