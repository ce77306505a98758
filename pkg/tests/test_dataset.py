import json

import numpy as np
import pytest

from caiaf.context import geodesic_km
from caiaf.dataset import (DatasetFormatError, SynthConfig, ingest, load_embeddings,
                           load_gazetteer, mixture_ambiguity, split, synth,
                           write_dataset)
from caiaf.records import ContextDimension, Dataset


def header(feature_dim=2, classes=("cat", "dog")):
    return {"format": "caiaf-dataset", "version": 1, "feature_dim": feature_dim,
            "classes": list(classes)}


def write_lines(path, lines):
    path.write_text("\n".join(json.dumps(l) for l in lines) + "\n")


def record(rid, features=(0.0, 0.0), label="cat", **metadata):
    return {"id": rid, "features": list(features), "label": label,
            "metadata": metadata}


class TestIngest:
    def test_drops_records_missing_required_dimension(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [
            header(),
            record("a", lat=1.0, lon=2.0),
            record("b"),
            record("c", lat=3.0, lon=4.0),
        ])
        ds, report = ingest(p, require_complete={ContextDimension.LOCATION})
        assert [r.id for r in ds.records] == ["a", "c"]
        assert report.dropped == 1
        assert report.kept == 2
        assert report.dropped_ids == ["b"]

    def test_no_requirements_keeps_all(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [header(), record("a"), record("b", timestamp=5)])
        ds, report = ingest(p)
        assert report.dropped == 0 and report.kept == 2

    def test_eight_hundred_record_protocol_file(self, tmp_path):
        # 100 records per category, 8 categories
        classes = ["bird", "cat", "flower", "food", "lake", "ocean", "town", "temple"]
        lines = [header(classes=classes)]
        for cls in classes:
            for i in range(100):
                lines.append(record(f"{cls}-{i}", label=cls, lat=1.0, lon=1.0,
                                    timestamp=1000 + i, tags=[cls],
                                    description=f"a {cls}"))
        p = tmp_path / "d.jsonl"
        write_lines(p, lines)
        ds, report = ingest(p)
        assert len(ds.records) == 800
        assert report.kept == 800

    def test_malformed_line_reports_line_number(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text(json.dumps(header()) + "\n{not json\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            ingest(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [header(), record("a"), record("a")])
        with pytest.raises(DatasetFormatError, match="duplicate id"):
            ingest(p)

    def test_feature_length_mismatch_rejected(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [header(), record("a", features=(1.0, 2.0, 3.0))])
        with pytest.raises(DatasetFormatError, match="feature length"):
            ingest(p)

    def test_unknown_label_rejected(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [header(), record("a", label="zebra")])
        with pytest.raises(DatasetFormatError, match="unknown label"):
            ingest(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "d.jsonl"
        write_lines(p, [{"format": "other"}])
        with pytest.raises(DatasetFormatError, match="line 1"):
            ingest(p)

    def test_round_trip_is_fixed_point(self, tmp_path):
        ds = synth(SynthConfig(n_per_class=15), rng_seed=2)
        p1, p2 = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
        write_dataset(p1, ds)
        loaded, _ = ingest(p1)
        write_dataset(p2, loaded)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_with_all_optional_fields(self, tmp_path):
        raw = tmp_path / "raw.jsonl"
        write_lines(raw, [
            header(feature_dim=1),
            {"id": "full", "features": [0.5], "label": "cat",
             "metadata": {"lat": 12.0, "lon": 34.0, "timestamp": 99,
                          "tags": ["sunny", "Beach"], "description": "a day out",
                          "headline": "holiday", "exif": {"FlashUsed": "no",
                                                          "ExposureTime": "1/60"}},
             "image_uri": "photos/full.jpg", "alpha": 0.25},
        ])
        first, _ = ingest(raw)
        p1, p2 = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
        write_dataset(p1, first)
        again, _ = ingest(p1)
        write_dataset(p2, again)
        assert p1.read_bytes() == p2.read_bytes()
        rec = again.records[0]
        assert rec.metadata.headline == "holiday"
        assert dict(rec.metadata.exif)["FlashUsed"] == "no"
        assert rec.image_uri == "photos/full.jpg"
        assert rec.alpha == 0.25


class TestSplit:
    def _dataset(self, n_per_class=100):
        return synth(SynthConfig(n_per_class=n_per_class), rng_seed=0)

    def test_sizes(self):
        ds = self._dataset(100)
        s = split(ds.records, seed_per_class=10, holdout_frac=0.2, rng_seed=1)
        assert len(s.seed_labeled) == 20
        assert len(s.holdout) == 40
        assert len(s.pool) == 140

    def test_deterministic(self):
        ds = self._dataset(50)
        a = split(ds.records, 5, 0.2, rng_seed=9)
        b = split(ds.records, 5, 0.2, rng_seed=9)
        assert a == b

    def test_disjoint_and_stratified_over_seeds(self):
        ds = self._dataset(40)
        by_id = ds.by_id()
        for seed in range(30):
            s = split(ds.records, 4, 0.25, rng_seed=seed)
            seed_set, pool, hold = set(s.seed_labeled), set(s.pool), set(s.holdout)
            assert not (seed_set & pool or seed_set & hold or pool & hold)
            assert seed_set | pool | hold == set(by_id)
            for part, per_class in ((s.seed_labeled, 4), (s.holdout, 10)):
                labels = [by_id[i].label for i in part]
                for cls in ds.classes:
                    assert labels.count(cls) == per_class

    def test_zero_seed_per_class_allowed(self):
        ds = self._dataset(20)
        s = split(ds.records, 0, 0.2, rng_seed=0)
        assert len(s.seed_labeled) == 0

    def test_insufficient_labeled_rejected(self):
        ds = self._dataset(10)
        with pytest.raises(ValueError, match="needs"):
            split(ds.records, 9, 0.2, rng_seed=0)

    def test_bad_holdout_frac_rejected(self):
        ds = self._dataset(10)
        for frac in (0.0, 0.5, 0.9):
            with pytest.raises(ValueError):
                split(ds.records, 1, frac, rng_seed=0)


class TestSynth:
    def test_rho_one_keeps_locations_in_class_radius(self):
        cfg = SynthConfig(n_per_class=100, rho=1.0)
        ds = synth(cfg, rng_seed=4)
        anchors = {cfg.class_names[0]: cfg.anchor_a, cfg.class_names[1]: cfg.anchor_b}
        for r in ds.records:
            d = geodesic_km(r.metadata.location, anchors[r.label])
            assert d <= cfg.radius_km + 1e-6

    def test_rho_zero_all_cross_class(self):
        cfg = SynthConfig(n_per_class=100, rho=0.0)
        ds = synth(cfg, rng_seed=4)
        other = {cfg.class_names[0]: cfg.anchor_b, cfg.class_names[1]: cfg.anchor_a}
        for r in ds.records:
            assert geodesic_km(r.metadata.location, other[r.label]) <= cfg.radius_km + 1e-6

    def test_rho_half_fraction(self):
        cfg = SynthConfig(n_per_class=500, rho=0.5, tag_noise=0.0)
        ds = synth(cfg, rng_seed=7)
        anchors = {cfg.class_names[0]: cfg.anchor_a, cfg.class_names[1]: cfg.anchor_b}
        own = sum(1 for r in ds.records
                  if geodesic_km(r.metadata.location, anchors[r.label]) <= cfg.radius_km)
        frac = own / len(ds.records)
        assert abs(frac - 0.5) <= 0.05

    def test_boundary_point_has_alpha_one(self):
        cfg = SynthConfig()
        midpoint = np.full(cfg.feature_dim, (cfg.mean_a + cfg.mean_b) / 2)
        assert mixture_ambiguity(midpoint, cfg) == pytest.approx(1.0)

    def test_alpha_in_unit_interval_and_decreasing_from_boundary(self):
        cfg = SynthConfig()
        ds = synth(cfg, rng_seed=3)
        for r in ds.records:
            assert 0.0 <= r.alpha <= 1.0
        far = mixture_ambiguity(np.full(cfg.feature_dim, cfg.mean_b + 5), cfg)
        near = mixture_ambiguity(np.full(cfg.feature_dim, cfg.mean_b / 2), cfg)
        assert far < near

    def test_deterministic(self):
        a = synth(SynthConfig(n_per_class=30), rng_seed=11)
        b = synth(SynthConfig(n_per_class=30), rng_seed=11)
        assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]

    def test_degenerate_config_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            SynthConfig(mean_a=1.0, mean_b=1.0, sigma=0.0)

    def test_all_metadata_complete(self):
        ds = synth(SynthConfig(n_per_class=20), rng_seed=1)
        for r in ds.records:
            for dim in ContextDimension:
                assert r.metadata.has_dimension(dim)


class TestRestrict:
    def test_restrict_to_pair(self):
        classes = ("a", "b", "c")
        a = synth(SynthConfig(n_per_class=5, class_names=("a", "b")), rng_seed=0)
        c = synth(SynthConfig(n_per_class=5, class_names=("c", "b")), rng_seed=1)
        recs = a.records + [r for r in c.records if r.label == "c"]
        for i, r in enumerate(recs):
            r.id = f"r{i}"
        ds = Dataset(feature_dim=2, classes=classes, records=recs)
        pair = ds.restrict(("a", "c"))
        assert pair.classes == ("a", "c")
        assert {r.label for r in pair.records} == {"a", "c"}

    def test_restrict_unknown_class_rejected(self):
        ds = synth(SynthConfig(n_per_class=3), rng_seed=0)
        with pytest.raises(ValueError):
            ds.restrict(("class0", "nope"))


class TestLoaders:
    def test_embeddings_two_words(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("Alpha\t1.0 2.0 3.0\nbeta\t4 5 6\n")
        table = load_embeddings(p)
        assert table.dim == 3
        assert len(table) == 2
        assert table.get("alpha") is not None  # lowercased

    def test_embeddings_wrong_length_names_line(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("a\t1 2\nb\t1 2 3\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_embeddings(p)

    def test_embeddings_empty_file_valid(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("")
        table = load_embeddings(p)
        assert len(table) == 0 and table.dim == 0

    def test_embeddings_duplicate_word_rejected(self, tmp_path):
        p = tmp_path / "emb.txt"
        p.write_text("a\t1 2\nA\t3 4\n")
        with pytest.raises(DatasetFormatError, match="duplicate"):
            load_embeddings(p)

    def test_gazetteer_parse(self, tmp_path):
        p = tmp_path / "gaz.csv"
        p.write_text("name,lat,lon\nNew York City,40.7128,-74.0060\nLondon,51.5074,-0.1278\n")
        gaz = load_gazetteer(p)
        assert len(gaz) == 2
        assert gaz.entries[0][0] == "New York City"

    def test_gazetteer_bad_coordinate_names_line(self, tmp_path):
        p = tmp_path / "gaz.csv"
        p.write_text("name,lat,lon\nNowhere,95.0,0.0\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_gazetteer(p)

    def test_gazetteer_empty_name_rejected(self, tmp_path):
        p = tmp_path / "gaz.csv"
        p.write_text("name,lat,lon\n,1.0,2.0\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_gazetteer(p)
