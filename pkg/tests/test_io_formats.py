import json

import numpy as np
import pytest

from speechmood.featio import read_feature_cache, write_feature_cache
from speechmood.labels import SegmentLabel, load_labels, save_labels


class TestLabelFiles:
    def test_round_trip(self, tmp_path):
        labels = [
            SegmentLabel(segment_id="g1", activation=0.25, valence=-0.5, n_ratings=3),
            SegmentLabel(segment_id="g2", activation=0.0, valence=0.0,
                         excluded=True, reason="flagged: noise_dominant"),
        ]
        save_labels(labels, tmp_path / "l.json")
        assert load_labels(tmp_path / "l.json") == labels

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="activation"):
            SegmentLabel(segment_id="g", activation=1.5, valence=0.0)

    def test_excluded_may_be_out_of_range(self):
        SegmentLabel(segment_id="g", activation=0.0, valence=0.0, excluded=True)


class TestFeatureCache:
    def test_round_trip_sequences(self, tmp_path):
        rng = np.random.default_rng(0)
        feats = {f"g{i}": rng.standard_normal((10 + i, 40)) for i in range(5)}
        write_feature_cache(tmp_path, feats, kind="logmfb")
        kind, loaded = read_feature_cache(tmp_path)
        assert kind == "logmfb"
        for k, v in feats.items():
            # float32 storage quantizes
            assert np.allclose(loaded[k], v, atol=1e-6)
            assert loaded[k].shape == v.shape

    def test_sidecar_contents(self, tmp_path):
        write_feature_cache(tmp_path, {"a:b": np.zeros(88)}, kind="functionals",
                            feature_names=["f" + str(i) for i in range(88)],
                            norm_provenance="raw")
        sidecars = list(tmp_path.glob("*.json"))
        names = {p.name for p in sidecars}
        assert "index.json" in names
        side = json.loads((tmp_path / "a_b.json").read_text())
        assert side["shape"] == [88]
        assert side["dtype"] == "float32"
        assert side["byte_order"] == "little"
        assert side["norm_stats"] == "raw"
        assert len(side["feature_names"]) == 88

    def test_blob_is_little_endian_f32(self, tmp_path):
        arr = np.array([1.0, -2.0, 3.5])
        write_feature_cache(tmp_path, {"g": arr}, kind="functionals")
        blob = (tmp_path / "g.f32").read_bytes()
        assert np.array_equal(np.frombuffer(blob, dtype="<f4"), arr.astype("<f4"))

    def test_missing_index_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="index"):
            read_feature_cache(tmp_path)
