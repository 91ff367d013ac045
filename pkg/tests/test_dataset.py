"""Corpus generation, persistence and normalization."""

import json

import numpy as np
import pytest
from scipy.stats import kstest, spearmanr

from linksynth import dataset as ds
from linksynth.kinematics import LengthRanges, _valid_mask


@pytest.fixture(scope="module")
def small_dataset():
    return ds.generate(1000, n_steps=360, seed=7)


class TestLhs:
    def test_one_point_per_bin(self):
        rows = ds.lhs_sample(10, seed=0)
        lo, hi = LengthRanges().as_arrays()
        for d in range(5):
            bins = np.floor((rows[:, d] - lo[d]) / (hi[d] - lo[d]) * 10).astype(int)
            assert sorted(bins) == list(range(10))

    def test_single_point_inside_box(self):
        rows = ds.lhs_sample(1, seed=3)
        lo, hi = LengthRanges().as_arrays()
        assert np.all(rows >= lo) and np.all(rows <= hi)

    def test_deterministic(self):
        a = ds.lhs_sample(1000, seed=5)
        b = ds.lhs_sample(1000, seed=5)
        assert np.array_equal(a, b)

    def test_marginals_uniform(self):
        rows = ds.lhs_sample(1000, seed=1)
        lo, hi = LengthRanges().as_arrays()
        for d in range(5):
            u = (rows[:, d] - lo[d]) / (hi[d] - lo[d])
            stat = kstest(u, "uniform").statistic
            assert stat < 0.05

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            ds.lhs_sample(0)


class TestGenerate:
    def test_all_valid(self, small_dataset):
        assert len(small_dataset) == 1000
        assert _valid_mask(small_dataset.linkages).all()

    def test_labels_roundtrip_evaluate(self, small_dataset):
        from linksynth.conditions import evaluate_rows

        idx = np.random.default_rng(0).integers(0, 1000, 20)
        recomputed = evaluate_rows(small_dataset.linkages[idx], n_steps=360)
        assert np.allclose(recomputed, small_dataset.conditions[idx], atol=1e-9)

    def test_metadata(self, small_dataset):
        meta = small_dataset.meta
        assert meta.seed == 7
        assert meta.n_steps == 360
        assert meta.rejected_count > 0
        assert meta.schema_version == ds.SCHEMA_VERSION

    def test_conditions_tradeoff(self, small_dataset):
        rho = spearmanr(small_dataset.conditions[:, 0], small_dataset.conditions[:, 1]).statistic
        assert rho < 0

    def test_condition_bulk_shape(self, small_dataset):
        # right-skewed d_max with the bulk below ~3; eta bulk below ~6
        d, eta = small_dataset.conditions[:, 0], small_dataset.conditions[:, 1]
        assert np.mean(d < 3.0) > 0.8
        assert np.mean(eta < 6.0) > 0.8
        assert np.median(d) < np.mean(d)  # right skew

    def test_deterministic_file(self, small_dataset, tmp_path):
        again = ds.generate(1000, n_steps=360, seed=7)
        ds.save(small_dataset, tmp_path / "a.csv")
        ds.save(again, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_sample_accessor(self, small_dataset):
        sample = small_dataset[5]
        assert sample.linkage.l2 == small_dataset.linkages[5, 0]
        assert sample.conditions.d_max == small_dataset.conditions[5, 0]


class TestPersistence:
    def test_roundtrip(self, small_dataset, tmp_path):
        path = tmp_path / "data.csv"
        ds.save(small_dataset, path)
        loaded = ds.load(path)
        assert np.array_equal(loaded.linkages, small_dataset.linkages)
        assert np.array_equal(loaded.conditions, small_dataset.conditions)
        assert loaded.meta.to_dict() == small_dataset.meta.to_dict()

    def test_truncated_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(ds.CSV_HEADER + "\n0.5,1.2,1.0,0.0\n", encoding="utf-8")
        with pytest.raises(ds.FormatError):
            ds.load(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(ds.FormatError):
            ds.load(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(ds.CSV_HEADER + "\n0.5,1.2,1.0,0.0,0.0,oops,0.5\n", encoding="utf-8")
        with pytest.raises(ds.FormatError):
            ds.load(path)

    def test_header_only_keeps_metadata(self, small_dataset, tmp_path):
        path = tmp_path / "empty.csv"
        empty = ds.Dataset(np.empty((0, 5)), np.empty((0, 2)), meta=small_dataset.meta)
        ds.save(empty, path)
        loaded = ds.load(path)
        assert len(loaded) == 0
        assert loaded.meta.to_dict() == small_dataset.meta.to_dict()

    def test_version_mismatch(self, small_dataset, tmp_path):
        path = tmp_path / "data.csv"
        ds.save(small_dataset, path)
        meta_path = path.with_suffix(".meta.json")
        doc = json.loads(meta_path.read_text())
        doc["schema_version"] = 999
        meta_path.write_text(json.dumps(doc))
        with pytest.raises(ds.VersionError):
            ds.load(path)


class TestNormalizer:
    def test_table_range_endpoints(self, small_dataset):
        norm = ds.fit_normalizer(small_dataset)
        rows = np.array([[0.05, 0.05, 0.05, -0.5, -1.5], [0.95, 2.0, 3.0, 2.5, 1.5]])
        out = norm.normalize_linkage(rows)
        assert np.allclose(out[0], 0.0, atol=1e-15)
        assert np.allclose(out[1], 1.0, atol=1e-15)

    def test_roundtrip_identity(self, small_dataset):
        norm = ds.fit_normalizer(small_dataset)
        rng = np.random.default_rng(2)
        rows = rng.uniform(-2, 3, size=(50, 5))
        assert np.allclose(norm.denormalize_linkage(norm.normalize_linkage(rows)), rows,
                           atol=1e-12)
        pairs = rng.uniform(0, 8, size=(50, 2))
        assert np.allclose(norm.denormalize_conditions(norm.normalize_conditions(pairs)),
                           pairs, atol=1e-12)

    def test_condition_extremes_map_to_unit(self, small_dataset):
        norm = ds.fit_normalizer(small_dataset)
        out = norm.normalize_conditions(small_dataset.conditions)
        assert abs(out.min(axis=0)).max() < 1e-15
        assert abs(out.max(axis=0) - 1.0).max() < 1e-15

    def test_serialization(self, small_dataset):
        norm = ds.fit_normalizer(small_dataset)
        again = ds.Normalizer.from_dict(norm.to_dict())
        assert np.array_equal(again.linkage_offset, norm.linkage_offset)
        assert np.array_equal(again.cond_scale, norm.cond_scale)
