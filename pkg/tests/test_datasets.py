import json
import os

import numpy as np
import pytest

from app.datasets import (
    CONTINUOUS,
    DISCRETE,
    ConfoundLabels,
    DatasetBundle,
    generate_rotated_glyphs,
    generate_two_factor_gaussians,
    load_bundle,
    mask_confound_labels,
    save_bundle,
)
from app.datasets.generators import block_directions
from app.datasets.glyphs import GLYPH_NAMES, render_glyph
from app.utils.exceptions import FormatError, InvalidArgumentError


def _gaussians(**overrides):
    arguments = dict(
        k_clusters=2,
        g_categories=2,
        n_per_cell=100,
        dim=2,
        interest_gap=6.0,
        confound_gap=6.0,
        noise_sigma=1.0,
        seed=3,
    )
    arguments.update(overrides)
    return generate_two_factor_gaussians(**arguments)


class TestConfoundLabels:
    def test_one_hot_has_one_entry_per_row(self):
        labels = ConfoundLabels(DISCRETE, [0, 2, 1, 2], g_categories=3)
        C = labels.one_hot()
        assert C.shape == (4, 3)
        np.testing.assert_array_equal(C.sum(axis=1), 1.0)
        np.testing.assert_array_equal(C.argmax(axis=1), [0, 2, 1, 2])

    def test_discrete_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            ConfoundLabels(DISCRETE, [0, 3], g_categories=3)

    def test_continuous_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            ConfoundLabels(CONTINUOUS, [0.2, 1.5])

    def test_mask_needs_an_observed_entry(self):
        with pytest.raises(InvalidArgumentError):
            ConfoundLabels(DISCRETE, [0, 1], g_categories=2, mask=[False, False])

    def test_continuous_has_no_one_hot(self):
        with pytest.raises(InvalidArgumentError):
            ConfoundLabels(CONTINUOUS, [0.5]).one_hot()


class TestDatasetBundle:
    def test_rejects_non_finite_features(self):
        with pytest.raises(InvalidArgumentError):
            DatasetBundle(
                X=np.array([[np.nan], [0.0]]),
                c=ConfoundLabels(DISCRETE, [0, 1], g_categories=2),
                k_clusters=2,
            )

    def test_rejects_fewer_samples_than_clusters(self):
        with pytest.raises(InvalidArgumentError):
            DatasetBundle(X=np.zeros((1, 2)), c=ConfoundLabels(DISCRETE, [0], g_categories=1), k_clusters=2)

    def test_rejects_labels_outside_range(self):
        with pytest.raises(InvalidArgumentError):
            DatasetBundle(
                X=np.zeros((2, 2)),
                y=[0, 2],
                c=ConfoundLabels(DISCRETE, [0, 0], g_categories=1),
                k_clusters=2,
            )


class TestTwoFactorGaussians:
    def test_counts(self):
        bundle = _gaussians()
        assert bundle.n == 400
        assert bundle.d_input == 2
        assert bundle.k_clusters == 2
        assert bundle.c.g_categories == 2

    def test_every_cell_has_n_per_cell_samples(self):
        bundle = _gaussians(k_clusters=3, g_categories=2, n_per_cell=7, dim=4)
        for k in range(3):
            for g in range(2):
                assert np.sum((bundle.y == k) & (bundle.c.values == g)) == 7

    def test_deterministic_given_seed(self):
        assert _gaussians().equals(_gaussians())
        assert not _gaussians().equals(_gaussians(seed=4))

    def test_zero_confound_gap_leaves_class_means_equal(self):
        bundle = _gaussians(confound_gap=0.0)
        X, c = bundle.X.astype(np.float64), bundle.c.values
        difference = np.abs(X[c == 0].mean(axis=0) - X[c == 1].mean(axis=0))
        assert np.all(difference <= 4.0 * 1.0 / np.sqrt(100 * 2))

    def test_confound_only_shifts_its_block(self):
        bundle = _gaussians(interest_gap=0.0, confound_gap=20.0, dim=4)
        X, c = bundle.X.astype(np.float64), bundle.c.values
        interest_block = np.abs(X[c == 0, :2].mean(axis=0) - X[c == 1, :2].mean(axis=0))
        confound_block = np.abs(X[c == 0, 2:].mean(axis=0) - X[c == 1, 2:].mean(axis=0))
        assert np.all(interest_block < 1.0)
        assert confound_block.max() > 10.0

    def test_dim_too_small(self):
        with pytest.raises(InvalidArgumentError):
            _gaussians(dim=1)

    @pytest.mark.parametrize("count,block_size", [(1, 1), (2, 1), (3, 2), (5, 3)])
    def test_block_directions_are_unit_vectors(self, count, block_size):
        directions = block_directions(count, block_size)
        assert directions.shape == (count, block_size)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)

    def test_one_coordinate_block_holds_two_classes(self):
        with pytest.raises(InvalidArgumentError):
            block_directions(3, 1)
        with pytest.raises(InvalidArgumentError):
            _gaussians(k_clusters=3, dim=2)
        assert _gaussians(k_clusters=3, dim=4).n == 600

    def test_non_positive_noise(self):
        with pytest.raises(InvalidArgumentError):
            _gaussians(noise_sigma=0.0)


class TestRotatedGlyphs:
    def test_every_stencil_is_drawn(self):
        assert len(GLYPH_NAMES) == 8
        for index in range(8):
            image = render_glyph(index, 28)
            assert image.shape == (28, 28)
            assert image.max() == 1.0
            assert image.min() == 0.0

    def test_stencils_are_distinct(self):
        images = [render_glyph(index, 28).ravel() for index in range(8)]
        for i in range(8):
            for j in range(i + 1, 8):
                assert not np.array_equal(images[i], images[j])

    def test_identity_case(self):
        bundle = generate_rotated_glyphs(DISCRETE, 1, 1, 1, seed=0)
        assert bundle.n == 1
        assert bundle.d_input == 784
        np.testing.assert_array_equal(bundle.y, [0])
        np.testing.assert_array_equal(bundle.c.values, [0])

    def test_discrete_layout(self):
        bundle = generate_rotated_glyphs(DISCRETE, 3, 4, 2, image_size=16, seed=1)
        assert bundle.n == 3 * 4 * 2
        assert bundle.d_input == 256
        assert bundle.k_clusters == 4
        assert bundle.c.g_categories == 3
        assert bundle.X.min() >= 0.0 and bundle.X.max() <= 1.0
        for k in range(4):
            for g in range(3):
                assert np.sum((bundle.y == k) & (bundle.c.values == g)) == 2

    def test_continuous_confound_is_uniform_on_unit_interval(self):
        bundle = generate_rotated_glyphs(CONTINUOUS, 2, None, 2500, image_size=16, seed=2)
        assert bundle.c.kind == CONTINUOUS
        assert bundle.k_clusters == 2
        assert bundle.c.values.min() >= 0.0 and bundle.c.values.max() <= 1.0
        assert abs(float(bundle.c.values.mean()) - 0.5) <= 0.02

    def test_continuous_cluster_count_must_match_glyphs(self):
        with pytest.raises(InvalidArgumentError):
            generate_rotated_glyphs(CONTINUOUS, 3, 4, 1, image_size=16)

    def test_too_many_glyphs(self):
        with pytest.raises(InvalidArgumentError):
            generate_rotated_glyphs(DISCRETE, 9, 2, 1)

    def test_image_too_small(self):
        with pytest.raises(InvalidArgumentError):
            generate_rotated_glyphs(DISCRETE, 2, 2, 1, image_size=8)

    def test_deterministic_given_seed(self):
        first = generate_rotated_glyphs(DISCRETE, 2, 2, 3, image_size=16, seed=5)
        second = generate_rotated_glyphs(DISCRETE, 2, 2, 3, image_size=16, seed=5)
        assert first.equals(second)


class TestStorage:
    def test_round_trip_discrete(self, tmp_path):
        bundle = mask_confound_labels(_gaussians(), 0.5, seed=0)
        save_bundle(bundle, str(tmp_path))
        assert load_bundle(str(tmp_path)).equals(bundle)

    def test_round_trip_continuous(self, tmp_path):
        bundle = generate_rotated_glyphs(CONTINUOUS, 2, None, 3, image_size=16, seed=0)
        save_bundle(bundle, str(tmp_path))
        assert load_bundle(str(tmp_path)).equals(bundle)

    def test_meta_layout(self, tmp_path):
        save_bundle(_gaussians(), str(tmp_path))
        with open(os.path.join(tmp_path, "meta.json"), encoding="utf-8") as f:
            meta = json.load(f)
        assert meta["dtype"] == "f32le"
        assert meta["layout"] == "row-major"
        assert meta["format_version"] == 1
        assert meta["confound_kind"] == "discrete"
        assert os.path.getsize(os.path.join(tmp_path, "X.bin")) == 400 * 2 * 4
        assert os.path.getsize(os.path.join(tmp_path, "y.bin")) == 400 * 4
        assert not os.path.exists(os.path.join(tmp_path, "c_mask.bin"))

    def test_truncated_features(self, tmp_path):
        save_bundle(_gaussians(), str(tmp_path))
        path = os.path.join(tmp_path, "X.bin")
        with open(path, "rb+") as f:
            f.truncate(os.path.getsize(path) - 4)
        with pytest.raises(FormatError, match="X.bin"):
            load_bundle(str(tmp_path))

    def test_missing_key(self, tmp_path):
        save_bundle(_gaussians(), str(tmp_path))
        path = os.path.join(tmp_path, "meta.json")
        with open(path, encoding="utf-8") as f:
            meta = json.load(f)
        del meta["k_clusters"]
        with open(path, "w", encoding="utf-8") as f:
            json.dump(meta, f)
        with pytest.raises(FormatError, match="k_clusters"):
            load_bundle(str(tmp_path))

    def test_unknown_dtype(self, tmp_path):
        save_bundle(_gaussians(), str(tmp_path))
        path = os.path.join(tmp_path, "meta.json")
        with open(path, encoding="utf-8") as f:
            meta = json.load(f)
        meta["dtype"] = "f64le"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(meta, f)
        with pytest.raises(FormatError, match="meta.json"):
            load_bundle(str(tmp_path))

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FormatError):
            load_bundle(str(tmp_path / "absent"))


class TestMasking:
    def test_full_ratio_observes_everything(self):
        bundle = _gaussians()
        masked = mask_confound_labels(bundle, 1.0, seed=0)
        assert masked.c.mask.all()
        np.testing.assert_array_equal(masked.c.values, bundle.c.values)
        np.testing.assert_array_equal(masked.X, bundle.X)

    def test_exact_count(self):
        bundle = _gaussians(n_per_cell=250)
        masked = mask_confound_labels(bundle, 0.1, seed=0)
        assert int(masked.c.mask.sum()) == 100

    def test_stratified_when_few_labels(self):
        bundle = _gaussians(k_clusters=1, g_categories=6, n_per_cell=1500)
        masked = mask_confound_labels(bundle, 0.001, seed=0)
        assert int(masked.c.mask.sum()) == 9
        observed = masked.c.values[masked.c.mask]
        assert set(observed.tolist()) == set(range(6))

    def test_deterministic_given_seed(self):
        bundle = _gaussians()
        first = mask_confound_labels(bundle, 0.3, seed=11)
        second = mask_confound_labels(bundle, 0.3, seed=11)
        np.testing.assert_array_equal(first.c.mask, second.c.mask)

    @pytest.mark.parametrize("ratio", [0.0, -0.1, 1.5])
    def test_ratio_out_of_range(self, ratio):
        with pytest.raises(InvalidArgumentError):
            mask_confound_labels(_gaussians(), ratio, seed=0)

    def test_continuous_confound_cannot_be_masked(self):
        bundle = generate_rotated_glyphs(CONTINUOUS, 2, None, 2, image_size=16)
        with pytest.raises(InvalidArgumentError):
            mask_confound_labels(bundle, 0.5, seed=0)
