"""Latent sampling, traversal construction, code concatenation, RNG."""

import numpy as np
import pytest

from hsicgan.latents import (LatentSpec, Rng, concat_code, sample_latents,
                             traversal_batch)


def test_default_spec_matches_reference_dimensions():
    spec = LatentSpec()
    assert (spec.z_dim, spec.cat_classes, spec.cont_dim) == (62, 10, 2)
    assert spec.code_dim == 12
    assert spec.input_dim == 74


def test_sample_shapes_at_reference_batch_size():
    batch = sample_latents(LatentSpec(), 100, Rng(0))
    assert batch.z.shape == (100, 62)
    assert batch.c_cat.shape == (100, 10)
    assert batch.c_cont.shape == (100, 2)
    assert batch.cat_labels.shape == (100,)


def test_one_hot_rows_are_valid():
    batch = sample_latents(LatentSpec(), 512, Rng(1))
    np.testing.assert_array_equal(batch.c_cat.sum(axis=1), np.ones(512))
    assert np.all(np.count_nonzero(batch.c_cat, axis=1) == 1)
    np.testing.assert_array_equal(np.argmax(batch.c_cat, axis=1), batch.cat_labels)


def test_class_frequencies_within_binomial_bound():
    batch = sample_latents(LatentSpec(), 10000, Rng(2))
    counts = np.bincount(batch.cat_labels, minlength=10)
    assert np.all(np.abs(counts - 1000) <= 100)


def test_sampling_is_bit_reproducible():
    a = sample_latents(LatentSpec(), 64, Rng(42))
    b = sample_latents(LatentSpec(), 64, Rng(42))
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.c_cat, b.c_cat)
    np.testing.assert_array_equal(a.c_cont, b.c_cont)


def test_priors_land_in_their_supports():
    batch = sample_latents(LatentSpec(), 1000, Rng(3))
    assert batch.z.min() >= -1.0 and batch.z.max() < 1.0
    assert batch.c_cont.min() >= 0.0 and batch.c_cont.max() < 1.0
    normal = sample_latents(LatentSpec(z_prior="normal"), 1000, Rng(3))
    assert abs(normal.z.mean()) < 0.05 and abs(normal.z.std() - 1.0) < 0.05


def test_box_muller_moments_and_determinism():
    a = Rng(7).normal((5000,))
    b = Rng(7).normal((5000,))
    np.testing.assert_array_equal(a, b)
    assert abs(a.mean()) < 0.05
    assert abs(a.std() - 1.0) < 0.05


def test_independent_streams_do_not_interfere():
    lead = Rng(5)
    lead.random(100)
    fresh = Rng(5)
    np.testing.assert_array_equal(fresh.random(100), Rng(5).random(100))


def test_spec_validation():
    with pytest.raises(ValueError):
        LatentSpec(z_dim=0)
    with pytest.raises(ValueError):
        LatentSpec(z_prior="cauchy")


# ---------------------------------------------------------------------------
# traversal

def test_continuous_traversal_grid_values():
    fixed = sample_latents(LatentSpec(), 1, Rng(0))
    batch = traversal_batch(LatentSpec(), fixed, cont_index=0, steps=10)
    np.testing.assert_allclose(batch.c_cont[:, 0], np.linspace(-1, 1, 10), rtol=1e-15)
    np.testing.assert_array_equal(batch.c_cont[:, 1], np.full(10, fixed.c_cont[0, 1]))
    np.testing.assert_array_equal(batch.z, np.tile(fixed.z[0], (10, 1)))


def test_two_step_traversal_hits_endpoints_only():
    fixed = sample_latents(LatentSpec(), 1, Rng(1))
    batch = traversal_batch(LatentSpec(), fixed, cont_index=1, steps=2, lo=-0.5, hi=0.75)
    np.testing.assert_array_equal(batch.c_cont[:, 1], [-0.5, 0.75])


def test_categorical_traversal_enumerates_all_classes():
    spec = LatentSpec()
    fixed = sample_latents(spec, 1, Rng(2))
    batch = traversal_batch(spec, fixed)
    assert batch.c_cat.shape == (10, 10)
    np.testing.assert_array_equal(batch.c_cat, np.eye(10))
    np.testing.assert_array_equal(batch.cat_labels, np.arange(10))


def test_traversal_rejects_bad_index_and_steps():
    fixed = sample_latents(LatentSpec(), 1, Rng(3))
    with pytest.raises(IndexError):
        traversal_batch(LatentSpec(), fixed, cont_index=2)
    with pytest.raises(ValueError):
        traversal_batch(LatentSpec(), fixed, cont_index=0, steps=1)


# ---------------------------------------------------------------------------
# code concatenation

def test_code_width_matches_reference_configuration():
    batch = sample_latents(LatentSpec(), 5, Rng(4))
    assert concat_code(batch).shape == (5, 12)


def test_code_layout_is_onehot_then_continuous():
    batch = sample_latents(LatentSpec(), 1, Rng(5))
    batch.c_cat[:] = 0.0
    batch.c_cat[0, 3] = 1.0
    batch.c_cont[0] = [0.2, 0.9]
    np.testing.assert_array_equal(concat_code(batch)[0],
                                  [0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0.2, 0.9])


def test_code_round_trips_by_slicing():
    batch = sample_latents(LatentSpec(), 7, Rng(6))
    code = concat_code(batch)
    np.testing.assert_array_equal(code[:, :10], batch.c_cat)
    np.testing.assert_array_equal(code[:, 10:], batch.c_cont)
