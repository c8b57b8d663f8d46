import numpy as np
import pytest

from vqtk.cluster.kmeans import KMeansConfig, build_cluster_tokenizer, kmeans_fit, random_codebook
from vqtk.config import settings
from vqtk.core.types import FeatureMap, pool_vectors
from vqtk.errors import InsufficientData, NearZeroNorm
from vqtk.quant.vq import vq_quantize


def _two_blobs(rng):
    left = rng.normal(size=(200, 2)) * 0.05 + [-5.0, 0.0]
    right = rng.normal(size=(200, 2)) * 0.05 + [5.0, 1.0]
    return FeatureMap.from_array(np.concatenate([left, right]).reshape(20, 20, 2)), left, right


@pytest.mark.parametrize("seed", range(5))
def test_full_batch_inertia_is_non_increasing(world_maps, seed):
    _, trace = kmeans_fit(world_maps, KMeansConfig(k=12, seed=seed, max_iters=30, tol=0.0))
    inertia = trace["inertia"].to_numpy()
    assert np.all(np.diff(inertia) <= 1e-12 * inertia[:-1])
    assert trace.attrs["inertia"] <= inertia[-1] * (1 + 1e-12)


def test_two_cluster_oracle(rng):
    fmap, left, right = _two_blobs(rng)
    book, _ = kmeans_fit([fmap], KMeansConfig(k=2, seed=0))
    centres = sorted(book.vectors.tolist())

    np.testing.assert_allclose(centres[0], left.mean(axis=0), atol=1e-3)
    np.testing.assert_allclose(centres[1], right.mean(axis=0), atol=1e-3)


@pytest.mark.parametrize("threads", [2, 8])
def test_threads_do_not_change_the_result(world_maps, monkeypatch, threads):
    monkeypatch.setattr(settings, "CHUNK_ELEMENTS", 512)
    cfg = KMeansConfig(k=10, seed=3, max_iters=15, n_init=2)
    single, trace_single = kmeans_fit(world_maps, cfg, n_jobs=1)
    multi, trace_multi = kmeans_fit(world_maps, cfg, n_jobs=threads)

    assert single == multi
    assert trace_single.equals(trace_multi)


def test_mini_batch_is_close_to_full_batch(world_maps):
    n = sum(m.positions for m in world_maps)
    _, full = kmeans_fit(world_maps, KMeansConfig(k=16, seed=1, n_init=3, max_iters=100))
    _, mini = kmeans_fit(world_maps, KMeansConfig(k=16, seed=1, n_init=3, max_iters=100,
                                                  batch_size=n // 4, tol=0.0))
    assert mini.attrs["inertia"] <= 1.05 * full.attrs["inertia"]


def test_zero_tolerance_runs_every_iteration(world_maps):
    _, trace = kmeans_fit(world_maps, KMeansConfig(k=5, seed=0, max_iters=7, tol=0.0))
    assert len(trace) == 7


def test_warm_start_never_raises_inertia(world_maps):
    small, small_trace = kmeans_fit(world_maps, KMeansConfig(k=4, seed=0, max_iters=20))
    _, large_trace = kmeans_fit(world_maps, KMeansConfig(k=8, seed=0, max_iters=20), init=small.vectors)
    assert large_trace.attrs["inertia"] <= small_trace.attrs["inertia"]


def test_restarts_keep_the_best(world_maps):
    _, one = kmeans_fit(world_maps, KMeansConfig(k=6, seed=5, n_init=1, max_iters=20))
    _, three = kmeans_fit(world_maps, KMeansConfig(k=6, seed=5, n_init=3, max_iters=20))
    assert sorted(three["restart"].unique()) == [0, 1, 2]
    assert three.attrs["inertia"] <= one.attrs["inertia"]


def test_cluster_tokenizer_beats_random_codebook(world_maps):
    book = build_cluster_tokenizer(world_maps, KMeansConfig(k=16, seed=0, n_init=3))
    anchors = random_codebook(world_maps, 16, seed=0)

    def error(b):
        return np.mean([vq_quantize(m, b).quant_error for m in world_maps])

    assert error(book) <= error(anchors)


def test_random_codebook_draws_distinct_data_rows(world_maps):
    book = random_codebook(world_maps, 10, seed=4)
    pooled = pool_vectors(world_maps)
    for row in book.vectors:
        assert np.any(np.all(pooled == row, axis=1))
    assert len({tuple(r) for r in book.vectors.tolist()}) == 10
    assert random_codebook(world_maps, 10, seed=4) == book


def test_k_larger_than_data(rng):
    fmap = FeatureMap.from_array(rng.normal(size=(1, 3, 2)))
    with pytest.raises(InsufficientData):
        kmeans_fit([fmap], KMeansConfig(k=4))
    with pytest.raises(InsufficientData):
        random_codebook([fmap], 4, seed=0)


def test_normalize_needs_nonzero_vectors():
    fmap = FeatureMap.from_array(np.array([[[1.0, 0.0], [0.0, 0.0]]]))
    with pytest.raises(NearZeroNorm):
        kmeans_fit([fmap], KMeansConfig(k=1, normalize=True))


def test_normalized_centroids_come_from_unit_vectors(rng):
    fmap = FeatureMap.from_array(rng.normal(size=(4, 4, 3)) * 10)
    book, _ = kmeans_fit([fmap], KMeansConfig(k=16, normalize=True, max_iters=1))
    np.testing.assert_allclose(np.linalg.norm(book.vectors, axis=1), 1.0, atol=1e-12)
