import numpy as np
import pytest

from vqtk.core.types import Codebook, FeatureMap, TokenGrid
from vqtk.errors import DimensionMismatch, ShapeMismatch
from vqtk.quant.vq import (
    VqLossConfig,
    compose_total_loss,
    ste_backward,
    straight_through,
    vq_loss,
    vq_loss_gradients,
    vq_quantize,
)
from tests.helpers import random_book, random_map


def _brute_force(fmap: FeatureMap, book: Codebook):
    x = fmap.vectors.astype(np.float64)
    codes = np.zeros(x.shape[0], dtype=np.int64)
    dists = np.full(x.shape[0], np.inf)
    for i, c in enumerate(book.vectors.astype(np.float64)):
        d = ((x - c) ** 2).sum(axis=1)
        closer = d < dists
        codes[closer] = i
        dists[closer] = d[closer]
    return codes, dists


def test_nearest_code_matches_brute_force(rng):
    for _ in range(1000):
        h, w = rng.integers(1, 9, size=2)
        d, n = rng.integers(1, 17), rng.integers(1, 257)
        fmap = random_map(rng, h=h, w=w, d=d)
        vectors = rng.normal(size=(n, d))
        if n > 1:
            vectors[rng.integers(1, n)] = vectors[rng.integers(0, n)]
        book = Codebook.from_array(vectors)
        out = vq_quantize(fmap, book)
        codes, dists = _brute_force(fmap, book)

        np.testing.assert_array_equal(out.tokens.sequence(), codes)
        np.testing.assert_allclose(out.distances.reshape(-1), dists, rtol=1e-12, atol=1e-15)
        assert out.quant_error == pytest.approx(dists.mean(), rel=1e-12)


def test_ties_resolve_to_lowest_index():
    book = Codebook.from_array(np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]]))
    fmap = FeatureMap.from_array(np.array([[[0.0, 0.0], [1.0, 0.0]]]))
    out = vq_quantize(fmap, book)
    np.testing.assert_array_equal(out.tokens.codes, [[0, 0]])


def test_code_vectors_are_codebook_rows(rng):
    book = random_book(rng, n=5, d=3, dtype=np.float32)
    out = vq_quantize(random_map(rng, d=3), book)
    assert out.code_vectors == book.lookup(out.tokens)


def test_threads_do_not_change_assignment(rng, monkeypatch):
    from vqtk.config import settings

    monkeypatch.setattr(settings, "CHUNK_ELEMENTS", 64)
    fmap = random_map(rng, h=16, w=16, d=4)
    book = random_book(rng, n=9, d=4)
    assert vq_quantize(fmap, book, n_jobs=1) == vq_quantize(fmap, book, n_jobs=4)


def test_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        vq_quantize(random_map(rng, d=3), random_book(rng, d=4))


def test_loss_terms_share_one_value(rng):
    fmap, book = random_map(rng), random_book(rng)
    tokens = vq_quantize(fmap, book).tokens
    terms = vq_loss(fmap, book, tokens, VqLossConfig(beta=0.5))

    assert terms.codebook_term == terms.commitment_term
    assert terms.total == pytest.approx(1.5 * terms.codebook_term, rel=1e-15)
    assert VqLossConfig().beta == 0.25


def test_loss_rejects_mismatched_tokens(rng):
    fmap, book = random_map(rng, h=2, w=2), random_book(rng, n=3)
    with pytest.raises(ShapeMismatch):
        vq_loss(fmap, book, TokenGrid.from_array([[0, 1, 2]]), VqLossConfig())


def _finite_difference(f, array, index, eps=1e-6):
    up, down = array.copy(), array.copy()
    up[index] += eps
    down[index] -= eps
    return (f(up) - f(down)) / (2 * eps)


@pytest.mark.parametrize("seed", range(200))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    fmap, book = random_map(rng, h=2, w=3, d=3), random_book(rng, n=4, d=3)
    cfg = VqLossConfig(beta=float(rng.uniform(0.1, 1.0)))
    tokens = vq_quantize(fmap, book).tokens
    grads = vq_loss_gradients(fmap, book, tokens, cfg)

    def commitment(x):
        return cfg.beta * vq_loss(FeatureMap.from_array(x), book, tokens, cfg).commitment_term

    def codebook(c):
        return vq_loss(fmap, Codebook.from_array(c), tokens, cfg).codebook_term

    x_index = tuple(int(rng.integers(s)) for s in fmap.data.shape)
    c_index = tuple(int(rng.integers(s)) for s in book.vectors.shape)
    assert grads.grad_x[x_index] == pytest.approx(
        _finite_difference(commitment, np.array(fmap.data), x_index), abs=1e-6)
    assert grads.grad_book[c_index] == pytest.approx(
        _finite_difference(codebook, np.array(book.vectors), c_index), abs=1e-6)


def test_unselected_codes_get_zero_gradient():
    book = Codebook.from_array(np.array([[0.0], [10.0], [20.0]]))
    fmap = FeatureMap.from_array(np.array([[[0.5], [1.0]]]))
    tokens = vq_quantize(fmap, book).tokens
    grads = vq_loss_gradients(fmap, book, tokens, VqLossConfig())

    assert grads.grad_book[1, 0] == 0.0
    assert grads.grad_book[2, 0] == 0.0
    assert grads.grad_book[0, 0] == pytest.approx(-2.0 / 2 * 1.5)


def test_straight_through_copies_upstream_gradient(rng):
    fmap, book = random_map(rng), random_book(rng)
    out = vq_quantize(fmap, book)
    upstream = rng.normal(size=fmap.data.shape)
    grads = ste_backward(upstream, out, book)

    np.testing.assert_array_equal(grads.grad_x, upstream)
    assert not grads.grad_book.any()
    np.testing.assert_array_equal(straight_through(fmap, out), out.code_vectors.data)
    with pytest.raises(ShapeMismatch):
        ste_backward(upstream[:1], out, book)


def test_compose_total_loss():
    assert compose_total_loss(1.25, 0.5) == 1.75


@pytest.mark.parametrize("point, code", [((0.9, 0.1), 1), ((0.5, 0.5), 0), ((0.0, 1.0), 2)])
def test_three_code_book(point, code):
    book = Codebook.from_array(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    out = vq_quantize(FeatureMap.from_array(np.array([[point]])), book)
    assert out.tokens.codes[0, 0] == code
    if point == (0.0, 1.0):
        assert out.quant_error == 0.0


def test_single_position_loss_and_gradients():
    book = Codebook.from_array(np.array([[0.0, 0.0], [5.0, 5.0]]))
    fmap = FeatureMap.from_array(np.array([[[1.0, 0.0]]]))
    tokens = TokenGrid.from_array([[0]])
    cfg = VqLossConfig(beta=0.25)

    assert vq_loss(fmap, book, tokens, cfg) == (1.25, 1.0, 1.0)
    grads = vq_loss_gradients(fmap, book, tokens, cfg)
    np.testing.assert_allclose(grads.grad_x.reshape(-1), [0.5, 0.0])
    np.testing.assert_allclose(grads.grad_book, [[-2.0, 0.0], [0.0, 0.0]])


def test_loss_ignores_position_order(rng):
    fmap, book = random_map(rng, h=3, w=4), random_book(rng)
    tokens = vq_quantize(fmap, book).tokens
    order = rng.permutation(fmap.positions)
    shuffled = FeatureMap.from_array(fmap.vectors[order].reshape(fmap.data.shape))
    moved = TokenGrid.from_array(tokens.sequence()[order].reshape(tokens.height, tokens.width))
    cfg = VqLossConfig()
    assert vq_loss(shuffled, book, moved, cfg).total == pytest.approx(vq_loss(fmap, book, tokens, cfg).total, rel=1e-12)
