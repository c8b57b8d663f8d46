import struct

import numpy as np
import pytest
from pydantic import ValidationError

from vqtk.core.types import TokenGrid
from vqtk.errors import (
    BadMagic,
    CodeOutOfRange,
    DimensionOverflow,
    EmptyData,
    FormatError,
    NotStochastic,
    Truncated,
    UsageError,
    ZeroProbability,
)
from vqtk.metrics.perplexity import perplexity
from vqtk.proposal.base import BOS, DeterministicModel, UniformModel
from vqtk.proposal.ngram import (
    NgramConfig,
    encode_ngram,
    load_ngram,
    ngram_fit,
    ngram_sample,
    sample_grids,
    save_ngram,
    sequence_log_prob,
)


def test_counts_start_from_bos():
    model = ngram_fit([TokenGrid.from_array([[0, 1], [0, 1]])], NgramConfig(order=2, vocab_size=3))
    assert model.counts == {(BOS,): {0: 1}, (0,): {1: 2}, (1,): {0: 1}}


def test_smoothed_distribution():
    model = ngram_fit([TokenGrid.from_array([[0, 1], [0, 1]])], NgramConfig(order=2, vocab_size=3, alpha=1.0))
    dist = model.next_token_distribution([0])

    np.testing.assert_allclose(dist, [1 / 5, 3 / 5, 1 / 5])
    np.testing.assert_allclose(model.next_token_distribution([2]), [1 / 3] * 3)
    assert model.check_distribution(dist) is dist
    assert model.token_log_prob([0], 1) == pytest.approx(np.log(0.6))


def test_unigram_model():
    model = ngram_fit([TokenGrid.from_array([[0, 0, 0, 1]])], NgramConfig(order=1, vocab_size=2, alpha=1.0))
    np.testing.assert_allclose(model.next_token_distribution([1, 1, 1]), [4 / 6, 2 / 6])


def test_memorized_corpus_has_unit_perplexity():
    corpus = [TokenGrid.from_array((np.arange(16) % 4).reshape(4, 4)) for _ in range(3)]
    model = ngram_fit(corpus, NgramConfig(order=2, vocab_size=4, alpha=1e-8))
    assert 1.0 <= perplexity(model, corpus) <= 1.001


def test_uniform_perplexity_is_the_vocabulary_size(rng):
    corpus = [TokenGrid.from_array(rng.integers(0, 8192, size=(4, 4))) for _ in range(3)]
    assert perplexity(UniformModel(8192), corpus) == 8192.0


def test_out_of_range_codes(rng):
    corpus = [TokenGrid.from_array([[0, 5]])]
    with pytest.raises(CodeOutOfRange):
        ngram_fit(corpus, NgramConfig(vocab_size=4))
    with pytest.raises(CodeOutOfRange):
        perplexity(UniformModel(4), corpus)
    with pytest.raises(EmptyData):
        ngram_fit([], NgramConfig(vocab_size=4))


def test_sequence_log_prob_with_context():
    model = ngram_fit([TokenGrid.from_array([[0, 1, 2, 0, 1, 2]])], NgramConfig(order=2, vocab_size=3))
    whole = sequence_log_prob(model, [0, 1, 2])
    split = sequence_log_prob(model, [0]) + sequence_log_prob(model, [1, 2], context=[0])
    assert whole == pytest.approx(split)


def test_deterministic_model():
    model = DeterministicModel(5, 3)
    np.testing.assert_array_equal(ngram_sample(model, 10, seed=0), [3] * 10)
    assert model.sequence_log_prob([3, 3]) == 0.0
    with pytest.raises(ZeroProbability):
        model.sequence_log_prob([3, 1])


def test_sampling_is_seeded(rng):
    corpus = [TokenGrid.from_array(rng.integers(0, 6, size=(5, 5))) for _ in range(4)]
    model = ngram_fit(corpus, NgramConfig(order=3, vocab_size=6))
    a = sample_grids(model, 3, 4, count=5, seed=11)
    b = sample_grids(model, 3, 4, count=5, seed=11)

    assert a == b
    assert all((g.height, g.width) == (3, 4) for g in a)
    assert all(g.codes.max() < 6 for g in a)
    with pytest.raises(UsageError):
        ngram_sample(model, 0, seed=0)


def test_model_file_keeps_counts(tmp_path, rng):
    corpus = [TokenGrid.from_array(rng.integers(0, 7, size=(4, 6))) for _ in range(3)]
    model = ngram_fit(corpus, NgramConfig(order=3, vocab_size=7, alpha=0.5))
    path = tmp_path / "m.ngrm"
    save_ngram(model, path)
    loaded = load_ngram(path)

    assert (loaded.order, loaded.vocab_size, loaded.alpha) == (3, 7, 0.5)
    assert loaded.counts == model.counts
    assert b"\xff\xff\xff\xff" in path.read_bytes()
    assert encode_ngram(loaded) == path.read_bytes()


def test_corrupt_model_files(tmp_path):
    model = ngram_fit([TokenGrid.from_array([[0, 1, 1]])], NgramConfig(order=2, vocab_size=2))
    raw = encode_ngram(model)

    (tmp_path / "magic.ngrm").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagic):
        load_ngram(tmp_path / "magic.ngrm")

    (tmp_path / "short.ngrm").write_bytes(raw[:-2])
    with pytest.raises(Truncated):
        load_ngram(tmp_path / "short.ngrm")

    header = struct.Struct("<4s3IdQ")
    _, version, order, vocab, alpha, n = header.unpack_from(raw)
    (tmp_path / "vocab.ngrm").write_bytes(header.pack(b"NGRM", version, order, 1, alpha, n) + raw[header.size:])
    with pytest.raises(FormatError):
        load_ngram(tmp_path / "vocab.ngrm")

    (tmp_path / "alpha.ngrm").write_bytes(header.pack(b"NGRM", version, order, vocab, 0.0, n) + raw[header.size:])
    with pytest.raises(FormatError):
        load_ngram(tmp_path / "alpha.ngrm")

    (tmp_path / "order.ngrm").write_bytes(header.pack(b"NGRM", version, 1 << 31, vocab, alpha, n) + raw[header.size:])
    with pytest.raises(DimensionOverflow) as caught:
        load_ngram(tmp_path / "order.ngrm")
    assert caught.value.offset == 8


def test_config_bounds():
    with pytest.raises(ValidationError):
        NgramConfig(vocab_size=4, alpha=0.0)
    with pytest.raises(ValidationError):
        NgramConfig(vocab_size=0)
    with pytest.raises(ValidationError):
        NgramConfig(vocab_size=4, order=65)


def test_alternating_corpus_bigram():
    model = ngram_fit([TokenGrid.from_array([[0, 1, 0, 1]])], NgramConfig(order=2, vocab_size=2, alpha=1.0))
    assert model.next_token_distribution([0])[1] == pytest.approx(0.75)
    assert np.exp(model.token_log_prob([0], 1)) == pytest.approx(0.75)


def test_unigram_samples_follow_the_fitted_frequencies():
    codes = np.repeat([0, 1, 2, 3], [10, 20, 30, 40]).reshape(10, 10)
    model = ngram_fit([TokenGrid.from_array(codes)], NgramConfig(order=1, vocab_size=4, alpha=1e-9))
    sample = ngram_sample(model, 100_000, seed=2024)
    freq = np.bincount(sample, minlength=4) / sample.size
    np.testing.assert_allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.01)


class _LeakyModel(UniformModel):
    def next_token_distribution(self, context):
        return np.full(self.vocab_size, 0.5 / self.vocab_size)


def test_sampling_rejects_a_distribution_that_does_not_sum_to_one():
    with pytest.raises(NotStochastic):
        ngram_sample(_LeakyModel(4), 3, seed=0)
