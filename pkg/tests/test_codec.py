import numpy as np
import pytest

from lmprior.codec import (
    FREQ_TOTAL,
    CompressedPayload,
    ModelHashMismatchError,
    TruncatedStreamError,
    analytic_code_length,
    compress,
    decompress,
    quantize_distribution,
    quantized_info_content,
    read_container,
    table_hash,
    write_container,
)
from lmprior.bits import BitString
from lmprior.models import Alphabet, NGramModel, TokenSequence, UniformModel, train_ngram

AB = Alphabet(("a", "b"))


def seq(text, alphabet=AB):
    return TokenSequence.from_text(alphabet, text)


def random_sequence(alphabet, length, rng):
    return TokenSequence(alphabet, tuple(int(v) for v in rng.integers(0, alphabet.size, length)))


class TestQuantization:
    def test_total_and_minimum(self):
        freqs, cum = quantize_distribution([0.5, 0.5])
        assert sum(freqs) == FREQ_TOTAL
        assert cum[-1] == FREQ_TOTAL
        assert min(freqs) >= 1

    def test_tiny_probability_gets_slot(self):
        freqs, _ = quantize_distribution([1.0 - 2 ** -20, 2 ** -20])
        assert freqs[1] >= 1

    def test_deterministic(self):
        p = np.array([0.2, 0.3, 0.5])
        assert quantize_distribution(p) == quantize_distribution(p.copy())


class TestRoundTrip:
    def test_uniform_binary_length(self):
        u = UniformModel(AB)
        rng = np.random.default_rng(0)
        x = random_sequence(AB, 64, rng)
        payload = compress(u, x)
        assert 64 <= payload.bits.length <= 128
        assert decompress(u, payload) == x

    def test_near_deterministic_sequence_is_tiny(self):
        counts = [{(): np.array([1 << 30, 0], dtype=np.int64)}]
        model = NGramModel(AB, 0, 0.5, counts)
        x = seq("a" * 1000)
        payload = compress(model, x)
        assert payload.bits.length <= 20
        assert decompress(model, payload) == x

    def test_many_random_pairs(self):
        rng = np.random.default_rng(42)
        u = UniformModel(AB)
        ng = train_ngram([random_sequence(AB, 400, rng)], order=1)
        for i in range(60):
            model = (u, ng)[i % 2]
            x = random_sequence(AB, int(rng.integers(1, 300)), rng)
            payload = compress(model, x)
            assert decompress(model, payload) == x
            slack = payload.bits.length - quantized_info_content(model, x)
            assert slack <= 64

    def test_high_order_model_short_prefix_contexts(self):
        # order exceeds the decoded length early on; the decoder must use
        # the whole short prefix as context, exactly like the encoder
        text = "abbaabbaabba" * 40
        corpus = seq(text)
        for order in (3, 4, 5):
            model = train_ngram([corpus], order=order)
            for t in (1, 2, 3, 6, 50):
                x = seq(text[:t])
                assert decompress(model, compress(model, x)) == x

    def test_token_count_recorded(self):
        u = UniformModel(AB)
        assert compress(u, seq("abba")).token_count == 4

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            compress(UniformModel(AB), seq(""))


class TestDecompressErrors:
    def test_wrong_model_hash(self):
        u = UniformModel(AB)
        payload = compress(u, seq("abab"))
        other = train_ngram([seq("ab")], order=1)
        with pytest.raises(ModelHashMismatchError):
            decompress(other, payload)

    def test_zero_tokens_gives_empty(self):
        u = UniformModel(AB)
        payload = CompressedPayload(
            bits=BitString.from01(""), token_count=0, model_id=u.content_hash()
        )
        assert decompress(u, payload) == seq("")

    def test_truncated_stream(self):
        u = UniformModel(AB)
        rng = np.random.default_rng(1)
        x = random_sequence(AB, 600, rng)
        payload = compress(u, x)
        cut = CompressedPayload(
            bits=payload.bits.slice(0, payload.bits.length // 4),
            token_count=payload.token_count,
            model_id=payload.model_id,
        )
        with pytest.raises(TruncatedStreamError):
            decompress(u, cut)


class TestAnalyticLength:
    def test_uniform_binary(self):
        assert analytic_code_length(UniformModel(AB), seq("abab")) == pytest.approx(12.0)

    def test_uniform_four_symbols(self):
        four = Alphabet(("a", "b", "c", "d"))
        x = TokenSequence(four, tuple(range(4)) + tuple(range(4)) + (0, 1))
        assert analytic_code_length(UniformModel(four), x) == pytest.approx(40.0)

    def test_deterministic_limit(self):
        counts = [{(): np.array([1 << 40, 0], dtype=np.int64)}]
        model = NGramModel(AB, 0, 0.5, counts)
        t = 500
        length = analytic_code_length(model, seq("a" * t))
        assert length == pytest.approx(2 * t - t * np.log2(1 - 2 ** -20), abs=1e-6)

    def test_monotone_under_training_exposure(self):
        text = seq("abbabaabba")
        lengths = [
            analytic_code_length(train_ngram([text] * reps, order=1), text)
            for reps in (1, 2, 4, 8, 16)
        ]
        assert all(a >= b for a, b in zip(lengths, lengths[1:]))


class TestTables:
    def test_encoder_decoder_tables_match(self):
        model = train_ngram([seq("abbabaab")], order=1)
        x = seq("ababb")
        assert table_hash(model, x) == table_hash(model, x)
        fresh = train_ngram([seq("abbabaab")], order=1)
        assert table_hash(fresh, x) == table_hash(model, x)


class TestContainer:
    def test_file_roundtrip(self, tmp_path):
        u = UniformModel(AB)
        payload = compress(u, seq("abbaabba"))
        path = tmp_path / "x.aitc"
        write_container(path, payload)
        loaded = read_container(path)
        assert loaded == payload
        assert decompress(u, loaded) == seq("abbaabba")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.aitc"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(ValueError):
            read_container(path)
