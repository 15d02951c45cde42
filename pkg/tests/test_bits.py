import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmprior.bits import (
    BitString,
    EmptyInputError,
    GammaCodeError,
    PrefixViolationError,
    TruncatedCodewordError,
    decode_program,
    elias_gamma_decode,
    elias_gamma_encode,
    encode_program,
    gamma_length,
    kraft_sum,
    read_program_file,
    unwrap_payload,
    wrap_payload,
    write_program_file,
)


class TestBitString:
    def test_from01_roundtrip(self):
        s = BitString.from01("00101")
        assert s.to01() == "00101"
        assert len(s) == 5

    def test_leading_zeros_preserved(self):
        assert BitString.from01("0001").length == 4
        assert BitString.from01("0001").value == 1

    def test_concat_is_additive(self):
        a = BitString.from01("010")
        b = BitString.from01("1101")
        assert (a + b).to01() == "0101101"

    @given(st.text(alphabet="01", max_size=64), st.text(alphabet="01", max_size=64))
    def test_concat_length_additive(self, s, t):
        assert len(BitString.from01(s) + BitString.from01(t)) == len(s) + len(t)

    def test_bytes_roundtrip_with_padding(self):
        s = BitString.from01("101100111")
        assert BitString.from_bytes(s.to_bytes(), len(s)) == s

    def test_bit_indexing(self):
        s = BitString.from01("0110")
        assert [s.bit(i) for i in range(4)] == [0, 1, 1, 0]
        with pytest.raises(IndexError):
            s.bit(4)


class TestGamma:
    def test_one_is_single_bit(self):
        assert elias_gamma_encode(1).to01() == "1"

    def test_five(self):
        assert elias_gamma_encode(5).to01() == "00101"

    def test_ten(self):
        assert elias_gamma_encode(10).to01() == "0001010"

    def test_zero_rejected(self):
        with pytest.raises(GammaCodeError):
            elias_gamma_encode(0)

    def test_decode_one(self):
        assert elias_gamma_decode(BitString.from01("1")) == (1, 1)

    def test_decode_with_suffix(self):
        assert elias_gamma_decode(BitString.from01("00101") + BitString.from01("111")) == (5, 5)

    def test_truncation_distinct_from_empty(self):
        with pytest.raises(TruncatedCodewordError):
            elias_gamma_decode(BitString.from01("00"))
        with pytest.raises(EmptyInputError):
            elias_gamma_decode(BitString.from01(""))

    @given(st.integers(min_value=1, max_value=10 ** 6))
    @settings(max_examples=300)
    def test_roundtrip(self, n):
        code = elias_gamma_encode(n)
        assert elias_gamma_decode(code) == (n, code.length)

    @given(st.integers(min_value=1, max_value=10 ** 6))
    def test_length_law(self, n):
        assert len(elias_gamma_encode(n)) == 2 * math.floor(math.log2(n)) + 1
        assert gamma_length(n) == 2 * math.floor(math.log2(n)) + 1

    def test_prefix_free_exhaustive(self):
        # sorting puts any prefix pair adjacent
        words = sorted(elias_gamma_encode(n).to01() for n in range(1, (1 << 14) + 1))
        assert not any(b.startswith(a) for a, b in zip(words, words[1:]))


class TestWrap:
    def test_single_bit_payload(self):
        assert wrap_payload(BitString.from01("0")).to01() == "10"

    def test_length_six(self):
        payload = BitString.from01("110010")
        assert len(wrap_payload(payload)) == 6 + 5

    def test_length_three_hundred(self):
        payload = BitString(0, 300)
        assert len(wrap_payload(payload)) == 300 + 17

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            wrap_payload(BitString.from01(""))

    def test_unwrap_roundtrip(self):
        payload = BitString.from01("0110011")
        wrapped = wrap_payload(payload) + BitString.from01("101")
        got, used = unwrap_payload(wrapped)
        assert got == payload
        assert used == len(wrap_payload(payload))


class TestProgram:
    def test_composed_example(self):
        enc = encode_program(2, 1, BitString.from01("01"))
        assert enc.serialize().to01() == "010" + "1" + "010" + "01"
        assert enc.total_length == 9

    def test_all_minimal(self):
        assert encode_program(1, 1, BitString.from01("0")).total_length == 4

    def test_roundtrip_random_triples(self):
        rng = random.Random(7)
        for _ in range(1000):
            n = rng.randint(1, 10 ** 6)
            s = rng.randint(1, 10 ** 4)
            width = rng.randint(1, 48)
            payload = BitString(rng.getrandbits(width) & ((1 << width) - 1), width)
            enc = encode_program(n, s, payload)
            assert decode_program(enc.serialize()) == (n, s, payload)

    def test_seed_zero_rejected(self):
        with pytest.raises(GammaCodeError):
            encode_program(1, 0, BitString.from01("0"))

    def test_file_roundtrip(self, tmp_path):
        payload = BitString.from01("1011001")
        path = tmp_path / "prog.aitp"
        write_program_file(path, 12, 3, payload)
        assert read_program_file(path) == (12, 3, payload)

    def test_file_bad_magic(self, tmp_path):
        path = tmp_path / "bad.aitp"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(ValueError):
            read_program_file(path)


class TestKraft:
    def test_complete_code(self):
        assert kraft_sum([BitString.from01(w) for w in ("0", "10", "11")]) == 1.0

    def test_partial_code(self):
        assert kraft_sum([BitString.from01(w) for w in ("1", "010", "011")]) == 0.75

    def test_violation_reports_pair(self):
        with pytest.raises(PrefixViolationError) as err:
            kraft_sum([BitString.from01("0"), BitString.from01("01")])
        assert err.value.shorter.to01() == "0"
        assert err.value.longer.to01() == "01"

    def test_program_serializations_prefix_free(self):
        rng = random.Random(3)
        words = []
        for _ in range(500):
            width = rng.randint(1, 24)
            payload = BitString(rng.getrandbits(width) & ((1 << width) - 1), width)
            words.append(
                encode_program(rng.randint(1, 999), rng.randint(1, 99), payload).serialize()
            )
        unique = {w.to01(): w for w in words}
        assert kraft_sum(unique.values()) <= 1.0
