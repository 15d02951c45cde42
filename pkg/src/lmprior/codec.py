"""Model-driven lossless arithmetic coding of token sequences.

The coder is a 32-bit-state binary arithmetic coder with underflow-bit
counting. Both sides quantize each model distribution to 24-bit cumulative
frequencies with an identical deterministic rule, so encoder and decoder
always work from the same integer tables and round-trips are bit-exact.
"""

import hashlib
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .bits import BitString
from .models import TokenSequence

FREQ_BITS = 24
FREQ_TOTAL = 1 << FREQ_BITS

_STATE_BITS = 32
_FULL = (1 << _STATE_BITS) - 1
_HALF = 1 << (_STATE_BITS - 1)
_QUARTER = 1 << (_STATE_BITS - 2)

MAGIC_CONTAINER = b"AITC"
CONTAINER_VERSION = 1


class ModelHashMismatchError(ValueError):
    """Payload was produced by a different model than the one supplied."""


class TruncatedStreamError(ValueError):
    """Compressed bitstream ended before all tokens were decoded."""


@dataclass(frozen=True)
class CompressedPayload:
    """Arithmetic code bits plus the bookkeeping needed to invert them."""

    bits: BitString
    token_count: int
    model_id: str


def quantize_distribution(probs):
    """Deterministic 24-bit cumulative frequency table for a distribution.

    Every symbol gets frequency >= 1; any rounding remainder goes to the
    most probable symbol (ties to the smallest index).
    """
    p = np.asarray(probs, dtype=np.float64)
    freqs = np.floor(p * (FREQ_TOTAL - p.size)).astype(np.int64) + 1
    freqs[int(np.argmax(p))] += FREQ_TOTAL - int(freqs.sum())
    cum = [0]
    for f in freqs.tolist():
        cum.append(cum[-1] + f)
    return freqs.tolist(), cum


class _TableCache:
    """Quantized tables keyed by the identity of the model's cached arrays.

    Models cache one probability array per context, so identity is stable;
    the cache keeps a reference to pin each array against reuse of its id.
    """

    def __init__(self):
        self._tables = {}

    def get(self, probs):
        key = id(probs)
        entry = self._tables.get(key)
        if entry is None or entry[0] is not probs:
            entry = (probs,) + quantize_distribution(probs)
            self._tables[key] = entry
        return entry[1], entry[2]


class _ArithmeticEncoder:
    def __init__(self):
        self.low = 0
        self.high = _FULL
        self.pending = 0
        self.out = []

    def _emit(self, bit):
        self.out.append(bit)
        if self.pending:
            self.out.extend([bit ^ 1] * self.pending)
            self.pending = 0

    def encode(self, cum, symbol):
        span = self.high - self.low + 1
        total = cum[-1]
        self.high = self.low + span * cum[symbol + 1] // total - 1
        self.low = self.low + span * cum[symbol] // total
        while True:
            if self.high < _HALF:
                self._emit(0)
            elif self.low >= _HALF:
                self._emit(1)
                self.low -= _HALF
                self.high -= _HALF
            elif self.low >= _QUARTER and self.high < 3 * _QUARTER:
                self.pending += 1
                self.low -= _QUARTER
                self.high -= _QUARTER
            else:
                break
            self.low <<= 1
            self.high = (self.high << 1) | 1

    def finish(self):
        # one disambiguating bit; the decoder zero-fills past the end
        self.pending += 1
        self._emit(0 if self.low < _QUARTER else 1)
        return BitString.from_bits(self.out)


class _ArithmeticDecoder:
    def __init__(self, bits):
        self.bits = bits
        self.pos = 0
        self.low = 0
        self.high = _FULL
        self.code = 0
        for _ in range(_STATE_BITS):
            self.code = (self.code << 1) | self._read_bit()

    def _read_bit(self):
        if self.pos < self.bits.length:
            b = self.bits.bit(self.pos)
            self.pos += 1
            return b
        self.pos += 1
        return 0

    def decode(self, cum):
        span = self.high - self.low + 1
        total = cum[-1]
        offset = self.code - self.low
        value = ((offset + 1) * total - 1) // span
        symbol = bisect_right(cum, value) - 1
        self.high = self.low + span * cum[symbol + 1] // total - 1
        self.low = self.low + span * cum[symbol] // total
        while True:
            if self.high < _HALF:
                pass
            elif self.low >= _HALF:
                self.low -= _HALF
                self.high -= _HALF
                self.code -= _HALF
            elif self.low >= _QUARTER and self.high < 3 * _QUARTER:
                self.low -= _QUARTER
                self.high -= _QUARTER
                self.code -= _QUARTER
            else:
                break
            self.low <<= 1
            self.high = (self.high << 1) | 1
            self.code = (self.code << 1) | self._read_bit()
        return symbol


def compress(model, x):
    """Arithmetic-code ``x`` under ``model``; exact inverse is decompress."""
    if len(x) == 0:
        raise ValueError("cannot compress an empty sequence")
    model.next_distribution(x)  # alphabet check
    k = model._context_order()
    tables = _TableCache()
    enc = _ArithmeticEncoder()
    toks = x.tokens
    for i, sym in enumerate(toks):
        tail = toks[max(0, i - k):i] if k else ()
        _, cum = tables.get(model._probs(tail))
        enc.encode(cum, sym)
    return CompressedPayload(
        bits=enc.finish(), token_count=len(x), model_id=model.content_hash()
    )


def decompress(model, payload):
    """Run ``payload.token_count`` decoding iterations under ``model``."""
    if payload.model_id != model.content_hash():
        raise ModelHashMismatchError(
            "payload was coded with model %s, got %s"
            % (payload.model_id[:12], model.content_hash()[:12])
        )
    if payload.token_count == 0:
        return TokenSequence(model.alphabet, ())
    k = model._context_order()
    tables = _TableCache()
    dec = _ArithmeticDecoder(payload.bits)
    toks = []
    for _ in range(payload.token_count):
        tail = tuple(toks[max(0, len(toks) - k):]) if k else ()
        _, cum = tables.get(model._probs(tail))
        toks.append(dec.decode(cum))
    if dec.pos > payload.bits.length + _STATE_BITS:
        raise TruncatedStreamError("bitstream exhausted before all tokens decoded")
    return TokenSequence(model.alphabet, tuple(toks))


def quantized_info_content(model, x):
    """sum_i -log2 of the quantized probability of each coded symbol."""
    k = model._context_order()
    tables = _TableCache()
    total = 0.0
    toks = x.tokens
    for i, sym in enumerate(toks):
        tail = toks[max(0, i - k):i] if k else ()
        freqs, _ = tables.get(model._probs(tail))
        total -= float(np.log2(freqs[sym] / FREQ_TOTAL))
    return total


def analytic_code_length(model, x):
    """Idealized payload length 2*t + sum_i -log2 P(x_i | x_{1:i-1}).

    This is the quantity all prior/ratio computations use; the measured
    bit count of compress() is reported alongside, never substituted.
    """
    return 2.0 * len(x) + model.sequence_log_loss(x)


def table_hash(model, x):
    """Digest of the quantized tables a coding pass of ``x`` would use.

    Lets tests confirm encoder and decoder derive identical integer tables.
    """
    k = model._context_order()
    tables = _TableCache()
    h = hashlib.sha256()
    toks = x.tokens
    for i in range(len(toks)):
        tail = toks[max(0, i - k):i] if k else ()
        freqs, _ = tables.get(model._probs(tail))
        h.update(repr(freqs).encode())
    return h.hexdigest()


def write_container(path, payload):
    """Standalone .aitc container: magic, version, model id, counts, bits."""
    model_id = bytes.fromhex(payload.model_id)
    with open(path, "wb") as fh:
        fh.write(MAGIC_CONTAINER)
        fh.write(bytes([CONTAINER_VERSION]))
        fh.write(bytes([len(model_id)]))
        fh.write(model_id)
        fh.write(payload.token_count.to_bytes(8, "big"))
        fh.write(payload.bits.length.to_bytes(8, "big"))
        fh.write(payload.bits.to_bytes())


def read_container(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC_CONTAINER:
        raise ValueError("not a compressed container (bad magic)")
    if data[4] != CONTAINER_VERSION:
        raise ValueError("unsupported container version %d" % data[4])
    id_len = data[5]
    model_id = data[6:6 + id_len].hex()
    pos = 6 + id_len
    token_count = int.from_bytes(data[pos:pos + 8], "big")
    nbits = int.from_bytes(data[pos + 8:pos + 16], "big")
    bits = BitString.from_bytes(data[pos + 16:], nbits)
    return CompressedPayload(bits=bits, token_count=token_count, model_id=model_id)
