"""Bit strings, Elias gamma coding, and prefix-free program containers.

Everything here is exact bit-level accounting: a BitString knows its length
in bits (no byte padding in the logical view), and all code lengths follow
the gamma length law len(gamma(n)) = 2*floor(log2 n) + 1.
"""

from dataclasses import dataclass
from fractions import Fraction

MAGIC_PROGRAM = b"AITP"
PROGRAM_VERSION = 1


class GammaCodeError(ValueError):
    """Base error for gamma coding problems."""


class EmptyInputError(GammaCodeError):
    """No bits available where a codeword was expected."""


class TruncatedCodewordError(GammaCodeError):
    """Input ran out in the middle of a codeword."""


class PrefixViolationError(ValueError):
    """A supposedly prefix-free set contains a prefix pair."""

    def __init__(self, shorter, longer):
        self.shorter = shorter
        self.longer = longer
        super().__init__(
            "codeword %s is a prefix of %s" % (shorter.to01(), longer.to01())
        )


@dataclass(frozen=True)
class BitString:
    """Immutable ordered bit sequence, most-significant bit first.

    Stored as an integer plus an exact bit count, so leading zero bits are
    preserved and concatenation is O(1) big-int arithmetic.
    """

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative bit length")
        if self.value < 0 or (self.length < self.value.bit_length()):
            raise ValueError("value does not fit in %d bits" % self.length)

    @classmethod
    def from01(cls, text):
        if text and set(text) - {"0", "1"}:
            raise ValueError("bit string must contain only 0 and 1")
        return cls(int(text, 2) if text else 0, len(text))

    @classmethod
    def from_bits(cls, bits):
        v = 0
        n = 0
        for b in bits:
            v = (v << 1) | (b & 1)
            n += 1
        return cls(v, n)

    @classmethod
    def from_bytes(cls, data, bit_length=None):
        n = 8 * len(data) if bit_length is None else bit_length
        if n > 8 * len(data):
            raise ValueError("bit_length exceeds available bytes")
        v = int.from_bytes(data, "big") >> (8 * len(data) - n)
        return cls(v, n)

    def __len__(self):
        return self.length

    def __add__(self, other):
        return BitString(
            (self.value << other.length) | other.value, self.length + other.length
        )

    def bit(self, i):
        if not 0 <= i < self.length:
            raise IndexError("bit index out of range")
        return (self.value >> (self.length - 1 - i)) & 1

    def slice(self, start, stop):
        if not 0 <= start <= stop <= self.length:
            raise IndexError("invalid slice bounds")
        width = stop - start
        return BitString((self.value >> (self.length - stop)) & ((1 << width) - 1), width)

    def to01(self):
        return format(self.value, "0%db" % self.length) if self.length else ""

    def to_bytes(self):
        """Zero-pad to a byte boundary; pair with the exact length for I/O."""
        nbytes = (self.length + 7) // 8
        return (self.value << (8 * nbytes - self.length)).to_bytes(nbytes, "big")

    def startswith(self, prefix):
        if prefix.length > self.length:
            return False
        return self.slice(0, prefix.length) == prefix


@dataclass(frozen=True)
class ProgramEncoding:
    """Prefix-coded program triple: iteration count, seed, wrapped payload."""

    iteration_code: BitString
    seed_code: BitString
    payload_code: BitString

    @property
    def total_length(self):
        return (
            self.iteration_code.length
            + self.seed_code.length
            + self.payload_code.length
        )

    def serialize(self):
        return self.iteration_code + self.seed_code + self.payload_code


def gamma_length(n):
    """Length in bits of the gamma codeword for n >= 1."""
    if n < 1:
        raise GammaCodeError("gamma code is undefined for n < 1")
    return 2 * (n.bit_length() - 1) + 1


def elias_gamma_encode(n):
    """Gamma codeword for n >= 1: floor(log2 n) zeros, then n in binary."""
    if n < 1:
        raise GammaCodeError("gamma code is undefined for n < 1")
    return BitString(n, gamma_length(n))


def elias_gamma_decode(bits, offset=0):
    """Decode one gamma codeword starting at ``offset``.

    Returns (n, consumed). Raises EmptyInputError when no bits remain and
    TruncatedCodewordError when a codeword starts but cannot finish.
    """
    if offset >= bits.length:
        raise EmptyInputError("no bits to decode")
    zeros = 0
    i = offset
    while i < bits.length and bits.bit(i) == 0:
        zeros += 1
        i += 1
    if i == bits.length:
        raise TruncatedCodewordError("ran out of bits scanning the zero prefix")
    end = i + zeros + 1
    if end > bits.length:
        raise TruncatedCodewordError(
            "codeword promises %d bits but only %d remain"
            % (2 * zeros + 1, bits.length - offset)
        )
    n = bits.slice(i, end).value
    return n, end - offset


def wrap_payload(payload):
    """Prefix-free lift of an arbitrary payload: gamma(len) then the payload."""
    if payload.length < 1:
        raise ValueError("cannot wrap an empty payload")
    return elias_gamma_encode(payload.length) + payload


def unwrap_payload(bits, offset=0):
    """Inverse of wrap_payload; returns (payload, consumed)."""
    n, used = elias_gamma_decode(bits, offset)
    end = offset + used + n
    if end > bits.length:
        raise TruncatedCodewordError("wrapped payload shorter than declared")
    return bits.slice(offset + used, end), used + n


def encode_program(n, s, payload):
    """Build the prefix-coded (iterations, seed, payload) program triple."""
    if s < 1:
        raise GammaCodeError("seed must be >= 1")
    return ProgramEncoding(
        iteration_code=elias_gamma_encode(n),
        seed_code=elias_gamma_encode(s),
        payload_code=wrap_payload(payload),
    )


def decode_program(bits):
    """Inverse of encode_program(...).serialize(); returns (n, s, payload)."""
    n, c1 = elias_gamma_decode(bits, 0)
    s, c2 = elias_gamma_decode(bits, c1)
    payload, c3 = unwrap_payload(bits, c1 + c2)
    if c1 + c2 + c3 != bits.length:
        raise TruncatedCodewordError("trailing bits after program encoding")
    return n, s, payload


def check_prefix_free(codewords):
    """Raise PrefixViolationError naming the first offending pair, if any.

    Sorting the 0/1 renderings puts any prefix pair adjacent, so one linear
    scan suffices.
    """
    rendered = sorted((c.to01(), c) for c in codewords)
    for (a_txt, a), (b_txt, b) in zip(rendered, rendered[1:]):
        if b_txt.startswith(a_txt):
            raise PrefixViolationError(a, b)


def kraft_sum(codewords):
    """Exact Kraft sum of a prefix-free codeword set; <= 1 by Kraft."""
    codewords = list(codewords)
    check_prefix_free(codewords)
    total = sum(Fraction(1, 2 ** c.length) for c in codewords)
    return float(total)


def write_program_file(path, n, s, payload):
    """Serialize a program to disk: magic, version, bit count, padded stream."""
    stream = encode_program(n, s, payload).serialize()
    with open(path, "wb") as fh:
        fh.write(MAGIC_PROGRAM)
        fh.write(bytes([PROGRAM_VERSION]))
        fh.write(stream.length.to_bytes(8, "big"))
        fh.write(stream.to_bytes())


def read_program_file(path):
    """Inverse of write_program_file; returns (n, s, payload)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC_PROGRAM:
        raise ValueError("not a program file (bad magic)")
    if data[4] != PROGRAM_VERSION:
        raise ValueError("unsupported program file version %d" % data[4])
    nbits = int.from_bytes(data[5:13], "big")
    bits = BitString.from_bytes(data[13:], nbits)
    return decode_program(bits)
