"""Next-token probability models: uniform baseline and trainable n-grams.

Every model maps a context (token sequence) to a floored probability vector
over a fixed alphabet. Flooring guarantees the codec never sees a
zero-probability ground-truth symbol, so lossless coding is always possible.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 2.0 ** -20
SUM_TOLERANCE = 2.0 ** -30

MAGIC_MODEL = b"AITM"
MODEL_VERSION = 1


class AlphabetMismatchError(ValueError):
    """Sequence and model disagree about the alphabet."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite symbol set with a bijective index mapping."""

    symbols: tuple

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ValueError("alphabet needs at least 2 symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    @property
    def size(self):
        return len(self.symbols)

    def index(self, symbol):
        return self.symbols.index(symbol)

    @classmethod
    def of_bits(cls):
        return cls(("0", "1"))

    @classmethod
    def of_bytes(cls):
        return cls(tuple(chr(i) for i in range(256)))


@dataclass(frozen=True)
class TokenSequence:
    """Immutable indexed token sequence over a fixed alphabet."""

    alphabet: Alphabet
    tokens: tuple

    def __post_init__(self):
        size = self.alphabet.size
        for t in self.tokens:
            if not 0 <= t < size:
                raise ValueError("token index %r out of range" % (t,))

    @classmethod
    def from_symbols(cls, alphabet, symbols):
        lookup = {s: i for i, s in enumerate(alphabet.symbols)}
        try:
            return cls(alphabet, tuple(lookup[s] for s in symbols))
        except KeyError as exc:
            raise ValueError("symbol %r not in alphabet" % (exc.args[0],)) from None

    @classmethod
    def from_text(cls, alphabet, text):
        return cls.from_symbols(alphabet, list(text))

    def __len__(self):
        return len(self.tokens)

    def append(self, token):
        return TokenSequence(self.alphabet, self.tokens + (token,))

    def extend(self, tokens):
        return TokenSequence(self.alphabet, self.tokens + tuple(tokens))

    def to_text(self):
        return "".join(self.alphabet.symbols[t] for t in self.tokens)


def floor_probs(probs, floor=PROB_FLOOR):
    """Clamp entries up to ``floor`` and renormalize the rest proportionally.

    Floored entries are frozen so repeated rescaling cannot push them back
    under the floor; terminates because the frozen set only grows.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("probability vector must be 1-D")
    if np.any(p < 0):
        raise ValueError("negative probability")
    if p.size * floor >= 1.0:
        raise ValueError("alphabet too large for the probability floor")
    p = p / p.sum()
    fixed = np.zeros(p.size, dtype=bool)
    while True:
        low = (~fixed) & (p < floor)
        if not low.any():
            break
        fixed |= low
        p[fixed] = floor
        free = ~fixed
        remaining = 1.0 - floor * fixed.sum()
        p[free] = p[free] * (remaining / p[free].sum())
    return p


def assert_distribution(p, floor=PROB_FLOOR):
    p = np.asarray(p)
    if abs(float(p.sum()) - 1.0) > SUM_TOLERANCE:
        raise ValueError("probabilities do not sum to 1")
    if np.any(p < floor * (1.0 - 1e-12)):
        raise ValueError("probability below the floor")
    return p


class Model:
    """Common behavior for deterministic next-token models."""

    alphabet = None

    def _probs(self, context_tail):
        raise NotImplementedError

    def _context_order(self):
        """How many trailing tokens of context the model conditions on."""
        raise NotImplementedError

    def next_distribution(self, context):
        """Floored probability vector for the next token after ``context``."""
        if context.alphabet != self.alphabet:
            raise AlphabetMismatchError("context alphabet differs from model")
        k = self._context_order()
        tail = context.tokens[max(0, len(context.tokens) - k):] if k else ()
        return self._probs(tail)

    def sequence_log_loss(self, x):
        """-sum_i log2 P(x_i | x_{1:i-1}), the ideal bit cost of x."""
        if len(x) == 0:
            raise ValueError("cannot score an empty sequence")
        if x.alphabet != self.alphabet:
            raise AlphabetMismatchError("sequence alphabet differs from model")
        k = self._context_order()
        total = 0.0
        toks = x.tokens
        for i, sym in enumerate(toks):
            tail = toks[max(0, i - k):i] if k else ()
            total -= float(np.log2(self._probs(tail)[sym]))
        return total

    def generate(self, prompt, seed, max_len):
        """Deterministically extend ``prompt`` by up to ``max_len`` tokens.

        Sampling is driven by a PCG64 generator seeded with ``seed``, so
        (model, prompt, seed) fully determine the output.
        """
        if seed < 1:
            raise ValueError("seed must be >= 1")
        if prompt.alphabet != self.alphabet:
            raise AlphabetMismatchError("prompt alphabet differs from model")
        rng = np.random.Generator(np.random.PCG64(seed))
        k = self._context_order()
        toks = list(prompt.tokens)
        for _ in range(max_len):
            tail = tuple(toks[max(0, len(toks) - k):]) if k else ()
            cum = np.cumsum(self._probs(tail))
            toks.append(int(np.searchsorted(cum, rng.random(), side="right")))
        return TokenSequence(self.alphabet, tuple(toks))

    def content_hash(self):
        """Stable hex digest identifying the model's exact parameters."""
        return hashlib.sha256(self._canonical_bytes()).hexdigest()

    def _canonical_bytes(self):
        raise NotImplementedError


class UniformModel(Model):
    """Maximum-entropy baseline: every symbol equally likely, any context."""

    def __init__(self, alphabet):
        self.alphabet = alphabet
        self._dist = floor_probs(np.full(alphabet.size, 1.0 / alphabet.size))

    def _context_order(self):
        return 0

    def _probs(self, context_tail):
        return self._dist

    def _canonical_bytes(self):
        return json.dumps(
            {"kind": "uniform", "symbols": list(self.alphabet.symbols)},
            sort_keys=True,
        ).encode("utf-8")


class NGramModel(Model):
    """Order-k count model with additive smoothing and order-0 backoff.

    Contexts shorter than k (sequence start) use the longest available
    suffix; contexts never seen in training back off to the order-0 counts.
    The default smoothing alpha=0.5 is the Krichevsky-Trofimov choice.
    """

    def __init__(self, alphabet, order, alpha, counts):
        if order < 0:
            raise ValueError("order must be >= 0")
        if alpha <= 0:
            raise ValueError("smoothing constant must be > 0")
        self.alphabet = alphabet
        self.order = order
        self.alpha = float(alpha)
        # counts[k] maps a length-k context tuple to a count vector
        self.counts = counts
        self._cache = {}

    @classmethod
    def train(cls, corpus, order, alpha=0.5):
        """Exact (context, symbol) occurrence counts over all sequences."""
        if not corpus:
            raise ValueError("corpus must be nonempty")
        alphabet = corpus[0].alphabet
        for seq in corpus:
            if seq.alphabet != alphabet:
                raise AlphabetMismatchError("mixed alphabets in corpus")
        counts = [dict() for _ in range(order + 1)]
        size = alphabet.size
        for seq in corpus:
            toks = seq.tokens
            for i, sym in enumerate(toks):
                for k in range(min(order, i) + 1):
                    ctx = toks[i - k:i]
                    vec = counts[k].get(ctx)
                    if vec is None:
                        vec = np.zeros(size, dtype=np.int64)
                        counts[k][ctx] = vec
                    vec[sym] += 1
        return cls(alphabet, order, alpha, counts)

    def _context_order(self):
        return self.order

    def _probs(self, context_tail):
        cached = self._cache.get(context_tail)
        if cached is not None:
            return cached
        k = len(context_tail)
        vec = self.counts[k].get(tuple(context_tail)) if k <= self.order else None
        if vec is None:
            # unseen context: order-0 backoff
            vec = self.counts[0].get((), np.zeros(self.alphabet.size, dtype=np.int64))
        raw = (vec + self.alpha) / (vec.sum() + self.alpha * self.alphabet.size)
        probs = floor_probs(raw)
        self._cache[tuple(context_tail)] = probs
        return probs

    def _canonical_bytes(self):
        body = {
            "kind": "ngram",
            "symbols": list(self.alphabet.symbols),
            "order": self.order,
            "alpha": self.alpha,
            "counts": [
                {",".join(map(str, ctx)): vec.tolist() for ctx, vec in sorted(table.items())}
                for table in self.counts
            ],
        }
        return json.dumps(body, sort_keys=True).encode("utf-8")

    def save(self, path):
        """Versioned binary container; loading reproduces exact distributions."""
        body = self._canonical_bytes()
        with open(path, "wb") as fh:
            fh.write(MAGIC_MODEL)
            fh.write(bytes([MODEL_VERSION]))
            fh.write(len(body).to_bytes(8, "big"))
            fh.write(body)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != MAGIC_MODEL:
            raise ValueError("not a model file (bad magic)")
        if data[4] != MODEL_VERSION:
            raise ValueError("unsupported model file version %d" % data[4])
        size = int.from_bytes(data[5:13], "big")
        body = json.loads(data[13:13 + size].decode("utf-8"))
        if body.get("kind") != "ngram":
            raise ValueError("unsupported model kind %r" % body.get("kind"))
        alphabet = Alphabet(tuple(body["symbols"]))
        counts = []
        for table in body["counts"]:
            parsed = {}
            for key, vec in table.items():
                ctx = tuple(int(v) for v in key.split(",")) if key else ()
                parsed[ctx] = np.asarray(vec, dtype=np.int64)
            counts.append(parsed)
        return cls(alphabet, int(body["order"]), float(body["alpha"]), counts)


def train_ngram(corpus, order, alpha=0.5):
    """Module-level convenience wrapper around NGramModel.train."""
    return NGramModel.train(corpus, order, alpha)
