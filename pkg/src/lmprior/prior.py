"""Computable prior over token sequences and its next-symbol predictions.

The prior sums 2^-(program length) over all seeds, where a program is the
prefix-coded triple (iteration count, seed, arithmetically coded payload).
Two length accountings ship side by side:

- "exact": integer Elias gamma codeword lengths, matching bits on disk;
- "paper-approx": the smooth 2*log2 forms, whose seed sum is pi^2/6 and
  which produce the t^2 / (4 (t+1)^2) next-symbol ratio.

All arithmetic lives in the log2 domain; raw ratios are exponent
differences, so nothing underflows for realistic code lengths.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bits import gamma_length
from .codec import analytic_code_length
from .models import TokenSequence, assert_distribution

MODE_EXACT = "exact"
MODE_PAPER = "paper-approx"
_MODES = (MODE_EXACT, MODE_PAPER)

#: Max enumeration size for brute-force semi-measure checks.
ENUMERATION_LIMIT = 1 << 20


@dataclass(frozen=True)
class LogPrior:
    """log2 of the prior mass of a sequence, with its length components."""

    value: float
    mode: str
    seed_sum_log: float
    iteration_len: float
    payload_len: float


@dataclass(frozen=True)
class ConditionalPrediction:
    """Per-symbol next-step prediction derived from prior ratios."""

    raw: np.ndarray
    normalized: np.ndarray
    model_probability: np.ndarray
    ratio_check: np.ndarray


def _check_mode(mode):
    if mode not in _MODES:
        raise ValueError("mode must be one of %s" % (_MODES,))


def seed_sum(mode):
    """Total weight the seed component contributes across all seeds.

    Exact gamma lengths: 2^k seeds share codeword length 2k+1, so each
    dyadic block contributes 2^-(k+1) and the geometric sum is exactly 1.
    The smooth approximation sum_s 1/s^2 gives pi^2/6 instead.
    """
    _check_mode(mode)
    if mode == MODE_PAPER:
        return math.pi ** 2 / 6.0
    return 1.0


def partial_exact_seed_sum(max_seed):
    """Truncated exact-mode seed sum, for tail-bound checks."""
    return sum(2.0 ** -gamma_length(s) for s in range(1, max_seed + 1))


def program_length(x, s, model):
    """Analytic bit length of the program producing x with seed s."""
    if s < 1:
        raise ValueError("seed must be >= 1")
    if len(x) == 0:
        raise ValueError("sequence must be nonempty")
    length = analytic_code_length(model, x)
    return (
        gamma_length(len(x))
        + gamma_length(s)
        + length
        + gamma_length(math.ceil(length))
    )


def _components(t, payload, mode):
    """(seed_sum_log, iteration_len, payload_len) for the given mode."""
    if mode == MODE_PAPER:
        return (
            math.log2(math.pi ** 2 / 6.0),
            2.0 * math.log2(t),
            payload + 2.0 * math.log2(payload),
        )
    return (
        0.0,
        float(gamma_length(t)),
        payload + float(gamma_length(math.ceil(payload))),
    )


def log_prior(x, model, mode=MODE_EXACT):
    """log2 of the prior mass of x; the seed sum factors out of the lengths."""
    _check_mode(mode)
    if len(x) == 0:
        raise ValueError("sequence must be nonempty")
    payload = analytic_code_length(model, x)
    seed_log, iter_len, payload_len = _components(len(x), payload, mode)
    return LogPrior(
        value=seed_log - iter_len - payload_len,
        mode=mode,
        seed_sum_log=seed_log,
        iteration_len=iter_len,
        payload_len=payload_len,
    )


def conditional_prior(x, model, mode=MODE_PAPER):
    """Next-symbol prediction as prior ratios mass(x + a) / mass(x).

    The per-symbol payload increment is computed incrementally (one model
    query), so the cost is O(t) once rather than O(t) per symbol.
    """
    _check_mode(mode)
    t = len(x)
    if t < 1:
        raise ValueError("context must be nonempty")
    payload = analytic_code_length(model, x)
    probs = assert_distribution(model.next_distribution(x))
    base = _components(t, payload, mode)
    base_value = base[0] - base[1] - base[2]
    raw = np.empty(probs.size)
    for a in range(probs.size):
        extended = payload + 2.0 - float(np.log2(probs[a]))
        seed_log, iter_len, payload_len = _components(t + 1, extended, mode)
        raw[a] = 2.0 ** ((seed_log - iter_len - payload_len) - base_value)
    # normalize relative to symbol 0 so the common scale (which differs
    # between modes) drops out before any rounding
    rel = raw / raw[0]
    return ConditionalPrediction(
        raw=raw,
        normalized=rel / rel.sum(),
        model_probability=probs,
        ratio_check=raw / probs,
    )


def ratio_tolerance(t):
    """Acceptable ratio deviation at context length t."""
    return 6.0 / t + 0.01


def verify_next_symbol_ratio(model, sequence_source, t_grid, samples_per_t=5):
    """Check the t^2 / (4 (t+1)^2) link between prior ratios and the model.

    ``sequence_source`` maps (t, index) to a TokenSequence of length t.
    Returns a JSON-ready report with per-t max/mean deviation of
    ratio_check * 4 (t+1)^2 / t^2 from 1, flagged against the tolerance.
    """
    if not t_grid:
        raise ValueError("t_grid must be nonempty")
    rows = []
    for t in t_grid:
        deviations = []
        for i in range(samples_per_t):
            x = sequence_source(t, i)
            pred = conditional_prior(x, model, mode=MODE_PAPER)
            scaled = pred.ratio_check * (4.0 * (t + 1) ** 2 / t ** 2)
            deviations.append(float(np.max(np.abs(scaled - 1.0))))
        tol = ratio_tolerance(t)
        rows.append(
            {
                "t": int(t),
                "max_deviation": max(deviations),
                "mean_deviation": sum(deviations) / len(deviations),
                "tolerance": tol,
                "pass": max(deviations) <= tol,
            }
        )
    monotone = all(
        a["max_deviation"] >= b["max_deviation"] for a, b in zip(rows, rows[1:])
    )
    return {
        "grid": rows,
        "monotone_decreasing": monotone,
        "pass": monotone and all(r["pass"] for r in rows),
    }


def uniform_sequence_source(alphabet, seed=0):
    """Deterministic sampler of uniform random sequences for ratio checks."""

    def source(t, index):
        rng = np.random.Generator(np.random.PCG64([seed, t, index]))
        return TokenSequence(
            alphabet, tuple(int(v) for v in rng.integers(0, alphabet.size, t))
        )

    return source


def semimeasure_mass(length, model):
    """Brute-force total prior mass over all sequences of a given length.

    Enumerates alphabet_size ** length sequences in exact mode; the result
    must be <= 1 (prior programs form a prefix-free family).
    """
    size = model.alphabet.size
    if size ** length > ENUMERATION_LIMIT:
        raise ValueError("enumeration of %d^%d sequences is too large" % (size, length))
    total = 0.0
    for toks in itertools.product(range(size), repeat=length):
        x = TokenSequence(model.alphabet, toks)
        total += 2.0 ** log_prior(x, model, mode=MODE_EXACT).value
    if total > 1.0 + 1e-12:
        raise AssertionError("semi-measure mass %.6f exceeds 1" % total)
    return total
