"""Monte Carlo lab for cumulative squared prediction error of online predictors.

Sequences are drawn from simple computable sources (Bernoulli, Markov); an
online predictor updates its counts after every observed symbol and is
scored against the source's true next-symbol probability. The tracked
quantity is sum_{t<=T} (predicted(0|x_{1:t}) - true(0|x_{1:t}))^2,
averaged over independent trials.

The idealized predictor in the underlying theory obeys a constant bound;
the computable count-based predictors used here grow logarithmically in T
instead, and reports label that regime explicitly.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_T_GRID = (10, 100, 1000, 10000)
DEFAULT_TRIALS = 200


@dataclass(frozen=True)
class BernoulliSource:
    """Memoryless binary source; symbol 0 has probability p."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")

    @property
    def size(self):
        return 2

    def describe(self):
        return {"kind": "bernoulli", "p": self.p}


@dataclass(frozen=True)
class MarkovSource:
    """Finite-state chain given by a transition matrix and initial law."""

    transition: tuple
    initial: tuple

    def __post_init__(self):
        mat = np.asarray(self.transition, dtype=np.float64)
        init = np.asarray(self.initial, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("transition matrix must be square")
        if init.shape != (mat.shape[0],):
            raise ValueError("initial law size must match the state count")
        if np.any(mat < 0) or np.any(init < 0):
            raise ValueError("probabilities must be nonnegative")
        if not np.allclose(mat.sum(axis=1), 1.0) or not np.isclose(init.sum(), 1.0):
            raise ValueError("rows and the initial law must sum to 1")

    @property
    def size(self):
        return len(self.initial)

    def describe(self):
        return {
            "kind": "markov",
            "transition": [list(r) for r in self.transition],
            "initial": list(self.initial),
        }


def _trial_rng(seed, trial):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


def sample_sequence(source, length, seed):
    """Deterministic sample of ``length`` symbols from the source."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if seed < 1:
        raise ValueError("seed must be >= 1")
    rng = _trial_rng(seed, 0)
    return _sample_with_rng(source, length, rng)


def _sample_with_rng(source, length, rng):
    if isinstance(source, BernoulliSource):
        return np.where(rng.random(length) < source.p, 0, 1).astype(np.int64)
    mat = np.asarray(source.transition, dtype=np.float64)
    cum = np.cumsum(mat, axis=1)
    init_cum = np.cumsum(np.asarray(source.initial, dtype=np.float64))
    u = rng.random(length)
    out = np.empty(length, dtype=np.int64)
    state = int(np.searchsorted(init_cum, u[0], side="right"))
    out[0] = state
    for i in range(1, length):
        state = int(np.searchsorted(cum[state], u[i], side="right"))
        out[i] = state
    return out


def true_conditional(source, context):
    """Exact source probability that the next symbol is 0 given ``context``."""
    if isinstance(source, BernoulliSource):
        return source.p
    if len(context) == 0:
        return float(source.initial[0])
    return float(source.transition[int(context[-1])][0])


class CountPredictor:
    """Online add-alpha frequency predictor; alpha=0.5 is the KT estimator."""

    def __init__(self, size, alpha=0.5):
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        self.alpha = alpha
        self.counts = [0] * size
        self.total = 0

    def observe(self, symbol):
        self.counts[symbol] += 1
        self.total += 1

    def prob_zero(self, last_symbol=None):
        return (self.counts[0] + self.alpha) / (
            self.total + self.alpha * len(self.counts)
        )


class OraclePredictor:
    """Reads the source's own conditionals; its prediction error is zero."""

    def __init__(self, source):
        self.source = source
        self.last = None

    def observe(self, symbol):
        self.last = symbol

    def prob_zero(self, last_symbol=None):
        if self.last is None:
            return true_conditional(self.source, ())
        return true_conditional(self.source, (self.last,))


@dataclass
class ErrorSeries:
    """Cumulative squared-error estimates on a grid of horizon lengths."""

    t_grid: tuple
    cumulative_mean: list
    cumulative_stderr: list
    last_step_error: list
    trials: int
    regime: str = "logarithmic (count-based computable predictor)"
    source: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(
            {
                "t_grid": list(self.t_grid),
                "cumulative_mean": self.cumulative_mean,
                "cumulative_stderr": self.cumulative_stderr,
                "last_step_error": self.last_step_error,
                "trials": self.trials,
                "regime": self.regime,
                "source": self.source,
            },
            sort_keys=True,
            indent=2,
        )

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["T", "cumulative_mean", "cumulative_stderr", "last_step_error"])
        for i, t in enumerate(self.t_grid):
            writer.writerow(
                [
                    t,
                    "%.10g" % self.cumulative_mean[i],
                    "%.10g" % self.cumulative_stderr[i],
                    "%.10g" % self.last_step_error[i],
                ]
            )
        return buf.getvalue()


def cumulative_error(
    source,
    predictor_factory,
    t_max=None,
    trials=DEFAULT_TRIALS,
    seed=1,
    t_grid=DEFAULT_T_GRID,
):
    """Monte Carlo estimate of the cumulative squared prediction error.

    ``predictor_factory`` builds a fresh online predictor per trial. Each
    trial uses an RNG stream derived from (seed, trial index), so results
    do not depend on execution order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t_grid = tuple(sorted(int(t) for t in t_grid))
    if t_max is None:
        t_max = t_grid[-1]
    grid_index = {t: i for i, t in enumerate(t_grid)}
    cum_samples = np.zeros((trials, len(t_grid)))
    step_samples = np.zeros((trials, len(t_grid)))
    bernoulli = isinstance(source, BernoulliSource)
    mat = None if bernoulli else np.asarray(source.transition, dtype=np.float64)
    for trial in range(trials):
        rng = _trial_rng(seed, trial + 1)
        x = _sample_with_rng(source, t_max, rng)
        pred = predictor_factory()
        cum = 0.0
        err = 0.0
        p = source.p if bernoulli else None
        for t in range(1, t_max + 1):
            sym = int(x[t - 1])
            pred.observe(sym)
            mu0 = p if bernoulli else float(mat[sym, 0])
            err = (pred.prob_zero(sym) - mu0) ** 2
            cum += err
            idx = grid_index.get(t)
            if idx is not None:
                cum_samples[trial, idx] = cum
                step_samples[trial, idx] = err
    mean = cum_samples.mean(axis=0)
    stderr = (
        cum_samples.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else 0.0 * mean
    )
    return ErrorSeries(
        t_grid=t_grid,
        cumulative_mean=[float(v) for v in mean],
        cumulative_stderr=[float(v) for v in stderr],
        last_step_error=[float(v) for v in step_samples.mean(axis=0)],
        trials=trials,
        source=source.describe(),
    )
