"""Measure how fast a count-based predictor locks onto a Bernoulli source.

Runs the Monte Carlo lab for the add-half estimator and the cheating
oracle, then prints the cumulative squared error at each horizon. The
count-based error grows like ln T while the oracle stays at zero, which
is the logarithmic regime expected of a computable predictor.
"""

import math

from lmprior import convergence


def main():
    source = convergence.BernoulliSource(0.7)
    grid = (10, 100, 1000, 10_000)

    kt = convergence.cumulative_error(
        source,
        lambda: convergence.CountPredictor(source.size, alpha=0.5),
        trials=200,
        seed=11,
        t_grid=grid,
    )
    oracle = convergence.cumulative_error(
        source,
        lambda: convergence.OraclePredictor(source),
        trials=20,
        seed=11,
        t_grid=grid,
    )

    p = source.p
    print("bernoulli(%.1f), 200 trials; prediction: p(1-p) ln T = %.3f at T=10^4"
          % (p, p * (1 - p) * math.log(10_000)))
    print("%8s %18s %18s %14s" % ("T", "count-based cum", "stderr", "oracle cum"))
    for i, t in enumerate(grid):
        print(
            "%8d %18.4f %18.4f %14.4f"
            % (t, kt.cumulative_mean[i], kt.cumulative_stderr[i],
               oracle.cumulative_mean[i])
        )
    ratio = kt.cumulative_mean[-1] / kt.cumulative_mean[-2]
    print("growth cum(10^4)/cum(10^3) = %.3f (ln 10^4 / ln 10^3 = %.3f)"
          % (ratio, math.log(10_000) / math.log(1000)))


if __name__ == "__main__":
    main()
