"""Explore the computable prior and its next-symbol prediction ratio.

Prints the three additive components of the log prior for a short input,
shows that the exact and approximate modes give the same normalized
prediction, and tabulates how fast the scaled prior ratio approaches 1
as the context grows.
"""

from lmprior import prior
from lmprior.models import Alphabet, TokenSequence, UniformModel


def main():
    alphabet = Alphabet.of_bits()
    model = UniformModel(alphabet)
    x = TokenSequence.from_text(alphabet, "0110")

    print("log prior of '0110' under the uniform binary model")
    for mode in (prior.MODE_EXACT, prior.MODE_PAPER):
        lp = prior.log_prior(x, model, mode=mode)
        print(
            "  %-12s log2 M = %8.3f  (seed %7.3f, iteration %5.1f, payload %5.1f)"
            % (mode, lp.value, lp.seed_sum_log, -lp.iteration_len, -lp.payload_len)
        )

    print("\nnormalized next-symbol prediction (both modes cancel to uniform)")
    for mode in (prior.MODE_EXACT, prior.MODE_PAPER):
        pred = prior.conditional_prior(x, model, mode=mode)
        print("  %-12s %s" % (mode, [float(v) for v in pred.normalized]))

    print("\nscaled ratio deviation |ratio * 4(t+1)^2/t^2 - 1| by context length")
    report = prior.verify_next_symbol_ratio(
        model, prior.uniform_sequence_source(alphabet, seed=1), t_grid=(10, 100, 1000)
    )
    for row in report["grid"]:
        print(
            "  t=%5d  max %.6f  tolerance %.4f  %s"
            % (row["t"], row["max_deviation"], row["tolerance"],
               "ok" if row["pass"] else "FAIL")
        )
    print("monotone decreasing: %s" % report["monotone_decreasing"])

    print("\nbrute-force prior mass over all binary strings (semi-measure check)")
    for length in (2, 4, 6, 8):
        mass = prior.semimeasure_mass(length, model)
        print("  length %d: total mass %.6f" % (length, mass))


if __name__ == "__main__":
    main()
