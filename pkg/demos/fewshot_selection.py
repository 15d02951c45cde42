"""Pick few-shot examples by label confidence and compare both strategies.

Uses the toy hash-based client, so the demo runs offline yet behaves like
a deterministic remote model. Selection walks classes round robin and at
each step keeps the candidate whose correct-label confidence is extremal;
the audit trail shows every chosen confidence. Swap in a real endpoint by
constructing RemoteLabelClient instead of HashClient.
"""

from lmprior import fewshot
from lmprior.remote import HashClient

POOL_ROWS = [
    ("ham", "Are we still on for lunch?"),
    ("ham", "I'll call you later tonight"),
    ("ham", "Can you pick up milk on the way home"),
    ("ham", "Running late, start without me"),
    ("spam", "WINNER!! You have won a prize, call now"),
    ("spam", "Free ringtones, text WIN to 80086"),
    ("spam", "You have been selected for a cash award"),
    ("spam", "Exclusive deal just for you, reply YES"),
]

TEST_ROWS = [
    ("ham", "See you at the gym"),
    ("ham", "Thanks for the ride yesterday"),
    ("spam", "URGENT! Claim your free entry to the draw"),
    ("spam", "Your mobile number has won 2000 pounds"),
]


def main():
    template = fewshot.load_template("sms")
    client = HashClient(seed=7)
    pool = [
        fewshot.LabeledExample(text, label, i)
        for i, (label, text) in enumerate(POOL_ROWS)
    ]
    test_set = [
        fewshot.LabeledExample(text, label, i)
        for i, (label, text) in enumerate(TEST_ROWS)
    ]

    for mode in (fewshot.MODE_LOW, fewshot.MODE_HIGH):
        report = fewshot.select_examples(pool, client, template, k_total=4, mode=mode)
        print("%s-confidence selection:" % mode)
        for step in report.steps:
            print(
                "  [%s] conf %.4f  %s"
                % (step.example.label, step.confidence, step.example.text)
            )
        result = fewshot.evaluate(client, template, report.selected, test_set)
        print(
            "  quota %s, toy-client accuracy %.2f (%d/%d)\n"
            % (report.per_class_counts(), result.accuracy, result.correct, result.total)
        )


if __name__ == "__main__":
    main()
