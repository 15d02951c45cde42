"""Confidence-based few-shot example selection and its evaluation harness.

The selector runs a greedy loop: at each step it scores every remaining
candidate by the model's probability of the correct label given the current
prompt extended with that candidate, then appends the extremal pick (lowest
confidence in "low" mode, highest in "high" mode) to the prompt. A
per-class quota is enforced by cycling through classes in fixed label
order; within a step the scan is restricted to the current class.
"""

import json
import random
from dataclasses import dataclass, field
from importlib import resources

from .remote import MultiTokenLabelError, TransportFailureError

MODE_LOW = "low"
MODE_HIGH = "high"

DEFAULT_K_TOTAL = 10
DEFAULT_POOL_CAP_PER_CLASS = 500
DEFAULT_TEST_CAP = 2000
DEFAULT_SPLIT_SEED = 12345
DEFAULT_TEST_FRACTION = 0.2

TASK_LABELS = {
    "sms": ("ham", "spam"),
    "emotion": ("sadness", "joy", "love", "anger", "fear", "surprise"),
    "agnews": ("World", "Sports", "Business", "Sci/Tech"),
}

# AG News verbalizer avoids the slash so each label can be one token.
TASK_VERBALIZERS = {
    "agnews": {
        "World": "World",
        "Sports": "Sports",
        "Business": "Business",
        "Sci/Tech": "Science",
    }
}


class DatasetFormatError(ValueError):
    """Malformed dataset row; carries the 1-based line number."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__("line %d: %s" % (line_number, message))


class UnknownLabelError(DatasetFormatError):
    pass


class ClassExhaustionError(RuntimeError):
    """A class ran out of candidates before its quota was filled."""


class SelectionAborted(RuntimeError):
    """Remote failure mid-selection; carries the partial report."""

    def __init__(self, partial_report, cause):
        self.partial_report = partial_report
        super().__init__("selection aborted after remote failure: %s" % cause)


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: str
    source_index: int


@dataclass(frozen=True)
class PromptTemplate:
    """System text plus rendering patterns and the label verbalizer."""

    system_text: str
    labels: tuple
    verbalizer: dict
    example_format: str = "Text: {text}\nLabel: {label}"
    query_format: str = "Text: {text}\nLabel:"
    delimiter: str = "\n\n"

    def __post_init__(self):
        if "{examples}" not in self.system_text:
            raise ValueError("template is missing the {examples} placeholder")
        for label in self.labels:
            if label not in self.verbalizer:
                raise ValueError("no verbalizer entry for label %r" % label)

    def validate_verbalizer(self, client):
        """Hard-fail on any label that is not a single token for ``client``."""
        for label in self.labels:
            token = self.verbalizer[label]
            # confidence query doubles as the token-boundary check
            try:
                client.label_confidence("Label:", token)
            except MultiTokenLabelError:
                raise
        return True


def load_template(task, path=None):
    """Template for a named task, optionally reading the system text from
    ``path`` instead of the packaged asset."""
    if task not in TASK_LABELS:
        raise ValueError("unknown task %r; expected one of %s" % (task, sorted(TASK_LABELS)))
    if path is None:
        system_text = (
            resources.files("lmprior.templates").joinpath(task + ".txt").read_text("utf-8")
        )
    else:
        with open(path, "r", encoding="utf-8") as fh:
            system_text = fh.read()
    labels = TASK_LABELS[task]
    verbalizer = TASK_VERBALIZERS.get(task, {label: label for label in labels})
    return PromptTemplate(system_text=system_text, labels=labels, verbalizer=verbalizer)


def _parse_sms(lines, labels):
    examples = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        if "\t" not in line:
            raise DatasetFormatError(lineno, "expected 'label<TAB>text'")
        label, text = line.split("\t", 1)
        if label not in labels:
            raise UnknownLabelError(lineno, "unknown label %r" % label)
        examples.append((text, label))
    return examples


def _parse_indexed_rows(lines, labels, separator, one_based):
    examples = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        text, sep, idx_text = line.rpartition(separator)
        if not sep:
            raise DatasetFormatError(lineno, "expected 'text%sclass-index'" % separator)
        try:
            idx = int(idx_text)
        except ValueError:
            raise DatasetFormatError(lineno, "class index %r is not an integer" % idx_text)
        idx -= 1 if one_based else 0
        if not 0 <= idx < len(labels):
            raise UnknownLabelError(lineno, "class index %s out of range" % idx_text)
        examples.append((text, labels[idx]))
    return examples


FORMAT_TASKS = {"sms-tsv": "sms", "emotion-rows": "emotion", "agnews-rows": "agnews"}


def _parse_file(path, fmt):
    labels = TASK_LABELS[FORMAT_TASKS[fmt]]
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if fmt == "sms-tsv":
        rows = _parse_sms(lines, labels)
    elif fmt == "emotion-rows":
        rows = _parse_indexed_rows(lines, labels, ";", one_based=False)
    else:
        rows = _parse_indexed_rows(lines, labels, ",", one_based=True)
    if not rows:
        raise ValueError("empty pool: %s has no usable rows" % path)
    return rows


def load_dataset(
    path,
    fmt,
    test_path=None,
    seed=DEFAULT_SPLIT_SEED,
    pool_cap_per_class=DEFAULT_POOL_CAP_PER_CLASS,
    test_cap=DEFAULT_TEST_CAP,
):
    """Load (pool, test) for a task.

    When the distribution has predefined splits, pass the training file as
    ``path`` and the test file as ``test_path``; the pool is sampled from
    the training rows. Without a predefined split the rows are first
    partitioned into train/test with a fixed seed, then sampled.
    """
    if fmt not in FORMAT_TASKS:
        raise ValueError("unknown format %r" % fmt)
    rows = _parse_file(path, fmt)
    rng = random.Random(seed)
    if test_path is not None:
        train_rows = rows
        test_rows = _parse_file(test_path, fmt)
    else:
        shuffled = list(rows)
        rng.shuffle(shuffled)
        cut = max(1, int(len(shuffled) * (1.0 - DEFAULT_TEST_FRACTION)))
        train_rows, test_rows = shuffled[:cut], shuffled[cut:]
    by_class = {}
    for text, label in train_rows:
        by_class.setdefault(label, []).append((text, label))
    sampled = []
    for label in TASK_LABELS[FORMAT_TASKS[fmt]]:
        members = by_class.get(label, [])
        if len(members) > pool_cap_per_class:
            members = rng.sample(members, pool_cap_per_class)
        sampled.extend(members)
    pool = [
        LabeledExample(text=t, label=l, source_index=i)
        for i, (t, l) in enumerate(sampled)
    ]
    if len(test_rows) > test_cap:
        test_rows = rng.sample(test_rows, test_cap)
    test = [
        LabeledExample(text=t, label=l, source_index=i)
        for i, (t, l) in enumerate(test_rows)
    ]
    return pool, test


def render_prompt(template, examples, query=None):
    """Deterministic prompt rendering; examples appear in selection order."""
    block = template.delimiter.join(
        template.example_format.format(text=e.text, label=e.label) for e in examples
    )
    prompt = template.system_text.replace("{examples}", block)
    if query is not None:
        if not prompt.endswith("\n"):
            prompt += "\n"
        prompt += template.delimiter + template.query_format.format(text=query)
    return prompt


def class_quotas(labels, k_total):
    """Split ``k_total`` across classes by largest remainder, label order."""
    base, rem = divmod(k_total, len(labels))
    quotas = {label: base for label in labels}
    # equal remainders resolve by label order
    for label in labels[:rem]:
        quotas[label] += 1
    return quotas


@dataclass
class SelectionStep:
    step: int
    example: LabeledExample
    confidence: float
    scanned_class: str


@dataclass
class SelectionReport:
    mode: str
    k_total: int
    quotas: dict
    steps: list = field(default_factory=list)
    final_prompt: str = ""
    accuracy: float = None

    @property
    def selected(self):
        return [s.example for s in self.steps]

    def per_class_counts(self):
        counts = {}
        for s in self.steps:
            counts[s.example.label] = counts.get(s.example.label, 0) + 1
        return counts

    def to_json(self):
        return json.dumps(
            {
                "mode": self.mode,
                "k_total": self.k_total,
                "quotas": self.quotas,
                "per_class_counts": self.per_class_counts(),
                "steps": [
                    {
                        "step": s.step,
                        "source_index": s.example.source_index,
                        "text": s.example.text,
                        "label": s.example.label,
                        "confidence": s.confidence,
                        "scanned_class": s.scanned_class,
                    }
                    for s in self.steps
                ],
                "final_prompt": self.final_prompt,
                "accuracy": self.accuracy,
            },
            sort_keys=True,
            indent=2,
        )


def select_examples(pool, client, template, k_total=DEFAULT_K_TOTAL, mode=MODE_LOW):
    """Greedy confidence-extremal selection with per-class quotas.

    Confidence for a candidate is queried on the current prompt extended
    with the candidate's text only (the label is what gets scored, not
    appended). Ties break toward the smaller source index.
    """
    if mode not in (MODE_LOW, MODE_HIGH):
        raise ValueError("mode must be 'low' or 'high'")
    quotas = class_quotas(template.labels, k_total)
    remaining = {
        label: sorted(
            (e for e in pool if e.label == label), key=lambda e: e.source_index
        )
        for label in template.labels
    }
    for label, quota in quotas.items():
        if len(remaining[label]) < quota:
            raise ClassExhaustionError(
                "class %r has %d candidates but quota %d"
                % (label, len(remaining[label]), quota)
            )
    report = SelectionReport(mode=mode, k_total=k_total, quotas=dict(quotas))
    taken = {label: 0 for label in template.labels}
    selected = []
    step = 0
    while step < k_total:
        for label in template.labels:
            if step >= k_total or taken[label] >= quotas[label]:
                continue
            best = None
            best_conf = None
            for cand in remaining[label]:
                prompt = render_prompt(template, selected, query=cand.text)
                try:
                    conf = client.label_confidence(prompt, template.verbalizer[label])
                except TransportFailureError as exc:
                    report.final_prompt = render_prompt(template, selected)
                    raise SelectionAborted(report, exc)
                better = (
                    best_conf is None
                    or (mode == MODE_LOW and conf < best_conf)
                    or (mode == MODE_HIGH and conf > best_conf)
                )
                if better:
                    best, best_conf = cand, conf
            step += 1
            taken[label] += 1
            selected.append(best)
            remaining[label].remove(best)
            report.steps.append(
                SelectionStep(
                    step=step, example=best, confidence=best_conf, scanned_class=label
                )
            )
    report.final_prompt = render_prompt(template, selected)
    return report


@dataclass
class EvalResult:
    accuracy: float
    correct: int
    total: int
    skipped: int

    def to_json(self):
        return json.dumps(
            {
                "accuracy": self.accuracy,
                "correct": self.correct,
                "total": self.total,
                "skipped": self.skipped,
            },
            sort_keys=True,
            indent=2,
        )

    def summary(self):
        return "accuracy %.4f (%d/%d correct, %d skipped)" % (
            self.accuracy,
            self.correct,
            self.total,
            self.skipped,
        )


def evaluate(client, template, examples, test_set):
    """Accuracy of argmax-label prediction with the given few-shot examples.

    Remote failures after retries are counted as skipped items, never
    silently dropped.
    """
    if not test_set:
        raise ValueError("test set must be nonempty")
    tokens = [template.verbalizer[label] for label in template.labels]
    correct = 0
    skipped = 0
    for item in test_set:
        prompt = render_prompt(template, examples, query=item.text)
        try:
            probs = client.label_probabilities(prompt, tokens)
        except TransportFailureError:
            skipped += 1
            continue
        predicted = template.labels[max(range(len(probs)), key=lambda i: probs[i])]
        if predicted == item.label:
            correct += 1
    scored = len(test_set) - skipped
    return EvalResult(
        accuracy=correct / scored if scored else 0.0,
        correct=correct,
        total=len(test_set),
        skipped=skipped,
    )
