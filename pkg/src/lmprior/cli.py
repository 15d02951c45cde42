"""Command-line entry point for reproducible runs of every capability.

Configuration precedence is flag > config file > built-in default, and
every report embeds the fully resolved configuration so each number in the
output can be traced to its source. Reports are byte-stable across runs;
wall-clock duration goes to stderr, not into report files.
"""

import argparse
import json
import sys
import time

from . import __version__
from . import bits, codec, convergence, fewshot, prior
from .models import Alphabet, NGramModel, TokenSequence, UniformModel
from .remote import HashClient, RemoteLabelClient

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(ValueError):
    pass


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot read config file: %s" % exc)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _resolve(args, defaults):
    """flag > config file > default; unknown config keys are errors."""
    config = _load_config_file(getattr(args, "config", None))
    unknown = set(config) - set(defaults)
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    resolved = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in config:
            resolved[key] = config[key]
        else:
            resolved[key] = default
    return resolved


def _build_model(spec):
    if spec is None:
        raise ConfigError("--model is required")
    if spec.startswith("uniform:"):
        try:
            size = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError("bad model spec %r" % spec)
        if size == 256:
            return UniformModel(Alphabet.of_bytes())
        if not 2 <= size <= 62:
            raise ConfigError("uniform alphabet size must be 2..62 or 256")
        digits = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        return UniformModel(Alphabet(tuple(digits[:size])))
    try:
        return NGramModel.load(spec)
    except OSError as exc:
        raise ConfigError("cannot read model file %r: %s" % (spec, exc))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _sequence_from_file(model, path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read input %r: %s" % (path, exc))
    if model.alphabet.size == 256 and model.alphabet == Alphabet.of_bytes():
        return TokenSequence(model.alphabet, tuple(data))
    text = data.decode("utf-8")
    try:
        return TokenSequence.from_text(model.alphabet, text)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _sequence_to_bytes(x):
    if x.alphabet == Alphabet.of_bytes():
        return bytes(x.tokens)
    return x.to_text().encode("utf-8")


def _write_report(out_path, report):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_envelope(command, resolved, result, model_hash=None):
    body = {
        "command": command,
        "config": resolved,
        "version": __version__,
        "result": result,
    }
    if model_hash is not None:
        body["model_hash"] = model_hash
    return body


def cmd_compress(args):
    defaults = {"model": "uniform:256", "input": None, "out": None, "seed": 1}
    resolved = _resolve(args, defaults)
    if resolved["input"] is None:
        raise ConfigError("--input is required")
    if resolved["out"] is None:
        raise ConfigError("--out is required")
    model = _build_model(resolved["model"])
    x = _sequence_from_file(model, resolved["input"])
    payload = codec.compress(model, x)
    analytic = codec.analytic_code_length(model, x)
    if resolved["out"].endswith(".aitp"):
        bits.write_program_file(
            resolved["out"], payload.token_count, resolved["seed"], payload.bits
        )
    else:
        codec.write_container(resolved["out"], payload)
    result = {
        "measured_bits": payload.bits.length,
        "analytic_bits": analytic,
        "token_count": payload.token_count,
        "output": resolved["out"],
    }
    _write_report(None, _report_envelope("compress", resolved, result, model.content_hash()))
    return EXIT_OK


def cmd_decompress(args):
    defaults = {"model": "uniform:256", "input": None, "out": None}
    resolved = _resolve(args, defaults)
    if resolved["input"] is None:
        raise ConfigError("--input is required")
    if resolved["out"] is None:
        raise ConfigError("--out is required")
    model = _build_model(resolved["model"])
    if resolved["input"].endswith(".aitp"):
        token_count, _seed, payload_bits = bits.read_program_file(resolved["input"])
        payload = codec.CompressedPayload(
            bits=payload_bits, token_count=token_count, model_id=model.content_hash()
        )
    else:
        payload = codec.read_container(resolved["input"])
    x = codec.decompress(model, payload)
    with open(resolved["out"], "wb") as fh:
        fh.write(_sequence_to_bytes(x))
    result = {"token_count": len(x), "output": resolved["out"]}
    _write_report(None, _report_envelope("decompress", resolved, result, model.content_hash()))
    return EXIT_OK


def _parse_sequence_arg(model, resolved):
    if resolved.get("input_text"):
        try:
            return TokenSequence.from_text(model.alphabet, resolved["input_text"])
        except ValueError as exc:
            raise ConfigError(str(exc))
    if resolved.get("input"):
        return _sequence_from_file(model, resolved["input"])
    raise ConfigError("provide --input-text or --input")


def cmd_prior(args):
    defaults = {"model": "uniform:2", "input": None, "input_text": None, "out": None}
    resolved = _resolve(args, defaults)
    model = _build_model(resolved["model"])
    x = _parse_sequence_arg(model, resolved)
    result = {}
    for mode in (prior.MODE_EXACT, prior.MODE_PAPER):
        lp = prior.log_prior(x, model, mode=mode)
        result[mode] = {
            "log2_prior": lp.value,
            "seed_sum_log": lp.seed_sum_log,
            "iteration_len": lp.iteration_len,
            "payload_len": lp.payload_len,
        }
    _write_report(
        resolved["out"], _report_envelope("prior", resolved, result, model.content_hash())
    )
    return EXIT_OK


def cmd_predict(args):
    defaults = {"model": "uniform:2", "input": None, "input_text": None, "out": None}
    resolved = _resolve(args, defaults)
    model = _build_model(resolved["model"])
    x = _parse_sequence_arg(model, resolved)
    t = len(x)
    result = {}
    for mode in (prior.MODE_EXACT, prior.MODE_PAPER):
        pred = prior.conditional_prior(x, model, mode=mode)
        scaled = pred.ratio_check * (4.0 * (t + 1) ** 2 / t ** 2)
        result[mode] = {
            "raw": [float(v) for v in pred.raw],
            "normalized": [float(v) for v in pred.normalized],
            "model_probability": [float(v) for v in pred.model_probability],
            "ratio_check": [float(v) for v in pred.ratio_check],
            "scaled_ratio_deviation": float(max(abs(v - 1.0) for v in scaled)),
        }
    _write_report(
        resolved["out"], _report_envelope("predict", resolved, result, model.content_hash())
    )
    return EXIT_OK


def _parse_source(spec):
    if spec.startswith("bernoulli:"):
        return convergence.BernoulliSource(float(spec.split(":", 1)[1]))
    if spec.startswith("markov:"):
        body = json.loads(spec.split(":", 1)[1])
        return convergence.MarkovSource(
            transition=tuple(tuple(r) for r in body["transition"]),
            initial=tuple(body["initial"]),
        )
    raise ConfigError("bad source spec %r" % spec)


def _parse_predictor(spec, source):
    if spec == "oracle":
        return lambda: convergence.OraclePredictor(source)
    if spec == "kt":
        return lambda: convergence.CountPredictor(source.size, alpha=0.5)
    if spec.startswith("kt:"):
        alpha = float(spec.split(":", 1)[1])
        return lambda: convergence.CountPredictor(source.size, alpha=alpha)
    raise ConfigError("bad predictor spec %r" % spec)


def cmd_converge(args):
    defaults = {
        "source": "bernoulli:0.7",
        "predictor": "kt",
        "t_grid": "10,100,1000,10000",
        "trials": convergence.DEFAULT_TRIALS,
        "seed": 1,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    source = _parse_source(resolved["source"])
    factory = _parse_predictor(resolved["predictor"], source)
    grid = tuple(int(v) for v in str(resolved["t_grid"]).split(","))
    series = convergence.cumulative_error(
        source,
        factory,
        trials=int(resolved["trials"]),
        seed=int(resolved["seed"]),
        t_grid=grid,
    )
    if resolved["out"]:
        with open(resolved["out"] + ".csv", "w", encoding="utf-8") as fh:
            fh.write(series.to_csv())
        with open(resolved["out"] + ".json", "w", encoding="utf-8") as fh:
            fh.write(series.to_json() + "\n")
    result = json.loads(series.to_json())
    _write_report(None, _report_envelope("converge", resolved, result))
    return EXIT_OK


def _build_client(resolved):
    endpoint = resolved.get("endpoint")
    client_spec = resolved.get("client")
    if client_spec:
        if client_spec.startswith("toy:"):
            return HashClient(seed=int(client_spec.split(":", 1)[1]))
        raise ConfigError("bad client spec %r" % client_spec)
    if endpoint:
        return RemoteLabelClient(endpoint, resolved.get("remote_model", "default"))
    raise ConfigError("a remote model needs --endpoint (or use --client toy:<seed>)")


def cmd_select(args):
    defaults = {
        "dataset": None,
        "format": None,
        "test_dataset": None,
        "template": None,
        "mode": fewshot.MODE_LOW,
        "k_total": fewshot.DEFAULT_K_TOTAL,
        "seed": fewshot.DEFAULT_SPLIT_SEED,
        "endpoint": None,
        "client": None,
        "remote_model": "default",
        "out": None,
    }
    resolved = _resolve(args, defaults)
    if not resolved["dataset"] or not resolved["format"]:
        raise ConfigError("--dataset and --format are required")
    task = fewshot.FORMAT_TASKS.get(resolved["format"])
    if task is None:
        raise ConfigError("unknown format %r" % resolved["format"])
    template = fewshot.load_template(task, path=resolved["template"])
    client = _build_client(resolved)
    pool, _test = fewshot.load_dataset(
        resolved["dataset"],
        resolved["format"],
        test_path=resolved["test_dataset"],
        seed=int(resolved["seed"]),
    )
    report = fewshot.select_examples(
        pool, client, template, k_total=int(resolved["k_total"]), mode=resolved["mode"]
    )
    body = _report_envelope("select", resolved, json.loads(report.to_json()))
    _write_report(resolved["out"], body)
    return EXIT_OK


def cmd_evaluate(args):
    defaults = {
        "dataset": None,
        "format": None,
        "test_dataset": None,
        "template": None,
        "selection": None,
        "seed": fewshot.DEFAULT_SPLIT_SEED,
        "endpoint": None,
        "client": None,
        "remote_model": "default",
        "out": None,
    }
    resolved = _resolve(args, defaults)
    if not resolved["dataset"] or not resolved["format"]:
        raise ConfigError("--dataset and --format are required")
    if not resolved["selection"]:
        raise ConfigError("--selection (a selection report file) is required")
    task = fewshot.FORMAT_TASKS.get(resolved["format"])
    if task is None:
        raise ConfigError("unknown format %r" % resolved["format"])
    template = fewshot.load_template(task, path=resolved["template"])
    client = _build_client(resolved)
    _pool, test = fewshot.load_dataset(
        resolved["dataset"],
        resolved["format"],
        test_path=resolved["test_dataset"],
        seed=int(resolved["seed"]),
    )
    with open(resolved["selection"], "r", encoding="utf-8") as fh:
        selection = json.load(fh)
    steps = selection.get("result", selection).get("steps", [])
    examples = [
        fewshot.LabeledExample(
            text=s["text"], label=s["label"], source_index=s["source_index"]
        )
        for s in steps
    ]
    result = fewshot.evaluate(client, template, examples, test)
    body = _report_envelope("evaluate", resolved, json.loads(result.to_json()))
    _write_report(resolved["out"], body)
    sys.stderr.write(result.summary() + "\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lmprior",
        description="Model-driven lossless coding, computable priors, and "
        "confidence-based few-shot selection.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, flags):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (flag > file > default)")
        for flag, kwargs in flags:
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=func)
        return p

    seq_flags = [
        ("--model", {}),
        ("--input", {}),
        ("--input-text", {"dest": "input_text"}),
        ("--out", {}),
    ]
    add("compress", cmd_compress, [("--model", {}), ("--input", {}), ("--out", {}),
                                   ("--seed", {"type": int})])
    add("decompress", cmd_decompress, [("--model", {}), ("--input", {}), ("--out", {})])
    add("prior", cmd_prior, seq_flags)
    add("predict", cmd_predict, seq_flags)
    add("converge", cmd_converge, [
        ("--source", {}),
        ("--predictor", {}),
        ("--t-grid", {"dest": "t_grid"}),
        ("--trials", {"type": int}),
        ("--seed", {"type": int}),
        ("--out", {}),
    ])
    fewshot_flags = [
        ("--dataset", {}),
        ("--format", {}),
        ("--test-dataset", {"dest": "test_dataset"}),
        ("--template", {}),
        ("--k-total", {"dest": "k_total", "type": int}),
        ("--mode", {"choices": [fewshot.MODE_LOW, fewshot.MODE_HIGH]}),
        ("--seed", {"type": int}),
        ("--endpoint", {}),
        ("--client", {}),
        ("--remote-model", {"dest": "remote_model"}),
        ("--out", {}),
    ]
    add("select", cmd_select, fewshot_flags)
    add("evaluate", cmd_evaluate, fewshot_flags + [("--selection", {})])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        status = args.func(args)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": "config", "message": str(exc)}) + "\n")
        return EXIT_CONFIG
    except (fewshot.DatasetFormatError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": "data", "message": str(exc)}) + "\n")
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        sys.stderr.write(json.dumps({"error": "failure", "message": str(exc)}) + "\n")
        return EXIT_FAILURE
    sys.stderr.write("duration_seconds %.3f\n" % (time.monotonic() - started))
    return status


if __name__ == "__main__":
    sys.exit(main())
