"""Command-line interface.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 data error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import persistence
from .core import RngStream
from .data import AGE, CLASS, COLUMNS, GENDER, SYMPTOMS, encode_record, load_dataset, normalize_name, parse_fields
from .evaluation import (
    ALGORITHMS,
    EvalReport,
    crossval_report,
    format_pct,
    render_report,
    run_crossval,
    run_split,
    split_report,
)
from .exceptions import DataError, VWNetError
from .layers import param_count
from .network import ARCHITECTURES, Network, TrainConfig, build_arch, gradcheck, kink_free_samples, predict, train

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3, 4
DEFAULT_SEED = 42
GRADCHECK_TOL = 1e-4


class UsageError(VWNetError):
    pass


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie strictly between 0 and 1, got {text}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def _eps(text):
    value = float(text)
    if not 1e-8 < value < 1e-2:
        raise argparse.ArgumentTypeError(f"eps must lie in (1e-8, 1e-2), got {text}")
    return value


def _flag(column):
    return "--" + column.lower().replace(" ", "-")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vwnet",
        description="Variable-weight and variable-bias networks for symptom-based diabetes screening.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def common_training(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default: 42)")
        p.add_argument("--epochs", type=_positive_int, help="training epochs (default: 200 for networks)")
        p.add_argument("--lr", type=float, help="learning rate (default: 1e-3 for networks)")

    p = sub.add_parser("train", help="train a network on the full dataset and save it")
    p.add_argument("--data", required=True, help="questionnaire CSV file")
    p.add_argument("--arch", required=True, choices=ARCHITECTURES)
    p.add_argument("--out", required=True, help="model file to write")
    common_training(p)

    for name, helptext in (("crossval", "k-fold cross-validation"), ("split", "stratified train/test split")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--data", required=True, help="questionnaire CSV file")
        which = p.add_mutually_exclusive_group(required=True)
        which.add_argument("--arch", choices=ARCHITECTURES, help="evaluate one network preset")
        which.add_argument("--algo", choices=ALGORITHMS, help="evaluate one algorithm")
        which.add_argument("--all", action="store_true", help="evaluate every algorithm and print the full table")
        if name == "crossval":
            p.add_argument("--folds", type=_positive_int, default=10, help="number of folds (default: 10)")
            p.add_argument("--parallel", action="store_true", help="train folds in worker processes")
        else:
            p.add_argument("--fraction", type=_fraction, default=0.8, help="training fraction (default: 0.8)")
        p.add_argument("--json", metavar="PATH", help="also write the report as JSON")
        common_training(p)

    p = sub.add_parser("predict", help="screen one set of questionnaire answers")
    p.add_argument("--model", required=True, help="model file written by 'train'")
    p.add_argument("--answers", metavar="PATH", help="file of 'field=value' lines or a JSON object")
    for col in (AGE, GENDER) + SYMPTOMS:
        p.add_argument(_flag(col), dest=f"ans_{col}", metavar="VALUE", help=f"answer for {col}")

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--arch", choices=ARCHITECTURES, help="preset to check (default: all)")
    p.add_argument("--eps", type=_eps, default=1e-5)
    p.add_argument("--samples", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("params", help="print parameter counts")
    p.add_argument("--arch", choices=ARCHITECTURES, help="preset to describe (default: all)")
    return parser


def _load(path):
    return load_dataset(path)


def _write_json(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())


def cmd_train(args, out):
    data = _load(args.data)
    overrides = {"epochs": args.epochs, "learning_rate": args.lr}
    cfg = TrainConfig(seed=args.seed, **{k: v for k, v in overrides.items() if v is not None})
    spec = build_arch(args.arch)
    net, history = train(spec, data, cfg)
    persistence.save(net, args.out)
    final_prob = net.forward(data.features)[:, 0]
    correct = int(np.sum((final_prob >= 0.5) == (data.labels == 1)))
    counts = data.counts
    print(f"architecture: {args.arch}", file=out)
    print(f"parameters: {net.param_count}", file=out)
    print(f"rows: {len(data)} ({counts[1]} positive, {counts[0]} negative)", file=out)
    print(f"final training loss: {history.loss[-1]:.6f}", file=out)
    print(f"training accuracy: {correct}/{len(data)} ({format_pct(correct, len(data))})", file=out)
    print(f"model written to {args.out}", file=out)
    return EXIT_OK


def _algorithms(args):
    if args.all:
        return list(ALGORITHMS)
    return [args.arch or args.algo]


def cmd_crossval(args, out):
    data = _load(args.data)
    if args.folds < 2 or args.folds > len(data):
        raise UsageError(f"--folds must lie between 2 and {len(data)}")
    kw = dict(epochs=args.epochs, learning_rate=args.lr)
    if args.all:
        report = crossval_report(data, k=args.folds, seed=args.seed, parallel=args.parallel, **kw)
    else:
        entry = run_crossval(_algorithms(args)[0], data, args.folds, args.seed, parallel=args.parallel, **kw)
        report = EvalReport("crossval", [entry], {"folds": args.folds, "seed": args.seed, "n": len(data)})
    out.write(render_report(report))
    if args.json:
        _write_json(args.json, report)
    return EXIT_OK


def cmd_split(args, out):
    data = _load(args.data)
    kw = dict(epochs=args.epochs, learning_rate=args.lr)
    try:
        if args.all:
            report = split_report(data, fraction=args.fraction, seed=args.seed, **kw)
        else:
            entry = run_split(_algorithms(args)[0], data, args.fraction, args.seed, **kw)
            report = EvalReport("split", [entry], {"fraction": args.fraction, "seed": args.seed, "n": len(data)})
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from None
    out.write(render_report(report))
    if args.json:
        _write_json(args.json, report)
    return EXIT_OK


def _read_answers_file(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"answers file is not valid JSON: {exc}") from None
        return {str(k): str(v) for k, v in raw.items()}
    answers = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise UsageError(f"answers file line {lineno}: expected 'field=value'")
        key, value = line.split(sep, 1)
        answers[key.strip()] = value.strip()
    return answers


def _collect_answers(args):
    answers = {}
    if args.answers:
        for key, value in _read_answers_file(args.answers).items():
            col = normalize_name(key)
            if col is None:
                raise UsageError(f"unknown answer field {key!r}")
            if col != CLASS:
                answers[col] = value
    for col in (AGE, GENDER) + SYMPTOMS:
        value = getattr(args, f"ans_{col}")
        if value is not None:
            answers[col] = value
    missing = [c for c in COLUMNS if c != CLASS and c not in answers]
    if missing:
        raise UsageError(f"missing {len(missing)} answer(s): {', '.join(missing)}")
    try:
        return parse_fields(answers, require_class=False)
    except DataError as exc:
        raise UsageError(f"invalid answer: {exc}") from None


def cmd_predict(args, out):
    record = _collect_answers(args)
    net = persistence.load(args.model)
    features, _ = encode_record(record)
    label, prob = predict(net, features)
    print(f"{label} {prob:.3f}", file=out)
    return EXIT_OK


def cmd_gradcheck(args, out):
    archs = [args.arch] if args.arch else list(ARCHITECTURES)
    status = EXIT_OK
    for arch in archs:
        spec = build_arch(arch)
        rng = RngStream(args.seed, f"gradcheck-{arch}")
        net = Network.init(spec, rng.integer_seed())
        worst = max(gradcheck(net, sample, args.eps) for sample in kink_free_samples(net, args.samples, rng))
        ok = worst < GRADCHECK_TOL
        print(f"{arch}: max relative error {worst:.3e} over {args.samples} samples "
              f"(eps {args.eps:g}) {'PASS' if ok else 'FAIL'}", file=out)
        if not ok:
            status = EXIT_CHECK
    return status


def cmd_params(args, out):
    archs = [args.arch] if args.arch else list(ARCHITECTURES)
    for arch in archs:
        spec = build_arch(arch)
        print(f"{arch}:", file=out)
        for i, layer in enumerate(spec.layers):
            print(f"  layer {i}: {layer.describe():<28} {param_count(layer):>6}", file=out)
        print(f"  total: {spec.param_count}", file=out)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "crossval": cmd_crossval,
    "split": cmd_split,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
    "params": cmd_params,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vwnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"vwnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"vwnet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
