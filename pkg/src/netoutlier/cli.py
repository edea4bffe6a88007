"""Command-line front end: ``gen``, ``detect``, ``explain`` and ``eval``.

Exit codes: 0 success, 1 invalid input or parameters, 2 numerical failure,
64 usage error, 74 unreadable or unwritable files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import FormatError, NetOutlierError, NumericalFailure, ValidationError
from .evaluate import evaluate_report, roc_auc
from .model import load_database, write_database
from .scoring import (
    DEFAULT_K_LIST,
    DEFAULT_LAMBDA1_LIST,
    DEFAULT_LAMBDA2,
    SCALINGS,
    DetectConfig,
    OutlierReport,
    detect_all,
    detect_sample,
)
from .synth import TOPOLOGIES, SynthConfig, generate_synthetic, read_truth, write_truth

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64
EXIT_IO = 74

TRUTH_FILE = "truth.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_grid(p: argparse.ArgumentParser, db_required: bool = True) -> None:
    p.add_argument("--db", required=db_required, help="database directory")
    p.add_argument("--k-list", type=_int_list, default=list(DEFAULT_K_LIST))
    p.add_argument("--lambda1-list", type=_float_list, default=list(DEFAULT_LAMBDA1_LIST))
    p.add_argument("--lambda2", type=float, default=DEFAULT_LAMBDA2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scaling", choices=SCALINGS, default="rms")
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--trace", action="store_true", help="include the winning solver trace per sample")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netoutlier", description="Network-sample outlier detection with subnetwork explanations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a synthetic database with planted outliers")
    gen.add_argument("--out", required=True, help="output database directory")
    gen.add_argument("--nodes", type=int, default=100)
    gen.add_argument("--samples", type=int, default=120)
    gen.add_argument("--outliers", type=int, default=10)
    gen.add_argument("--signal", type=float, default=3.0)
    gen.add_argument("--planted-size", type=int, default=10)
    gen.add_argument("--clusters", type=int, default=2)
    gen.add_argument("--topology", choices=TOPOLOGIES, default="ring")
    gen.add_argument("--two-sided", action="store_true")
    gen.add_argument("--seed", type=int, default=0)

    det = sub.add_parser("detect", help="score and explain every sample")
    _add_grid(det)
    det.add_argument("--out", required=True, help="report JSON path")
    det.add_argument("--jobs", type=int, default=1)

    exp = sub.add_parser("explain", help="show one sample's explanation")
    exp.add_argument("--sample", required=True)
    exp.add_argument("--report", help="report JSON from detect; when absent the sample is scored from --db")
    _add_grid(exp, db_required=False)
    exp.add_argument("--out", help="also write the explanation JSON here")

    ev = sub.add_parser("eval", help="ROC/AUC and subnetwork recovery against ground truth")
    ev.add_argument("--report", required=True)
    ev.add_argument("--truth", help=f"ground-truth JSON (default: <db>/{TRUTH_FILE})")
    ev.add_argument("--db", help="database directory holding labels.csv or truth.json")
    ev.add_argument("--out", required=True, help="output directory for roc.csv and metrics.json")
    ev.add_argument("--top", type=int, default=10)
    return parser


def _config(args) -> DetectConfig:
    from .solver import SolverOptions

    try:
        opts = SolverOptions(max_iterations=args.max_iterations)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return DetectConfig(
        k_list=tuple(args.k_list),
        lambda1_list=tuple(args.lambda1_list),
        lambda2=args.lambda2,
        seed=args.seed,
        scaling=args.scaling,
        solver=opts,
        trace=args.trace,
    )


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_gen(args) -> int:
    cfg = SynthConfig(
        n_nodes=args.nodes, n_samples=args.samples, n_outliers=args.outliers,
        topology=args.topology, signal_strength=args.signal, planted_size=args.planted_size,
        heterogeneity=args.clusters, two_sided=args.two_sided, seed=args.seed,
    )
    db, truth = generate_synthetic(cfg)
    out = write_database(db, args.out)
    write_truth(truth, out / TRUTH_FILE)
    print(f"wrote {db.m} samples x {db.n} nodes to {out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    if args.jobs < 1:
        raise ValidationError("--jobs must be >= 1")
    config = _config(args)
    db = load_database(args.db)
    report = detect_all(db, config, jobs=args.jobs)
    Path(args.out).write_text(report.to_json())
    failures = [s for s, r in report.samples.items() if r.error is not None]
    if failures:
        print(f"numerical failure for {len(failures)} sample(s), scored by full-space LOF: "
              f"{', '.join(failures[:5])}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote report for {len(report.samples)} samples to {args.out}")
    return EXIT_OK


def cmd_explain(args) -> int:
    if args.report:
        report = OutlierReport.from_json(_read_text(args.report))
        if args.sample not in report.samples:
            raise ValidationError(f"sample {args.sample!r} is not in {args.report}")
        result = report.samples[args.sample]
        node_ids = load_database(args.db).node_ids if args.db else None
    else:
        if not args.db:
            raise ValidationError("explain needs --report or --db")
        db = load_database(args.db)
        result = detect_sample(db, args.sample, _config(args))
        node_ids = db.node_ids
    ex = result.explanation
    name = (lambda i: node_ids[i]) if node_ids else str
    lines = [
        f"sample {args.sample}",
        f"  score      {result.score:.6g}",
        f"  config     K={result.k} lambda1={result.lambda1:g}",
    ]
    if ex.fallback:
        lines.append("  no node selected; score is the full-space LOF")
    for k, comp in enumerate(ex.subnetworks, start=1):
        lines.append(f"  subnetwork {k}: " + ", ".join(f"{name(i)} ({ex.weights.get(i, 0.0):+.4f})" for i in comp))
    body = {
        "sample_id": args.sample,
        "score": result.score,
        "config": {"k": result.k, "lambda1": result.lambda1},
        "nodes": list(ex.selected_nodes),
        "subnetworks": [list(c) for c in ex.subnetworks],
        "weights": [ex.weights[i] for i in ex.selected_nodes],
        "fallback": ex.fallback,
    }
    print("\n".join(lines))
    print(_dump(body), end="")
    if args.out:
        Path(args.out).write_text(_dump(body))
    return EXIT_OK


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def cmd_eval(args) -> int:
    try:
        report = OutlierReport.from_json(_read_text(args.report))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed report {args.report}: {exc}") from None
    truth_path = args.truth or (str(Path(args.db) / TRUTH_FILE) if args.db else None)
    if truth_path and Path(truth_path).is_file():
        truth = read_truth(truth_path)
        metrics = evaluate_report(report, truth, top=args.top)
        labels = truth.labels
    elif args.db:
        db = load_database(args.db)
        if not db.labels:
            raise ValidationError(f"{args.db} has neither {TRUTH_FILE} nor labels.csv")
        labels = db.labels
        _, auc = roc_auc({s: r.score for s, r in report.samples.items()}, labels)
        metrics = {"auc": auc}
    else:
        raise ValidationError("eval needs --truth or --db")
    curve, _ = roc_auc({s: r.score for s, r in report.samples.items()}, labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "roc.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        w.writerows((repr(a), repr(b)) for a, b in curve)
    (out / "metrics.json").write_text(_dump(metrics))
    print(f"AUC {metrics['auc']:.4f}; wrote {out / 'roc.csv'} and {out / 'metrics.json'}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "detect": cmd_detect, "explain": cmd_explain, "eval": cmd_eval}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NetOutlierError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
