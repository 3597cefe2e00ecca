"""Command-line front end.

Subcommands:

* canonicalize: rewrite numeric literals in a text stream
* train: fit a probe against one attribute and save it as JSON
* evaluate: cross-validated report for one (probe, encoder, attribute)
* transfer relative: zero-shot pairwise comparisons from a saved probe
* transfer price: zero-shot product-price evaluation from a saved probe

Exit codes: 0 on success, 2 on validation or I/O errors.
"""

import argparse
import io
import json
import sys

from . import __version__
from .canonicalize import canonicalize_stream
from .embeddings import load_table
from .harness import (
    ProbingDataset,
    emit_report,
    eval_price_transfer,
    eval_relative,
    fit_fold,
    load_relative_pairs,
    run_cv,
)
from .probes import TrainConfig, load_pipeline, save_pipeline
from .scalardata import (
    BucketScheme,
    EmpiricalDistribution,
    load_scalar_records,
)


def _open_in(path: str):
    if path == "-":
        return io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def _open_out(path: str):
    if path == "-":
        return io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", newline="")
    return open(path, "w", encoding="utf-8", newline="")


def _cmd_canonicalize(args) -> int:
    reader = _open_in(args.infile)
    writer = _open_out(args.outfile)
    try:
        stats = canonicalize_stream(reader, writer)
    finally:
        for fh in (reader, writer):
            if fh.fileno() not in (0, 1):
                fh.close()
            else:
                fh.flush()
                fh.detach()
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump(stats.as_dict(), fh, indent=2)
            fh.write("\n")
    return 0


def _scheme_from_args(args) -> BucketScheme:
    return BucketScheme(base=args.base, min_exp=args.min_exp, count=args.buckets)


def _add_scheme_args(parser) -> None:
    parser.add_argument("--base", type=int, default=10,
                        help="logarithm base of the bucket grid (default 10)")
    parser.add_argument("--min-exp", type=int, default=-2,
                        help="lowest bucket label (default -2)")
    parser.add_argument("--buckets", type=int, default=12,
                        help="number of buckets (default 12)")


def _add_data_args(parser) -> None:
    parser.add_argument("--data", required=True,
                        help="scalar observations TSV: object, attribute, value, count")
    parser.add_argument("--embeddings", required=True,
                        help="embedding table file")
    parser.add_argument("--probe", required=True, choices=("rgr", "mcc"))
    parser.add_argument("--attribute", required=True,
                        choices=("mass", "length", "price"))
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="regularization strength (default: 1.0 rgr, 0.01 mcc)")
    parser.add_argument("--pca-k", type=int, default=150,
                        help="PCA dimension for small training sets (default 150)")
    parser.add_argument("--min-count", type=int, default=0,
                        help="drop objects with total observation count <= this "
                             "(default 0 = keep everything)")
    _add_scheme_args(parser)


def _build_dataset(args) -> ProbingDataset:
    records = load_scalar_records(args.data)
    min_total = args.min_count if args.min_count > 0 else None
    return ProbingDataset.from_records(records, args.attribute.upper(),
                                       scheme=_scheme_from_args(args),
                                       min_total=min_total)


def _cmd_train(args) -> int:
    dataset = _build_dataset(args)
    table = load_table(args.embeddings)
    objects = [o for o in dataset.objects if o in table.entries]
    if not objects:
        raise ValueError("no dataset object has an embedding in the table")
    cfg = TrainConfig(pca_k=args.pca_k)
    pipeline = fit_fold(dataset, table, objects, args.probe, lam=args.lam, cfg=cfg)
    save_pipeline(pipeline, args.out)
    summary = {"kind": args.probe, "n_objects": len(objects), "out": args.out}
    if args.probe == "mcc":
        summary["final_loss"] = pipeline.probe.final_loss
        summary["grad_norm"] = pipeline.probe.final_grad_norm
        summary["iterations"] = pipeline.probe.n_iters
    print(json.dumps(summary))
    return 0


def _cmd_evaluate(args) -> int:
    dataset = _build_dataset(args)
    table = load_table(args.embeddings)
    cfg = TrainConfig(pca_k=args.pca_k)
    report = run_cv(dataset, table, args.probe, cfg=cfg, lam=args.lam,
                    seed=args.seed, n_folds=args.folds)
    emit_report(report, args.out, fmt=args.format)
    print(f"wrote {args.out}")
    return 0


def _cmd_transfer_relative(args) -> int:
    pipeline = load_pipeline(args.probe_file)
    table = load_table(args.embeddings)
    pairs = load_relative_pairs(args.pairs)
    result = eval_relative(pipeline, table, pairs, tau=args.tau,
                           bucket_slack=args.bucket_slack)
    payload = {"accuracy": result.accuracy, "n_evaluated": result.n_evaluated,
               "n_skipped": result.n_skipped}
    _emit_json(payload, args.out)
    return 0


def _cmd_transfer_price(args) -> int:
    pipeline = load_pipeline(args.probe_file)
    if pipeline.scheme.base != 4:
        raise ValueError(
            f"price transfer expects a probe trained on a base-4 scheme, "
            f"got base {pipeline.scheme.base}")
    table = load_table(args.embeddings)
    with open(args.products, encoding="utf-8") as fh:
        raw = json.load(fh)
    dicts = raw["products"] if isinstance(raw, dict) else raw
    products = [EmpiricalDistribution.from_dict(d) for d in dicts]
    triple, n = eval_price_transfer(pipeline, table, products)
    payload = {
        "accuracy": triple.accuracy,
        "mse": triple.mse,
        "emd": triple.emd / pipeline.scheme.count,
        "emd_unnormalized": triple.emd,
        "n": n,
    }
    _emit_json(payload, args.out)
    return 0


def _emit_json(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalarprobe",
        description="Probe fixed object embeddings for scalar magnitude information.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("canonicalize",
                       help="rewrite numeric literals as <digits>[EXP]<exponent>")
    p.add_argument("--in", dest="infile", required=True, metavar="PATH",
                   help="input text file, or - for stdin")
    p.add_argument("--out", dest="outfile", required=True, metavar="PATH",
                   help="output text file, or - for stdout")
    p.add_argument("--stats", metavar="PATH",
                   help="write rewrite statistics to this JSON file")
    p.set_defaults(func=_cmd_canonicalize)

    p = sub.add_parser("train", help="fit a probe and save it as JSON")
    _add_data_args(p)
    p.add_argument("--seed", type=int, default=0,
                   help="accepted for interface parity; training is deterministic")
    p.add_argument("--out", default="probe.json", help="output probe file")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate",
                       help="cross-validated metrics for one probe and encoder")
    _add_data_args(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("transfer", help="zero-shot evaluations of a saved probe")
    tsub = p.add_subparsers(dest="transfer_command", required=True)

    t = tsub.add_parser("relative", help="pairwise bigger/smaller/similar accuracy")
    t.add_argument("--pairs", required=True,
                   help="TSV: object_a, object_b, attribute, label")
    t.add_argument("--probe-file", required=True, help="saved probe JSON")
    t.add_argument("--embeddings", required=True)
    t.add_argument("--tau", type=float, default=0.1,
                   help="log10 half-width of the rgr 'similar' band (default 0.1)")
    t.add_argument("--bucket-slack", type=int, default=0,
                   help="bucket distance mcc still calls 'similar' (default 0)")
    t.add_argument("--out", help="write result JSON here instead of stdout")
    t.set_defaults(func=_cmd_transfer_relative)

    t = tsub.add_parser("price", help="evaluate a base-4 probe on product prices")
    t.add_argument("--products", required=True,
                   help="JSON list of product price distributions")
    t.add_argument("--probe-file", required=True, help="saved probe JSON")
    t.add_argument("--embeddings", required=True)
    t.add_argument("--out", help="write result JSON here instead of stdout")
    t.set_defaults(func=_cmd_transfer_price)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"scalarprobe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
