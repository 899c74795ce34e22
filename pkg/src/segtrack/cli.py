"""Command-line front end.

Verbs: run (pipeline + metrics), eval (score pre-computed mask dirs),
decompose (error decomposition), sweep (k-axis study), speed (timing
table), gen (synthetic datasets).

Exit codes: 0 ok, 1 config error, 2 data error, 3 peer/transport error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench
from .errors import ConfigError, DataError, SegtrackError, TransportError


def _add_config_args(p):
    p.add_argument("-c", "--config", help="INI config file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config key (repeatable)",
    )


def _cmd_run(args):
    cfg = bench.load_config(args.config, args.overrides)
    if args.out:
        cfg.out = args.out
    paths = bench.run_benchmark(cfg)
    print(f"report written: {paths['json']}")
    return 0


def _cmd_sweep(args):
    cfg = bench.load_config(args.config, args.overrides)
    if args.out:
        cfg.out = args.out
    if args.k_list:
        cfg.k_list = tuple(float(v) for v in args.k_list.split(","))
    elif len(cfg.k_list) == 1:
        cfg.k_list = (1.0, 1.25, 1.5, 1.75, 2.0)
    paths = bench.run_benchmark(cfg)
    print(f"sweep report written: {paths['json']}")
    return 0


def _cmd_eval(args):
    layout = bench.DatasetLayout(kind=args.kind, root=args.dataset, split=args.split)
    rows = bench.evaluate_mask_dir(args.pred, layout)
    json.dump({"rows": rows}, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _value_or_report(text, measure):
    try:
        return float(text)
    except ValueError:
        pass
    with open(text) as fh:
        report = json.load(fh)
    aggs = report.get("aggregates", [])
    if not aggs:
        raise DataError(f"report {text!r} has no aggregates")
    if measure not in aggs[0]:
        raise DataError(f"report {text!r} has no measure {measure!r}")
    return float(aggs[0][measure])


def _cmd_decompose(args):
    vals = [_value_or_report(v, args.measure) for v in
            (args.p_oracle_rect, args.p_t_rect, args.p_oracle_s, args.p_t_s)]
    d = bench.decompose_error(*vals, measure=args.measure)
    print(json.dumps(
        {"measure": d.measure, "e_tracker": d.e_tracker, "e_segmenter": d.e_segmenter}
    ))
    return 0


def _cmd_speed(args):
    with open(args.report) as fh:
        data = json.load(fh)
    print(f"{'sequence':24s} {'object':>6s} {'s/frame':>10s} {'FPS':>8s}")
    for row in data["rows"]:
        print(
            f"{row['sequence']:24s} {row['object']!s:>6s} "
            f"{row['mean_s']:10.4f} {row['fps']:8.1f}"
        )
    return 0


def _cmd_gen(args):
    with open(args.spec) as fh:
        data = json.load(fh)
    seqs = []
    for entry in data.get("sequences", []):
        entry = {k: tuple(v) if isinstance(v, list) else v for k, v in entry.items()}
        seqs.append(bench.gen_synthetic(bench.SyntheticSpec(**entry)))
    if not seqs:
        raise DataError(f"{args.spec!r} describes no sequences")
    bench.write_davis_dataset(seqs, args.out, split=args.split)
    print(f"wrote {len(seqs)} sequence(s) to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="segtrack", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("run", help="execute pipeline + metrics")
    _add_config_args(sp)
    sp.add_argument("-o", "--out", help="output directory")
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("sweep", help="searching-area factor study")
    _add_config_args(sp)
    sp.add_argument("-o", "--out", help="output directory")
    sp.add_argument("--k-list", help="comma-separated k values")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("eval", help="score pre-computed mask directories")
    sp.add_argument("pred", help="prediction root (pred/<seq>/NNNNN.png)")
    sp.add_argument("dataset", help="dataset root")
    sp.add_argument("--kind", default="davis-style",
                    choices=["davis-style", "vot-style", "synthetic"])
    sp.add_argument("--split", default="val")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("decompose", help="tracker/segmenter error decomposition")
    sp.add_argument("p_oracle_rect", help="number or report JSON")
    sp.add_argument("p_t_rect", help="number or report JSON")
    sp.add_argument("p_oracle_s", help="number or report JSON")
    sp.add_argument("p_t_s", help="number or report JSON")
    sp.add_argument("--measure", default="A")
    sp.set_defaults(func=_cmd_decompose)

    sp = sub.add_parser("speed", help="print a timing table from a speed report")
    sp.add_argument("report", help="speed.json from a run")
    sp.set_defaults(func=_cmd_speed)

    sp = sub.add_parser("gen", help="generate a synthetic dataset")
    sp.add_argument("spec", help="synthetic.json spec file")
    sp.add_argument("-o", "--out", required=True, help="dataset root to write")
    sp.add_argument("--split", default="val")
    sp.set_defaults(func=_cmd_gen)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SegtrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
