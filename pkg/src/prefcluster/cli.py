"""Command-line entry point.

Exit codes: 0 success, 1 a stage failed, 2 usage or configuration error.
"""

import argparse
import json
import logging
import sys

from . import __version__
from .errors import ConfigurationError, PrefclusterError, StageError
from .pipeline import STAGES, PipelineConfig, derive_seed, read_config_file, run_pipeline, run_stage

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _bool(text):
    try:
        return _BOOL[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}") from None


def _ks(text):
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None


def _config_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline configuration (overrides --config)")
    g.add_argument("--config", help="key = value file with pipeline settings")
    g.add_argument("--input", help="delimited rating file (99 = missing)")
    g.add_argument("--has-count-column", type=_bool, nargs="?", const=True,
                   help="rows start with the number of rated jokes")
    g.add_argument("--test-fraction", type=float)
    g.add_argument("--n-hidden", type=int)
    g.add_argument("--cd-k", type=int)
    g.add_argument("--learning-rate", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--hopkins-m", type=int)
    g.add_argument("--elbow-ks", type=_ks, help='e.g. "1,2,3,4,5"')
    g.add_argument("--algorithm", choices=("kmodes", "kmeans"))
    g.add_argument("--init", choices=("cao", "random"))
    g.add_argument("--k", type=int, help="number of clusters (default: detected elbow)")
    g.add_argument("--n-restarts", type=int)
    g.add_argument("--output-dir", "--workdir", dest="output_dir")
    g.add_argument("--seed", type=int, help="master seed")
    return p


def build_config(args):
    values = read_config_file(args.config) if args.config else {}
    for name in PipelineConfig.__dataclass_fields__:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return PipelineConfig(**values)


def _print_stage(name, result, args):
    if name == "hopkins" and not args.json:
        print(f"hopkins h={result['h']:.6g} m={result['m']} seed={derive_seed(args.cfg.seed, 'hopkins')}")
    elif name == "elbow" and not args.json:
        for k, c in zip(result["ks"], result["costs"]):
            print(f"k={k} cost={c:g}")
        print("second differences: " + ", ".join(
            f"k={k}:{d:g}" for k, d in zip(result["ks"][1:-1], result["second_differences"])))
        print(f"detected k={result['detected_k']}")
    else:
        print(json.dumps(result, indent=2))


def _cmd_synth(args):
    from .synthetic import planted_corpus, write_ratings

    raw, _, _ = planted_corpus(args.users, args.jokes, args.archetypes, args.missing_rate, args.flip_rate,
                               args.seed if args.seed is not None else 0)
    write_ratings(args.out, raw, args.with_count_column)
    print(f"wrote {raw.n_users} x {raw.n_jokes} ratings to {args.out}")
    return 0


def make_parser():
    parent = _config_flags()
    parser = argparse.ArgumentParser(prog="prefcluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prefcluster {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[parent], help="run every stage and write manifest.json")
    helps = {
        "ingest": "load + binarize ratings, split users",
        "train-rbm": "train the RBM and report test MAE",
        "impute": "write D1 (all model ratings) and D2 (observed + imputed)",
        "hopkins": "Hopkins statistic on D1",
        "elbow": "elbow curve on D1 and detected k",
        "cluster": "fit the clustering model on D1",
        "preferences": "label D2 and write preference patterns (CSV + SVG)",
        "overlap": "cluster-overlap test on D2 under both metrics",
    }
    for name in STAGES:
        sp = sub.add_parser(name, parents=[parent], help=helps[name])
        if name in ("hopkins", "elbow"):
            sp.add_argument("--json", action="store_true", help="print the JSON report")

    sp = sub.add_parser("synth", help="write a synthetic corpus with planted archetypes")
    sp.add_argument("out")
    sp.add_argument("--users", type=int, default=1500)
    sp.add_argument("--jokes", type=int, default=100)
    sp.add_argument("--archetypes", type=int, default=3)
    sp.add_argument("--missing-rate", type=float, default=0.3)
    sp.add_argument("--flip-rate", type=float, default=0.05)
    sp.add_argument("--with-count-column", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth":
        return _cmd_synth(args)
    try:
        args.cfg = build_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"prefcluster: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            manifest = run_pipeline(args.cfg)
            print(json.dumps(manifest["results"], indent=2))
        else:
            _print_stage(args.command, run_stage(args.command, args.cfg), args)
    except StageError as exc:
        print(f"prefcluster: {exc}", file=sys.stderr)
        return 1
    except PrefclusterError as exc:
        print(f"prefcluster: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
