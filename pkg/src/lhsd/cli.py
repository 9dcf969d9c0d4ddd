"""Command line entry point: ``lhsd sample | study | oracle``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .bench.runner import ExperimentConfig, run_study
from .bench.studies import STUDIES, build_study, tau_oracle
from .config import load_json, model_from_dict
from .sampler import SCHEMES, draw


def _ordering(text):
    return [int(v) for v in text.split(",")] if text else None


def cmd_sample(args) -> int:
    model = model_from_dict(load_json(args.model))
    sm = draw(model, args.scheme, args.n, args.seed, _ordering(args.ordering), args.mode)
    if args.out:
        sidecar = sm.to_csv(args.out)
        print(f"wrote {args.out} and {sidecar}")
    else:
        print(",".join(sm.names))
        for row in sm.x:
            print(",".join(repr(float(v)) for v in row))
    return 0


def cmd_study(args) -> int:
    data = load_json(args.config)
    if args.out_dir:
        data["out_dir"] = args.out_dir
    if args.workers:
        data["workers"] = args.workers
    if args.full_scale:
        data["full_scale"] = True
    report = run_study(ExperimentConfig.from_dict(data))
    print(f"study={report.config.study} n={report.config.n} reps={report.config.reps} "
          f"tau={report.tau:.6g} (se {report.tau_se:.2g})")
    print(f"{'scheme':<12}{'bias':>10}{'variance':>12}{'mse':>12}")
    for s, r in report.results.items():
        print(f"{s:<12}{r.bias:>10.4f}{r.variance:>12.4f}{r.mse:>12.4f}")
    if report.theory:
        print(f"theory: n*Var lhsd={report.theory['lhsd']:.4f} srs={report.theory['srs']:.4f}")
    if report.config.out_dir:
        print(f"outputs in {report.config.out_dir}")
    return 0


def cmd_oracle(args) -> int:
    result = tau_oracle(build_study(args.study), args.n, args.seed)
    print(json.dumps({"study": args.study, **result.to_dict()}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhsd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one sample matrix")
    p.add_argument("--model", required=True, help="JSON model specification")
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("jittered", "centered"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ordering", default=None, help="comma-separated 0-based component order")
    p.add_argument("--out", default=None, help="CSV path; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("study", help="run a replicated sampling study")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--full-scale", action="store_true", help="use 10,000 replications")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("oracle", help="large-sample reference value of E h(X)")
    p.add_argument("--study", required=True, choices=STUDIES)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
