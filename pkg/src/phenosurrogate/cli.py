"""Command-line entry point.

Exit codes: 0 on success, 1 when input or configuration fails validation,
2 when a computation fails at runtime.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, ExperimentConfig
from .dataset import SchemaError
from .evaluation import MODEL_KINDS

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

log = logging.getLogger("phenosurrogate")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; here 2 means a runtime failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phenosurrogate",
                     description="Phenotypic surrogate models for maze controllers.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, jobs=True):
        p.add_argument("--config", type=Path, help="experiment config JSON")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")
        p.add_argument("--replications", type=int, help="replication count (overrides config)")
        p.add_argument("--out", type=Path, help="run directory (overrides config)")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
        return p

    common(sub.add_parser("generate", help="run MAP-Elites and write datasets"))
    p = common(sub.add_parser("phenotype", help="re-sample phenotypes of existing archives"), jobs=False)
    p.add_argument("--ks", type=_int_list, help="probe sizes, e.g. 2,4,8 (default: config)")
    p = common(sub.add_parser("fit", help="fit one model on one dataset and print its tau"), jobs=False)
    p.add_argument("--subset", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, default="kriging")
    p.add_argument("--dataset", type=Path, help="dataset directory (default: first one under --out)")
    p = common(sub.add_parser("evaluate", help="evaluate models on every dataset and report"))
    p.add_argument("--subset", type=_str_list, help="comma-separated subsets (default: all)")
    p.add_argument("--model", type=_str_list, help="comma-separated model kinds (default: config)")
    common(sub.add_parser("analyze", help="PCA component counts only"))
    common(sub.add_parser("report", help="aggregate results into summaries and figure data"), jobs=False)
    return parser


def resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file {args.config} not found")
        cfg = ExperimentConfig.load(args.config)
    elif args.out is not None and (args.out / pipeline.CONFIG_FILE).exists() and args.command != "generate":
        cfg = ExperimentConfig.load(args.out / pipeline.CONFIG_FILE)
    else:
        cfg = ExperimentConfig()
    return cfg.with_overrides(base_seed=args.seed, replications=args.replications,
                              out=str(args.out) if args.out is not None else None)


def run(args) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.out)
    jobs = getattr(args, "jobs", 1)
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if args.command == "generate":
        for d in pipeline.generate(cfg, out, jobs):
            print(d)
    elif args.command == "phenotype":
        for d in pipeline.resample_phenotypes(cfg, out, args.ks):
            print(d)
    elif args.command == "fit":
        directory = args.dataset or pipeline.dataset_dirs(out)[0]
        res = pipeline.fit_single(cfg, directory, args.subset, args.model)
        if res.status == "failed":
            raise pipeline.PipelineError(res.error)
        print(f"{res.subset} {res.model} tau={res.kendall_tau:.6f} status={res.status}")
    elif args.command == "evaluate":
        pipeline.evaluate(cfg, out, args.subset, args.model, jobs, args.replications)
        print(out / pipeline.RESULTS_FILE)
    elif args.command == "analyze":
        print(pipeline.analyze(cfg, out, jobs, args.replications))
    elif args.command == "report":
        pipeline.report(out)
        print(out / "summary.json")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (ConfigError, SchemaError) as exc:
        problems = getattr(exc, "problems", [str(exc)])
        print("validation error:", file=sys.stderr)
        for p in problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
