"""Command line entry point: ``concernmine <stage> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 backend or transport error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classify import BackendError, ParseError
from .corpus import write_posts
from .lda import LdaConfigError
from .metrics import MetricsError, write_labels
from .pipeline import (STAGES, ConfigError, PipelineConfig, PipelineError, parse_k_range, parse_states,
                       run_pipeline, run_stage)
from .synth import lda_corpus, lda_posts, tenant_corpus

log = logging.getLogger("concernmine")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=_u64, help="overrides the config seed everywhere")
    common.add_argument("--backend", choices=("http", "mock"))
    common.add_argument("--states", help="comma-separated USPS codes, or 'all'")
    common.add_argument("--period", choices=("year", "quarter", "month"))
    common.add_argument("--k-range", help="topic counts to scan, inclusive, e.g. 2..12")
    common.add_argument("--runs", type=int, help="classification runs for agreement")
    common.add_argument("--out", help="output directory")
    common.add_argument("--allow-stale", action="store_true",
                        help="proceed when upstream artifacts came from a different config")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="concernmine", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage")
    pl = sub.add_parser("pipeline", parents=[common], help="run every stage in order")
    pl.add_argument("--force", action="store_true", help="re-run stages that are up to date")
    sub.add_parser("config", parents=[common], help="print the resolved configuration")

    sy = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    sy.add_argument("--kind", choices=("tenant", "lda"), default="tenant")
    sy.add_argument("--n", type=int, default=100, help="number of posts")
    sy.add_argument("--topics", type=int, default=5, help="generating topics (lda kind)")
    sy.add_argument("--corpus-file", required=True, help="JSONL output path")
    sy.add_argument("--labels-file", help="labels output path (tenant kind)")
    return p


def resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    backend = dict(cfg.backend)
    if args.backend:
        backend["kind"] = "http_chat" if args.backend == "http" else "mock"
    return cfg.override(
        seed=args.seed,
        backend=backend if args.backend else None,
        states=parse_states(args.states) if args.states is not None else None,
        period=args.period,
        k_range=parse_k_range(args.k_range) if args.k_range else None,
        runs=args.runs,
        output=args.out,
    )


def _synth(args) -> dict:
    seed = args.seed or 0
    out = Path(args.corpus_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "lda":
        synth = lda_corpus(args.n, args.topics, 20, 50, seed=seed, doc_alpha=0.1, zipf=1.0)
        write_posts(lda_posts(synth), out)
        return {"posts": args.n, "topics": args.topics}
    tc = tenant_corpus(args.n, seed=seed)
    write_posts(tc.posts, out)
    if args.labels_file:
        write_labels(args.labels_file, tc.labels)
    return {"posts": len(tc.posts), "labels": len(tc.labels)}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            result = _synth(args)
        else:
            cfg = resolve_config(args)
            if args.command == "config":
                result = cfg.to_json()
            elif args.command == "pipeline":
                result = run_pipeline(cfg, force=args.force)
            else:
                result = run_stage(cfg, args.command, allow_stale=args.allow_stale)
    except (BackendError, ParseError) as e:
        print(f"concernmine: backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except (ConfigError, LdaConfigError) as e:
        print(f"concernmine: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as e:
        print(f"concernmine: {e}", file=sys.stderr)
        return e.exit_code
    except (MetricsError, OSError, ValueError) as e:
        print(f"concernmine: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps(result, indent=1, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
