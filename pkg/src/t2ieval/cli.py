"""Command-line entry point: describe, score, baseline, correlate, report, cache.

Stages write JSONL/CSV/markdown/HTML artifacts into the output directory and
resume from whatever already exists there. The exit code is 0 only when no
per-pair failure occurred.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import OBJECTIVE_CHOICES, RATING_MODES, RunConfig, load_config, make_gateway
from .datasets import join_pairs, load_manifest, load_prompts, load_ratings
from .errors import HarnessError
from .gateway import CACHE_MODES, ResponseCache
from .pipeline import (
    BASELINE_VARIANTS,
    StageResult,
    load_descriptions,
    read_jsonl,
    run_baseline,
    run_describe,
    run_score,
)
from .report import build_report, render_csv, render_markdown, render_showcase

log = logging.getLogger(__name__)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (endpoints, cache, ...)")
    common.add_argument("--cache", choices=CACHE_MODES, dest="cache_mode",
                        help="override the config cache mode")
    common.add_argument("--mode", choices=RATING_MODES,
                        help="rating mode for the overall objective")
    common.add_argument("--scale-n", type=int, dest="scale_n",
                        help="width of the integer rating scale (default 100)")
    common.add_argument("--objectives",
                        help="comma-separated subset of: " + ",".join(OBJECTIVE_CHOICES))
    common.add_argument("--parallelism", type=int, help="pairs in flight per stage")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--out", help="output directory (default: config output_dir)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="t2ieval", description=__doc__)
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", parents=[common],
                       help="build object-centric descriptions for every pair")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("score", parents=[common],
                       help="rate every (pair, objective) with the LLM judge")
    p.add_argument("--manifest", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--descriptions", help="default: <out>/descriptions.jsonl")

    p = sub.add_parser("baseline", parents=[common],
                       help="emit baseline metric scores per pair")
    p.add_argument("--manifest", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--descriptions", help="default: <out>/descriptions.jsonl")
    p.add_argument("--variants", default=",".join(BASELINE_VARIANTS),
                   help="comma-separated variant names")

    p = sub.add_parser("correlate", parents=[common],
                       help="correlate metric scores against human ratings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--scores", help="default: <out>/scores.jsonl")
    p.add_argument("--tau-variant", choices=("a", "b"), default="b")

    p = sub.add_parser("report", parents=[common],
                       help="render the static per-pair showcase page")
    p.add_argument("--manifest", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--descriptions", help="default: <out>/descriptions.jsonl")
    p.add_argument("--scores", help="default: <out>/scores.jsonl")

    p = sub.add_parser("cache", parents=[common], help="inspect or clear the cache")
    p.add_argument("action", choices=("ls", "gc"))
    p.add_argument("--role", help="restrict to one backend role")
    return parser


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    for name in ("cache_mode", "mode", "scale_n", "parallelism", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if getattr(args, "objectives", None):
        config.objectives = tuple(args.objectives.split(","))
    if getattr(args, "out", None):
        config.output_dir = args.out
    config.__post_init__()
    return config


def _out_path(config: RunConfig, args, attr: str, default_name: str) -> Path:
    explicit = getattr(args, attr, None)
    if explicit:
        return Path(explicit)
    return Path(config.output_dir) / default_name


def _finish(result: StageResult, stage: str) -> int:
    print(f"{stage}: {result.processed} processed, {result.skipped} skipped, "
          f"{len(result.failures)} failed")
    for pair_id, reason in result.failures:
        print(f"  FAIL {pair_id}: {reason}")
    return 0 if result.ok else 1


def cmd_describe(args) -> int:
    config = _resolve_config(args)
    gateway = make_gateway(config)
    manifest = load_manifest(args.manifest)
    out = Path(config.output_dir) / "descriptions.jsonl"
    result = run_describe(gateway, config.endpoints, manifest, out,
                          parallelism=config.parallelism)
    return _finish(result, "describe")


def cmd_score(args) -> int:
    config = _resolve_config(args)
    gateway = make_gateway(config)
    prompts = load_prompts(args.prompts)
    manifest = load_manifest(args.manifest, check_images=False)
    pairs = join_pairs(prompts, manifest, [], require_ratings=False)
    descriptions = load_descriptions(
        _out_path(config, args, "descriptions", "descriptions.jsonl"))
    out = Path(config.output_dir) / "scores.jsonl"
    result = run_score(gateway, config.endpoints, pairs, descriptions, out,
                       objectives=config.objectives, mode=config.mode,
                       scale_n=config.scale_n, parallelism=config.parallelism,
                       with_rationale=config.with_rationale)
    return _finish(result, "score")


def cmd_baseline(args) -> int:
    config = _resolve_config(args)
    gateway = make_gateway(config)
    prompts = load_prompts(args.prompts)
    manifest = load_manifest(args.manifest)
    pairs = join_pairs(prompts, manifest, [], require_ratings=False)
    descriptions = load_descriptions(
        _out_path(config, args, "descriptions", "descriptions.jsonl"))
    out = Path(config.output_dir) / "scores.jsonl"
    result = run_baseline(gateway, config.endpoints, pairs, descriptions, out,
                          variants=tuple(args.variants.split(",")),
                          parallelism=config.parallelism)
    return _finish(result, "baseline")


def cmd_correlate(args) -> int:
    config = _resolve_config(args)
    prompts = load_prompts(args.prompts)
    manifest = load_manifest(args.manifest, check_images=False)
    ratings = load_ratings(args.ratings)
    joined = join_pairs(prompts, manifest, ratings, require_ratings=True)
    scores = read_jsonl(_out_path(config, args, "scores", "scores.jsonl"))
    rows, aggregates = build_report(joined, scores,
                                    objectives=config.objectives,
                                    tau_variant=args.tau_variant)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(render_csv(rows, aggregates), "utf-8")
    (out_dir / "report.md").write_text(render_markdown(rows, aggregates), "utf-8")
    print(f"correlate: {len(rows)} cells, {len(aggregates)} aggregates "
          f"-> {out_dir / 'report.csv'}")
    return 0


def cmd_report(args) -> int:
    config = _resolve_config(args)
    prompts = load_prompts(args.prompts)
    manifest = load_manifest(args.manifest, check_images=False)
    joined = join_pairs(prompts, manifest, [], require_ratings=False)
    descriptions = {r["pair_id"]: r for r in read_jsonl(
        _out_path(config, args, "descriptions", "descriptions.jsonl"))}
    scores = read_jsonl(_out_path(config, args, "scores", "scores.jsonl"))
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    page = render_showcase(joined, descriptions, scores)
    (out_dir / "showcase.html").write_text(page, "utf-8")
    print(f"report: {len(joined)} pairs -> {out_dir / 'showcase.html'}")
    return 0


def cmd_cache(args) -> int:
    config = _resolve_config(args)
    if not config.cache_dir:
        print("error: no cache_dir configured", file=sys.stderr)
        return 2
    cache = ResponseCache(config.cache_dir, "replay")
    entries = [(role, key, path) for role, key, path in cache.entries()
               if args.role is None or role == args.role]
    if args.action == "ls":
        for role, key, path in entries:
            print(f"{role}\t{key}\t{path.stat().st_size}")
        print(f"{len(entries)} entries")
        return 0
    for _, _, path in entries:
        path.unlink()
    print(f"removed {len(entries)} entries")
    return 0


_COMMANDS = {
    "describe": cmd_describe,
    "score": cmd_score,
    "baseline": cmd_baseline,
    "correlate": cmd_correlate,
    "report": cmd_report,
    "cache": cmd_cache,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
