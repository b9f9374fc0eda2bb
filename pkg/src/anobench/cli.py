"""Command-line entry point.

    anobench generate --synthetic --levels rf=rf-4 pd=pd-0 nc=nc-0 fi=fi-0 \
        --replicates 5 --out corpus/
    anobench run --manifest corpus/manifest.json
    anobench evaluate --manifest corpus/manifest.json
    anobench report --manifest corpus/manifest.json --filter fi=fi-3

Flags override the manifest; the effective manifest is written to the output
root so later stages can run from it alone.  Exit codes: 0 success, 1 fatal
error, 2 partial failure (some cells errored but the corpus completed).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .levels import DIMENSIONS, validate_level
from .pipeline import RunManifest, cmd_evaluate, cmd_generate, cmd_report, cmd_run

logger = logging.getLogger("anobench")


def _parse_levels(tokens: list[str]) -> dict[str, list[str]]:
    levels: dict[str, list[str]] = {}
    for token in tokens:
        if "=" not in token:
            raise SystemExit(f"--levels entries look like dim=level[,level...], got {token!r}")
        dim, spec = token.split("=", 1)
        dim = dim.strip()
        if dim not in DIMENSIONS:
            raise SystemExit(f"unknown dimension {dim!r} in --levels")
        levels[dim] = [validate_level(dim, v.strip()) for v in spec.split(",")]
    return levels


def _parse_mothersets(tokens: list[str]) -> list[dict]:
    """NAME=PATH:TARGET:TASK entries for ad-hoc runs without a manifest file."""
    out = []
    for token in tokens:
        name, _, rest = token.partition("=")
        parts = rest.split(":")
        if len(parts) != 3:
            raise SystemExit(
                f"--motherset entries look like NAME=PATH:TARGET_COLUMN:TASK, got {token!r}"
            )
        out.append(
            {
                "name": name,
                "path": parts[0],
                "target_column": parts[1],
                "task_kind": parts[2],
            }
        )
    return out


def _build_manifest(args: argparse.Namespace) -> RunManifest:
    if args.manifest:
        manifest = RunManifest.load(args.manifest)
    else:
        manifest = RunManifest()
    if args.out:
        manifest.output_root = args.out
    if args.seed is not None:
        manifest.master_seed = args.seed
    if getattr(args, "levels", None):
        manifest.levels = _parse_levels(args.levels)
    if getattr(args, "replicates", None) is not None:
        manifest.replicates = args.replicates
    if getattr(args, "detectors", None):
        manifest.detectors = [{"name": n, "parameters": {}} for n in args.detectors]
    if getattr(args, "alpha", None):
        manifest.alphas = [float(a) for a in args.alpha]
    if args.workers is not None:
        manifest.workers = args.workers
    if getattr(args, "synthetic", False):
        names = {m["name"] for m in manifest.mothersets}
        if "synthetic" not in names:
            manifest.mothersets.append({"name": "synthetic", "synthetic": True})
    if getattr(args, "motherset", None):
        manifest.mothersets.extend(_parse_mothersets(args.motherset))
    return manifest


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", help="run manifest JSON (flags override it)")
    parser.add_argument("--out", help="output root directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--workers", type=int, default=None, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anobench",
        description="Synthesize, score, and evaluate anomaly-detection benchmarks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="materialize the benchmark corpus")
    _add_common(p_gen)
    p_gen.add_argument("--synthetic", action="store_true", help="include the synthetic motherset")
    p_gen.add_argument(
        "--motherset",
        nargs="+",
        default=None,
        metavar="NAME=PATH:TARGET:TASK",
        help="add a file-backed motherset",
    )
    p_gen.add_argument("--levels", nargs="+", default=None, metavar="dim=level[,level]")
    p_gen.add_argument("--replicates", type=int, default=None)

    p_run = sub.add_parser("run", help="score benchmarks with the detector suite")
    _add_common(p_run)
    p_run.add_argument("--detectors", nargs="+", default=None)

    p_eval = sub.add_parser("evaluate", help="metrics, null tests, failure flags")
    _add_common(p_eval)
    p_eval.add_argument("--alpha", nargs="+", default=None)

    p_rep = sub.add_parser("report", help="summary tables and report document")
    _add_common(p_rep)
    p_rep.add_argument("--alpha", nargs="+", default=None)
    p_rep.add_argument("--filter", nargs="+", default=None, metavar="dim=level")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        manifest = _build_manifest(args)
        if args.command == "generate":
            summary = cmd_generate(manifest)
            print(
                f"generated {summary['benchmarks_written']} benchmarks "
                f"({summary['specs_infeasible']} infeasible specs logged)"
            )
            return 0
        if args.command == "run":
            summary = cmd_run(manifest)
            print(
                f"scored {summary['ok']} cells, skipped {summary['skipped']}, "
                f"errors {summary['error']}"
            )
            return 2 if summary["error"] else 0
        if args.command == "evaluate":
            summary = cmd_evaluate(manifest)
            print(
                f"evaluation table: {summary['rows']} rows over "
                f"{summary['benchmarks']} benchmarks"
            )
            return 2 if summary["missing_scores"] else 0
        if args.command == "report":
            alpha = float(args.alpha[0]) if args.alpha else 0.001
            summary = cmd_report(manifest, alpha=alpha, filters=args.filter)
            print(f"wrote {summary['tables']} tables to {summary['report']}")
            return 0
        raise SystemExit(f"unknown command {args.command!r}")
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
