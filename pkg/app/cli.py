"""Batch command-line interface.

Every subcommand resolves its settings as flag > run-config file > environment
default, echoes the effective settings into its JSON output record and prints a
short human-readable table on stdout. Diagnostics go to stderr through the
shared logger; the process exit status follows ``app.core.errors``.
"""

import argparse
import sys
from typing import Any, Callable, Optional, Sequence

import pandas as pd

from app import __version__
from app.augment.commands import get_crop_command
from app.boxopt.commands import get_optimize_size_command
from app.core.config import LOGGER, Config, configure_log_level, load_config_file, resolve_settings
from app.core.errors import EXIT_INTERNAL, EXIT_OK, InputContractError, UsageError, describe, exit_code_for
from app.evaluation.commands import get_evaluate_command, get_sweep_command, report_frame, sweep_frame
from app.matching.commands import get_match_command, match_config_from_settings
from app.matching.schemas import MatchStrategy
from app.pipeline.commands import get_pipeline_command
from app.postprocess.commands import get_apply_size_command
from app.responses.builder import render_table
from app.simdet.commands import get_simulate_command, simulation_config_from_settings

JITTER_SOURCES = ("jitter", "deterministic", "gaussian", "uniform_radial")


class CliParser(argparse.ArgumentParser):
    """argparse reports usage problems through ``UsageError`` instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ── settings ───────────────────────────────────────────────────

def _global_defaults() -> dict[str, Any]:
    config = Config()
    return {"gt_side": config.gt_side, "workers": config.workers}


def _settings(args: argparse.Namespace, command: str, defaults: dict[str, Any]) -> dict[str, Any]:
    file_cfg = load_config_file(args.config)
    section = {**(file_cfg.get("global") or {}), **(file_cfg.get(command) or {})}
    merged_defaults = {**_global_defaults(), **defaults}
    flags = {key: getattr(args, key, None) for key in merged_defaults}
    settings = resolve_settings(merged_defaults, section, flags)
    if settings["workers"] < 1:
        raise UsageError(f"--workers must be >= 1, got {settings['workers']}")
    if settings["gt_side"] <= 0:
        raise UsageError(f"--gt-side must be positive, got {settings['gt_side']}")
    strategies = [s.value for s in MatchStrategy]
    if "strategy" in settings and settings["strategy"] not in strategies:
        raise InputContractError(f"field 'strategy': expected one of {strategies}, got {settings['strategy']!r}")
    return settings


def _eval_defaults() -> dict[str, Any]:
    return {"class_agnostic": False, "iou_thresholds": None, "max_dets": 100, "recall_points": 101}


def _apply_track(args: argparse.Namespace):
    if args.track is None:
        return
    agnostic = args.track == "B"
    if args.class_agnostic is not None and args.class_agnostic != agnostic:
        raise UsageError(f"--track {args.track} conflicts with --class-agnostic")
    args.class_agnostic = agnostic


def _print(frame: pd.DataFrame):
    print(render_table(frame))


# ── subcommand handlers ────────────────────────────────────────

def _match(args: argparse.Namespace) -> int:
    settings = _settings(args, "match", {
        "strategy": Config().match_strategy,
        "max_center_distance": None,
    })
    cfg = match_config_from_settings(settings)
    pairs, summary = get_match_command().execute(
        args.gt, args.dets, cfg, args.output, args.summary,
        gt_side=settings["gt_side"], workers=settings["workers"], settings=settings)
    _print(pd.DataFrame([summary.model_dump(exclude={"radial_quantiles"})]))
    return EXIT_OK


def _optimize_size(args: argparse.Namespace) -> int:
    defaults = {key: None for key in (*JITTER_SOURCES, "model", "range", "mc_samples")}
    defaults.update({"step": 0.25, "tol": 0.01, "seed": Config().seed})
    settings = _settings(args, "optimize-size", defaults)
    if any(getattr(args, key) is not None for key in JITTER_SOURCES):
        for key in ("model", *JITTER_SOURCES):
            if getattr(args, key, None) is None:
                settings[key] = None
    result, mc_value = get_optimize_size_command().execute(settings, args.output, args.curve)
    row = {"s_star": result.s_star, "expected_iou": result.expected_iou_at_star, "model": result.model_kind}
    if mc_value is not None:
        row["monte_carlo_iou"] = mc_value
    _print(pd.DataFrame([row]))
    return EXIT_OK


def _apply_size(args: argparse.Namespace) -> int:
    settings = _settings(args, "apply-size", {"size": None, "result": None, "clip_to": None})
    clip_to = tuple(settings["clip_to"]) if settings["clip_to"] is not None else None
    size, rewritten = get_apply_size_command().execute(
        args.dets, args.output, settings["size"], settings["result"], clip_to)
    _print(pd.DataFrame([{"size": size, "detections": len(rewritten)}]))
    return EXIT_OK


def _evaluate(args: argparse.Namespace) -> int:
    _apply_track(args)
    settings = _settings(args, "evaluate", _eval_defaults())
    report = get_evaluate_command().execute(args.gt, args.dets, settings, args.output)
    _print(report_frame(report))
    return EXIT_OK


def _sweep(args: argparse.Namespace) -> int:
    _apply_track(args)
    settings = _settings(args, "sweep", {**_eval_defaults(), "sizes": None, "size_range": None})
    points = get_sweep_command().execute(args.gt, args.dets, settings, args.output, args.table)
    _print(sweep_frame(points))
    return EXIT_OK


def _crop(args: argparse.Namespace) -> int:
    settings = _settings(args, "crop", {"window": None, "tile": None, "overlap": None, "clip_boxes": True})
    manifest = get_crop_command().execute(args.gt, settings, args.output)
    frame = pd.DataFrame(
        [{"image_id": t.image_id, "tile": t.tile_index, "annotations": len(t.annotations)} for t in manifest.tiles],
        columns=["image_id", "tile", "annotations"])
    _print(frame)
    return EXIT_OK


def _simulate(args: argparse.Namespace) -> int:
    file_cfg = load_config_file(args.config)
    flags = {key: getattr(args, key) for key in (
        "images", "seed", "sigma", "deterministic", "miss_rate", "fp_rate", "objects", "extent", "separation")}
    flags["gt_side"] = args.gt_side
    sim = simulation_config_from_settings(file_cfg.get("simulate"), flags)
    workers = args.workers if args.workers is not None else Config().workers
    dataset, detections = get_simulate_command().execute(sim, args.gt_out, args.det_out, workers)
    _print(pd.DataFrame([{
        "images": len(dataset.images),
        "ground_truth": len(dataset.annotations),
        "detections": len(detections),
    }]))
    return EXIT_OK


def _pipeline(args: argparse.Namespace) -> int:
    _apply_track(args)
    settings = _settings(args, "pipeline", {
        **_eval_defaults(),
        "strategy": Config().match_strategy,
        "max_center_distance": None,
        "range": None,
        "step": 0.25,
        "tol": 0.01,
    })
    report = get_pipeline_command().execute(
        args.gt, args.dets, settings, args.output, args.det_out, args.pairs_out)
    _print(pd.DataFrame([
        {"boxes": "as given", "size": None, "map": report.baseline.map},
        {"boxes": "fixed", "size": report.gt_side, "map": report.at_gt_side.map},
        {"boxes": "fixed", "size": report.s_star, "map": report.at_star.map},
    ]))
    return EXIT_OK


# ── parser ─────────────────────────────────────────────────────

def _add_eval_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--class-agnostic", action="store_const", const=True, default=None,
                        help="pool all classes (detection-only track)")
    parser.add_argument("--track", choices=("A", "B"), help="A: class-aware, B: class-agnostic")
    parser.add_argument("--iou-thresholds", type=float, nargs="+", metavar="T")
    parser.add_argument("--max-dets", type=int, help="detections kept per image per class (default 100)")
    parser.add_argument("--recall-points", type=int, help="101 (COCO) or 0 for all-point AP")


def _add_search_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"),
                        help="search range for S (default G-5 .. G+15)")
    parser.add_argument("--step", type=float, help="grid step (default 0.25)")
    parser.add_argument("--tol", type=float, help="golden-section tolerance (default 0.01)")


def _add_match_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--strategy", choices=[s.value for s in MatchStrategy])
    parser.add_argument("--max-distance", dest="max_center_distance", type=float,
                        help="match radius in pixels (default G/2)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="centerbox", description="Fixed-size box optimization for center-annotated detection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="YAML run-config file")
    parser.add_argument("--gt-side", type=float, help="ground-truth box side G (default 100)")
    parser.add_argument("--workers", type=int, help="worker threads (default 1)")
    parser.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), type=str.upper)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = command("match", _match, "match detections to GT and write jitter samples")
    p.add_argument("gt")
    p.add_argument("dets")
    p.add_argument("-o", "--output", required=True, help="jitter samples (NDJSON)")
    p.add_argument("--summary", help="jitter summary record (JSON)")
    _add_match_flags(p)

    p = command("optimize-size", _optimize_size, "find the box size S* maximizing expected IoU")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--jitter", help="jitter samples file from 'match'")
    source.add_argument("--deterministic", type=float, nargs=2, metavar=("DX", "DY"))
    source.add_argument("--gaussian", type=float, metavar="SIGMA")
    source.add_argument("--uniform-radial", type=float, nargs=2, metavar=("LO", "HI"))
    _add_search_flags(p)
    p.add_argument("--mc-samples", type=int, help="Monte-Carlo cross-check at S*")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--curve", help="tab-separated (size, expected_iou) curve")

    p = command("apply-size", _apply_size, "rewrite every detection box to S x S")
    p.add_argument("dets")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--size", type=float)
    size.add_argument("--result", help="optimize-size record to read S* from")
    p.add_argument("--clip-to", type=float, nargs=2, metavar=("W", "H"))
    p.add_argument("-o", "--output", required=True)

    p = command("evaluate", _evaluate, "COCO-style mAP")
    p.add_argument("gt")
    p.add_argument("dets")
    _add_eval_flags(p)
    p.add_argument("-o", "--output")

    p = command("sweep", _sweep, "mAP as a function of the fixed box size")
    p.add_argument("gt")
    p.add_argument("dets")
    sizes = p.add_mutually_exclusive_group()
    sizes.add_argument("--sizes", type=float, nargs="+", metavar="S")
    sizes.add_argument("--size-range", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    _add_eval_flags(p)
    p.add_argument("-o", "--output")
    p.add_argument("--table", help="tab-separated (size, map) table")

    p = command("crop", _crop, "crop annotations into windows or tiles")
    p.add_argument("gt")
    windows = p.add_mutually_exclusive_group()
    windows.add_argument("--window", type=float, nargs=4, action="append",
                         metavar=("X_MIN", "Y_MIN", "X_MAX", "Y_MAX"))
    windows.add_argument("--tile", type=float, nargs=2, metavar=("W", "H"))
    p.add_argument("--overlap", type=float, help="tile overlap (default: largest GT side)")
    p.add_argument("--no-clip", dest="clip_boxes", action="store_const", const=False, default=None)
    p.add_argument("-o", "--output", required=True)

    p = command("simulate", _simulate, "synthetic scenes and a noisy detector")
    p.add_argument("--images", type=int)
    p.add_argument("--seed", type=int)
    jitter = p.add_mutually_exclusive_group()
    jitter.add_argument("--sigma", type=float, help="Gaussian center jitter")
    jitter.add_argument("--deterministic", type=float, nargs=2, metavar=("DX", "DY"))
    p.add_argument("--miss-rate", type=float)
    p.add_argument("--fp-rate", type=float, help="expected false positives per image")
    p.add_argument("--objects", type=int, help="objects per image")
    p.add_argument("--extent", type=float, nargs=2, metavar=("W", "H"))
    p.add_argument("--separation", type=float, help="minimum center separation")
    p.add_argument("--gt-out", required=True)
    p.add_argument("--det-out", required=True)

    p = command("pipeline", _pipeline, "match, estimate jitter, optimize S*, apply and evaluate")
    p.add_argument("gt")
    p.add_argument("dets")
    _add_match_flags(p)
    _add_search_flags(p)
    _add_eval_flags(p)
    p.add_argument("-o", "--output")
    p.add_argument("--det-out", help="detections resized to S*")
    p.add_argument("--pairs-out", help="jitter samples (NDJSON)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_log_level(args.log_level)
        return args.handler(args)
    except Exception as exc:
        code = exit_code_for(exc)
        LOGGER.error(describe(exc))
        if code == EXIT_INTERNAL:
            LOGGER.debug("internal error", exc_info=exc)
        return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
