"""``motionshot`` command line.

Subcommands follow the pipeline: ``motion`` (one frame pair), ``activity``
(intensity timeline), ``detect`` (shot list), ``eval`` (scoring) and
``psnr-bench`` (ES vs ARPS compensation quality).

Exit status: 0 on success, 2 on usage or input errors, 1 on internal failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

from . import __version__
from ._backend import BACKEND
from .block_matching import (
    SEARCHES,
    BlockGridSpec,
    motion_compensate,
    psnr,
    search_stats,
    write_field_csv,
)
from .evaluation import ParseError, format_report, load_detected, load_ground_truth, score
from .frame_io import FrameIOError, SourceFormat, open_source, read_frame
from .motion_activity import EmptyField, NegativeIntensity
from .shot_detector import (
    EmptySignal,
    ThresholdPolicy,
    TooFewFrames,
    TooFewSamples,
    build_timeline,
    detect,
    write_boundaries,
    write_signal_csv,
    write_timeline_csv,
)

log = logging.getLogger("motionshot")

INPUT_ERRORS = (
    FrameIOError,
    ParseError,
    TooFewFrames,
    TooFewSamples,
    EmptySignal,
    EmptyField,
    NegativeIntensity,
    OSError,
)


class _Once(argparse.Action):
    """``store`` that rejects a repeated option."""

    def __call__(self, parser, namespace, values, option_string=None):
        seen = namespace.__dict__.setdefault("_seen", set())
        if self.dest in seen:
            parser.error(f"{option_string} given more than once")
        seen.add(self.dest)
        setattr(namespace, self.dest, values)


class _OnceTrue(_Once):
    def __init__(self, option_strings, dest, default=False, required=False, help=None):
        super().__init__(option_strings, dest, nargs=0, default=default, required=required, help=help)

    def __call__(self, parser, namespace, values, option_string=None):
        super().__call__(parser, namespace, True, option_string)


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)
        self.register("action", None, _Once)
        self.register("action", "store", _Once)
        self.register("action", "store_true", _OnceTrue)


def _input_options() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("input")
    g.add_argument("--input", "-i", required=True, help="Y4M file, raw I420 file, or directory of PGM frames")
    g.add_argument("--format", choices=[f.value for f in SourceFormat], help="force the container (default: sniff)")
    g.add_argument("--width", type=int, help="frame width (raw I420 only)")
    g.add_argument("--height", type=int, help="frame height (raw I420 only)")
    g = p.add_argument_group("block matching")
    g.add_argument("--block-size", type=int, default=16, help="macroblock side in pixels")
    g.add_argument("--search-range", type=int, default=7, help="search window radius p per axis")
    return p


def _timeline_options() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("timeline")
    g.add_argument("--step", type=int, default=2, help="frame distance within each analysed pair")
    g.add_argument("--stride", type=int, help="distance between pair starts (default: --step)")
    g.add_argument("--filter-low-activity", action="store_true", help="zero blocks below the mean magnitude")
    g.add_argument("--algo", choices=sorted(SEARCHES), default="arps", help="motion search")
    g.add_argument("--jobs", type=int, default=1, help="frame pairs processed concurrently")
    return p


def _output_options(default: str = "json") -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("output")
    g.add_argument("--output", choices=["json", "csv", "text"], default=default, help="output format")
    g.add_argument("--out", "-o", help="output path (default: stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="motionshot", description="Shot boundary detection from motion activity intensity.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    io_opts, tl_opts = _input_options(), _timeline_options()

    p = sub.add_parser("motion", parents=[io_opts, _output_options()], help="motion field for one frame pair")
    p.add_argument("--frame-a", type=int, default=0, help="reference frame index")
    p.add_argument("--frame-b", type=int, default=1, help="current frame index")
    p.add_argument("--algo", choices=sorted(SEARCHES), default="arps", help="motion search")

    sub.add_parser("activity", parents=[io_opts, tl_opts, _output_options()], help="intensity timeline")

    p = sub.add_parser("detect", parents=[io_opts, tl_opts, _output_options()], help="detect shot boundaries")
    thr = p.add_mutually_exclusive_group()
    thr.add_argument("--threshold", type=float, help="fixed threshold on the intensity difference")
    thr.add_argument("--adaptive-alpha", type=float, help="adaptive threshold mean + alpha*stddev (default 3)")
    p.add_argument("--min-shot-gap", type=int, default=8, help="merge detections closer than this many frames")
    p.add_argument("--emit-signal", help="also write the difference signal as CSV to this path")

    p = sub.add_parser("eval", parents=[_output_options()], help="score detections against ground truth")
    p.add_argument("--detected", required=True, help="boundary list or shot-list JSON")
    p.add_argument("--truth", required=True, help="ground-truth boundary list")
    p.add_argument("--tolerance", type=int, default=4, help="matching window in frames")

    p = sub.add_parser("psnr-bench", parents=[io_opts, _output_options("csv")], help="ES vs ARPS PSNR and search points")
    p.add_argument("--frame-distance", type=int, default=2, help="frames between reference and current")
    return parser


def _validate(parser, args) -> None:
    def check(cond, msg):
        if not cond:
            parser.error(msg)

    if hasattr(args, "block_size"):
        check(args.block_size >= 4, "--block-size must be >= 4")
        check(args.search_range >= 1, "--search-range must be >= 1")
        check(args.width is None or args.width > 0, "--width must be positive")
        check(args.height is None or args.height > 0, "--height must be positive")
    if hasattr(args, "step"):
        check(args.step >= 1, "--step must be >= 1")
        check(args.stride is None or args.stride >= 1, "--stride must be >= 1")
        check(args.jobs >= 1, "--jobs must be >= 1")
    if args.command == "detect":
        check(args.threshold is None or args.threshold >= 0, "--threshold must be >= 0")
        check(args.adaptive_alpha is None or args.adaptive_alpha > 0, "--adaptive-alpha must be > 0")
        check(args.min_shot_gap >= args.step, "--min-shot-gap must be >= --step")
    if args.command == "eval":
        check(args.tolerance >= 0, "--tolerance must be >= 0")
    if args.command == "psnr-bench":
        check(args.frame_distance >= 1, "--frame-distance must be >= 1")


def _finite(obj):
    """Replace non-finite floats so the document stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if not k.startswith("_") and k != "verbose"}


def _open(args):
    return open_source(args.input, args.width, args.height, args.format)


def _spec(args) -> BlockGridSpec:
    return BlockGridSpec(args.block_size, args.search_range)


def _write(args, doc: dict, csv_fn, text_fn) -> None:
    buf = io.StringIO()
    if args.output == "json":
        doc = {"config": _config(args), **doc}
        json.dump(_finite(doc), buf, indent=2, allow_nan=False)
        buf.write("\n")
    elif args.output == "csv":
        csv_fn(buf)
    else:
        text_fn(buf)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_motion(args) -> None:
    src = _open(args)
    ref, cur = read_frame(src, args.frame_a), read_frame(src, args.frame_b)
    field = SEARCHES[args.algo](cur, ref, _spec(args))
    stats = search_stats(field)

    def text(fh):
        fh.write(
            f"algorithm {field.algorithm}  grid {field.rows}x{field.cols}  "
            f"avg_search_points {stats.avg_search_points:.3f}  total_sad {stats.total_sad}\n"
        )
        for i in range(field.rows):
            fh.write(" ".join(f"({x:+d},{y:+d})" for x, y in field.vectors[i]) + "\n")

    _write(args, {"field": field.to_dict(), "stats": stats.to_dict()}, lambda fh: write_field_csv(field, fh), text)


def _timeline(args):
    return build_timeline(
        _open(args),
        _spec(args),
        args.step,
        args.filter_low_activity,
        stride=args.stride,
        algorithm=args.algo,
        workers=args.jobs,
    )


def cmd_activity(args) -> None:
    tl = _timeline(args)
    rows = list(tl.to_rows())

    def text(fh):
        fh.write(f"{'pair':>11}  {'avg':>9}  {'variance':>10}  {'intensity':>9}  level\n")
        for r in rows:
            pair = f"{r['pair_start']}-{r['pair_end']}"
            fh.write(
                f"{pair:>11}  {r['avg']:9.4f}  {r['variance']:10.4f}  {r['intensity']:9.4f}  {r['level']}\n"
            )

    doc = {"step": tl.step, "stride": tl.stride, "frame_count": tl.frame_count, "samples": rows}
    _write(args, doc, lambda fh: write_timeline_csv(tl, fh), text)


def cmd_detect(args) -> None:
    if args.threshold is not None:
        policy = ThresholdPolicy.fixed(args.threshold, args.min_shot_gap)
    else:
        alpha = args.adaptive_alpha if args.adaptive_alpha is not None else 3.0
        policy = ThresholdPolicy.adaptive(alpha, args.min_shot_gap)
    tl = _timeline(args)
    shots, signal = detect(tl, policy)
    log.info("%d samples, threshold %.4f, %d boundaries", len(tl.samples), shots.threshold_used, len(shots.boundaries))
    if args.emit_signal:
        with open(args.emit_signal, "w", newline="") as fh:
            write_signal_csv(signal, fh)

    def as_csv(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("start", "end", "key_frame"))
        for s in shots.shots:
            w.writerow((s.start, s.end, s.key_frame))

    doc = {"frame_count": tl.frame_count, "policy": policy.to_dict(), **shots.to_dict()}
    _write(args, doc, as_csv, lambda fh: write_boundaries(shots, fh))


def cmd_eval(args) -> None:
    detected = load_detected(args.detected)
    truth = load_ground_truth(args.truth)
    report = score(detected, truth, args.tolerance)

    def as_csv(fh):
        d = report.to_dict()
        cols = [k for k in d if k != "matches"]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerow([d[k] for k in cols])

    _write(args, report.to_dict(), as_csv, lambda fh: fh.write(format_report(report, label=args.detected)))


PSNR_COLUMNS = ("frame", "algo", "psnr", "avg_search_points")


def cmd_psnr_bench(args) -> None:
    src = _open(args)
    if src.frame_count <= args.frame_distance:
        raise TooFewFrames(f"need more than {args.frame_distance} frames, source has {src.frame_count}")
    spec = _spec(args)
    rows = []
    for t in range(src.frame_count - args.frame_distance):
        ref, cur = read_frame(src, t), read_frame(src, t + args.frame_distance)
        for algo in ("es", "arps"):
            field = SEARCHES[algo](cur, ref, spec)
            comp = motion_compensate(ref, field)
            rows.append(
                {
                    "frame": cur.index,
                    "algo": algo,
                    "psnr": psnr(cur, comp, spec.block_size),
                    "avg_search_points": search_stats(field).avg_search_points,
                }
            )

    def as_csv(fh):
        w = csv.DictWriter(fh, fieldnames=PSNR_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    def text(fh):
        fh.write(f"{'frame':>6}  {'algo':<5} {'psnr':>9}  avg_search_points\n")
        for r in rows:
            fh.write(f"{r['frame']:>6}  {r['algo']:<5} {r['psnr']:9.3f}  {r['avg_search_points']:.3f}\n")

    _write(args, {"rows": rows}, as_csv, text)


COMMANDS = {
    "motion": cmd_motion,
    "activity": cmd_activity,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "psnr-bench": cmd_psnr_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"motionshot: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
