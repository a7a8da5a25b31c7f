"""Command-line interface: ``hxpcs <command> [flags]``.

Exit codes: 0 success, 2 usage error, 3 bad data or file, 4 numerical failure.
"""

import argparse
import json
import sys

from . import analysis, bench, io, synth
from .compress import check_binding, compress_frame, compress_series
from .correlate import g2_from_ttc, ttc_compressed, ttc_raw
from .encoder import DEFAULT_CORPUS_SIZE, build_offline, build_online, build_online_from_frames, truncate
from .errors import DataError, NumericalError, ShapeError
from .model import TTCMatrix, apply_mask

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _pair(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    if not lo <= hi:
        raise argparse.ArgumentTypeError(f"window {text!r} has LO > HI")
    return lo, hi


def _shape(text):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError(f"frame shape {text!r} must be positive")
    return h, w


def _load_frames(args):
    frames = io.read_frames(args.frames)
    if getattr(args, "mask", None):
        frames = apply_mask(frames, io.read_mask(args.mask))
    return frames


def _reference(args):
    return io.read_pgm(args.reference) if args.reference else synth.load_reference()


def _usage(args, message):
    args.parser.error(message)  # exits with status 2


def _print(*parts):
    print(*parts, flush=True)


def cmd_generate(args):
    if args.kind != "corpus" and args.m is None:
        _usage(args, f"{args.kind} series need --m")
    if args.kind == "oscillatory":
        frames = synth.gen_oscillatory(args.n, args.m, args.period, args.contrast, args.noise, args.seed,
                                       frame_period=args.frame_period)
    elif args.kind == "relaxation":
        frames = synth.gen_relaxation(args.n, args.m, args.rho, args.seed, frame_period=args.frame_period)
    else:
        if args.frame_shape is None:
            _usage(args, "corpus generation needs --frame-shape")
        frames = synth.gen_shifted_corpus(_reference(args), args.n, args.frame_shape, args.seed)
    io.write_frames(args.out, frames)
    _print(f"N={frames.n_frames} M={frames.n_pixels} seed={args.seed}")


def cmd_build_matrix(args):
    if args.mode != "online-unrelated" and not args.frames:
        _usage(args, f"{args.mode} encoders need --frames")
    if args.mode == "offline":
        enc = build_offline(_load_frames(args))
        if args.k is not None:
            enc = truncate(enc, args.k)
    elif args.mode == "online-related":
        enc = build_online_from_frames(_load_frames(args), _required_k(args))
    else:
        if args.frame_shape is None:
            _usage(args, "online-unrelated encoders need --frame-shape")
        enc = build_online(_reference(args), args.frame_shape, _required_k(args),
                           r_samples=args.r_samples, seed=args.seed)
    io.write_encoder(args.out, enc)
    report = analysis.spectrum_report(enc)
    _print(f"mode={enc.mode.value} M={enc.n_pixels} K={enc.k} hash={enc.content_hash()}")
    _print("spectrum (leading): " + " ".join(f"{s:.6g}" for s in report.spectrum[:8]))
    _print(f"suggested K={report.suggested_k}")


def _required_k(args):
    if args.k is None:
        _usage(args, f"{args.mode} encoders need --k")
    return args.k


def cmd_compress(args):
    frames = _load_frames(args)
    enc = io.read_encoder(args.encoder)
    if args.stream:
        with io.CompressedWriter(args.out, enc.k, enc.content_hash()) as writer:
            x = frames.as_float()
            if x.shape[1] != enc.n_pixels:
                raise ShapeError(f"frames have {x.shape[1]} pixels, encoder expects {enc.n_pixels}")
            for row in x:
                writer.append(*compress_frame(row, enc))
        n = writer.n
    else:
        store = compress_series(frames, enc)
        io.write_compressed(args.out, store)
        n = len(store)
    _print(f"N={n} K={enc.k} encoder={enc.content_hash()}")


def _ttc(args):
    """Correlation and frame period from either raw frames or a compressed store."""
    if args.frames and args.compressed:
        _usage(args, "give either --frames or --compressed, not both")
    if args.frames:
        frames = _load_frames(args)
        return ttc_raw(frames), frames.frame_period
    if not args.compressed:
        _usage(args, "need --frames or --compressed")
    store = io.read_compressed(args.compressed)
    if args.encoder:
        enc = io.read_encoder(args.encoder)
        check_binding(store, enc)
        if enc.is_lossless:
            return TTCMatrix(ttc_compressed(store).values, lossless=True), args.frame_period
    return ttc_compressed(store), args.frame_period


def _g2(args):
    if getattr(args, "g2", None):
        return io.read_g2_csv(args.g2)
    ttc, period = _ttc(args)
    return g2_from_ttc(ttc, period)


def cmd_ttc(args):
    ttc, _ = _ttc(args)
    io.export_ttc_csv(args.out, ttc)
    _print(f"TTC {ttc.n}x{ttc.n} -> {args.out}")


def cmd_g2(args):
    curve = _g2(args)
    io.export_g2_csv(args.out, curve)
    _print(f"g2 with {len(curve.lags)} lags -> {args.out}")


def cmd_fit(args):
    fit = analysis.fit_kww(_g2(args), args.lag_window)
    result = {
        "baseline": fit.baseline,
        "contrast": fit.contrast,
        "relaxation_time": fit.relaxation_time,
        "residual_rms": fit.residual_rms,
        "iterations": fit.iterations,
    }
    _emit_json(result, args.out)


def cmd_visibility(args):
    if args.peak_window is None or args.baseline_window is None:
        _usage(args, "visibility needs --peak-window and --baseline-window")
    ttc, period = _ttc(args)
    curve = g2_from_ttc(ttc, period)
    report = analysis.visibility_report(curve, ttc, args.peak_window, args.baseline_window, args.exclusion)
    _emit_json(report.to_dict(), args.out)


def cmd_spectrum(args):
    enc = io.read_encoder(args.encoder)
    report = analysis.spectrum_report(enc, args.factor)
    _emit_json({"spectrum": report.spectrum.tolist(), "suggested_k": report.suggested_k,
                "degenerate": report.degenerate}, args.out)


def cmd_bench(args):
    try:
        grid = bench.parse_grid(args.bench_grid) if args.bench_grid is not None else bench.DEFAULT_GRID
    except DataError as exc:
        _usage(args, str(exc))
    report = bench.run_bench(grid, repeats=args.repeats, seed=args.seed)
    if args.out:
        bench.write_report(args.out, report)
    _print(bench.format_summary(report))


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    _print(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="hxpcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic frame series")
    p.add_argument("kind", choices=["oscillatory", "relaxation", "corpus"])
    p.add_argument("--n", type=int, required=True, help="frames (corpus: number of shifted samples)")
    p.add_argument("--m", type=int, help="pixels per frame (oscillatory, relaxation)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--period", type=float, default=40.0, help="oscillation period in frames")
    p.add_argument("--contrast", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.98, help="per-frame field correlation (relaxation)")
    p.add_argument("--frame-period", type=float, default=1.0, help="seconds between frames")
    p.add_argument("--reference", help="P5 PGM for the corpus (default: shipped texture)")
    p.add_argument("--frame-shape", type=_shape, help="HxW crop for the corpus")
    p.add_argument("--out", required=True)
    p.set_defaults(parser=p, func=cmd_generate)

    p = sub.add_parser("build-matrix", help="build an encoding matrix")
    p.add_argument("mode", choices=["offline", "online-related", "online-unrelated"])
    p.add_argument("--frames", help="series to encode (offline) or prior measurement (online-related)")
    p.add_argument("--mask")
    p.add_argument("--k", type=int)
    p.add_argument("--reference")
    p.add_argument("--frame-shape", type=_shape)
    p.add_argument("--r-samples", type=int, default=DEFAULT_CORPUS_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(parser=p, func=cmd_build_matrix)

    p = sub.add_parser("compress", help="compress a frame series")
    p.add_argument("--frames", required=True)
    p.add_argument("--encoder", required=True)
    p.add_argument("--mask")
    p.add_argument("--stream", action="store_true", help="compress and append one frame at a time")
    p.add_argument("--out", required=True)
    p.set_defaults(parser=p, func=cmd_compress)

    def inputs(p, g2_csv=False):
        p.add_argument("--frames")
        p.add_argument("--compressed")
        p.add_argument("--encoder", help="checks that --compressed belongs to this encoder")
        p.add_argument("--mask")
        p.add_argument("--frame-period", type=float, default=1.0,
                       help="seconds between frames for --compressed input")
        if g2_csv:
            p.add_argument("--g2", help="g2 CSV instead of frames")

    p = sub.add_parser("ttc", help="two-time correlation as CSV")
    inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(parser=p, func=cmd_ttc)

    p = sub.add_parser("g2", help="g2 curve as CSV")
    inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(parser=p, func=cmd_g2)

    p = sub.add_parser("fit", help="fit the exponential relaxation model")
    inputs(p, g2_csv=True)
    p.add_argument("--lag-window", type=_pair)
    p.add_argument("--out")
    p.set_defaults(parser=p, func=cmd_fit)

    p = sub.add_parser("visibility", help="peak visibility and the 2-sigma verdict")
    inputs(p)
    p.add_argument("--peak-window", type=_pair)
    p.add_argument("--baseline-window", type=_pair)
    p.add_argument("--exclusion", type=int, default=0, help="diagonal band half-width left out of sigma")
    p.add_argument("--out")
    p.set_defaults(parser=p, func=cmd_visibility)

    p = sub.add_parser("spectrum", help="singular-value spectrum and suggested K")
    p.add_argument("--encoder", required=True)
    p.add_argument("--factor", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(parser=p, func=cmd_spectrum)

    p = sub.add_parser("bench", help="time raw versus compressed correlation")
    p.add_argument("--bench-grid", help="comma-separated NxMxK entries")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(parser=p, func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
