"""Command-line entry point: ``misr {degrade,reconstruct,bench,convergence}``.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
inconsistent input), 3 divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .image import ImageYuv, bicubic_resize, center_crop, rgb_to_yuv, yuv_to_rgb
from .io import ImageIOError, load_image, save_image
from .operators import BlurKernel, DegradationParams, forward
from .regularizers import KINDS, RegularizerSpec
from .solver import MODES, DivergenceError, SolverConfig, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _csv_list(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"expected a comma list from {', '.join(choices)}")
        return items
    return parse


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}") from None


def _add_degradation_flags(p):
    p.add_argument("--scale", type=int, default=3, help="decimation factor (default 3)")
    p.add_argument("--frames", type=int, default=5, help="frames per burst (default 5)")
    p.add_argument("--blur-size", type=int, default=5, help="blur kernel side, odd (default 5)")
    p.add_argument("--blur-sigma", type=float, default=1.2, help="Gaussian blur sigma (default 1.2)")
    p.add_argument("--noise-sigma", type=float, default=1.0, help="noise std on 0-255 scale (default 1)")
    p.add_argument("--shift-range", type=float, default=5.0, help="max |shift| per axis in HR pixels")
    p.add_argument("--seed", type=int, default=0)


def _add_solver_flags(p, eta_default=0.05, max_iter_default=30):
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="regularization weight")
    p.add_argument("--eta", type=float, default=eta_default, help=f"step size (default {eta_default})")
    p.add_argument("--eps", type=float, default=1e-5, help="relative-change stopping threshold")
    p.add_argument("--max-iter", type=int, default=max_iter_default)
    p.add_argument("--btv-p", type=int, default=2, help="BTV window half-width")
    p.add_argument("--btv-alpha", type=float, default=0.7, help="BTV decay")
    p.add_argument("--ete-normalize", choices=("joint", "frame"), default="joint",
                   help="how per-frame end-to-end terms are combined (default joint)")


def _params(args) -> DegradationParams:
    try:
        kernel = BlurKernel.gaussian(args.blur_size, args.blur_sigma)
        return DegradationParams(scale=args.scale, kernel=kernel, noise_sigma=args.noise_sigma,
                                 frames=args.frames, shift_range=args.shift_range, rng_seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _solver(args, mode="ete", reg="btv") -> SolverConfig:
    try:
        spec = RegularizerSpec(reg, btv_window=args.btv_p, btv_decay=args.btv_alpha)
        return SolverConfig(eta=args.eta, lam=args.lam, eps=args.eps, max_iter=args.max_iter,
                            regularizer=spec, mode=mode, ete_normalize=args.ete_normalize)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="misr", description="Multi-frame super-resolution toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("degrade", help="simulate an LR burst from a ground-truth image")
    p.add_argument("--input", required=True, help="ground truth (.pgm or .png)")
    _add_degradation_flags(p)
    p.add_argument("--crop", action="store_true",
                   help="center-crop the input to the largest dims divisible by --scale")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("reconstruct", help="super-resolve a burst written by 'degrade'")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--mode", choices=MODES, default="ete")
    p.add_argument("--reg", choices=KINDS, default="btv")
    _add_solver_flags(p)
    p.add_argument("--out", required=True, help="output image (.pgm or .png)")
    p.add_argument("--trace", help="write the convergence trace CSV here")

    p = sub.add_parser("bench", help="run the method matrix over a directory of images")
    p.add_argument("--images", help="directory of .png/.pgm ground truths "
                                    "(default: built-in synthetic fixtures)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--modes", type=_csv_list(MODES), default=list(MODES))
    p.add_argument("--regs", type=_csv_list(KINDS), default=list(KINDS))
    p.add_argument("--no-bicubic", action="store_true", help="skip the bicubic baseline")
    p.add_argument("--scales", type=_ints, help="scale sweep, e.g. 2,3,4 (overrides --scale)")
    p.add_argument("--noise-sigmas", type=_floats, help="noise sweep, e.g. 1,2,3")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    _add_degradation_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out-csv", required=True)

    p = sub.add_parser("convergence", help="trace ete vs interp convergence (Tikhonov)")
    p.add_argument("--input", required=True)
    _add_degradation_flags(p)
    _add_solver_flags(p, max_iter_default=300)
    p.add_argument("--out-prefix", required=True)
    return parser


def _cmd_degrade(args) -> int:
    params = _params(args)
    img = load_image(args.input)
    chroma = None
    if img.ndim == 3:
        yuv = rgb_to_yuv(img)
        y = yuv.y
        chroma = (yuv.u, yuv.v)
    else:
        y = img
    if args.crop:
        y = center_crop(y, params.scale)
        if chroma is not None:
            chroma = tuple(center_crop(c, params.scale) for c in chroma)
    fs = bench.degrade(y, params, args.seed)
    if chroma is not None:
        # the target frame's chroma, degraded without noise; reconstruct enlarges it bicubically
        chroma = tuple(forward(c, fs.displacements[0], params.kernel, params.scale) for c in chroma)
    path = bench.write_burst(args.out_dir, fs, params, chroma=chroma)
    print(f"wrote {len(fs)} frames of {fs.lr_shape[1]}x{fs.lr_shape[0]} and {path}")
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    fs = bench.read_burst(args.frames_dir)
    cfg = _solver(args, mode=args.mode, reg=args.reg)
    x, trace = reconstruct(fs, cfg)
    chroma = bench.read_chroma(args.frames_dir)
    if chroma is not None and Path(args.out).suffix.lower() == ".png":
        u, v = (bicubic_resize(c, fs.scale) for c in chroma)
        save_image(args.out, yuv_to_rgb(ImageYuv(x, u, v)))
    else:
        save_image(args.out, x)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            trace.to_csv(fh)
    state = "converged" if trace.converged else "stopped at max-iter"
    print(f"{state} after {trace.iterations} iterations; wrote {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    images = bench.load_image_dir(args.images) if args.images else bench.synthetic_fixtures()
    methods = bench.method_matrix(args.regs, args.modes, bicubic=not args.no_bicubic)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    spec = bench.TrialSpec(images=images, params=_params(args), methods=tuple(methods),
                           trials=args.trials, base_seed=args.seed, solver=_solver(args),
                           scales=tuple(args.scales or ()), noise_sigmas=tuple(args.noise_sigmas or ()),
                           jobs=max(1, args.jobs))
    report = bench.run_bench(spec)
    out = Path(args.out_csv)
    out.write_text(report.to_csv())
    out.with_name(out.stem + "_timing.csv").write_text(report.timing_csv())
    print(report.table())
    return EXIT_OK


def _cmd_convergence(args) -> int:
    params = _params(args)
    reg = RegularizerSpec("tikhonov")
    traces = bench.run_convergence(load_image(args.input), params, args.eta, reg, lam=args.lam,
                                   max_iter=args.max_iter, eps=args.eps, seed=args.seed,
                                   ete_normalize=args.ete_normalize)
    for mode, tr in traces.items():
        path = f"{args.out_prefix}_{mode}.csv"
        with open(path, "w", newline="") as fh:
            tr.to_csv(fh)
        state = "converged" if tr.converged else "not converged"
        print(f"{mode}: {tr.iterations} iterations ({state}) -> {path}")
    return EXIT_OK


_COMMANDS = {
    "degrade": _cmd_degrade,
    "reconstruct": _cmd_reconstruct,
    "bench": _cmd_bench,
    "convergence": _cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"misr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"misr: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ImageIOError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"misr: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
