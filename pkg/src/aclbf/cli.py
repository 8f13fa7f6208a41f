"""Command-line front end.

Exit codes: 0 success (``segment``: converged), 2 ``segment`` hit the
iteration cap, 1 runtime error (including "no edges detected"), 64 invalid
flags.

Flag names map to the model symbols as follows::

    --mu        fitting strength mu          --lambda   graph-Laplacian weight lambda
    --lambda1   inside weight lambda_1       --k1/--k2  dead-zone thresholds k_1, k_2
    --lambda2   outside weight lambda_2      --denoise-passes  number M of passes
    --sigma     Gaussian scale (pixels)      --side     initial edge set (S_p / S_n)
    --eps       interface width epsilon      --h        pixel spacing
    --eps1      Heaviside width epsilon_1    --dt       time step
"""

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import synth
from .driver import RunConfig, dice, segment, write_trace
from .iglim import NoEdgesError, iglim
from .image_io import ImageFormatError, load_gray, load_mask, overlay_contour, write_gray, \
    write_mask

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2
EXIT_USAGE = 64

MODEL_FLAGS = {"mu": "mu", "lambda1": "lambda1", "lambda2": "lambda2", "sigma": "sigma",
               "eps": "eps", "eps1": "eps1", "h": "h", "dt": "dt"}
INIT_FLAGS = {"lam": "lam", "k1": "k1", "k2": "k2", "denoise_passes": "passes", "side": "side"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_init_flags(p):
    g = p.add_argument_group("initialization")
    g.add_argument("--lambda", dest="lam", type=float, help="graph-Laplacian weight (default 50)")
    g.add_argument("--k1", type=float, help="negative threshold (default 0.01)")
    g.add_argument("--k2", type=float, help="positive threshold (default 0.01)")
    g.add_argument("--denoise-passes", "-M", dest="denoise_passes", type=int,
                   help="diagonal-connectivity passes M (default 1)")
    g.add_argument("--side", choices=["auto", "positive", "negative"],
                   help="edge set used as initial contour: positive = S_p, negative = S_n")


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--mu", type=float, help="fitting strength (default 5e4, unit intensities)")
    g.add_argument("--lambda1", type=float, help="inside weight (default 1)")
    g.add_argument("--lambda2", type=float, help="outside weight (default 1)")
    g.add_argument("--sigma", type=float, help="Gaussian scale in pixels (default 3)")
    g.add_argument("--eps", type=float, help="interface width (default 0.5)")
    g.add_argument("--eps1", type=float, help="Heaviside width (default 0.5)")
    g.add_argument("--h", type=float, help="pixel spacing (default 0.01)")
    g.add_argument("--dt", type=float, help="time step (default 0.1)")
    g.add_argument("--scheme", choices=["etd1", "etdrk2"], help="time stepper (default etdrk2)")
    g.add_argument("--stabilizer", choices=["auto", "table", "fixed"],
                   help="auto: G/2 + 1 each iteration; table: C*mu*eps1; fixed: --stabilizer-value")
    g.add_argument("--stabilizer-value", type=float, help="S for --stabilizer fixed")
    g.add_argument("--stabilizer-multiplier", type=float, help="C for --stabilizer table")
    g.add_argument("--max-iters", type=int, help="iteration cap (default 500)")
    g.add_argument("--strict-energy", action="store_true", default=None,
                   help="abort when the energy monitor detects an increase")
    g.add_argument("--config", type=Path,
                   help="run.json from a previous run; explicit flags override it")


def build_parser():
    parser = Parser(prog="aclbf", description=__doc__.split("\n\n")[0],
                    formatter_class=argparse.RawDescriptionHelpFormatter,
                    epilog=__doc__.split("\n\n", 1)[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("segment", help="run the full segmentation")
    p.add_argument("--input", type=Path, help="8-bit grayscale PGM/PNG")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--overlay-format", choices=["ppm", "png"], default="ppm")
    _add_model_flags(p)
    _add_init_flags(p)

    p = sub.add_parser("iglim", help="run the initialization only")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("."))
    _add_init_flags(p)

    p = sub.add_parser("synth", help="write a synthetic image and its ground truth")
    p.add_argument("kind", choices=sorted(synth.GENERATORS) + ["suite"])
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--name", help="file stem (default: the kind)")
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--radius", type=float, default=25.0)
    p.add_argument("--fg", type=float, help="object intensity")
    p.add_argument("--bg", type=float, help="background intensity")
    p.add_argument("--gradient", type=float, help="illumination ramp height")
    p.add_argument("--noise-var", type=float, default=0.0, help="Gaussian noise variance, 0-255 scale")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="compare ETD1 and ETDRK2 over a fixture directory")
    p.add_argument("--fixtures", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("bench.csv"))
    p.add_argument("--jobs", type=int, default=1)
    _add_model_flags(p)
    _add_init_flags(p)
    return parser


def resolve_config(args, base=None):
    """Merge flags over ``base`` (a :class:`RunConfig`) and validate the result."""
    base = base or RunConfig()
    model = {f: getattr(args, a) for a, f in MODEL_FLAGS.items() if getattr(args, a, None) is not None}
    init = {f: getattr(args, a) for a, f in INIT_FLAGS.items() if getattr(args, a, None) is not None}
    stab = {}
    if getattr(args, "stabilizer", None) is not None:
        stab["mode"] = args.stabilizer
    if getattr(args, "stabilizer_value", None) is not None:
        stab["value"] = args.stabilizer_value
    if getattr(args, "stabilizer_multiplier", None) is not None:
        stab["multiplier"] = args.stabilizer_multiplier
    top = {}
    for name in ("scheme", "max_iters", "strict_energy"):
        if getattr(args, name, None) is not None:
            top[name] = getattr(args, name)
    try:
        cfg = replace(base, model=replace(base.model, **model), init=replace(base.init, **init),
                      stabilizer=replace(base.stabilizer, **stab), **top)
        if cfg.stabilizer.mode == "fixed" and not cfg.stabilizer.value > 0:
            raise ValueError("--stabilizer fixed needs a positive --stabilizer-value")
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _load_replay(path):
    try:
        data = json.loads(Path(path).read_text())
        return data, RunConfig.from_dict(data["config"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot use {path} as a run configuration: {exc}") from exc


def cmd_segment(args):
    base, input_path = None, args.input
    if args.config is not None:
        data, base = _load_replay(args.config)
        input_path = input_path or Path(data["input"])
    if input_path is None:
        raise UsageError("--input is required (or --config with a recorded input)")
    cfg = resolve_config(args, base)
    image = load_gray(input_path)
    args.out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = segment(image, cfg)
    wall = time.perf_counter() - start

    write_mask(result.mask, args.out / "mask.pgm")
    overlay_contour(image, result.mask, args.out / f"overlay.{args.overlay_format}")
    write_trace(result.trace, args.out / "energy.csv")
    summary = {"input": str(Path(input_path).resolve()), "config": cfg.to_dict(),
               **result.summary(), "wall_s": wall}
    (args.out / "run.json").write_text(json.dumps(summary, indent=2))
    print(f"{'converged' if result.converged else 'stopped at max-iters'} after "
          f"{result.iterations} iterations; {int(result.mask.sum())} object pixels")
    return EXIT_OK if result.converged else EXIT_MAX_ITERS


def cmd_iglim(args):
    p = resolve_config(args).init
    image = load_gray(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    res = iglim(image, lam=p.lam, k1=p.k1, k2=p.k2, passes=p.passes, side=p.side)
    # positive/negative edge files hold the chosen set after denoising and the other set raw
    chosen_pos = res.side == "positive"
    write_mask(res.edges if chosen_pos else res.s_pos, args.out / "edges_p.pgm")
    write_mask(res.s_neg if chosen_pos else res.edges, args.out / "edges_n.pgm")
    write_mask(res.region, args.out / "init_region.pgm")
    write_mask(res.u0 > 0, args.out / "u0.pgm")
    print(json.dumps(res.diagnostics()))
    return EXIT_OK


def _synth_one(kind, args, name=None, **fixed):
    gen = synth.GENERATORS[kind]
    kwargs = {"size": args.size, "noise_var": args.noise_var, "seed": args.seed}
    if kind in ("disk", "ramp-disk"):
        kwargs["radius"] = args.radius
    for flag in ("fg", "bg", "gradient"):
        value = getattr(args, flag)
        if value is not None:
            if flag == "gradient" and kind == "disk":
                raise UsageError("--gradient applies to ramp-disk and vessel only")
            kwargs[flag] = value
    kwargs.update(fixed)
    try:
        image, truth = gen(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stem = name or args.name or kind
    write_gray(image, args.out / f"{stem}.pgm")
    write_mask(truth, args.out / f"{stem}_truth.pgm")
    return stem


def cmd_synth(args):
    args.out.mkdir(parents=True, exist_ok=True)
    if args.kind != "suite":
        print(_synth_one(args.kind, args))
        return EXIT_OK
    for name, (gen, kwargs) in synth.SUITE.items():
        image, truth = gen(**kwargs)
        write_gray(image, args.out / f"{name}.pgm")
        write_mask(truth, args.out / f"{name}_truth.pgm")
        (args.out / f"{name}.json").write_text(
            json.dumps({"config": synth.suite_config().to_dict()}, indent=2))
        print(name)
    return EXIT_OK


def _bench_fixture(path, cfg_dict):
    image = load_gray(path)
    truth_path = path.with_name(f"{path.stem}_truth.pgm")
    truth = load_mask(truth_path) if truth_path.exists() else None
    rows = []
    for scheme in ("etd1", "etdrk2"):
        cfg = replace(RunConfig.from_dict(cfg_dict), scheme=scheme)
        start = time.perf_counter()
        try:
            res = segment(image, cfg)
        except (NoEdgesError, RuntimeError, ValueError) as exc:
            rows.append({"fixture": path.stem, "scheme": scheme, "iters": "", "wall_ms": "",
                         "dice": "", "error": str(exc)})
            continue
        wall_ms = (time.perf_counter() - start) * 1e3
        rows.append({"fixture": path.stem, "scheme": scheme, "iters": res.iterations,
                     "wall_ms": f"{wall_ms:.3f}",
                     "dice": "" if truth is None else f"{dice(res.mask, truth):.6f}"})
    return rows


def cmd_bench(args):
    if not args.fixtures.is_dir():
        raise UsageError(f"{args.fixtures} is not a directory")
    images = sorted(p for p in args.fixtures.glob("*.pgm") if not p.stem.endswith("_truth"))
    jobs = []
    for path in images:
        base = None
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            _, base = _load_replay(sidecar)
        jobs.append((path, resolve_config(args, base).to_dict()))

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_fixture, *zip(*jobs)))
    else:
        results = [_bench_fixture(path, cfg) for path, cfg in jobs]

    fields = ["fixture", "scheme", "iters", "wall_ms", "dice"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for rows in results:
            for row in rows:
                writer.writerow(row)
                if "error" in row:
                    print(f"{row['fixture']} [{row['scheme']}]: {row['error']}", file=sys.stderr)
    print(f"{sum(len(r) for r in results)} rows written to {args.out}")
    return EXIT_OK


COMMANDS = {"segment": cmd_segment, "iglim": cmd_iglim, "synth": cmd_synth, "bench": cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"aclbf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoEdgesError, ImageFormatError, OSError, RuntimeError, ValueError) as exc:
        print(f"aclbf: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
