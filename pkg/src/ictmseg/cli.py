"""Command-line front end: ``ictmseg synth | segment | eval | compare``.

Exit codes: 0 success, 2 bad flags or config, 3 file I/O or format error,
4 numerical blowup, 5 no convergence within max_iter (the last mask is
still written), 6 shape mismatch.

Reported ``time_s`` covers solver iterations only, not file I/O.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .drlse import NumericalBlowupError, drlse_run
from .evalkit import (KINDS, bbox_init, connected_components, default_spec, dice,
                      erode_init, export_trace_csv, rect_init, synth_image)
from .filters import edge_indicator
from .grid import GridError, ShapeMismatchError
from .ictm import ictm_run
from .io import read_image, read_mask, write_image, write_mask

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BLOWUP, EXIT_NOT_CONVERGED, EXIT_SHAPE = 0, 2, 3, 4, 5, 6

PRECEDENCE = ("Precedence: command-line flags (--set, --method, ...) override the "
              "config file, which overrides built-in defaults.")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _err(message: str) -> None:
    print(f"ictmseg: error: {message}", file=sys.stderr)


# -- flag parsing helpers ----------------------------------------------------

def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected e.g. 128x128") from None
    if len(dims) not in (2, 3) or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; need 2 or 3 positive extents")
    return dims


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _points(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(p) for p in text.split(";"))


def _assignment(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ictmseg", description=__doc__.split("\n\n")[0], epilog=PRECEDENCE)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic image and its ground truth")
    p.add_argument("kind", choices=[k.replace("_", "-") for k in KINDS] + list(KINDS))
    p.add_argument("--dims", type=_dims, default=(128, 128), help="e.g. 128x128 or 32x32x32")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std")
    p.add_argument("--centers", type=_points, help="'y,x;y,x'")
    p.add_argument("--radii", type=_floats, help="'r1,r2' (ring: 'inner,outer')")
    p.add_argument("--neck-width", type=float)
    p.add_argument("--extent", type=int, help="bright-square side")
    p.add_argument("--offset", type=_ints, help="bright-square corner 'y,x'")
    p.add_argument("--foreground", type=float, default=255.0)
    p.add_argument("--background", type=float, default=0.0)
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-truth", required=True)

    def solver_flags(p):
        p.add_argument("config")
        p.add_argument("--set", dest="overrides", type=_assignment, action="append",
                       default=[], metavar="KEY=VALUE",
                       help="override a config key; qualify block keys as ictm.tau")

    p = sub.add_parser("segment", help="run one solver from a config file", epilog=PRECEDENCE)
    solver_flags(p)
    p.add_argument("--method", choices=("ictm", "drlse"))
    p.add_argument("--output")
    p.add_argument("--trace")
    p.add_argument("--max-iter", type=int)

    p = sub.add_parser("eval", help="Dice and component counts of a predicted mask")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)

    p = sub.add_parser("compare", help="run ICTM then DRLSE from the same init",
                       epilog=PRECEDENCE)
    solver_flags(p)
    return parser


# -- shared plumbing ----------------------------------------------------------

def _resolve(base: str, path: Optional[str]) -> Optional[str]:
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(base, path)


def _load(args, extra=()) -> tuple[RunConfig, str]:
    try:
        cfg = load_config(args.config, list(extra) + list(args.overrides))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config: {exc}") from None
    except ConfigError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    return cfg, os.path.dirname(os.path.abspath(args.config))


def _read(reader, path, what):
    try:
        return reader(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {what}: {exc}") from None
    except GridError as exc:
        raise CliError(EXIT_IO, f"cannot read {what} {path}: {exc}") from None


def _write(writer, path, *payload, what="output"):
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        writer(path, *payload)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {what}: {exc}") from None
    except GridError as exc:
        raise CliError(EXIT_IO, f"cannot write {what} {path}: {exc}") from None


def _parse_boxes(text: str) -> list[tuple[int, ...]]:
    try:
        return [tuple(int(v) for v in box.split(",")) for box in text.split(";") if box.strip()]
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad rect init {text!r}") from None


def build_init(rule: str, shape, truth: Optional[np.ndarray], base: str) -> np.ndarray:
    """Resolve ``bbox_half``, ``erode:<r>``, ``rect:<boxes>`` or a mask path."""
    rule = rule.strip()
    try:
        if rule == "bbox_half" or rule.startswith("erode:"):
            if truth is None:
                raise CliError(EXIT_USAGE, f"init rule {rule!r} needs a truth path")
            if rule == "bbox_half":
                return bbox_init(truth)
            try:
                radius = int(rule.split(":", 1)[1])
            except ValueError:
                raise CliError(EXIT_USAGE, f"bad erode radius in {rule!r}") from None
            init = erode_init(truth, radius)
            if not init.any():
                raise CliError(EXIT_USAGE, f"{rule!r} erodes the truth away")
            return init
        if rule.startswith("rect:"):
            return rect_init(shape, _parse_boxes(rule[5:]))
    except (GridError, ValueError) as exc:
        raise CliError(EXIT_USAGE, f"bad init {rule!r}: {exc}") from None
    init = _read(read_mask, _resolve(base, rule), "init mask")
    if init.shape != tuple(shape):
        raise CliError(EXIT_SHAPE, f"init mask shape {init.shape} != image shape {tuple(shape)}")
    return init


@dataclass
class Problem:
    g: np.ndarray
    init: np.ndarray
    truth: Optional[np.ndarray]


def _prepare(cfg: RunConfig, base: str) -> Problem:
    if cfg.input is None:
        raise CliError(EXIT_USAGE, "config needs an input path")
    if cfg.init is None:
        raise CliError(EXIT_USAGE, "config needs an init path or rule")
    image = _read(read_image, _resolve(base, cfg.input), "input image")
    truth = None
    if cfg.truth is not None:
        truth = _read(read_mask, _resolve(base, cfg.truth), "truth mask")
        if truth.shape != image.shape:
            raise CliError(EXIT_SHAPE, f"truth shape {truth.shape} != image shape {image.shape}")
    init = build_init(cfg.init, image.shape, truth, base)
    try:
        g = edge_indicator(image, cfg.edge)
    except (GridError, ValueError) as exc:
        raise CliError(EXIT_USAGE, f"cannot compute edge indicator: {exc}") from None
    return Problem(g, init, truth)


class _Snapshots:
    def __init__(self, cfg: RunConfig, base: str, method: str, ext: str):
        self.every = cfg.snapshot_every
        if self.every and cfg.snapshot_dir is None:
            raise CliError(EXIT_USAGE, "snapshot_every needs snapshot_dir")
        self.dir = _resolve(base, cfg.snapshot_dir)
        self.method, self.ext = method, ext

    def path(self, k: int) -> str:
        return os.path.join(self.dir, f"{self.method}_{k:06d}{self.ext}")

    def __call__(self, k: int, mask: np.ndarray) -> None:
        if k % self.every == 0:
            _write(write_mask, self.path(k), mask, what="snapshot")

    @property
    def callback(self):
        return self if self.every else None


@dataclass
class Outcome:
    method: str
    status: str               # ok | not_converged | blowup
    iterations: int = 0
    converged: bool = False
    energy: float = float("nan")
    time_s: float = 0.0
    mask: Optional[np.ndarray] = None
    message: str = ""

    @property
    def code(self) -> int:
        return {"ok": EXIT_OK, "not_converged": EXIT_NOT_CONVERGED,
                "blowup": EXIT_BLOWUP}[self.status]


def run_solver(method: str, cfg: RunConfig, problem: Problem, base: str,
               output: str, trace: Optional[str]) -> Outcome:
    ext = os.path.splitext(output)[1] or ".pgm"
    snaps = _Snapshots(cfg, base, method, ext)
    start = time.perf_counter()
    try:
        if method == "ictm":
            result = ictm_run(problem.g, problem.init, cfg.ictm_params(), snaps.callback)
        else:
            result = drlse_run(problem.g, problem.init, cfg.drlse_params(), snaps.callback)
    except NumericalBlowupError as exc:
        return Outcome(method, "blowup", iterations=exc.iteration or 0, message=str(exc))
    elapsed = time.perf_counter() - start if cfg.timing else 0.0
    _write(write_mask, _resolve(base, output), result.mask, what="mask")
    if trace is not None:
        _write(lambda p, t: export_trace_csv(t, p, timing=cfg.timing),
               _resolve(base, trace), result.trace, what="trace")
    status = "ok" if result.converged else "not_converged"
    return Outcome(method, status, result.iterations, result.converged,
                   result.final_energy, elapsed, result.mask)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


# -- subcommands --------------------------------------------------------------

def cmd_synth(args) -> int:
    overrides = dict(centers=args.centers, radii=args.radii, neck_width=args.neck_width,
                     extent=args.extent, offset=args.offset, foreground=args.foreground,
                     background=args.background, noise_sigma=args.noise, rng_seed=args.seed)
    try:
        spec = default_spec(args.kind, args.dims, **overrides)
        image, truth = synth_image(spec)
    except (GridError, ValueError, TypeError) as exc:
        raise CliError(EXIT_USAGE, f"bad fixture geometry: {exc}") from None
    if args.out_image.lower().endswith(".pgm"):
        image = np.clip(np.rint(image), 0, 255)
    _write(write_image, args.out_image, image, what="image")
    _write(write_mask, args.out_truth, truth, what="truth")
    print(f"image={args.out_image} truth={args.out_truth}")
    return EXIT_OK


def cmd_segment(args) -> int:
    extra = []
    if args.method:
        extra.append(("method", args.method))
    if args.max_iter is not None:
        extra.append(("max_iter", str(args.max_iter)))
    cfg, base = _load(args, extra)
    method = cfg.method
    if method is None:
        raise CliError(EXIT_USAGE, "config needs method = ictm or drlse")
    block = cfg.blocks[method]
    output = args.output or cfg.output or block.output
    trace = args.trace or cfg.trace or block.trace
    if output is None:
        raise CliError(EXIT_USAGE, "config needs an output path")
    problem = _prepare(cfg, base)
    out = run_solver(method, cfg, problem, base, output, trace)
    if out.status == "blowup":
        _err(out.message)
        return out.code
    print(f"method={method} iters={out.iterations} converged={str(out.converged).lower()} "
          f"energy={_fmt(out.energy)} time_s={out.time_s:.6f}")
    return out.code


def cmd_eval(args) -> int:
    pred = _read(read_mask, args.pred, "prediction")
    truth = _read(read_mask, args.truth, "truth")
    try:
        score = dice(pred, truth)
    except ShapeMismatchError as exc:
        raise CliError(EXIT_SHAPE, str(exc)) from None
    print(f"dice={score:.4f} components_pred={connected_components(pred)} "
          f"components_truth={connected_components(truth)}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg, base = _load(args)
    for name in ("ictm", "drlse"):
        block = cfg.blocks[name]
        if not block.present:
            raise CliError(EXIT_USAGE, f"compare needs an [{name}] block")
        if block.output is None:
            raise CliError(EXIT_USAGE, f"[{name}] block needs an output path")
    problem = _prepare(cfg, base)
    outcomes = []
    for name in ("ictm", "drlse"):
        block = cfg.blocks[name]
        outcomes.append(run_solver(name, cfg, problem, base, block.output, block.trace))
    for out in outcomes:
        row = [f"method={out.method}", f"status={out.status}"]
        if out.status != "blowup":
            row += [f"iters={out.iterations}", f"converged={str(out.converged).lower()}",
                    f"time_s={out.time_s:.6f}"]
            if problem.truth is not None:
                row.append(f"dice={dice(out.mask, problem.truth):.4f}")
            row.append(f"components={connected_components(out.mask)}")
        else:
            _err(out.message)
        print(" ".join(row))
    ictm, drlse = outcomes
    if ictm.status != "blowup" and drlse.status != "blowup" and ictm.iterations > 0:
        print(f"speedup_iters={drlse.iterations / ictm.iterations:.4f}")
    codes = {o.code for o in outcomes}
    for code in (EXIT_BLOWUP, EXIT_NOT_CONVERGED):
        if code in codes:
            return code
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "segment": cmd_segment, "eval": cmd_eval,
            "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        _err(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
