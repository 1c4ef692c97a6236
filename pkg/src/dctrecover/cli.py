"""Command-line front end.

Subcommands::

    erase     damage an image and write the known-coefficient sidecar
    recover   recover the missing coefficients from a sidecar
    baseline  scan-baseline DC recovery from a sidecar
    sweep     erase/recover/score over a U range and a set of images
    compare   quality table of candidates against an original
    crop      trim an image so its sides divide the block size

Settings come from flags, optionally seeded by ``--config FILE`` (JSON);
flags win on conflict.  Each error class has its own exit code.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import resource
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baseline import scan_align_dc
from .dct import forward_dct, inverse_dct
from .errors import DctRecoverError, EmptyInput, InvalidCount, IoFailure, TooSmall
from .image_io import crop_image, load_image, make_layout, save_image
from .lp_solver import SolverSettings
from .mask import FillPolicy, apply_mask, most_significant_mask, parse_mask
from .metrics import mae, psnr, shift_compensated_psnr, ssim
from .recovery import midpoint_reference, recover, to_image
from .sidecar import read_sidecar, write_sidecar

__all__ = ["RunConfig", "main", "build_parser", "run_sweep", "SweepRow"]

log = logging.getLogger("dctrecover")


@dataclasses.dataclass
class RunConfig:
    block_size: int = 8
    mask: str = "dc"
    fill: str = "midpoint"
    tolerance: float = 1e-7
    max_iterations: int = 200
    threads: int = 1
    backend: str | None = None
    out_dir: str | None = None
    images: list = dataclasses.field(default_factory=list)
    u_min: int = 1
    u_max: int = 15
    workers: int = 0

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(self.tolerance, self.max_iterations, self.threads, self.backend)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**raw)

    def merged(self, overrides: dict) -> "RunConfig":
        given = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **given)


def _mask_text(args) -> str | None:
    if getattr(args, "dc_only", False):
        return "dc"
    if getattr(args, "top", None) is not None:
        return f"top:{args.top}"
    return getattr(args, "mask", None)


def _config(args) -> RunConfig:
    base = RunConfig()
    if args.config:
        try:
            base = RunConfig.from_json(Path(args.config).read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read config {args.config}: {exc}") from None
    overrides = {
        "block_size": args.block_size,
        "tolerance": args.tolerance,
        "max_iterations": args.max_iterations,
        "threads": args.threads,
        "backend": args.backend,
        "mask": _mask_text(args),
        "fill": getattr(args, "fill", None),
        "out_dir": getattr(args, "out_dir", None),
        "u_min": getattr(args, "u_min", None),
        "u_max": getattr(args, "u_max", None),
        "workers": getattr(args, "workers", None),
    }
    return base.merged(overrides)


def _peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


# --- erase -------------------------------------------------------------------

def cmd_erase(args, cfg: RunConfig) -> int:
    src = Path(args.input)
    img = load_image(src)
    layout = make_layout(img, cfg.block_size)
    mask = parse_mask(cfg.mask, cfg.block_size)
    grid = forward_dct(img, layout)
    out_dir = Path(cfg.out_dir) if cfg.out_dir else src.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    image_out = Path(args.output) if args.output else out_dir / f"{src.stem}_m{mask.count}.pgm"
    sidecar_out = Path(args.sidecar) if args.sidecar else out_dir / f"{src.stem}.coeffs"
    fill = FillPolicy(cfg.fill)
    if fill is FillPolicy.MIDPOINT:
        damaged = midpoint_reference(grid, mask, x_min=img.x_min, x_max=img.x_max)
    else:
        damaged = to_image(inverse_dct(apply_mask(grid, mask, fill)), img.x_min, img.x_max)
    save_image(damaged, image_out)
    write_sidecar(sidecar_out, grid, mask, img.bit_depth)
    print(f"damaged image: {image_out}")
    print(f"sidecar: {sidecar_out}")
    return 0


# --- recover -----------------------------------------------------------------

def cmd_recover(args, cfg: RunConfig) -> int:
    grid, mask, bit_depth = read_sidecar(args.sidecar)
    x_max = (1 << bit_depth) - 1
    report = recover(grid, mask, settings=cfg.solver_settings(), x_min=0, x_max=x_max)
    out = Path(args.output)
    save_image(report.recovered, out)
    info = report.to_dict()
    info["peak_rss_mb"] = _peak_rss_mb()
    if args.original:
        orig = load_image(args.original)
        info["psnr"] = psnr(orig, report.recovered)
        info["shift_psnr"] = shift_compensated_psnr(orig, report.recovered)[0]
        try:
            info["ssim"] = ssim(orig, report.recovered)
        except TooSmall:
            info["ssim"] = math.nan
        ref = midpoint_reference(grid, mask, x_max=x_max)
        info["midpoint_psnr"] = psnr(orig, ref)
    log.info("solve %.3fs, %d iterations, peak rss %.1f MB",
             report.solver_stats.wall_time, report.solver_stats.iterations, info["peak_rss_mb"])
    report_path = Path(args.report) if args.report else out.with_suffix(".report.txt")
    text = json.dumps(info, indent=2, sort_keys=True) if report_path.suffix == ".json" else _flat(info)
    try:
        report_path.write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {report_path}: {exc}") from None
    print(f"recovered image: {out}")
    print(f"objective: {report.objective:.6f}  shift: {report.shift_applied:+d}  "
          f"time: {report.wall_time:.2f}s")
    return 0


def _flat(info: dict, prefix: str = "") -> str:
    lines = []
    for key, value in info.items():
        if isinstance(value, dict):
            lines.append(_flat(value, f"{prefix}{key}.").rstrip("\n"))
        else:
            lines.append(f"{prefix}{key}: {value}")
    return "\n".join(lines) + "\n"


# --- baseline ----------------------------------------------------------------

def cmd_baseline(args, cfg: RunConfig) -> int:
    grid, mask, bit_depth = read_sidecar(args.sidecar)
    img = scan_align_dc(grid, x_max=(1 << bit_depth) - 1, mask=mask)
    save_image(img, args.output)
    print(f"scan baseline image: {args.output}")
    return 0


# --- sweep -------------------------------------------------------------------

@dataclasses.dataclass
class SweepRow:
    u: int
    images: int
    failures: int
    mean_psnr: float
    mean_shift_psnr: float
    mean_ssim: float
    mean_wall_time: float
    max_wall_time: float


def _sweep_one(path: str, u: int, block_size: int, settings: SolverSettings):
    img = load_image(path)
    layout = make_layout(img, block_size)
    grid = forward_dct(img, layout)
    mask = most_significant_mask(u, block_size)
    rep = recover(grid, mask, layout, settings=settings, x_min=img.x_min, x_max=img.x_max)
    return {
        "psnr": psnr(img, rep.recovered),
        "shift_psnr": shift_compensated_psnr(img, rep.recovered)[0],
        "ssim": ssim(img, rep.recovered),
        "wall_time": rep.wall_time,
    }


def run_sweep(images, u_values, block_size: int = 8, settings: SolverSettings | None = None,
              workers: int = 1):
    """Erase the top-U coefficients, recover and score, for every image and U.

    Failures are logged and counted, not raised.  Returns one
    :class:`SweepRow` per U and the per-image results keyed by ``(path, U)``.
    """
    images = [str(p) for p in images]
    if not images:
        raise EmptyInput("no images to sweep")
    u_values = list(u_values)
    for u in u_values:
        if not 1 <= u < block_size * block_size:
            raise InvalidCount(f"U={u} outside [1, {block_size * block_size - 1}]")
    settings = settings or SolverSettings()
    jobs = [(p, u) for u in u_values for p in images]
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {job: pool.submit(_sweep_one, job[0], job[1], block_size, settings)
                       for job in jobs}
            for job, fut in futures.items():
                try:
                    results[job] = fut.result()
                except Exception as exc:  # noqa: BLE001 - logged and counted
                    log.warning("%s U=%d failed: %s", job[0], job[1], exc)
                    results[job] = None
    else:
        for job in jobs:
            try:
                results[job] = _sweep_one(job[0], job[1], block_size, settings)
            except Exception as exc:  # noqa: BLE001 - logged and counted
                log.warning("%s U=%d failed: %s", job[0], job[1], exc)
                results[job] = None
    rows = []
    for u in u_values:
        ok = [results[(p, u)] for p in images if results[(p, u)] is not None]
        fails = len(images) - len(ok)

        def mean(key, vals=ok):
            v = [r[key] for r in vals if math.isfinite(r[key])]
            return float(np.mean(v)) if v else math.nan

        rows.append(SweepRow(
            u=u, images=len(ok), failures=fails,
            mean_psnr=mean("psnr"), mean_shift_psnr=mean("shift_psnr"),
            mean_ssim=mean("ssim"), mean_wall_time=mean("wall_time"),
            max_wall_time=max((r["wall_time"] for r in ok), default=math.nan),
        ))
    return rows, results


def cmd_sweep(args, cfg: RunConfig) -> int:
    images = list(args.images) or list(cfg.images)
    if args.samples:
        from .samples import bundled_samples

        images += [str(s.path) for s in bundled_samples()]
    workers = cfg.workers or (os.cpu_count() or 1)
    rows, _ = run_sweep(images, range(cfg.u_min, cfg.u_max + 1), cfg.block_size,
                        cfg.solver_settings(), workers)
    out_dir = Path(cfg.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "sweep.csv"
    fields = [f.name for f in dataclasses.fields(SweepRow)]
    try:
        with open(table, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(fields)
            for r in rows:
                w.writerow([getattr(r, f) for f in fields])
    except OSError as exc:
        raise IoFailure(f"cannot write {table}: {exc}") from None
    total_fail = sum(r.failures for r in rows)
    print(f"sweep table: {table}")
    print(f"failures: {total_fail}")
    return 0


# --- compare -----------------------------------------------------------------

def compare_table(original, candidates: dict) -> list[dict]:
    """Per-candidate metrics; the first candidate is the proposed one and
    every other gets a delta row (proposed minus other, positive = proposed
    better, except MAE where lower is better and the sign is flipped)."""
    rows = []
    for label, img in candidates.items():
        try:
            s = ssim(original, img)
        except TooSmall:
            s = math.nan
        rows.append({
            "candidate": label,
            "psnr": psnr(original, img),
            "ssim": s,
            "shift_psnr": shift_compensated_psnr(original, img)[0],
            "mae": mae(original, img),
        })
    if len(rows) > 1:
        head = rows[0]
        for other in rows[1:len(candidates)]:
            rows.append({
                "candidate": f"delta:{head['candidate']}-{other['candidate']}",
                "psnr": _delta(head["psnr"], other["psnr"]),
                "ssim": head["ssim"] - other["ssim"],
                "shift_psnr": _delta(head["shift_psnr"], other["shift_psnr"]),
                "mae": other["mae"] - head["mae"],
            })
    return rows


def _delta(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return a - b


def cmd_compare(args, cfg: RunConfig) -> int:
    original = load_image(args.original)
    candidates = {}
    for path in args.candidates:
        label = Path(path).stem
        while label in candidates:
            label += "'"
        candidates[label] = load_image(path)
    rows = compare_table(original, candidates)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["candidate", "psnr", "ssim", "shift_psnr", "mae"])
    w.writeheader()
    for r in rows:
        w.writerow(r)
    if args.output:
        try:
            Path(args.output).write_text(buf.getvalue())
        except OSError as exc:
            raise IoFailure(f"cannot write {args.output}: {exc}") from None
    else:
        sys.stdout.write(buf.getvalue())
    return 0


# --- crop --------------------------------------------------------------------

def cmd_crop(args, cfg: RunConfig) -> int:
    img = crop_image(load_image(args.input), cfg.block_size)
    save_image(img, args.output)
    print(f"{img.width}x{img.height} -> {args.output}")
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--block-size", type=int, dest="block_size")
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iterations", type=int, dest="max_iterations")
    common.add_argument("--threads", type=int)
    common.add_argument("--backend", choices=["compiled", "python"])
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="dctrecover", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("erase", parents=[common], help="erase coefficients, write sidecar")
    e.add_argument("input")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--dc-only", action="store_true", dest="dc_only")
    g.add_argument("--top", type=int, metavar="U")
    g.add_argument("--mask", metavar="MASK", help="'dc', 'top:U' or 'k:l,k:l,...'")
    e.add_argument("--fill", choices=[f.value for f in FillPolicy])
    e.add_argument("-o", "--output", help="damaged image path")
    e.add_argument("--sidecar", help="coefficient sidecar path")
    e.add_argument("--out-dir", dest="out_dir")
    e.set_defaults(func=cmd_erase)

    r = sub.add_parser("recover", parents=[common], help="recover from a sidecar")
    r.add_argument("sidecar")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--report", help="report path (.json for JSON, otherwise key: value text)")
    r.add_argument("--original", help="original image, adds quality metrics to the report")
    r.set_defaults(func=cmd_recover)

    b = sub.add_parser("baseline", parents=[common], help="scan-baseline DC recovery")
    b.add_argument("sidecar")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_baseline)

    s = sub.add_parser("sweep", parents=[common], help="quality and time over a U range")
    s.add_argument("images", nargs="*")
    s.add_argument("--samples", action="store_true", help="add the bundled test images")
    s.add_argument("--u-min", type=int, dest="u_min")
    s.add_argument("--u-max", type=int, dest="u_max")
    s.add_argument("--workers", type=int)
    s.add_argument("--out-dir", dest="out_dir")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", parents=[common], help="metric table vs. an original")
    c.add_argument("original")
    c.add_argument("candidates", nargs="+", help="first one is the proposed result")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("crop", parents=[common], help="crop to a multiple of the block size")
    k.add_argument("input")
    k.add_argument("-o", "--output", required=True)
    k.set_defaults(func=cmd_crop)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except DctRecoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IoFailure.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
