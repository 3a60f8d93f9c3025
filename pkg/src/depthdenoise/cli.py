"""Command-line entry point: ``depthdenoise {denoise,bench,degrade,synth}``.

Exit codes: 0 success, 1 I/O or validation error, 2 region starved.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bench import REFERENCE_MS, NoiseSpec, degrade, run_benchmark, write_synthetic_dataset
from .config import config_hash, dump_config, load_config
from .imagecore import load_gray_image, load_guide_image, load_mask, save_gray_image, save_mask
from .inpaint import InpaintAuditRecord, RegionStarvedError
from .metrics import format_table, mean_improvement_by_patch, reports_to_csv
from .pipeline import denoise
from .regions import render_labels

log = logging.getLogger("depthdenoise")

EXIT_OK, EXIT_ERROR, EXIT_STARVED = 0, 1, 2

AUDIT_FIELDS = ("target_x", "target_y", "source_x", "source_y", "priority", "distance", "region_label", "fallback_flag")


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                   metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--search-radius", type=int, help="limit the patch search to this window radius")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_noise_args(p: argparse.ArgumentParser) -> None:
    defaults = NoiseSpec()
    p.add_argument("--seed", type=int, default=defaults.rng_seed)
    p.add_argument("--noise-kind", choices=("holes", "gaussian", "both"), default=defaults.kind)
    p.add_argument("--hole-fraction", type=float, default=defaults.hole_fraction)
    p.add_argument("--blob-size", type=int, default=defaults.hole_blob_size)
    p.add_argument("--noise-sigma", type=float, default=defaults.gaussian_sigma)


def _noise_spec(args) -> NoiseSpec:
    return NoiseSpec(kind=args.noise_kind, hole_fraction=args.hole_fraction, hole_blob_size=args.blob_size,
                     gaussian_sigma=args.noise_sigma, rng_seed=args.seed)


def _resolve_config(args, extra: Optional[dict] = None):
    overrides = dict(args.overrides)
    if args.search_radius is not None:
        overrides["search_radius"] = str(args.search_radius)
    if extra:
        overrides.update(extra)
    config = load_config(args.config, overrides)
    if args.verbose:
        sys.stderr.write(dump_config(config))
        sys.stderr.write(f"config hash: {config_hash(config)}\n")
    return config


def write_audit_csv(records: Sequence[InpaintAuditRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AUDIT_FIELDS)
        for r in records:
            writer.writerow([r.target_center.x, r.target_center.y, r.source_center.x, r.source_center.y,
                             repr(r.priority), repr(r.distance), r.region_label, int(r.fallback)])


def cmd_denoise(args) -> int:
    extra = {"patch.size": str(args.patch_size)} if args.patch_size is not None else None
    config = _resolve_config(args, extra)
    depth = load_gray_image(args.input)
    guide = load_guide_image(args.guide, depth.max_value) if args.guide else None
    mask = load_mask(args.mask, depth.shape) if args.mask else None
    result = denoise(depth, config, guide=guide, extra_mask=mask)
    save_gray_image(result.image, args.output)
    if args.audit:
        write_audit_csv(result.audit, args.audit)
    if args.labels_out:
        save_gray_image(render_labels(result.labels, depth.max_value), args.labels_out)
    if args.verbose:
        fs, ist = result.filter_stats, result.inpaint_stats
        log.info("filtered %d px, edge pass-through %d px, masked %d px, empty windows %d",
                 fs.filtered, fs.edge_passthrough, fs.masked, fs.empty_window)
        log.info("inpainted %d px in %d iterations (%d region fallbacks, %d default normals), %d regions",
                 result.target.count(), ist.iterations, ist.fallbacks, ist.default_normals,
                 result.labels.region_count)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _resolve_config(args)
    spec = _noise_spec(args)
    reports = run_benchmark(args.dataset, args.patch_sizes, spec, config,
                            identity=args.identity, triptych_dir=args.triptych)
    Path(args.report).write_text(reports_to_csv(reports), encoding="utf-8")
    if args.timings:
        Path(args.timings).write_text(reports_to_csv(reports, include_timing=True), encoding="utf-8")
    table = format_table(reports, reference_ms=REFERENCE_MS)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    if args.verbose:
        for size, mean in mean_improvement_by_patch(reports).items():
            log.info("patch %d: mean improvement %.3f dB", size, mean)
    return EXIT_OK


def cmd_degrade(args) -> int:
    gt = load_gray_image(args.input)
    noisy, mask = degrade(gt, _noise_spec(args))
    save_gray_image(noisy, args.output)
    if args.mask_out:
        save_mask(mask, args.mask_out)
    return EXIT_OK


def cmd_synth(args) -> int:
    for path in write_synthetic_dataset(args.out, args.count, args.height, args.width, args.seed):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthdenoise", description="Edge-guided depth image denoising.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="denoise one depth image")
    p.add_argument("--input", required=True, help="depth image (graymap or PNG)")
    p.add_argument("--output", required=True)
    p.add_argument("--guide", help="optional guide image (RGB is converted to gray)")
    p.add_argument("--mask", help="extra target mask; nonzero pixels are inpainted")
    p.add_argument("--audit", help="write the per-patch audit log as CSV")
    p.add_argument("--labels-out", help="write the region label map as a graymap")
    p.add_argument("--patch-size", type=int)
    _add_config_args(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("bench", help="PSNR benchmark over a directory of ground-truth images")
    p.add_argument("--dataset", required=True)
    p.add_argument("--patch-sizes", type=_int_list, default=[5, 13, 21])
    p.add_argument("--report", required=True, help="CSV report path")
    p.add_argument("--table", help="also write the aligned table here")
    p.add_argument("--timings", help="CSV report including per-run milliseconds")
    p.add_argument("--triptych", help="directory for noisy|denoised|truth images")
    p.add_argument("--identity", action="store_true", help="skip denoising (0 dB baseline)")
    _add_noise_args(p)
    _add_config_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("degrade", help="inject synthetic holes and noise into a ground-truth image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mask-out")
    _add_noise_args(p)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("synth", help="write synthetic ground-truth depth images")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except RegionStarvedError as exc:
        print(f"depthdenoise: {exc}", file=sys.stderr)
        return EXIT_STARVED
    except (OSError, ValueError) as exc:
        print(f"depthdenoise: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
