"""PSNR, improvement deltas, timing, and Table-style report formatting."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .imagecore import GrayImage, check_same_shape

INF = math.inf


@dataclass(frozen=True)
class PsnrReport:
    sample_id: str
    psnr_noisy_db: float
    psnr_denoised_db: float
    improvement_db: float
    patch_size: int
    elapsed_ms: float


def psnr(reference: GrayImage, test: GrayImage) -> float:
    """10*log10(peak^2 / MSE) with peak = reference.max_value; inf when MSE is 0."""
    check_same_shape(reference, test)
    if reference.max_value != test.max_value:
        raise ValueError("images must share max_value")
    diff = reference.data - test.data
    mse = float(np.mean(diff * diff))
    if mse == 0:
        return INF
    return 10.0 * math.log10(reference.max_value ** 2 / mse)


def improvement(gt: GrayImage, noisy: GrayImage, denoised: GrayImage) -> float:
    """PSNR gain of ``denoised`` over ``noisy``.

    inf when the restoration is exact and the input was not; 0 when the two
    inputs are identical (including both exact).
    """
    check_same_shape(gt, noisy, denoised)
    before = psnr(gt, noisy)
    after = psnr(gt, denoised)
    if before == after:
        return 0.0
    return after - before


def time_op(f: Callable[[], Any]) -> tuple[Any, float]:
    start = time.perf_counter()
    result = f()
    return result, (time.perf_counter() - start) * 1000.0


def time_repeated(f: Callable[[], Any], repeats: int) -> tuple[Any, list[float], float]:
    """Run ``f`` ``repeats`` times; return the last result, per-run ms and mean ms."""
    runs = []
    result = None
    for _ in range(repeats):
        result, ms = time_op(f)
        runs.append(ms)
    return result, runs, sum(runs) / len(runs)


def format_db(value: float, digits: int = 3) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


REPORT_FIELDS = ("sample_id", "patch_size", "psnr_noisy_db", "psnr_denoised_db", "improvement_db")


def reports_to_csv(reports: Iterable[PsnrReport], include_timing: bool = False) -> str:
    """CSV text for a report list.

    Timing is left out by default so that repeated runs produce identical bytes.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    fields = REPORT_FIELDS + (("elapsed_ms",) if include_timing else ())
    writer.writerow(fields)
    for r in reports:
        row = [r.sample_id, r.patch_size, format_db(r.psnr_noisy_db, 6),
               format_db(r.psnr_denoised_db, 6), format_db(r.improvement_db, 6)]
        if include_timing:
            row.append(f"{r.elapsed_ms:.3f}")
        writer.writerow(row)
    return buf.getvalue()


def mean_improvement_by_patch(reports: Iterable[PsnrReport]) -> dict[int, float]:
    groups: dict[int, list[float]] = {}
    for r in reports:
        groups.setdefault(r.patch_size, []).append(r.improvement_db)
    return {size: float(np.mean(vals)) for size, vals in sorted(groups.items())}


def format_table(reports: Sequence[PsnrReport], reference_ms: float | None = None) -> str:
    """Aligned text table: one row per sample, one column per patch size."""
    sizes = sorted({r.patch_size for r in reports})
    samples = sorted({r.sample_id for r in reports})
    cell = {(r.sample_id, r.patch_size): r for r in reports}
    header = ["Image ID"] + [f"Patch size {s}x{s} pixels" for s in sizes]
    rows = [[sid] + [format_db(cell[sid, s].improvement_db) if (sid, s) in cell else "-" for s in sizes]
            for sid in samples]
    means = mean_improvement_by_patch(reports)
    rows.append(["mean"] + [format_db(means[s]) for s in sizes])
    elapsed = [r.elapsed_ms for r in reports]
    rows.append(["mean ms"] + [f"{np.mean([r.elapsed_ms for r in reports if r.patch_size == s]):.1f}"
                               for s in sizes])
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]

    def line(cells):
        return "| " + " | ".join(c.ljust(wd) for c, wd in zip(cells, widths)) + " |"

    sep = "+-" + "-+-".join("-" * wd for wd in widths) + "-+"
    out = [sep, line(header), sep] + [line(r) for r in rows[:-2]] + [sep] + [line(r) for r in rows[-2:]] + [sep]
    out.append("PSNR improvement in dB (denoised minus noisy)")
    if reference_ms is not None and elapsed:
        out.append(f"mean time per run: {np.mean(elapsed):.1f} ms (reference figure: {reference_ms:g} ms)")
    return "\n".join(out) + "\n"
