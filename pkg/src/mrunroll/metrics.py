"""Image quality metrics (PSNR, SSIM on magnitude images) and aggregation.

Reports follow the median [25th, 75th percentile] format, one column per
method, one row per metric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter


def psnr(ref: np.ndarray, rec: np.ndarray) -> float:
    """Peak SNR in dB over magnitudes; +inf sentinel for identical images."""
    if ref.shape != rec.shape:
        raise ValueError(f"psnr: shapes {ref.shape} vs {rec.shape}")
    ref_m = np.abs(ref)
    peak = ref_m.max()
    if peak == 0.0:
        raise ValueError("psnr: reference image is identically zero")
    err = ref_m - np.abs(rec)
    mse = float(np.mean(err * err))
    if mse == 0.0:
        return math.inf
    return float(20.0 * np.log10(peak / np.sqrt(mse)))


def _local_mean(x: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    # truncate chosen so the kernel radius is exactly `radius`
    return gaussian_filter(x, sigma=sigma, truncate=radius / sigma)


def ssim(ref: np.ndarray, rec: np.ndarray, win: int = 11, sigma: float = 1.5,
         k1: float = 0.01, k2: float = 0.03, symmetric: bool = False) -> float:
    """Mean structural similarity of magnitude images, Gaussian-windowed.

    The dynamic range is max |ref| (or the max over both images when
    `symmetric` is set, making the value order-independent).  The local
    map is cropped by the window radius before averaging, so boundary
    padding never contributes.
    """
    if ref.shape != rec.shape:
        raise ValueError(f"ssim: shapes {ref.shape} vs {rec.shape}")
    if win % 2 != 1:
        raise ValueError(f"ssim: window size must be odd, got {win}")
    a = np.abs(ref).astype(np.float64)
    b = np.abs(rec).astype(np.float64)
    data_range = max(a.max(), b.max()) if symmetric else a.max()
    if data_range == 0.0:
        raise ValueError("ssim: reference image is identically zero")
    radius = (win - 1) // 2
    if min(ref.shape) < win:
        raise ValueError(f"ssim: image {ref.shape} smaller than window {win}")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_a = _local_mean(a, sigma, radius)
    mu_b = _local_mean(b, sigma, radius)
    var_a = _local_mean(a * a, sigma, radius) - mu_a * mu_a
    var_b = _local_mean(b * b, sigma, radius) - mu_b * mu_b
    cov = _local_mean(a * b, sigma, radius) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = num / den
    interior = smap[radius:-radius, radius:-radius]
    return float(interior.mean())


@dataclass(frozen=True)
class SliceMetrics:
    slice_id: int
    method: str
    ssim: float
    psnr: float


@dataclass(frozen=True)
class MetricSummary:
    median: float
    p25: float
    p75: float


@dataclass(frozen=True)
class AggregateReport:
    methods: tuple[str, ...]
    ssim: dict[str, MetricSummary]
    psnr: dict[str, MetricSummary]
    n_slices: dict[str, int]


def _percentile(values: np.ndarray, q: float) -> float:
    """Linear-interpolation percentile that tolerates +inf sentinels."""
    v = np.sort(values)
    pos = (len(v) - 1) * q / 100.0
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    if lo == hi or v[lo] == v[hi]:
        return float(v[lo])
    return float(v[lo] + (v[hi] - v[lo]) * (pos - lo))


def aggregate(metrics: list[SliceMetrics]) -> AggregateReport:
    """Median and interquartile range per method, linear interpolation."""
    if not metrics:
        raise ValueError("aggregate: no metrics to aggregate")
    methods = tuple(dict.fromkeys(m.method for m in metrics))
    ssim_s, psnr_s, counts = {}, {}, {}
    for method in methods:
        rows = sorted((m for m in metrics if m.method == method),
                      key=lambda m: m.slice_id)
        for attr, store in (("ssim", ssim_s), ("psnr", psnr_s)):
            vals = np.array([getattr(m, attr) for m in rows])
            store[method] = MetricSummary(
                _percentile(vals, 50), _percentile(vals, 25),
                _percentile(vals, 75))
        counts[method] = len(rows)
    return AggregateReport(methods, ssim_s, psnr_s, counts)


def _cell(s: MetricSummary, digits: int) -> str:
    return f"{s.median:.{digits}f} [{s.p25:.{digits}f}, {s.p75:.{digits}f}]"


def report_text(report: AggregateReport) -> str:
    """Render the aggregate as one column per method, SSIM and PSNR rows."""
    width = max(28, max(len(m) for m in report.methods) + 2)
    lines = ["Metric".ljust(8) + "".join(m.ljust(width) for m in report.methods)]
    lines.append("SSIM".ljust(8) + "".join(
        _cell(report.ssim[m], 3).ljust(width) for m in report.methods))
    lines.append("PSNR".ljust(8) + "".join(
        _cell(report.psnr[m], 3).ljust(width) for m in report.methods))
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str | Path, metrics: list[SliceMetrics]) -> None:
    rows = sorted(metrics, key=lambda m: (m.method, m.slice_id))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slice_id", "method", "ssim", "psnr"])
        for m in rows:
            writer.writerow([m.slice_id, m.method, repr(m.ssim), repr(m.psnr)])


def write_report_csv(path: str | Path, report: AggregateReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "metric", "median", "p25", "p75", "n"])
        for m in report.methods:
            for metric, store in (("ssim", report.ssim), ("psnr", report.psnr)):
                s = store[m]
                writer.writerow([m, metric, repr(s.median), repr(s.p25),
                                 repr(s.p75), report.n_slices[m]])


def write_pgm16(path: str | Path, image: np.ndarray) -> None:
    """16-bit grayscale binary PGM of a magnitude image, max-normalized."""
    mag = np.abs(image).astype(np.float64)
    peak = mag.max()
    if peak > 0:
        mag = mag / peak
    pixels = np.round(mag * 65535.0).astype(">u2")
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(pixels.tobytes())
