"""Quality metrics and the least-squares tools used for calibration.

Metric functions accept :class:`~dynacompose.frame_model.Frame` objects or
plain ``uint8`` arrays; everything is evaluated in float64.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateX,
    DimensionMismatch,
    EmptyRegion,
    InsufficientEntries,
    InvalidValue,
    IoFailure,
    NonPositiveMax,
)
from .frame_model import Frame, Mask
from .optical_flow import to_luma

PSNR_CAP = 99.0
PEAK = 255.0
SSIM_SIGMA = 1.5
SSIM_RADIUS = 5
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2

RATIOS = tuple(k / 8 for k in range(1, 8))


def _array(image) -> np.ndarray:
    return (image.data if isinstance(image, Frame) else np.asarray(image)).astype(np.float64)


def _region(region) -> np.ndarray | None:
    if region is None:
        return None
    return np.asarray(region.data if isinstance(region, Mask) else region, dtype=bool)


def quantize_ratio(r: float, tol: float = 0.06) -> float:
    """Snap ``r`` to the nearest admissible ratio ``k/8``.

    A tolerance of 0.06 lets the misprinted 0.325 resolve to 3/8.
    """
    k = min(range(1, 8), key=lambda k: abs(r - k / 8))
    if abs(r - k / 8) > tol:
        raise InvalidValue(f"ratio {r} is not close to any k/8, k=1..7")
    return k / 8


def mse(reference, test, region=None) -> float:
    ref, tst = _array(reference), _array(test)
    if ref.shape != tst.shape:
        raise DimensionMismatch(f"shapes differ: {ref.shape} vs {tst.shape}")
    err = (ref - tst) ** 2
    sel = _region(region)
    if sel is not None:
        if sel.shape != ref.shape[:2]:
            raise DimensionMismatch(f"region {sel.shape} vs image {ref.shape[:2]}")
        if not sel.any():
            raise EmptyRegion("region has no pixels")
        err = err[sel]
    return float(err.mean())


def psnr(reference, test, region=None) -> float:
    """PSNR in dB for 8-bit data; zero error returns the 99 dB cap.

    With ``region`` the mean squared error is taken over the selected
    pixels only (all channels).
    """
    e = mse(reference, test, region)
    if e == 0.0:
        return PSNR_CAP
    return 10.0 * math.log10(PEAK * PEAK / e)


def gaussian_window(radius: int = SSIM_RADIUS, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _local_mean(image: np.ndarray, g: np.ndarray, norm: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(image, g, axis=0, mode="constant", cval=0.0)
    out = ndimage.correlate1d(out, g, axis=1, mode="constant", cval=0.0)
    return out / norm


def ssim_map(reference, test) -> np.ndarray:
    """Per-pixel SSIM with an 11x11 Gaussian window (sigma 1.5).

    Near the border the window is truncated to the image and renormalized,
    so the map has the image's size and small frames are handled.
    """
    x, y = to_luma(_array(reference)), to_luma(_array(test))
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    g = gaussian_window()
    norm = _local_mean(np.ones_like(x), g, np.ones_like(x))
    mx = _local_mean(x, g, norm)
    my = _local_mean(y, g, norm)
    sxx = _local_mean(x * x, g, norm) - mx * mx
    syy = _local_mean(y * y, g, norm) - my * my
    sxy = _local_mean(x * y, g, norm) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return num / den


def ssim(reference, test, region=None) -> float:
    smap = ssim_map(reference, test)
    sel = _region(region)
    if sel is None:
        return float(smap.mean())
    if sel.shape != smap.shape:
        raise DimensionMismatch(f"region {sel.shape} vs image {smap.shape}")
    if not sel.any():
        raise EmptyRegion("region has no pixels")
    return float(smap[sel].mean())


@dataclass(frozen=True)
class RatioSweepResult:
    """PSNR (dB) per reference-frame ratio."""

    entries: Mapping[float, float]

    def __post_init__(self):
        clean = {}
        for r, p in self.entries.items():
            r = float(r)
            if not any(abs(r - a) < 1e-9 for a in RATIOS):
                raise InvalidValue(f"ratio {r} is not one of k/8, k=1..7")
            clean[quantize_ratio(r)] = float(p)
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "psnr"])
        for r, p in self.entries.items():
            writer.writerow([repr(r), repr(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RatioSweepResult":
        rows = csv.DictReader(io.StringIO(text))
        return cls({float(row["r"]): float(row["psnr"]) for row in rows})

    def save(self, path: str | os.PathLike) -> None:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(self.to_csv())
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc


def signed_max_change_rate(sweep: RatioSweepResult | Mapping[float, float]) -> float:
    """Sign of (ratio at max - ratio at min) times the relative PSNR range.

    Ties resolve to the first occurrence in ascending ratio order, so a
    constant sweep has ``argmax == argmin`` and yields 0.
    """
    entries = sweep.entries if isinstance(sweep, RatioSweepResult) else dict(sweep)
    if len(entries) < 2:
        raise InsufficientEntries(f"need at least 2 entries, got {len(entries)}")
    ratios = sorted(entries)
    values = [entries[r] for r in ratios]
    hi, lo = max(values), min(values)
    if not hi > 0:
        raise NonPositiveMax(f"max PSNR {hi} must be positive")
    r_hi = ratios[values.index(hi)]
    r_lo = ratios[values.index(lo)]
    diff = r_hi - r_lo
    sign = (diff > 0) - (diff < 0)
    return sign * (hi - lo) / hi


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    rss: float

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=np.float64) + self.intercept

    def zero_crossing(self) -> float | None:
        if self.slope == 0:
            return None
        return -self.intercept / self.slope

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "rss": self.rss}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LineFit":
        return cls(float(d["slope"]), float(d["intercept"]), float(d["rss"]))


def fit_line(points: Iterable[tuple[float, float]]) -> LineFit:
    """Ordinary least squares ``y = slope * x + intercept`` with squared-residual sum."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise DegenerateX("need at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateX("all x values are equal")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    return LineFit(slope, intercept, float(resid @ resid))


def ratio_label(r: float) -> str:
    return str(Fraction(r).limit_denominator(8))
