"""Masked-region quality reports and the memory/quality tradeoff sweep."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .calibration import CalibrationProfile
from .configurator import BASELINE_RATIO, DEFAULT_STRIDE, MemoryModel, max_frames
from .errors import DimensionMismatch
from .frame_model import Frame, Mask
from .inpaint import InpainterAdapter
from .optical_flow import PyramidConfig
from .pipeline import analyze_sequence, run_stream
from .quality_metrics import psnr, ssim


@dataclass(frozen=True)
class FrameMetrics:
    index: int
    psnr: float
    ssim: float


@dataclass(frozen=True)
class EvaluationReport:
    frames: tuple[FrameMetrics, ...]

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([m.psnr for m in self.frames]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([m.ssim for m in self.frames]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "psnr", "ssim"])
        for m in self.frames:
            w.writerow([m.index, repr(m.psnr), repr(m.ssim)])
        w.writerow(["mean", repr(self.mean_psnr), repr(self.mean_ssim)])
        return buf.getvalue()


def evaluate_run(
    truth: Mapping[int, Frame],
    output: Mapping[int, Frame],
    masks: Mapping[int, Mask],
    indices: Sequence[int] | None = None,
) -> EvaluationReport:
    """PSNR and SSIM over each frame's mask region.

    Frames with an empty mask are skipped.  ``truth`` and ``output`` must
    cover the same indices unless ``indices`` selects a common subset.
    """
    if indices is None:
        if set(truth) != set(output):
            raise DimensionMismatch(
                f"ground truth has {len(truth)} frames, output has {len(output)}; index sets differ"
            )
        indices = sorted(truth)
    rows = []
    for i in indices:
        if i not in truth or i not in output or i not in masks:
            raise DimensionMismatch(f"frame {i} missing from one of the inputs")
        if masks[i].mask_size == 0:
            continue
        rows.append(FrameMetrics(i, psnr(truth[i], output[i], masks[i]), ssim(truth[i], output[i], masks[i])))
    if not rows:
        raise DimensionMismatch("no frame with a nonempty mask to evaluate")
    return EvaluationReport(tuple(rows))


@dataclass(frozen=True)
class PairedDelta:
    """Second run minus first run, per frame and on average."""

    first: EvaluationReport
    second: EvaluationReport

    def __post_init__(self):
        a = [m.index for m in self.first.frames]
        b = [m.index for m in self.second.frames]
        if a != b:
            raise DimensionMismatch("runs were evaluated on different frames")

    @property
    def delta_psnr(self) -> float:
        return float(np.mean([b.psnr - a.psnr for a, b in zip(self.first.frames, self.second.frames)]))

    @property
    def delta_ssim(self) -> float:
        return float(np.mean([b.ssim - a.ssim for a, b in zip(self.first.frames, self.second.frames)]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "psnr_a", "psnr_b", "delta_psnr", "ssim_a", "ssim_b", "delta_ssim"])
        for a, b in zip(self.first.frames, self.second.frames):
            w.writerow([a.index, repr(a.psnr), repr(b.psnr), repr(b.psnr - a.psnr),
                        repr(a.ssim), repr(b.ssim), repr(b.ssim - a.ssim)])
        w.writerow(["mean", repr(self.first.mean_psnr), repr(self.second.mean_psnr), repr(self.delta_psnr),
                    repr(self.first.mean_ssim), repr(self.second.mean_ssim), repr(self.delta_ssim)])
        return buf.getvalue()


TRADEOFF_HEADER = ["total", "memory_mb", "baseline_psnr", "configured_psnr", "delta"]


def memory_tradeoff(
    frames: Sequence[Frame],
    masks: Sequence[Mask],
    profile: CalibrationProfile | None,
    totals: Sequence[int] = tuple(range(5, 12)),
    per_frame_mb: float = 662,
    base_mb: float = 0,
    stride: int = DEFAULT_STRIDE,
    adapter: InpainterAdapter = InpainterAdapter(),
    config: PyramidConfig = PyramidConfig(),
    targets: Sequence[int] | None = None,
) -> list[dict]:
    """Quality at each input-set size, balanced split versus configured split.

    Memory grows linearly with ``total`` by construction; quality is
    reported as measured (not forced monotone).  Every total is evaluated
    on the same targets, chosen late enough for the largest total.
    """
    analyzer = analyze_sequence(frames, masks, config)
    if targets is None:
        start = max(totals)
        targets = [t for t in range(start, len(frames)) if masks[t].mask_size > 0]
    fmap = {f.index: f for f in frames}
    mmap = {m.index: m for m in masks}
    rows = []
    for total in totals:
        model = MemoryModel(per_frame_mb, base_mb + per_frame_mb * total, base_mb)
        n = max_frames(model)
        base = run_stream(frames, masks, total=n, stride=stride, force_ratio=BASELINE_RATIO,
                          adapter=adapter, targets=targets, analyzer=analyzer)
        conf = run_stream(frames, masks, profile=profile, total=n, stride=stride,
                          adapter=adapter, targets=targets, analyzer=analyzer)
        b = evaluate_run(fmap, base.outputs, mmap, targets).mean_psnr
        c = evaluate_run(fmap, conf.outputs, mmap, targets).mean_psnr
        rows.append({"total": n, "memory_mb": model.usage_mb(n), "baseline_psnr": b,
                     "configured_psnr": c, "delta": c - b})
    return rows


def rows_to_csv(rows: Sequence[Mapping], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
