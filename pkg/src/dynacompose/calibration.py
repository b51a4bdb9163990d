"""Calibration: from ratio sweeps over a corpus to a segment table.

Per video, PSNR is measured for every reference ratio ``k/8`` and reduced to
the signed maximum change rate.  Regressing that rate against the
normalized masked-flow and mask-change scores gives the two slopes that
weight the combined score; a third regression against the combined score
places the split between reference-favoring and neighbor-favoring
segments.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .configurator import DEFAULT_STRIDE, DEFAULT_TOTAL, compose
from .dynamics import NormalizationBounds, StreamAnalyzer, combine, normalize, slope_weights
from .errors import (
    DegenerateBounds,
    DegenerateSamples,
    DegenerateX,
    EmptyMask,
    InvalidValue,
    IoFailure,
    SchemaMismatch,
    VideoTooShort,
)
from .frame_model import Frame, Mask
from .inpaint import InpainterAdapter
from .optical_flow import PyramidConfig
from .pipeline import analyze_sequence, run_stream
from .quality_metrics import (
    RATIOS,
    LineFit,
    RatioSweepResult,
    fit_line,
    psnr,
    signed_max_change_rate,
)

PROFILE_VERSION = 1
SEGMENT_RATIOS = (7 / 8, 6 / 8, 5 / 8, 4 / 8, 3 / 8, 2 / 8, 1 / 8)


@dataclass(frozen=True)
class SegmentTable:
    breakpoints: tuple[float, ...]
    ratios: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        rs = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "ratios", rs)
        if len(bp) != 8 or len(rs) != 7:
            raise InvalidValue(f"need 8 breakpoints and 7 ratios, got {len(bp)} and {len(rs)}")
        if any(b > a for a, b in zip(bp[1:], bp)) or not bp[0] < bp[-1]:
            raise InvalidValue(f"breakpoints must ascend over a nonempty domain: {bp}")
        if any(not any(abs(r - a) < 1e-12 for a in RATIOS) for r in rs):
            raise InvalidValue(f"ratios must be k/8: {rs}")
        if any(b > a for a, b in zip(rs, rs[1:])):
            raise InvalidValue(f"ratios must be non-increasing: {rs}")
        if sum(r >= 0.5 for r in rs) != 4:
            raise InvalidValue(f"need exactly four ratios >= 1/2: {rs}")

    @property
    def domain(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]

    def lookup(self, x: float) -> float:
        """Ratio of the segment containing ``x`` (clamped to the domain).

        Segments are left-open ``(b_i, b_i+1]`` except the first non-empty
        one, which also owns the domain's lower end.  Zero-width segments
        are never returned.
        """
        lo, hi = self.domain
        x = min(max(float(x), lo), hi)
        bp = self.breakpoints
        for i, r in enumerate(self.ratios):
            if bp[i] < bp[i + 1] and x <= bp[i + 1]:
                return r
        return self.ratios[-1]

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "ratios": list(self.ratios)}


def build_segments(fit: LineFit, domain: tuple[float, float] = (0.0, 1.0)) -> SegmentTable:
    """Split ``domain`` at the fit's zero crossing ``x0``.

    ``[lo, x0]`` is cut into four equal segments with ratios 7/8 .. 4/8,
    ``[x0, hi]`` into three with 3/8 .. 1/8.  ``x0`` is clamped to the
    domain; a flat fit puts it at ``hi`` (positive), ``lo`` (negative) or
    the midpoint (zero).
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise InvalidValue(f"empty domain [{lo}, {hi}]")
    x0 = fit.zero_crossing()
    if x0 is None:
        if fit.intercept > 0:
            x0 = hi
        elif fit.intercept < 0:
            x0 = lo
        else:
            x0 = 0.5 * (lo + hi)
    x0 = min(max(x0, lo), hi)
    left = [lo + (x0 - lo) * i / 4 for i in range(4)]
    right = [x0 + (hi - x0) * j / 3 for j in range(3)]
    return SegmentTable(tuple(left + right + [hi]), SEGMENT_RATIOS)


def _now() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        stamp = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
    else:
        stamp = _dt.datetime.now(_dt.timezone.utc)
    return stamp.replace(microsecond=0).isoformat()


@dataclass(frozen=True)
class CalibrationProfile:
    m_flow: float
    m_mask: float
    combined_fit: LineFit
    bounds: NormalizationBounds
    segments: SegmentTable
    corpus_id: str = ""
    created_at: str = field(default_factory=_now)

    def to_dict(self) -> dict:
        return {
            "version": PROFILE_VERSION,
            "corpus_id": self.corpus_id,
            "created_at": self.created_at,
            "bounds": self.bounds.to_dict(),
            "m_flow": self.m_flow,
            "m_mask": self.m_mask,
            "combined_fit": self.combined_fit.to_dict(),
            "segments": self.segments.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationProfile":
        if not isinstance(d, dict):
            raise SchemaMismatch("profile must be a JSON object")
        if d.get("version") != PROFILE_VERSION:
            raise SchemaMismatch(f"unsupported profile version {d.get('version')!r}")
        try:
            b = d["bounds"]
            seg = d["segments"]
            return cls(
                m_flow=float(d["m_flow"]),
                m_mask=float(d["m_mask"]),
                combined_fit=LineFit.from_dict(d["combined_fit"]),
                bounds=NormalizationBounds(
                    float(b["flow_min"]), float(b["flow_max"]),
                    float(b["mask_min"]), float(b["mask_max"]),
                ),
                segments=SegmentTable(tuple(seg["breakpoints"]), tuple(seg["ratios"])),
                corpus_id=str(d["corpus_id"]),
                created_at=str(d["created_at"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaMismatch(f"profile is missing or has malformed field: {exc}") from exc
        except (InvalidValue, DegenerateBounds) as exc:
            raise SchemaMismatch(str(exc)) from exc


def save_profile(profile: CalibrationProfile, path: str | os.PathLike) -> None:
    try:
        Path(path).write_text(json.dumps(profile.to_dict(), indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_profile(path: str | os.PathLike) -> CalibrationProfile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path} is not valid JSON: {exc}") from exc
    return CalibrationProfile.from_dict(data)


def fit_profile(
    samples: Iterable[tuple[float, float, float]],
    corpus_id: str = "",
    created_at: str | None = None,
) -> CalibrationProfile:
    """Fit a profile to per-video ``(raw_flow, raw_mask, change_rate)`` samples."""
    data = np.asarray(list(samples), dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 3:
        raise DegenerateSamples(f"need at least 3 (flow, mask, rate) samples, got {len(data)}")
    flow, mask, rate = data.T
    try:
        bounds = NormalizationBounds(flow.min(), flow.max(), mask.min(), mask.max())
    except DegenerateBounds as exc:
        raise DegenerateSamples(f"samples do not spread on both axes: {exc}") from exc
    xf = np.array([normalize(v, bounds.flow_min, bounds.flow_max) for v in flow])
    xm = np.array([normalize(v, bounds.mask_min, bounds.mask_max) for v in mask])
    m_flow = fit_line(zip(xf, rate)).slope
    m_mask = fit_line(zip(xm, rate)).slope
    w_flow, w_mask = slope_weights(m_flow, m_mask)
    xc = [combine(a, b, w_flow, w_mask) for a, b in zip(xf, xm)]
    try:
        combined = fit_line(zip(xc, rate))
    except DegenerateX as exc:
        raise DegenerateSamples(f"combined scores do not spread: {exc}") from exc
    return CalibrationProfile(
        m_flow=m_flow,
        m_mask=m_mask,
        combined_fit=combined,
        bounds=bounds,
        segments=build_segments(combined, (0.0, 1.0)),
        corpus_id=corpus_id,
        created_at=created_at if created_at is not None else _now(),
    )


def first_full_target(n_frames: int, total: int = DEFAULT_TOTAL, stride: int = DEFAULT_STRIDE) -> int:
    """Earliest target at which every ratio k/8 composes without degradation."""
    wanted = {r: min(max(int(np.floor(r * total + 0.5)), 1), total - 1) for r in RATIOS}
    for t in range(total - 1, n_frames):
        if all(len(compose(t, t + 1, r, total, stride).reference_indices) == k for r, k in wanted.items()):
            return t
    need = max(wanted.values()) * stride + 1
    raise VideoTooShort(
        f"{n_frames} frames cannot supply {max(wanted.values())} references at stride {stride}; "
        f"at least {need} frames needed"
    )


@dataclass
class VideoSample:
    raw_flow: float
    raw_mask: float
    change_rate: float
    sweep: RatioSweepResult
    targets: list[int]

    def as_tuple(self) -> tuple[float, float, float]:
        return self.raw_flow, self.raw_mask, self.change_rate


def _targets(masks: Sequence[Mask], start: int, step: int, limit: int | None) -> list[int]:
    ts = [t for t in range(start, len(masks), step) if masks[t].mask_size > 0]
    if limit is not None:
        ts = ts[:limit]
    if not ts:
        raise EmptyMask("no target with a nonempty mask")
    return ts


def sweep_video(
    frames: Sequence[Frame],
    masks: Sequence[Mask],
    adapter: InpainterAdapter = InpainterAdapter(),
    total: int = DEFAULT_TOTAL,
    stride: int = DEFAULT_STRIDE,
    config: PyramidConfig = PyramidConfig(),
    target_step: int = 1,
    max_targets: int | None = None,
    analyzer: StreamAnalyzer | None = None,
    jobs: int = 1,
) -> RatioSweepResult:
    """Mean masked-region PSNR for each forced ratio k/8.

    Every ratio is evaluated on the same targets: those late enough for the
    largest ratio to find all its references.
    """
    start = first_full_target(len(frames), total, stride)
    targets = _targets(masks, start, target_step, max_targets)
    if analyzer is None:
        analyzer = analyze_sequence(frames, masks, config)
    entries = {}
    for r in RATIOS:
        res = run_stream(
            frames, masks, total=total, stride=stride, force_ratio=r, adapter=adapter,
            targets=targets, analyzer=analyzer, jobs=jobs,
        )
        scores = [psnr(frames[t], res.outputs[t], masks[t]) for t in targets]
        entries[r] = float(np.mean(scores))
    return RatioSweepResult(entries)


def video_sample(
    frames: Sequence[Frame],
    masks: Sequence[Mask],
    adapter: InpainterAdapter = InpainterAdapter(),
    total: int = DEFAULT_TOTAL,
    stride: int = DEFAULT_STRIDE,
    config: PyramidConfig = PyramidConfig(),
    target_step: int = 1,
    max_targets: int | None = None,
    jobs: int = 1,
) -> VideoSample:
    """One calibration point: per-video mean raw dynamics and the sweep's change rate."""
    start = first_full_target(len(frames), total, stride)
    targets = _targets(masks, start, target_step, max_targets)
    analyzer = analyze_sequence(frames, masks, config)
    sweep = sweep_video(
        frames, masks, adapter, total, stride, config, target_step, max_targets, analyzer, jobs
    )
    raws = [analyzer.raw(t) for t in targets]
    return VideoSample(
        raw_flow=float(np.mean([r.flow for r in raws])),
        raw_mask=float(np.mean([r.mask for r in raws])),
        change_rate=signed_max_change_rate(sweep),
        sweep=sweep,
        targets=targets,
    )
