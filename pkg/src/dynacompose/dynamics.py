"""Visual-dynamics scores for a target frame.

Two raw measurements are taken on the latest consecutive pair of frames:

* masked flow: mean completed-flow magnitude over the target mask;
* mask change: number of pixels whose mask value flipped.

Both are min-max normalized against calibration bounds and merged into a
single score by a slope-weighted mean.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from . import optical_flow
from .errors import (
    DegenerateBounds,
    DimensionMismatch,
    EmptyMask,
    InsufficientHistory,
    InvalidValue,
    ZeroWeights,
)
from .frame_model import FlowField, Frame, Mask, SequenceWindow
from .optical_flow import PyramidConfig

if TYPE_CHECKING:
    from .calibration import CalibrationProfile


@dataclass(frozen=True)
class NormalizationBounds:
    flow_min: float
    flow_max: float
    mask_min: float
    mask_max: float

    def __post_init__(self):
        if not self.flow_min < self.flow_max:
            raise DegenerateBounds(f"flow bounds [{self.flow_min}, {self.flow_max}]")
        if not self.mask_min < self.mask_max:
            raise DegenerateBounds(f"mask bounds [{self.mask_min}, {self.mask_max}]")

    def to_dict(self) -> dict:
        return {
            "flow_min": self.flow_min,
            "flow_max": self.flow_max,
            "mask_min": self.mask_min,
            "mask_max": self.mask_max,
        }


@dataclass(frozen=True)
class DynamicsScore:
    x_flow: float
    x_mask: float
    x_comb: float
    target_index: int
    raw_flow: float | None = None
    raw_mask: float | None = None


class RawDynamics(NamedTuple):
    flow: float
    mask: float


def mask_change(current: Mask, previous: Mask) -> int:
    """Pixel count of the symmetric difference of two binary masks."""
    if current.shape != previous.shape:
        raise DimensionMismatch(f"mask shapes differ: {current.shape} vs {previous.shape}")
    return int(np.count_nonzero(current.data != previous.data))


def normalize(raw: float, lo: float, hi: float) -> float:
    if not lo < hi:
        raise DegenerateBounds(f"normalization bounds [{lo}, {hi}]")
    return float(min(max((raw - lo) / (hi - lo), 0.0), 1.0))


def combine(x_flow: float, x_mask: float, m_flow: float, m_mask: float) -> float:
    """Weighted mean of the two normalized scores.

    The regression slopes are typically negative, so their magnitudes are
    used as weights; the result then always lies between the two inputs.
    """
    w_flow, w_mask = abs(m_flow), abs(m_mask)
    total = w_flow + w_mask
    if not total > 0:
        raise ZeroWeights("both slope weights are zero")
    x = (w_flow * x_flow + w_mask * x_mask) / total
    # rounding can push a mean of equal inputs a hair outside them
    return float(min(max(x, min(x_flow, x_mask)), max(x_flow, x_mask)))


def slope_weights(m_flow: float, m_mask: float) -> tuple[float, float]:
    """Slopes to use as combination weights; equal weights if both are zero."""
    if m_flow == 0 and m_mask == 0:
        return 1.0, 1.0
    return m_flow, m_mask


def completed_backward_flow(
    target: Frame, previous: Frame, target_mask: Mask, config: PyramidConfig = PyramidConfig()
) -> FlowField:
    """Flow on the target's grid pointing into the previous frame, completed inside the mask."""
    flow = optical_flow.estimate_flow(target, previous, config)
    return optical_flow.complete_flow(flow, target_mask)


def raw_dynamics(
    window: SequenceWindow,
    config: PyramidConfig = PyramidConfig(),
    flow: FlowField | None = None,
) -> RawDynamics:
    """Unnormalized masked flow and mask change for the window's target.

    ``flow`` may carry an already completed backward flow for the target so
    that callers sharing it with an inpainter do not complete it twice.
    """
    t = window.target_index
    pos = window.position(t)
    if pos == 0:
        raise InsufficientHistory(f"target {t} has no preceding frame in the window")
    target, previous = window.frames[pos], window.frames[pos - 1]
    mask_t, mask_p = window.masks[pos], window.masks[pos - 1]
    if mask_t.mask_size == 0:
        raise EmptyMask(f"target {t} has an empty mask")
    if flow is None:
        flow = completed_backward_flow(target, previous, mask_t, config)
    return RawDynamics(
        optical_flow.masked_flow_magnitude(flow, mask_t),
        float(mask_change(mask_t, mask_p)),
    )


def score_from_raw(raw: RawDynamics, profile: "CalibrationProfile", target_index: int) -> DynamicsScore:
    b = profile.bounds
    x_flow = normalize(raw.flow, b.flow_min, b.flow_max)
    x_mask = normalize(raw.mask, b.mask_min, b.mask_max)
    x_comb = combine(x_flow, x_mask, *slope_weights(profile.m_flow, profile.m_mask))
    return DynamicsScore(x_flow, x_mask, x_comb, target_index, raw.flow, raw.mask)


def score_target(
    window: SequenceWindow,
    profile: "CalibrationProfile",
    config: PyramidConfig = PyramidConfig(),
    flow: FlowField | None = None,
) -> DynamicsScore:
    raw = raw_dynamics(window, config, flow)
    return score_from_raw(raw, profile, window.target_index)


class StreamAnalyzer:
    """Incremental dynamics analysis over a frame stream.

    Each pushed frame gets exactly one completed backward flow (into its
    predecessor), computed on arrival and cached, so scoring and inpainting
    of later targets can share it.  ``completions`` counts flow completions
    per frame index.
    """

    def __init__(self, config: PyramidConfig = PyramidConfig(), keep: int | None = None):
        self.config = config
        self.keep = keep
        self.frames: dict[int, Frame] = {}
        self.masks: dict[int, Mask] = {}
        self.flows: dict[int, FlowField] = {}
        self.completions: Counter = Counter()

    def push(self, frame: Frame, mask: Mask) -> None:
        t = frame.index
        if mask.index != t:
            raise InvalidValue(f"mask index {mask.index} does not match frame {t}")
        if mask.shape != frame.shape:
            raise DimensionMismatch(f"mask {mask.shape} vs frame {frame.shape}")
        if self.frames and t <= max(self.frames):
            raise InvalidValue(f"frame {t} arrived out of order")
        self.frames[t] = frame
        self.masks[t] = mask
        if t - 1 in self.frames:
            prev = self.frames[t - 1]
            flow = optical_flow.estimate_flow(frame, prev, self.config)
            self.completions[t] += 1
            self.flows[t] = optical_flow.complete_flow(flow, mask)
        if self.keep is not None:
            for old in [i for i in self.frames if i <= t - self.keep]:
                self.frames.pop(old)
                self.masks.pop(old)
                self.flows.pop(old, None)

    @property
    def latest(self) -> int:
        return max(self.frames)

    def raw(self, t: int) -> RawDynamics:
        if t not in self.flows:
            raise InsufficientHistory(f"no predecessor for frame {t}")
        mask = self.masks[t]
        if mask.mask_size == 0:
            raise EmptyMask(f"target {t} has an empty mask")
        return RawDynamics(
            optical_flow.masked_flow_magnitude(self.flows[t], mask),
            float(mask_change(mask, self.masks[t - 1])),
        )

    def score(self, t: int, profile: "CalibrationProfile") -> DynamicsScore:
        return score_from_raw(self.raw(t), profile, t)
