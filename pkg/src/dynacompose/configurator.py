"""Input configurator: choose which frames an inpainter sees for a target.

The input set of ``total`` frames is split into *neighbors* (a contiguous
run ending at the target) and *references* (frames ``stride`` apart walking
back from the target).  ``total`` follows from a linear memory model; the
split follows from the target's dynamics score and a segment table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .errors import BudgetTooSmall, HistoryTooShort, InvalidValue
from .dynamics import DynamicsScore, StreamAnalyzer
from .frame_model import Frame, Mask
from .optical_flow import PyramidConfig

if TYPE_CHECKING:
    from .calibration import CalibrationProfile, SegmentTable

DEFAULT_STRIDE = 10
DEFAULT_TOTAL = 8
BASELINE_RATIO = 0.5

# measured ProPainter / STTN cost per input frame, MB
PROPAINTER_MB_PER_FRAME = 662
STTN_MB_PER_FRAME = 781


@dataclass(frozen=True)
class MemoryModel:
    per_frame_mb: float
    budget_mb: float
    base_mb: float = 0.0

    def __post_init__(self):
        if min(self.per_frame_mb, self.budget_mb, self.base_mb) < 0:
            raise InvalidValue(f"memory model fields must be >= 0: {self}")
        if self.per_frame_mb == 0:
            raise InvalidValue("per_frame_mb must be positive")

    def usage_mb(self, frames: int) -> float:
        return self.base_mb + self.per_frame_mb * frames


def max_frames(model: MemoryModel) -> int:
    """Largest frame count whose linear memory cost fits the budget."""
    n = math.floor((model.budget_mb - model.base_mb) / model.per_frame_mb)
    if n < 1:
        raise BudgetTooSmall(
            f"budget {model.budget_mb} MB cannot hold base {model.base_mb} MB "
            f"plus one frame of {model.per_frame_mb} MB"
        )
    return n


@dataclass(frozen=True)
class InputComposition:
    target: int
    reference_indices: tuple[int, ...]
    neighboring_indices: tuple[int, ...]

    @property
    def total(self) -> int:
        return len(self.reference_indices) + len(self.neighboring_indices)

    @property
    def r_ref(self) -> float:
        return len(self.reference_indices) / self.total

    @property
    def r_nei(self) -> float:
        return len(self.neighboring_indices) / self.total

    @property
    def indices(self) -> list[int]:
        return sorted(self.reference_indices + self.neighboring_indices)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "total": self.total,
            "r_ref": self.r_ref,
            "reference": list(self.reference_indices),
            "neighboring": list(self.neighboring_indices),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "InputComposition":
        comp = cls(int(d["target"]), tuple(d["reference"]), tuple(d["neighboring"]))
        if "total" in d and int(d["total"]) != comp.total:
            raise InvalidValue(f"total {d['total']} does not match {comp.total} listed frames")
        return comp


def select_ratio(score: DynamicsScore | float, table: "SegmentTable") -> float:
    x = score.x_comb if isinstance(score, DynamicsScore) else float(score)
    return table.lookup(x)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _neighbor_window(target: int, n: int, history_len: int, symmetric: bool) -> range:
    start = target - (n - 1) // 2 if symmetric else target - n + 1
    start = min(max(start, 0), history_len - n)
    return range(start, start + n)


def _walk_references(
    target: int, n: int, stride: int, skip: range, history_len: int, symmetric: bool
) -> list[int]:
    refs: list[int] = []
    j = 1
    while len(refs) < n:
        candidates = [target - stride * j]
        if symmetric:
            candidates.append(target + stride * j)
        if all(c < 0 or c >= history_len for c in candidates):
            break
        for c in candidates:
            if 0 <= c < history_len and c not in skip and len(refs) < n:
                refs.append(c)
        j += 1
    return refs


def compose(
    target: int,
    history_len: int,
    r_ref: float,
    total: int,
    stride: int = DEFAULT_STRIDE,
    symmetric: bool = False,
) -> InputComposition:
    """Build the input set for ``target`` from frames ``0 .. history_len - 1``.

    Neighbors are the most recent frames ending at the target (or centered
    on it when ``symmetric``); references sit at ``target - stride * j``.
    Reference slots the history cannot fill are turned into extra
    neighbors, so the composition always has exactly ``total`` frames.
    """
    if total < 2:
        raise InvalidValue(f"total must be >= 2, got {total}")
    if stride < 1:
        raise InvalidValue(f"stride must be >= 1, got {stride}")
    if not 0 <= target < history_len:
        raise InvalidValue(f"target {target} outside history of {history_len} frames")
    if history_len < total:
        raise HistoryTooShort(f"history has {history_len} frames, {total} required")
    if not 0.0 <= r_ref <= 1.0:
        raise InvalidValue(f"r_ref must lie in [0, 1], got {r_ref}")

    n_ref = min(max(_round_half_up(r_ref * total), 1), total - 1)
    while True:
        window = _neighbor_window(target, total - n_ref, history_len, symmetric)
        refs = _walk_references(target, n_ref, stride, window, history_len, symmetric)
        if len(refs) == n_ref:
            break
        # a wider neighbor window can shadow references found so far
        n_ref = len(refs)
    return InputComposition(target, tuple(sorted(refs)), tuple(window))


def configure(
    frames: Sequence[Frame],
    masks: Sequence[Mask],
    profile: "CalibrationProfile | None",
    model: MemoryModel,
    config: PyramidConfig = PyramidConfig(),
    stride: int = DEFAULT_STRIDE,
    target: int | None = None,
    symmetric: bool = False,
) -> tuple[InputComposition, DynamicsScore | None]:
    """Score the target (default: latest frame) and compose its input set.

    Without a profile the balanced 1:1 split is used and no score is
    computed.  Frame indices are assumed to start at 0 and be contiguous.
    """
    total = max_frames(model)
    target = frames[-1].index if target is None else target
    if profile is None:
        return compose(target, len(frames), BASELINE_RATIO, total, stride, symmetric), None
    analyzer = StreamAnalyzer(config)
    for f, m in zip(frames[max(target - 1, 0) : target + 1], masks[max(target - 1, 0) : target + 1]):
        analyzer.push(f, m)
    score = analyzer.score(target, profile)
    r_ref = select_ratio(score, profile.segments)
    return compose(target, len(frames), r_ref, total, stride, symmetric), score
