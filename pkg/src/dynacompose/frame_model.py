"""Value types shared across the package.

Frames, masks and flow fields wrap numpy arrays that are frozen
(``writeable=False``) at construction, so instances can be shared freely
between threads and cached without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    InvalidValue,
    MissingTarget,
    NonMonotonicIndices,
)

MIN_FRAME_SIDE = 8
MASK_THRESHOLD = 128


def _frozen(array: np.ndarray) -> np.ndarray:
    if not array.flags.writeable and array.flags.c_contiguous:
        return array
    array = np.array(array, order="C", copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit image plane, shape ``(height, width)`` or ``(height, width, 3)``."""

    data: np.ndarray
    index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8:
            raise InvalidValue(f"frame data must be uint8, got {data.dtype}")
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise InvalidValue(f"frame must be HxW or HxWx3, got shape {data.shape}")
        if data.shape[0] < MIN_FRAME_SIDE or data.shape[1] < MIN_FRAME_SIDE:
            raise DimensionTooSmall(
                f"frame is {data.shape[1]}x{data.shape[0]}, minimum is "
                f"{MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )
        if self.index < 0:
            raise InvalidValue(f"frame index must be >= 0, got {self.index}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def shape(self) -> tuple[int, int]:
        """``(height, width)``"""
        return self.data.shape[:2]

    def with_data(self, data: np.ndarray) -> "Frame":
        return Frame(data, self.index)

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.index == other.index
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary mask; ``True`` marks pixels to be filled."""

    data: np.ndarray
    index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise InvalidValue(f"mask must be 2-D, got shape {data.shape}")
        if data.dtype != np.bool_:
            if not np.isin(data, (0, 1)).all():
                raise InvalidValue("mask values must be 0 or 1; use Mask.from_gray")
            data = data.astype(bool)
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_gray(cls, gray: np.ndarray, index: int = 0) -> "Mask":
        """Threshold an 8-bit plane: values >= 128 become 1."""
        return cls(np.asarray(gray) >= MASK_THRESHOLD, index)

    @classmethod
    def empty(cls, height: int, width: int, index: int = 0) -> "Mask":
        return cls(np.zeros((height, width), dtype=bool), index)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def mask_size(self) -> int:
        return int(np.count_nonzero(self.data))

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.index == other.index and bool(np.array_equal(self.data, other.data))


@dataclass(frozen=True, eq=False)
class FlowField:
    """Dense per-pixel displacement in pixels/frame.

    ``u`` is horizontal (+x to the right), ``v`` vertical (+y downward). A
    pixel ``(x, y)`` of the frame the field lives on corresponds to
    ``(x + u, y + v)`` in the frame it points to.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise DimensionMismatch(f"u {u.shape} and v {v.shape} must be equal 2-D shapes")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise InvalidValue("flow field contains NaN or Inf")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "v", _frozen(v))

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return bool(np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v))


@dataclass(frozen=True)
class SequenceWindow:
    """Frames and masks around a target, aligned one-to-one by index."""

    frames: tuple[Frame, ...]
    masks: tuple[Mask, ...]
    target_index: int

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "masks", tuple(self.masks))
        validate_window(self)

    @property
    def indices(self) -> list[int]:
        return [f.index for f in self.frames]

    def position(self, index: int) -> int:
        return self.indices.index(index)

    def frame_at(self, index: int) -> Frame:
        return self.frames[self.position(index)]

    def mask_at(self, index: int) -> Mask:
        return self.masks[self.position(index)]


def validate_window(window: SequenceWindow) -> None:
    """Check the window invariants, raising on the first violation."""
    frames: Sequence[Frame] = window.frames
    masks: Sequence[Mask] = window.masks
    if not frames:
        raise MissingTarget("window has no frames")
    if len(frames) != len(masks):
        raise DimensionMismatch(f"{len(frames)} frames but {len(masks)} masks")
    shape = frames[0].shape
    for f, m in zip(frames, masks):
        if f.shape != shape:
            raise DimensionMismatch(
                f"frame {f.index} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}"
            )
        if m.shape != shape:
            raise DimensionMismatch(f"mask {m.index} shape {m.shape} != frame shape {shape}")
        if m.index != f.index:
            raise NonMonotonicIndices(f"mask index {m.index} not aligned with frame {f.index}")
    indices = [f.index for f in frames]
    for a, b in zip(indices, indices[1:]):
        if b <= a:
            raise NonMonotonicIndices(f"indices must be strictly increasing, got {indices}")
    if window.target_index not in indices:
        raise MissingTarget(f"target {window.target_index} not among {indices}")
