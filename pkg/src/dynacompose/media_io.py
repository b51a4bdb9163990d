"""Codec-free frame/mask sequence I/O.

Sequences live in a DAVIS-like directory::

    <root>/frames/00000.ppm   (P6, or P5 for grayscale video)
    <root>/masks/00000.pgm    (P5, thresholded at 128)

Only binary Netpbm with maxval 255 is supported.  Anything else (JPEG, PNG,
16-bit) must be converted beforehand.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import (
    DimensionTooSmall,
    FileMissing,
    IoFailure,
    MalformedHeader,
    UnsupportedMaxVal,
)
from .frame_model import MIN_FRAME_SIDE, Frame, Mask

FRAME_PATTERN = "frames/%05d.ppm"
MASK_PATTERN = "masks/%05d.pgm"

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True)
class SequenceSource:
    root_path: Path
    start_index: int
    end_index: int
    frame_pattern: str = FRAME_PATTERN
    mask_pattern: str = MASK_PATTERN

    def frame_path(self, t: int) -> Path:
        return Path(self.root_path) / (self.frame_pattern % t)

    def mask_path(self, t: int) -> Path:
        return Path(self.root_path) / (self.mask_pattern % t)

    @property
    def indices(self) -> range:
        return range(self.start_index, self.end_index + 1)

    def __len__(self) -> int:
        return len(self.indices)


def _pattern_regex(pattern: str) -> re.Pattern:
    name = os.path.basename(pattern)
    head, spec, tail = re.split(r"(%0?\d*d)", name, maxsplit=1)
    return re.compile(re.escape(head) + r"(\d+)" + re.escape(tail) + "$")


def _scan(directory: Path, pattern: str) -> list[int]:
    regex = _pattern_regex(pattern)
    if not directory.is_dir():
        return []
    found = []
    for entry in directory.iterdir():
        m = regex.match(entry.name)
        if m:
            found.append(int(m.group(1)))
    return sorted(found)


def open_sequence(
    root: str | os.PathLike,
    frame_pattern: str = FRAME_PATTERN,
    mask_pattern: str = MASK_PATTERN,
) -> SequenceSource:
    """Discover the index range of a sequence directory.

    Raises :class:`FileMissing` if either subdirectory is absent or the
    frame and mask index sets differ or have gaps.
    """
    root = Path(root)
    frame_dir = root / os.path.dirname(frame_pattern)
    mask_dir = root / os.path.dirname(mask_pattern)
    for d in (frame_dir, mask_dir):
        if not d.is_dir():
            raise FileMissing(f"directory not found: {d}")
    frames = _scan(frame_dir, frame_pattern)
    masks = _scan(mask_dir, mask_pattern)
    if not frames:
        raise FileMissing(f"no frames matching {frame_pattern} under {root}")
    if frames != masks:
        missing = sorted(set(frames) ^ set(masks))
        raise FileMissing(f"frame/mask index sets differ at {missing[:5]}")
    if frames != list(range(frames[0], frames[-1] + 1)):
        raise FileMissing(f"gap in frame indices under {root}")
    return SequenceSource(root, frames[0], frames[-1], frame_pattern, mask_pattern)


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WHITESPACE and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeader("truncated header")
    return buf[start:pos], pos


def read_netpbm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary P5/P6 file into a ``uint8`` array (HxW or HxWx3)."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise FileMissing(f"file not found: {path}") from None
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    magic, pos = _read_token(buf, 0)
    if magic not in (b"P5", b"P6"):
        raise MalformedHeader(f"{path}: unsupported magic {magic!r}")
    fields = []
    for _ in range(3):
        token, pos = _read_token(buf, pos)
        if not token.isdigit():
            raise MalformedHeader(f"{path}: non-numeric header field {token!r}")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedMaxVal(f"{path}: maxval {maxval}, only 255 is supported")
    if pos >= len(buf) or buf[pos : pos + 1] not in _WHITESPACE:
        raise MalformedHeader(f"{path}: missing whitespace after header")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    payload = buf[pos : pos + size]
    if len(payload) != size:
        raise MalformedHeader(f"{path}: expected {size} data bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        return data.reshape(height, width, 3)
    return data.reshape(height, width)


def write_netpbm(array: np.ndarray, path: str | os.PathLike) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    if array.ndim == 2:
        magic = b"P5"
    elif array.ndim == 3 and array.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot write array of shape {array.shape} as Netpbm")
    height, width = array.shape[:2]
    header = magic + b"\n%d %d\n255\n" % (width, height)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(array.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _check_index(source: SequenceSource, t: int, path: Path) -> None:
    if not source.start_index <= t <= source.end_index:
        raise FileMissing(
            f"index {t} outside [{source.start_index}, {source.end_index}] ({path})"
        )


def read_frame(source: SequenceSource, t: int) -> Frame:
    path = source.frame_path(t)
    _check_index(source, t, path)
    return Frame(read_netpbm(path), t)


def read_mask(source: SequenceSource, t: int) -> Mask:
    path = source.mask_path(t)
    _check_index(source, t, path)
    gray = read_netpbm(path)
    if gray.ndim != 2:
        raise MalformedHeader(f"{path}: masks must be P5 (grayscale)")
    return Mask.from_gray(gray, t)


def write_frame(frame: Frame, path: str | os.PathLike) -> None:
    write_netpbm(frame.data, path)


def write_mask(mask: Mask, path: str | os.PathLike) -> None:
    write_netpbm(mask.data.astype(np.uint8) * 255, path)


def load_sequence(source: SequenceSource) -> tuple[list[Frame], list[Mask]]:
    frames = [read_frame(source, t) for t in source.indices]
    masks = [read_mask(source, t) for t in source.indices]
    return frames, masks


def read_frames_dir(root: str | os.PathLike, frame_pattern: str = FRAME_PATTERN) -> dict[int, Frame]:
    """All frames under ``root`` keyed by index; masks are not required."""
    root = Path(root)
    frame_dir = root / os.path.dirname(frame_pattern)
    if not frame_dir.is_dir():
        raise FileMissing(f"directory not found: {frame_dir}")
    indices = _scan(frame_dir, frame_pattern)
    if not indices:
        raise FileMissing(f"no frames matching {frame_pattern} under {root}")
    return {t: Frame(read_netpbm(root / (frame_pattern % t)), t) for t in indices}


def write_sequence(
    root: str | os.PathLike,
    frames: Iterable[Frame],
    masks: Iterable[Mask] | None = None,
) -> SequenceSource:
    """Write frames (and optionally masks) in the standard layout."""
    root = Path(root)
    try:
        (root / "frames").mkdir(parents=True, exist_ok=True)
        if masks is not None:
            (root / "masks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {root}: {exc}") from exc
    indices = []
    for f in frames:
        write_frame(f, root / (FRAME_PATTERN % f.index))
        indices.append(f.index)
    if masks is not None:
        for m in masks:
            write_mask(m, root / (MASK_PATTERN % m.index))
    return SequenceSource(root, min(indices), max(indices))


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def _bilinear_axis(in_size: int, out_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # pixel-center alignment: src = (dst + 0.5) * in / out - 0.5, evaluated from
    # an exact integer numerator so symmetric cases land on exact halves
    dst = np.arange(out_size)
    src = ((2 * dst + 1) * in_size - out_size) / (2.0 * out_size)
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, in_size - 1)
    return i0, i1, src - i0


def resize_bilinear(frame: Frame, new_width: int, new_height: int) -> Frame:
    """Bilinear resize with pixel-center alignment and round-half-up.

    Output samples are convex combinations of input samples, so the result
    never leaves the input's value range.  A 2x2 ``{0, 255}`` checkerboard
    resized to 3x3 has center value 128 (127.5 rounded up).
    """
    if new_width < MIN_FRAME_SIDE or new_height < MIN_FRAME_SIDE:
        raise DimensionTooSmall(f"target size {new_width}x{new_height} below minimum")
    if (new_width, new_height) == (frame.width, frame.height):
        return frame
    return Frame(resize_array(frame.data, new_width, new_height), frame.index)


def resize_array(data: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Array-level bilinear resize behind :func:`resize_bilinear` (no size floor)."""
    src = data.astype(np.float64)
    y0, y1, wy = _bilinear_axis(data.shape[0], new_height)
    x0, x1, wx = _bilinear_axis(data.shape[1], new_width)
    if src.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    out = top * (1 - wy) + bottom * wy
    return np.clip(_round_half_up(out), 0, 255).astype(np.uint8)


def resize_nearest(mask: Mask, new_width: int, new_height: int) -> Mask:
    """Nearest-neighbour resize for masks (keeps them binary)."""
    if new_width < 1 or new_height < 1:
        raise DimensionTooSmall(f"target size {new_width}x{new_height} is empty")
    h, w = mask.shape
    ys = ((2 * np.arange(new_height) + 1) * h) // (2 * new_height)
    xs = ((2 * np.arange(new_width) + 1) * w) // (2 * new_width)
    return Mask(mask.data[ys][:, xs], mask.index)
