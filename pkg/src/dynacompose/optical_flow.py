"""Dense optical flow and flow completion inside masks.

Flow is estimated with a coarse-to-fine iterative Lucas-Kanade scheme and
completed inside a mask by harmonic interpolation (discrete Laplace
equation, Dirichlet data from the surrounding non-mask ring) solved with
red-black successive over-relaxation.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatch,
    EmptyMask,
    InvalidValue,
    IoFailure,
    MalformedHeader,
    MaskCoversFrame,
)
from .frame_model import MIN_FRAME_SIDE, FlowField, Frame, Mask

FLOW_MAGIC = b"DYFLOW01"

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class PyramidConfig:
    levels: int = 3
    iterations_per_level: int = 5
    window_radius: int = 7
    smoothing_sigma: float = 1.5

    def __post_init__(self):
        if self.levels < 1 or self.iterations_per_level < 1 or self.window_radius < 1:
            raise InvalidValue(f"invalid pyramid configuration {self}")
        if not self.smoothing_sigma > 0:
            raise InvalidValue("smoothing_sigma must be positive")


def to_luma(image) -> np.ndarray:
    """Float64 luma plane of a frame or array (``0.299 R + 0.587 G + 0.114 B``)."""
    data = image.data if isinstance(image, Frame) else np.asarray(image)
    data = data.astype(np.float64)
    if data.ndim == 3:
        return data @ LUMA_WEIGHTS
    return data


def _downsample(image: np.ndarray) -> np.ndarray:
    return ndimage.gaussian_filter(image, 1.0, mode="nearest")[::2, ::2]


def _upsample_flow(component: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    factors = (shape[0] / component.shape[0], shape[1] / component.shape[1])
    out = ndimage.zoom(component, factors, order=1, mode="nearest", grid_mode=True)
    # zoom may be off by one on odd sizes
    out = out[: shape[0], : shape[1]]
    if out.shape != shape:
        out = np.pad(out, [(0, shape[0] - out.shape[0]), (0, shape[1] - out.shape[1])], mode="edge")
    return out


def effective_levels(height: int, width: int, levels: int) -> int:
    """Number of pyramid levels whose coarsest image is still at least 8x8."""
    n = 1
    h, w = height, width
    while n < levels:
        h, w = (h + 1) // 2, (w + 1) // 2
        if h < MIN_FRAME_SIDE or w < MIN_FRAME_SIDE:
            break
        n += 1
    return n


def _lk_refine(
    i0: np.ndarray,
    i1: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    iterations: int,
    radius: int,
) -> tuple[np.ndarray, np.ndarray]:
    h, w = i0.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    gy0, gx0 = np.gradient(i0)
    size = 2 * radius + 1
    # Tikhonov term keeps the 2x2 systems solvable in flat regions
    ridge = 1e-2 * size * size
    for _ in range(iterations):
        sy, sx = yy + v, xx + u
        warped = ndimage.map_coordinates(i1, [sy, sx], order=1, mode="nearest")
        # samples that left the image carry no information
        inside = ((sy >= 0) & (sy <= h - 1) & (sx >= 0) & (sx <= w - 1)).astype(np.float64)
        gyw, gxw = np.gradient(warped)
        gx = 0.5 * (gx0 + gxw) * inside
        gy = 0.5 * (gy0 + gyw) * inside
        gt = (warped - i0) * inside
        sxx = ndimage.uniform_filter(gx * gx, size, mode="nearest") * size * size + ridge
        syy = ndimage.uniform_filter(gy * gy, size, mode="nearest") * size * size + ridge
        sxy = ndimage.uniform_filter(gx * gy, size, mode="nearest") * size * size
        sxt = ndimage.uniform_filter(gx * gt, size, mode="nearest") * size * size
        syt = ndimage.uniform_filter(gy * gt, size, mode="nearest") * size * size
        det = sxx * syy - sxy * sxy
        du = -(syy * sxt - sxy * syt) / det
        dv = -(sxx * syt - sxy * sxt) / det
        # a single linearisation is only trusted within a pixel or so
        np.clip(du, -2.0, 2.0, out=du)
        np.clip(dv, -2.0, 2.0, out=dv)
        u = u + du
        v = v + dv
    return u, v


def estimate_flow(prev: Frame, next: Frame, config: PyramidConfig = PyramidConfig()) -> FlowField:
    """Dense flow on ``prev``'s grid pointing into ``next``.

    For each pixel ``(x, y)`` of ``prev`` the returned ``(u, v)`` satisfies
    ``next(x + u, y + v) ~= prev(x, y)``.  Magnitudes are clamped to
    ``max(width, height)``.
    """
    if prev.shape != next.shape:
        raise DimensionMismatch(f"frame shapes differ: {prev.shape} vs {next.shape}")
    i0 = ndimage.gaussian_filter(to_luma(prev), config.smoothing_sigma, mode="nearest")
    i1 = ndimage.gaussian_filter(to_luma(next), config.smoothing_sigma, mode="nearest")
    levels = effective_levels(prev.height, prev.width, config.levels)
    pyr0, pyr1 = [i0], [i1]
    for _ in range(levels - 1):
        pyr0.append(_downsample(pyr0[-1]))
        pyr1.append(_downsample(pyr1[-1]))

    u = np.zeros_like(pyr0[-1])
    v = np.zeros_like(pyr0[-1])
    for level in range(levels - 1, -1, -1):
        a, b = pyr0[level], pyr1[level]
        if u.shape != a.shape:
            u = 2.0 * _upsample_flow(u, a.shape)
            v = 2.0 * _upsample_flow(v, a.shape)
        u, v = _lk_refine(a, b, u, v, config.iterations_per_level, config.window_radius)

    limit = float(max(prev.width, prev.height))
    mag = np.hypot(u, v)
    scale = np.where(mag > limit, limit / np.maximum(mag, 1e-300), 1.0)
    return FlowField(u * scale, v * scale)


def _neighbour_sum(x: np.ndarray) -> np.ndarray:
    s = np.zeros_like(x)
    s[1:, :] += x[:-1, :]
    s[:-1, :] += x[1:, :]
    s[:, 1:] += x[:, :-1]
    s[:, :-1] += x[:, 1:]
    return s


def harmonic_fill(
    values: np.ndarray,
    mask: np.ndarray,
    tol: float = 1e-6,
    max_sweeps: int = 10_000,
) -> np.ndarray:
    """Replace ``values`` inside ``mask`` by the discrete harmonic interpolant.

    Each masked pixel ends up (to within ``tol``) equal to the mean of its
    in-image 4-neighbours; non-mask pixels act as fixed boundary data.
    Solved by red-black SOR on the mask's bounding box.
    """
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if values.shape != mask.shape:
        raise DimensionMismatch(f"values {values.shape} vs mask {mask.shape}")
    out = values.copy()
    if not mask.any():
        return out
    if mask.all():
        raise MaskCoversFrame("mask covers the whole frame; no boundary values exist")

    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    y0, y1 = max(ys.min() - 1, 0), min(ys.max() + 2, h)
    x0, x1 = max(xs.min() - 1, 0), min(xs.max() + 2, w)
    sub = out[y0:y1, x0:x1]
    m = mask[y0:y1, x0:x1]

    # in-image degree; the bbox margin guarantees that every neighbour of a
    # masked pixel inside the image is also inside the bbox
    deg = np.full(m.shape, 4.0)
    if y0 == 0:
        deg[0, :] -= 1
    if y1 == h:
        deg[-1, :] -= 1
    if x0 == 0:
        deg[:, 0] -= 1
    if x1 == w:
        deg[:, -1] -= 1

    boundary = ~m & ndimage.binary_dilation(m)
    if boundary.any():
        sub[m] = sub[boundary].mean()
    else:
        raise MaskCoversFrame("mask has no adjacent non-mask pixels")

    yy, xx = np.mgrid[0 : m.shape[0], 0 : m.shape[1]]
    parity = (yy + xx + y0 + x0) % 2 == 0
    colours = (m & parity, m & ~parity)
    n = max(m.shape)
    omega = 2.0 / (1.0 + math.sin(math.pi / (n + 1)))
    for _ in range(max_sweeps):
        for sel in colours:
            target = _neighbour_sum(sub)[sel] / deg[sel]
            sub[sel] += omega * (target - sub[sel])
        residual = np.abs(_neighbour_sum(sub)[m] / deg[m] - sub[m]).max()
        if residual < tol:
            break
    return out


def complete_flow(flow: FlowField, mask: Mask) -> FlowField:
    """Harmonically interpolate ``u`` and ``v`` inside ``mask``."""
    if flow.shape != mask.shape:
        raise DimensionMismatch(f"flow {flow.shape} vs mask {mask.shape}")
    if mask.mask_size == 0:
        return flow
    return FlowField(harmonic_fill(flow.u, mask.data), harmonic_fill(flow.v, mask.data))


def masked_flow_magnitude(flow: FlowField, mask: Mask) -> float:
    """Mean per-pixel flow magnitude over the mask pixels."""
    if flow.shape != mask.shape:
        raise DimensionMismatch(f"flow {flow.shape} vs mask {mask.shape}")
    size = mask.mask_size
    if size == 0:
        raise EmptyMask("masked flow magnitude is undefined for an empty mask")
    return float(flow.magnitude()[mask.data].sum() / size)


def write_flow(flow: FlowField, path: str | os.PathLike) -> None:
    """Write ``DYFLOW01`` + width, height (u32 LE) + u, v planes (f32 LE, row-major)."""
    header = FLOW_MAGIC + struct.pack("<II", flow.width, flow.height)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(flow.u.astype("<f4").tobytes())
            fh.write(flow.v.astype("<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_flow(path: str | os.PathLike) -> FlowField:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(buf) < 16 or buf[:8] != FLOW_MAGIC:
        raise MalformedHeader(f"{path}: not a DYFLOW01 file")
    width, height = struct.unpack("<II", buf[8:16])
    n = width * height
    if len(buf) != 16 + 8 * n:
        raise MalformedHeader(f"{path}: expected {16 + 8 * n} bytes, found {len(buf)}")
    planes = np.frombuffer(buf, dtype="<f4", offset=16).astype(np.float64)
    return FlowField(planes[:n].reshape(height, width), planes[n:].reshape(height, width))
