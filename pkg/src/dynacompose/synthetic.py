"""Seeded synthetic scenes for closed-loop experiments.

A scene is a smooth random texture seen through a window that pans at a
constant velocity, plus a random-shape mask (union of a few ellipses)
whose center follows a drifting random walk and bounces off the frame
border.  Frames are the complete ground truth; the mask only marks what
the inpainter has to reconstruct.

Mask random walk: ``c[t+1] = c[t] + velocity + N(0, jitter^2)`` per axis,
velocity sign flipped when the blob would leave the frame (with a margin
of ``mask_radius + 2`` pixels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .frame_model import Frame, Mask


@dataclass(frozen=True)
class SceneSpec:
    n_frames: int = 96
    width: int = 96
    height: int = 64
    pan: tuple[float, float] = (0.0, 0.0)
    mask_velocity: tuple[float, float] = (0.0, 0.0)
    mask_jitter: float = 0.0
    mask_radius: float = 7.0
    texture_sigma: float = 2.0
    channels: int = 3


PRESETS: dict[str, SceneSpec] = {
    # nothing moves at all
    "still": SceneSpec(),
    # static camera, slowly drifting occluder: distant frames reveal the hole
    "static": SceneSpec(mask_velocity=(0.8, 0.0), mask_jitter=0.1),
    "medium": SceneSpec(pan=(1.0, 0.5), mask_velocity=(-0.8, 0.3), mask_jitter=0.2),
    # fast pan against the occluder's motion: only recent frames line up
    "fast": SceneSpec(pan=(3.0, 1.0), mask_velocity=(-1.5, 0.0), mask_jitter=0.3),
}


def scene_spec(kind: str, **overrides) -> SceneSpec:
    try:
        spec = PRESETS[kind]
    except KeyError:
        raise ValueError(f"unknown scene kind {kind!r}; choose from {sorted(PRESETS)}") from None
    return replace(spec, **overrides)


def make_texture(rng: np.random.Generator, height: int, width: int, sigma: float, channels: int) -> np.ndarray:
    planes = []
    for _ in range(channels):
        t = ndimage.gaussian_filter(rng.random((height, width)), sigma, mode="wrap")
        t = (t - t.min()) / (t.max() - t.min())
        planes.append(t * 255.0)
    return np.stack(planes, axis=-1) if channels > 1 else planes[0]


def _blob(rng: np.random.Generator, radius: float) -> list[tuple[float, float, float, float]]:
    """Random ellipses ``(dy, dx, ry, rx)`` around the origin."""
    parts = [(0.0, 0.0, radius, radius)]
    for _ in range(int(rng.integers(1, 4))):
        ang = rng.uniform(0, 2 * math.pi)
        off = rng.uniform(0.3, 0.6) * radius
        parts.append(
            (off * math.sin(ang), off * math.cos(ang),
             rng.uniform(0.4, 0.8) * radius, rng.uniform(0.4, 0.8) * radius)
        )
    return parts


def _rasterize(parts, cy: float, cx: float, height: int, width: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    out = np.zeros((height, width), dtype=bool)
    for dy, dx, ry, rx in parts:
        out |= ((yy - cy - dy) / ry) ** 2 + ((xx - cx - dx) / rx) ** 2 <= 1.0
    return out


def make_scene(spec: SceneSpec | str, seed: int = 0) -> tuple[list[Frame], list[Mask]]:
    """Render ``spec`` (or a preset name) deterministically from ``seed``."""
    if isinstance(spec, str):
        spec = scene_spec(spec)
    rng = np.random.default_rng(seed)
    n, h, w = spec.n_frames, spec.height, spec.width
    px, py = spec.pan
    pad = 4
    canvas_h = h + int(math.ceil(abs(py) * n)) + 2 * pad
    canvas_w = w + int(math.ceil(abs(px) * n)) + 2 * pad
    canvas = make_texture(rng, canvas_h, canvas_w, spec.texture_sigma, spec.channels)
    oy0 = pad + (abs(py) * n if py < 0 else 0.0)
    ox0 = pad + (abs(px) * n if px < 0 else 0.0)

    parts = _blob(rng, spec.mask_radius)
    margin = spec.mask_radius + 2
    cy = rng.uniform(margin, h - margin)
    cx = rng.uniform(margin, w - margin)
    vy, vx = spec.mask_velocity[1], spec.mask_velocity[0]

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    frames, masks = [], []
    for t in range(n):
        oy, ox = oy0 + py * t, ox0 + px * t
        coords = [yy + oy, xx + ox]
        if spec.channels > 1:
            img = np.stack(
                [ndimage.map_coordinates(canvas[..., c], coords, order=1) for c in range(spec.channels)],
                axis=-1,
            )
        else:
            img = ndimage.map_coordinates(canvas, coords, order=1)
        frames.append(Frame(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8), t))
        masks.append(Mask(_rasterize(parts, cy, cx, h, w), t))

        cy += vy + rng.normal(0, spec.mask_jitter) if spec.mask_jitter else vy
        cx += vx + rng.normal(0, spec.mask_jitter) if spec.mask_jitter else vx
        if not margin <= cy <= h - margin:
            vy = -vy
            cy = min(max(cy, margin), h - margin)
        if not margin <= cx <= w - margin:
            vx = -vx
            cx = min(max(cx, margin), w - margin)
    return frames, masks
