"""Inpainter backends.

``baseline`` is a small deterministic propagation inpainter meant for
closed-loop experiments without a neural model:

1. warp unmasked pixels from neighboring frames into the hole by chaining
   completed backward flows, nearest frame first;
2. copy co-located unmasked pixels from reference frames (zero-motion prior);
3. diffuse whatever is still missing harmonically from the filled boundary.

``external`` hands the job to another process through a directory::

    <job>/composition.json
    <job>/frames/%05d.ppm
    <job>/masks/%05d.pgm

and expects ``<job>/output.ppm`` back with exit status 0.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import ndimage

from .configurator import InputComposition
from .errors import (
    AdapterTimeout,
    DimensionMismatch,
    InvalidValue,
    MaskCoversFrame,
    NoSourcePixels,
    ProcessFailure,
)
from .frame_model import FlowField, Frame, Mask
from .media_io import FRAME_PATTERN, MASK_PATTERN, read_netpbm, write_frame, write_mask
from .optical_flow import harmonic_fill

DIFFUSION_TOL = 1e-3


@dataclass(frozen=True)
class InpainterAdapter:
    kind: str = "baseline"
    external_command: str | None = None
    timeout: float = 600.0

    def __post_init__(self):
        if self.kind not in ("baseline", "external"):
            raise InvalidValue(f"unknown inpainter kind {self.kind!r}")
        if self.kind == "external" and not self.external_command:
            raise InvalidValue("external inpainter needs a command")


def _sample(image: np.ndarray, sy: np.ndarray, sx: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return ndimage.map_coordinates(image, [sy, sx], order=1, mode="nearest")
    return np.stack(
        [ndimage.map_coordinates(image[..., c], [sy, sx], order=1, mode="nearest") for c in range(image.shape[2])],
        axis=-1,
    )


def _valid_source(mask: np.ndarray, sy: np.ndarray, sx: np.ndarray) -> np.ndarray:
    """In bounds and every bilinear support pixel unmasked."""
    h, w = mask.shape
    ok = (sy >= 0) & (sy <= h - 1) & (sx >= 0) & (sx <= w - 1)
    y0 = np.clip(np.floor(sy).astype(np.intp), 0, h - 1)
    x0 = np.clip(np.floor(sx).astype(np.intp), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    clear = ~(mask[y0, x0] | mask[y0, x1] | mask[y1, x0] | mask[y1, x1])
    return ok & clear


def inpaint_baseline(
    frames: Mapping[int, Frame],
    masks: Mapping[int, Mask],
    composition: InputComposition,
    flows: Mapping[int, FlowField],
) -> Frame:
    """Fill the target's mask from the composed input set.

    ``flows[k]`` is the completed flow on frame ``k``'s grid pointing into
    frame ``k - 1``.  Neighbors ahead of the target (symmetric windows) have
    no backward chain and are skipped by the warping stage.  Pixels outside
    the target mask are returned untouched.
    """
    t = composition.target
    target = frames[t]
    hole = masks[t].data
    if not hole.any():
        return target

    img = target.data.astype(np.float64)
    todo = hole.copy()
    ys, xs = np.nonzero(todo)
    sourced = 0

    # chained displacement from the target grid to frame k, for hole pixels
    dy = np.zeros(ys.shape)
    dx = np.zeros(xs.shape)
    chained_to = t
    for n in sorted((i for i in composition.neighboring_indices if i < t), reverse=True):
        while chained_to > n:
            flow = flows.get(chained_to)
            if flow is None:
                break
            py, px = ys + dy, xs + dx
            dx = dx + ndimage.map_coordinates(flow.u, [py, px], order=1, mode="nearest")
            dy = dy + ndimage.map_coordinates(flow.v, [py, px], order=1, mode="nearest")
            chained_to -= 1
        if chained_to != n:
            break
        sy, sx = ys + dy, xs + dx
        pending = todo[ys, xs]
        good = pending & _valid_source(masks[n].data, sy, sx)
        if good.any():
            img[ys[good], xs[good]] = _sample(frames[n].data.astype(np.float64), sy[good], sx[good])
            todo[ys[good], xs[good]] = False
            sourced += int(good.sum())

    for r in sorted(composition.reference_indices, key=lambda i: (abs(i - t), i)):
        good = todo & ~masks[r].data
        if good.any():
            img[good] = frames[r].data[good]
            todo &= ~good
            sourced += int(good.sum())

    if sourced == 0:
        warnings.warn(f"target {t}: no source pixels, diffusion-only fill", NoSourcePixels, stacklevel=2)
    if todo.any():
        try:
            if img.ndim == 2:
                img = harmonic_fill(img, todo, tol=DIFFUSION_TOL)
            else:
                img = np.stack(
                    [harmonic_fill(img[..., c], todo, tol=DIFFUSION_TOL) for c in range(img.shape[2])],
                    axis=-1,
                )
        except MaskCoversFrame:
            img[todo] = 128.0

    out = target.data.copy()
    out[hole] = np.clip(np.floor(img[hole] + 0.5), 0, 255).astype(np.uint8)
    return Frame(out, t)


def write_job(
    job_dir: str | Path,
    composition: InputComposition,
    frames: Mapping[int, Frame],
    masks: Mapping[int, Mask],
) -> None:
    job_dir = Path(job_dir)
    (job_dir / "frames").mkdir(parents=True, exist_ok=True)
    (job_dir / "masks").mkdir(parents=True, exist_ok=True)
    (job_dir / "composition.json").write_text(composition.to_json())
    for i in composition.indices:
        write_frame(frames[i], job_dir / (FRAME_PATTERN % i))
        write_mask(masks[i], job_dir / (MASK_PATTERN % i))


def inpaint_external(
    adapter: InpainterAdapter,
    composition: InputComposition,
    frames: Mapping[int, Frame],
    masks: Mapping[int, Mask],
) -> Frame:
    if not adapter.external_command:
        raise InvalidValue("adapter has no external command")
    target = frames[composition.target]
    with tempfile.TemporaryDirectory(prefix="dynacompose-job-") as tmp:
        write_job(tmp, composition, frames, masks)
        cmd = shlex.split(adapter.external_command) + [tmp]
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=adapter.timeout)
        except subprocess.TimeoutExpired:
            raise AdapterTimeout(f"{cmd[0]} exceeded {adapter.timeout} s") from None
        except OSError as exc:
            raise ProcessFailure(f"cannot run {cmd[0]}: {exc}") from exc
        if proc.returncode != 0:
            stderr = proc.stderr.decode(errors="replace").strip()
            raise ProcessFailure(f"{cmd[0]} exited with {proc.returncode}: {stderr[-500:]}")
        out_path = Path(tmp) / "output.ppm"
        if not out_path.exists():
            raise ProcessFailure(f"{cmd[0]} did not write output.ppm")
        data = read_netpbm(out_path)
    if data.shape != target.data.shape:
        raise DimensionMismatch(f"adapter returned {data.shape}, expected {target.data.shape}")
    return Frame(data, composition.target)


def run_inpainter(
    adapter: InpainterAdapter,
    composition: InputComposition,
    frames: Mapping[int, Frame],
    masks: Mapping[int, Mask],
    flows: Mapping[int, FlowField],
) -> Frame:
    if adapter.kind == "external":
        return inpaint_external(adapter, composition, frames, masks)
    return inpaint_baseline(frames, masks, composition, flows)


def load_composition(path: str | Path) -> InputComposition:
    return InputComposition.from_dict(json.loads(Path(path).read_text()))
