"""Streaming score -> ratio -> compose -> inpaint loop."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .configurator import (
    BASELINE_RATIO,
    DEFAULT_STRIDE,
    DEFAULT_TOTAL,
    InputComposition,
    compose,
    select_ratio,
)
from .dynamics import DynamicsScore, StreamAnalyzer
from .errors import InvalidValue
from .frame_model import Frame, Mask
from .inpaint import InpainterAdapter, run_inpainter
from .optical_flow import PyramidConfig

if TYPE_CHECKING:
    from .calibration import CalibrationProfile


@dataclass
class StreamResult:
    outputs: dict[int, Frame] = field(default_factory=dict)
    compositions: dict[int, InputComposition] = field(default_factory=dict)
    scores: dict[int, DynamicsScore] = field(default_factory=dict)
    requested: dict[int, float] = field(default_factory=dict)
    skipped: list[int] = field(default_factory=list)

    def composition_records(self) -> list[dict]:
        records = []
        for t in sorted(set(self.compositions) | set(self.skipped)):
            if t in self.compositions:
                rec = self.compositions[t].to_dict()
                # differs from r_ref when short history forced a degradation
                rec["r_requested"] = self.requested[t]
                score = self.scores.get(t)
                if score is not None:
                    rec["x_comb"] = score.x_comb
            else:
                rec = {"target": t, "skipped": "empty mask"}
            records.append(rec)
        return records


def analyze_sequence(
    frames: Sequence[Frame], masks: Sequence[Mask], config: PyramidConfig = PyramidConfig()
) -> StreamAnalyzer:
    """Feed a whole sequence through a :class:`StreamAnalyzer`."""
    if len(frames) != len(masks):
        raise InvalidValue(f"{len(frames)} frames but {len(masks)} masks")
    analyzer = StreamAnalyzer(config)
    for f, m in zip(frames, masks):
        analyzer.push(f, m)
    return analyzer


def choose_ratio(
    t: int,
    analyzer: StreamAnalyzer,
    profile: "CalibrationProfile | None",
    force_ratio: float | None,
) -> tuple[float, DynamicsScore | None]:
    if force_ratio is not None:
        return force_ratio, None
    if profile is None:
        return BASELINE_RATIO, None
    score = analyzer.score(t, profile)
    return select_ratio(score, profile.segments), score


def run_stream(
    frames: Sequence[Frame],
    masks: Sequence[Mask],
    *,
    profile: "CalibrationProfile | None" = None,
    total: int = DEFAULT_TOTAL,
    stride: int = DEFAULT_STRIDE,
    force_ratio: float | None = None,
    adapter: InpainterAdapter = InpainterAdapter(),
    config: PyramidConfig = PyramidConfig(),
    targets: Iterable[int] | None = None,
    symmetric: bool = False,
    analyzer: StreamAnalyzer | None = None,
    jobs: int = 1,
) -> StreamResult:
    """Inpaint every target from index ``total`` onward (or the given targets).

    Frame ``i`` of the sequence must carry index ``i``.  Each target only
    sees frames ``<= target`` unless ``symmetric`` is set.  Completed flows
    come from ``analyzer`` and are shared between scoring and inpainting.
    """
    for pos, f in enumerate(frames):
        if f.index != pos:
            raise InvalidValue(f"frame at position {pos} has index {f.index}")
    if analyzer is None:
        analyzer = analyze_sequence(frames, masks, config)
    n = len(frames)
    targets = list(range(total, n) if targets is None else targets)
    frame_map = {f.index: f for f in frames}
    mask_map = {m.index: m for m in masks}

    result = StreamResult()
    jobs_todo = []
    for t in targets:
        if mask_map[t].mask_size == 0:
            result.outputs[t] = frame_map[t]
            result.skipped.append(t)
            continue
        r_ref, score = choose_ratio(t, analyzer, profile, force_ratio)
        history = n if symmetric else t + 1
        comp = compose(t, history, r_ref, total, stride, symmetric)
        result.compositions[t] = comp
        result.requested[t] = r_ref
        if score is not None:
            result.scores[t] = score
        jobs_todo.append(comp)

    def work(comp: InputComposition) -> Frame:
        return run_inpainter(adapter, comp, frame_map, mask_map, analyzer.flows)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            frames_out = list(pool.map(work, jobs_todo))
    else:
        frames_out = [work(c) for c in jobs_todo]
    for comp, out in zip(jobs_todo, frames_out):
        result.outputs[comp.target] = out
    result.outputs = dict(sorted(result.outputs.items()))
    return result
