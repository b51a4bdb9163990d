import numpy as np
import pytest

from dynacompose.errors import DimensionMismatch
from dynacompose.evaluation import PairedDelta, evaluate_run, memory_tradeoff, rows_to_csv, TRADEOFF_HEADER
from dynacompose.frame_model import Frame
from dynacompose.pipeline import run_stream
from dynacompose.synthetic import make_scene, scene_spec


def as_map(items):
    return {x.index: x for x in items}


class TestEvaluateRun:
    def test_self_delta_zero(self, static_sequence):
        frames, masks = static_sequence
        res = run_stream(frames, masks, total=4, stride=5)
        truth, mm = as_map(frames), as_map(masks)
        rep = evaluate_run(truth, res.outputs, mm, sorted(res.outputs))
        d = PairedDelta(rep, rep)
        assert d.delta_psnr == 0.0 and d.delta_ssim == 0.0

    def test_static_reaches_cap(self, static_sequence):
        frames, masks = static_sequence
        res = run_stream(frames, masks, total=4, stride=5, force_ratio=0.75, targets=range(20, 40))
        rep = evaluate_run(as_map(frames), res.outputs, as_map(masks), list(range(20, 40)))
        assert rep.mean_psnr == 99.0
        assert rep.to_csv().splitlines()[0] == "index,psnr,ssim"

    def test_mismatched_counts(self, static_sequence):
        frames, masks = static_sequence
        with pytest.raises(DimensionMismatch):
            evaluate_run(as_map(frames), as_map(frames[:-1]), as_map(masks))

    def test_imperfect_output_scores_lower(self, static_sequence):
        frames, masks = static_sequence
        dark = {f.index: Frame(np.zeros_like(f.data), f.index) for f in frames}
        rep = evaluate_run(as_map(frames), dark, as_map(masks))
        assert rep.mean_psnr < 20


class TestTradeoff:
    def test_rows(self):
        frames, masks = make_scene(scene_spec("medium", n_frames=30), 1)
        rows = memory_tradeoff(frames, masks, None, totals=(5, 6, 7), per_frame_mb=662, base_mb=69,
                               targets=[20, 24])
        assert [r["total"] for r in rows] == [5, 6, 7]
        assert [r["memory_mb"] for r in rows] == [69 + 662 * n for n in (5, 6, 7)]
        assert all(r["delta"] == 0.0 for r in rows)
        assert rows_to_csv(rows, TRADEOFF_HEADER).splitlines()[0] == ",".join(TRADEOFF_HEADER)
