import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynacompose import configurator as cf
from dynacompose.calibration import CalibrationProfile, build_segments
from dynacompose.dynamics import NormalizationBounds
from dynacompose.errors import BudgetTooSmall, HistoryTooShort, InvalidValue
from dynacompose.quality_metrics import RATIOS, LineFit
from dynacompose.synthetic import make_scene


class TestMaxFrames:
    @pytest.mark.parametrize("per_frame,base,budget", [(662, 69, 5365), (781, 62, 6310)])
    def test_measured_points(self, per_frame, base, budget):
        m = cf.MemoryModel(per_frame, budget, base)
        assert cf.max_frames(m) == 8
        assert m.usage_mb(8) == budget

    def test_too_small(self):
        with pytest.raises(BudgetTooSmall):
            cf.max_frames(cf.MemoryModel(662, 700, 69))

    def test_floor(self):
        assert cf.max_frames(cf.MemoryModel(662, 2000)) == 3


class TestCompose:
    def test_balanced(self):
        c = cf.compose(100, 101, 4 / 8, 8, 10)
        assert c.neighboring_indices == (97, 98, 99, 100)
        assert c.reference_indices == (60, 70, 80, 90)
        assert c.r_ref == 0.5 and c.r_nei == 0.5

    def test_one_reference(self):
        c = cf.compose(100, 101, 1 / 8, 8)
        assert c.neighboring_indices == tuple(range(94, 101))
        assert c.reference_indices == (90,)

    def test_short_history(self):
        with pytest.raises(HistoryTooShort):
            cf.compose(4, 5, 0.5, 8)

    def test_skips_neighbor_window(self):
        # t - 10 is inside the 7-frame window when stride is 5
        c = cf.compose(50, 51, 2 / 8, 8, 5)
        assert not set(c.reference_indices) & set(c.neighboring_indices)
        assert c.reference_indices == (35, 40)

    def test_degrades_to_neighbors(self):
        c = cf.compose(12, 13, 4 / 8, 8, 10)
        assert c.total == 8
        assert c.reference_indices == (2,)
        assert c.neighboring_indices == tuple(range(6, 13))

    def test_symmetric_window(self):
        c = cf.compose(50, 96, 4 / 8, 8, 10, symmetric=True)
        assert c.neighboring_indices == (49, 50, 51, 52)
        assert c.reference_indices == (30, 40, 60, 70)

    def test_json_round_trip(self):
        c = cf.compose(100, 101, 3 / 8, 8)
        d = c.to_dict()
        assert set(d) == {"target", "total", "r_ref", "reference", "neighboring"}
        assert cf.InputComposition.from_dict(d) == c

    @given(
        st.integers(0, 300), st.integers(1, 200), st.sampled_from(RATIOS),
        st.integers(2, 16), st.integers(1, 20), st.booleans(),
    )
    def test_invariants(self, target, extra, r, total, stride, symmetric):
        # causal history ends at the target; symmetric may look ahead
        history = target + 1 + (extra if symmetric else 0)
        if history < total:
            return
        c = cf.compose(target, history, r, total, stride, symmetric)
        assert c.total == total
        assert not set(c.reference_indices) & set(c.neighboring_indices)
        assert target in c.neighboring_indices
        assert all((target - i) % stride == 0 for i in c.reference_indices)
        assert all(0 <= i < history for i in c.indices)
        if not symmetric:
            assert max(c.indices) == target
        assert c.r_ref + c.r_nei == pytest.approx(1.0)

    def test_bad_inputs(self):
        with pytest.raises(InvalidValue):
            cf.compose(5, 10, 0.5, 1)
        with pytest.raises(InvalidValue):
            cf.compose(10, 10, 0.5, 8)


def _profile(slope=-1.0, intercept=0.3):
    fit = LineFit(slope, intercept, 0.0)
    return CalibrationProfile(-1.0, -0.5, fit, NormalizationBounds(0, 4, 0, 120), build_segments(fit),
                              created_at="2000-01-01T00:00:00+00:00")


class TestConfigure:
    def test_no_profile_is_balanced(self):
        frames, masks = make_scene("static", 1)
        comp, score = cf.configure(frames, masks, None, cf.MemoryModel(662, 5365, 69))
        assert score is None
        assert len(comp.reference_indices) == 4 and len(comp.neighboring_indices) == 4

    def test_static_stream_is_reference_heavy(self, static_sequence):
        frames, masks = static_sequence
        # static box that does not move: no flow, no mask change
        masks = [masks[0].__class__(masks[0].data, i) for i in range(len(masks))]
        comp, score = cf.configure(frames, masks, _profile(), cf.MemoryModel(662, 5365, 69),
                                   stride=5)
        assert score.x_comb < 0.01
        assert comp.r_ref == 7 / 8

    def test_fast_stream_is_neighbor_heavy(self):
        frames, masks = make_scene("fast", 1)
        comp, score = cf.configure(frames, masks, _profile(), cf.MemoryModel(662, 5365, 69))
        assert comp.r_ref <= 3 / 8
        assert comp.total == 8


class TestSelectRatio:
    def test_extremes(self):
        t = _profile().segments
        assert cf.select_ratio(0.0, t) == 7 / 8
        assert cf.select_ratio(1.0, t) == 1 / 8

    def test_monotone_random(self):
        r = np.random.default_rng(0)
        for _ in range(200):
            t = _profile(r.uniform(-3, 0), r.uniform(-1, 2)).segments
            xs = np.sort(r.random(10))
            ratios = [cf.select_ratio(x, t) for x in xs]
            assert all(a >= b for a, b in zip(ratios, ratios[1:]))
