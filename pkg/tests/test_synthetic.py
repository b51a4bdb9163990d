import numpy as np
import pytest

from dynacompose.synthetic import PRESETS, make_scene, scene_spec


class TestScenes:
    @pytest.mark.parametrize("kind", sorted(PRESETS))
    def test_deterministic(self, kind):
        a = make_scene(scene_spec(kind, n_frames=12), 9)
        b = make_scene(scene_spec(kind, n_frames=12), 9)
        assert a == b

    def test_seed_matters(self):
        assert make_scene(scene_spec("static", n_frames=4), 1) != make_scene(scene_spec("static", n_frames=4), 2)

    def test_pan_moves_content(self):
        frames, _ = make_scene(scene_spec("fast", n_frames=3), 0)
        a, b = frames[0].data.astype(int), frames[1].data.astype(int)
        # frame t+1 shows the canvas shifted by the pan (3, 1)
        assert np.abs(a[1:, 3:] - b[:-1, :-3]).mean() < 3
        assert np.abs(a - b).mean() > 10

    def test_still_is_still(self):
        frames, masks = make_scene(scene_spec("still", n_frames=5), 0)
        assert all(f.data.tobytes() == frames[0].data.tobytes() for f in frames)
        assert all(m.data.tobytes() == masks[0].data.tobytes() for m in masks)

    def test_mask_stays_inside(self):
        _, masks = make_scene("medium", 3)
        assert all(0 < m.mask_size < m.data.size // 2 for m in masks)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            scene_spec("warp")
