import sys
import warnings

import numpy as np
import pytest

from dynacompose.configurator import compose
from dynacompose.errors import AdapterTimeout, DimensionMismatch, InvalidValue, NoSourcePixels, ProcessFailure
from dynacompose.frame_model import Frame, Mask
from dynacompose.inpaint import InpainterAdapter, inpaint_baseline, inpaint_external, run_inpainter
from dynacompose.pipeline import analyze_sequence
from dynacompose.quality_metrics import psnr
from dynacompose.synthetic import make_scene

from conftest import texture


def maps(frames, masks):
    return {f.index: f for f in frames}, {m.index: m for m in masks}


class TestBaseline:
    def test_empty_mask_identity(self, static_sequence):
        frames, masks = static_sequence
        masks = [Mask.empty(48, 64, m.index) for m in masks]
        fm, mm = maps(frames, masks)
        out = inpaint_baseline(fm, mm, compose(30, 31, 0.5, 8), {})
        assert out == frames[30]

    def test_static_reference_reconstructs_exactly(self, static_sequence):
        frames, masks = static_sequence
        fm, mm = maps(frames, masks)
        an = analyze_sequence(frames, masks)
        out = inpaint_baseline(fm, mm, compose(30, 31, 7 / 8, 8), an.flows)
        assert psnr(frames[30], out, masks[30]) == 99.0

    def test_fast_translation_prefers_neighbors(self):
        frames, masks = make_scene("fast", 7)
        fm, mm = maps(frames, masks)
        an = analyze_sequence(frames, masks)
        t = 80
        few = inpaint_baseline(fm, mm, compose(t, t + 1, 1 / 8, 8), an.flows)
        many = inpaint_baseline(fm, mm, compose(t, t + 1, 7 / 8, 8), an.flows)
        assert psnr(frames[t], few, masks[t]) > psnr(frames[t], many, masks[t])

    def test_outside_mask_bit_exact_and_deterministic(self):
        frames, masks = make_scene("medium", 3)
        fm, mm = maps(frames, masks)
        an = analyze_sequence(frames, masks)
        comp = compose(50, 51, 3 / 8, 8)
        a = inpaint_baseline(fm, mm, comp, an.flows)
        b = inpaint_baseline(fm, mm, comp, an.flows)
        hole = masks[50].data
        assert np.array_equal(a.data[~hole], frames[50].data[~hole])
        assert a == b

    def test_no_source_warns(self, rng):
        data = texture(rng, 24, 24)
        m = np.zeros((24, 24), bool)
        m[8:16, 8:16] = True
        frames = [Frame(data, i) for i in range(12)]
        masks = [Mask(m, i) for i in range(12)]
        fm, mm = maps(frames, masks)
        an = analyze_sequence(frames, masks)
        with pytest.warns(NoSourcePixels):
            out = inpaint_baseline(fm, mm, compose(11, 12, 0.5, 4, stride=2), an.flows)
        assert np.array_equal(out.data[~m], data[~m])


def _script(tmp_path, body):
    p = tmp_path / "adapter.py"
    p.write_text(body)
    return f"{sys.executable} {p}"


COPY_TARGET = """
import json, shutil, sys
job = sys.argv[1]
t = json.load(open(job + '/composition.json'))['target']
shutil.copy(job + '/frames/%05d.ppm' % t, job + '/output.ppm')
"""


class TestExternal:
    @pytest.fixture
    def setup(self):
        frames = [Frame(np.full((240, 420, 3), i, np.uint8), i) for i in range(8)]
        masks = [Mask.empty(240, 420, i) for i in range(8)]
        fm, mm = maps(frames, masks)
        return fm, mm, compose(7, 8, 0.5, 4, stride=2)

    def test_echo_adapter(self, tmp_path, setup):
        fm, mm, comp = setup
        out = inpaint_external(InpainterAdapter("external", _script(tmp_path, COPY_TARGET)), comp, fm, mm)
        assert out == fm[7]

    def test_nonzero_exit(self, tmp_path, setup):
        fm, mm, comp = setup
        cmd = _script(tmp_path, "import sys; sys.exit(3)")
        with pytest.raises(ProcessFailure):
            run_inpainter(InpainterAdapter("external", cmd), comp, fm, mm, {})

    def test_wrong_dimensions(self, tmp_path, setup):
        fm, mm, comp = setup
        body = "import sys\nopen(sys.argv[1] + '/output.ppm', 'wb').write(b'P6\\n100 100\\n255\\n' + bytes(30000))\n"
        with pytest.raises(DimensionMismatch):
            inpaint_external(InpainterAdapter("external", _script(tmp_path, body)), comp, fm, mm)

    def test_timeout(self, tmp_path, setup):
        fm, mm, comp = setup
        cmd = _script(tmp_path, "import time; time.sleep(5)")
        with pytest.raises(AdapterTimeout):
            inpaint_external(InpainterAdapter("external", cmd, timeout=0.5), comp, fm, mm)

    def test_missing_output(self, tmp_path, setup):
        fm, mm, comp = setup
        with pytest.raises(ProcessFailure):
            inpaint_external(InpainterAdapter("external", _script(tmp_path, "pass")), comp, fm, mm)

    def test_adapter_validation(self):
        with pytest.raises(InvalidValue):
            InpainterAdapter("external")
        with pytest.raises(InvalidValue):
            InpainterAdapter("neural")
