import numpy as np
import pytest
from scipy import ndimage

from dynacompose.frame_model import Frame, Mask

_ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (passed, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        passed, title, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {n}. {title}: {detail}")


def texture(rng, h, w, sigma=1.5, channels=3):
    planes = []
    for _ in range(channels):
        t = ndimage.gaussian_filter(rng.random((h, w)), sigma, mode="wrap")
        planes.append((t - t.min()) / (t.max() - t.min()) * 255)
    a = np.stack(planes, -1) if channels > 1 else planes[0]
    return np.floor(a + 0.5).astype(np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def box_mask():
    def make(h, w, y0, y1, x0, x1, index=0):
        m = np.zeros((h, w), dtype=bool)
        m[y0:y1, x0:x1] = True
        return Mask(m, index)

    return make


@pytest.fixture
def static_sequence(rng):
    """Still textured frames with a box occluder that slides right 2 px per frame."""
    data = texture(rng, 48, 64)
    frames, masks = [], []
    for t in range(40):
        m = np.zeros((48, 64), dtype=bool)
        x = 4 + (2 * t) % 44
        m[18:30, x : x + 12] = True
        frames.append(Frame(data, t))
        masks.append(Mask(m, t))
    return frames, masks
