import numpy as np
import pytest
from hypothesis import settings

from jpegid.jpeg_sim import PixelImage

settings.register_profile("default", deadline=None, derandomize=True, max_examples=100)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def smooth_image(width, height, seed=0, channels=3):
    """Low-frequency test pattern with mild noise."""
    g = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    base = 128 + 50 * np.sin(xx / (5 + 10 * g.random())) * np.cos(yy / (7 + 10 * g.random()))
    if channels == 1:
        return PixelImage(np.clip(np.rint(base + g.normal(0, 1, base.shape)), 0, 255).astype(np.uint8))
    rgb = np.stack([base, np.roll(base, 3, axis=1), 255 - base], axis=-1)
    return PixelImage(np.clip(np.rint(rgb + g.normal(0, 1, rgb.shape)), 0, 255).astype(np.uint8))


def noise_image(width, height, seed=0, channels=3):
    g = np.random.default_rng(seed)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return PixelImage(g.integers(0, 256, shape).astype(np.uint8))
