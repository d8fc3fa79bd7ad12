import numpy as np
import pytest

from fracwave import Grid, RealField
from fracwave.diagnostics import random_band_limited

TWO_PI = 2.0 * np.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_grid(n: int, length: float = TWO_PI) -> Grid:
    return Grid(length=length, n_points=n)


def smooth_field(grid: Grid, rng, band: int | None = None, amplitude: float = 1.0) -> RealField:
    """Random band-limited field scaled to a max-abs of roughly `amplitude`."""
    band = band if band is not None else max(2, grid.n_points // 6)
    u = random_band_limited(grid, band, rng)
    peak = np.abs(u.values).max()
    return RealField(grid, u.values * (amplitude / peak))
