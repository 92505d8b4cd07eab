from contextlib import contextmanager

import numpy as np

from opmult.config import get_settings
from opmult.grid import Grid, SampledFunction, band_limited


@contextmanager
def opmult_settings(**kargs):
    settings = get_settings()
    old_settings = settings.model_dump()
    try:
        for k, v in kargs.items():
            setattr(settings, k, v)
        yield settings
    finally:
        for k, v in old_settings.items():
            setattr(settings, k, v)


def random_function(grid: Grid, rng: np.random.Generator, d: int = 1) -> SampledFunction:
    shape = grid.shape + (d,)
    return SampledFunction(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def band_function(grid: Grid, rng: np.random.Generator, band: float = 1.0, d: int = 1) -> SampledFunction:
    return SampledFunction(grid, band_limited(grid, d, band=band, rng=rng))


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b)))
