import numpy as np
import pytest

from opmult.grid import (
    FunctionSpec,
    Grid,
    GridError,
    SampledFunction,
    band_limited,
    band_mask,
    box_nodes,
    forward_dft,
    inverse_dft,
    l2_norm,
    make_grid,
    random_spectrum,
    sample,
    spectral_l2_norm,
)
from tests.tools import random_function


def test_grid_validation():
    """Grids need a supported dimension, a power-of-two size and a positive box"""
    with pytest.raises(GridError):
        Grid(4, 64, 8.0)
    with pytest.raises(GridError):
        Grid(1, 100, 8.0)
    with pytest.raises(GridError):
        Grid(1, 64, -1.0)
    grid = make_grid(2, 64, 8)
    assert grid.h == 0.125
    assert grid.shape == (64, 64)
    assert grid.nodes[0] == -4.0
    assert grid.freqs[0] == -4.0
    assert grid.refine().N == 128


@pytest.mark.parametrize("n,N,L", [(1, 256, 16), (2, 64, 8)])
def test_roundtrip_and_parseval(n, N, L, rng):
    """inverse_dft(forward_dft(f)) = f and the two L^2 norms agree"""
    grid = make_grid(n, N, L)
    for _ in range(3):
        f = random_function(grid, rng, d=2)
        F = forward_dft(f)
        assert np.abs(inverse_dft(F).values - f.values).max() <= 1e-12 * np.abs(f.values).max()
        assert abs(l2_norm(f) - spectral_l2_norm(F)) <= 1e-10 * l2_norm(f)


def test_gaussian_is_self_dual(grid1):
    """The transform of exp(-pi x^2) is exp(-pi xi^2)"""
    f = sample("gaussian", grid1)
    F = forward_dft(f)
    expected = np.exp(-np.pi * grid1.freqs ** 2)
    assert np.abs(F.values[:, 0] - expected).max() < 1e-12


def test_shift_convention(grid1):
    """A translate by x0 picks up exp(-2 pi i x0 xi)"""
    shifted = sample(FunctionSpec("gaussian", {"centre": 1.0}), grid1)
    F = forward_dft(shifted)
    expected = np.exp(-np.pi * grid1.freqs ** 2) * np.exp(-2j * np.pi * grid1.freqs)
    assert np.abs(F.values[:, 0] - expected).max() < 1e-10


def test_values_shape():
    grid = make_grid(2, 8, 2)
    assert SampledFunction(grid, np.ones((8, 8))).values.shape == (8, 8, 1)
    with pytest.raises(GridError):
        SampledFunction(grid, np.ones((8, 4)))
    with pytest.raises(GridError):
        SampledFunction(grid, np.full((8, 8), np.nan))


def test_box_nodes(grid1):
    """Boxes are half-open: [0, 1) holds 16 nodes at h = 1/16"""
    mask = box_nodes(grid1, [0.0], [1.0])
    assert mask.sum() == 16
    assert mask[grid1.node_index(0.0)]
    assert not mask[grid1.node_index(1.0)]


def test_band_limited(grid1, rng):
    values = band_limited(grid1, 1, band=2.0, rng=rng)
    F = forward_dft(SampledFunction(grid1, values))
    outside = ~band_mask(grid1, 2.0)
    assert np.abs(F.values[outside]).max() < 1e-10 * np.abs(F.values).max()
    with pytest.raises(GridError):
        band_limited(grid1, 1, band=8.0)


def test_random_spectrum_is_grid_independent():
    """The same seed and mask give the same physical function on a refined grid"""
    coarse, fine = make_grid(1, 128, 16), make_grid(1, 512, 16)
    f = random_spectrum(coarse, band_mask(coarse, 1.0), np.random.default_rng(3))
    g = random_spectrum(fine, band_mask(fine, 1.0), np.random.default_rng(3))
    assert np.abs(g.values[::4] - f.values).max() < 1e-12


def test_indicator_faces(grid1):
    """Nodes on a face of the box get weight 1/2"""
    f = sample(FunctionSpec("indicator", {"lower": 0.0, "upper": 1.0}), grid1)
    assert f.values[grid1.node_index(0.0), 0] == 0.5
    assert f.values[grid1.node_index(0.5), 0] == 1.0
    assert f.values[grid1.node_index(1.0), 0] == 0.5
    assert f.values[grid1.node_index(2.0), 0] == 0.0


def test_unknown_constructor(grid1):
    with pytest.raises(GridError):
        sample("sawtooth", grid1)
    with pytest.raises(GridError):
        sample(FunctionSpec("gaussian", {"colour": "blue"}), grid1)
