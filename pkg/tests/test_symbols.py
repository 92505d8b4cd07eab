import math

import numpy as np
import pytest

from opmult.grid import SampledFunction, band_limited, l2_norm, make_grid
from opmult.lp_decomp import DyadicInterval, blocking_rects, product_rects
from opmult.multiplier import DimensionMismatch, MultiplierOperator, SymbolError, hilbert_symbol, sgn, tabulated
from opmult.symbols import (
    AnnulusOutOfBox,
    BandOverflow,
    approx_kernel,
    aniso_dilation,
    aniso_distance,
    check_p_hoermander,
    dyadic_partition_of_unity,
    hoermander_condition,
    log_ladder,
    maxreg_solve,
    maxreg_symbol,
    mikhlin_norm_1d,
    mikhlin_norm_aniso,
    mikhlin_norm_nq,
    mikhlin_norm_rect,
    r_bound,
    rademacher_ratio,
    rbdd_variation_1d,
    time_derivative,
)
from tests.tools import random_function, relative_error

DIAG_12 = [[1.0, 0.0], [0.0, 2.0]]


def test_r_bound(rng):
    """In Euclidean fibers the Rademacher ratio never exceeds the largest spectral norm"""
    operators = rng.standard_normal((5, 3, 3))
    vectors = rng.standard_normal((5, 3))
    assert rademacher_ratio(operators, vectors) <= r_bound(operators) + 1e-12
    assert r_bound(np.eye(3)) == pytest.approx(1.0)
    assert rademacher_ratio([np.eye(2)] * 3, rng.standard_normal((3, 2))) == pytest.approx(1.0)
    with pytest.raises(SymbolError):
        rademacher_ratio([np.eye(2)] * 2, np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        rademacher_ratio([np.eye(2)] * 2, np.ones((3, 2)))
    with pytest.raises(SymbolError):
        r_bound(np.zeros((0, 2, 2)))


def test_log_ladder():
    ladder = log_ladder(4, 2)
    assert ladder[0] == pytest.approx(0.25)
    assert ladder[-1] == pytest.approx(4.0)
    assert np.all(np.diff(ladder) > 0)


def test_mikhlin_1d(grid1):
    assert mikhlin_norm_1d(sgn(grid1, d=2)).value == 1.0
    assert mikhlin_norm_1d(hilbert_symbol(grid1)).value == pytest.approx(np.pi)
    report = mikhlin_norm_1d(maxreg_symbol(DIAG_12, grid1))
    assert report.value == pytest.approx(1.0, abs=1e-3)
    assert report.breakdown["(1)"] == pytest.approx(0.5, abs=1e-3)
    assert report.derivative_source == "analytic"
    with pytest.raises(DimensionMismatch):
        mikhlin_norm_1d(sgn(make_grid(2, 16, 4)))


def test_mikhlin_tabulated_needs_closure(grid1):
    """A bare table on a coarse grid cannot feed the log ladder"""
    with pytest.raises(SymbolError):
        mikhlin_norm_1d(tabulated(grid1, np.sign(grid1.freqs)))


def test_mikhlin_nq(grid2):
    report = mikhlin_norm_nq(sgn(grid2), 1, 1)
    assert report.value == 1.0
    assert set(report.breakdown) == {"(0,0)", "(0,1)", "(1,0)"}
    assert len(mikhlin_norm_nq(sgn(grid2), 1, math.inf).breakdown) == 4
    with pytest.raises(SymbolError):
        mikhlin_norm_nq(sgn(grid2), 1, 2)


def test_mikhlin_rect(grid2):
    assert mikhlin_norm_rect(sgn(grid2), product_rects(2, (-1, 1))).value == 1.0
    report = mikhlin_norm_rect(hilbert_symbol(grid2), blocking_rects(2, (-1, 1)))
    assert report.value == pytest.approx(np.pi)
    assert len(report.rectangles) == len(blocking_rects(2, (-1, 1)))
    with pytest.raises(SymbolError):
        mikhlin_norm_rect(sgn(grid2), product_rects(2, (0, 0)), max_order=2)
    with pytest.raises(DimensionMismatch):
        mikhlin_norm_rect(sgn(grid2), product_rects(1, (0, 0)))


def test_mikhlin_aniso(grid2):
    assert mikhlin_norm_aniso(sgn(grid2), (1.0, 2.0), l_range=(-1, 1)).value == 1.0
    with pytest.raises(SymbolError):
        mikhlin_norm_aniso(sgn(grid2), (1.0, -1.0))
    with pytest.raises(DimensionMismatch):
        mikhlin_norm_aniso(sgn(grid2), (1.0,))


def test_aniso_distance(rng):
    xi = tuple(rng.standard_normal(100) for _ in range(3))
    a = (0.5, 1.0, 2.0)
    for lam in (0.25, 3.0):
        scaled = aniso_distance(aniso_dilation(xi, a, lam), a)
        assert np.abs(scaled - lam * aniso_distance(xi, a)).max() < 1e-12 * lam * aniso_distance(xi, a).max()
    assert aniso_distance((np.array([2.0]),), (1.0,))[0] == pytest.approx(2.0)
    with pytest.raises(SymbolError):
        aniso_distance(xi, (0.0, 1.0, 1.0))


def test_hoermander(grid1):
    """For sgn the zeroth order term is (R^-1 * 2R)^(1/2) at every radius"""
    report = hoermander_condition(sgn(grid1), 2.0, 1, [0.5, 1.0, 4.0])
    assert report.breakdown["(0)"] == pytest.approx(math.sqrt(2))
    assert report.breakdown["(1)"] == 0.0
    assert hoermander_condition(sgn(grid1), 2.0, 1, [1.0], mode="adjoint").value == pytest.approx(math.sqrt(2))
    with pytest.raises(SymbolError):
        hoermander_condition(sgn(grid1), 2.5, 1, [1.0])
    with pytest.raises(SymbolError):
        hoermander_condition(sgn(grid1), 2.0, 2, [1.0])
    with pytest.raises(SymbolError):
        hoermander_condition(sgn(grid1), 2.0, 1, [])


def test_partition_of_unity():
    phi = dyadic_partition_of_unity()
    ladder = log_ladder(32, 6)
    xi = np.concatenate([-ladder, ladder])
    assert np.abs(phi.partial_sum(6, xi) - 1).max() < 1e-12
    outside = np.array([0.0, 0.25, 0.5, 2.0, 3.0, -4.0])
    assert np.all(phi(outside) == 0)
    assert phi(np.array([1.0]))[0] > 0
    assert np.allclose(phi((np.array([0.6]), np.array([0.8]))), phi(np.array([1.0])))


def test_approx_kernel(grid1):
    m = hilbert_symbol(grid1)
    with pytest.raises(DimensionMismatch):
        approx_kernel(m, 2, make_grid(1, 512, 16))
    with pytest.raises(SymbolError):
        approx_kernel(m, -1)
    K = approx_kernel(m, 2)
    assert sorted(K.blocks) == list(range(-2, 3))
    expected = m.values * dyadic_partition_of_unity().partial_sum(2, grid1.freq_mesh)[..., None, None]
    assert np.abs(K.spectrum() - expected).max() < 1e-10


@pytest.mark.parametrize("N,L,largest", [(256, 16, 2), (4096, 40, 4), (16384, 40, 6), (64, 2, 3)])
def test_kernel_band_limit(N, L, largest):
    """2^N <= N_grid/(4L) is the largest legal truncation"""
    grid = make_grid(1, N, L)
    m = hilbert_symbol(grid)
    assert 2 ** largest <= N / (4 * L) < 2 ** (largest + 1)
    assert len(approx_kernel(m, largest).blocks) == 2 * largest + 1
    with pytest.raises(BandOverflow):
        approx_kernel(m, largest + 1)


def test_kernel_convolution(grid1, rng):
    m = hilbert_symbol(grid1)
    K = approx_kernel(m, 2)
    phi = dyadic_partition_of_unity()
    truncated = tabulated(grid1, m.values * phi.partial_sum(2, grid1.freq_mesh)[..., None, None])
    f = random_function(grid1, rng)
    assert relative_error(K.convolve(f).values, MultiplierOperator(truncated)(f).values) < 1e-10


def test_p_hoermander(hilbert_grid):
    K = approx_kernel(hilbert_symbol(hilbert_grid), 4)
    h = hilbert_grid.h
    report = check_p_hoermander(K, 1, [2 * h], range(1, 6))
    assert sorted(report.a_k) == [1, 2, 3, 4, 5]
    assert np.isfinite(report.total)
    assert report.total == pytest.approx(sum(report.a_k.values()))
    assert report.asdict()["a_k"]["1"] == report.a_k[1]
    with pytest.raises(SymbolError):
        check_p_hoermander(K, 1, [0.5 * h])
    with pytest.raises(SymbolError):
        check_p_hoermander(K, 0.5, [2 * h])
    with pytest.raises(AnnulusOutOfBox):
        check_p_hoermander(K, 1, [256 * h], [4])


def test_p_hoermander_self_similar(hilbert_grid):
    # a_k of a 1/x kernel does not depend on y once y is above the kernel's smoothing scale
    K = approx_kernel(hilbert_symbol(hilbert_grid), 4)
    h = hilbert_grid.h
    a_3 = [check_p_hoermander(K, 1, [steps * h], [3]).a_k[3] for steps in [8, 6, 4]]
    assert max(a_3) / min(a_3) - 1 <= 0.1, a_3


def test_rbdd_variation(grid1):
    m = maxreg_symbol(DIAG_12, grid1)
    for interval in [DyadicInterval(-2, 1), DyadicInterval(3, -1), (1.0, 2.0)]:
        measure, bound = rbdd_variation_1d(m, interval)
        assert measure == pytest.approx(2 + math.log(2))
        assert 0 < bound <= 1.0 + 1e-12
    with pytest.raises(SymbolError):
        rbdd_variation_1d(m, (1.0, 3.0))
    with pytest.raises(SymbolError):
        rbdd_variation_1d(m, (-1.0, 2.0))


def test_maxreg_symbol(grid1):
    m = maxreg_symbol(DIAG_12, grid1)
    xi = np.array([0.5, 3.0])
    expected = 1j * xi / (1j * xi - 2.0)
    assert np.abs(m.evaluate((xi,))[:, 1, 1] - expected).max() < 1e-14
    step = 1e-6
    numeric = (m.evaluate((xi + step,)) - m.evaluate((xi - step,))) / (2 * step)
    assert np.abs(m.derivative((1,), (xi,)) - numeric).max() < 1e-8
    with pytest.raises(SymbolError):
        maxreg_symbol([[0.0, 1.0], [-1.0, 0.0]], grid1)
    with pytest.raises(SymbolError):
        maxreg_symbol([[1.0, 0.0]], grid1)
    with pytest.raises(DimensionMismatch):
        maxreg_symbol(DIAG_12, make_grid(2, 16, 4))


def test_maxreg_solve(grid1, rng):
    """u' + Au = f for the periodic solution"""
    f = SampledFunction(grid1, band_limited(grid1, 2, band=2.0, rng=rng))
    u, Au = maxreg_solve(DIAG_12, f)
    assert l2_norm(time_derivative(u) + Au - f) <= 1e-10 * l2_norm(f)
    with pytest.raises(DimensionMismatch):
        maxreg_solve(DIAG_12, random_function(grid1, rng, 3))
