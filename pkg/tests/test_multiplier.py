import numpy as np
import pytest

from opmult.grid import FunctionSpec, SampledFunction, band_limited, l2_norm, make_grid, sample
from opmult.multiplier import (
    DimensionMismatch,
    MatrixSymbol,
    MultiplierOperator,
    SymbolError,
    adjoint_symbol,
    apply_multiplier,
    coordinate_cutoff,
    duality_pairing,
    frequency_cutoff,
    half_space,
    hilbert_symbol,
    hilbert_transform_quadrature,
    identity,
    indicator,
    inner_product,
    modulation,
    reflection_index,
    sgn,
    symbol_from_spec,
    tabulated,
)
from opmult.weights import Box
from tests.tools import random_function, relative_error


def _random_symbol(grid, rng, d=2):
    shape = grid.shape + (d, d)
    return tabulated(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def test_symbol_validation(grid1):
    with pytest.raises(SymbolError):
        MatrixSymbol(grid1, np.ones(grid1.shape))
    with pytest.raises(SymbolError):
        tabulated(grid1, np.full(grid1.shape, np.inf))
    with pytest.raises(SymbolError):
        symbol_from_spec(dict(kind="wavelet"), grid1)
    with pytest.raises(SymbolError):
        tabulated(grid1, np.ones(grid1.shape)).derivative((1,), grid1.freq_mesh)
    assert symbol_from_spec(dict(kind="sgn", d=3), grid1).d_in == 3


def test_dimension_mismatch(grid1, grid2, rng):
    f = random_function(grid1, rng)
    with pytest.raises(DimensionMismatch):
        apply_multiplier(identity(grid1, d=2), f)
    with pytest.raises(DimensionMismatch):
        apply_multiplier(identity(grid2), f)
    with pytest.raises(DimensionMismatch):
        identity(grid1, d=2) @ identity(grid1, d=3)


def test_identity_and_composition(grid2, rng):
    f = random_function(grid2, rng, d=2)
    assert relative_error(MultiplierOperator(identity(grid2, 2))(f).values, f.values) < 1e-13
    m = _random_symbol(grid2, rng)
    composed = MultiplierOperator(m @ m)(f)
    twice = MultiplierOperator(m)(MultiplierOperator(m)(f))
    assert relative_error(composed.values, twice.values) < 1e-12


def test_composition_of_different_symbols(grid1, rng):
    """T_m T_n = T_(mn) for a 2x3 symbol m after a 3x2 symbol n"""
    m = tabulated(grid1, rng.standard_normal(grid1.shape + (2, 3)) + 1j * rng.standard_normal(grid1.shape + (2, 3)))
    n = tabulated(grid1, rng.standard_normal(grid1.shape + (3, 2)))
    f = random_function(grid1, rng, d=2)
    composed = MultiplierOperator(m @ n)(f)
    assert composed.d == 2
    assert relative_error(composed.values, MultiplierOperator(m)(MultiplierOperator(n)(f)).values) < 1e-12
    with pytest.raises(DimensionMismatch):
        n @ n


def test_unitary_symbol_is_isometry(grid2, rng):
    """A symbol that is unitary at every node preserves the L^2 norm"""
    z = rng.standard_normal(grid2.shape + (2, 2)) + 1j * rng.standard_normal(grid2.shape + (2, 2))
    q, _ = np.linalg.qr(z)
    T = MultiplierOperator(tabulated(grid2, q))
    f = random_function(grid2, rng, d=2)
    assert l2_norm(T(f)) == pytest.approx(l2_norm(f), rel=1e-12)
    phase = MultiplierOperator(modulation(grid2, [0.3, -1.1], d=2))
    assert l2_norm(phase(f)) == pytest.approx(l2_norm(f), rel=1e-12)


def test_hilbert_squares_to_minus_pi_squared(grid1, rng):
    """Away from xi = 0 the symbol squares to -pi^2"""
    f = SampledFunction(grid1, band_limited(grid1, 1, band=2.0, inner=0.5, rng=rng))
    H = MultiplierOperator(hilbert_symbol(grid1))
    assert relative_error(H(H(f)).values, -np.pi ** 2 * f.values) < 1e-12


def test_hilbert_quadrature_matches_multiplier(hilbert_grid):
    """
    Skipping the singular node shifts the periodic cot sum by exactly h f'(x) for an even smooth f,
    so the quadrature agrees with the multiplier up to that term.
    """
    grid = hilbert_grid
    f = sample(FunctionSpec("gaussian", {"width": 2.0}), grid)
    x = grid.nodes[:, np.newaxis]
    derivative = -np.pi * x / 2 * f.values
    spectral = MultiplierOperator(hilbert_symbol(grid))(f)
    quadrature = hilbert_transform_quadrature(f)
    defect = np.abs(quadrature.values - spectral.values - grid.h * derivative).max()
    assert defect < 1e-8 * np.abs(spectral.values).max()
    # an even function has an odd transform
    odd = quadrature.values[1:, 0] + quadrature.values[1:, 0][::-1]
    assert np.abs(odd).max() < 1e-10
    with pytest.raises(DimensionMismatch):
        hilbert_transform_quadrature(sample("gaussian", make_grid(2, 16, 4)))


def test_reflection_index():
    assert list(reflection_index(8)) == [0, 7, 6, 5, 4, 3, 2, 1]


@pytest.mark.parametrize("n,N,L", [(1, 64, 8), (2, 16, 4)])
def test_duality_and_adjoint(n, N, L, rng):
    """<T f, g> = <f, T' g> under the reflected pairing, and the same for the L^2 adjoint"""
    grid = make_grid(n, N, L)
    T = MultiplierOperator(_random_symbol(grid, rng))
    f, g = random_function(grid, rng, 2), random_function(grid, rng, 2)
    lhs = duality_pairing(T(f), g)
    assert abs(lhs - duality_pairing(f, T.dual()(g))) <= 1e-10 * abs(lhs)
    lhs = inner_product(T(f), g)
    assert abs(lhs - inner_product(f, T.adjoint()(g))) <= 1e-10 * abs(lhs)


def test_adjoint_symbol(grid1):
    # -pi i sgn is its own reflected adjoint, apart from the unpaired Nyquist node
    m = hilbert_symbol(grid1)
    a = adjoint_symbol(m)
    assert np.array_equal(a.values[1:], m.values[1:])
    assert a.values[0, 0, 0] == -m.values[0, 0, 0]
    xi = (np.array([-1.5, 0.0, 2.0]),)
    assert np.allclose(a.evaluate(xi), m.evaluate(xi))
    assert np.allclose(a.derivative([1], xi), 0)
    assert a.name.endswith("~*")


def test_frequency_cutoffs(grid2, rng):
    f = random_function(grid2, rng)
    whole = frequency_cutoff(Box((-np.inf, -np.inf), (np.inf, np.inf)), f)
    assert relative_error(whole.values, f.values) < 1e-13
    left = coordinate_cutoff(2, (-np.inf, 0.5), f)
    right = coordinate_cutoff(2, (0.5, np.inf), f)
    assert relative_error((left + right).values, f.values) < 1e-13
    box = frequency_cutoff(Box((-np.inf, -np.inf), (np.inf, 0.5)), f)
    assert relative_error(box.values, left.values) < 1e-13
    with pytest.raises(DimensionMismatch):
        coordinate_cutoff(0, (0, 1), f)
    with pytest.raises(DimensionMismatch):
        coordinate_cutoff(3, (0, 1), f)


def test_half_space_partition(grid2, rng):
    f = random_function(grid2, rng)
    lower = MultiplierOperator(indicator(grid2, Box((-np.inf, -np.inf), (0.0, np.inf))))(f)
    upper = MultiplierOperator(half_space(grid2))(f)
    assert relative_error((lower + upper).values, f.values) < 1e-13


def test_modulation_translates(grid1, rng):
    """exp(2 pi i a xi) with a = 3h moves every sample by three nodes"""
    f = random_function(grid1, rng)
    shifted = MultiplierOperator(modulation(grid1, 3 * grid1.h))(f)
    assert relative_error(shifted.values, np.roll(f.values, -3, axis=0)) < 1e-12


def test_sgn_zero_at_origin(grid1):
    m = sgn(grid1)
    assert m.values[grid1.freq_index(0.0), 0, 0] == 0
    assert m.values[grid1.freq_index(1.0), 0, 0] == 1
    assert m.derivative((0,), (np.array([-2.0]),))[0, 0, 0] == -1
