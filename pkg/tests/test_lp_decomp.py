import numpy as np
import pytest

from opmult.grid import SampledFunction, band_limited, make_grid
from opmult.lp_decomp import (
    FLOOR,
    DecompositionError,
    DyadicInterval,
    SpectrumLeak,
    aniso_blocking_rects,
    blocking_index_set,
    blocking_rects,
    dyadic_intervals,
    index_set_rects,
    product_rects,
    reconstruct,
    sign_patterns,
    unconditionality_constants,
)
from opmult.weights import Weight
from tests.tools import relative_error


def test_dyadic_intervals():
    intervals = dyadic_intervals(-1, 1)
    assert len(intervals) == 6
    assert DyadicInterval(0, -1).interval == (-2.0, -1.0)
    assert DyadicInterval(-1, 1).length == 0.5
    with pytest.raises(DecompositionError):
        dyadic_intervals(2, 1)


def test_product_rects(grid2):
    family = product_rects(2, (0, 1))
    assert len(family) == 16
    assert family.kind == "product"
    # disjoint on the grid
    assert family.union_mask(grid2).sum() == family.masks(grid2).sum()
    assert family.reflected().corner_set() == family.corner_set()
    rows = family.to_rows()
    assert set(rows[0]) == {"kind", "index", "eta", "lower_1", "upper_1", "lower_2", "upper_2"}


def test_blocking_rects(grid2):
    family = blocking_rects(2, (-2, 1))
    assert len(family) == 4 * 2 * 4
    family.union_mask(grid2)
    first = family[0]
    assert first.zero_sides == (False, True)
    assert first.corners[0][1] == 0.0
    assert first.lower[1] == 2.0 ** FLOOR
    with pytest.raises(DecompositionError):
        blocking_rects(2, (1, 0))
    with pytest.raises(DecompositionError):
        blocking_rects(2, (-2, 1), floor=-2)
    with pytest.raises(DecompositionError):
        blocking_rects(4, (0, 1))
    with pytest.raises(DecompositionError):
        family.masks(make_grid(1, 64, 8))


def test_aniso_blocking_rects():
    """Unit exponents give the isotropic blocking family"""
    assert aniso_blocking_rects((1.0, 1.0), (-1, 1)).corner_set() == blocking_rects(2, (-1, 1)).corner_set()
    scaled = aniso_blocking_rects((1.0, 2.0), (0, 0))
    assert max(r.upper[1] for r in scaled) == 4.0
    with pytest.raises(DecompositionError):
        aniso_blocking_rects((1.0, 0.0), (0, 1))


def test_blocking_index_set():
    assert blocking_index_set(0, 1) == {(1,)}
    assert blocking_index_set(2, 2, 0) == {(2, 0), (2, 1)}
    assert blocking_index_set(3, 2, 0) == {(0, 2), (1, 2), (2, 2)}
    with pytest.raises(DecompositionError):
        blocking_index_set(0, 0)


def test_blocking_is_union_of_products(grid2):
    """E_k covers exactly the product rectangles indexed by J_(k-n), node by node"""
    n = 2
    family = blocking_rects(n, (-2, 1))
    for member, mask in zip(family, family.masks(grid2)):
        k = member.index[0]
        products = index_set_rects(blocking_index_set(k - n, n, FLOOR), member.eta)
        assert np.array_equal(products.union_mask(grid2), mask)


def test_reconstruct(grid1, rng):
    family = blocking_rects(1, (-4, 2))
    f = SampledFunction(grid1, band_limited(grid1, 2, band=4.0, inner=0.1, rng=rng))
    assert relative_error(reconstruct(f, family).values, f.values) < 1e-12
    g = SampledFunction(grid1, band_limited(grid1, 1, band=4.0, rng=rng))
    with pytest.raises(SpectrumLeak) as e:
        reconstruct(g, family)
    assert e.value.leaked_mass > 0


def test_sign_patterns(rng):
    rows, description = sign_patterns(3, "exhaustive")
    assert rows.shape == (8, 3)
    assert len({tuple(r) for r in rows}) == 8
    assert description == "exhaustive 8 patterns"
    rows, _ = sign_patterns(20, "auto", samples=200, rng=rng)
    assert rows.shape == (200, 20)
    with pytest.raises(DecompositionError):
        sign_patterns(13, "exhaustive")
    with pytest.raises(DecompositionError):
        sign_patterns(3, "monte_carlo", samples=10)
    with pytest.raises(DecompositionError):
        sign_patterns(3, "quasi")


def test_unconditionality_l2(grid1, rng):
    """In unweighted L^2 the pieces are orthogonal, so both constants are 1"""
    family = product_rects(1, (-2, 1))
    fns = [SampledFunction(grid1, band_limited(grid1, 1, band=3.9, inner=0.25, rng=rng)) for _ in range(3)]
    report = unconditionality_constants(family, 2, None, fns, signs="exhaustive")
    assert report.C_plus == pytest.approx(1.0, abs=1e-12)
    assert report.C_minus == pytest.approx(1.0, abs=1e-12)
    assert report.standard_error is None
    sampled = unconditionality_constants(family, 2, Weight.constant(), fns, signs="monte_carlo", samples=100, rng=rng)
    assert sampled.standard_error is not None
    assert sampled.C_plus == pytest.approx(1.0, abs=1e-12)


def test_unconditionality_lp(grid1, rng):
    family = product_rects(1, (-2, 1))
    fns = [SampledFunction(grid1, band_limited(grid1, 1, band=3.9, inner=0.25, rng=rng))]
    report = unconditionality_constants(family, 4, Weight.power(0.5), fns)
    assert report.C_plus > 0 and report.C_minus > 0
    assert report.is_lower_bound
    with pytest.raises(DecompositionError):
        unconditionality_constants(family, 2, None, [])
    outside = [SampledFunction(grid1, band_limited(grid1, 1, band=0.2, inner=0.1, rng=rng))]
    with pytest.raises(SpectrumLeak):
        unconditionality_constants(family, 2, None, outside)
