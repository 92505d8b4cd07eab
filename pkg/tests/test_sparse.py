import logging

import numpy as np
import pytest

from opmult.grid import FunctionSpec, make_grid, sample, scalar_function
from opmult.multiplier import MultiplierOperator, hilbert_symbol, identity
from opmult.sparse import (
    Cube,
    RecursionBudgetExceeded,
    SparseError,
    SparseFamily,
    SparsenessViolation,
    TruncationParams,
    alternating_grid,
    check_sparseness,
    constant_shift_grid,
    default_grids,
    enclosing_cube,
    grand_maximal_truncation,
    multiplier_weight_factor,
    one_weight_power_bound,
    shifted_dyadic_cubes,
    sparse_dominate,
    sparse_operator,
    sparse_weighted_bound_check,
    standard_dyadic_cubes,
    standard_grid,
    weak_lp_norm,
)
from opmult.weights import Weight, box_ladder

UNIT = Cube(0, (0.0,))
HALF = Cube(1, (0.0,))


def test_cube():
    assert HALF.side == 0.5
    assert HALF.upper == (0.5,)
    assert HALF.dilated(1) == ((-0.5,), (1.0,))
    assert UNIT.contains(HALF) and not HALF.contains(UNIT)
    assert Cube(1, (0.0, 0.5)).n == 2


def test_grid_offsets():
    assert np.all(standard_grid(2, 4).offset(0) == 0)
    spec = alternating_grid(1, 2, -1, phase=0)
    assert spec.offset(0)[0] == 0.5
    assert spec.offset(-1)[0] == 0.5
    assert spec.offset(2)[0] == 0.0
    assert spec.truncation_defect() == 0.25
    assert standard_grid(1, 2).truncation_defect() == 0.0
    with pytest.raises(SparseError):
        spec.offset(-3)
    assert [g.name for g in default_grids(1, 2, -1)] == ["standard", "alternating phase 0", "alternating phase 1"]


def test_dyadic_cubes(caplog):
    assert standard_dyadic_cubes(1, [0.0], [1.0]) == [Cube(1, (0.0,)), Cube(1, (0.5,))]
    assert len(standard_dyadic_cubes([0, 1], [0.0, 0.0], [1.0, 1.0])) == 1 + 4
    shifted = shifted_dyadic_cubes(constant_shift_grid(1, 1, 0, (1,)), 0, [0.0], [2.0])
    assert shifted == [Cube(0, (0.5,))]
    with caplog.at_level(logging.WARNING):
        assert standard_dyadic_cubes(0, [0.0], [0.5]) == []
    assert "No whole dyadic cube" in caplog.text


def test_enclosing_cube():
    """A box straddling 1/2 needs the unit cube in the standard grid but fits a finer shifted cube"""
    lower, upper = [0.45], [0.55]
    assert enclosing_cube(lower, upper, [standard_grid(1, 4)], -2) == (0, UNIT)
    assert enclosing_cube(lower, upper, default_grids(1, 4, -2), -2) == (2, Cube(3, (0.4375,)))
    with pytest.raises(SparseError):
        enclosing_cube([-0.5], [0.5], [standard_grid(1, 4)], 0)


def test_sparse_family(grid1):
    nested = SparseFamily.from_cubes(grid1, [UNIT, HALF], name="nested pair")
    assert nested.eta == 0.5
    assert check_sparseness(SparseFamily.from_cubes(grid1, [UNIT])) == 1.0
    data = nested.to_json()
    assert data["name"] == "nested pair"
    assert [c["scale"] for c in data["cubes"]] == [0, 1]
    assert len(data["cubes"][0]["E"]) == 8


def test_sparseness_violations(grid1):
    with pytest.raises(SparsenessViolation) as e:
        check_sparseness(SparseFamily(grid1, [UNIT, HALF], [UNIT.nodes(grid1), HALF.nodes(grid1)], 0.5))
    assert e.value.pair == (0, 1)
    with pytest.raises(SparseError):
        check_sparseness(SparseFamily(grid1, [HALF], [UNIT.nodes(grid1)], 0.5))
    with pytest.raises(SparseError):
        check_sparseness(SparseFamily(grid1, [], [], 0.5))
    with pytest.raises(SparseError):
        SparseFamily(grid1, [UNIT], [], 0.5)


def test_sparse_operator(grid1):
    """With f = 1 the operator counts the cubes containing each node"""
    nested = SparseFamily.from_cubes(grid1, [UNIT, HALF])
    one = scalar_function(grid1, np.ones(grid1.shape))
    counts = sparse_operator(nested, 2, one).values[..., 0].real
    assert counts[grid1.node_index(0.25)] == 2
    assert counts[grid1.node_index(0.75)] == 1
    assert counts[grid1.node_index(1.5)] == 0
    step = scalar_function(grid1, HALF.nodes(grid1).astype(float))
    averages = sparse_operator(nested, 1, step).values[..., 0].real
    assert averages[grid1.node_index(0.25)] == pytest.approx(1.5)
    assert averages[grid1.node_index(0.75)] == pytest.approx(0.5)
    with pytest.raises(SparseError):
        sparse_operator(nested, 2, one * -1)
    with pytest.raises(SparseError):
        sparse_operator(nested, 0.5, one)


def test_weak_lp_norm(grid1):
    f = scalar_function(grid1, UNIT.nodes(grid1).astype(float))
    assert weak_lp_norm(f, 1) == pytest.approx(1.0)
    assert weak_lp_norm(f * 3, 2) == pytest.approx(3.0)
    with pytest.raises(SparseError):
        weak_lp_norm(f, 0.5)


def test_truncation_params():
    assert list(TruncationParams(1, -1, 1).scales) == [-1, 0, 1]
    with pytest.raises(SparseError):
        TruncationParams(k=0)
    with pytest.raises(SparseError):
        TruncationParams(1, 2, 1)


def test_grand_maximal_truncation_of_identity(grid1):
    """For the identity T(f 1_{(3Q)^c}) vanishes on Q"""
    f = sample(FunctionSpec("bump", {"radius": 0.4, "centre": 0.5}), grid1)
    M = grand_maximal_truncation(MultiplierOperator(identity(grid1)), f, TruncationParams(1, -1, 2))
    assert np.abs(M.values).max() < 1e-12


def test_sparse_dominate():
    grid = make_grid(1, 512, 16)
    T = MultiplierOperator(hilbert_symbol(grid))
    f = sample(FunctionSpec("bump", {"radius": 0.4, "centre": 0.5}), grid)
    params = TruncationParams(1, -2, 4)
    report = sparse_dominate(T, f, 1, params, default_grids(1, 4, -2))
    assert len(report.families) == 3
    assert all(check_sparseness(s) >= 0.5 for s in report.families)
    assert 0 < report.C < np.inf
    assert report.exceptional_fraction <= 0.005
    kept = report.rhs > 0
    kept.ravel()[report.exceptional] = False
    assert np.all(report.lhs[kept] <= report.C * report.rhs[kept] + 1e-12 * report.lhs.max())
    assert len(report.rows()) == int((report.rhs > 0).sum())
    assert report.asdict()["families"][0]["name"] == "standard"
    with pytest.raises(SparseError):
        sparse_dominate(T, f, 0.5, params, default_grids(1, 4, -2))
    with pytest.raises(SparseError):
        sparse_dominate(T, f, 1, params, [])


def test_recursion_budget():
    grid = make_grid(1, 512, 16)
    T = MultiplierOperator(hilbert_symbol(grid))
    f = sample(FunctionSpec("bump", {"radius": 0.05, "centre": 0.5}), grid)
    with pytest.raises(RecursionBudgetExceeded):
        sparse_dominate(T, f, 1, TruncationParams(1, -2, 4), [standard_grid(1, 4)], beta=1.5, max_depth=0)


def test_sparse_weighted_bound_constant_weights(grid1):
    """A single cube and f = 1_Q: lhs = ||1_Q||_p and the weight factor is 1 * (1 + 1)"""
    S = SparseFamily.from_cubes(grid1, [UNIT])
    f = scalar_function(grid1, UNIT.nodes(grid1).astype(float))
    bound = sparse_weighted_bound_check(S, 2, 4, Weight.constant(), Weight.constant(), f)
    assert bound.ratio == pytest.approx(0.5)
    zero = sparse_weighted_bound_check(S, 2, 4, Weight.constant(), Weight.constant(), f * 0)
    assert zero.asdict() == dict(lhs=0.0, rhs=0.0, ratio=0.0)
    with pytest.raises(SparseError):
        sparse_weighted_bound_check(S, 2, 2, Weight.constant(), Weight.constant(), f)


def test_multiplier_weight_factor():
    candidates = box_ladder(1, scales=range(-1, 1), extent=2.0)
    one = Weight.constant()
    assert multiplier_weight_factor(one, one, 3, 1.1, candidates) == pytest.approx(2.0)
    assert multiplier_weight_factor(one, one, 3, 1.1, candidates, dual=True) == pytest.approx(2.0)
    assert one_weight_power_bound(one, 3, 1.1, candidates) == pytest.approx(1.0)
    assert one_weight_power_bound(one, 3, 1.1, candidates, dual=True) == pytest.approx(1.0)
    assert multiplier_weight_factor(Weight.power(0.2), Weight.power(0.2), 3, 1.1, candidates) > 2.0 - 1e-9
    with pytest.raises(SparseError):
        multiplier_weight_factor(one, one, 3, 3, candidates)
    with pytest.raises(SparseError):
        multiplier_weight_factor(one, one, 3, 1.5, candidates, dual=True)
    with pytest.raises(SparseError):
        one_weight_power_bound(one, 3, 1.5, candidates, dual=True)
