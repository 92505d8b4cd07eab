"""Sparse experiments: domination of a multiplier, and weighted sparse and multiplier bounds"""
from typing import List, Literal

import numpy as np
from pydantic import Field

from opmult.experiments.common import (
    ExperimentConfig,
    FunctionModel,
    GridModel,
    LadderModel,
    Outcome,
    Router,
    SymbolModel,
    relative_spread,
)
from opmult.grid import Grid, SampledFunction, scalar_function
from opmult.multiplier import MultiplierOperator
from opmult.opnorm import operator_norm_estimate, weighted_lp_norm
from opmult.report import check
from opmult.sparse import (
    Cube,
    SparseFamily,
    TruncationParams,
    check_sparseness,
    default_grids,
    grand_maximal_truncation,
    multiplier_weight_factor,
    one_weight_power_bound,
    sparse_dominate,
    sparse_operator,
    sparse_weighted_bound_check,
    weak_lp_norm,
)
from opmult.weights import Weight, apr_characteristic, ap_characteristic

router = Router("sparse")


def _machinery(grid: Grid, f: SampledFunction) -> dict:
    """Sparseness of hand-built families and the sparse operator against a per-node sum"""
    whole = Cube(0, (0.0,) * grid.n)
    single = SparseFamily(grid, [whole], [whole.nodes(grid)], 1.0, "single cube")
    nested = SparseFamily.from_cubes(grid, [whole, Cube(1, (0.0,) * grid.n)], name="nested pair")
    norms = f.pointwise_norm()
    masks = [cube.nodes(grid) for cube in nested.cubes]
    oracle = np.zeros(grid.shape)
    for index in np.ndindex(grid.shape):
        oracle[index] = sum(norms[m].mean() for m in masks if m[index])
    measured = sparse_operator(nested, 1, scalar_function(grid, norms)).values[..., 0].real
    return dict(single=check_sparseness(single), nested=check_sparseness(nested),
                operator_defect=float(np.abs(measured - oracle).max()))


class DominateConfig(ExperimentConfig):
    experiment: Literal["sparse-dominate"] = "sparse-dominate"
    symbol: SymbolModel = Field(default_factory=lambda: SymbolModel(kind="hilbert"))
    function: FunctionModel = Field(default_factory=lambda: FunctionModel(kind="bump",
                                                                          params=dict(radius=0.4, centre=0.5)))
    N_values: List[int] = Field(default_factory=lambda: [1024, 2048])
    L: float = 16.0
    r: float = Field(1.1, ge=1, description="Exponent of the sparse averages, the domination needs r > 1")
    k: int = Field(1, ge=1)
    coarsest: int = -2
    finest: int = 4
    stability_tolerance: float = Field(0.25, description="Allowed relative change of C across N")
    oracle_tolerance: float = 1e-12
    maximal_truncation: bool = True


@router.experiment("sparse-dominate", DominateConfig)
def dominate(config: DominateConfig, rng: np.random.Generator) -> Outcome:
    """Sparse families for T f with a domination constant that does not move under refinement"""
    params = TruncationParams(config.k, config.coarsest, config.finest)
    rows = []
    machinery = None
    for N in config.N_values:
        grid = GridModel(n=1, N=N, L=config.L).build()
        T = MultiplierOperator(config.symbol.build(grid))
        f = config.function.build(grid, T.symbol.d_in, rng)
        if machinery is None:
            machinery = _machinery(grid, f)
        grids = default_grids(grid.n, config.finest, config.coarsest)
        report = sparse_dominate(T, f, config.r, params, grids)
        row = dict(N=N, eta=min(check_sparseness(s) for s in report.families), **report.asdict())
        if config.maximal_truncation:
            M = grand_maximal_truncation(T, f, params)
            row["maximal_weak_l1_ratio"] = weak_lp_norm(M, 1) / weighted_lp_norm(f, 1)
        rows.append(row)
    assert machinery is not None
    criteria = [
        check("single cube sparseness", machinery["single"], 1.0, "=="),
        check("nested pair sparseness", machinery["nested"], 0.5, "=="),
        check("sparse operator defect", machinery["operator_defect"], config.oracle_tolerance),
        check("smallest sparseness", min(r["eta"] for r in rows), 0.5, ">="),
        check("largest exceptional fraction", max(r["exceptional_fraction"] for r in rows), 0.005),
        check("relative change of C across N", relative_spread([r["C"] for r in rows]), config.stability_tolerance),
    ]
    return dict(machinery=machinery, grids=rows), criteria


class SparseWeightedConfig(ExperimentConfig):
    experiment: Literal["sparse-weighted"] = "sparse-weighted"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=1024, L=16))
    scales: List[int] = Field(default_factory=lambda: [0, 1, 2], description="A chain of cubes [0, 2^-j)")
    function: FunctionModel = Field(default_factory=lambda: FunctionModel(kind="bump",
                                                                          params=dict(radius=0.5, centre=0.5)))
    exponents: List[float] = Field(default_factory=lambda: [0.0, 0.2, 0.4])
    p: float = 4.0
    r: float = 2.0
    ratio_bound: float = 2.0
    family: LadderModel = Field(default_factory=lambda: LadderModel(scale_min=-2, scale_max=2, extent=4.0))
    reduction_tolerance: float = 1e-6


@router.experiment("sparse-weighted", SparseWeightedConfig)
def sparse_weighted(config: SparseWeightedConfig, rng: np.random.Generator) -> Outcome:
    """Two-weight sparse bound along a power-weight ladder, and the A_p^r to A_{p/r} reduction"""
    grid = config.grid.build()
    cubes = [Cube(j, (0.0,) * grid.n) for j in config.scales]
    S = SparseFamily.from_cubes(grid, cubes, name="chain")
    f = SampledFunction(grid, np.abs(config.function.build(grid, 1, rng).values))
    candidates = config.family.build(grid.n)
    rows = []
    for a in config.exponents:
        omega = Weight.power(a)
        bound = sparse_weighted_bound_check(S, config.r, config.p, omega, Weight.constant(), f)
        sigma = omega ** (-1.0 / (config.p - config.r))
        pair = apr_characteristic(omega, sigma, config.p, config.r, candidates).value
        single = ap_characteristic(omega, config.p / config.r, candidates).value ** (1 / config.p)
        rows.append(dict(a=a, **bound.asdict(), apr=pair, reduced=single, defect=abs(pair - single) / single))
    criteria = [
        check("largest ratio lhs/rhs", max(r["ratio"] for r in rows), config.ratio_bound),
        check("A_p^r reduction defect", max(r["defect"] for r in rows), config.reduction_tolerance),
    ]
    return dict(eta=S.eta, cases=rows), criteria


class MultiplierWeightedConfig(ExperimentConfig):
    experiment: Literal["multiplier-weighted"] = "multiplier-weighted"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=1024, L=16))
    symbol: SymbolModel = Field(default_factory=lambda: SymbolModel(kind="hilbert"))
    exponents: List[float] = Field(default_factory=lambda: [0.0, 0.2, 0.4])
    p: float = 3.0
    r: float = 1.1
    family: LadderModel = Field(default_factory=lambda: LadderModel(scale_min=-3, scale_max=2, extent=4.0))
    budget: int = Field(40, ge=1)
    starts: int = Field(2, ge=1)
    ratio_bound: float = 10.0


@router.experiment("multiplier-weighted", MultiplierWeightedConfig)
def multiplier_weighted(config: MultiplierWeightedConfig, rng: np.random.Generator) -> Outcome:
    """Operator norm lower bounds against the weight factor of the multiplier estimate"""
    grid = config.grid.build()
    T = MultiplierOperator(config.symbol.build(grid))
    candidates = config.family.build(grid.n)
    rows = []
    for a in config.exponents:
        omega = Weight.power(a)
        estimate = operator_norm_estimate(T, config.p, omega, omega, budget=config.budget, starts=config.starts,
                                          rng=rng)
        factor = multiplier_weight_factor(omega, omega, config.p, config.r, candidates)
        dual = multiplier_weight_factor(omega, omega, config.p, config.r, candidates, dual=True)
        power = one_weight_power_bound(omega, config.p, config.r, candidates)
        rows.append(dict(a=a, estimate=estimate.value, factor=factor, dual_factor=dual, power_bound=power,
                         ratio=estimate.value / min(factor, dual)))
    return dict(cases=rows), [check("largest ratio estimate/factor", max(r["ratio"] for r in rows),
                                    config.ratio_bound)]
