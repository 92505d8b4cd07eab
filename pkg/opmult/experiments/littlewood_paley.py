"""Littlewood-Paley experiments: reconstruction, the blocking identity, unconditionality and the half-line probe"""
from typing import List, Literal, Optional

import numpy as np
from pydantic import Field

from opmult.experiments.common import (
    ExperimentConfig,
    GridModel,
    Outcome,
    Router,
    Spec,
    WeightModel,
    child_seed,
    relative_spread,
)
from opmult.grid import band_mask, l2_norm, random_spectrum
from opmult.lp_decomp import (
    FLOOR,
    blocking_index_set,
    blocking_rects,
    index_set_rects,
    product_rects,
    reconstruct,
    unconditionality_constants,
)
from opmult.multiplier import MultiplierOperator, half_space
from opmult.opnorm import divergence_probe, refinement_ladder
from opmult.report import check

router = Router("littlewood-paley")


class ReconstructConfig(ExperimentConfig):
    experiment: Literal["lp-reconstruct"] = "lp-reconstruct"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=2, N=128, L=16))
    l_min: int = -4
    l_max: int = 1
    functions: int = Field(5, ge=1)
    tolerance: float = 1e-10


@router.experiment("lp-reconstruct", ReconstructConfig)
def lp_reconstruct(config: ReconstructConfig, rng: np.random.Generator) -> Outcome:
    """Sum of the blocking cutoffs returns f for band-limited f inside the covered band"""
    grid = config.grid.build()
    family = blocking_rects(grid.n, (config.l_min, config.l_max))
    # nodes off the coordinate hyperplanes with 2^l_min <= |xi|_inf < 2^(l_max + 1)
    top = 2.0 ** (config.l_max + 1)
    mask = band_mask(grid, top, 2.0 ** config.l_min) & np.all([xi != 0 for xi in grid.freq_mesh], axis=0)
    mask &= np.max(np.abs(np.stack(grid.freq_mesh)), axis=0) < top
    worst = 0.0
    for _ in range(config.functions):
        f = random_spectrum(grid, mask, rng)
        worst = max(worst, l2_norm(reconstruct(f, family) - f) / l2_norm(f))
    results = dict(members=len(family), covered_nodes=int(mask.sum()), relative_error=worst)
    return results, [check("reconstruction relative error", worst, config.tolerance)]


class BlockingIdentityConfig(ExperimentConfig):
    experiment: Literal["blocking-identity"] = "blocking-identity"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=2, N=256, L=8))
    l_min: int = -2
    l_max: int = 2


@router.experiment("blocking-identity", BlockingIdentityConfig)
def blocking_identity(config: BlockingIdentityConfig, rng: np.random.Generator) -> Outcome:
    """E_{k,eta} against the union of products over the index set J_{k-n}, node by node"""
    grid = config.grid.build()
    n = grid.n
    family = blocking_rects(n, (config.l_min, config.l_max))
    defects = 0
    for rect, single in zip(family, family.masks(grid)):
        products = index_set_rects(blocking_index_set(rect.index[0] - n, n, FLOOR), rect.eta)
        defects += int(np.sum(products.union_mask(grid) != single))
    return dict(members=len(family)), [check("defect nodes", defects, 0, "==")]


class StabilityModel(Spec):
    """Weighted constants across a refinement of the grid at fixed L"""

    N_values: List[int] = Field(default_factory=lambda: [512, 1024, 2048])
    L: float = 32.0
    weight: WeightModel = Field(default_factory=lambda: WeightModel(kind="power", a=0.5))
    p: float = 2.0
    tolerance: float = Field(0.2, description="Allowed relative change of C+ and C- across N")


class UnconditionalityConfig(ExperimentConfig):
    experiment: Literal["lp-unconditionality"] = "lp-unconditionality"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=256, L=32))
    k_min: int = -2
    k_max: int = 1
    functions: int = Field(20, ge=1)
    signs: str = "exhaustive"
    tolerance: float = 1e-10
    stability: Optional[StabilityModel] = Field(default_factory=StabilityModel)


@router.experiment("lp-unconditionality", UnconditionalityConfig)
def lp_unconditionality(config: UnconditionalityConfig, rng: np.random.Generator) -> Outcome:
    """Unweighted p=2 constants equal 1; weighted constants stay put under grid refinement"""
    grid = config.grid.build()
    family = product_rects(grid.n, (config.k_min, config.k_max))
    mask = family.union_mask(grid)
    test_fns = [random_spectrum(grid, mask, rng) for _ in range(config.functions)]
    report = unconditionality_constants(family, 2, None, test_fns, config.signs, rng=rng)
    results = dict(members=len(family), unweighted=report.asdict())
    criteria = [
        check("|C+ - 1|", abs(report.C_plus - 1), config.tolerance),
        check("|C- - 1|", abs(report.C_minus - 1), config.tolerance),
    ]
    if config.stability is not None:
        stability = config.stability
        omega = stability.weight.build()
        seed = child_seed(rng)
        rows = []
        for N in stability.N_values:
            fine = GridModel(n=grid.n, N=N, L=stability.L).build()
            # same seed on every grid: the same physical test functions
            local = np.random.default_rng(seed)
            fns = [random_spectrum(fine, family.union_mask(fine), local) for _ in range(config.functions)]
            constants = unconditionality_constants(family, stability.p, omega, fns, "auto", rng=local)
            rows.append(dict(N=N, **constants.asdict()))
        results["stability"] = rows
        criteria += [
            check("C+ relative change across N", relative_spread([r["C_plus"] for r in rows]), stability.tolerance),
            check("C- relative change across N", relative_spread([r["C_minus"] for r in rows]), stability.tolerance),
        ]
    return results, criteria


class KurtzCase(WeightModel):
    expect: str = "BOUNDED"


class KurtzConfig(ExperimentConfig):
    experiment: Literal["kurtz-iff"] = "kurtz-iff"
    cases: List[KurtzCase] = Field(default_factory=lambda: [
        KurtzCase(kind="power", a=0.5, expect="BOUNDED"),
        KurtzCase(kind="power", a=1.5, expect="DIVERGING"),
    ])
    p: float = 2.0
    N: int = 256
    L: float = 16.0
    steps: int = Field(3, ge=2)
    factor: int = Field(4, ge=2)
    budget: int = Field(200, ge=1)


@router.experiment("kurtz-iff", KurtzConfig)
def kurtz_iff(config: KurtzConfig, rng: np.random.Generator) -> Outcome:
    """Delta(R+) on L^2_{|x|^a}: bounded for a in (-1, 1), diverging beyond"""
    ladder = refinement_ladder(1, config.N, config.L, config.steps, config.factor)
    seed = child_seed(rng)
    rows, criteria = [], []
    for case in config.cases:
        omega = WeightModel(kind=case.kind, a=case.a, c=case.c).build()
        report = divergence_probe(lambda g: MultiplierOperator(half_space(g)), config.p, omega, ladder,
                                  budget=config.budget, seed=seed)
        rows.append(dict(weight=omega.to_spec(), **report.asdict()))
        criteria.append(check(f"verdict for {omega}", report.verdict, case.expect, "=="))
    return dict(cases=rows), criteria
