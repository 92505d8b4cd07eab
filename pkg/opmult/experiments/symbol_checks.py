"""Symbol experiments: Mikhlin norms, R-bounded variation, truncated kernels and maximal regularity"""
import math
from typing import List, Literal

import numpy as np
from pydantic import Field

from opmult.experiments.common import (
    ExperimentConfig,
    GridModel,
    Outcome,
    Router,
    SymbolModel,
    WeightModel,
    child_seed,
    relative_spread,
)
from opmult.grid import SampledFunction, band_limited, l2_norm
from opmult.lp_decomp import dyadic_intervals
from opmult.multiplier import MultiplierOperator, SymbolError
from opmult.opnorm import divergence_probe, refinement_ladder
from opmult.report import check
from opmult.symbols import (
    approx_kernel,
    check_p_hoermander,
    dyadic_partition_of_unity,
    hoermander_condition,
    log_ladder,
    maxreg_solve,
    maxreg_symbol,
    mikhlin_norm_1d,
    mikhlin_norm_nq,
    rbdd_variation_1d,
    time_derivative,
)

router = Router("symbols")

DIAG_12 = [[1.0, 0.0], [0.0, 2.0]]


class MikhlinConfig(ExperimentConfig):
    experiment: Literal["mikhlin-check"] = "mikhlin-check"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=256, L=16))
    sgn_dimension: int = Field(2, ge=1)
    A: List[List[float]] = Field(default_factory=lambda: DIAG_12)
    exact_tolerance: float = 1e-12
    resolvent_tolerance: float = 1e-3
    hoermander_s: float = 2.0


@router.experiment("mikhlin-check", MikhlinConfig)
def mikhlin_check(config: MikhlinConfig, rng: np.random.Generator) -> Outcome:
    """||sgn Id|| = 1 exactly; the resolvent symbol has norm 1 with derivative term 1/2"""
    grid = config.grid.build()
    sgn = SymbolModel(kind="sgn", d=config.sgn_dimension).build(grid)
    sgn_report = mikhlin_norm_1d(sgn)
    resolvent = maxreg_symbol(config.A, grid)
    resolvent_report = mikhlin_norm_1d(resolvent)
    essential = mikhlin_norm_nq(resolvent, 1, 1)
    radii = [2.0 ** k for k in range(-4, 5)]
    hoermander = hoermander_condition(resolvent, config.hoermander_s, 1, radii)
    results = dict(sgn=sgn_report.asdict(), resolvent=resolvent_report.asdict(), essential=essential.asdict(),
                   hoermander=hoermander.asdict())
    criteria = [
        check("|sgn norm - 1|", abs(sgn_report.value - 1), config.exact_tolerance),
        check("|resolvent norm - 1|", abs(resolvent_report.value - 1), config.resolvent_tolerance),
        check("|resolvent derivative term - 1/2|", abs(resolvent_report.breakdown["(1)"] - 0.5),
              config.resolvent_tolerance),
    ]
    return results, criteria


class VariationConfig(ExperimentConfig):
    experiment: Literal["rbdd-variation"] = "rbdd-variation"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=256, L=16))
    symbol: SymbolModel = Field(default_factory=lambda: SymbolModel(kind="resolvent", A=DIAG_12))
    k_min: int = -6
    k_max: int = 6
    tolerance: float = 1e-9


@router.experiment("rbdd-variation", VariationConfig)
def rbdd_variation(config: VariationConfig, rng: np.random.Generator) -> Outcome:
    """The measure attached to every dyadic interval has total variation 2 + log 2"""
    m = config.symbol.build(config.grid.build())
    rows = []
    for interval in dyadic_intervals(config.k_min, config.k_max):
        measure, bound = rbdd_variation_1d(m, interval)
        rows.append(dict(k=interval.k, eta=interval.eta, measure=measure, r_bound=bound))
    defect = max(abs(r["measure"] - (2 + math.log(2))) for r in rows)
    results = dict(intervals=rows, max_r_bound=max(r["r_bound"] for r in rows))
    return results, [check("|variation - (2 + log 2)|", defect, config.tolerance)]


class PartitionConfig(ExperimentConfig):
    experiment: Literal["partition-of-unity"] = "partition-of-unity"
    J: int = Field(8, ge=0)
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=16384, L=40))
    symbol: SymbolModel = Field(default_factory=lambda: SymbolModel(kind="hilbert"))
    N: int = Field(6, ge=0, description="Truncation of the kernel K_N, at most log2(N_grid/(4L))")
    sum_tolerance: float = 1e-10
    kernel_tolerance: float = 1e-8


@router.experiment("partition-of-unity", PartitionConfig)
def partition_of_unity(config: PartitionConfig, rng: np.random.Generator) -> Outcome:
    """sum_{|j| <= J} phi(2^-j xi) = 1 on [2^-J, 2^J], and the transform of K_N is m times the partial sum"""
    phi = dyadic_partition_of_unity()
    ladder = log_ladder(64, config.J)
    xi = np.concatenate([-ladder, ladder])
    sum_defect = float(np.abs(phi.partial_sum(config.J, xi) - 1).max())
    grid = config.grid.build()
    m = config.symbol.build(grid)
    K = approx_kernel(m, config.N, grid)
    expected = m.values * phi.partial_sum(config.N, grid.freq_mesh)[..., None, None]
    kernel_defect = float(np.abs(K.spectrum() - expected).max() / np.abs(m.values).max())
    results = dict(sum_defect=sum_defect, kernel_defect=kernel_defect, blocks=len(K.blocks))
    criteria = [
        check("partial sum defect", sum_defect, config.sum_tolerance),
        check("kernel spectral defect", kernel_defect, config.kernel_tolerance),
    ]
    return results, criteria


class PHoermanderConfig(ExperimentConfig):
    experiment: Literal["p-hoermander"] = "p-hoermander"
    symbol: SymbolModel = Field(default_factory=lambda: SymbolModel(kind="hilbert"))
    N_values: List[int] = Field(default_factory=lambda: [4096, 8192])
    L: float = 40.0
    truncation: int = Field(4, ge=0, description="Kernel truncation, at most log2(N_grid/(4L)) on the coarsest grid")
    p: float = Field(1.0, ge=1)
    offset_steps: int = Field(2, ge=2, description="y in units of the coarsest grid spacing (even)")
    k_max: int = Field(8, ge=1)
    similarity_k: int = 3
    similarity_steps: List[int] = Field(default_factory=lambda: [8, 6, 4],
                                        description="Shrinking offsets in units of the coarsest grid spacing")
    tolerance: float = Field(0.1, description="Allowed relative change of the sum under refinement, and of a_k as y shrinks")


@router.experiment("p-hoermander", PHoermanderConfig)
def p_hoermander(config: PHoermanderConfig, rng: np.random.Generator) -> Outcome:
    """Kernel difference sums sum_k a_k are finite, stable under grid refinement and self-similar as y shrinks"""
    coarse_h = config.L / min(config.N_values)
    y = config.offset_steps * coarse_h
    k_range = range(1, config.k_max + 1)
    rows = []
    for N in config.N_values:
        grid = GridModel(n=1, N=N, L=config.L).build()
        K = approx_kernel(config.symbol.build(grid), config.truncation, grid)
        report = check_p_hoermander(K, config.p, [y], k_range)
        similarity = {}
        for steps in config.similarity_steps:
            offset = steps * coarse_h
            single = check_p_hoermander(K, config.p, [offset], [config.similarity_k])
            similarity[str(steps)] = single.a_k[config.similarity_k]
        rows.append(dict(N=N, report=report.asdict(), similarity=similarity))
    totals = [r["report"]["total"] for r in rows]
    criteria = [
        check("sum finite", bool(np.all(np.isfinite(totals))), True, "=="),
        check("relative change under refinement", relative_spread(totals), config.tolerance),
    ]
    for row in rows:
        spread = relative_spread(list(row["similarity"].values()))
        criteria.append(check(f"self-similarity of a_{config.similarity_k} as y -> 0 (N={row['N']})", spread,
                              config.tolerance))
    return dict(y=y, grids=rows), criteria


class MaxregConfig(ExperimentConfig):
    experiment: Literal["maxreg"] = "maxreg"
    A: List[List[float]] = Field(default_factory=lambda: DIAG_12)
    rejected_A: List[List[float]] = Field(default_factory=lambda: [[0.0, 1.0], [-1.0, 0.0]],
                                          description="A matrix with spectrum on the imaginary axis")
    weight: WeightModel = Field(default_factory=lambda: WeightModel(kind="power", a=0.5))
    p: float = 2.0
    N: int = 256
    L: float = 16.0
    steps: int = Field(3, ge=2)
    factor: int = Field(4, ge=2)
    budget: int = Field(200, ge=1)
    band: float = Field(2.0, gt=0)
    mikhlin_tolerance: float = 1e-3
    residual_tolerance: float = 1e-10


@router.experiment("maxreg", MaxregConfig)
def maxreg(config: MaxregConfig, rng: np.random.Generator) -> Outcome:
    """Resolvent multiplier of a sectorial A: Mikhlin norm 1, weighted boundedness, u' + Au = f"""
    ladder = refinement_ladder(1, config.N, config.L, config.steps, config.factor)
    report = mikhlin_norm_1d(maxreg_symbol(config.A, ladder[0]))
    probe = divergence_probe(lambda g: MultiplierOperator(maxreg_symbol(config.A, g)), config.p,
                             config.weight.build(), ladder, budget=config.budget, seed=child_seed(rng))
    d = len(config.A)
    f = SampledFunction(ladder[0], band_limited(ladder[0], d, band=config.band, rng=rng))
    u, Au = maxreg_solve(config.A, f)
    residual = l2_norm(time_derivative(u) + Au - f) / l2_norm(f)
    try:
        maxreg_symbol(config.rejected_A, ladder[0])
        rejected = False
    except SymbolError:
        rejected = True
    results = dict(mikhlin=report.asdict(), probe=probe.asdict(), residual=residual)
    criteria = [
        check("|Mikhlin norm - 1|", abs(report.value - 1), config.mikhlin_tolerance),
        check("weighted verdict", probe.verdict, "BOUNDED", "=="),
        check("relative residual of u' + Au - f", residual, config.residual_tolerance),
        check("imaginary-axis spectrum rejected", rejected, True, "=="),
    ]
    return results, criteria
