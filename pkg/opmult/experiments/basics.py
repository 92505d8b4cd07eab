"""Experiments on the transform, weight characteristics and the Hilbert transform"""
import logging
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
)
from opmult.grid import SampledFunction, forward_dft, inverse_dft, l2_norm, spectral_l2_norm
from opmult.lp_decomp import aniso_blocking_rects, blocking_rects
from opmult.multiplier import MultiplierOperator, hilbert_symbol, hilbert_transform_quadrature
from opmult.opnorm import operator_norm_estimate
from opmult.report import check
from opmult.symbols import aniso_dilation, aniso_distance
from opmult.weights import Weight, ap_characteristic, apr_characteristic, dual_weight, random_boxes

router = Router("basics")


class DftRoundtripConfig(ExperimentConfig):
    experiment: Literal["dft-roundtrip"] = "dft-roundtrip"
    grids: List[GridModel] = Field(default_factory=lambda: [GridModel(n=1, N=256, L=16), GridModel(n=2, N=64, L=8)])
    samples: int = Field(5, ge=1)
    d: int = Field(2, ge=1)
    roundtrip_tolerance: float = 1e-12
    parseval_tolerance: float = 1e-10


@router.experiment("dft-roundtrip", DftRoundtripConfig)
def dft_roundtrip(config: DftRoundtripConfig, rng: np.random.Generator) -> Outcome:
    """Inverse of forward transform and Parseval identity for random complex functions"""
    roundtrip, parseval = 0.0, 0.0
    per_grid = []
    for spec in config.grids:
        grid = spec.build()
        shape = grid.shape + (config.d,)
        worst = (0.0, 0.0)
        for _ in range(config.samples):
            f = SampledFunction(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            F = forward_dft(f)
            back = inverse_dft(F)
            error = float(np.abs(back.values - f.values).max() / np.abs(f.values).max())
            defect = abs(l2_norm(f) - spectral_l2_norm(F)) / l2_norm(f)
            worst = (max(worst[0], error), max(worst[1], defect))
        per_grid.append(dict(n=grid.n, N=grid.N, L=grid.L, roundtrip=worst[0], parseval=worst[1]))
        roundtrip, parseval = max(roundtrip, worst[0]), max(parseval, worst[1])
    criteria = [
        check("roundtrip max error", roundtrip, config.roundtrip_tolerance),
        check("parseval relative defect", parseval, config.parseval_tolerance),
    ]
    return dict(grids=per_grid), criteria


class ApDualityConfig(ExperimentConfig):
    experiment: Literal["ap-duality"] = "ap-duality"
    exponents: List[float] = Field(default_factory=lambda: [-0.5, 0.0, 0.5], description="a in w = |x|^a")
    p_values: List[float] = Field(default_factory=lambda: [2.0, 3.0])
    n: int = Field(1, ge=1, le=3)
    family: LadderModel = Field(default_factory=LadderModel)
    tolerance: float = 1e-6


@router.experiment("ap-duality", ApDualityConfig)
def ap_duality(config: ApDualityConfig, rng: np.random.Generator) -> Outcome:
    """[w]_{A_p} against [w'_p]_{A_p'}^(p-1) over one candidate family"""
    candidates = config.family.build(config.n)
    rows = []
    for a in config.exponents:
        omega = Weight.power(a)
        for p in config.p_values:
            q = p / (p - 1)
            direct = ap_characteristic(omega, p, candidates).value
            dual = ap_characteristic(dual_weight(omega, p), q, candidates).value
            rows.append(dict(a=a, p=p, A_p=direct, dual=dual, defect=abs(direct - dual ** (p - 1)) / direct))
    worst = max(r["defect"] for r in rows)
    return dict(candidates=len(candidates), cases=rows), [check("relative defect", worst, config.tolerance)]


class ApOracleConfig(ExperimentConfig):
    experiment: Literal["ap-oracle"] = "ap-oracle"
    a: float = 0.5
    p: float = 2.0
    family: LadderModel = Field(default_factory=lambda: LadderModel(scale_min=-3, scale_max=2, extent=4.0))
    random_intervals: int = Field(100_000, ge=1000)
    extent: float = Field(4.0, gt=0)
    pair_omega: float = Field(0.5, description="Exponent of w in the A_p^r pairing")
    pair_sigma: float = Field(-0.25, description="Exponent of sigma in the A_p^r pairing")
    pair_p: float = 4.0
    pair_r: float = 2.0
    tolerance: float = 0.01


@router.experiment("ap-oracle", ApOracleConfig)
def ap_oracle(config: ApOracleConfig, rng: np.random.Generator) -> Outcome:
    """Ladder characteristics against a brute-force supremum over random intervals"""
    ladder = config.family.build(1)
    brute = random_boxes(1, config.random_intervals, rng, config.extent)
    omega = Weight.power(config.a)
    ladder_value = ap_characteristic(omega, config.p, ladder).value
    brute_value = ap_characteristic(omega, config.p, brute).value
    w, s = Weight.power(config.pair_omega), Weight.power(config.pair_sigma)
    pair_ladder = apr_characteristic(w, s, config.pair_p, config.pair_r, ladder).value
    pair_brute = apr_characteristic(w, s, config.pair_p, config.pair_r, brute).value
    results = dict(ap_ladder=ladder_value, ap_random=brute_value, apr_ladder=pair_ladder, apr_random=pair_brute,
                   ladder_size=len(ladder), random_size=len(brute))
    logging.debug(f"A_p ladder {ladder_value} vs random {brute_value}")
    criteria = [
        check("A_p relative difference", abs(ladder_value - brute_value) / brute_value, config.tolerance),
        check("A_p^r relative difference", abs(pair_ladder - pair_brute) / pair_brute, config.tolerance),
    ]
    return results, criteria


class HilbertConfig(ExperimentConfig):
    experiment: Literal["hilbert"] = "hilbert"
    grid: GridModel = Field(default_factory=lambda: GridModel(n=1, N=4096, L=40))
    function: FunctionModel = Field(default_factory=lambda: FunctionModel(kind="gaussian", params=dict(width=2.0)))
    periodic: bool = True
    consistency_tolerance: float = 1e-2
    norm_tolerance: float = 1e-4
    budget: int = Field(50, ge=1)


@router.experiment("hilbert", HilbertConfig)
def hilbert(config: HilbertConfig, rng: np.random.Generator) -> Outcome:
    """Quadrature against the -pi i sgn multiplier, and the unweighted L^2 norm pi"""
    grid = config.grid.build()
    f = config.function.build(grid, 1, rng)
    T = MultiplierOperator(hilbert_symbol(grid))
    spectral = T(f)
    quadrature = hilbert_transform_quadrature(f, config.periodic)
    error = l2_norm(quadrature - spectral) / l2_norm(spectral)
    estimate = operator_norm_estimate(T, 2, budget=config.budget, rng=rng)
    results = dict(relative_l2_error=error, norm=estimate.asdict())
    criteria = [
        check("quadrature relative L2 error", error, config.consistency_tolerance),
        check("norm defect |estimate - pi|", abs(estimate.value - np.pi), config.norm_tolerance),
    ]
    return results, criteria


class AnisoConfig(ExperimentConfig):
    experiment: Literal["aniso-homogeneity"] = "aniso-homogeneity"
    n: int = Field(2, ge=1, le=3)
    samples: int = Field(1000, ge=1)
    l_min: int = -3
    l_max: int = 3
    tolerance: float = 1e-12


@router.experiment("aniso-homogeneity", AnisoConfig)
def aniso_homogeneity(config: AnisoConfig, rng: np.random.Generator) -> Outcome:
    """|delta_lam xi|_a = lam |xi|_a on random samples, and a = 1 blocking families equal the isotropic ones"""
    worst = 0.0
    for _ in range(config.samples):
        a = rng.uniform(0.25, 4.0, size=config.n)
        xi = tuple(rng.standard_normal(1) * 10.0 ** rng.uniform(-3, 3) for _ in range(config.n))
        lam = 10.0 ** rng.uniform(-2, 2)
        expected = lam * aniso_distance(xi, a)
        worst = max(worst, float(np.abs(aniso_distance(aniso_dilation(xi, a, lam), a) - expected).max() / expected[0]))
    l_range = (config.l_min, config.l_max)
    aniso = aniso_blocking_rects((1.0,) * config.n, l_range).corner_set()
    isotropic = blocking_rects(config.n, l_range).corner_set()
    mismatch = len(aniso ^ isotropic)
    criteria = [
        check("homogeneity relative defect", worst, config.tolerance),
        check("unit exponent family mismatches", mismatch, 0, "=="),
    ]
    return dict(samples=config.samples, family_size=len(isotropic)), criteria
