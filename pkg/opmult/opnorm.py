"""
Weighted norms and operator norm estimates

weighted_lp_norm and mixed_norm evaluate (nested) L^p_omega norms by node quadrature.
operator_norm_estimate returns a lower bound of ||T||_{L^p_sigma -> L^p_omega} together with the
witness function that attains it, and divergence_probe compares such estimates along a ladder of
grid refinements to decide whether the operator stays bounded.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from opmult.config import setting
from opmult.grid import Grid, SampledFunction, band_limited, forward_dft, make_grid
from opmult.multiplier import MultiplierOperator
from opmult.weights import Weight


class NormError(ValueError):
    pass


def _nested_norm(norms: np.ndarray, grid: Grid, split: Sequence[int], exponents: Sequence[float],
                 weights: Sequence[Weight]) -> float:
    """Integrate |f|^p_1 omega_1 over the first n_1 axes, take the 1/p_1 power, then the next block"""
    values = norms
    for n_j, p_j, w_j in zip(split, exponents, weights):
        block = Grid(n_j, grid.N, grid.L)
        axes = tuple(range(n_j))
        w = w_j.node_values(block).reshape(block.shape + (1,) * (values.ndim - n_j))
        values = (block.cell_volume * np.sum(values ** p_j * w, axis=axes)) ** (1.0 / p_j)
    return float(values)


def weighted_lp_norm(f: SampledFunction, p: float, omega: Optional[Weight] = None) -> float:
    """(h^n sum_x ||f(x)||^p omega(x))^(1/p)"""
    if p < 1:
        raise NormError(f"p={p} must be at least 1")
    omega = Weight.constant() if omega is None else omega
    return _nested_norm(f.pointwise_norm(), f.grid, (f.grid.n,), (p,), (omega,))


@dataclass(frozen=True)
class MixedNormSpec:
    """Split n = n_1 + ... + n_l with an exponent and a weight on R^{n_j} per block; innermost block first"""

    split: Tuple[int, ...]
    exponents: Tuple[float, ...]
    weights: Tuple[Weight, ...]

    def __post_init__(self):
        if not (len(self.split) == len(self.exponents) == len(self.weights)) or len(self.split) == 0:
            raise NormError("split, exponents and weights need one entry per block")
        if any(n_j < 1 for n_j in self.split):
            raise NormError(f"Block dimensions must be positive, got {self.split}")
        if any(not 1 < p < np.inf for p in self.exponents):
            raise NormError(f"Mixed-norm exponents must lie in (1, inf), got {self.exponents}")

    @property
    def n(self) -> int:
        return sum(self.split)


def mixed_norm(f: SampledFunction, spec: MixedNormSpec) -> float:
    if spec.n != f.grid.n:
        raise NormError(f"Split {spec.split} does not add up to the grid dimension {f.grid.n}")
    return _nested_norm(f.pointwise_norm(), f.grid, spec.split, spec.exponents, spec.weights)


# Operator norm estimates


class Strategy(str, Enum):
    power_iteration = "power-iteration"
    random_ascent = "random-ascent"


class NormEstimate(NamedTuple):
    value: float
    strategy: str
    iterations: int
    witness: SampledFunction
    residual: Optional[float] = None
    converged: bool = True
    certified_lower_bound: bool = True

    def asdict(self, witness_path: Optional[str] = None) -> dict:
        result = self._asdict()
        result["witness"] = witness_path
        return result

    def save_witness(self, path) -> None:
        """Store the witness as its spectrum (.npy)"""
        np.save(path, forward_dft(self.witness).values)


def rayleigh_quotient(T: MultiplierOperator, f: SampledFunction, p: float, sigma: Weight, omega: Weight) -> float:
    """||T f||_{L^p_omega} / ||f||_{L^p_sigma}"""
    bottom = weighted_lp_norm(f, p, sigma)
    if bottom == 0:
        raise NormError("Witness has zero norm")
    return weighted_lp_norm(T(f), p, omega) / bottom


def _start(grid: Grid, d: int, rng: np.random.Generator) -> SampledFunction:
    band = min(4.0, 0.25 * grid.N / grid.L)
    return SampledFunction(grid, band_limited(grid, d, band=band, rng=rng))


def _power_iteration(T: MultiplierOperator, sigma: Weight, omega: Weight, budget: int, tol: float,
                     rng: np.random.Generator) -> NormEstimate:
    grid = T.grid
    s = sigma.node_values(grid)[..., np.newaxis] ** -0.5
    w = omega.node_values(grid)[..., np.newaxis] ** 0.5
    adjoint = T.adjoint()

    def S(v):
        return T(v * s) * w

    def S_star(v):
        return adjoint(v * w) * s

    v = _start(grid, T.symbol.d_in, rng)
    v = v * (1 / np.linalg.norm(v.values))
    lam = 0.0
    residual = np.inf
    iterations = 0
    for iterations in range(1, budget + 1):
        u = S_star(S(v))
        lam = float(np.real(np.vdot(v.values, u.values)))
        if lam <= 0:
            break
        residual = float(np.linalg.norm(u.values - lam * v.values) / lam)
        v = u * (1 / np.linalg.norm(u.values))
        if residual < tol:
            break
    witness = v * s
    value = rayleigh_quotient(T, witness, 2, sigma, omega) if lam > 0 else 0.0
    return NormEstimate(value, Strategy.power_iteration.value, iterations, witness, residual, residual < tol)


def _duality_map(values: np.ndarray, p: float) -> np.ndarray:
    """psi_p(y) = |y|^(p-2) y with the Euclidean fiber norm"""
    norms = np.linalg.norm(values, axis=-1, keepdims=True)
    out = np.zeros_like(values)
    nonzero = norms[..., 0] > 0
    out[nonzero] = values[nonzero] * norms[nonzero] ** (p - 2)
    return out


def _random_ascent(T: MultiplierOperator, p: float, sigma: Weight, omega: Weight, budget: int, starts: int,
                   tol: float, rng: np.random.Generator) -> NormEstimate:
    """Multi-start fixed point iteration f <- psi_p'(sigma^-1 T*(omega psi_p(T f)))"""
    grid = T.grid
    q = p / (p - 1)
    s = sigma.node_values(grid)[..., np.newaxis]
    w = omega.node_values(grid)[..., np.newaxis]
    adjoint = T.adjoint()
    best: Optional[Tuple[float, SampledFunction]] = None
    total = 0
    progress = False
    for _ in range(starts):
        f = _start(grid, T.symbol.d_in, rng)
        value = rayleigh_quotient(T, f, p, sigma, omega)
        start_value = value
        for _ in range(budget):
            total += 1
            image = T(f)
            gradient = adjoint(image.with_values(w * _duality_map(image.values, p)))
            candidate = f.with_values(_duality_map(gradient.values / s, q))
            if not np.any(candidate.values):
                break
            new_value = rayleigh_quotient(T, candidate, p, sigma, omega)
            if new_value <= value * (1 + tol):
                if new_value > value:
                    f, value = candidate, new_value
                break
            f, value = candidate, new_value
        progress = progress or value > start_value * (1 + tol)
        if best is None or value > best[0]:
            best = (value, f)
    assert best is not None
    if not progress:
        logging.warning(f"Ascent for p={p} made no progress over {starts} starts; returning the best start")
    return NormEstimate(best[0], Strategy.random_ascent.value, total, best[1], None, progress)


def operator_norm_estimate(T: MultiplierOperator, p: float, sigma: Optional[Weight] = None,
                           omega: Optional[Weight] = None, strategy: Optional[str] = None,
                           budget: int = 200, starts: int = 4, tol: float = 1e-10,
                           rng: Optional[np.random.Generator] = None) -> NormEstimate:
    """
    Lower bound of ||T||_{L^p_sigma -> L^p_omega}. p=2 runs power iteration on the conjugated
    operator g -> omega^(1/2) T(sigma^(-1/2) g), anything else runs the multi-start ascent.
    """
    if p <= 1:
        raise NormError(f"p={p} must exceed 1")
    sigma = Weight.constant() if sigma is None else sigma
    omega = sigma if omega is None else omega
    rng = np.random.default_rng(setting(None, "default_seed")) if rng is None else rng
    if strategy is None:
        strategy = Strategy.power_iteration.value if p == 2 else Strategy.random_ascent.value
    if strategy == Strategy.power_iteration.value:
        if p != 2:
            raise NormError("Power iteration needs p=2")
        return _power_iteration(T, sigma, omega, budget, tol, rng)
    if strategy == Strategy.random_ascent.value:
        return _random_ascent(T, p, sigma, omega, budget, starts, tol, rng)
    raise NormError(f"Unknown strategy {strategy!r}")


# Divergence probes


class Verdict(str, Enum):
    bounded = "BOUNDED"
    diverging = "DIVERGING"
    indeterminate = "INDETERMINATE"


class DivergenceReport(NamedTuple):
    grids: List[Tuple[int, float]]
    estimates: List[float]
    ratios: List[float]
    per_doubling: List[float]
    verdict: str

    def asdict(self) -> dict:
        return self._asdict()


def refinement_ladder(n: int, N: int, L: float, steps: int = 3, factor: int = 4) -> List[Grid]:
    """Grids N, factor*N, factor^2*N, ... at fixed box length"""
    return [make_grid(n, N * factor ** i, L) for i in range(steps)]


def per_doubling(ratios: Sequence[float], sizes: Sequence[int]) -> List[float]:
    """Growth per step rescaled to a doubling of N, ratio^(1/log2(factor))"""
    if len(sizes) != len(ratios) + 1:
        raise NormError(f"{len(ratios)} ratios need {len(ratios) + 1} grid sizes, got {len(sizes)}")
    factors = [b / a for a, b in zip(sizes, sizes[1:])]
    if any(f <= 1 for f in factors):
        raise NormError(f"Grid sizes {list(sizes)} do not refine")
    return [r ** (1 / math.log2(f)) for r, f in zip(ratios, factors)]


def classify(ratios: Sequence[float], bounded_ratio: Optional[float] = None,
             diverging_ratio: Optional[float] = None) -> Verdict:
    bounded_ratio = setting(bounded_ratio, "bounded_ratio")
    diverging_ratio = setting(diverging_ratio, "diverging_ratio")
    if all(r <= bounded_ratio for r in ratios):
        return Verdict.bounded
    if all(r >= diverging_ratio for r in ratios):
        return Verdict.diverging
    return Verdict.indeterminate


def divergence_probe(build: Callable[[Grid], MultiplierOperator], p: float, omega: Weight, ladder: Sequence[Grid],
                     sigma: Optional[Weight] = None, budget: int = 200, seed: Optional[int] = None,
                     bounded_ratio: Optional[float] = None, diverging_ratio: Optional[float] = None) -> DivergenceReport:
    """
    Rebuild T on every grid of the ladder, estimate its norm from the same seeded start, and
    classify the growth between consecutive grids.
    """
    if len(ladder) < 2:
        raise NormError("A divergence probe needs at least two grids")
    seed = setting(seed, "default_seed")
    estimates = []
    for grid in ladder:
        estimate = operator_norm_estimate(build(grid), p, sigma or omega, omega, budget=budget,
                                          rng=np.random.default_rng(seed))
        logging.debug(f"N={grid.N}: estimate {estimate.value} after {estimate.iterations} iterations")
        estimates.append(estimate.value)
    ratios = [b / a for a, b in zip(estimates, estimates[1:])]
    verdict = classify(ratios, bounded_ratio, diverging_ratio)
    if verdict == Verdict.indeterminate:
        logging.warning(f"Growth ratios {ratios} fall between the bounded and diverging thresholds")
    doubling = per_doubling(ratios, [g.N for g in ladder])
    return DivergenceReport([(g.N, g.L) for g in ladder], estimates, ratios, doubling, verdict.value)
