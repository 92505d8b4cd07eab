"""
Sparse domination

Shifted dyadic grids, sparse families and their operators A_{r,S}, the weak L^p norm, the grand
maximal truncation M_{T,k}, a stopping-time construction of sparse families dominating a
multiplier operator, and the two-weight sparse bound.

Cubes are realised as node sets under the half-open convention and measured by node count
times h^n. A cube of scale j has side 2^-j; in a shifted grid it is moved by
sum_{j < j' <= finest} w_j' 2^-j', i.e. the shift sequence is truncated at the finest scale.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from opmult.config import setting
from opmult.grid import Grid, SampledFunction, box_nodes, scalar_function
from opmult.multiplier import MultiplierOperator
from opmult.opnorm import weighted_lp_norm
from opmult.weights import (
    BoxFamily,
    Weight,
    ainf_characteristic,
    ap_characteristic,
    apr_characteristic,
    dual_weight,
)


class SparseError(ValueError):
    pass


class SparsenessViolation(SparseError):
    def __init__(self, pair: Tuple[int, int], message: Optional[str] = None):
        self.pair = pair
        super().__init__(message or f"Chosen subsets of cubes {pair[0]} and {pair[1]} overlap")


class RecursionBudgetExceeded(SparseError):
    def __init__(self, cube: "Cube", message: str):
        self.cube = cube
        super().__init__(message)


class Cube(NamedTuple):
    scale: int
    lower: Tuple[float, ...]

    @property
    def side(self) -> float:
        return 2.0 ** -self.scale

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def upper(self) -> Tuple[float, ...]:
        return tuple(a + self.side for a in self.lower)

    def dilated(self, k: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """Corners of (2k+1)Q"""
        grow = k * self.side
        return tuple(a - grow for a in self.lower), tuple(b + grow for b in self.upper)

    def contains(self, other: "Cube") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lower, self.upper, other.lower, other.upper))

    def nodes(self, grid: Grid) -> np.ndarray:
        return box_nodes(grid, self.lower, self.upper)


# Dyadic grids


@dataclass(frozen=True, eq=False)
class DyadicGridSpec:
    """
    Shift vectors w_j in {0, 1}^n per scale j <= finest; shifts=None is the standard grid.
    """

    n: int
    finest: int
    shifts: Optional[Dict[int, Tuple[int, ...]]] = None
    name: str = "standard"

    def offset(self, scale: int) -> np.ndarray:
        """sum over scale < j' <= finest of w_j' 2^-j'"""
        total = np.zeros(self.n)
        if self.shifts is None:
            return total
        for j in range(scale + 1, self.finest + 1):
            if j not in self.shifts:
                raise SparseError(f"Grid {self.name} has no shift entry for scale {j}")
            total += np.asarray(self.shifts[j], dtype=float) * 2.0 ** -j
        return total

    def truncation_defect(self) -> float:
        """Upper bound for the omitted tail of the shift series"""
        return 0.0 if self.shifts is None else 2.0 ** -self.finest


def standard_grid(n: int, finest: int) -> DyadicGridSpec:
    return DyadicGridSpec(n, finest)


def constant_shift_grid(n: int, finest: int, coarsest: int, vector: Sequence[int]) -> DyadicGridSpec:
    shifts = {j: tuple(int(v) for v in vector) for j in range(coarsest, finest + 1)}
    return DyadicGridSpec(n, finest, shifts, f"shift {tuple(vector)}")


def alternating_grid(n: int, finest: int, coarsest: int, phase: int = 0) -> DyadicGridSpec:
    """w_j = ((j + phase) mod 2) (1, ..., 1): offsets of 1/3 or 2/3 of a side, alternating with the scale"""
    shifts = {j: ((j + phase) % 2,) * n for j in range(coarsest, finest + 1)}
    return DyadicGridSpec(n, finest, shifts, f"alternating phase {phase}")


def default_grids(n: int, finest: int, coarsest: int) -> List[DyadicGridSpec]:
    return [standard_grid(n, finest), alternating_grid(n, finest, coarsest, 0), alternating_grid(n, finest, coarsest, 1)]


def _cubes_in_box(n: int, scale: int, offset: np.ndarray, lower: Sequence[float], upper: Sequence[float]) -> List[Cube]:
    side = 2.0 ** -scale
    ranges = []
    for a, b, o in zip(lower, upper, offset):
        first = int(np.ceil((a - o) / side - 1e-12))
        last = int(np.floor((b - o) / side + 1e-12)) - 1
        ranges.append(range(first, last + 1))
    return [Cube(scale, tuple(m * side + o for m, o in zip(index, offset))) for index in itertools.product(*ranges)]


def _scale_list(scales) -> List[int]:
    if isinstance(scales, int):
        return [scales]
    return list(scales)


def standard_dyadic_cubes(scales, lower: Sequence[float], upper: Sequence[float]) -> List[Cube]:
    """All whole cubes 2^-j([0,1)^n + m) inside the box [lower, upper)"""
    n = len(lower)
    cubes = [c for j in _scale_list(scales) for c in _cubes_in_box(n, j, np.zeros(n), lower, upper)]
    if not cubes:
        logging.warning(f"No whole dyadic cube of scales {scales} fits in [{lower}, {upper})")
    return cubes


def shifted_dyadic_cubes(spec: DyadicGridSpec, scales, lower: Sequence[float], upper: Sequence[float]) -> List[Cube]:
    cubes = [c for j in _scale_list(scales) for c in _cubes_in_box(spec.n, j, spec.offset(j), lower, upper)]
    if not cubes:
        logging.warning(f"No whole cube of grid {spec.name} at scales {scales} fits in [{lower}, {upper})")
    return cubes


def enclosing_cube(lower: Sequence[float], upper: Sequence[float], grids: Sequence[DyadicGridSpec],
                   coarsest: int) -> Tuple[int, Cube]:
    """Smallest cube over the grids that contains the box [lower, upper); returns (grid index, cube)"""
    best: Optional[Tuple[int, Cube]] = None
    for g, spec in enumerate(grids):
        for j in range(spec.finest, coarsest - 1, -1):
            side = 2.0 ** -j
            offset = spec.offset(j)
            m = np.floor((np.asarray(lower) - offset) / side)
            cube_lower = m * side + offset
            if np.all(np.asarray(upper) <= cube_lower + side):
                if best is None or side < best[1].side:
                    best = (g, Cube(j, tuple(cube_lower)))
                break
    if best is None:
        raise SparseError(f"No cube of scale >= {coarsest} contains [{lower}, {upper})")
    return best


# Sparse families and operators


class SparseFamily:
    """Cubes with chosen node subsets E_Q (boolean masks on grid) and a declared sparseness constant"""

    def __init__(self, grid: Grid, cubes: List[Cube], sets: List[np.ndarray], eta: float, name: str = "sparse"):
        if len(cubes) != len(sets):
            raise SparseError("Need one chosen subset per cube")
        self.grid = grid
        self.cubes = cubes
        self.sets = sets
        self.eta = eta
        self.name = name

    def __len__(self):
        return len(self.cubes)

    def __repr__(self):
        return f"<SparseFamily {self.name}: {len(self)} cubes, eta={self.eta}>"

    @classmethod
    def from_cubes(cls, grid: Grid, cubes: List[Cube], eta: Optional[float] = None, name: str = "sparse") -> "SparseFamily":
        """E_Q = Q minus the family cubes strictly inside Q"""
        sets = []
        for cube in cubes:
            inside = cube.nodes(grid)
            for other in cubes:
                if other != cube and cube.contains(other):
                    inside &= ~other.nodes(grid)
            sets.append(inside)
        family = cls(grid, cubes, sets, 0.0, name)
        family.eta = check_sparseness(family) if eta is None else eta
        return family

    def to_json(self) -> dict:
        return dict(
            name=self.name,
            eta=self.eta,
            grid=dict(n=self.grid.n, N=self.grid.N, L=self.grid.L),
            cubes=[
                dict(scale=c.scale, lower=list(c.lower), side=c.side, E=np.flatnonzero(s).tolist())
                for c, s in zip(self.cubes, self.sets)
            ],
        )


def check_sparseness(S: SparseFamily) -> float:
    """min over Q of |E_Q|/|Q|, after checking E_Q is inside Q and the E_Q are pairwise disjoint"""
    if len(S) == 0:
        raise SparseError("Sparse family is empty")
    owner = np.full(S.grid.shape, -1)
    eta = np.inf
    for i, (cube, chosen) in enumerate(zip(S.cubes, S.sets)):
        nodes = cube.nodes(S.grid)
        if np.any(chosen & ~nodes):
            raise SparseError(f"Chosen subset of cube {i} leaves the cube")
        clash = owner[chosen]
        if np.any(clash >= 0):
            raise SparsenessViolation((int(clash[clash >= 0][0]), i))
        owner[chosen] = i
        count = nodes.sum()
        if count == 0:
            raise SparseError(f"Cube {i} contains no grid node")
        eta = min(eta, chosen.sum() / count)
    return float(eta)


def _nonnegative(f: SampledFunction) -> np.ndarray:
    if f.d != 1:
        raise SparseError("Sparse operators act on scalar functions")
    values = f.values[..., 0]
    if np.any(np.abs(values.imag) > 0) or np.any(values.real < 0):
        raise SparseError("Sparse operators act on nonnegative functions")
    return values.real


def sparse_operator(S: SparseFamily, r: float, f: SampledFunction) -> SampledFunction:
    """A_{r,S} f = sum_Q <f^r>_Q^(1/r) 1_Q"""
    if r < 1:
        raise SparseError(f"r={r} must be at least 1")
    values = _nonnegative(f) ** r
    result = np.zeros(S.grid.shape)
    for cube in S.cubes:
        nodes = cube.nodes(S.grid)
        result[nodes] += values[nodes].mean() ** (1 / r)
    return scalar_function(S.grid, result)


def weak_lp_norm(f: SampledFunction, p: float) -> float:
    """sup over lambda of lambda |{||f|| > lambda}|^(1/p), approached at every sample value from below"""
    if p < 1:
        raise SparseError(f"p={p} must be at least 1")
    values = np.sort(f.pointwise_norm().ravel())[::-1]
    measure = np.arange(1, len(values) + 1) * f.grid.cell_volume
    return float(np.max(values * measure ** (1 / p)))


# Grand maximal truncation


@dataclass(frozen=True)
class TruncationParams:
    """Dilation parameter k and the scale range [coarsest, finest] of candidate cubes"""

    k: int = 1
    coarsest: int = -2
    finest: int = 2

    def __post_init__(self):
        if self.k < 1:
            raise SparseError(f"Dilation parameter k={self.k} must be a positive integer")
        if self.coarsest > self.finest:
            raise SparseError(f"Empty scale range [{self.coarsest}, {self.finest}]")

    @property
    def scales(self) -> range:
        return range(self.coarsest, self.finest + 1)


class _Lattice:
    """The cubes of one scale of a grid that contain nodes, with every node labelled by its cube"""

    def __init__(self, grid: Grid, spec: DyadicGridSpec, scale: int):
        self.grid = grid
        self.scale = scale
        self.side = 2.0 ** -scale
        self.offset = spec.offset(scale)
        tol = 1e-9 * grid.h / self.side
        index = [np.floor((x - o) / self.side + tol).astype(int) for x, o in zip(grid.mesh, self.offset)]
        self.low = [int(i.min()) for i in index]
        self.shape = tuple(int(i.max()) - lo + 1 for i, lo in zip(index, self.low))
        self.labels = np.ravel_multi_index(tuple(i - lo for i, lo in zip(index, self.low)), self.shape)
        self.present = np.unique(self.labels)
        self.counts = self.sums(np.ones(grid.shape))

    def cube(self, label: int) -> Cube:
        coords = np.unravel_index(label, self.shape)
        return Cube(self.scale, tuple((c + lo) * self.side + o for c, lo, o in zip(coords, self.low, self.offset)))

    def sums(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(int(np.prod(self.shape)))
        out[self.present] = ndimage.sum(values, self.labels, self.present)
        return out.reshape(self.shape)

    def maxima(self, values: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return np.asarray(ndimage.maximum(values, self.labels, labels), dtype=float)

    def dilated_means(self, values: np.ndarray, k: int) -> np.ndarray:
        """Means over (2k+1)Q clipped to the grid box, for every cube Q of the lattice (flattened)"""
        kernel = np.ones((2 * k + 1,) * self.grid.n)
        sums = ndimage.convolve(self.sums(values), kernel, mode="constant", cval=0.0)
        counts = ndimage.convolve(self.counts, kernel, mode="constant", cval=0.0)
        means = np.zeros_like(sums)
        np.divide(sums, counts, out=means, where=counts > 0)
        return means.ravel()


def _dilation_mask(grid: Grid, cube: Cube, k: int) -> Tuple[np.ndarray, bool]:
    lower, upper = cube.dilated(k)
    clipped = any(a < -grid.L / 2 or b > grid.L / 2 for a, b in zip(lower, upper))
    return box_nodes(grid, lower, upper), clipped


def grand_maximal_truncation(T: MultiplierOperator, f: SampledFunction, params: TruncationParams,
                             spec: Optional[DyadicGridSpec] = None) -> SampledFunction:
    """
    M_{T,k} f(x) = max over candidate cubes Q containing x of max_{y in Q} ||T(f 1_{((2k+1)Q)^c})(y)||,
    over the cubes of the scale range that contain nodes
    """
    grid = f.grid
    spec = standard_grid(grid.n, params.finest) if spec is None else spec
    result = np.zeros(grid.shape)
    clipped = 0
    for scale in params.scales:
        lattice = _Lattice(grid, spec, scale)
        for label in lattice.present:
            cube = lattice.cube(label)
            inside, was_clipped = _dilation_mask(grid, cube, params.k)
            clipped += was_clipped
            g = T(f * ~inside).pointwise_norm()
            nodes = lattice.labels == label
            result[nodes] = np.maximum(result[nodes], g[nodes].max())
    if clipped:
        logging.warning(f"{clipped} dilated cubes (2k+1)Q with k={params.k} were clipped to the grid box")
    return scalar_function(grid, result)


# Sparse domination


class DominationReport(NamedTuple):
    families: List[SparseFamily]
    C: float
    exceptional: np.ndarray
    exceptional_fraction: float
    beta: float
    lhs: np.ndarray
    rhs: np.ndarray

    def rows(self) -> List[Dict[str, float]]:
        """CSV rows (node, lhs, rhs, ratio) at the nodes where the right side is positive"""
        lhs, rhs = self.lhs.ravel(), self.rhs.ravel()
        return [dict(node=int(i), lhs=float(lhs[i]), rhs=float(rhs[i]), ratio=float(lhs[i] / rhs[i]))
                for i in np.flatnonzero(rhs > 0)]

    def asdict(self) -> dict:
        return dict(C=self.C, exceptional=self.exceptional.tolist(), exceptional_fraction=self.exceptional_fraction,
                    beta=self.beta, families=[dict(name=s.name, cubes=len(s), eta=s.eta) for s in self.families])


def _root(support: np.ndarray, lattices: Dict[int, _Lattice], params: TruncationParams) -> Tuple[int, int]:
    """Smallest cube of the grid containing the support"""
    for scale in range(params.finest, params.coarsest - 1, -1):
        labels = np.unique(lattices[scale].labels[support])
        if len(labels) == 1:
            return scale, int(labels[0])
    raise SparseError(f"The support of f fits in no single cube of scale >= {params.coarsest}")


def _stopping_family(T: MultiplierOperator, f: SampledFunction, r: float, params: TruncationParams,
                     spec: DyadicGridSpec, beta: float, max_depth: int) -> Tuple[SparseFamily, float]:
    grid = f.grid
    norms = f.pointwise_norm()
    powers = norms ** r
    support = norms > 1e-12 * norms.max()
    lattices = {j: _Lattice(grid, spec, j) for j in params.scales}
    dilated = {j: lattices[j].dilated_means(powers, params.k) for j in params.scales}
    stack = [_root(support, lattices, params) + (0,)]
    cubes, sets = [], []
    largest_beta = beta
    while stack:
        scale, label, depth = stack.pop()
        lattice = lattices[scale]
        cube = lattice.cube(label)
        if depth > max_depth:
            raise RecursionBudgetExceeded(cube, f"Stopping recursion exceeded depth {max_depth} at {cube}")
        region = lattice.labels == label
        inside, _ = _dilation_mask(grid, cube, params.k)
        g = T(f * inside).pointwise_norm()
        f_average = dilated[scale][label] ** (1 / r)
        g_average = g[region].mean()
        level_beta = beta
        for _ in range(32):
            covered = np.zeros(grid.shape, dtype=bool)
            children = []
            for sub_scale in range(scale + 1, params.finest + 1):
                sub = lattices[sub_scale]
                candidates = np.unique(sub.labels[region & ~covered])
                if len(candidates) == 0:
                    break
                bad = (dilated[sub_scale][candidates] ** (1 / r) > level_beta * f_average)
                bad |= sub.maxima(g, candidates) > level_beta * g_average
                selected = candidates[bad]
                if len(selected):
                    children.extend((sub_scale, int(s)) for s in selected)
                    covered |= np.isin(sub.labels, selected) & region
            if covered.sum() <= region.sum() / 2:
                break
            level_beta *= 2
            logging.warning(f"Children cover more than half of {cube}; doubling beta to {level_beta}")
        else:
            raise RecursionBudgetExceeded(cube, f"No beta up to {level_beta} keeps the children of {cube} sparse")
        largest_beta = max(largest_beta, level_beta)
        cubes.append(cube)
        sets.append(region & ~covered)
        stack.extend((s, lab, depth + 1) for s, lab in children)
    family = SparseFamily(grid, cubes, sets, 0.5, spec.name)
    measured = check_sparseness(family)
    if measured < 0.5:
        raise SparseError(f"Family for grid {spec.name} has sparseness {measured} < 1/2")
    return family, largest_beta


def sparse_dominate(T: MultiplierOperator, f: SampledFunction, r: float, params: TruncationParams,
                    grids: Sequence[DyadicGridSpec], beta: Optional[float] = None,
                    exceptional_fraction: Optional[float] = None, max_depth: int = 64) -> DominationReport:
    """
    Build one 1/2-sparse family per grid by a stopping time on dilated averages of ||f||^r and on
    local maxima of ||T(f 1_{(2k+1)Q})||, then measure the smallest C with
    ||T f|| <= C sum_grids A_{r,S} ||f|| outside an exceptional fraction of the nodes where the
    right side is positive.
    """
    if r < 1:
        raise SparseError(f"r={r} must be at least 1")
    if len(grids) == 0:
        raise SparseError("Need at least one dyadic grid")
    beta = setting(beta, "sparse_beta")
    exceptional_fraction = setting(exceptional_fraction, "exceptional_fraction")
    grid = f.grid
    norm_f = scalar_function(grid, f.pointwise_norm())
    families, rhs = [], np.zeros(grid.shape)
    largest_beta = beta
    for spec in grids:
        family, used = _stopping_family(T, f, r, params, spec, beta, max_depth)
        families.append(family)
        largest_beta = max(largest_beta, used)
        rhs += sparse_operator(family, r, norm_f).values[..., 0].real
    lhs = T(f).pointwise_norm()
    positive = rhs > 0
    if not np.any(lhs[positive] > 0):
        C = 0.0
    else:
        C = float(np.quantile(lhs[positive] / rhs[positive], 1 - exceptional_fraction, method="higher"))
    # independent pass over all nodes
    exceptional = np.flatnonzero(positive & (lhs > C * rhs))
    fraction = len(exceptional) / max(int(positive.sum()), 1)
    if fraction > exceptional_fraction:
        raise SparseError(f"Exceptional fraction {fraction} exceeds {exceptional_fraction} at C={C}")
    return DominationReport(families, C, exceptional, fraction, largest_beta, lhs, rhs)


# Weighted bounds


class WeightedBound(NamedTuple):
    lhs: float
    rhs: float
    ratio: float

    def asdict(self) -> dict:
        return self._asdict()


def family_boxes(S: SparseFamily) -> BoxFamily:
    return BoxFamily([c.lower for c in S.cubes], [c.upper for c in S.cubes], f"cubes of {S.name}")


def sparse_weighted_bound_check(S: SparseFamily, r: float, p: float, omega: Weight, sigma: Weight,
                                f: SampledFunction, candidates: Optional[BoxFamily] = None) -> WeightedBound:
    """
    lhs = ||A_{r,S}(f sigma)||_{L^p_omega} and
    rhs = [omega, sigma]_{A_p^r} ([omega]_{A_inf}^(1/p') + [sigma^r]_{A_inf}^(1/p)) ||f||_{L^p_{sigma^r}},
    with characteristics taken over the cubes of S unless candidates are given
    """
    if not p > r:
        raise SparseError(f"Need p > r, got p={p}, r={r}")
    grid = S.grid
    candidates = family_boxes(S) if candidates is None else candidates
    values = _nonnegative(f)
    lhs = weighted_lp_norm(sparse_operator(S, r, scalar_function(grid, values * sigma.node_values(grid))), p, omega)
    if lhs == 0:
        return WeightedBound(0.0, 0.0, 0.0)
    q = p / (p - 1)
    factor = apr_characteristic(omega, sigma, p, r, candidates).value
    factor *= (ainf_characteristic(omega, candidates).value ** (1 / q)
               + ainf_characteristic(sigma ** r, candidates).value ** (1 / p))
    rhs = factor * weighted_lp_norm(f, p, sigma ** r)
    return WeightedBound(lhs, rhs, lhs / rhs)


def multiplier_weight_factor(omega: Weight, sigma: Weight, p: float, r: float, candidates: BoxFamily,
                             dual: bool = False) -> float:
    """
    The weight factor of the two-weight multiplier estimate L^p_sigma -> L^p_omega:
        [omega, sigma^(-1/(p-r))]_{A_p^r} ([omega]_{A_inf}^(1/p') + [sigma^(-r/(p-r))]_{A_inf}^(1/p))
    and, with dual=True, its counterpart obtained through the adjoint at the exponent p' (r < p')
    """
    q = p / (p - 1)
    if dual:
        if not 1 < r < q:
            raise SparseError(f"Need 1 < r < p'={q}, got r={r}")
        left, right = dual_weight(sigma, p), omega ** (-1.0 / ((p - 1) * (q - r)))
        value = apr_characteristic(left, right, q, r, candidates).value
        return value * (ainf_characteristic(left, candidates).value ** (1 / p)
                        + ainf_characteristic(omega ** (r / ((p - 1) * (q - r))), candidates).value ** (1 / q))
    if not 1 < r < p:
        raise SparseError(f"Need 1 < r < p={p}, got r={r}")
    value = apr_characteristic(omega, sigma ** (-1.0 / (p - r)), p, r, candidates).value
    return value * (ainf_characteristic(omega, candidates).value ** (1 / q)
                    + ainf_characteristic(sigma ** (-r / (p - r)), candidates).value ** (1 / p))


def one_weight_power_bound(omega: Weight, p: float, r: float, candidates: BoxFamily, dual: bool = False) -> float:
    """[omega]_{A_{p/r}}^max(1, 1/(p-r)), or [omega'_p]_{A_{p'/r}}^max(1, 1/(p'-r)) with dual=True"""
    if dual:
        q = p / (p - 1)
        if not 1 < r < q:
            raise SparseError(f"Need 1 < r < p'={q}, got r={r}")
        return ap_characteristic(dual_weight(omega, p), q / r, candidates).value ** max(1.0, 1 / (q - r))
    if not 1 < r < p:
        raise SparseError(f"Need 1 < r < p={p}, got r={r}")
    return ap_characteristic(omega, p / r, candidates).value ** max(1.0, 1 / (p - r))
