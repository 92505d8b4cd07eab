"""
Littlewood-Paley rectangle families

Families of half-open frequency rectangles (dyadic intervals, product rectangles, blocking
rectangles and their anisotropic variant), the blocking index sets, reconstruction from the
cutoffs, and empirical unconditionality constants under random signs.

Sides that touch 0 are realised as [2^(a floor), c) (or its reflection) so that every family
covers only the punctured band; floor defaults to -20.
"""
import itertools
import logging
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from opmult.config import setting
from opmult.grid import Grid, SampledFunction, forward_dft, spectral_l2_norm
from opmult.multiplier import box_membership, frequency_cutoff
from opmult.opnorm import weighted_lp_norm
from opmult.weights import Box, Weight

FLOOR = -20


class DecompositionError(ValueError):
    pass


class SpectrumLeak(DecompositionError):
    def __init__(self, leaked_mass: float, message: Optional[str] = None):
        self.leaked_mass = leaked_mass
        super().__init__(message or f"Spectrum leaks outside the family: relative mass {leaked_mass:.3e}")


class DyadicInterval(NamedTuple):
    """eta [2^k, 2^(k+1)), realised half-open"""

    k: int
    eta: int

    @property
    def interval(self) -> Tuple[float, float]:
        if self.eta > 0:
            return 2.0 ** self.k, 2.0 ** (self.k + 1)
        return -(2.0 ** (self.k + 1)), -(2.0 ** self.k)

    @property
    def length(self) -> float:
        return 2.0 ** self.k

    @property
    def box(self) -> Box:
        a, b = self.interval
        return Box((a,), (b,))


def dyadic_intervals(k_min: int, k_max: int) -> List[DyadicInterval]:
    if k_min > k_max:
        raise DecompositionError(f"Empty scale range [{k_min}, {k_max}]")
    return [DyadicInterval(k, eta) for k in range(k_min, k_max + 1) for eta in (1, -1)]


class FreqRect(NamedTuple):
    """
    A member rectangle: index is k (blocking kinds) or (i_1, ..., i_n) (product kind), eta the
    signs per axis, lower/upper the realised half-open corners and zero_sides the axes whose
    geometric side starts at 0.
    """

    index: Tuple[int, ...]
    eta: Tuple[int, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    zero_sides: Tuple[bool, ...]

    @property
    def box(self) -> Box:
        return Box(self.lower, self.upper)

    @property
    def corners(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """Geometric corners, with 0 restored on the zero-touching sides"""
        lower = tuple(0.0 if z and e > 0 else a for a, e, z in zip(self.lower, self.eta, self.zero_sides))
        upper = tuple(0.0 if z and e < 0 else b for b, e, z in zip(self.upper, self.eta, self.zero_sides))
        return lower, upper


def _side(eta: int, start: float, end: float) -> Tuple[float, float]:
    """The half-open side eta [start, end)"""
    if eta > 0:
        return start, end
    return -end, -start


def _make_rect(index, eta, sides: Sequence[Tuple[float, float, bool]]) -> FreqRect:
    realised = [_side(e, a, b) for e, (a, b, z) in zip(eta, sides)]
    return FreqRect(tuple(index), tuple(eta), tuple(r[0] for r in realised), tuple(r[1] for r in realised),
                    tuple(z for _, _, z in sides))


class FreqRectFamily:
    """A finite family of pairwise disjoint half-open frequency rectangles"""

    def __init__(self, kind: str, n: int, members: List[FreqRect], description: str,
                 a: Optional[Tuple[float, ...]] = None):
        self.kind = kind
        self.n = n
        self.members = members
        self.description = description
        self.a = a

    def __len__(self):
        return len(self.members)

    def __iter__(self) -> Iterator[FreqRect]:
        return iter(self.members)

    def __getitem__(self, i) -> FreqRect:
        return self.members[i]

    def __repr__(self):
        return f"<FreqRectFamily {self.description}: {len(self)} members>"

    def reflected(self) -> "FreqRectFamily":
        """The family {-R}; -[a, b) is realised as [-b, -a)"""
        members = [
            FreqRect(r.index, tuple(-e for e in r.eta), tuple(-b for b in r.upper), tuple(-a for a in r.lower),
                     r.zero_sides)
            for r in self.members
        ]
        return FreqRectFamily(self.kind, self.n, members, f"reflected {self.description}", self.a)

    def corner_set(self) -> Set[Tuple[Tuple[float, ...], Tuple[float, ...]]]:
        return {(r.lower, r.upper) for r in self.members}

    def masks(self, grid: Grid) -> np.ndarray:
        """Boolean node masks, shape (len, *grid.shape)"""
        if grid.n != self.n:
            raise DecompositionError(f"Family of dimension {self.n} on a grid of dimension {grid.n}")
        return np.array([box_membership(grid.freq_mesh, r.lower, r.upper) for r in self.members])

    def union_mask(self, grid: Grid) -> np.ndarray:
        masks = self.masks(grid)
        if masks.sum(axis=0).max(initial=0) > 1:
            raise DecompositionError(f"Members of {self.description} overlap on the frequency grid")
        return masks.any(axis=0)

    def pieces(self, f: SampledFunction) -> List[SampledFunction]:
        return [frequency_cutoff(r.box, f) for r in self.members]

    def to_rows(self) -> List[Dict[str, object]]:
        """One CSV-ready row per member: index, signs and corner coordinates"""
        rows = []
        for r in self.members:
            row: Dict[str, object] = dict(kind=self.kind, index=" ".join(map(str, r.index)),
                                          eta=" ".join(map(str, r.eta)))
            lower, upper = r.corners
            for j in range(self.n):
                row[f"lower_{j + 1}"] = lower[j]
                row[f"upper_{j + 1}"] = upper[j]
            rows.append(row)
        return rows


def _signs(n: int):
    return itertools.product((1, -1), repeat=n)


def product_rects(n: int, k_range: Tuple[int, int]) -> FreqRectFamily:
    """All I_{i_1,eta_1} x ... x I_{i_n,eta_n} with i_j in the (inclusive) range"""
    k_min, k_max = k_range
    if k_min > k_max:
        raise DecompositionError(f"Empty scale range {k_range}")
    members = []
    for index in itertools.product(range(k_min, k_max + 1), repeat=n):
        for eta in _signs(n):
            members.append(_make_rect(index, eta, [(2.0 ** i, 2.0 ** (i + 1), False) for i in index]))
    return FreqRectFamily("product", n, members, f"product rectangles n={n} k in [{k_min}, {k_max}]")


def _blocking_members(n: int, l_range: Tuple[int, int], a: Sequence[float], floor: int) -> List[FreqRect]:
    l_min, l_max = l_range
    if l_min > l_max:
        raise DecompositionError(f"Empty scale range {l_range}")
    if floor >= l_min:
        raise DecompositionError(f"Floor {floor} must lie below the smallest scale {l_min}")
    members = []
    for level in range(l_min, l_max + 1):
        for r in range(n):
            sides = []
            for j in range(n):
                if j < r:
                    sides.append((2.0 ** (a[j] * floor), 2.0 ** (a[j] * (level + 1)), True))
                elif j == r:
                    sides.append((2.0 ** (a[j] * level), 2.0 ** (a[j] * (level + 1)), False))
                else:
                    sides.append((2.0 ** (a[j] * floor), 2.0 ** (a[j] * level), True))
            for eta in _signs(n):
                members.append(_make_rect((level * n + r,), eta, sides))
    return members


def blocking_rects(n: int, l_range: Tuple[int, int], floor: int = FLOOR) -> FreqRectFamily:
    """
    E_{ln+r,eta}: axes before r carry eta_j [0, 2^(l+1)), axis r carries eta_r [2^l, 2^(l+1)) and
    axes after r carry eta_j [0, 2^l) (axes counted from 0)
    """
    if n not in (1, 2, 3):
        raise DecompositionError(f"Unsupported dimension {n}")
    members = _blocking_members(n, l_range, (1,) * n, floor)
    return FreqRectFamily("blocking", n, members, f"blocking rectangles n={n} l in [{l_range[0]}, {l_range[1]}]")


def aniso_blocking_rects(a: Sequence[float], l_range: Tuple[int, int], floor: int = FLOOR) -> FreqRectFamily:
    """Blocking rectangles with axis j scaled by the exponent a_j"""
    a = tuple(a)
    if any(not aj > 0 for aj in a):
        raise DecompositionError(f"Anisotropy exponents must be positive, got {list(a)}")
    n = len(a)
    members = _blocking_members(n, l_range, a, floor)
    return FreqRectFamily("aniso", n, members,
                          f"anisotropic blocking rectangles a={list(a)} l in [{l_range[0]}, {l_range[1]}]", a)


def blocking_index_set(k: int, n: int, l_cutoff: int = FLOOR) -> Set[Tuple[int, ...]]:
    """J_{ln+r} = [l_cutoff, l+1]^r x {l+1} x [l_cutoff, l]^(n-r-1)"""
    if n < 1:
        raise DecompositionError(f"Dimension must be positive, got {n}")
    level, r = divmod(k, n)
    axes = [range(l_cutoff, level + 2)] * r + [range(level + 1, level + 2)] + [range(l_cutoff, level + 1)] * (n - r - 1)
    return set(itertools.product(*axes))


def index_set_rects(indices: Set[Tuple[int, ...]], eta: Sequence[int]) -> FreqRectFamily:
    """The product rectangles I_{i_1,eta_1} x ... x I_{i_n,eta_n} for i in indices"""
    members = [_make_rect(i, tuple(eta), [(2.0 ** ij, 2.0 ** (ij + 1), False) for ij in i]) for i in sorted(indices)]
    n = len(eta)
    return FreqRectFamily("product", n, members, f"products over {len(indices)} indices")


# Reconstruction


def reconstruct(f: SampledFunction, family: FreqRectFamily, tolerance: float = 1e-10) -> SampledFunction:
    """Sum of the cutoffs over all members; raises SpectrumLeak if f has spectrum outside the union"""
    grid = f.grid
    F = forward_dft(f)
    union = family.union_mask(grid)
    total = spectral_l2_norm(F)
    if total > 0:
        leaked = spectral_l2_norm(F.with_values(F.values * ~union[..., np.newaxis])) / total
        if leaked > tolerance:
            raise SpectrumLeak(leaked)
    result = f.with_values(np.zeros_like(f.values))
    for piece in family.pieces(f):
        result = result + piece
    return result


# Unconditionality


class UnconditionalityReport(NamedTuple):
    C_plus: float
    C_minus: float
    sampling: str
    test_functions: str
    standard_error: Optional[float] = None
    is_lower_bound: bool = True

    def asdict(self) -> dict:
        return self._asdict()


def sign_patterns(count: int, mode: str = "auto", samples: Optional[int] = None,
                  rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, str]:
    """
    Rows of +-1 signs, one column per active member: every pattern (exhaustive) or
    random patterns (monte_carlo); auto enumerates up to the configured limit
    """
    limit = setting(None, "exhaustive_sign_limit")
    if mode == "auto":
        mode = "exhaustive" if count <= limit else "monte_carlo"
        if mode == "monte_carlo":
            logging.warning(f"{count} active members exceed the enumeration limit {limit}; sampling signs")
    if mode == "exhaustive":
        if count > limit:
            raise DecompositionError(f"Cannot enumerate signs for {count} members (limit {limit})")
        return np.array(list(itertools.product((1.0, -1.0), repeat=count))), f"exhaustive {2 ** count} patterns"
    if mode == "monte_carlo":
        samples = setting(samples, "monte_carlo_samples")
        if samples < 100:
            raise DecompositionError(f"Monte Carlo needs at least 100 sign samples, got {samples}")
        rng = np.random.default_rng(setting(None, "default_seed")) if rng is None else rng
        return rng.choice((1.0, -1.0), size=(samples, count)), f"monte carlo {samples} patterns"
    raise DecompositionError(f"Unknown sign mode {mode!r}")


def signed_norms(pieces: np.ndarray, signs: np.ndarray, grid: Grid, p: float, omega: Weight,
                 chunk_size: int = 64) -> np.ndarray:
    """||sum_i eps_i Delta_i f||_{L^p_omega} for every sign row, in fixed chunks"""
    out = np.empty(len(signs))
    for start in range(0, len(signs), chunk_size):
        block = signs[start:start + chunk_size]
        combined = np.tensordot(block, pieces, axes=1)
        for i, values in enumerate(combined):
            out[start + i] = weighted_lp_norm(SampledFunction(grid, values), p, omega)
    return out


def unconditionality_constants(family: FreqRectFamily, p: float, omega: Optional[Weight],
                               test_fns: Sequence[SampledFunction], signs: str = "auto",
                               samples: Optional[int] = None,
                               rng: Optional[np.random.Generator] = None) -> UnconditionalityReport:
    """
    Lower bounds of the unconditionality constants:
        C+ >= (E||sum eps_i Delta_i f||^2)^(1/2) / ||f||,   C- >= ||f|| / (E||sum eps_i Delta_i f||^2)^(1/2)
    with norms in L^p_omega, maximised over the test functions
    """
    if len(test_fns) == 0:
        raise DecompositionError("Need at least one test function")
    omega = Weight.constant() if omega is None else omega
    c_plus = c_minus = 0.0
    descriptions = set()
    errors = []
    for f in test_fns:
        norm = weighted_lp_norm(f, p, omega)
        if norm == 0:
            continue
        pieces = np.array([piece.values for piece in family.pieces(f)])
        active = [i for i, piece in enumerate(pieces) if np.abs(piece).max() > 1e-12 * np.abs(f.values).max()]
        if not active:
            raise SpectrumLeak(1.0, "Test function has no spectrum inside the family")
        rows, description = sign_patterns(len(active), signs, samples, rng)
        descriptions.add(description)
        squares = signed_norms(pieces[active], rows, f.grid, p, omega) ** 2
        average = float(np.sqrt(np.mean(squares)))
        if description.startswith("monte"):
            errors.append(float(np.std(squares) / np.sqrt(len(squares))))
        c_plus = max(c_plus, average / norm)
        c_minus = max(c_minus, norm / average)
    return UnconditionalityReport(c_plus, c_minus, ", ".join(sorted(descriptions)),
                                  f"{len(test_fns)} functions", max(errors) if errors else None)
