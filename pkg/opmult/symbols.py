"""
Symbol calculus

R-bounds of matrix families, Mikhlin norms (1-d, rectangle families, anisotropic, and the
essential norm over |alpha|_q <= N), Hoermander integral conditions, the dyadic partition of unity,
the truncated kernels K_N with their p-Hoermander sums, the uniformly R-bounded variation
quantities of a 1-d symbol, and the maximal regularity symbol i xi (i xi - A)^-1.

All fibers are finite-dimensional Euclidean spaces. There Rademacher orthonormality gives

    || sum_k eps_k T_k x_k ||_{L2(Omega)}^2 = sum_k ||T_k x_k||^2

so the R-bound of a family is its supremum of spectral norms, which is what r_bound computes.

Derivatives come from the symbol's analytic closures when present, otherwise from central
finite differences with a step relative to |xi_j| on every axis.
"""
import itertools
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from opmult.config import setting
from opmult.grid import Grid, SampledFunction, SampledSpectrum, forward_dft, inverse_dft
from opmult.lp_decomp import DyadicInterval, FreqRectFamily, aniso_blocking_rects
from opmult.multiplier import (
    DimensionMismatch,
    MatrixSymbol,
    SymbolError,
    adjoint_symbol,
    apply_multiplier,
    from_function,
    multi_indices,
)


class BandOverflow(SymbolError):
    pass


class AnnulusOutOfBox(SymbolError):
    pass


# R-bounds


def _as_family(T) -> np.ndarray:
    if isinstance(T, MatrixSymbol):
        T = T.values.reshape((-1,) + T.values.shape[-2:])
    family = np.asarray(T, dtype=complex)
    if family.ndim == 2:
        family = family[np.newaxis]
    if family.ndim != 3 or len(family) == 0:
        raise SymbolError("An operator family needs at least one matrix")
    return family


def operator_norms(T) -> np.ndarray:
    return np.linalg.norm(_as_family(T), ord=2, axis=(-2, -1))


def r_bound(T) -> float:
    """R-bound of a finite family of matrices (or of all node values of a symbol)"""
    norms = operator_norms(T)
    if not np.all(np.isfinite(norms)):
        raise SymbolError("Operator family contains non-finite entries")
    return float(norms.max())


def rademacher_ratio(operators, vectors) -> float:
    """
    The quantity from the definition of R-boundedness for one tuple, averaged exactly over all
    sign patterns: (E||sum eps_k T_k x_k||^2)^(1/2) / (E||sum eps_k x_k||^2)^(1/2)
    """
    operators = _as_family(operators)
    vectors = np.asarray(vectors, dtype=complex)
    if len(vectors) != len(operators):
        raise DimensionMismatch("Need one vector per operator")
    images = np.einsum("kij,kj->ki", operators, vectors)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=len(operators))))
    top = np.mean(np.sum(np.abs(signs @ images) ** 2, axis=1))
    bottom = np.mean(np.sum(np.abs(signs @ vectors) ** 2, axis=1))
    if bottom == 0:
        raise SymbolError("All vectors are zero")
    return float(np.sqrt(top / bottom))


# Reports


class MikhlinReport(NamedTuple):
    value: float
    breakdown: Dict[str, float]
    samples: str
    derivative_source: str
    is_lower_bound: bool = True
    rectangles: Optional[List[float]] = None

    def asdict(self) -> dict:
        return self._asdict()


class HoermanderReport(NamedTuple):
    value: float
    breakdown: Dict[str, float]
    radii: Dict[str, float]
    mode: str
    s: float
    order: int

    def asdict(self) -> dict:
        return self._asdict()


def _alpha_key(alpha: Sequence[int]) -> str:
    return "(" + ",".join(str(a) for a in alpha) + ")"


# Derivatives


_STENCILS = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
}


def _fd_derivative(m: MatrixSymbol, alpha: Sequence[int], xi: Tuple[np.ndarray, ...],
                   rel_step: float) -> np.ndarray:
    """Tensor-product central differences with step rel_step*|xi_j| on every differentiated axis"""
    if any(a not in _STENCILS for a in alpha):
        raise SymbolError(f"Finite differences support orders up to 2 per axis, got {alpha}")
    steps = [rel_step * np.maximum(np.abs(x), 1e-300) for x in xi]
    total = 0
    for choice in itertools.product(*[list(zip(*_STENCILS[a])) for a in alpha]):
        coef = np.prod([c for _, c in choice])
        shifted = tuple(x + o * s for x, (o, _), s in zip(xi, choice, steps))
        total = total + coef * m.evaluate(shifted)
    scale = np.prod([s ** a for s, a in zip(steps, alpha)], axis=0)
    return total / np.asarray(scale)[..., None, None]


def symbol_derivative(m: MatrixSymbol, alpha: Sequence[int], xi: Tuple[np.ndarray, ...],
                      rel_step: Optional[float] = None) -> np.ndarray:
    if sum(alpha) == 0 or m.has_derivatives:
        return m.derivative(alpha, xi)
    return _fd_derivative(m, alpha, xi, setting(rel_step, "fd_relative_step"))


def _derivative_source(m: MatrixSymbol) -> str:
    return "analytic" if m.has_derivatives else "finite-difference"


def _require_closure(m: MatrixSymbol):
    if m.func is None:
        raise SymbolError(
            f"Symbol {m.name} has no analytic closure, and the frequency grid is too coarse for a "
            "log-spaced finite-difference ladder"
        )


# Mikhlin norms


def log_ladder(points_per_decade: Optional[int] = None, exponent: Optional[int] = None) -> np.ndarray:
    """Positive log-spaced ladder over [2^-exponent, 2^exponent]"""
    points_per_decade = setting(points_per_decade, "fd_points_per_decade")
    exponent = setting(exponent, "ladder_exponent")
    decades = 2 * exponent * math.log10(2)
    count = int(math.ceil(points_per_decade * decades)) + 1
    return np.logspace(-exponent * math.log10(2), exponent * math.log10(2), count)


def _node_ladder_density(grid: Grid) -> float:
    """Smallest number of positive frequency nodes in any full decade covered by the grid"""
    positive = grid.freqs[grid.freqs > 0]
    lo, hi = math.log10(positive[0]), math.log10(positive[-1])
    if hi - lo < 1:
        return len(positive) / max(hi - lo, 1e-12)
    counts = [np.sum((positive >= 10 ** t) & (positive < 10 ** (t + 1))) for t in np.arange(lo, hi - 1, 0.5)]
    return float(min(counts))


def _weighted_sup(m: MatrixSymbol, alpha: Sequence[int], xi: Tuple[np.ndarray, ...], factor: np.ndarray,
                  rel_step: Optional[float]) -> np.ndarray:
    """factor * ||d^alpha m(xi)|| at every sample point"""
    values = symbol_derivative(m, alpha, xi, rel_step)
    return factor * np.linalg.norm(values, ord=2, axis=(-2, -1))


def mikhlin_norm_1d(m: MatrixSymbol, points_per_decade: Optional[int] = None,
                    rel_step: Optional[float] = None) -> MikhlinReport:
    """
    max over k in {0, 1} of R{xi^k m^(k)(xi)} sampled on a log ladder over both half-lines
    """
    if m.grid.n != 1:
        raise DimensionMismatch("mikhlin_norm_1d needs a 1-d symbol")
    points_per_decade = setting(points_per_decade, "fd_points_per_decade")
    if m.func is None:
        if _node_ladder_density(m.grid) < points_per_decade:
            _require_closure(m)
        nodes = m.grid.freqs[m.grid.freqs != 0]
        values = m.values[m.grid.freqs != 0]
        d0 = float(np.linalg.norm(values, ord=2, axis=(-2, -1)).max())
        derivative = np.gradient(values, m.grid.freqs[1] - m.grid.freqs[0], axis=0)
        d1 = float((np.abs(nodes) * np.linalg.norm(derivative, ord=2, axis=(-2, -1))).max())
        return MikhlinReport(max(d0, d1), {"(0)": d0, "(1)": d1}, f"{len(nodes)} grid nodes", "finite-difference")
    ladder = log_ladder(points_per_decade)
    xi = (np.concatenate([-ladder[::-1], ladder]),)
    d0 = float(_weighted_sup(m, (0,), xi, np.ones_like(xi[0]), rel_step).max())
    d1 = float(_weighted_sup(m, (1,), xi, np.abs(xi[0]), rel_step).max())
    samples = f"log ladder {len(ladder)} points per half-line, {points_per_decade} per decade"
    return MikhlinReport(max(d0, d1), {"(0)": d0, "(1)": d1}, samples, _derivative_source(m))


def aniso_distance(xi: Sequence[np.ndarray], a: Sequence[float]) -> np.ndarray:
    """|xi|_a = (sum_j |xi_j|^(2/a_j))^(1/2)"""
    _check_aniso(a)
    return np.sqrt(sum(np.abs(np.asarray(x)) ** (2.0 / aj) for x, aj in zip(xi, a)))


def aniso_dilation(xi: Sequence[np.ndarray], a: Sequence[float], lam: float) -> Tuple[np.ndarray, ...]:
    """delta_lam: xi_j -> lam^(a_j) xi_j, so that |delta_lam xi|_a = lam |xi|_a"""
    _check_aniso(a)
    return tuple(lam ** aj * np.asarray(x) for x, aj in zip(xi, a))


def _check_aniso(a: Sequence[float]):
    if any(not aj > 0 for aj in a):
        raise SymbolError(f"Anisotropy exponents must be positive, got {list(a)}")


def _rect_samples(lower: np.ndarray, upper: np.ndarray, samples: int) -> Tuple[np.ndarray, ...]:
    t = (np.arange(samples) + 0.5) / samples
    axes = [lo + (hi - lo) * t for lo, hi in zip(lower, upper)]
    return tuple(g.ravel() for g in np.meshgrid(*axes, indexing="ij"))


def _family_mikhlin(m: MatrixSymbol, family: FreqRectFamily, weight: str, samples: int,
                    rel_step: Optional[float], a: Optional[Sequence[float]] = None) -> MikhlinReport:
    n = m.grid.n
    if family.n != n:
        raise DimensionMismatch(f"Family of dimension {family.n} for a symbol of dimension {n}")
    if len(family) == 0:
        raise SymbolError("Rectangle family is empty")
    _require_closure(m)
    alphas = multi_indices(n, 1, "inf")
    breakdown = {_alpha_key(alpha): 0.0 for alpha in alphas}
    per_rect = []
    for rect in family:
        xi = _rect_samples(rect.lower, rect.upper, samples)
        off_axes = np.all([x != 0 for x in xi], axis=0)
        if not off_axes.any():
            raise SymbolError(f"Samples of rectangle {rect} all lie on coordinate hyperplanes")
        xi = tuple(x[off_axes] for x in xi)
        best = 0.0
        for alpha in alphas:
            order = sum(alpha)
            if weight == "product":
                factor = np.prod([np.abs(x) ** k for x, k in zip(xi, alpha)], axis=0)
            elif weight == "aniso":
                factor = aniso_distance(xi, a) ** order
            else:
                factor = np.sqrt(sum(x ** 2 for x in xi)) ** order
            value = float(_weighted_sup(m, alpha, xi, np.asarray(factor, dtype=float), rel_step).max())
            key = _alpha_key(alpha)
            breakdown[key] = max(breakdown[key], value)
            best = max(best, value)
        per_rect.append(best)
    description = f"{samples}^{n} midpoints in each of {len(family)} rectangles of {family.description}"
    return MikhlinReport(max(breakdown.values()), breakdown, description, _derivative_source(m), True, per_rect)


def mikhlin_norm_rect(m: MatrixSymbol, family: FreqRectFamily, max_order: int = 1, samples: int = 16,
                      rel_step: Optional[float] = None) -> MikhlinReport:
    """
    sup over |alpha|_inf <= 1 and over rectangle interiors of the weighted derivative norms:
    |xi|^|alpha| for blocking families, prod_{alpha_j = 1} |xi_j| for product families
    """
    if max_order != 1:
        raise SymbolError("Rectangle Mikhlin norms are defined for |alpha|_inf <= 1")
    weight = "product" if family.kind == "product" else "euclidean"
    return _family_mikhlin(m, family, weight, samples, rel_step)


def mikhlin_norm_aniso(m: MatrixSymbol, a: Sequence[float], family: Optional[FreqRectFamily] = None,
                       l_range: Tuple[int, int] = (-3, 3), samples: int = 16,
                       rel_step: Optional[float] = None) -> MikhlinReport:
    """sup of |xi|_a^|alpha| ||d^alpha m(xi)|| over the anisotropic blocking rectangles"""
    _check_aniso(a)
    if len(a) != m.grid.n:
        raise DimensionMismatch(f"Need {m.grid.n} anisotropy exponents, got {len(a)}")
    if family is None:
        family = aniso_blocking_rects(a, l_range)
    return _family_mikhlin(m, family, "aniso", samples, rel_step, a)


def mikhlin_norm_nq(m: MatrixSymbol, order: int, q: Union[int, float] = 1, points_per_axis: int = 48,
                    rel_step: Optional[float] = None) -> MikhlinReport:
    """
    Essential R-Mikhlin norm: sup over |alpha|_q <= order of R{|xi|^|alpha| d^alpha m(xi): xi != 0},
    sampled on a product of log ladders that avoids the coordinate hyperplanes
    """
    if q not in (1, math.inf):
        raise SymbolError(f"q must be 1 or inf, got {q}")
    _require_closure(m)
    n = m.grid.n
    exponent = setting(None, "ladder_exponent")
    positive = np.logspace(-exponent * math.log10(2), exponent * math.log10(2), points_per_axis)
    axis = np.concatenate([-positive[::-1], positive])
    xi = tuple(g.ravel() for g in np.meshgrid(*([axis] * n), indexing="ij"))
    radius = np.sqrt(sum(x ** 2 for x in xi))
    alphas = multi_indices(n, order, "inf" if q == math.inf else "1")
    breakdown = {}
    for alpha in alphas:
        breakdown[_alpha_key(alpha)] = float(_weighted_sup(m, alpha, xi, radius ** sum(alpha), rel_step).max())
    samples = f"{2 * points_per_axis}^{n} log-product samples off the coordinate hyperplanes"
    return MikhlinReport(max(breakdown.values()), breakdown, samples, _derivative_source(m))


# Hoermander conditions


def _annulus_quadrature(n: int, R: float, resolution: int) -> Tuple[Tuple[np.ndarray, ...], np.ndarray]:
    """Midpoint nodes and weights for {R < |xi| < 2R} in polar/spherical coordinates"""
    t = (np.arange(resolution) + 0.5) / resolution
    r = R + R * t
    dr = R / resolution
    if n == 1:
        xi = np.concatenate([-r[::-1], r])
        return (xi,), np.full(len(xi), dr)
    if n == 2:
        theta = 2 * np.pi * t
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        w = rr * dr * (2 * np.pi / resolution)
        return (np.ravel(rr * np.cos(tt)), np.ravel(rr * np.sin(tt))), w.ravel()
    if n == 3:
        theta = np.pi * t
        phi = 2 * np.pi * t
        rr, th, ph = np.meshgrid(r, theta, phi, indexing="ij")
        w = rr ** 2 * np.sin(th) * dr * (np.pi / resolution) * (2 * np.pi / resolution)
        xi = (rr * np.sin(th) * np.cos(ph), rr * np.sin(th) * np.sin(ph), rr * np.cos(th))
        return tuple(np.ravel(x) for x in xi), w.ravel()
    raise DimensionMismatch(f"Unsupported dimension {n}")


def hoermander_condition(m: MatrixSymbol, s: float, order: int, R_ladder: Sequence[float], mode: str = "direct",
                         resolution: int = 64, rel_step: Optional[float] = None) -> HoermanderReport:
    """
    Worst constant C in (R^(s|alpha| - n) int_{R<|xi|<2R} ||d^alpha m(xi) u||^s dxi)^(1/s) <= C ||u||
    over |alpha|_1 <= order, R in the ladder and u in the standard basis. mode="adjoint" applies the
    condition to m~* and the basis of the output fiber.
    """
    n = m.grid.n
    if not 1 < s <= 2:
        raise SymbolError(f"s={s} must lie in (1, 2]")
    if order > n or order < 0:
        raise SymbolError(f"Order {order} must lie in 0..{n}")
    if mode not in ("direct", "adjoint"):
        raise SymbolError(f"Unknown mode {mode!r}")
    if len(R_ladder) == 0:
        raise SymbolError("Empty radius ladder")
    _require_closure(m)
    target = adjoint_symbol(m) if mode == "adjoint" else m
    breakdown: Dict[str, float] = {}
    radii: Dict[str, float] = {}
    for alpha in multi_indices(n, order, "1"):
        for R in R_ladder:
            xi, w = _annulus_quadrature(n, float(R), resolution)
            values = symbol_derivative(target, alpha, xi, rel_step)
            # columns are the images of the standard basis vectors
            column_norms = np.linalg.norm(values, axis=-2)
            integral = np.sum(w[:, None] * column_norms ** s, axis=0)
            constant = float(np.max((R ** (s * sum(alpha) - n) * integral) ** (1 / s)))
            key = _alpha_key(alpha)
            breakdown[key] = max(breakdown.get(key, 0.0), constant)
            radii[repr(float(R))] = max(radii.get(repr(float(R)), 0.0), constant)
    return HoermanderReport(max(breakdown.values()), breakdown, radii, mode, s, order)


# Partition of unity and truncated kernels


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)"""
    t = np.asarray(t, dtype=float)

    def f(u):
        out = np.zeros_like(u)
        positive = u > 0
        out[positive] = np.exp(-1.0 / u[positive])
        return out

    a, b = f(t), f(1 - t)
    return a / (a + b)


class PartitionProfile:
    """
    The radial profile phi(xi) = psi(log2 |xi|) with psi(t) = S(t + 1) - S(t) for a smooth step S.

    supp phi is {1/2 <= |xi| <= 2} and sum_{|j| <= J} phi(2^-j xi) = 1 for 2^-J <= |xi| <= 2^J.
    """

    def __call__(self, xi) -> np.ndarray:
        if isinstance(xi, tuple):
            r = np.sqrt(sum(np.asarray(x, dtype=float) ** 2 for x in xi))
        else:
            r = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(r)
        nonzero = r > 0
        t = np.log2(r[nonzero])
        out[nonzero] = _smooth_step(t + 1) - _smooth_step(t)
        return out

    def block(self, j: int, xi) -> np.ndarray:
        """phi(2^-j xi)"""
        if isinstance(xi, tuple):
            return self(tuple(np.asarray(x) * 2.0 ** -j for x in xi))
        return self(np.asarray(xi) * 2.0 ** -j)

    def partial_sum(self, J: int, xi) -> np.ndarray:
        return sum(self.block(j, xi) for j in range(-J, J + 1))


def dyadic_partition_of_unity() -> PartitionProfile:
    return PartitionProfile()


class KernelTable:
    """K_N = sum_{|j| <= N} k_j with k_j the inverse transform of m phi(2^-j .), sampled on grid"""

    def __init__(self, N: int, grid: Grid, blocks: Dict[int, np.ndarray], symbol: MatrixSymbol):
        self.N = N
        self.grid = grid
        self.blocks = blocks
        self.symbol = symbol
        self.kernel = sum(blocks.values())

    def __repr__(self):
        return f"<KernelTable N={self.N} for {self.symbol.name} on n={self.grid.n} N_grid={self.grid.N}>"

    @property
    def d_out(self) -> int:
        return self.kernel.shape[-2]

    @property
    def d_in(self) -> int:
        return self.kernel.shape[-1]

    def spectrum(self) -> np.ndarray:
        """Transform of K_N at the frequency nodes, shape grid.shape + (d_out, d_in)"""
        return _matrix_dft(self.grid, self.kernel)

    def convolve(self, f: SampledFunction) -> SampledFunction:
        """(K_N * f)(x) = h^n sum_y K_N(x - y) f(y), periodically on the grid box"""
        if f.d != self.d_in:
            raise DimensionMismatch(f"Kernel expects fiber dimension {self.d_in}, function has {f.d}")
        F = forward_dft(f)
        G = np.einsum("...ij,...j->...i", self.spectrum(), F.values)
        return inverse_dft(SampledSpectrum(self.grid, G))


def _matrix_dft(grid: Grid, values: np.ndarray) -> np.ndarray:
    d_out, d_in = values.shape[-2:]
    F = forward_dft(SampledFunction(grid, values.reshape(grid.shape + (d_out * d_in,))))
    return F.values.reshape(grid.shape + (d_out, d_in))


def _matrix_idft(grid: Grid, values: np.ndarray) -> np.ndarray:
    d_out, d_in = values.shape[-2:]
    f = inverse_dft(SampledSpectrum(grid, values.reshape(grid.shape + (d_out * d_in,))))
    return f.values.reshape(grid.shape + (d_out, d_in))


def approx_kernel(m: MatrixSymbol, N: int, grid: Optional[Grid] = None) -> KernelTable:
    """
    Blocks k_j, |j| <= N, and their sum. The band has to fit the grid, 2^N <= N_grid/(4L),
    otherwise BandOverflow.
    """
    grid = m.grid if grid is None else grid
    if grid != m.grid:
        raise DimensionMismatch(f"Symbol lives on {m.grid}, kernel requested on {grid}")
    if N < 0:
        raise SymbolError(f"Truncation N={N} must be nonnegative")
    limit = grid.N / (4 * grid.L)
    if 2.0 ** N > limit:
        raise BandOverflow(f"2^{N} exceeds N_grid/(4L) = {limit}; refine the grid or lower N")
    phi = dyadic_partition_of_unity()
    blocks = {}
    for j in range(-N, N + 1):
        cutoff = phi.block(j, grid.freq_mesh)
        blocks[j] = _matrix_idft(grid, m.values * cutoff[..., None, None])
    logging.debug(f"Kernel table N={N} with {len(blocks)} blocks on {grid}")
    return KernelTable(N, grid, blocks, m)


class PHoermanderReport(NamedTuple):
    a_k: Dict[int, float]
    total: float
    p: float
    y_ladder: List[float]

    def asdict(self) -> dict:
        return dict(a_k={str(k): v for k, v in self.a_k.items()}, total=self.total, p=self.p,
                    y_ladder=self.y_ladder)


def check_p_hoermander(K: KernelTable, p: float, y_ladder: Sequence[float],
                       k_range: Sequence[int] = range(1, 9)) -> PHoermanderReport:
    """
    a_k = sup over y and basis vectors u of
        (2^k|y|)^(n/p') (int_{2^k|y| < |x| < 2^(k+1)|y|} ||[K_N(x - y) - K_N(x)] u||^p dx)^(1/p)
    with offsets y along the first axis; p = 1 is the pointwise variant (no normalisation).
    """
    if p < 1:
        raise SymbolError(f"p={p} must be at least 1")
    grid = K.grid
    n, h = grid.n, grid.h
    radius = grid.radius
    dual_exponent = 0.0 if p == 1 else n * (1 - 1 / p)
    a_k: Dict[int, float] = {}
    for y in y_ladder:
        shift = y / h
        if abs(shift - round(shift)) > 1e-9 or round(shift) == 0:
            raise SymbolError(f"Offset y={y} must be a nonzero multiple of the grid spacing {h}")
        shifted = np.roll(K.kernel, int(round(shift)), axis=0)
        column_norms = np.linalg.norm(shifted - K.kernel, axis=-2)
        for k in k_range:
            inner, outer = 2 ** k * abs(y), 2 ** (k + 1) * abs(y)
            if outer + abs(y) > grid.L / 2:
                raise AnnulusOutOfBox(f"Annulus k={k} for y={y} leaves the box of side {grid.L}")
            annulus = (radius > inner) & (radius < outer)
            integral = (grid.cell_volume * np.sum(column_norms[annulus] ** p, axis=0)) ** (1 / p)
            value = float(np.max(inner ** dual_exponent * integral))
            a_k[k] = max(a_k.get(k, 0.0), value)
    return PHoermanderReport(a_k, float(sum(a_k.values())), p, [float(y) for y in y_ladder])


# Uniformly R-bounded variation


def _as_interval(interval) -> Tuple[float, float]:
    if isinstance(interval, DyadicInterval):
        return interval.interval
    a, b = sorted(float(x) for x in interval)
    low, high = sorted((abs(a), abs(b)))
    exponent = np.log2(low) if low > 0 else np.nan
    if a * b <= 0 or not np.isclose(high, 2 * low) or not np.isclose(exponent, np.round(exponent)):
        raise SymbolError(f"Interval [{a}, {b}] is not dyadic")
    return a, b


def rbdd_variation_1d(m: MatrixSymbol, interval, samples: int = 256,
                      rel_step: Optional[float] = None) -> Tuple[float, float]:
    """
    For the dyadic interval I = [a, b]: the total variation 2 + int_I |eta|^-1 d eta of
    d(delta_a - delta_b) + 1_(a,b) eta^-1 d eta, and the R-bound of
    tau(eta) = m 1_{a, b} + eta m'(eta) 1_(a, b)
    """
    if m.grid.n != 1:
        raise DimensionMismatch("rbdd_variation_1d needs a 1-d symbol")
    a, b = _as_interval(interval)
    measure_norm = 2.0 + abs(math.log(b / a))
    _require_closure(m)
    endpoints = m.evaluate((np.array([a, b]),))
    eta = a + (b - a) * (np.arange(samples) + 0.5) / samples
    interior = eta[:, None, None] * symbol_derivative(m, (1,), (eta,), rel_step)
    return measure_norm, r_bound(np.concatenate([endpoints, interior]))


# Maximal regularity


def _check_sectorial(A: np.ndarray):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SymbolError(f"A must be a square matrix, got shape {A.shape}")
    eigenvalues = linalg.eigvals(A)
    if np.any(eigenvalues.real <= 0):
        raise SymbolError(f"Spectrum of A must lie in the open right half-plane, got eigenvalues {eigenvalues}")


def maxreg_symbol(A, grid: Grid) -> MatrixSymbol:
    """m(xi) = i xi (i xi - A)^-1 with closures for all derivatives"""
    A = np.asarray(A, dtype=complex)
    if grid.n != 1:
        raise DimensionMismatch("The maximal regularity symbol lives on a 1-d grid")
    _check_sectorial(A)
    d = A.shape[0]
    eye = np.eye(d)

    def resolvent(xi):
        return np.linalg.inv(1j * xi[..., None, None] * eye - A)

    def func(xi):
        x = np.asarray(xi[0], dtype=float)
        return np.linalg.solve(1j * x[..., None, None] * eye - A, 1j * x[..., None, None] * eye)

    def derivative(alpha, xi):
        k = alpha[0]
        x = np.asarray(xi[0], dtype=float)
        # d^k/dxi^k [A (i xi - A)^-1] = (-1)^k k! i^k A (i xi - A)^-(k+1)
        power = np.linalg.matrix_power(resolvent(x), k + 1)
        return (-1) ** k * math.factorial(k) * (1j ** k) * (A @ power)

    return from_function(grid, func, derivative, "resolvent")


def maxreg_solve(A, f: SampledFunction) -> Tuple[SampledFunction, SampledFunction]:
    """
    Periodic solution of u' + A u = f through the multiplier (2 pi i xi + A)^-1; returns (u, Au)
    """
    A = np.asarray(A, dtype=complex)
    grid = f.grid
    if grid.n != 1:
        raise DimensionMismatch("maxreg_solve needs a 1-d grid")
    _check_sectorial(A)
    d = A.shape[0]
    if f.d != d:
        raise DimensionMismatch(f"A is {d}x{d}, function has fiber dimension {f.d}")
    xi = grid.freq_mesh[0]
    solution = np.linalg.inv(2j * np.pi * xi[..., None, None] * np.eye(d) + A)
    u = apply_multiplier(MatrixSymbol(grid, solution, name="(2pi i xi + A)^-1"), f)
    Au = apply_multiplier(MatrixSymbol(grid, A @ solution, name="A(2pi i xi + A)^-1"), f)
    return u, Au


def time_derivative(f: SampledFunction) -> SampledFunction:
    """Spectral derivative, the multiplier 2 pi i xi"""
    xi = f.grid.freq_mesh[0]
    d = f.d
    symbol = (2j * np.pi * xi)[..., None, None] * np.eye(d)
    return apply_multiplier(MatrixSymbol(f.grid, symbol, name="2pi i xi"), f)
