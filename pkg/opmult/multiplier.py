"""
Fourier multipliers with matrix-valued symbols

A MatrixSymbol tabulates m(xi) (a d_out x d_in matrix) at every frequency node of a Grid and may
carry analytic closures for m and its partial derivatives, which the symbol-norm code prefers
over finite differences. T_m acts by

    (T_m f)^(xi) = m(xi) f^(xi)

at every frequency node, followed by the inverse transform. Frequency boxes are realised as
half-open node sets [a, b) per axis, so indicator partitions are exact on the grid; sgn(0) = 0.
"""
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft, signal

from opmult.grid import Grid, SampledFunction, SampledSpectrum, forward_dft, inverse_dft
from opmult.weights import Box

XiCoords = Tuple[np.ndarray, ...]
SymbolFunc = Callable[[XiCoords], np.ndarray]
DerivativeFunc = Callable[[Tuple[int, ...], XiCoords], np.ndarray]


class SymbolError(ValueError):
    pass


class DimensionMismatch(SymbolError):
    pass


def _eye(shape: Tuple[int, ...], d: int) -> np.ndarray:
    return np.broadcast_to(np.eye(d, dtype=complex), shape + (d, d))


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """
    Matrix symbol tabulated on grid; values have shape grid.shape + (d_out, d_in).

    func evaluates m at arbitrary frequencies (a tuple of n coordinate arrays); derivative(alpha, xi)
    evaluates the partial derivative of multi-order alpha.
    """

    grid: Grid
    values: np.ndarray
    func: Optional[SymbolFunc] = None
    derivative_func: Optional[DerivativeFunc] = None
    name: str = "tabulated"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != self.grid.n + 2 or values.shape[:-2] != self.grid.shape:
            raise SymbolError(f"Symbol values of shape {values.shape} do not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise SymbolError(f"Symbol {self.name} is not finite at every node")
        object.__setattr__(self, "values", values)

    @property
    def d_out(self) -> int:
        return self.values.shape[-2]

    @property
    def d_in(self) -> int:
        return self.values.shape[-1]

    def __repr__(self):
        return f"<MatrixSymbol {self.name} {self.d_out}x{self.d_in} on n={self.grid.n} N={self.grid.N}>"

    @property
    def has_derivatives(self) -> bool:
        return self.derivative_func is not None

    def evaluate(self, xi: XiCoords) -> np.ndarray:
        if self.func is None:
            raise SymbolError(f"Symbol {self.name} has no analytic closure")
        return np.asarray(self.func(tuple(np.asarray(x, dtype=float) for x in xi)), dtype=complex)

    def derivative(self, alpha: Sequence[int], xi: XiCoords) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) == 0:
            return self.evaluate(xi)
        if self.derivative_func is None:
            raise SymbolError(f"Symbol {self.name} has no derivative closure")
        return np.asarray(self.derivative_func(alpha, tuple(np.asarray(x, dtype=float) for x in xi)), dtype=complex)

    def hermitian(self) -> "MatrixSymbol":
        """Pointwise conjugate transpose m(xi)^H (no reflection)"""
        func = derivative = None
        if self.func is not None:
            func = _conj_t(self.func)
        if self.derivative_func is not None:
            df = self.derivative_func

            def derivative(alpha, xi):
                return np.conj(np.swapaxes(df(alpha, xi), -1, -2))
        return MatrixSymbol(self.grid, np.conj(np.swapaxes(self.values, -1, -2)), func, derivative,
                            f"{self.name}^H")

    def __matmul__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        """Pointwise matrix product, the symbol of the composition T_self T_other"""
        if self.grid != other.grid or self.d_in != other.d_out:
            raise DimensionMismatch(f"Cannot compose {self} with {other}")
        func = None
        if self.func is not None and other.func is not None:
            f1, f2 = self.func, other.func

            def func(xi):
                return f1(xi) @ f2(xi)
        return MatrixSymbol(self.grid, self.values @ other.values, func, None, f"{self.name}*{other.name}")


def _conj_t(func: SymbolFunc) -> SymbolFunc:
    def wrapped(xi):
        return np.conj(np.swapaxes(func(xi), -1, -2))
    return wrapped


def _tabulate(grid: Grid, func: SymbolFunc) -> np.ndarray:
    return np.asarray(func(grid.freq_mesh), dtype=complex)


def from_function(grid: Grid, func: SymbolFunc, derivative: Optional[DerivativeFunc] = None,
                  name: str = "function") -> MatrixSymbol:
    """Tabulate an analytic symbol; func maps a tuple of n frequency arrays to (..., d_out, d_in)"""
    return MatrixSymbol(grid, _tabulate(grid, func), func, derivative, name)


def tabulated(grid: Grid, values) -> MatrixSymbol:
    values = np.asarray(values, dtype=complex)
    if values.shape == grid.shape:
        values = values[..., np.newaxis, np.newaxis]
    return MatrixSymbol(grid, values)


def _zero_derivative(d_out: int, d_in: int) -> DerivativeFunc:
    def derivative(alpha, xi):
        return np.zeros(np.shape(xi[0]) + (d_out, d_in), dtype=complex)
    return derivative


def scalar_symbol(grid: Grid, func: Callable[[XiCoords], np.ndarray], d: int = 1,
                  derivative: Optional[Callable[[Tuple[int, ...], XiCoords], np.ndarray]] = None,
                  name: str = "scalar") -> MatrixSymbol:
    """Symbol s(xi)*Id_d from a scalar function s and (optionally) its scalar derivatives"""
    def matrix(xi):
        s = np.asarray(func(xi), dtype=complex)
        return s[..., None, None] * np.eye(d)

    matrix_derivative = None
    if derivative is not None:
        def matrix_derivative(alpha, xi):
            s = np.asarray(derivative(alpha, xi), dtype=complex)
            return s[..., None, None] * np.eye(d)
    return from_function(grid, matrix, matrix_derivative, name)


def identity(grid: Grid, d: int = 1) -> MatrixSymbol:
    return from_function(grid, lambda xi: _eye(np.shape(xi[0]), d), _zero_derivative(d, d), "identity")


def zero(grid: Grid, d_out: int = 1, d_in: Optional[int] = None) -> MatrixSymbol:
    d_in = d_out if d_in is None else d_in
    return from_function(grid, lambda xi: np.zeros(np.shape(xi[0]) + (d_out, d_in), dtype=complex),
                         _zero_derivative(d_out, d_in), "zero")


def sgn(grid: Grid, d: int = 1, scale: complex = 1.0, axis: int = 0) -> MatrixSymbol:
    """scale*sgn(xi_axis)*Id with sgn(0) = 0; scale=-pi*1j gives the Hilbert transform"""
    def func(xi):
        return scale * np.sign(xi[axis])

    def derivative(alpha, xi):
        return np.zeros(np.shape(xi[0]), dtype=complex)
    return scalar_symbol(grid, func, d, derivative, f"{scale}*sgn")


def hilbert_symbol(grid: Grid, d: int = 1) -> MatrixSymbol:
    """-pi i sgn(xi), the multiplier of the un-normalised principal value kernel 1/x"""
    return sgn(grid, d, scale=-np.pi * 1j)


def box_membership(xi: XiCoords, lower: Sequence[float], upper: Sequence[float]) -> np.ndarray:
    inside = np.ones(np.shape(xi[0]), dtype=bool)
    for x, a, b in zip(xi, lower, upper):
        inside &= (x >= a) & (x < b)
    return inside


def indicator(grid: Grid, box, d: int = 1) -> MatrixSymbol:
    """1_A(xi)*Id for the half-open box A = [lower, upper); infinite corners are allowed"""
    lower, upper = tuple(box.lower), tuple(box.upper)
    if len(lower) != grid.n:
        raise DimensionMismatch(f"Box of dimension {len(lower)} on a grid of dimension {grid.n}")

    def func(xi):
        return box_membership(xi, lower, upper).astype(complex)

    def derivative(alpha, xi):
        return np.zeros(np.shape(xi[0]), dtype=complex)
    return scalar_symbol(grid, func, d, derivative, f"1[{lower},{upper})")


def half_space(grid: Grid, axis: int = 0, d: int = 1) -> MatrixSymbol:
    """1_{xi_axis >= 0}, the cutoff of the half-line (n=1) or half-space"""
    lower = [-np.inf] * grid.n
    lower[axis] = 0.0
    return indicator(grid, Box(tuple(lower), (np.inf,) * grid.n), d)


def modulation(grid: Grid, a: Union[float, Sequence[float]], d: int = 1) -> MatrixSymbol:
    """exp(2 pi i a.xi)*Id, the symbol of the translation f -> f(. + a)"""
    a = np.broadcast_to(np.asarray(a, dtype=float), (grid.n,))

    def func(xi):
        return np.exp(2j * np.pi * sum(aj * x for aj, x in zip(a, xi)))

    def derivative(alpha, xi):
        return np.prod([(2j * np.pi * aj) ** k for aj, k in zip(a, alpha)]) * func(xi)
    return scalar_symbol(grid, func, d, derivative, f"exp(2pi i {list(a)}.xi)")


# Operators


def apply_multiplier(m: MatrixSymbol, f: SampledFunction) -> SampledFunction:
    if m.grid != f.grid:
        raise DimensionMismatch(f"Symbol lives on {m.grid}, function on {f.grid}")
    if m.d_in != f.d:
        raise DimensionMismatch(f"Symbol expects fiber dimension {m.d_in}, function has {f.d}")
    F = forward_dft(f)
    G = np.einsum("...ij,...j->...i", m.values, F.values)
    return inverse_dft(SampledSpectrum(f.grid, G))


class MultiplierOperator:
    """The operator T_m; callable on SampledFunctions"""

    def __init__(self, symbol: MatrixSymbol):
        self.symbol = symbol

    def __repr__(self):
        return f"<MultiplierOperator {self.symbol.name}>"

    def __call__(self, f: SampledFunction) -> SampledFunction:
        return apply_multiplier(self.symbol, f)

    @property
    def grid(self) -> Grid:
        return self.symbol.grid

    def adjoint(self) -> "MultiplierOperator":
        """Hilbert-space adjoint on L^2, the multiplier with symbol m(xi)^H"""
        return MultiplierOperator(self.symbol.hermitian())

    def dual(self) -> "MultiplierOperator":
        """Banach-space dual under the bilinear pairing, the multiplier with symbol m(-xi)^H"""
        return MultiplierOperator(adjoint_symbol(self.symbol))


def _half_open_mask(freqs: np.ndarray, a: float, b: float) -> np.ndarray:
    return (freqs >= a) & (freqs < b)


def frequency_cutoff(A, f: SampledFunction) -> SampledFunction:
    """Delta(A) f: spectrum multiplied by the indicator of the half-open box A"""
    grid = f.grid
    lower, upper = tuple(A.lower), tuple(A.upper)
    if len(lower) != grid.n:
        raise DimensionMismatch(f"Box of dimension {len(lower)} on a grid of dimension {grid.n}")
    mask = box_membership(grid.freq_mesh, lower, upper)
    F = forward_dft(f)
    return inverse_dft(F.with_values(F.values * mask[..., np.newaxis]))


def coordinate_cutoff(j: int, interval: Tuple[float, float], f: SampledFunction) -> SampledFunction:
    """Delta_j[I] f: spectrum multiplied by 1_I(xi_j), axes counted from 1"""
    grid = f.grid
    if not 1 <= j <= grid.n:
        raise DimensionMismatch(f"Axis {j} out of range 1..{grid.n}")
    a, b = interval
    mask = _half_open_mask(grid.freq_mesh[j - 1], a, b)
    F = forward_dft(f)
    return inverse_dft(F.with_values(F.values * mask[..., np.newaxis]))


def periodic_hilbert_kernel(grid: Grid) -> np.ndarray:
    """(pi/L) cot(pi m/N) at node offsets m = 0..N-1, with the singular offset m = 0 skipped"""
    m = np.arange(grid.N)
    kernel = np.zeros(grid.N)
    kernel[1:] = np.pi / grid.L / np.tan(np.pi * m[1:] / grid.N)
    return kernel


def hilbert_transform_quadrature(f: SampledFunction, periodic: bool = True) -> SampledFunction:
    """
    Principal value Riemann sum of (Hf)(x) = p.v. int f(t)/(x - t) dt, skipping the singular node.

    periodic=True sums the periodised kernel (pi/L) cot(pi (x - t)/L) over the whole box, which is
    1/(x - t) plus a smooth correction; periodic=False sums 1/(x - t) over the grid window only.
    """
    grid = f.grid
    if grid.n != 1:
        raise DimensionMismatch(f"Quadrature Hilbert transform needs a 1-d grid, got n={grid.n}")
    h = grid.h
    if periodic:
        kernel = periodic_hilbert_kernel(grid)
        K = fft.fft(kernel)[:, np.newaxis]
        values = h * fft.ifft(fft.fft(f.values, axis=0) * K, axis=0)
        return f.with_values(values)
    offsets = np.arange(-(grid.N - 1), grid.N)
    kernel = np.zeros(len(offsets))
    nonzero = offsets != 0
    kernel[nonzero] = 1.0 / (offsets[nonzero] * h)
    full = signal.fftconvolve(f.values, kernel[:, np.newaxis], mode="full", axes=0)
    return f.with_values(h * full[grid.N - 1: 2 * grid.N - 1])


def reflection_index(N: int) -> np.ndarray:
    """Centred-layout index of -xi_k; the Nyquist node (index 0) maps to itself"""
    return (-np.arange(N)) % N


def adjoint_symbol(m: MatrixSymbol) -> MatrixSymbol:
    """m~*(xi) = m(-xi)^H, by reflecting the frequency nodes"""
    grid = m.grid
    reflected = m.values
    index = reflection_index(grid.N)
    for axis in range(grid.n):
        reflected = np.take(reflected, index, axis=axis)
    values = np.conj(np.swapaxes(reflected, -1, -2))
    func = derivative = None
    if m.func is not None:
        f0 = m.func

        def func(xi):
            return np.conj(np.swapaxes(f0(tuple(-x for x in xi)), -1, -2))
    if m.derivative_func is not None:
        df = m.derivative_func

        def derivative(alpha, xi):
            sign = (-1) ** sum(alpha)
            return sign * np.conj(np.swapaxes(df(alpha, tuple(-x for x in xi)), -1, -2))
    return MatrixSymbol(grid, values, func, derivative, f"{m.name}~*")


def duality_pairing(u: SampledFunction, v: SampledFunction) -> complex:
    """<u, v> = h^n sum_x u(x) . conj(v(-x)), the pairing under which T_m and T_{m~*} are dual"""
    grid = u.grid
    index = reflection_index(grid.N)
    reflected = v.values
    for axis in range(grid.n):
        reflected = np.take(reflected, index, axis=axis)
    return complex(grid.cell_volume * np.sum(u.values * np.conj(reflected)))


def inner_product(u: SampledFunction, v: SampledFunction) -> complex:
    return complex(u.grid.cell_volume * np.sum(u.values * np.conj(v.values)))


# JSON symbol specs


def symbol_from_spec(spec: dict, grid: Grid, d: Optional[int] = None) -> MatrixSymbol:
    """
    Build a symbol from {"kind": ...}: identity, zero, sgn, hilbert, indicator (with "box"),
    half_space, modulation (with "a"), resolvent (with "A") or tabulated (with "values")
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "resolvent":
        from opmult.symbols import maxreg_symbol
        return maxreg_symbol(np.asarray(spec["A"], dtype=complex), grid)
    if kind == "tabulated":
        return tabulated(grid, np.asarray(spec["values"], dtype=complex))
    d = int(spec.pop("d", d or 1))
    if kind == "identity":
        return identity(grid, d)
    if kind == "zero":
        return zero(grid, d)
    if kind == "sgn":
        return sgn(grid, d, complex(spec.get("scale", 1.0)), int(spec.get("axis", 0)))
    if kind == "hilbert":
        return hilbert_symbol(grid, d)
    if kind == "indicator":
        box = spec["box"]
        return indicator(grid, Box(tuple(box["lower"]), tuple(box["upper"])), d)
    if kind == "half_space":
        return half_space(grid, int(spec.get("axis", 0)), d)
    if kind == "modulation":
        return modulation(grid, spec["a"], d)
    raise SymbolError(f"Unknown symbol kind {kind!r}")


def multi_indices(n: int, max_order: int, norm: str = "inf") -> list:
    """Multi-indices alpha in N^n with |alpha|_inf <= max_order (norm='inf') or |alpha|_1 <= max_order"""
    alphas = itertools.product(range(max_order + 1), repeat=n)
    if norm == "inf":
        return list(alphas)
    return [a for a in alphas if sum(a) <= max_order]
