"""
Periodic discretization of R^n

A Grid is the box [-L/2, L/2)^n sampled with N points per axis. Spatial nodes are
x_j = -L/2 + j*h with h = L/N, frequency nodes are xi_k = k/L for k in {-N/2, ..., N/2-1},
stored in centred order (index 0 holds the Nyquist node -N/(2L)).

The discrete transform approximates the continuous one with convention

    Ff(xi) = int f(x) exp(-2 pi i x.xi) dx  ~  h^n sum_j f(x_j) exp(-2 pi i x_j.xi)

and inverse_dft is its exact two-sided inverse. Values always carry a trailing fiber axis,
so a scalar function on a 2-d grid has values of shape (N, N, 1).
"""
import functools
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft

SUPPORTED_DIMENSIONS = (1, 2, 3)


class GridError(ValueError):
    pass


def _is_power_of_two(N: int) -> bool:
    return N > 0 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMENSIONS:
            raise GridError(f"Dimension n={self.n} not supported, choose one of {SUPPORTED_DIMENSIONS}")
        if not (isinstance(self.N, (int, np.integer)) and _is_power_of_two(int(self.N)) and self.N >= 8):
            raise GridError(f"Axis size N={self.N} must be a power of two >= 8")
        if not (np.isfinite(self.L) and self.L > 0):
            raise GridError(f"Box length L={self.L} must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        """1-d spatial nodes, shared by every axis"""
        return -self.L / 2 + np.arange(self.N) * self.h

    @functools.cached_property
    def freqs(self) -> np.ndarray:
        """1-d frequency nodes in centred order"""
        return (np.arange(self.N) - self.N // 2) / self.L

    @functools.cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.nodes] * self.n), indexing="ij"))

    @functools.cached_property
    def freq_mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.freqs] * self.n), indexing="ij"))

    @functools.cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x ** 2 for x in self.mesh))

    @functools.cached_property
    def freq_radius(self) -> np.ndarray:
        return np.sqrt(sum(xi ** 2 for xi in self.freq_mesh))

    @functools.cached_property
    def _dft_sign(self) -> np.ndarray:
        # exp(-2 pi i x_0 xi_k) = (-1)^(k - N/2) = (-1)^k because N/2 is even
        s = 1.0 - 2.0 * (np.arange(self.N) % 2)
        out = np.ones(self.shape)
        for axis in range(self.n):
            out = out * s.reshape([-1 if a == axis else 1 for a in range(self.n)])
        return out

    def node_index(self, x: float) -> int:
        """Index of the node nearest to coordinate x (same on every axis)"""
        return int(np.clip(np.round((x + self.L / 2) / self.h), 0, self.N - 1))

    def freq_index(self, xi: float) -> int:
        return int(np.clip(np.round(xi * self.L + self.N // 2), 0, self.N - 1))

    def refine(self, factor: int = 2) -> "Grid":
        """Same box, factor times more points per axis"""
        return Grid(self.n, self.N * factor, self.L)


def make_grid(n: int, N: int, L: float) -> Grid:
    return Grid(int(n), int(N), float(L))


def _as_values(grid: Grid, values, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.shape == grid.shape:
        values = values[..., np.newaxis]
    if values.ndim != grid.n + 1 or values.shape[:-1] != grid.shape:
        raise GridError(f"{what} values of shape {values.shape} do not fit grid shape {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise GridError(f"{what} values must be finite")
    return values


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex d-vector per spatial node; values have shape grid.shape + (d,)"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.grid, self.values, "Function"))

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def pointwise_norm(self) -> np.ndarray:
        """Euclidean fiber norm at every node"""
        return np.linalg.norm(self.values, axis=-1)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "SampledFunction":
        c = np.asarray(c)
        if c.ndim == self.grid.n:
            c = c[..., np.newaxis]
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"<SampledFunction n={self.grid.n} N={self.grid.N} L={self.grid.L} d={self.d}>"


@dataclass(frozen=True, eq=False)
class SampledSpectrum:
    """Complex d-vector per frequency node (centred order)"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.grid, self.values, "Spectrum"))

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def with_values(self, values) -> "SampledSpectrum":
        return SampledSpectrum(self.grid, values)

    def __repr__(self):
        return f"<SampledSpectrum n={self.grid.n} N={self.grid.N} L={self.grid.L} d={self.d}>"


def forward_dft(f: SampledFunction) -> SampledSpectrum:
    grid = f.grid
    axes = tuple(range(grid.n))
    F = fft.fftshift(fft.fftn(f.values, axes=axes), axes=axes)
    return SampledSpectrum(grid, grid.cell_volume * grid._dft_sign[..., np.newaxis] * F)


def inverse_dft(F: SampledSpectrum) -> SampledFunction:
    grid = F.grid
    axes = tuple(range(grid.n))
    G = fft.ifftshift(grid._dft_sign[..., np.newaxis] * F.values, axes=axes)
    return SampledFunction(grid, fft.ifftn(G, axes=axes) / grid.cell_volume)


def l2_norm(f: SampledFunction) -> float:
    return float(np.sqrt(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2)))


def spectral_l2_norm(F: SampledSpectrum) -> float:
    """Parseval counterpart of l2_norm: (L^-n sum |F|^2)^(1/2)"""
    return float(np.sqrt(np.sum(np.abs(F.values) ** 2) / F.grid.L ** F.grid.n))


# Function constructors


@dataclass(frozen=True)
class FunctionSpec:
    """A named built-in constructor with its parameters, e.g. FunctionSpec("gaussian", {"width": 2})"""

    kind: str
    params: Dict[str, object] = field(default_factory=dict)


def _centred(grid: Grid, centre) -> Tuple[np.ndarray, ...]:
    centre = np.broadcast_to(np.asarray(centre, dtype=float), (grid.n,))
    return tuple(x - c for x, c in zip(grid.mesh, centre))


def _fiber(profile: np.ndarray, d: int, direction=None) -> np.ndarray:
    direction = np.ones(d) if direction is None else np.asarray(direction, dtype=complex)
    if direction.shape != (d,):
        raise GridError(f"Fiber direction must have length {d}")
    return profile[..., np.newaxis] * direction


def gaussian(grid: Grid, d: int, width: float = 1.0, centre=0.0, direction=None, rng=None) -> np.ndarray:
    r2 = sum(x ** 2 for x in _centred(grid, centre))
    return _fiber(np.exp(-np.pi * r2 / width ** 2), d, direction)


def modulated_gaussian(grid: Grid, d: int, frequency=0.0, width: float = 1.0, centre=0.0, direction=None,
                       rng=None) -> np.ndarray:
    frequency = np.broadcast_to(np.asarray(frequency, dtype=float), (grid.n,))
    phase = np.exp(2j * np.pi * sum(a * x for a, x in zip(frequency, grid.mesh)))
    return gaussian(grid, d, width, centre, direction) * phase[..., np.newaxis]


def bump(grid: Grid, d: int, radius: float = 1.0, centre=0.0, direction=None, rng=None) -> np.ndarray:
    t2 = sum(x ** 2 for x in _centred(grid, centre)) / radius ** 2
    inside = t2 < 1
    profile = np.zeros(grid.shape)
    profile[inside] = np.exp(-1.0 / (1.0 - t2[inside]))
    return _fiber(profile, d, direction)


def indicator(grid: Grid, d: int, lower=0.0, upper=1.0, direction=None, rng=None) -> np.ndarray:
    """Indicator of a box; nodes exactly on a face get 1/2 per axis (trapezoid weights)"""
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (grid.n,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (grid.n,))
    tol = 1e-9 * grid.h
    profile = np.ones(grid.shape)
    for x, a, b in zip(grid.mesh, lower, upper):
        factor = ((x > a + tol) & (x < b - tol)).astype(float)
        factor[np.abs(x - a) <= tol] = 0.5
        factor[np.abs(x - b) <= tol] = 0.5
        profile = profile * factor
    return _fiber(profile, d, direction)


def band_mask(grid: Grid, band: float, inner: float = 0.0) -> np.ndarray:
    """Frequency nodes with inner <= |xi|_inf <= band"""
    sup = np.max(np.abs(np.stack(grid.freq_mesh)), axis=0)
    return (sup <= band + 1e-12) & (sup >= inner - 1e-12)


def random_spectrum(grid: Grid, mask: np.ndarray, rng: np.random.Generator, d: int = 1) -> SampledFunction:
    """
    Random function whose spectrum lives on the masked frequency nodes.

    Coefficients are drawn in C-order of the masked nodes, so for fixed L the same seed gives the
    same physical function on every N that resolves the mask.
    """
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise GridError("Empty frequency mask")
    F = np.zeros(grid.shape + (d,), dtype=complex)
    coef = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    F[mask] = coef * grid.L ** grid.n / np.sqrt(2 * count)
    return inverse_dft(SampledSpectrum(grid, F))


def band_limited(grid: Grid, d: int, band: float = 1.0, inner: float = 0.0, seed: int = 0, rng=None) -> np.ndarray:
    if band * grid.L >= grid.N // 2:
        raise GridError(f"Band {band} does not fit below the Nyquist frequency {grid.N / (2 * grid.L)}")
    rng = np.random.default_rng(seed) if rng is None else rng
    return random_spectrum(grid, band_mask(grid, band, inner), rng, d).values


FUNCTION_KINDS: Dict[str, Callable[..., np.ndarray]] = dict(
    gaussian=gaussian,
    modulated_gaussian=modulated_gaussian,
    bump=bump,
    indicator=indicator,
    band_limited=band_limited,
)


def sample(expr: Union[FunctionSpec, str], grid: Grid, d: int = 1,
           rng: Optional[np.random.Generator] = None) -> SampledFunction:
    """Evaluate a built-in function constructor at the spatial nodes"""
    if isinstance(expr, str):
        expr = FunctionSpec(expr)
    try:
        constructor = FUNCTION_KINDS[expr.kind]
    except KeyError:
        options = ", ".join(FUNCTION_KINDS)
        raise GridError(f"Unsupported function constructor {expr.kind!r}, choose one of {{{options}}}")
    try:
        values = constructor(grid, d, rng=rng, **expr.params)
    except TypeError as e:
        raise GridError(f"Invalid parameters for {expr.kind}: {e}")
    return SampledFunction(grid, values)


def scalar_function(grid: Grid, values: np.ndarray) -> SampledFunction:
    return SampledFunction(grid, np.asarray(values)[..., np.newaxis])


def box_nodes(grid: Grid, lower: Sequence[float], upper: Sequence[float]) -> np.ndarray:
    """Boolean mask of spatial nodes in the half-open box [lower, upper)"""
    tol = 1e-9 * grid.h
    mask = np.ones(grid.shape, dtype=bool)
    for x, a, b in zip(grid.mesh, lower, upper):
        mask &= (x >= a - tol) & (x < b - tol)
    return mask
