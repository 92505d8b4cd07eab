"""
Weights and weight characteristics

A Weight is a nonnegative function on R^n of one of four kinds:
- constant: c
- power: c |x|^a (radial)
- coord_power: c prod_j |x_j|^(a_j)
- tabulated: values at the nodes of a Grid

Characteristics are suprema over boxes. They are computed over finite candidate families
(BoxFamily), so every estimate is a lower bound of the true supremum and is flagged as such:

- [w]_Ap        sup_A <w>_A <w'_p>_A^(p-1),           w'_p = w^(-1/(p-1))
- [w, s]_Ap     sup_A <w>_A <s'_p>_A^(p-1)
- [w]_Ainf      sup_A w(A)^-1 int_A M(w 1_A)
- [w, s]_Apr    sup_Q <s^r>_Q^(1/r - 1/p) <w>_Q^(1/p)

Box integrals use closed forms for power kinds (int |t|^a dt = sign(t)|t|^(a+1)/(a+1)), midpoint
quadrature for radial powers in n >= 2 and node means for tabulated weights.
"""
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from opmult.config import setting
from opmult.grid import Grid, GridError, SampledFunction, make_grid

WEIGHT_KINDS = ("constant", "power", "coord_power", "tabulated")

# resolution of the midpoint rule used for the cell average at a radial singularity
CELL_RESOLUTION = 64


class WeightError(ValueError):
    pass


class NonIntegrableWeight(WeightError):
    pass


class Weight:
    """
    Nonnegative weight function. Use the constructors constant, power, coord_power and tabulated
    """

    def __init__(self, kind: str, c: float = 1.0, a=None, grid: Optional[Grid] = None, values=None):
        if kind not in WEIGHT_KINDS:
            raise WeightError(f"Unknown weight kind {kind!r}, choose one of {WEIGHT_KINDS}")
        if not (np.isfinite(c) and c > 0):
            raise WeightError(f"Weight coefficient must be positive, got {c}")
        self.kind = kind
        self.c = float(c)
        self.a = a
        self.grid = grid
        self.values = values

    @classmethod
    def constant(cls, c: float = 1.0) -> "Weight":
        return cls("constant", c=c)

    @classmethod
    def power(cls, a: float, c: float = 1.0) -> "Weight":
        return cls("power", c=c, a=float(a))

    @classmethod
    def coord_power(cls, a: Sequence[float], c: float = 1.0) -> "Weight":
        return cls("coord_power", c=c, a=tuple(float(x) for x in a))

    @classmethod
    def tabulated(cls, grid: Grid, values) -> "Weight":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise WeightError(f"Tabulated weight of shape {values.shape} does not fit grid {grid.shape}")
        if np.any(values < 0):
            raise WeightError("Tabulated weight values must be nonnegative")
        return cls("tabulated", grid=grid, values=values)

    def __repr__(self):
        if self.kind == "constant":
            return f"<Weight {self.c}>"
        if self.kind == "power":
            return f"<Weight {self.c}|x|^{self.a}>"
        if self.kind == "coord_power":
            return f"<Weight {self.c}prod|x_j|^{list(self.a)}>"
        return f"<Weight tabulated on {self.grid}>"

    def exponents(self, n: int) -> Tuple[float, ...]:
        """Per-axis exponents of a coord_power weight (1-d power weights are coordinate powers too)"""
        if self.kind == "coord_power":
            if len(self.a) != n:
                raise WeightError(f"Weight has {len(self.a)} exponents, dimension is {n}")
            return self.a
        if self.kind == "power" and n == 1:
            return (self.a,)
        if self.kind == "constant":
            return (0.0,) * n
        raise WeightError(f"{self} is not a product weight in dimension {n}")

    def is_product(self, n: int) -> bool:
        return self.kind in ("constant", "coord_power") or (self.kind == "power" and n == 1)

    def __pow__(self, t: float) -> "Weight":
        """The weight w^t"""
        if self.kind == "constant":
            return Weight.constant(self.c ** t)
        if self.kind == "power":
            return Weight.power(self.a * t, self.c ** t)
        if self.kind == "coord_power":
            return Weight.coord_power([a * t for a in self.a], self.c ** t)
        with np.errstate(divide="ignore"):
            return Weight.tabulated(self.grid, self.values ** t)

    def evaluate(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        """Point values at the given coordinate arrays; singular points give inf"""
        shape = np.shape(coords[0])
        with np.errstate(divide="ignore"):
            if self.kind == "constant":
                return np.full(shape, self.c)
            if self.kind == "power":
                r = np.sqrt(sum(np.asarray(x) ** 2 for x in coords))
                return self.c * r ** self.a
            if self.kind == "coord_power":
                out = np.full(shape, self.c)
                for x, a in zip(coords, self.exponents(len(coords))):
                    out = out * np.abs(x) ** a
                return out
        raise WeightError("Tabulated weights can only be evaluated at their grid nodes")

    def node_values(self, grid: Grid) -> np.ndarray:
        """
        Values at the spatial nodes of grid. A node sitting on a singularity (x = 0, or x_j = 0 for
        coordinate powers) gets the exact average over its cell instead.
        """
        if self.kind == "tabulated":
            if self.grid != grid:
                raise WeightError(f"Tabulated weight lives on {self.grid}, not on {grid}")
            if not np.all(np.isfinite(self.values)):
                raise WeightError("Tabulated weight is not finite at every node")
            return self.values
        if self.kind == "constant":
            return np.full(grid.shape, self.c)
        h = grid.h
        if self.is_product(grid.n):
            out = np.full(grid.shape, self.c)
            for axis, a in enumerate(self.exponents(grid.n)):
                nonzero = grid.nodes != 0
                factor = np.zeros(grid.N)
                factor[nonzero] = np.abs(grid.nodes[nonzero]) ** a
                if not nonzero.all():
                    if a <= -1:
                        raise NonIntegrableWeight(
                            f"factor {axis + 1} (|x_{axis + 1}|^{a}) is not integrable over the cell at 0"
                        )
                    factor[~nonzero] = 2 * (h / 2) ** (a + 1) / (a + 1) / h
                shape = [grid.N if i == axis else 1 for i in range(grid.n)]
                out = out * factor.reshape(shape)
            return out
        # radial power in n >= 2
        with np.errstate(divide="ignore"):
            out = self.c * grid.radius ** self.a
        origin = grid.radius == 0
        if origin.any():
            if self.a <= -grid.n:
                raise NonIntegrableWeight(f"|x|^{self.a} is not integrable over the cell at 0 in dimension {grid.n}")
            lower = np.full((1, grid.n), -h / 2)
            integral = _midpoint_integrals(self, lower, -lower, CELL_RESOLUTION)
            out[origin] = integral[0] / h ** grid.n
        return out

    def integrals(self, lower: np.ndarray, upper: np.ndarray, resolution: Optional[int] = None) -> np.ndarray:
        """
        w(A) for the boxes A = [lower[i], upper[i]], shape (m, n) each
        """
        lower = np.atleast_2d(np.asarray(lower, dtype=float))
        upper = np.atleast_2d(np.asarray(upper, dtype=float))
        n = lower.shape[1]
        if self.kind == "constant":
            return self.c * np.prod(upper - lower, axis=1)
        if self.kind == "tabulated":
            return _tabulated_integrals(self, lower, upper)
        if self.is_product(n):
            out = np.full(len(lower), self.c)
            for axis, a in enumerate(self.exponents(n)):
                lo, hi = lower[:, axis], upper[:, axis]
                if a <= -1 and np.any((lo <= 0) & (hi >= 0)):
                    raise NonIntegrableWeight(
                        f"factor {axis + 1} (|x_{axis + 1}|^{a}) is not integrable on a box meeting x_{axis + 1} = 0"
                    )
                out = out * _power_integral_1d(a, lo, hi)
            return out
        if self.a <= -n:
            touching = np.all((lower <= 0) & (upper >= 0), axis=1)
            if touching.any():
                raise NonIntegrableWeight(f"|x|^{self.a} is not integrable on a box containing 0 in dimension {n}")
        return _midpoint_integrals(self, lower, upper, setting(resolution, "quadrature_resolution"))

    def to_spec(self) -> dict:
        if self.kind == "constant":
            return dict(kind="constant", c=self.c)
        if self.kind == "power":
            return dict(kind="power", a=self.a, c=self.c)
        if self.kind == "coord_power":
            return dict(kind="coord_power", a=list(self.a), c=self.c)
        return dict(
            kind="tabulated",
            grid=dict(n=self.grid.n, N=self.grid.N, L=self.grid.L),
            values=self.values.ravel().tolist(),
        )

    @classmethod
    def from_spec(cls, spec: Union[dict, str]) -> "Weight":
        if isinstance(spec, str):
            spec = json.loads(spec)
        spec = dict(spec)
        kind = spec.pop("kind", None)
        try:
            if kind == "constant":
                return cls.constant(**spec)
            if kind == "power":
                return cls.power(**spec)
            if kind == "coord_power":
                return cls.coord_power(**spec)
            if kind == "tabulated":
                grid = make_grid(**spec["grid"])
                return cls.tabulated(grid, np.asarray(spec["values"], dtype=float).reshape(grid.shape))
        except (TypeError, KeyError, GridError) as e:
            raise WeightError(f"Invalid {kind} weight spec: {e}")
        raise WeightError(f"Unknown weight kind {kind!r}, choose one of {WEIGHT_KINDS}")


def _power_integral_1d(a: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if a == -1:
        # only reached for intervals away from 0
        return np.abs(np.log(np.abs(hi)) - np.log(np.abs(lo)))

    def F(t):
        return np.sign(t) * np.abs(t) ** (a + 1) / (a + 1)

    return F(hi) - F(lo)


def _midpoint_integrals(weight: Weight, lower: np.ndarray, upper: np.ndarray, resolution: int) -> np.ndarray:
    """Midpoint rule with resolution^n cells per box; singular midpoints are excluded"""
    n = lower.shape[1]
    t = (np.arange(resolution) + 0.5) / resolution
    out = np.empty(len(lower))
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        axes = [lo[j] + (hi[j] - lo[j]) * t for j in range(n)]
        values = weight.evaluate(np.meshgrid(*axes, indexing="ij"))
        finite = np.isfinite(values)
        cell = np.prod(hi - lo) / resolution ** n
        out[i] = values[finite].sum() / max(finite.sum(), 1) * resolution ** n * cell
    return out


def _tabulated_integrals(weight: Weight, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """|A| times the mean of the finite node values in the half-open box A"""
    grid = weight.grid
    finite = np.isfinite(weight.values)
    values = np.where(finite, weight.values, 0.0)
    sums = _prefix_sums(values)
    counts = _prefix_sums(finite.astype(float))
    tol = 1e-9 * grid.h
    lo = np.searchsorted(grid.nodes, lower - tol, side="left")
    hi = np.searchsorted(grid.nodes, upper - tol, side="left")
    total = _box_sums(sums, lo, hi)
    count = _box_sums(counts, lo, hi)
    if np.any(count == 0):
        raise WeightError("Tabulated weight has no finite node inside a candidate box")
    return total / count * np.prod(upper - lower, axis=1)


def _prefix_sums(values: np.ndarray) -> np.ndarray:
    out = np.pad(values, [(1, 0)] * values.ndim)
    for axis in range(values.ndim):
        out = np.cumsum(out, axis=axis)
    return out


def _box_sums(prefix: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Sums over index boxes [lo, hi) by inclusion-exclusion; lo, hi have shape (m, n)"""
    n = lo.shape[1]
    total = np.zeros(len(lo))
    for corner in itertools.product((0, 1), repeat=n):
        index = tuple(np.where(c, hi[:, j], lo[:, j]) for j, c in enumerate(corner))
        total += (-1) ** (n - sum(corner)) * prefix[index]
    return total


# Boxes and candidate families


class Box(NamedTuple):
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def is_cube(self) -> bool:
        return bool(np.allclose(self.sides, self.sides[0], rtol=1e-12, atol=0))


def make_box(lower: Sequence[float], upper: Sequence[float]) -> Box:
    lower, upper = tuple(float(x) for x in lower), tuple(float(x) for x in upper)
    if len(lower) != len(upper) or not all(b > a for a, b in zip(lower, upper)):
        raise WeightError(f"Box needs lower < upper on every axis, got {lower}, {upper}")
    return Box(lower, upper)


class BoxFamily:
    """A finite family of axis-parallel boxes, stored as (m, n) corner arrays"""

    def __init__(self, lower, upper, description: str = "custom"):
        self.lower = np.atleast_2d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_2d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise WeightError("Lower and upper corners must have the same shape")
        if len(self.lower) and not np.all(self.upper > self.lower):
            raise WeightError("Every candidate box needs positive side lengths")
        self.description = description

    @classmethod
    def from_boxes(cls, boxes: Iterable[Box], description: str = "custom") -> "BoxFamily":
        boxes = list(boxes)
        return cls([b.lower for b in boxes], [b.upper for b in boxes], description)

    def __len__(self):
        return len(self.lower)

    def __iter__(self) -> Iterator[Box]:
        for lo, hi in zip(self.lower, self.upper):
            yield Box(tuple(lo), tuple(hi))

    def __getitem__(self, i) -> Box:
        return Box(tuple(self.lower[i]), tuple(self.upper[i]))

    def __add__(self, other: "BoxFamily") -> "BoxFamily":
        return BoxFamily(
            np.concatenate([self.lower, other.lower]),
            np.concatenate([self.upper, other.upper]),
            f"{self.description} + {other.description}",
        )

    def __repr__(self):
        return f"<BoxFamily {self.description!r} m={len(self)}>"

    @property
    def n(self) -> int:
        return self.lower.shape[1]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.upper - self.lower, axis=1)

    def cube_mask(self) -> np.ndarray:
        sides = self.upper - self.lower
        return np.all(np.isclose(sides, sides[:, :1], rtol=1e-12, atol=0), axis=1)

    def cubes(self) -> "BoxFamily":
        mask = self.cube_mask()
        return BoxFamily(self.lower[mask], self.upper[mask], f"cubes of {self.description}")

    def select(self, mask: np.ndarray, description: Optional[str] = None) -> "BoxFamily":
        return BoxFamily(self.lower[mask], self.upper[mask], description or self.description)

    def within(self, lower, upper) -> "BoxFamily":
        """Members lying inside the box [lower, upper]"""
        mask = np.all((self.lower >= np.asarray(lower) - 1e-12) & (self.upper <= np.asarray(upper) + 1e-12), axis=1)
        return self.select(mask, f"{self.description} within [{lower}, {upper}]")


def _ladder_1d(scale: float, subdivisions: int, span: float, extent: Optional[float]) -> np.ndarray:
    """Interval centres on multiples of scale/subdivisions with |centre| <= span*scale"""
    kmax = int(np.floor(span * subdivisions + 1e-9))
    centres = np.arange(-kmax, kmax + 1) * scale / subdivisions
    if extent is not None:
        centres = centres[np.abs(centres) + scale / 2 <= extent + 1e-12]
    return centres


def box_ladder(n: int, shape: str = "cubes", scales: Iterable[int] = range(-4, 4), subdivisions: int = 16,
               span: float = 2.0, extent: Optional[float] = None) -> BoxFamily:
    """
    Dyadic-anchored candidate family: boxes of side 2^s (per axis for rectangles) whose centres lie
    on multiples of side/subdivisions within span sides of the origin, together with the boxes that
    have 0 as a corner.

    With extent, only boxes inside [-extent, extent]^n are kept.
    """
    if shape not in ("cubes", "rectangles"):
        raise WeightError(f"Unknown box shape {shape!r}")
    scales = sorted(set(scales))
    if not scales:
        raise WeightError("Empty scale ladder")
    per_scale = {}
    for s in scales:
        side = 2.0 ** s
        centres = np.union1d(_ladder_1d(side, subdivisions, span, extent), [-side / 2, side / 2])
        if extent is not None:
            centres = centres[np.abs(centres) + side / 2 <= extent + 1e-12]
        per_scale[s] = (side, centres)
    lower: List[np.ndarray] = []
    upper: List[np.ndarray] = []
    if shape == "cubes":
        side_sets = [(per_scale[s],) * n for s in scales]
    else:
        side_sets = list(itertools.product(*([list(per_scale.values())] * n)))
    for sides in side_sets:
        if any(len(c) == 0 for _, c in sides):
            continue
        grids = np.meshgrid(*[c for _, c in sides], indexing="ij")
        centres = np.stack([g.ravel() for g in grids], axis=1)
        half = np.array([side / 2 for side, _ in sides])
        lower.append(centres - half)
        upper.append(centres + half)
    if not lower:
        raise WeightError("Box ladder is empty; increase extent or lower the scales")
    description = f"{shape} ladder n={n} scales={scales[0]}..{scales[-1]} subdivisions={subdivisions} span={span}"
    if extent is not None:
        description += f" extent={extent}"
    return BoxFamily(np.concatenate(lower), np.concatenate(upper), description)


def random_boxes(n: int, count: int, rng: np.random.Generator, extent: float = 1.0,
                 shape: str = "rectangles") -> BoxFamily:
    """Random boxes inside [-extent, extent]^n (endpoints uniform; cubes share one side length)"""
    if shape == "rectangles":
        ends = np.sort(rng.uniform(-extent, extent, size=(count, n, 2)), axis=2)
        lower, upper = ends[..., 0], ends[..., 1]
    elif shape == "cubes":
        side = 2 * extent * rng.uniform(0, 1, size=(count, 1)) ** 2
        lower = rng.uniform(-extent, extent - side, size=(count, n))
        upper = lower + side
    else:
        raise WeightError(f"Unknown box shape {shape!r}")
    keep = np.all(upper > lower, axis=1)
    return BoxFamily(lower[keep], upper[keep], f"{count} random {shape} in [-{extent}, {extent}]^{n}")


# Characteristics


class CharacteristicEstimate(NamedTuple):
    value: float
    family: str
    is_lower_bound: bool = True
    box: Optional[Box] = None

    def asdict(self) -> dict:
        return dict(
            value=self.value,
            family=self.family,
            is_lower_bound=self.is_lower_bound,
            box=None if self.box is None else dict(lower=list(self.box.lower), upper=list(self.box.upper)),
        )


def dual_weight(omega: Weight, p: float) -> Weight:
    """The p-dual weight w^(-1/(p-1))"""
    if not p > 1:
        raise WeightError(f"Exponent p={p} must exceed 1")
    return omega ** (-1.0 / (p - 1))


def _averages(weight: Weight, family: BoxFamily, resolution: Optional[int]) -> np.ndarray:
    return weight.integrals(family.lower, family.upper, resolution) / family.volumes


def _two_weight_products(args) -> np.ndarray:
    omega, sigma_dual, p, family, resolution = args
    return _averages(omega, family, resolution) * _averages(sigma_dual, family, resolution) ** (p - 1)


def _apr_products(args) -> np.ndarray:
    omega, sigma_r, p, r, family, resolution = args
    return _averages(sigma_r, family, resolution) ** (1 / r - 1 / p) * _averages(omega, family, resolution) ** (1 / p)


def _chunks(family: BoxFamily, workers: int) -> List[BoxFamily]:
    bounds = np.linspace(0, len(family), workers + 1).astype(int)
    return [family.select(slice(a, b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _sup_over_family(func, args: tuple, family: BoxFamily, workers: Optional[int]) -> CharacteristicEstimate:
    """Evaluate per-box values (optionally in worker processes) and take the max"""
    if len(family) == 0:
        raise WeightError("Candidate box family is empty")
    workers = setting(workers, "workers")
    if workers > 1 and len(family) >= 2 * workers:
        chunks = _chunks(family, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(func, [args[:-2] + (chunk, args[-1]) for chunk in chunks]))
        values = np.concatenate(parts)
    else:
        values = func(args[:-2] + (family, args[-1]))
    if not np.all(np.isfinite(values)):
        raise NonIntegrableWeight(f"Non-finite box averages on family {family.description}")
    best = int(np.argmax(values))
    return CharacteristicEstimate(float(values[best]), family.description, True, family[best])


def _select_shape(candidates: BoxFamily, shape: Optional[str]) -> BoxFamily:
    if shape is None or shape == "rectangles":
        return candidates
    if shape == "cubes":
        return candidates.cubes()
    raise WeightError(f"Unknown box shape {shape!r}")


def two_weight_characteristic(omega: Weight, sigma: Weight, p: float, candidates: BoxFamily,
                              shape: Optional[str] = None, resolution: Optional[int] = None,
                              workers: Optional[int] = None) -> CharacteristicEstimate:
    family = _select_shape(candidates, shape)
    sigma_dual = dual_weight(sigma, p)
    return _sup_over_family(_two_weight_products, (omega, sigma_dual, p, family, resolution), family, workers)


def ap_characteristic(omega: Weight, p: float, candidates: BoxFamily, shape: Optional[str] = None,
                      resolution: Optional[int] = None, workers: Optional[int] = None) -> CharacteristicEstimate:
    return two_weight_characteristic(omega, omega, p, candidates, shape, resolution, workers)


def apr_characteristic(omega: Weight, sigma: Weight, p: float, r: float, candidates: BoxFamily,
                       resolution: Optional[int] = None, workers: Optional[int] = None) -> CharacteristicEstimate:
    if not 1 < r < p:
        raise WeightError(f"Need 1 < r < p, got r={r}, p={p}")
    if not candidates.cube_mask().all():
        raise WeightError("The A_p^r characteristic is taken over cubes only")
    sigma_r = sigma ** r
    return _sup_over_family(_apr_products, (omega, sigma_r, p, r, candidates, resolution), candidates, workers)


class SliceReport(NamedTuple):
    slices: Tuple[float, ...]
    rectangle: float

    @property
    def holds(self) -> bool:
        return all(s <= self.rectangle * (1 + 1e-12) for s in self.slices)

    def asdict(self) -> dict:
        return dict(slices=list(self.slices), rectangle=self.rectangle, holds=self.holds)


def slice_characteristics(omega: Weight, p: float, n: int = 2, scales: Iterable[int] = range(-4, 4),
                          subdivisions: int = 16, span: float = 2.0, extent: Optional[float] = None,
                          resolution: Optional[int] = None, workers: Optional[int] = None) -> SliceReport:
    """
    [w_j]_Ap on R for every factor of a product weight w = c prod_j |x_j|^(a_j), next to [w]_Ap over
    rectangles in R^n. The rectangle ladder is the n-fold product of the interval ladder, so each
    slice is at most the rectangle value.
    """
    if not omega.is_product(n):
        raise WeightError(f"{omega} is not a product weight in dimension {n}")
    ladder = dict(scales=list(scales), subdivisions=subdivisions, span=span, extent=extent)
    intervals = box_ladder(1, "cubes", **ladder)  # type: ignore
    slices = tuple(ap_characteristic(Weight.power(a), p, intervals, resolution=resolution, workers=workers).value
                   for a in omega.exponents(n))
    rectangles = box_ladder(n, "rectangles", **ladder)  # type: ignore
    rectangle = ap_characteristic(omega, p, rectangles, resolution=resolution, workers=workers).value
    report = SliceReport(slices, rectangle)
    if not report.holds:
        logging.warning(f"Slice characteristics {slices} exceed the rectangle characteristic {rectangle}")
    return report


def interval_maximal_function(values: np.ndarray) -> np.ndarray:
    """
    Exact discrete maximal function over all node intervals, along the last axis.

    M_i = max over s <= i <= e of mean(values[s..e]); O(r^2) per row via a suffix max over e.
    """
    values = np.asarray(values, dtype=float)
    r = values.shape[-1]
    prefix = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1)
    s = np.arange(r)[:, None]
    e = np.arange(r)[None, :]
    length = np.where(e >= s, e - s + 1, 1)
    means = (prefix[..., None, 1:] - prefix[..., :-1, None]) / length
    means = np.where(e >= s, means, -np.inf)
    # best[s, i] = max over e >= i of means[s, e]
    best = np.flip(np.maximum.accumulate(np.flip(means, axis=-1), axis=-1), axis=-1)
    best = np.where(e >= s, best, -np.inf)
    return best.max(axis=-2)


def _window_means(values: np.ndarray, widths: Sequence[int]) -> np.ndarray:
    """Means over every window of the given widths, clipped to the array, indexed by start + width - 1"""
    prefix = _prefix_sums(values)
    ranges = []
    for N, w in zip(values.shape, widths):
        start = np.arange(-(w - 1), N)
        ranges.append((np.clip(start, 0, N), np.clip(start + w, 0, N)))
    lo = np.stack(np.meshgrid(*[r[0] for r in ranges], indexing="ij"), axis=-1).reshape(-1, values.ndim)
    hi = np.stack(np.meshgrid(*[r[1] for r in ranges], indexing="ij"), axis=-1).reshape(-1, values.ndim)
    sums = _box_sums(prefix, lo, hi)
    counts = np.prod(hi - lo, axis=1)
    return (sums / counts).reshape([len(r[0]) for r in ranges])


def maximal_function(f: Union[SampledFunction, np.ndarray], shape: str = "cubes",
                     scales: Sequence[int] = ()) -> Union[SampledFunction, np.ndarray]:
    """
    Discrete Hardy-Littlewood maximal function of a nonnegative scalar array.

    scales are window widths in nodes. At every node the result is the largest average over the
    sliding windows of those widths that contain the node, each clipped to the domain. Cubes use equal
    widths on every axis, rectangles all combinations of widths. Passing every width 1..N gives the
    maximal function over all node boxes.
    """
    if len(scales) == 0:
        raise WeightError("Empty scale list")
    if isinstance(f, SampledFunction):
        if f.d != 1:
            raise WeightError("Maximal function needs a scalar fiber")
        values = f.values[..., 0]
        if np.any(np.abs(values.imag) > 0):
            raise WeightError("Maximal function needs a real, nonnegative function")
        values = values.real
    else:
        values = np.asarray(f, dtype=float)
    if np.any(values < 0):
        raise WeightError("Maximal function needs a nonnegative function")
    n = values.ndim
    if shape == "cubes":
        combos = [(int(w),) * n for w in scales]
    elif shape == "rectangles":
        combos = list(itertools.product(*([[int(w) for w in scales]] * n)))
    else:
        raise WeightError(f"Unknown box shape {shape!r}")
    result = np.zeros_like(values)
    for widths in combos:
        if min(widths) < 1:
            raise WeightError(f"Window widths must be positive, got {widths}")
        means = _window_means(values, widths)
        # window starting at s covers node i for s in [i - w + 1, i], i.e. means[i : i + w]
        origin = [w - 1 - w // 2 for w in widths]
        local = ndimage.maximum_filter(means, size=widths, origin=origin, mode="nearest")
        index = tuple(slice(w - 1, w - 1 + N) for w, N in zip(widths, values.shape))
        np.maximum(result, local[index], out=result)
    if isinstance(f, SampledFunction):
        return f.with_values(result[..., np.newaxis])
    return result


def _cell_averages(omega: Weight, box: Box, resolution: int) -> np.ndarray:
    """Exact averages of the weight over the resolution^n cells of box"""
    n = box.n
    edges = [np.linspace(box.lower[j], box.upper[j], resolution + 1) for j in range(n)]
    lo = np.stack(np.meshgrid(*[e[:-1] for e in edges], indexing="ij"), axis=-1).reshape(-1, n)
    hi = np.stack(np.meshgrid(*[e[1:] for e in edges], indexing="ij"), axis=-1).reshape(-1, n)
    values = omega.integrals(lo, hi, resolution=8) / np.prod(hi - lo, axis=1)
    return values.reshape((resolution,) * n)


def _ainf_ratios(args) -> np.ndarray:
    omega, shape, family, resolution = args
    out = np.empty(len(family))
    for i, box in enumerate(family):
        cells = _cell_averages(omega, box, resolution)
        total = cells.sum()
        if not total > 0:
            raise WeightError(f"Weight vanishes on candidate box {box}")
        if box.n == 1:
            local = interval_maximal_function(cells)
        else:
            widths = range(1, resolution + 1) if shape == "cubes" else sorted({2 ** k for k in range(
                int(np.log2(resolution)) + 1)} | {resolution})
            local = maximal_function(cells, shape, list(widths))
        out[i] = local.sum() / total
    return out


def ainf_characteristic(omega: Weight, candidates: BoxFamily, shape: Optional[str] = None,
                        resolution: int = 128, workers: Optional[int] = None) -> CharacteristicEstimate:
    """
    sup over candidate boxes of w(A)^-1 int_A M(w 1_A).

    Each box is split into resolution^n cells carrying the exact cell averages of w; the maximal
    function is evaluated on that local grid (exactly over all subintervals in 1-d), so w(A) is exact
    and the estimate is at least 1.
    """
    family = _select_shape(candidates, shape)
    box_shape = "cubes" if family.cube_mask().all() else "rectangles"
    if family.n > 1:
        resolution = min(resolution, 32)
    estimate = _sup_over_family(_ainf_ratios, (omega, box_shape, family, resolution), family, workers)
    logging.debug(f"A_inf estimate {estimate.value:.6g} attained on {estimate.box}")
    return estimate
