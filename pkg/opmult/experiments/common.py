"""
Shared building blocks for experiments: the Router that groups experiment functions with
their config models, and the pydantic specs for grids, weights, symbols and test functions.
"""
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from opmult.config import ReportFormat
from opmult.grid import FunctionSpec, Grid, SampledFunction, make_grid, sample
from opmult.multiplier import MatrixSymbol, symbol_from_spec
from opmult.report import Criterion
from opmult.weights import BoxFamily, Weight, box_ladder

Outcome = Tuple[Dict[str, Any], List[Criterion]]


class ConfigError(ValueError):
    def __init__(self, message: str, errors: Optional[list] = None):
        self.errors = errors or []
        super().__init__(message)


class ExperimentError(ValueError):
    def __init__(self, experiment: str, error: Exception):
        self.experiment = experiment
        self.error = error
        super().__init__(f"{experiment}: {error}")


class Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridModel(Spec):
    n: int = Field(1, ge=1, le=3)
    N: int = Field(..., ge=2)
    L: float = Field(..., gt=0)

    def build(self) -> Grid:
        return make_grid(self.n, self.N, self.L)


class WeightModel(Spec):
    kind: str = "constant"
    a: Union[float, List[float], None] = None
    c: float = 1.0

    def build(self) -> Weight:
        return Weight.from_spec(self.model_dump(exclude_none=True))


class SymbolModel(Spec):
    """A library symbol: {"kind": "hilbert"}, {"kind": "resolvent", "A": [[1, 0], [0, 2]]}, ..."""

    model_config = ConfigDict(extra="allow")
    kind: str
    d: int = Field(1, ge=1)

    def build(self, grid: Grid) -> MatrixSymbol:
        return symbol_from_spec(self.model_dump(), grid)


class FunctionModel(Spec):
    kind: str = "gaussian"
    params: Dict[str, Any] = Field(default_factory=dict)

    def build(self, grid: Grid, d: int = 1, rng: Optional[np.random.Generator] = None) -> SampledFunction:
        return sample(FunctionSpec(self.kind, self.params), grid, d, rng)


class LadderModel(Spec):
    """Candidate boxes: side 2^s for s in [scale_min, scale_max], centres on side/subdivisions"""

    shape: str = "cubes"
    scale_min: int = -4
    scale_max: int = 3
    subdivisions: int = Field(16, ge=1)
    span: float = Field(2.0, gt=0)
    extent: Optional[float] = None

    def build(self, n: int) -> BoxFamily:
        return box_ladder(n, self.shape, range(self.scale_min, self.scale_max + 1), self.subdivisions,
                          self.span, self.extent)


class ExperimentConfig(Spec):
    experiment: str
    seed: Optional[int] = Field(None, ge=0, description="Seed of the experiment's random generator")
    out: Optional[str] = Field(None, description="Report path; stdout if omitted")
    format: Optional[ReportFormat] = None


class Experiment(NamedTuple):
    name: str
    config: Type[ExperimentConfig]
    func: Callable[[Any, np.random.Generator], Outcome]
    tag: str

    @property
    def doc(self) -> str:
        return (self.func.__doc__ or "").strip().split("\n")[0]


class Router:
    """Collects experiments under a tag; include_router merges routers into a registry"""

    def __init__(self, tag: str):
        self.tag = tag
        self.experiments: Dict[str, Experiment] = {}

    def experiment(self, name: str, config: Type[ExperimentConfig]):
        def decorator(func):
            if name in self.experiments:
                raise ValueError(f"Experiment {name} registered twice")
            self.experiments[name] = Experiment(name, config, func, self.tag)
            return func
        return decorator

    def include_router(self, router: "Router"):
        for name, experiment in router.experiments.items():
            if name in self.experiments:
                raise ValueError(f"Experiment {name} registered twice")
            self.experiments[name] = experiment

    def __getitem__(self, name: str) -> Experiment:
        try:
            return self.experiments[name]
        except KeyError:
            raise ConfigError(f"Unknown experiment {name!r}, choose one of {sorted(self.experiments)}")

    def __iter__(self):
        return iter(self.experiments.values())

    def __len__(self):
        return len(self.experiments)


def child_seed(rng: np.random.Generator) -> int:
    """A seed drawn from rng, for generators that have to restart identically on several grids"""
    return int(rng.integers(0, 2 ** 31))


def relative_spread(values) -> float:
    """max/min - 1 over positive values"""
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min() - 1)
