"""
opmult experiments

Every experiment is a function registered on a Router together with its pydantic config model.
Configs are JSON documents selected by their "experiment" field.
"""
import functools
import json
import logging
import time
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import Field, TypeAdapter, ValidationError
from typing_extensions import Annotated

from opmult import __version__
from opmult.config import setting
from opmult.experiments.basics import router as basics_router
from opmult.experiments.common import ConfigError, ExperimentConfig, ExperimentError, Router
from opmult.experiments.littlewood_paley import router as littlewood_paley_router
from opmult.experiments.sparse_bounds import router as sparse_router
from opmult.experiments.symbol_checks import router as symbols_router
from opmult.report import Provenance, Report, to_jsonable

registry = Router("all")
registry.include_router(basics_router)
registry.include_router(littlewood_paley_router)
registry.include_router(symbols_router)
registry.include_router(sparse_router)


@functools.lru_cache()
def config_adapter() -> TypeAdapter:
    models = tuple(e.config for e in registry)
    return TypeAdapter(Annotated[Union[models], Field(discriminator="experiment")])  # type: ignore


def parse_config(source: Union[str, Path, dict]) -> ExperimentConfig:
    """Validate a config file (or an already loaded dict) against the schema of its experiment"""
    try:
        if isinstance(source, dict):
            return config_adapter().validate_python(source)
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"Config file {path} does not exist")
        text = path.read_text()
        if not text.strip():
            raise ConfigError(f"Config file {path} is empty")
        return config_adapter().validate_json(text)
    except ValidationError as e:
        errors = e.errors(include_url=False)
        messages = "; ".join(f"{'.'.join(str(x) for x in err['loc'])}: {err['msg']}" for err in errors)
        raise ConfigError(f"Invalid config {source}: {messages}", errors)


def schema() -> dict:
    """Versioned JSON schema of all experiment configs"""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "opmult experiment config",
        "version": __version__,
        **config_adapter().json_schema(),
    }


def run(config: ExperimentConfig, seed: Optional[int] = None) -> Report:
    """Run one validated config; the generator is seeded from the argument, the config or the settings"""
    experiment = registry[config.experiment]
    seed = seed if seed is not None else setting(config.seed, "default_seed")
    rng = np.random.default_rng(seed)
    logging.info(f"Running {experiment.name} with seed {seed}")
    start = time.perf_counter()
    try:
        results, criteria = experiment.func(config, rng)
    except ValueError as e:
        raise ExperimentError(experiment.name, e) from e
    elapsed = time.perf_counter() - start
    report = Report(
        experiment=experiment.name,
        config=json.loads(config.model_dump_json()),
        results=to_jsonable(results),
        criteria=criteria,
        provenance=Provenance(seed=seed),
        timing=dict(seconds=elapsed),
    )
    for failed in report.failing():
        logging.warning(f"{experiment.name}: criterion {failed.name!r} failed ({failed.value} vs {failed.threshold})")
    return report


__all__ = ["ConfigError", "ExperimentError", "parse_config", "registry", "run", "schema"]
