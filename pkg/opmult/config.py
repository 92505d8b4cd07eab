"""
opmult Configuration

Numerical defaults are read from 2 sources, in order of precedence (higher is more priority)
- Environment variables (prefix OPMULT_)
- A .env file, either in the current working directory or in a location specified
  by the OPMULT_ENV_FILE environment variable

Library functions take explicit keyword arguments and only fall back to these settings
when an argument is left at None.
"""
import functools
from enum import Enum
from pathlib import Path
from class_doc import extract_docs_from_cls_obj
from dotenv import load_dotenv
from pydantic import model_validator, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class ReportFormat(str, Enum):
    #: a single JSON document with config echo, results, criteria and provenance
    json = "json"

    #: one row per criterion: experiment, criterion, value, threshold, passed
    csv = "csv"

    @classmethod
    def validate(cls, value: str):
        if value not in cls.__members__:
            options = ", ".join(ReportFormat.__members__.keys())
            return f"{value} is not a valid report format. Choose one of {{{options}}}"


for field, doc in extract_docs_from_cls_obj(ReportFormat).items():
    ReportFormat[field].__doc__ = "\n".join(doc)


class Settings(BaseSettings):
    env_file: Path = Field(
        ".env",
        description="Location of a .env file (if used) relative to working directory",
    )

    quadrature_resolution: int = Field(
        512,
        ge=16,
        description="Midpoint nodes per axis when averaging a weight over a box without a closed form",
    )

    fd_points_per_decade: int = Field(
        64,
        ge=1,
        description="Density of the log-spaced frequency ladder used by Mikhlin norms",
    )

    fd_relative_step: float = Field(
        1e-4,
        gt=0,
        description="Central finite-difference step, relative to |xi|, when no derivative closure is given",
    )

    ladder_exponent: int = Field(
        12,
        ge=1,
        description="Frequency ladders span 2^-ladder_exponent <= |xi| <= 2^ladder_exponent",
    )

    exhaustive_sign_limit: int = Field(
        12,
        ge=1,
        le=20,
        description="Largest number of active family members for which all sign patterns are enumerated",
    )

    monte_carlo_samples: int = Field(
        1000,
        ge=100,
        description="Number of random sign patterns when enumeration is too expensive",
    )

    sparse_beta: float = Field(
        16.0,
        gt=1,
        description="Initial stopping threshold of the sparse domination recursion",
    )

    exceptional_fraction: float = Field(
        0.005,
        ge=0,
        lt=1,
        description="Fraction of nodes allowed to violate the measured sparse domination constant",
    )

    bounded_ratio: float = Field(
        1.1,
        gt=1,
        description="Divergence probe: growth per ladder step at or below this value counts as BOUNDED",
    )

    diverging_ratio: float = Field(
        1.2,
        gt=1,
        description="Divergence probe: sustained growth per ladder step at or above this value counts as DIVERGING",
    )

    workers: int = Field(
        1,
        ge=1,
        description="Number of worker processes for candidate searches and independent configs",
    )

    default_seed: int = Field(
        0,
        ge=0,
        description="Seed used by experiments when neither the config nor the command line sets one",
    )

    report_format: ReportFormat = Field(
        ReportFormat.json, description="Default output format of experiment reports"
    )

    @model_validator(mode="after")
    def check_ratios(self) -> "Settings":
        if self.diverging_ratio < self.bounded_ratio:
            raise ValueError(
                f"diverging_ratio ({self.diverging_ratio}) must not be below bounded_ratio ({self.bounded_ratio})"
            )
        return self

    model_config = SettingsConfigDict(env_prefix="opmult_")


@functools.lru_cache()
def get_settings() -> Settings:
    # The first instance is only needed to locate the .env file
    temp = Settings()
    load_dotenv(temp.env_file, override=False)
    return Settings()


def setting(value, name: str):
    """Return value, or the named setting if value is None"""
    return getattr(get_settings(), name) if value is None else value


if __name__ == "__main__":
    # Echo the settings
    for k, v in get_settings().model_dump().items():
        print(f"{Settings.model_config['env_prefix'].upper()}{k.upper()}={v}")
