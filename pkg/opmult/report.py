"""
Experiment reports

A Report carries the experiment id, the validated config, scalar results, one pass/fail
Criterion per acceptance check and the provenance (library version and seed). Wall-clock
timing lives in its own field and is left out when reports are compared.
"""
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from opmult import __version__
from opmult.config import ReportFormat

CSV_COLUMNS = ["experiment", "criterion", "value", "threshold", "passed"]

COMPARISONS = {
    "<=": lambda value, threshold: value <= threshold,
    ">=": lambda value, threshold: value >= threshold,
    "==": lambda value, threshold: value == threshold,
}


class ReportError(ValueError):
    pass


class Criterion(BaseModel):
    name: str
    value: Union[float, str]
    threshold: Union[float, str, None] = None
    comparison: str = "<="
    passed: bool


class Provenance(BaseModel):
    version: str = __version__
    seed: int


class Report(BaseModel):
    experiment: str
    config: Dict[str, Any]
    results: Dict[str, Any] = Field(default_factory=dict)
    criteria: List[Criterion] = Field(default_factory=list)
    provenance: Provenance
    timing: Optional[Dict[str, float]] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def failing(self) -> List[Criterion]:
        return [c for c in self.criteria if not c.passed]

    def rows(self) -> List[dict]:
        return [
            dict(experiment=self.experiment, criterion=c.name, value=c.value, threshold=c.threshold, passed=c.passed)
            for c in self.criteria
        ]


def check(name: str, value, threshold, comparison: str = "<=") -> Criterion:
    """A criterion comparing a measured value against a threshold; string values compare for equality"""
    if comparison not in COMPARISONS:
        raise ReportError(f"Unknown comparison {comparison!r}")
    value = to_jsonable(value)
    threshold = to_jsonable(threshold)
    passed = bool(COMPARISONS[comparison](value, threshold)) if value == value else False
    return Criterion(name=name, value=value, threshold=threshold, comparison=comparison, passed=passed)


def to_jsonable(value):
    """Convert numpy scalars, arrays and complex numbers into plain JSON values"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return dict(re=float(value.real), im=float(value.imag))
    if isinstance(value, np.floating):
        return float(value)
    return value


def render(reports: Sequence[Report], fmt: ReportFormat, timing: bool = True) -> str:
    if fmt == ReportFormat.csv:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerows(report.rows())
        return out.getvalue()
    exclude = None if timing else {"timing"}
    docs = [to_jsonable(r.model_dump(exclude=exclude)) for r in reports]
    return json.dumps(docs[0] if len(docs) == 1 else docs, indent=2, sort_keys=True) + "\n"


def emit_report(report: Union[Report, Sequence[Report]], fmt: Union[ReportFormat, str] = ReportFormat.json,
                path: Union[str, Path, None] = None, timing: bool = True) -> None:
    """Write one or more reports as JSON (sorted keys) or CSV to path, or to stdout if path is None"""
    reports = [report] if isinstance(report, Report) else list(report)
    try:
        fmt = ReportFormat(fmt)
    except ValueError:
        raise ReportError(ReportFormat.validate(str(fmt)))
    text = render(reports, fmt, timing)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise ReportError(f"Cannot write report to {path}: {e}")
