"""Reading data sets and writing reports.

Data files hold one (x1, x2) pair per line, separated by a comma or by
whitespace. Text after '#' is a comment. A first line that does not parse as
two numbers is taken as a header.

Reports are pydantic models serialized with sorted keys, so the same analysis
always produces the same bytes.
"""

import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, validate_arguments

from . import __version__
from .abstract import DensityKind
from .exceptions import DataError, DomainError
from .fit import FitReport
from .gof import CriteriaSet, KSResult, LRTResult

FIELD_SPLIT = re.compile(r"[,\s]+")
HEADER = ("x1", "x2")


class DatasetFile(BaseModel):
    """Validated pairs read from (or written to) a text file.

    Attributes:
        rows: (n, 2) array of finite, positive values after rescaling
        header: Column names, if the file had a header line
        source: Where the rows came from
        rescale: The factor every value was multiplied by
    """

    rows: np.ndarray
    header: Optional[List[str]] = None
    source: Optional[str] = None
    rescale: float = 1.0

    class Config:
        arbitrary_types_allowed = True

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


def _fields(line: str) -> List[str]:
    return [f for f in FIELD_SPLIT.split(line.strip()) if f]


def _as_pair(fields: List[str]) -> Optional[List[float]]:
    if len(fields) != 2:
        return None
    try:
        return [float(fields[0]), float(fields[1])]
    except ValueError:
        return None


def parse_dataset(
    lines: Iterable[str], source: Optional[str] = None, rescale: float = 1.0
) -> DatasetFile:
    """Parse data lines; errors name the 1-based line they occur on.

    Raises:
        DataError: On malformed lines or values that are not finite and > 0
            after rescaling
        DomainError: If rescale is not finite and > 0
    """
    if not (np.isfinite(rescale) and rescale > 0):
        raise DomainError(f"rescale must be finite and > 0, got {rescale}")
    header = None
    rows: List[List[float]] = []
    seen_content = False
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        fields = _fields(line)
        if not fields:
            continue
        pair = _as_pair(fields)
        if pair is None:
            if not seen_content and len(fields) == 2:
                header = fields
                seen_content = True
                continue
            raise DataError(f"expected two numbers, got {line.strip()!r}", row=line_no)
        seen_content = True
        x1, x2 = pair[0] * rescale, pair[1] * rescale
        if not (np.isfinite(x1) and np.isfinite(x2) and x1 > 0 and x2 > 0):
            raise DataError(f"values must be finite and > 0, got ({x1}, {x2})", row=line_no)
        rows.append([x1, x2])

    arr = np.array(rows, dtype=float).reshape(-1, 2)
    logger.info("Read {} pairs from {}", arr.shape[0], source or "<stream>")
    return DatasetFile(rows=arr, header=header, source=source, rescale=rescale)


@validate_arguments
def read_dataset(path: Path, rescale: float = 1.0) -> DatasetFile:
    """Read a data file.

    Raises:
        DataError: If the file cannot be read or a line is malformed
    """
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}") from e
    return parse_dataset(text.splitlines(), source=str(path), rescale=rescale)


def format_dataset(rows: np.ndarray) -> str:
    """Render pairs with a header and 17 significant digits, which round-trips floats."""
    lines = [",".join(HEADER)]
    lines.extend(f"{format(x1, '.17g')},{format(x2, '.17g')}" for x1, x2 in np.asarray(rows))
    return "\n".join(lines) + "\n"


def write_dataset(rows: np.ndarray, out: Union[Path, TextIO]) -> None:
    text = format_dataset(rows)
    if isinstance(out, Path):
        out.write_text(text)
        logger.info("Wrote {} pairs to {}", len(rows), out)
    else:
        out.write(text)


class ModelSummary(BaseModel):
    """One fitted model as it appears in a report."""

    model: str
    method: str
    parameters: Dict[str, float]
    se: Dict[str, Optional[float]]
    k: int
    loglik: float
    criteria: Optional[CriteriaSet]
    iterations: int
    converged: bool
    trace: List[float] = []
    flags: List[str] = []

    @classmethod
    def from_fit(cls, report: FitReport) -> "ModelSummary":
        return cls(
            model=report.family_id,
            method=report.method,
            parameters=report.theta_hat.to_dict(),
            se=report.se,
            k=report.k,
            loglik=report.loglik,
            criteria=report.criteria,
            iterations=report.iterations,
            converged=report.converged,
            trace=report.trace,
            flags=report.flags,
        )


class EvaluationRecord(BaseModel):
    what: str
    x1: float
    x2: float
    value: float
    region: str
    kind: Optional[DensityKind] = None


class SampleCounts(BaseModel):
    n: int
    n0: int
    n1: int
    n2: int


class ReportDocument(BaseModel):
    """The single structured document every subcommand emits."""

    command: str
    version: str = __version__
    source: Optional[str] = None
    output: Optional[str] = None
    seed: Optional[int] = None
    tie_eps: Optional[float] = None
    rescale: Optional[float] = None
    counts: Optional[SampleCounts] = None
    parameters: Optional[Dict[str, float]] = None
    models: List[ModelSummary] = []
    ks: List[KSResult] = []
    lrt: List[LRTResult] = []
    evaluation: Optional[EvaluationRecord] = None
    flags: List[str] = []

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.models)

    def dumps(self) -> str:
        return self.json(sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "ReportDocument":
        return cls.parse_raw(text)


def write_report(doc: ReportDocument, out: Optional[Path] = None) -> str:
    """Serialize doc to out, or return the text for stdout when out is None."""
    text = doc.dumps() + "\n"
    if out is not None:
        out.write_text(text)
        logger.info("Wrote {} report to {}", doc.command, out)
    return text
