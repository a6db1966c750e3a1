"""Command line front end.

Reports go to stdout (or --out) as JSON; a readable summary goes to stderr.
Exit codes: 0 success, 2 usage, 3 data or domain error, 4 non-convergence.
"""

import sys
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .api import get_api, parse_assignments
from .dataio import ReportDocument, write_report
from .exceptions import ConvergenceError, DataError, DomainError, NestingError
from .hfamily import FAMILIES
from .settings import get_settings

EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4

ModelId = Enum("ModelId", {k: k for k in FAMILIES}, type=str)  # type: ignore


class What(str, Enum):
    pdf = "pdf"
    cdf = "cdf"
    survival = "survival"
    hazard = "hazard"
    conditional = "conditional"


class Method(str, Enum):
    em = "em"
    direct = "direct"


app = typer.Typer(help="Bivariate exponentiated extended Weibull models.")
err_console = Console(stderr=True)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output")):
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else get_settings().log_level)


@contextmanager
def _exit_codes() -> Iterator[None]:
    try:
        yield
    except (DomainError, DataError, NestingError, ValidationError) as e:
        err_console.print(f"[red]error:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_DATA)
    except ConvergenceError as e:
        err_console.print(f"[red]did not converge:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_NONCONVERGENCE)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.6g}"


def _summarize(doc: ReportDocument) -> None:
    if doc.models:
        table = Table(title=f"beew {doc.command}")
        table.add_column("")
        for m in doc.models:
            table.add_column(m.model, justify="right")
        names: List[str] = []
        for m in doc.models:
            names.extend(k for k in m.parameters if k not in names)
        for name in names:
            table.add_row(
                name,
                *[
                    f"{_fmt(m.parameters.get(name))} ({_fmt(m.se.get(name))})"
                    if name in m.parameters
                    else ""
                    for m in doc.models
                ],
            )
        table.add_row("-log L", *[_fmt(-m.loglik) for m in doc.models])
        for crit in ("aic", "aicc", "bic"):
            table.add_row(
                crit.upper(),
                *[_fmt(getattr(m.criteria, crit)) if m.criteria else "-" for m in doc.models],
            )
        by_full = {t.full: t for t in doc.lrt}
        if by_full:
            table.add_row(
                "LRT",
                *[
                    f"{by_full[m.model].statistic:.3f} ({by_full[m.model].p_value:.4f})"
                    if m.model in by_full
                    else ""
                    for m in doc.models
                ],
            )
        err_console.print(table)
    if doc.ks:
        table = Table(title="Kolmogorov-Smirnov")
        for column in ("target", "D", "p-value"):
            table.add_column(column)
        for ks in doc.ks:
            target = ks.target.value if ks.target else ""
            table.add_row(target, f"{ks.statistic:.4f}", f"{ks.p_value:.4f}")
        err_console.print(table)
    if doc.evaluation:
        ev = doc.evaluation
        kind = f" {ev.kind.value}" if ev.kind else ""
        err_console.print(
            f"{ev.what}({ev.x1}, {ev.x2}) = {ev.value:.10g} [{ev.region}{kind}]", markup=False
        )
    for flag in doc.flags:
        err_console.print(f"[yellow]flag:[/yellow] {escape(flag)}")


def _emit(doc: ReportDocument, out: Optional[Path]) -> None:
    text = write_report(doc, out)
    if out is None:
        typer.echo(text, nl=False)
    _summarize(doc)
    if not doc.converged:
        raise typer.Exit(EXIT_NONCONVERGENCE)


@app.command()
def fit(
    data: Path = typer.Option(..., "--data", help="Two-column data file"),
    model: ModelId = typer.Option(ModelId("exp"), "--model", help="Generator family"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the report here"),
    tie_eps: Optional[float] = typer.Option(
        None, "--tie-eps", help="Tie tolerance, scaled by max(1, |x1|)"
    ),
    rescale: float = typer.Option(1.0, "--rescale", help="Multiply every value by this"),
    init: Optional[str] = typer.Option(None, "--init", help="Start values name=value,..."),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    method: Method = typer.Option(Method.em, "--method", help="em or direct"),
):
    """Fit a model by maximum likelihood and test the fitted marginals."""
    with _exit_codes():
        doc = get_api(get_settings(), method.value).analyze(
            data, model.value, tie_eps, rescale, parse_assignments(init), max_iter, rel_tol
        )
    _emit(doc, out)


@app.command()
def simulate(
    theta: str = typer.Option(..., "--theta", help="Parameters name=value,..."),
    model: ModelId = typer.Option(ModelId("exp"), "--model"),
    n: int = typer.Option(100, "--n", min=0, help="Number of pairs"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the data here"),
):
    """Draw pairs from a model; data go to --out or stdout."""
    with _exit_codes():
        dataset, doc = get_api(get_settings()).simulate(
            model.value, parse_assignments(theta), n, seed, out if out else sys.stdout
        )
    if doc.counts:
        err_console.print(
            f"{doc.counts.n} pairs, {doc.counts.n0} ties, seed {doc.seed}", markup=False
        )


@app.command(name="eval")
def evaluate(
    theta: str = typer.Option(..., "--theta", help="Parameters name=value,..."),
    x1: float = typer.Option(..., "--x1"),
    x2: float = typer.Option(..., "--x2"),
    what: What = typer.Option(What.pdf, "--what"),
    model: ModelId = typer.Option(ModelId("exp"), "--model"),
    tie_eps: Optional[float] = typer.Option(None, "--tie-eps"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Evaluate pdf, cdf, survival, hazard or conditional density at a point."""
    with _exit_codes():
        doc = get_api(get_settings()).evaluate(
            model.value, parse_assignments(theta), x1, x2, what.value, tie_eps
        )
    _emit(doc, out)


@app.command()
def compare(
    data: Path = typer.Option(..., "--data"),
    full: List[ModelId] = typer.Option(..., "--full", help="Model(s) nesting the base"),
    base: ModelId = typer.Option(ModelId("exp"), "--base"),
    out: Optional[Path] = typer.Option(None, "--out"),
    tie_eps: Optional[float] = typer.Option(None, "--tie-eps"),
    rescale: float = typer.Option(1.0, "--rescale"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
):
    """Fit nested models and test the base against each with an LRT."""
    with _exit_codes():
        doc = get_api(get_settings()).compare(
            data, base.value, [m.value for m in full], tie_eps, rescale, max_iter, rel_tol
        )
    _emit(doc, out)


@app.command()
def gof(
    data: Path = typer.Option(..., "--data"),
    model: ModelId = typer.Option(ModelId("exp"), "--model"),
    theta: Optional[str] = typer.Option(
        None, "--theta", help="Test these parameters instead of a fit"
    ),
    out: Optional[Path] = typer.Option(None, "--out"),
    tie_eps: Optional[float] = typer.Option(None, "--tie-eps"),
    rescale: float = typer.Option(1.0, "--rescale"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
):
    """Kolmogorov-Smirnov tests of X1, X2 and max(X1, X2)."""
    with _exit_codes():
        doc = get_api(get_settings()).goodness_of_fit(
            data, model.value, parse_assignments(theta), tie_eps, rescale, max_iter, rel_tol
        )
    _emit(doc, out)
