# Defines an API tying data files, models, fitting and tests together.


from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from loguru import logger

from . import bivariate
from .abstract import DensityKind, Region
from .bivariate import BEEWParams
from .dataio import (
    DatasetFile,
    EvaluationRecord,
    ModelSummary,
    ReportDocument,
    SampleCounts,
    read_dataset,
    write_dataset,
)
from .exceptions import DomainError
from .fit import ClassifiedSample, FitReport, classify, get_estimator, initial_theta
from .gof import check_nested, ks_triplet, lrt
from .hfamily import make_family
from .settings import Settings

EVALUATIONS = ("pdf", "cdf", "survival", "hazard", "conditional")
NESTING_SLACK = 1e-6


def parse_assignments(text: Optional[str]) -> Dict[str, float]:
    """Parse "name=value,name=value" into a dict.

    Raises:
        DomainError: On an entry without '=', a repeated name or a value that
            is not a number
    """
    out: Dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise DomainError(f"expected name=value, got {item!r}")
        if name in out:
            raise DomainError(f"{name} given twice")
        try:
            out[name] = float(value)
        except ValueError:
            raise DomainError(f"{name}: {value!r} is not a number") from None
    return out


def build_theta(model: str, values: Dict[str, float]) -> BEEWParams:
    """Parameters of model from named values; see BEEWParams.from_dict."""
    return BEEWParams.from_dict(model, values)


def _counts(sample: ClassifiedSample) -> SampleCounts:
    return SampleCounts(n=sample.n, n0=sample.n0, n1=sample.n1, n2=sample.n2)


class API:
    """Runs the analyses behind each command.

    Attributes:
        settings (Settings): Defaults for tolerances, iteration caps and seed
        method (str): The estimator to fit with, "em" or "direct"
    """

    def __init__(self, settings: Settings, method: str = "em") -> None:
        self.settings = settings
        self.method = method

    def load(
        self, data: Path, tie_eps: Optional[float] = None, rescale: float = 1.0
    ) -> Tuple[DatasetFile, ClassifiedSample]:
        """Read and classify a data file."""
        tie_eps = self.settings.tie_eps if tie_eps is None else tie_eps
        dataset = read_dataset(data, rescale)
        return dataset, classify(dataset.rows, tie_eps)

    def fit(
        self,
        sample: ClassifiedSample,
        model: str,
        init: Optional[Dict[str, float]] = None,
        max_iter: Optional[int] = None,
        rel_tol: Optional[float] = None,
    ) -> FitReport:
        """Fit model to sample.

        Values in init replace the matching entries of the heuristic start.
        """
        fam = make_family(model)
        theta0 = None
        if init:
            start = initial_theta(sample, fam).to_dict()
            start.update(init)
            theta0 = build_theta(model, start)
        estimator = get_estimator(
            self.method,
            fam,
            self.settings.max_iter if max_iter is None else max_iter,
            self.settings.rel_tol if rel_tol is None else rel_tol,
        )
        logger.info("Fitting {} with {}", model, estimator.method)
        return estimator.fit(sample, theta0)

    def analyze(
        self,
        data: Path,
        model: str,
        tie_eps: Optional[float] = None,
        rescale: float = 1.0,
        init: Optional[Dict[str, float]] = None,
        max_iter: Optional[int] = None,
        rel_tol: Optional[float] = None,
    ) -> ReportDocument:
        """Fit model to a data file and test the fit.

        Runs classify, the fit, standard errors, criteria and the K-S triplet.
        """
        dataset, sample = self.load(data, tie_eps, rescale)
        report = self.fit(sample, model, init, max_iter, rel_tol)
        return ReportDocument(
            command="fit",
            source=dataset.source,
            tie_eps=sample.tie_eps,
            rescale=dataset.rescale,
            counts=_counts(sample),
            models=[ModelSummary.from_fit(report)],
            ks=ks_triplet(report.theta_hat, sample.pairs),
            flags=list(report.flags),
        )

    def simulate(
        self,
        model: str,
        theta: Dict[str, float],
        n: int,
        seed: Optional[int] = None,
        out: Union[Path, TextIO, None] = None,
    ) -> Tuple[DatasetFile, ReportDocument]:
        """Draw n pairs from the model and write them to out.

        The generator is numpy's PCG64 seeded with seed, so a seed, parameter
        set and package version always give the same file.
        """
        params = build_theta(model, theta)
        if n < 0:
            raise DomainError(f"n must be >= 0, got {n}")
        seed = self.settings.seed if seed is None else seed
        rng = np.random.Generator(np.random.PCG64(seed))
        rows = bivariate.beew_sample(params, rng, n)
        if out is not None:
            write_dataset(rows, out)
        dataset = DatasetFile(
            rows=rows, header=["x1", "x2"], source=str(out) if isinstance(out, Path) else None
        )
        doc = ReportDocument(
            command="simulate",
            output=dataset.source,
            seed=seed,
            parameters=params.to_dict(),
            counts=_counts(classify(rows, 0.0)) if n else None,
        )
        return dataset, doc

    def evaluate(
        self,
        model: str,
        theta: Dict[str, float],
        x1: float,
        x2: float,
        what: str,
        tie_eps: Optional[float] = None,
    ) -> ReportDocument:
        """Evaluate one quantity at (x1, x2) and tag it with its region.

        conditional is the law of X1 given X2 = x2, at X1 = x1.
        """
        tie_eps = self.settings.tie_eps if tie_eps is None else tie_eps
        params = build_theta(model, theta)
        region = Region(int(bivariate.region_of(x1, x2, tie_eps)))
        kind: Optional[DensityKind] = None
        if what == "pdf":
            ev = bivariate.joint_pdf(params, x1, x2, tie_eps)
            value, kind = ev.value, ev.kind
        elif what == "hazard":
            ev = bivariate.bivariate_hazard(params, x1, x2, tie_eps)
            value, kind = ev.value, ev.kind
        elif what == "conditional":
            ev = bivariate.conditional_pdf(params, 1, x1, x2, tie_eps)
            value, kind = ev.value, ev.kind
        elif what == "cdf":
            value = float(bivariate.joint_cdf(params, x1, x2))
        elif what == "survival":
            value = float(bivariate.joint_survival(params, x1, x2))
        else:
            raise DomainError(f"what must be one of {EVALUATIONS}, got {what!r}")
        return ReportDocument(
            command="eval",
            tie_eps=tie_eps,
            parameters=params.to_dict(),
            evaluation=EvaluationRecord(
                what=what, x1=x1, x2=x2, value=value, region=region.name, kind=kind
            ),
        )

    def compare(
        self,
        data: Path,
        base: str,
        full: Sequence[str],
        tie_eps: Optional[float] = None,
        rescale: float = 1.0,
        max_iter: Optional[int] = None,
        rel_tol: Optional[float] = None,
    ) -> ReportDocument:
        """Fit base and every full model, then test base against each.

        Nesting is checked before anything is fitted. The fits run one after
        the other.
        """
        for model in full:
            check_nested(base, model)
        dataset, sample = self.load(data, tie_eps, rescale)
        base_report = self.fit(sample, base, max_iter=max_iter, rel_tol=rel_tol)
        reports: List[FitReport] = [base_report]
        tests = []
        flags = list(base_report.flags)
        for model in full:
            report = self.fit(sample, model, max_iter=max_iter, rel_tol=rel_tol)
            if report.loglik < base_report.loglik - NESTING_SLACK:
                logger.warning("{} fits worse than the nested {}", model, base)
                flags.append(f"{model} loglik below nested {base}")
            reports.append(report)
            tests.append(lrt(base_report, report))
            flags.extend(f"{model}: {flag}" for flag in report.flags)
        return ReportDocument(
            command="compare",
            source=dataset.source,
            tie_eps=sample.tie_eps,
            rescale=dataset.rescale,
            counts=_counts(sample),
            models=[ModelSummary.from_fit(r) for r in reports],
            lrt=tests,
            flags=flags,
        )

    def goodness_of_fit(
        self,
        data: Path,
        model: str,
        theta: Optional[Dict[str, float]] = None,
        tie_eps: Optional[float] = None,
        rescale: float = 1.0,
        max_iter: Optional[int] = None,
        rel_tol: Optional[float] = None,
    ) -> ReportDocument:
        """K-S triplet for theta on a data file, fitting model first when theta is None."""
        dataset, sample = self.load(data, tie_eps, rescale)
        models: List[ModelSummary] = []
        flags: List[str] = []
        if theta:
            params = build_theta(model, theta)
        else:
            report = self.fit(sample, model, max_iter=max_iter, rel_tol=rel_tol)
            params = report.theta_hat
            models.append(ModelSummary.from_fit(report))
            flags.extend(report.flags)
        return ReportDocument(
            command="gof",
            source=dataset.source,
            tie_eps=sample.tie_eps,
            rescale=dataset.rescale,
            counts=_counts(sample),
            parameters=params.to_dict(),
            models=models,
            ks=ks_triplet(params, sample.pairs),
            flags=flags,
        )


@lru_cache()
def get_api(settings: Settings, method: str = "em") -> API:
    """Return an API instance.

    The result is cached so the same instance is returned for subsequent calls.

    Args:
        settings (Settings): The settings to draw defaults from
        method (str, optional): "em" or "direct". Defaults to "em".

    Returns:
        API: An API instance
    """
    return API(settings, method)
