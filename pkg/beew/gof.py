"""Model selection and goodness of fit.

Information criteria, one-sample Kolmogorov-Smirnov tests with asymptotic
p-values, and likelihood ratio tests between nested families.
"""

from enum import Enum
from typing import TYPE_CHECKING, List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel
from scipy import special, stats

from .bivariate import BEEWParams, marginal, max_cdf
from .eew import eew_cdf
from .exceptions import DomainError, NestingError
from .hfamily import family_class

if TYPE_CHECKING:
    from .fit import FitReport

BOUNDARY_EPS = 1e-6
NEGATIVE_SLACK = 1e-6


class KSTarget(str, Enum):
    """The law a K-S test compares against."""

    X1 = "x1"
    X2 = "x2"
    MAX = "max"


class CriteriaSet(BaseModel):
    k: int
    n: int
    loglik: float
    aic: float
    aicc: float
    bic: float


class KSResult(BaseModel):
    statistic: float
    n: int
    p_value: float
    target: Optional[KSTarget] = None


class LRTResult(BaseModel):
    """Likelihood ratio test of a base family against a family nesting it.

    boundary is set when the statistic is numerically 0 or a parameter of the
    full fit sits at the edge of its domain; the chi-square reference is then
    unreliable.
    """

    base: Optional[str] = None
    full: Optional[str] = None
    statistic: float
    df: int
    p_value: float
    boundary: bool = False


def criteria(k: int, n: int, loglik: float) -> CriteriaSet:
    """AIC = 2k - 2l, AICC = AIC + 2k(k+1)/(n-k-1), BIC = k ln(n) - 2l.

    Raises:
        DomainError: If n <= k + 1, where AICC is undefined
    """
    if n <= k + 1:
        raise DomainError(f"AICC needs n > k + 1 (n={n}, k={k})")
    aic = 2.0 * k - 2.0 * loglik
    return CriteriaSet(
        k=k,
        n=n,
        loglik=loglik,
        aic=aic,
        aicc=aic + 2.0 * k * (k + 1) / (n - k - 1),
        bic=k * np.log(n) - 2.0 * loglik,
    )


def kolmogorov_pvalue(statistic: float, n: int) -> float:
    """Asymptotic two-sided p-value Q(sqrt(n) D), without small-sample correction."""
    if n < 1:
        raise DomainError(f"K-S needs n >= 1, got {n}")
    if not 0.0 <= statistic <= 1.0:
        raise DomainError(f"K-S statistic must lie in [0, 1], got {statistic}")
    return float(np.clip(special.kolmogorov(np.sqrt(n) * statistic), 0.0, 1.0))


def ks_test(sample, cdf, target: Optional[KSTarget] = None) -> KSResult:
    """One-sample K-S test of sample against the vectorized cdf."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("K-S needs a non-empty sample")
    statistic = float(stats.kstest(x, cdf).statistic)
    return KSResult(
        statistic=statistic,
        n=int(x.size),
        p_value=kolmogorov_pvalue(statistic, x.size),
        target=target,
    )


def ks_triplet(theta: BEEWParams, pairs) -> List[KSResult]:
    """K-S tests of X1, X2 and max(X1, X2) against their laws under theta.

    X1 ~ EEW(a1 + a3), X2 ~ EEW(a2 + a3) and max(X1, X2) ~ EEW(a1 + a2 + a3).
    """
    arr = np.asarray(pairs, dtype=float)
    x1, x2 = arr[:, 0], arr[:, 1]
    m1, m2 = marginal(theta, 1), marginal(theta, 2)
    return [
        ks_test(x1, lambda x: eew_cdf(m1, x), KSTarget.X1),
        ks_test(x2, lambda x: eew_cdf(m2, x), KSTarget.X2),
        ks_test(np.maximum(x1, x2), lambda x: max_cdf(theta, x), KSTarget.MAX),
    ]


def lrt_from_logliks(
    loglik_base: float,
    loglik_full: float,
    df: int,
    base: Optional[str] = None,
    full: Optional[str] = None,
    boundary: bool = False,
) -> LRTResult:
    """LRT with statistic 2 (l_full - l_base) against chi-square(df).

    Statistics down to -NEGATIVE_SLACK are optimizer noise and test as 0.
    """
    if df < 1:
        raise NestingError(f"LRT needs df >= 1, got {df}")
    statistic = 2.0 * (loglik_full - loglik_base)
    if statistic < -NEGATIVE_SLACK:
        logger.warning("LRT statistic {} is negative: the full fit is worse than the base", statistic)
    boundary = boundary or statistic < BOUNDARY_EPS
    return LRTResult(
        base=base,
        full=full,
        statistic=statistic,
        df=df,
        p_value=float(stats.chi2.sf(max(statistic, 0.0), df)),
        boundary=boundary,
    )


def check_nested(base_id: str, full_id: str) -> int:
    """Return k_full - k_base for a nested pair of family ids.

    Raises:
        NestingError: If full does not nest base, or the counts are not increasing
    """
    base_cls, full_cls = family_class(base_id), family_class(full_id)
    k_base = 3 + (not base_cls.lambda_fixed) + len(base_cls.param_names)
    k_full = 3 + (not full_cls.lambda_fixed) + len(full_cls.param_names)
    if k_full == k_base:
        raise NestingError(f"{base_id} vs {full_id}: not nested (equal k)")
    if k_full < k_base or base_id not in full_cls.nests:
        raise NestingError(f"{base_id} is not nested in {full_id}")
    return k_full - k_base


def lrt(base: "FitReport", full: "FitReport") -> LRTResult:
    """Test the fitted base model against the fitted full model on the same data."""
    base_id, full_id = base.theta_hat.fam.family_id, full.theta_hat.fam.family_id
    df = check_nested(base_id, full_id)
    if base.n != full.n:
        raise NestingError(f"fits use different samples (n={base.n} vs n={full.n})")
    at_edge = any(v < BOUNDARY_EPS for v in full.theta_hat.fam.xi)
    result = lrt_from_logliks(base.loglik, full.loglik, df, base_id, full_id, at_edge)
    if result.boundary:
        logger.warning("LRT {} vs {} is at the parameter boundary", base_id, full_id)
    return result
