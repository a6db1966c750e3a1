"""Univariate exponentiated extended Weibull (EEW) distribution.

cdf  F(x) = (1 - exp(-lambda H(x; xi)))^alpha
pdf  f(x) = alpha lambda h(x; xi) exp(-lambda H) (1 - exp(-lambda H))^(alpha - 1)

Every evaluator accepts scalars or numpy arrays and returns the same shape.
"""

from typing import List, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, validator
from scipy.optimize import minimize

from .abstract import TINY, HFamily
from .exceptions import DomainError

LN2 = float(np.log(2.0))
# beyond this lambda H the factor exp(-lambda H) underflows and the cdf is 1
EXP_UNDERFLOW = 745.0


class EEWParams(BaseModel):
    """Parameters of EEW(alpha, lambda, xi); xi lives in the family."""

    alpha: float
    lam: float = Field(..., alias="lambda")
    fam: HFamily

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        allow_population_by_field_name = True

    @validator("alpha", "lam")
    def _positive(cls, v, field):
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{field.alias} must be finite and > 0, got {v}")
        return v

    def __hash__(self) -> int:
        return hash((self.alpha, self.lam, self.fam))


def _scalar(out: np.ndarray):
    return out if np.ndim(out) else float(out)


def log1mexp(t):
    """log(1 - exp(-t)) for t >= 0, accurate at both ends.

    Small t goes through expm1, large t through log1p; the switch is at ln 2.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(t <= LN2, np.log(-np.expm1(-t)), np.log1p(-np.exp(-t)))


def _level(lam: float, fam: HFamily, x: np.ndarray) -> np.ndarray:
    safe = np.where(x > 0, x, 1.0)
    return lam * fam.H(safe)


def log_base_cdf(lam: float, fam: HFamily, x) -> np.ndarray:
    """W(x) = log(1 - exp(-lambda H(x; xi))), the log of the EW cdf.

    W(x) is -inf for x <= 0.
    """
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, log1mexp(_level(lam, fam, x)), -np.inf)


def eew_cdf(p: EEWParams, x):
    """Return F(x) = (1 - exp(-lambda H(x)))^alpha; 0 for x <= 0."""
    x = np.asarray(x, dtype=float)
    t = _level(p.lam, p.fam, x)
    with np.errstate(over="ignore"):
        inner = np.where(t > EXP_UNDERFLOW, 1.0, np.exp(p.alpha * log1mexp(t)))
    return _scalar(np.where(x > 0, inner, 0.0))


def eew_logpdf(p: EEWParams, x):
    """Return log f(x) computed in log space; -inf for x <= 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    t = p.lam * p.fam.H(safe)
    with np.errstate(invalid="ignore"):
        out = (
            np.log(p.alpha)
            + np.log(p.lam)
            + p.fam.log_h(safe)
            - t
            + (p.alpha - 1.0) * log1mexp(t)
        )
    out = np.where(np.isnan(out), -np.inf, out)
    return _scalar(np.where(x > 0, out, -np.inf))


def eew_pdf(p: EEWParams, x):
    """Return f(x); 0 for x <= 0."""
    return _scalar(np.exp(eew_logpdf(p, x)))


def eew_quantile(p: EEWParams, u):
    """Return x with F(x) = u for 0 < u < 1.

    x = H^-1(-log(1 - u^(1/alpha)) / lambda), with log(1 - u^(1/alpha)) taken
    through log1mexp so that u close to 0 or 1 keeps its precision. Levels
    that underflow are raised to the smallest normal float, so x stays > 0.

    Raises:
        DomainError: If any u lies outside (0, 1)
    """
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0)) or np.any(~(u < 1)):
        raise DomainError("quantile needs 0 < u < 1")
    level = np.maximum(-log1mexp(-np.log(u) / p.alpha) / p.lam, TINY)
    return p.fam.inverse(level if level.ndim else float(level))


def eew_sample(p: EEWParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n i.i.d. values by inverting uniforms from rng."""
    if n < 0:
        raise DomainError(f"sample size must be >= 0, got {n}")
    u = rng.random(n)
    # Generator.random draws from [0, 1)
    u[u == 0.0] = np.finfo(float).tiny
    return np.asarray(eew_quantile(p, u), dtype=float)


class EEWProfileFit(BaseModel):
    """Result of a shared-(lambda, xi) fit of several EEW samples."""

    alphas: List[float]
    lam: float
    fam: HFamily
    loglik: float
    converged: bool

    class Config:
        arbitrary_types_allowed = True


def _profile_loglik(groups: Sequence[np.ndarray], lam: float, fam: HFamily) -> float:
    total = 0.0
    for x in groups:
        n = x.size
        w = log_base_cdf(lam, fam, x)
        sum_w = float(np.sum(w))
        if not np.isfinite(sum_w) or sum_w >= 0:
            return -np.inf
        alpha = -n / sum_w
        total += (
            n * np.log(alpha)
            + n * np.log(lam)
            + float(np.sum(fam.log_h(x)))
            - lam * float(np.sum(fam.H(x)))
            - n
            - sum_w
        )
    return total


def _profile_alphas(groups: Sequence[np.ndarray], lam: float, fam: HFamily) -> List[float]:
    return [-x.size / float(np.sum(log_base_cdf(lam, fam, x))) for x in groups]


def eew_fit_profile(
    groups: Sequence[np.ndarray],
    fam: HFamily,
    lam0: Optional[float] = None,
    max_iter: int = 4000,
) -> EEWProfileFit:
    """Fit EEW(alpha_g, lambda, xi) to each group g with lambda and xi shared.

    For fixed (lambda, xi) the shape of each group has the closed form
    alpha_g = -n_g / sum W(x), so only (lambda, xi) are searched, by
    Nelder-Mead over their logarithms, starting from fam.xi.

    Args:
        groups: One array of positive observations per group
        fam: The family, whose current xi is the starting point
        lam0: Starting lambda. Defaults to 1 / mean(H(x)) over all groups.
        max_iter: Simplex iteration cap

    Returns:
        EEWProfileFit: Shapes per group, shared lambda and family, loglik
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    if not groups or any(g.size == 0 for g in groups):
        raise DomainError("profile fit needs non-empty groups")
    if fam.lambda_fixed:
        lam0 = 1.0
    elif lam0 is None:
        lam0 = 1.0 / float(np.mean(np.concatenate([fam.H(g) for g in groups])))
    free_lam = not fam.lambda_fixed

    def unpack(z: np.ndarray):
        values = np.exp(z)
        lam = float(values[0]) if free_lam else 1.0
        xi = values[1:] if free_lam else values
        return lam, fam.with_xi(xi)

    def objective(z: np.ndarray) -> float:
        try:
            lam, trial = unpack(z)
        except (DomainError, OverflowError):
            return np.inf
        value = _profile_loglik(groups, lam, trial)
        return -value if np.isfinite(value) else np.inf

    start = np.log(np.array(([lam0] if free_lam else []) + list(fam.xi), dtype=float))
    if start.size == 0:
        lam, best = 1.0, fam
        converged = True
    else:
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-8, "fatol": 1e-10, "adaptive": True},
        )
        best_z = result.x if result.fun <= objective(start) else start
        lam, best = unpack(best_z)
        converged = bool(result.success)
        logger.debug("EEW profile fit: lambda={} xi={} ({})", lam, best.xi, result.message)

    return EEWProfileFit(
        alphas=_profile_alphas(groups, lam, best),
        lam=lam,
        fam=best,
        loglik=_profile_loglik(groups, lam, best),
        converged=converged,
    )
