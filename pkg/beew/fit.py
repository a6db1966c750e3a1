"""Maximum likelihood fitting of BEEW models.

The EM algorithm treats the ordering of (U1, U3) and (U2, U3) as missing. For
an observation with x1 < x2, x1 is U1 with probability u1 = a1 / (a1 + a3)
and U3 with probability u2 = 1 - u1; for x1 > x2 the same holds for x2 with
v1 = a2 / (a2 + a3) and v2 = 1 - v1. Each iteration then updates lambda (1-D
root of the pseudo score), xi (simplex search), and the three shapes (closed
form), in that order.

direct_fit maximizes the observed log-likelihood over all free parameters at
once and is kept as a cross-check for em_fit.
"""

from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel
from scipy.optimize import brentq, minimize

from .abstract import Estimator, HFamily, Region
from .bivariate import BEEWParams, branch_logpdf, region_of
from .eew import eew_fit_profile, log_base_cdf
from .exceptions import BEEWError, ConvergenceError, DataError, DomainError
from .gof import CriteriaSet, criteria
from .settings import get_settings

MAX_BRACKET_EXPANSIONS = 200
ASCENT_SLACK = 1e-8


class ClassifiedSample:
    """Bivariate observations split into ties (I0), x1 < x2 (I1) and x1 > x2 (I2).

    Attributes:
        x1, x2: The coordinates, in input order
        region: Region value per observation
        i0, i1, i2: Row indices of each index set
        tie_eps: The tolerance the split was made with
    """

    def __init__(self, pairs, tie_eps: float = 0.0) -> None:
        arr = np.asarray(pairs, dtype=float)
        if arr.size == 0:
            raise DataError("no data")
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DataError(f"expected (n, 2) pairs, got shape {arr.shape}")
        bad = ~(np.isfinite(arr).all(axis=1) & (arr > 0).all(axis=1))
        if bad.any():
            raise DataError(
                "coordinates must be finite and > 0", row=int(np.flatnonzero(bad)[0]) + 1
            )
        if tie_eps < 0:
            raise DomainError(f"tie_eps must be >= 0, got {tie_eps}")

        self.tie_eps = float(tie_eps)
        self.x1 = arr[:, 0].copy()
        self.x2 = arr[:, 1].copy()
        self.region = region_of(self.x1, self.x2, self.tie_eps)
        self.i0 = np.flatnonzero(self.region == Region.DIAGONAL)
        self.i1 = np.flatnonzero(self.region == Region.X1_LESS)
        self.i2 = np.flatnonzero(self.region == Region.X2_LESS)

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.x1, self.x2])

    @property
    def n(self) -> int:
        return int(self.x1.size)

    @property
    def n0(self) -> int:
        return int(self.i0.size)

    @property
    def n1(self) -> int:
        return int(self.i1.size)

    @property
    def n2(self) -> int:
        return int(self.i2.size)

    @property
    def tie_values(self) -> np.ndarray:
        """The common value x of each tie."""
        return 0.5 * (self.x1[self.i0] + self.x2[self.i0])

    def swapped(self) -> "ClassifiedSample":
        return ClassifiedSample(self.pairs[:, ::-1], self.tie_eps)

    def __repr__(self) -> str:
        return f"ClassifiedSample(n={self.n}, n0={self.n0}, n1={self.n1}, n2={self.n2})"


def classify(pairs, tie_eps: float = 0.0) -> ClassifiedSample:
    """Partition pairs into I0, I1 and I2.

    Raises:
        DataError: On empty input or a coordinate that is not finite and > 0;
            the error carries the 1-based row
    """
    sample = ClassifiedSample(pairs, tie_eps)
    logger.info("Classified sample: {}", sample)
    return sample


class EStepWeights(BaseModel):
    u1: float
    u2: float
    v1: float
    v2: float


class EMState(BaseModel):
    """One accepted EM iterate."""

    theta: BEEWParams
    weights: EStepWeights
    iteration: int
    loglik: float

    class Config:
        arbitrary_types_allowed = True


class FitReport(BaseModel):
    """Estimates and diagnostics of one fitted model."""

    method: str
    theta_hat: BEEWParams
    se: Dict[str, Optional[float]]
    loglik: float
    iterations: int
    converged: bool
    criteria: Optional[CriteriaSet]
    trace: List[float] = []
    flags: List[str] = []
    n: int
    n0: int
    n1: int
    n2: int

    class Config:
        arbitrary_types_allowed = True

    @property
    def k(self) -> int:
        return self.theta_hat.k

    @property
    def family_id(self) -> str:
        return self.theta_hat.fam.family_id


def loglik(theta: BEEWParams, s: ClassifiedSample) -> float:
    """Observed-data log-likelihood, summed branch by branch in log space.

    Returns -inf when any observation has zero density.
    """
    with np.errstate(invalid="ignore"):
        total = float(np.sum(branch_logpdf(theta, s.x1, s.x2, s.region)))
    return total if np.isfinite(total) else -np.inf


def loglik_vector(values: Sequence[float], template: BEEWParams, s: ClassifiedSample) -> float:
    """loglik at free parameter values ordered like template.free_values().

    Any non-positive or out-of-domain value gives -inf.
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        return -np.inf
    try:
        theta = template.with_free(values)
    except (ValueError, BEEWError):
        return -np.inf
    return loglik(theta, s)


def estep(theta: BEEWParams) -> EStepWeights:
    """Conditional probabilities of the latent orderings; they do not depend on the data."""
    u1 = theta.alpha1 / (theta.alpha1 + theta.alpha3)
    v1 = theta.alpha2 / (theta.alpha2 + theta.alpha3)
    return EStepWeights(u1=u1, u2=1.0 - u1, v1=v1, v2=1.0 - v1)


class _Levels:
    """W(x) and H(x) of every coordinate that enters the pseudo likelihood."""

    def __init__(self, s: ClassifiedSample, lam: float, fam: HFamily) -> None:
        self.x0 = s.tie_values
        self.x11, self.x12 = s.x1[s.i1], s.x2[s.i1]
        self.x21, self.x22 = s.x1[s.i2], s.x2[s.i2]
        w = lambda x: float(np.sum(log_base_cdf(lam, fam, x)))
        self.w0 = w(self.x0)
        self.w11, self.w12 = w(self.x11), w(self.x12)
        self.w21, self.w22 = w(self.x21), w(self.x22)

    def coordinates(self) -> np.ndarray:
        return np.concatenate([self.x0, self.x11, self.x12, self.x21, self.x22])


def pseudo_loglik(
    s: ClassifiedSample,
    weights: EStepWeights,
    alphas: Tuple[float, float, float],
    lam: float,
    fam: HFamily,
) -> float:
    """The E-step expectation of the complete-data log-likelihood (up to a constant)."""
    a1, a2, a3 = alphas
    lv = _Levels(s, lam, fam)
    n0, n1, n2 = s.n0, s.n1, s.n2
    x = lv.coordinates()
    with np.errstate(divide="ignore", invalid="ignore"):
        value = (
            (n0 + 2 * n1 + 2 * n2) * np.log(lam)
            + (weights.u1 * n1 + n2) * np.log(a1)
            + (n1 + weights.v1 * n2) * np.log(a2)
            + (n0 + weights.u2 * n1 + weights.v2 * n2) * np.log(a3)
            + float(np.sum(fam.log_h(x)))
            + (a1 + a2 + a3 - 1.0) * lv.w0
            + (a1 + a3 - 1.0) * lv.w11
            + (a2 + a3 - 1.0) * lv.w22
            + (a2 - 1.0) * lv.w12
            + (a1 - 1.0) * lv.w21
            - lam * float(np.sum(fam.H(x)))
        )
    return float(value) if np.isfinite(value) else -np.inf


def mstep_alphas(
    s: ClassifiedSample,
    weights: EStepWeights,
    lam: float,
    fam: HFamily,
    floor: Optional[float] = None,
) -> Tuple[float, float, float]:
    """Closed-form maximizers of the pseudo likelihood in the three shapes.

    a1 = (u1 n1 + n2) / -(sum_I0 W(x) + sum_I1uI2 W(x1))
    a2 = (n1 + v1 n2) / -(sum_I0 W(x) + sum_I1uI2 W(x2))
    a3 = (n0 + u2 n1 + v2 n2) / -(sum_I0 W(x) + sum_I1 W(x1) + sum_I2 W(x2))

    W < 0, so the denominators carry a minus sign. Shapes are floored at
    floor to keep the parameter space open.

    Raises:
        ConvergenceError: If a denominator is 0 (every observation at cdf 1)
    """
    floor = get_settings().alpha_floor if floor is None else floor
    lv = _Levels(s, lam, fam)
    numerators = (
        weights.u1 * s.n1 + s.n2,
        s.n1 + weights.v1 * s.n2,
        s.n0 + weights.u2 * s.n1 + weights.v2 * s.n2,
    )
    denominators = (
        -(lv.w0 + lv.w11 + lv.w21),
        -(lv.w0 + lv.w12 + lv.w22),
        -(lv.w0 + lv.w11 + lv.w22),
    )
    out = []
    for which, (num, den) in enumerate(zip(numerators, denominators), start=1):
        if not np.isfinite(den) or den <= 0.0:
            raise ConvergenceError(
                f"alpha{which} update has denominator {den}: observations sit at cdf 1"
            )
        out.append(max(num / den, floor))
    return out[0], out[1], out[2]


def _lambda_score(
    s: ClassifiedSample, alphas: Tuple[float, float, float], fam: HFamily
) -> Callable[[float], float]:
    a1, a2, a3 = alphas
    count = s.n0 + 2 * s.n1 + 2 * s.n2
    groups = [
        (a1 + a2 + a3 - 1.0, fam.H(s.tie_values)),
        (a1 + a3 - 1.0, fam.H(s.x1[s.i1])),
        (a2 - 1.0, fam.H(s.x2[s.i1])),
        (a1 - 1.0, fam.H(s.x1[s.i2])),
        (a2 + a3 - 1.0, fam.H(s.x2[s.i2])),
    ]
    total_h = sum(float(np.sum(h)) for _, h in groups)

    def score(lam: float) -> float:
        # d/dlam log(1 - exp(-lam H)) = H / expm1(lam H)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            value = count / lam - total_h
            for coef, h in groups:
                if h.size:
                    value += coef * float(np.sum(h / np.expm1(lam * h)))
        return value

    return score


def mstep_lambda(
    s: ClassifiedSample,
    alphas: Tuple[float, float, float],
    fam: HFamily,
    lam_init: float,
) -> float:
    """Solve the pseudo score equation in lambda.

    The pseudo likelihood is concave in lambda with score +inf at 0+ and
    -sum(H) at infinity, so the root is unique. The bracket starts at
    [lam_init / 2, 2 lam_init] and widens geometrically.

    Raises:
        ConvergenceError: If no bracket is found within MAX_BRACKET_EXPANSIONS
    """
    if fam.lambda_fixed:
        return 1.0
    score = _lambda_score(s, alphas, fam)
    lo, hi = lam_init / 2.0, lam_init * 2.0
    expansions = 0
    while not score(lo) > 0:
        lo /= 2.0
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS or lo == 0.0:
            raise ConvergenceError(f"lambda bracket: score stays <= 0 down to {lo}")
    while not score(hi) < 0:
        hi *= 2.0
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS or not np.isfinite(hi):
            raise ConvergenceError(f"lambda bracket: score stays >= 0 up to {hi}")
    lam = brentq(score, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    logger.debug("lambda update: {} in [{}, {}]", lam, lo, hi)
    return float(lam)


def _log_simplex(start: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([start] + [start + step * np.eye(start.size)[i] for i in range(start.size)])


def mstep_xi(
    s: ClassifiedSample,
    weights: EStepWeights,
    alphas: Tuple[float, float, float],
    lam: float,
    fam: HFamily,
    xatol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[HFamily, bool]:
    """Maximize the pseudo likelihood over xi by Nelder-Mead on log(xi).

    The search starts from fam.xi and stops once the simplex diameter falls
    below xatol. The returned point never has a lower pseudo likelihood than
    the start.

    Returns:
        Tuple[HFamily, bool]: The updated family and whether the simplex
            converged within max_iter
    """
    if not fam.param_names:
        return fam, True
    settings = get_settings()
    xatol = settings.xi_xatol if xatol is None else xatol
    max_iter = settings.xi_max_iter if max_iter is None else max_iter

    def objective(z: np.ndarray) -> float:
        try:
            trial = fam.with_xi(np.exp(z))
        except (DomainError, OverflowError):
            return np.inf
        value = pseudo_loglik(s, weights, alphas, lam, trial)
        return -value if np.isfinite(value) else np.inf

    start = np.log(np.asarray(fam.xi, dtype=float))
    result = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "initial_simplex": _log_simplex(start, 0.05),
            "xatol": xatol,
            "fatol": np.inf,
            "maxiter": max_iter,
            "maxfev": 4 * max_iter,
        },
    )
    if not result.fun <= objective(start):
        return fam, bool(result.success)
    return fam.with_xi(np.exp(result.x)), bool(result.success)


def initial_theta(s: ClassifiedSample, fam: HFamily) -> BEEWParams:
    """Starting values for the fitters.

    The marginals are EEW(a_i + a3) with a shared (lambda, xi); a profile fit
    of both gives (b1, b2, lambda, xi). With p = (n0 + 1) / (n + 2) the
    smoothed tie fraction, a3 = p (b1 + b2) / (1 + p) makes a3 / sum(alpha)
    equal p, and a_i = max(b_i - a3, b_i / 10).
    """
    start = fam.with_xi(fam.default_xi(np.concatenate([s.x1, s.x2])))
    profile = eew_fit_profile([s.x1, s.x2], start)
    b1, b2 = profile.alphas
    p = (s.n0 + 1.0) / (s.n + 2.0)
    a3 = p * (b1 + b2) / (1.0 + p)
    theta = BEEWParams(
        alpha1=max(b1 - a3, 0.1 * b1),
        alpha2=max(b2 - a3, 0.1 * b2),
        alpha3=a3,
        lam=profile.lam,
        fam=profile.fam,
    )
    logger.debug("Initial theta: {}", theta.to_dict())
    return theta


class InformationResult(BaseModel):
    """Inverse observed information at an estimate.

    cov and se are None when the information matrix is not positive definite.
    """

    names: List[str]
    cov: Optional[List[List[float]]]
    se: Dict[str, Optional[float]]
    positive_definite: bool


def numerical_hessian(fn: Callable[[np.ndarray], float], x0: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Hessian with per-coordinate steps step * (1 + |x_i|)."""
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    steps = step * (1.0 + np.abs(x0))
    f0 = fn(x0)
    hess = np.zeros((dim, dim))
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = steps[i]
        hess[i, i] = (fn(x0 + ei) - 2.0 * f0 + fn(x0 - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(dim)
            ej[j] = steps[j]
            hess[i, j] = hess[j, i] = (
                fn(x0 + ei + ej) - fn(x0 + ei - ej) - fn(x0 - ei + ej) + fn(x0 - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return hess


def hessian_standard_errors(
    fn: Callable[[np.ndarray], float],
    values: Sequence[float],
    names: Sequence[str],
    step: Optional[float] = None,
) -> InformationResult:
    """Standard errors of positive parameters from the log-likelihood fn.

    The Hessian is taken in log-parameter space and mapped back by the
    delta method: se(theta_i) = theta_i * sqrt(cov_log[i, i]).
    """
    step = get_settings().hessian_step if step is None else step
    values = np.asarray(values, dtype=float)
    hess = numerical_hessian(lambda z: fn(np.exp(z)), np.log(values), step)
    info = -hess
    try:
        if not np.all(np.isfinite(info)):
            raise np.linalg.LinAlgError("non-finite information")
        np.linalg.cholesky(info)
        cov_log = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        logger.warning("Observed information is not positive definite; standard errors missing")
        return InformationResult(
            names=list(names),
            cov=None,
            se={name: None for name in names},
            positive_definite=False,
        )
    jac = np.diag(values)
    cov = jac @ cov_log @ jac
    se = values * np.sqrt(np.diag(cov_log))
    return InformationResult(
        names=list(names),
        cov=cov.tolist(),
        se={name: float(v) for name, v in zip(names, se)},
        positive_definite=True,
    )


def observed_information(theta_hat: BEEWParams, s: ClassifiedSample) -> InformationResult:
    """Inverse negative Hessian of loglik at theta_hat, over the free parameters."""
    return hessian_standard_errors(
        lambda v: loglik_vector(v, theta_hat, s),
        theta_hat.free_values(),
        theta_hat.free_names,
    )


def _report(
    method: str,
    s: ClassifiedSample,
    theta: BEEWParams,
    iterations: int,
    converged: bool,
    trace: List[float],
    flags: List[str],
) -> FitReport:
    ll = loglik(theta, s)
    info = observed_information(theta, s)
    if not info.positive_definite:
        flags.append("observed information not positive definite")
    crit = criteria(theta.k, s.n, ll) if s.n > theta.k + 1 else None
    if not converged:
        logger.warning("{} fit of {} did not converge", method, theta.fam.family_id)
    return FitReport(
        method=method,
        theta_hat=theta,
        se=info.se,
        loglik=ll,
        iterations=iterations,
        converged=converged,
        criteria=crit,
        trace=trace,
        flags=flags,
        n=s.n,
        n0=s.n0,
        n1=s.n1,
        n2=s.n2,
    )


def em_fit(
    s: ClassifiedSample,
    theta0: Optional[BEEWParams] = None,
    fam: Optional[HFamily] = None,
    max_iter: Optional[int] = None,
    rel_tol: Optional[float] = None,
    callback: Optional[Callable[[EMState], None]] = None,
) -> FitReport:
    """Fit by the EM algorithm.

    Each iteration computes the E-step weights, then updates lambda, xi and
    the shapes. Iteration stops when the observed log-likelihood changes by
    less than rel_tol * (1 + |loglik|), or after max_iter iterations.

    Args:
        s (ClassifiedSample): The data
        theta0 (Optional[BEEWParams]): Starting point. Defaults to
            initial_theta(s, fam).
        fam (Optional[HFamily]): The family, required when theta0 is None
        max_iter (Optional[int]): Iteration cap. Defaults to settings.
        rel_tol (Optional[float]): Convergence tolerance. Defaults to settings.
        callback (Optional[Callable]): Called with every accepted EMState

    Raises:
        ConvergenceError: If a sub-step fails; the message names the iteration
    """
    settings = get_settings()
    max_iter = settings.max_iter if max_iter is None else max_iter
    rel_tol = settings.rel_tol if rel_tol is None else rel_tol
    if theta0 is None:
        if fam is None:
            raise DomainError("em_fit needs theta0 or fam")
        theta0 = initial_theta(s, fam)

    theta = theta0
    ll = loglik(theta, s)
    trace = [ll]
    flags: List[str] = []
    xi_converged = True
    converged = False
    iteration = 0
    logger.info("EM fit of {} on n={} from loglik {}", theta.fam.family_id, s.n, ll)

    while iteration < max_iter:
        iteration += 1
        weights = estep(theta)
        alphas = (theta.alpha1, theta.alpha2, theta.alpha3)
        try:
            lam = mstep_lambda(s, alphas, theta.fam, theta.lam)
            new_fam, ok = mstep_xi(s, weights, alphas, lam, theta.fam)
            new_alphas = mstep_alphas(s, weights, lam, new_fam)
        except BEEWError as e:
            raise ConvergenceError(f"EM iteration {iteration}: {e}") from e
        xi_converged = xi_converged and ok

        theta = BEEWParams(
            alpha1=new_alphas[0],
            alpha2=new_alphas[1],
            alpha3=new_alphas[2],
            lam=lam,
            fam=new_fam,
        )
        new_ll = loglik(theta, s)
        if new_ll < ll - ASCENT_SLACK * (1.0 + abs(ll)):
            logger.warning("EM iteration {} decreased loglik {} -> {}", iteration, ll, new_ll)
        delta = new_ll - ll
        ll = new_ll
        trace.append(ll)
        logger.debug("EM iteration {}: loglik {}", iteration, ll)
        if callback is not None:
            callback(EMState(theta=theta, weights=weights, iteration=iteration, loglik=ll))
        if abs(delta) < rel_tol * (1.0 + abs(ll)):
            converged = True
            break

    if not xi_converged:
        flags.append("xi simplex hit its iteration cap")
    if theta.alpha3 <= get_settings().alpha_floor:
        flags.append("no evidence of shared component")
    logger.info("EM finished after {} iterations, loglik {}", iteration, ll)
    return _report("em", s, theta, iteration, converged, trace, flags)


def direct_fit(
    s: ClassifiedSample,
    theta0: Optional[BEEWParams] = None,
    fam: Optional[HFamily] = None,
    max_iter: Optional[int] = None,
    restarts: int = 5,
) -> FitReport:
    """Fit by Nelder-Mead on the log of every free parameter.

    The simplex is rebuilt around the best point up to restarts times, until
    a restart no longer improves the log-likelihood by more than 1e-9.
    """
    max_iter = get_settings().direct_max_iter if max_iter is None else max_iter
    if theta0 is None:
        if fam is None:
            raise DomainError("direct_fit needs theta0 or fam")
        theta0 = initial_theta(s, fam)

    def objective(z: np.ndarray) -> float:
        value = loglik_vector(np.exp(z), theta0, s)
        return -value if np.isfinite(value) else np.inf

    z = np.log(theta0.free_values())
    best = objective(z)
    trace = [-best]
    converged = False
    rounds = 0
    for rounds in range(1, restarts + 2):
        result = minimize(
            objective,
            z,
            method="Nelder-Mead",
            options={
                "initial_simplex": _log_simplex(z, 0.1),
                "xatol": 1e-9,
                "fatol": 1e-11,
                "maxiter": max_iter,
                "maxfev": 2 * max_iter,
                "adaptive": True,
            },
        )
        improvement = best - result.fun
        if result.fun < best:
            z, best = result.x, result.fun
        trace.append(-best)
        converged = bool(result.success)
        logger.debug("Direct fit round {}: loglik {} ({})", rounds, -best, result.message)
        if converged and improvement <= 1e-9:
            break

    return _report("direct", s, theta0.with_free(np.exp(z)), rounds, converged, trace, [])


class EMEstimator(Estimator):
    """Fits through em_fit."""

    method = "em"

    def __init__(
        self,
        fam: Optional[HFamily] = None,
        max_iter: Optional[int] = None,
        rel_tol: Optional[float] = None,
    ) -> None:
        self.fam = fam
        self.max_iter = max_iter
        self.rel_tol = rel_tol

    def fit(self, sample: ClassifiedSample, theta0: Optional[BEEWParams] = None) -> FitReport:
        return em_fit(sample, theta0, self.fam, self.max_iter, self.rel_tol)


class DirectEstimator(Estimator):
    """Fits through direct_fit."""

    method = "direct"

    def __init__(self, fam: Optional[HFamily] = None, max_iter: Optional[int] = None) -> None:
        self.fam = fam
        self.max_iter = max_iter

    def fit(self, sample: ClassifiedSample, theta0: Optional[BEEWParams] = None) -> FitReport:
        return direct_fit(sample, theta0, self.fam, self.max_iter)


@lru_cache()
def get_estimator(
    method: str,
    fam: Optional[HFamily] = None,
    max_iter: Optional[int] = None,
    rel_tol: Optional[float] = None,
) -> Estimator:
    """Return an Estimator instance for method ("em" or "direct").

    The result is cached so the same instance is returned for equal arguments.
    """
    if method == "em":
        return EMEstimator(fam, max_iter, rel_tol)
    if method == "direct":
        return DirectEstimator(fam, max_iter)
    raise DomainError(f"unknown fitting method {method!r}")
