"""The bivariate exponentiated extended Weibull (BEEW) model.

With U1 ~ EEW(alpha1), U2 ~ EEW(alpha2), U3 ~ EEW(alpha3) independent and
sharing (lambda, xi), the pair (X1, X2) = (max(U1, U3), max(U2, U3)) is
BEEW(alpha1, alpha2, alpha3, lambda, xi). The law has a surface density off the
diagonal and a singular component on x1 = x2 with weight alpha3 / sum(alpha).
"""

from typing import Dict, List, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from .abstract import DensityKind, HFamily, Region
from .eew import EEWParams, eew_cdf, eew_logpdf, eew_pdf, eew_sample, log_base_cdf
from .exceptions import DomainError
from .hfamily import family_class


class BEEWParams(BaseModel):
    """The full parameter vector (alpha1, alpha2, alpha3, lambda, xi)."""

    alpha1: float
    alpha2: float
    alpha3: float
    lam: float = Field(..., alias="lambda")
    fam: HFamily

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        allow_population_by_field_name = True

    @validator("alpha1", "alpha2", "alpha3", "lam")
    def _positive(cls, v, field):
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{field.alias} must be finite and > 0, got {v}")
        return v

    @root_validator(skip_on_failure=True)
    def _fixed_scale(cls, values):
        fam = values.get("fam")
        if fam is not None and fam.lambda_fixed and values.get("lam") != 1.0:
            raise ValueError(f"{fam.family_id} fixes lambda at 1")
        return values

    def __hash__(self) -> int:
        return hash((self.alpha1, self.alpha2, self.alpha3, self.lam, self.fam))

    @property
    def total_alpha(self) -> float:
        return self.alpha1 + self.alpha2 + self.alpha3

    @property
    def singular_weight(self) -> float:
        return self.alpha3 / self.total_alpha

    def component(self, alpha: float) -> EEWParams:
        """EEW(alpha, lambda, xi) sharing this model's scale and generator."""
        return EEWParams(alpha=alpha, lam=self.lam, fam=self.fam)

    @property
    def free_names(self) -> List[str]:
        names = ["alpha1", "alpha2", "alpha3"]
        if not self.fam.lambda_fixed:
            names.append("lambda")
        return names + list(self.fam.param_names)

    @property
    def k(self) -> int:
        """Number of free parameters."""
        return len(self.free_names)

    def free_values(self) -> np.ndarray:
        values = [self.alpha1, self.alpha2, self.alpha3]
        if not self.fam.lambda_fixed:
            values.append(self.lam)
        return np.array(values + list(self.fam.xi), dtype=float)

    def with_free(self, values: Sequence[float]) -> "BEEWParams":
        """Rebuild from a vector ordered like free_values()."""
        values = [float(v) for v in values]
        if len(values) != self.k:
            raise DomainError(f"expected {self.k} free values, got {len(values)}")
        split = 3 if self.fam.lambda_fixed else 4
        lam = 1.0 if self.fam.lambda_fixed else values[3]
        return BEEWParams(
            alpha1=values[0],
            alpha2=values[1],
            alpha3=values[2],
            lam=lam,
            fam=self.fam.with_xi(values[split:]),
        )

    def swapped(self) -> "BEEWParams":
        """The law of (X2, X1)."""
        return self.copy(update={"alpha1": self.alpha2, "alpha2": self.alpha1})

    def to_dict(self) -> Dict[str, float]:
        out = {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha3": self.alpha3,
            "lambda": self.lam,
        }
        out.update(self.fam.xi_dict())
        return out

    @classmethod
    def from_dict(cls, family_id: str, values: Mapping[str, float]) -> "BEEWParams":
        """Build from named values, e.g. {"alpha1": 1, ..., "lambda": 1, "beta": 2}.

        lambda may be omitted for families that fix it.

        Raises:
            DomainError: If a name is missing or unknown
        """
        fam_cls = family_class(family_id)
        expected = ["alpha1", "alpha2", "alpha3", "lambda"] + list(fam_cls.param_names)
        values = dict(values)
        if fam_cls.lambda_fixed:
            values.setdefault("lambda", 1.0)
        unknown = sorted(set(values) - set(expected))
        missing = [name for name in expected if name not in values]
        if unknown or missing:
            raise DomainError(
                f"{family_id} parameters are {expected}; "
                f"missing {missing}, unknown {unknown}"
            )
        return cls(
            alpha1=values["alpha1"],
            alpha2=values["alpha2"],
            alpha3=values["alpha3"],
            lam=values["lambda"],
            fam=fam_cls(*[values[name] for name in fam_cls.param_names]),
        )


class BivariateEvaluation(BaseModel):
    """A density value tagged with the branch and unit it belongs to."""

    region: Region
    value: float
    kind: DensityKind


def region_of(x1, x2, tie_eps: float = 0.0) -> np.ndarray:
    """Classify points into Region values.

    A point is DIAGONAL when |x1 - x2| <= tie_eps * max(1, |x1|).
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    tie = np.abs(x1 - x2) <= tie_eps * np.maximum(1.0, np.abs(x1))
    return np.where(
        tie, int(Region.DIAGONAL), np.where(x1 < x2, int(Region.X1_LESS), int(Region.X2_LESS))
    )


def _scalar(out):
    return out if np.ndim(out) else float(out)


def joint_cdf(p: BEEWParams, x1, x2):
    """F(x1, x2) = F_EEW(x1; a1) F_EEW(x2; a2) F_EEW(min(x1, x2); a3)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    z = np.minimum(x1, x2)
    out = (
        np.asarray(eew_cdf(p.component(p.alpha1), x1))
        * np.asarray(eew_cdf(p.component(p.alpha2), x2))
        * np.asarray(eew_cdf(p.component(p.alpha3), z))
    )
    return _scalar(np.where(z > 0, out, 0.0))


def joint_cdf_branch(p: BEEWParams, x1, x2):
    """The joint cdf through its three-branch form.

    x1 < x2:  F_EEW(x1; a1 + a3) F_EEW(x2; a2)
    x2 < x1:  F_EEW(x1; a1) F_EEW(x2; a2 + a3)
    x1 = x2:  F_EEW(x; a1 + a2 + a3)
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    below = np.asarray(eew_cdf(p.component(p.alpha1 + p.alpha3), x1)) * np.asarray(
        eew_cdf(p.component(p.alpha2), x2)
    )
    above = np.asarray(eew_cdf(p.component(p.alpha1), x1)) * np.asarray(
        eew_cdf(p.component(p.alpha2 + p.alpha3), x2)
    )
    diagonal = np.asarray(eew_cdf(p.component(p.total_alpha), x1))
    out = np.where(x1 < x2, below, np.where(x1 > x2, above, diagonal))
    return _scalar(np.where(np.minimum(x1, x2) > 0, out, 0.0))


def diagonal_logpdf(p: BEEWParams, x):
    """log f0(x), the line density of the singular component.

    f0(x) = alpha3 lambda h(x) exp(-lambda H(x)) (1 - exp(-lambda H(x)))^(a1 + a2 + a3 - 1)
    """
    x = np.asarray(x, dtype=float)
    # f0 is alpha3 / sum(alpha) times the EEW(sum(alpha)) density
    out = np.asarray(eew_logpdf(p.component(p.total_alpha), x)) + np.log(p.singular_weight)
    return _scalar(out)


def branch_logpdf(p: BEEWParams, x1, x2, region) -> np.ndarray:
    """Log density per point, read from the branch given by region."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    region = np.asarray(region)
    out = np.full(np.broadcast(x1, x2, region).shape, -np.inf)
    x1, x2, region = np.broadcast_arrays(x1, x2, region)

    mask = region == Region.X1_LESS
    if mask.any():
        out[mask] = np.asarray(
            eew_logpdf(p.component(p.alpha1 + p.alpha3), x1[mask])
        ) + np.asarray(eew_logpdf(p.component(p.alpha2), x2[mask]))
    mask = region == Region.X2_LESS
    if mask.any():
        out[mask] = np.asarray(eew_logpdf(p.component(p.alpha1), x1[mask])) + np.asarray(
            eew_logpdf(p.component(p.alpha2 + p.alpha3), x2[mask])
        )
    mask = region == Region.DIAGONAL
    if mask.any():
        out[mask] = diagonal_logpdf(p, 0.5 * (x1[mask] + x2[mask]))
    return out


def joint_pdf(p: BEEWParams, x1: float, x2: float, tie_eps: float = 0.0) -> BivariateEvaluation:
    """Evaluate the joint density at one point.

    Off the diagonal the value is the surface density f1 (x1 < x2) or f2
    (x2 < x1). On the diagonal it is the line density f0; the two never add.
    """
    if not (x1 > 0 and x2 > 0):
        raise DomainError("joint_pdf needs x1 > 0 and x2 > 0")
    region = Region(int(region_of(x1, x2, tie_eps)))
    value = float(np.exp(branch_logpdf(p, x1, x2, int(region))))
    kind = DensityKind.LINE if region is Region.DIAGONAL else DensityKind.SURFACE
    return BivariateEvaluation(region=region, value=value, kind=kind)


def marginal(p: BEEWParams, which: int) -> EEWParams:
    """X1 ~ EEW(alpha1 + alpha3), X2 ~ EEW(alpha2 + alpha3)."""
    if which == 1:
        return p.component(p.alpha1 + p.alpha3)
    if which == 2:
        return p.component(p.alpha2 + p.alpha3)
    raise DomainError(f"marginal index must be 1 or 2, got {which}")


def conditional_pdf(
    p: BEEWParams, i: int, xi: float, xj: float, tie_eps: float = 0.0
) -> BivariateEvaluation:
    """The law of X_i given X_j = xj, evaluated at X_i = xi.

    Computed as joint density over the marginal density of X_j. On the
    diagonal the conditional law has a point mass
    alpha3 / (alpha_j + alpha3) * F_EW(xj)^alpha_i, reported as an ATOM.

    Raises:
        DomainError: If the marginal density of X_j underflows at xj
    """
    if i not in (1, 2):
        raise DomainError(f"conditional index must be 1 or 2, got {i}")
    if not (xi > 0 and xj > 0):
        raise DomainError("conditional_pdf needs positive arguments")
    j = 3 - i
    x1, x2 = (xi, xj) if i == 1 else (xj, xi)
    region = Region(int(region_of(x1, x2, tie_eps)))
    log_marginal = float(eew_logpdf(marginal(p, j), xj))
    if not np.isfinite(log_marginal):
        raise DomainError(f"marginal density of X{j} underflows at {xj}")

    if region is Region.DIAGONAL:
        alpha_i = p.alpha1 if i == 1 else p.alpha2
        alpha_j = p.alpha2 if i == 1 else p.alpha1
        w = float(log_base_cdf(p.lam, p.fam, xj))
        value = p.alpha3 / (alpha_j + p.alpha3) * float(np.exp(alpha_i * w))
        return BivariateEvaluation(region=region, value=value, kind=DensityKind.ATOM)

    value = float(np.exp(branch_logpdf(p, x1, x2, int(region)) - log_marginal))
    return BivariateEvaluation(region=region, value=value, kind=DensityKind.CONDITIONAL)


def joint_survival(p: BEEWParams, x1, x2):
    """S(x1, x2) = 1 - F_X1(x1) - F_X2(x2) + F(x1, x2)."""
    out = (
        1.0
        - np.asarray(eew_cdf(marginal(p, 1), x1))
        - np.asarray(eew_cdf(marginal(p, 2), x2))
        + np.asarray(joint_cdf(p, x1, x2))
    )
    return _scalar(np.clip(out, 0.0, 1.0))


def bivariate_hazard(
    p: BEEWParams, x1: float, x2: float, tie_eps: float = 0.0
) -> BivariateEvaluation:
    """Basu's bivariate failure rate f(x1, x2) / S(x1, x2), branch aware.

    Raises:
        DomainError: If the survival function underflows to 0
    """
    density = joint_pdf(p, x1, x2, tie_eps)
    survival = float(joint_survival(p, x1, x2))
    if survival <= 0.0:
        raise DomainError(f"joint survival underflows at ({x1}, {x2})")
    return density.copy(update={"value": density.value / survival})


class Decomposition:
    """F = w_abs F_a + w_sing F_s, the absolutely continuous / singular split.

    Attributes:
        w_abs: (alpha1 + alpha2) / sum(alpha)
        w_sing: alpha3 / sum(alpha)
    """

    def __init__(self, p: BEEWParams) -> None:
        self.params = p
        self.w_sing = p.alpha3 / p.total_alpha
        self.w_abs = (p.alpha1 + p.alpha2) / p.total_alpha

    def cdf_sing(self, x1, x2):
        """F_s(x1, x2) = F_EW(min(x1, x2))^(a1 + a2 + a3)."""
        p = self.params
        return eew_cdf(p.component(p.total_alpha), np.minimum(x1, x2))

    def cdf_abs(self, x1, x2):
        p = self.params
        share = p.alpha1 + p.alpha2
        out = p.total_alpha / share * np.asarray(joint_cdf(p, x1, x2)) - (
            p.alpha3 / share
        ) * np.asarray(self.cdf_sing(x1, x2))
        return _scalar(out)

    def pdf_abs(self, x1, x2):
        """f_a, the normalized density of the off-diagonal part."""
        p = self.params
        region = region_of(x1, x2)
        out = np.exp(branch_logpdf(p, x1, x2, region)) / self.w_abs
        return _scalar(np.where(region == Region.DIAGONAL, 0.0, out))

    def pdf_sing(self, x):
        """f_s(x) = f_EEW(x; a1 + a2 + a3), the normalized line density."""
        p = self.params
        return eew_pdf(p.component(p.total_alpha), x)


def decompose(p: BEEWParams) -> Decomposition:
    return Decomposition(p)


def mo_copula(u1, u2, theta1: float, theta2: float):
    """The Marshall-Olkin copula u1^(1-t1) u2^(1-t2) min(u1^t1, u2^t2)."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    out = (
        np.power(u1, 1.0 - theta1)
        * np.power(u2, 1.0 - theta2)
        * np.minimum(np.power(u1, theta1), np.power(u2, theta2))
    )
    return _scalar(out)


def mo_copula_cdf(p: BEEWParams, x1, x2):
    """The joint cdf through the MO copula of the EEW marginals.

    theta_i = alpha3 / (alpha_i + alpha3).
    """
    u1 = eew_cdf(marginal(p, 1), x1)
    u2 = eew_cdf(marginal(p, 2), x2)
    theta1 = p.alpha3 / (p.alpha1 + p.alpha3)
    theta2 = p.alpha3 / (p.alpha2 + p.alpha3)
    return mo_copula(u1, u2, theta1, theta2)


def max_cdf(p: BEEWParams, y):
    """cdf of max(X1, X2): F_EW(y)^(a1 + a2 + a3)."""
    return eew_cdf(p.component(p.total_alpha), y)


def max_pdf(p: BEEWParams, y):
    return eew_pdf(p.component(p.total_alpha), y)


def min_cdf(p: BEEWParams, t):
    """cdf of min(X1, X2): F^(a1 + a3) + F^(a2 + a3) - F^(a1 + a2 + a3)."""
    out = (
        np.asarray(eew_cdf(marginal(p, 1), t))
        + np.asarray(eew_cdf(marginal(p, 2), t))
        - np.asarray(max_cdf(p, t))
    )
    return _scalar(out)


def min_pdf(p: BEEWParams, t):
    out = (
        np.asarray(eew_pdf(marginal(p, 1), t))
        + np.asarray(eew_pdf(marginal(p, 2), t))
        - np.asarray(max_pdf(p, t))
    )
    return _scalar(out)


def beew_sample(p: BEEWParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n pairs as an (n, 2) array.

    U1, U2 and U3 are drawn in that order from rng; ties x1 == x2 are
    bit-identical and occur exactly when U3 exceeds both U1 and U2.
    """
    u1 = eew_sample(p.component(p.alpha1), rng, n)
    u2 = eew_sample(p.component(p.alpha2), rng, n)
    u3 = eew_sample(p.component(p.alpha3), rng, n)
    return np.column_stack([np.maximum(u1, u3), np.maximum(u2, u3)])
