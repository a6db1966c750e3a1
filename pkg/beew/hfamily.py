"""Extended Weibull generators H(x; xi).

Every distribution in the extended Weibull class has cdf 1 - exp(-lambda H(x; xi))
for a non-negative, strictly increasing H with H(0+) = 0 and H(inf) = inf.
Six generators ship, identified on the command line and in reports by:

    exp   H = x                                 xi: none
    lfr   H = beta x + gamma x^2 / 2            xi: beta > 0, gamma >= 0 (lambda fixed at 1)
    weib  H = x^beta                            xi: beta > 0
    gomp  H = (exp(beta x) - 1) / beta          xi: beta > 0
    wg    H = x^beta (exp(gamma x^delta) - 1)   xi: beta >= 0, gamma > 0, delta > 0
    mwe   H = beta (exp((x / beta)^gamma) - 1)  xi: beta > 0, gamma > 0

Other generators plug in by subclassing abstract.HFamily and registering the
class in FAMILIES.
"""

from typing import Dict, Optional, Sequence, Tuple, Type

import numpy as np

from .abstract import HFamily
from .exceptions import DomainError


def _require(condition: bool, family_id: str, message: str) -> None:
    if not condition:
        raise DomainError(f"{family_id}: {message}")


def _scale(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    m = float(np.mean(x)) if x.size else 1.0
    return m if m > 0 and np.isfinite(m) else 1.0


class Exponential(HFamily):
    family_id = "exp"

    def check_domain(self, xi: Tuple[float, ...]) -> None:
        pass

    @classmethod
    def default_xi(cls, x: np.ndarray) -> Tuple[float, ...]:
        return ()

    def H(self, x):
        return np.asarray(x, dtype=float)

    def h(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def log_h(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def inverse(self, y):
        y_arr = self._check_level(y)
        return y_arr.reshape(np.shape(y)) if np.ndim(y) else float(y_arr[0])


class LinearFailureRate(HFamily):
    family_id = "lfr"
    param_names = ("beta", "gamma")
    lambda_fixed = True
    nests = ("exp",)

    def check_domain(self, xi):
        beta, gamma = xi
        _require(beta > 0, self.family_id, "beta must be > 0")
        _require(gamma >= 0, self.family_id, "gamma must be >= 0")

    @classmethod
    def default_xi(cls, x):
        m = _scale(x)
        return (1.0 / m, 0.1 / m ** 2)

    def H(self, x):
        beta, gamma = self.xi
        x = np.asarray(x, dtype=float)
        return beta * x + 0.5 * gamma * x * x

    def h(self, x):
        beta, gamma = self.xi
        return beta + gamma * np.asarray(x, dtype=float)

    def inverse(self, y):
        beta, gamma = self.xi
        y_arr = self._check_level(y)
        # root of gamma/2 x^2 + beta x - y written without cancellation
        out = 2.0 * y_arr / (beta + np.sqrt(beta * beta + 2.0 * gamma * y_arr))
        return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])


class Weibull(HFamily):
    family_id = "weib"
    param_names = ("beta",)
    nests = ("exp",)

    def check_domain(self, xi):
        _require(xi[0] > 0, self.family_id, "beta must be > 0")

    @classmethod
    def default_xi(cls, x):
        return (1.0,)

    def H(self, x):
        return np.power(np.asarray(x, dtype=float), self.xi[0])

    def h(self, x):
        (beta,) = self.xi
        return beta * np.power(np.asarray(x, dtype=float), beta - 1.0)

    def log_h(self, x):
        (beta,) = self.xi
        with np.errstate(divide="ignore"):
            return np.log(beta) + (beta - 1.0) * np.log(np.asarray(x, dtype=float))

    def inverse(self, y):
        y_arr = self._check_level(y)
        out = np.power(y_arr, 1.0 / self.xi[0])
        return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])


class Gompertz(HFamily):
    family_id = "gomp"
    param_names = ("beta",)
    nests = ("exp",)

    def check_domain(self, xi):
        _require(xi[0] > 0, self.family_id, "beta must be > 0")

    @classmethod
    def default_xi(cls, x):
        return (0.1 / _scale(x),)

    def H(self, x):
        (beta,) = self.xi
        with np.errstate(over="ignore"):
            return np.expm1(beta * np.asarray(x, dtype=float)) / beta

    def h(self, x):
        with np.errstate(over="ignore"):
            return np.exp(self.xi[0] * np.asarray(x, dtype=float))

    def log_h(self, x):
        return self.xi[0] * np.asarray(x, dtype=float)

    def inverse(self, y):
        (beta,) = self.xi
        y_arr = self._check_level(y)
        out = np.log1p(beta * y_arr) / beta
        return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])


class WeibullGompertz(HFamily):
    """Generalized Weibull-Gompertz generator. H has no closed-form inverse."""

    family_id = "wg"
    param_names = ("beta", "gamma", "delta")
    nests = ("exp", "weib", "gomp")

    def check_domain(self, xi):
        beta, gamma, delta = xi
        _require(beta >= 0, self.family_id, "beta must be >= 0")
        _require(gamma > 0, self.family_id, "gamma must be > 0")
        _require(delta > 0, self.family_id, "delta must be > 0")

    @classmethod
    def default_xi(cls, x):
        return (1.0, 0.1 / _scale(x), 1.0)

    def H(self, x):
        beta, gamma, delta = self.xi
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.power(x, beta) * np.expm1(gamma * np.power(x, delta))

    def h(self, x):
        beta, gamma, delta = self.xi
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            inner = gamma * np.power(x, delta)
            return (
                beta * np.power(x, beta - 1.0) * np.expm1(inner)
                + gamma * delta * np.power(x, beta + delta - 1.0) * np.exp(inner)
            )


class ModifiedWeibullExtension(HFamily):
    family_id = "mwe"
    param_names = ("beta", "gamma")
    nests = ("exp", "weib")

    def check_domain(self, xi):
        beta, gamma = xi
        _require(beta > 0, self.family_id, "beta must be > 0")
        _require(gamma > 0, self.family_id, "gamma must be > 0")

    @classmethod
    def default_xi(cls, x):
        return (10.0 * _scale(x), 1.0)

    def H(self, x):
        beta, gamma = self.xi
        with np.errstate(over="ignore"):
            return beta * np.expm1(np.power(np.asarray(x, dtype=float) / beta, gamma))

    def h(self, x):
        return np.exp(self.log_h(x))

    def log_h(self, x):
        beta, gamma = self.xi
        z = np.asarray(x, dtype=float) / beta
        with np.errstate(divide="ignore"):
            return np.log(gamma) + (gamma - 1.0) * np.log(z) + np.power(z, gamma)

    def inverse(self, y):
        beta, gamma = self.xi
        y_arr = self._check_level(y)
        out = beta * np.power(np.log1p(y_arr / beta), 1.0 / gamma)
        return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])


FAMILIES: Dict[str, Type[HFamily]] = {
    cls.family_id: cls
    for cls in (
        Exponential,
        LinearFailureRate,
        Weibull,
        Gompertz,
        WeibullGompertz,
        ModifiedWeibullExtension,
    )
}


def family_class(family_id: str) -> Type[HFamily]:
    """Look up a registered family by id.

    Raises:
        DomainError: If the id is not registered
    """
    try:
        return FAMILIES[family_id]
    except KeyError:
        known = ", ".join(FAMILIES)
        raise DomainError(f"unknown family {family_id!r} (known: {known})") from None


def make_family(family_id: str, xi: Optional[Sequence[float]] = None) -> HFamily:
    """Build a validated family; xi defaults to the unit-scale starting values."""
    cls = family_class(family_id)
    if xi is None:
        xi = cls.default_xi(np.ones(1))
    return cls(*xi)


def _check_support(x) -> np.ndarray:
    x_arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x_arr)) or np.any(x_arr <= 0):
        raise DomainError("H is defined for finite x > 0 only")
    return x_arr


def h_eval(fam: HFamily, x):
    """Return H(x; xi) for x > 0."""
    out = fam.H(_check_support(x))
    return out if np.ndim(out) else float(out)


def h_deriv(fam: HFamily, x):
    """Return h(x; xi) = dH/dx for x > 0."""
    out = fam.h(_check_support(x))
    return out if np.ndim(out) else float(out)


def h_inverse(fam: HFamily, y):
    """Return x with H(x; xi) = y for y >= 0."""
    return fam.inverse(y)
