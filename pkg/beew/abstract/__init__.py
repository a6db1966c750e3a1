# This file provides the interfaces shared by the separate modules.


from abc import ABC, abstractmethod
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..exceptions import ConvergenceError, DomainError

if TYPE_CHECKING:
    from ..bivariate import BEEWParams
    from ..fit import ClassifiedSample, FitReport


BRACKET_LO = 1e-12
TINY = np.finfo(float).tiny
MAX_DOUBLINGS = 200
BISECTION_STEPS = 200


class Region(IntEnum):
    """Defines the three branches of the bivariate density.

    X1_LESS and X2_LESS are the off-diagonal branches carrying a surface
    density. DIAGONAL is the line x1 = x2 carrying the singular component.
    """

    X1_LESS = 1
    X2_LESS = 2
    DIAGONAL = 0


class DensityKind(str, Enum):
    """Defines the unit of a reported density value."""

    SURFACE = "surface-density"
    LINE = "line-density"
    CONDITIONAL = "conditional-density"
    ATOM = "atom"


class HFamily(ABC):
    """An extended Weibull generator H(x; xi).

    Concrete families define H, its derivative h and the domain of xi. The
    values of xi are validated once, at construction, and never change
    afterwards; evaluations assume a validated family.

    Attributes:
        family_id: The short name used on the command line and in reports
        param_names: The names of the entries of xi, in order
        lambda_fixed: True when the scale lambda is structurally fixed to 1
        nests: Ids of the families obtained from this one as parameter limits
    """

    family_id: str = ""
    param_names: Tuple[str, ...] = ()
    lambda_fixed: bool = False
    nests: Tuple[str, ...] = ()

    def __init__(self, *xi: float) -> None:
        if len(xi) != len(self.param_names):
            raise DomainError(
                f"{self.family_id} takes {len(self.param_names)} parameter(s) "
                f"{self.param_names}, got {len(xi)}"
            )
        values = tuple(float(v) for v in xi)
        for name, value in zip(self.param_names, values):
            if not np.isfinite(value):
                raise DomainError(f"{self.family_id}: {name} must be finite")
        self.check_domain(values)
        self._xi = values

    @property
    def xi(self) -> Tuple[float, ...]:
        return self._xi

    def xi_dict(self) -> Dict[str, float]:
        return dict(zip(self.param_names, self._xi))

    def with_xi(self, xi: Sequence[float]) -> "HFamily":
        """Return the same family with different parameter values."""
        return type(self)(*xi)

    @abstractmethod
    def check_domain(self, xi: Tuple[float, ...]) -> None:
        """Raise DomainError if xi lies outside the family's domain."""

    @classmethod
    @abstractmethod
    def default_xi(cls, x: np.ndarray) -> Tuple[float, ...]:
        """Starting values of xi scaled to the observations x."""

    @abstractmethod
    def H(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the generator H(x; xi) for x > 0."""

    @abstractmethod
    def h(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the derivative dH/dx for x > 0."""

    def log_h(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.h(x))

    def inverse(self, y):
        """Solve H(x; xi) = y for x.

        Families with a closed form override this. The generic path brackets
        every y between BRACKET_LO and 1, doubling the upper bound and squaring
        the lower one down to the smallest normal float until the bracket
        holds, then bisects on log x. Levels below H(TINY) return TINY.

        Raises:
            DomainError: If y is negative or not finite
            ConvergenceError: If no bracket is found within MAX_DOUBLINGS
        """
        y_arr = self._check_level(y)
        out = np.zeros_like(y_arr)
        positive = y_arr > 0
        if positive.any():
            out[positive] = self._bisect(y_arr[positive])
        return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])

    def _check_level(self, y) -> np.ndarray:
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        if not np.all(np.isfinite(y_arr)) or np.any(y_arr < 0):
            raise DomainError(f"{self.family_id}: H^-1 needs finite y >= 0")
        return y_arr.ravel()

    def _bisect(self, y: np.ndarray) -> np.ndarray:
        lo = np.full_like(y, BRACKET_LO)
        hi = np.ones_like(y)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            expansions = 0
            short = self.H(hi) < y
            while short.any():
                if expansions == MAX_DOUBLINGS:
                    raise ConvergenceError(
                        f"{self.family_id}: could not bracket H^-1 "
                        f"after {MAX_DOUBLINGS} expansions"
                    )
                hi[short] *= 2.0
                expansions += 1
                short = self.H(hi) < y

            # squaring reaches the smallest normal float in a handful of steps
            short = self.H(lo) > y
            while short.any():
                lo[short] = np.maximum(lo[short] ** 2, TINY)
                short = (self.H(lo) > y) & (lo > TINY)
            floored = self.H(lo) > y
            logger.debug("{} bracket settled after {} expansions", self.family_id, expansions)

            log_lo, log_hi = np.log(lo), np.log(hi)
            for _ in range(BISECTION_STEPS):
                log_mid = 0.5 * (log_lo + log_hi)
                below = self.H(np.exp(log_mid)) < y
                log_lo = np.where(below, log_mid, log_lo)
                log_hi = np.where(below, log_hi, log_mid)
        return np.where(floored, TINY, np.exp(0.5 * (log_lo + log_hi)))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, HFamily)
            and other.family_id == self.family_id
            and other.xi == self.xi
        )

    def __hash__(self) -> int:
        return hash((self.family_id, self.xi))

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.xi_dict().items())
        return f"{type(self).__name__}({args})"


class Estimator(ABC):
    """Define the set of methods a likelihood maximizer must support."""

    method: str = ""

    @abstractmethod
    def fit(
        self, sample: "ClassifiedSample", theta0: Optional["BEEWParams"] = None
    ) -> "FitReport":
        """Maximize the log-likelihood of sample over the parameters.

        Args:
            sample (ClassifiedSample): Classified bivariate observations
            theta0 (Optional[BEEWParams]): Starting point; its family fixes
                the model. Defaults to None, in which case implementations
                require a family through their constructor.

        Returns:
            FitReport: Estimates, standard errors, criteria and trace
        """
        pass
