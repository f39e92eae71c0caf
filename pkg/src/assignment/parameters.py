"""Pipeline parameters and the derived slack constants."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings
from src.errors import ArgumentError

logger = logging.getLogger(__name__)


class Parameters(BaseModel):
    """Numeric parameters of one pipeline run.

    Unset fields fall back to the settings values at construction time; ``delta``
    unset means (d - eps)^(2k-2)/2.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(default=3, ge=2)
    eps: float = Field(default_factory=lambda: settings.EPS, gt=0, lt=1)
    d: float = Field(default_factory=lambda: settings.D, gt=0, lt=1)
    gamma: float = Field(default_factory=lambda: settings.GAMMA, gt=0, lt=1)
    delta: Optional[float] = Field(default_factory=lambda: settings.DELTA, ge=0, lt=1)
    alpha: float = Field(default_factory=lambda: settings.ALPHA, gt=0, le=1)
    rho: float = Field(default_factory=lambda: settings.RHO, ge=0, le=1)
    edge_rule: Literal["unrefuted", "certified"] = "unrefuted"

    @model_validator(mode="after")
    def _eps_below_d(self) -> "Parameters":
        if self.eps >= self.d:
            raise ValueError(f"eps ({self.eps}) must be smaller than d ({self.d})")
        return self

    @property
    def gamma_prime(self) -> float:
        """gamma - d - 2 eps."""
        return self.gamma - self.d - 2 * self.eps

    @property
    def gamma_double_prime(self) -> float:
        """k (gamma - 2 (eps + d))."""
        return self.k * (self.gamma - 2 * (self.eps + self.d))

    @property
    def delta_value(self) -> float:
        if self.delta is not None:
            return self.delta
        return (self.d - self.eps) ** (2 * self.k - 2) / 2

    def min_degree_fraction(self) -> float:
        """Host minimum degree the embedding theorem asks for, as a fraction of n."""
        return 1 - 1 / (2 * (self.k - 1)) + self.gamma

    def regime_warnings(self) -> List[str]:
        """The asymptotic orderings this parameter set violates."""
        problems = []
        delta = self.delta_value
        if not self.eps < delta:
            problems.append(f"eps ({self.eps:g}) is not below delta ({delta:.3g})")
        if not delta < self.d:
            problems.append(f"delta ({delta:.3g}) is not below d ({self.d:g})")
        if not self.d < self.gamma:
            problems.append(f"d ({self.d:g}) is not below gamma ({self.gamma:g})")
        if self.gamma_prime <= 0:
            problems.append(f"gamma' = gamma - d - 2 eps = {self.gamma_prime:.3g} is not positive")
        if self.gamma_double_prime <= 0:
            problems.append(f"gamma'' = k (gamma - 2 (eps + d)) = {self.gamma_double_prime:.3g} is not positive")
        return problems

    def check_ordering(self, enforce: Optional[bool] = None) -> List[str]:
        """Log (or, when enforced, raise on) violated orderings; returns them."""
        enforce = settings.ENFORCE_PARAMETER_ORDERING if enforce is None else enforce
        problems = self.regime_warnings()
        if problems and enforce:
            raise ArgumentError("parameter ordering violated: " + "; ".join(problems), {"problems": problems})
        for problem in problems:
            logger.warning(f"Parameter regime: {problem}")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump()
        data.update(
            gamma_prime=self.gamma_prime,
            gamma_double_prime=self.gamma_double_prime,
            delta_value=self.delta_value,
        )
        return data


@dataclass(frozen=True)
class AlphaThreshold:
    """Both separability bounds of the embedding theorem and their conjunction."""

    quadratic: float
    degree: float
    value: float

    def admits(self, alpha_certificate: float) -> bool:
        return alpha_certificate <= self.value

    def to_dict(self) -> Dict[str, float]:
        return {"quadratic": self.quadratic, "degree": self.degree, "value": self.value}


def alpha_threshold(eps: float, ell: int, max_degree: int, k: int) -> AlphaThreshold:
    """eps^2/(4 l^3) and eps/(l Delta^k); alpha must satisfy both, so the minimum counts."""
    if ell <= 0:
        raise ArgumentError(f"the number of clusters must be positive, got {ell}")
    quadratic = eps ** 2 / (4 * ell ** 3)
    degree = eps / (ell * max(max_degree, 1) ** k)
    return AlphaThreshold(quadratic, degree, min(quadratic, degree))
