"""The exceptional-vertex linear program and its dual certificate.

    min  a_{k-1}/k + a_k
    s.t. a_0 + ... + a_k = 1
         0 a_0 + 1 a_1 + ... + k a_k - z = k (2k-3)/(2k-2) + gamma''
         a, z >= 0

The hand-picked dual point u = (2 - k, (k-1)/k) is always feasible and its value
1/2 + gamma'' (k-1)/k equals the optimum; the often quoted bound 1/2 + gamma'' is larger
by gamma''/k, and both are reported.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.optimize import linprog

from src.errors import ArgumentError

logger = logging.getLogger(__name__)

DUALITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LPInstance:
    k: int
    gamma2: float
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @classmethod
    def build(cls, k: int, gamma2: float) -> "LPInstance":
        if k < 2:
            raise ArgumentError(f"k must be at least 2, got {k}")
        if gamma2 < 0:
            raise ArgumentError(f"gamma'' must be non-negative, got {gamma2}")
        A = np.array([[1.0] * (k + 1) + [0.0], [float(j) for j in range(k + 1)] + [-1.0]])
        b = np.array([1.0, k * (2 * k - 3) / (2 * k - 2) + gamma2])
        c = np.zeros(k + 2)
        c[k - 1] = 1.0 / k
        c[k] = 1.0
        return cls(k, gamma2, A, b, c)

    @property
    def feasible(self) -> bool:
        """The second row can reach its right-hand side only when it is at most k."""
        return self.b[1] <= self.k + 1e-12


@dataclass
class LPResult:
    instance: LPInstance
    feasible: bool
    primal: List[float] = field(default_factory=list)
    optimum: Optional[float] = None
    solver_dual: List[float] = field(default_factory=list)
    dual_point: List[float] = field(default_factory=list)
    dual_value: Optional[float] = None
    dual_feasibility_residuals: List[float] = field(default_factory=list)
    dual_feasible: bool = False
    strong_duality_residual: Optional[float] = None
    claimed_bound: Optional[float] = None
    message: str = ""

    @property
    def claimed_gap(self) -> Optional[float]:
        """Claimed bound minus the true optimum (gamma''/k when feasible)."""
        if self.optimum is None or self.claimed_bound is None:
            return None
        return self.claimed_bound - self.optimum

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "k": self.instance.k,
            "gamma2": self.instance.gamma2,
            "feasible": self.feasible,
            "primal": self.primal,
            "dual": self.dual_point,
            "solver_dual": self.solver_dual,
            "optimum": self.optimum,
            "dual_value": self.dual_value,
            "dual_feasibility_residuals": self.dual_feasibility_residuals,
            "dual_feasible": self.dual_feasible,
            "strong_duality_residual": self.strong_duality_residual,
            "claimed_bound": self.claimed_bound,
            "claimed_gap": self.claimed_gap,
            "message": self.message,
        }


def solve_assignment_lp(k: int, gamma2: float) -> LPResult:
    """Solve the LP by simplex and check the hand-picked dual point against it."""
    instance = LPInstance.build(k, gamma2)
    u = np.array([2.0 - k, (k - 1) / k])
    residuals = instance.A.T @ u - instance.c
    result = LPResult(
        instance=instance,
        feasible=False,
        dual_point=u.tolist(),
        dual_value=float(instance.b @ u),
        dual_feasibility_residuals=residuals.tolist(),
        dual_feasible=bool(np.all(residuals <= 1e-12)),
        claimed_bound=0.5 + gamma2,
    )
    if not instance.feasible:
        result.message = (
            f"infeasible: right-hand side {instance.b[1]:.6g} exceeds k = {k}, "
            f"sum of j*a_j is at most k"
        )
        logger.warning(f"LP for k={k}, gamma''={gamma2}: {result.message}")
        return result

    res = linprog(
        instance.c,
        A_eq=instance.A,
        b_eq=instance.b,
        bounds=[(0, None)] * (k + 2),
        method="highs-ds",
    )
    if res.status != 0:
        result.message = f"solver status {res.status}: {res.message}"
        logger.warning(f"LP for k={k}, gamma''={gamma2}: {result.message}")
        return result

    result.feasible = True
    result.primal = res.x.tolist()
    result.optimum = float(res.fun)
    solver_dual = np.asarray(res.eqlin.marginals, dtype=float)
    result.solver_dual = solver_dual.tolist()
    result.strong_duality_residual = abs(float(instance.b @ solver_dual) - result.optimum)
    if result.strong_duality_residual > DUALITY_TOLERANCE:
        logger.warning(f"strong duality residual {result.strong_duality_residual:.3g} above tolerance")
    result.message = "optimal"
    logger.debug(
        f"LP k={k} gamma''={gamma2}: optimum {result.optimum:.6f}, dual point value {result.dual_value:.6f}"
    )
    return result
