"""Approximation-bound constants for the multilevel selector."""

from pydantic import BaseModel

from muss.errors import PreconditionError
from muss.selectors.multilevel import MussParams


class ApproximationBound(BaseModel):
    """F(selection) >= F(OPT)/alpha - r*beta/alpha for the quality-halved multilevel run."""

    alpha: float
    beta: float
    radius: float

    def rhs(self, f_opt: float) -> float:
        """Right-hand side of the guarantee for a given optimum value."""
        return f_opt / self.alpha - self.radius * self.beta / self.alpha


def approximation_bound(
    k: int,
    m: int,
    lambda_: float,
    lambda_c: float,
    r: float,
) -> ApproximationBound:
    """
    Constants of the multilevel guarantee.

    alpha/2 = 5 k(k-1)/(m(m-1)) * (1-lambda)/(1-lambda_c) + 2
    beta    = k(k-1) [4(1-lambda) + 5(1-lambda)/(1-lambda_c)]

    Raises:
        PreconditionError: If k <= 1, m <= 1, k < m, lambda outside (0, 1) or lambda_c >= 1
    """
    if k <= 1:
        raise PreconditionError("k > 1", f"k={k}")
    if m <= 1:
        raise PreconditionError("m > 1", f"m={m}")
    if k < m:
        raise PreconditionError("k >= m", f"k={k}, m={m}")
    if not 0.0 < lambda_ < 1.0:
        raise PreconditionError("0 < lambda < 1", f"lambda={lambda_}")
    if not 0.0 <= lambda_c < 1.0:
        raise PreconditionError("lambda_c < 1", f"lambda_c={lambda_c}")
    if r < 0:
        raise PreconditionError("r >= 0", f"r={r}")

    pairs_ratio = k * (k - 1) / (m * (m - 1))
    lambda_ratio = (1 - lambda_) / (1 - lambda_c)
    alpha = 2.0 * (5.0 * pairs_ratio * lambda_ratio + 2.0)
    beta = k * (k - 1) * (4.0 * (1 - lambda_) + 5.0 * lambda_ratio)
    return ApproximationBound(alpha=alpha, beta=beta, radius=r)


def compute_theorem5_bound(params: MussParams, r: float) -> ApproximationBound:
    """Bound constants for a multilevel parameter set and maximum cluster radius `r`."""
    return approximation_bound(params.k, params.m, params.lambda_, params.lambda_c, r)
