"""Step-size and noise-scale families and their summability checks.

Step sizes are power schedules ``alpha(k) = a1 / (k + a2)**beta``; privacy
noise scales come in power, geometric and constant flavors.  The power noise
carries an explicit ``offset`` in {0, 1} because the accuracy condition is
stated with ``b(k) = b_floor * (k + a2)**gamma`` while the privacy bounds use
``b(k) = b_floor * (k + a2 - 1)**gamma``; both conventions must be
representable exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PowerStep",
    "GeometricStep",
    "PowerNoise",
    "GeometricNoise",
    "ConstantNoise",
    "AssumptionVerdict",
    "validate_assumptions",
    "sum_alpha2_b2_bound",
    "step_product_bound",
    "DivergentSeriesError",
]


class DivergentSeriesError(ValueError):
    pass


@dataclass(frozen=True)
class PowerStep:
    """alpha(k) = a1 / (k + a2)**beta, nonincreasing and positive."""

    a1: float
    a2: float
    beta: float

    def __post_init__(self):
        if self.a1 < 0:
            raise ValueError("a1 must be >= 0")
        if self.a2 < 0:
            raise ValueError("a2 must be >= 0")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")

    def alpha(self, k) -> float:
        return self.a1 / (k + self.a2) ** self.beta


@dataclass(frozen=True)
class GeometricStep:
    """alpha(k) = p**k.  Baseline-only: violates the divergent-sum condition."""

    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")

    def alpha(self, k) -> float:
        return self.p**k


@dataclass(frozen=True)
class PowerNoise:
    """b(k) = b_floor * (k + a2 - offset)**gamma.

    With ``offset == 1`` the schedule starts at k = 1; evaluating a
    zero base returns 0 for gamma > 0 (no noise injected at that step)
    and raises for gamma < 0.
    """

    b_floor: float
    gamma: float
    a2: float = 0.0
    offset: int = 0

    def __post_init__(self):
        if self.b_floor < 0:
            raise ValueError("b_floor must be >= 0")
        if self.offset not in (0, 1):
            raise ValueError("offset must be 0 or 1")
        if self.a2 < 0:
            raise ValueError("a2 must be >= 0")

    def scale(self, k) -> float:
        base = k + self.a2 - self.offset
        if base <= 0:
            if self.gamma > 0:
                return 0.0
            if self.gamma == 0:
                return self.b_floor
            raise ValueError(f"b(k) undefined at k={k}: base {base} with gamma < 0")
        return self.b_floor * base**self.gamma


@dataclass(frozen=True)
class GeometricNoise:
    """b(k) = c * q**k, the exponentially decaying baseline."""

    c: float
    q: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")

    def scale(self, k) -> float:
        return self.c * self.q**k


@dataclass(frozen=True)
class ConstantNoise:
    b: float

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be > 0")

    def scale(self, k) -> float:
        return self.b


@dataclass(frozen=True)
class AssumptionVerdict:
    """Which of the summability conditions (a) and (b) the pair satisfies."""

    satisfies_a: bool
    satisfies_b: bool
    reason: str

    @property
    def label(self) -> str:
        if self.satisfies_b:
            return "SatisfiesAandB"
        if self.satisfies_a:
            return "SatisfiesA"
        return "Fails"


def validate_assumptions(step: PowerStep, noise) -> AssumptionVerdict:
    """Symbolic verdict on the summability conditions for a schedule pair.

    Condition (a): sum alpha = inf, alpha -> 0, sum alpha^2 b^2 < inf.
    Condition (b): additionally sum alpha^2 < inf (i.e. beta > 1/2).
    """
    if not isinstance(step, PowerStep):
        raise TypeError("validate_assumptions expects a power step schedule")
    sq_summable = step.beta > 0.5
    if isinstance(noise, PowerNoise):
        ab_summable = noise.gamma < step.beta - 0.5
        fail = f"gamma={noise.gamma} >= beta - 1/2 = {step.beta - 0.5}: sum alpha^2 b^2 diverges"
    elif isinstance(noise, (GeometricNoise, ConstantNoise)):
        # Geometric scales decay faster than any power; constant scales
        # reduce the condition to square-summability of the step.
        ab_summable = True if isinstance(noise, GeometricNoise) else sq_summable
        fail = "beta <= 1/2: sum alpha^2 diverges and b is constant"
    else:
        raise TypeError(f"unknown noise schedule {type(noise).__name__}")
    if not ab_summable:
        return AssumptionVerdict(False, False, fail)
    if not sq_summable:
        return AssumptionVerdict(True, False, f"beta={step.beta} <= 1/2: sum alpha^2 diverges")
    return AssumptionVerdict(True, True, "both summability conditions hold")


def sum_alpha2_b2_bound(step: PowerStep, noise: PowerNoise) -> float:
    """Closed-form upper bound on ``sum_{k>=0} alpha(k)^2 b(k)^2``.

    Valid for the matched-shift convention (noise offset 0, shared a2) with
    gamma < beta - 1/2 and a2 > 0; this is the quantity the accuracy design
    condition compares against the target.
    """
    if noise.offset != 0 or noise.a2 != step.a2:
        raise ValueError("bound requires the offset-0 noise convention with shared a2")
    if step.a1 == 0:
        return 0.0
    if noise.gamma >= step.beta - 0.5:
        raise DivergentSeriesError("gamma >= beta - 1/2: series diverges")
    if step.a2 <= 0:
        raise ValueError("a2 must be > 0")
    a1, a2, beta, bf, gamma = step.a1, step.a2, step.beta, noise.b_floor, noise.gamma
    integral = a1**2 * bf**2 * a2 ** (2 * gamma - 2 * beta + 1) / (2 * beta - 2 * gamma - 1)
    first = a1**2 * bf**2 * a2 ** (2 * gamma) / a2 ** (2 * beta)
    return integral + first


def step_product_bound(alpha: float, beta: float, l: int, k: int, k0: float) -> float:
    """Closed-form upper bound on ``prod_{i=l}^{k} (1 - alpha/(i+k0)**beta)``.

    Requires every factor to be positive (``alpha < (l+k0)**beta``).
    """
    if k < l:
        return 1.0
    if alpha >= (l + k0) ** beta:
        raise ValueError("bound requires alpha/(l+k0)^beta < 1")
    if beta == 1.0:
        return ((l + k0) / (k + k0)) ** alpha
    return math.exp(alpha / (1 - beta) * ((l + k0) ** (1 - beta) - (k + k0 + 1) ** (1 - beta)))
