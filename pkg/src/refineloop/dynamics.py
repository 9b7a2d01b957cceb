"""Closed-form dynamics of a two-state correctness chain.

An iterative refinement loop moves each problem between Correct and
Incorrect. Per iteration, a correct answer is spoiled with probability
``eir`` (error introduction rate) and an incorrect answer is fixed with
probability ``ecr`` (error correction rate). Population accuracy then
obeys the linear recurrence

    acc' = acc * (1 - eir) + (1 - acc) * ecr

and everything of interest has an exact expression: the net benefit of
one more pass, the break-even condition ``ecr/eir = acc/(1-acc)``, the
long-run accuracy ``ecr/(eir+ecr)``, and the geometric rate
``1 - eir - ecr`` at which it is approached.
"""

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "EQUILIBRIUM_TOLERANCE",
    "TransitionRates",
    "AccuracyPoint",
    "Verdict",
    "EquilibriumVerdict",
    "SteadyStateSummary",
    "step_accuracy",
    "net_benefit",
    "equilibrium_ratio",
    "rate_ratio",
    "stop_or_iterate",
    "steady_state",
    "subdominant_eigenvalue",
    "closed_form_accuracy",
]

# |net benefit| at or below this is treated as sitting on the equilibrium
# manifold; keeps verdicts stable under float noise near the break-even line.
EQUILIBRIUM_TOLERANCE = 1e-12


def _check_probability(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number in [0, 1], got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class TransitionRates:
    """One iteration's pair of flip probabilities."""

    eir: float
    ecr: float

    def __post_init__(self):
        object.__setattr__(self, "eir", _check_probability("eir", self.eir))
        object.__setattr__(self, "ecr", _check_probability("ecr", self.ecr))

    def matrix(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Row-stochastic transition matrix over (Correct, Incorrect)."""
        return ((1.0 - self.eir, self.eir), (self.ecr, 1.0 - self.ecr))


@dataclass(frozen=True)
class AccuracyPoint:
    """Accuracy at one iteration; net_benefit is None at iteration 0."""

    iteration: int
    accuracy: float
    net_benefit: float | None = None


class Verdict(Enum):
    ITERATE = "iterate"
    STOP = "stop"
    AT_EQUILIBRIUM = "at-equilibrium"


@dataclass(frozen=True)
class EquilibriumVerdict:
    """Outcome of the stop-or-iterate diagnostic.

    ``rate_ratio`` is ecr/eir (+inf when eir == 0 < ecr, nan when both are
    zero) and ``accuracy_odds`` is acc/(1-acc); another pass helps exactly
    when the first strictly exceeds the second.
    """

    verdict: Verdict
    rate_ratio: float
    accuracy_odds: float
    net_benefit: float


@dataclass(frozen=True)
class SteadyStateSummary:
    """Long-run accuracy and the eigenvalue governing approach to it.

    ``accuracy`` is nan when the chain is absorbing (eir == ecr == 0), in
    which case every starting accuracy is already stationary.
    """

    accuracy: float
    eigenvalue: float
    absorbing: bool


def step_accuracy(accuracy: float, rates: TransitionRates) -> float:
    """Accuracy after one refinement pass at the given rates."""
    acc = _check_probability("accuracy", accuracy)
    return acc * (1.0 - rates.eir) + (1.0 - acc) * rates.ecr


def net_benefit(accuracy: float, rates: TransitionRates) -> float:
    """Accuracy change produced by one more pass (may be negative)."""
    return step_accuracy(accuracy, rates) - accuracy


def equilibrium_ratio(accuracy: float) -> float:
    """Odds acc/(1-acc) that one more pass must beat to help; +inf at 1."""
    acc = _check_probability("accuracy", accuracy)
    if acc == 1.0:
        return math.inf
    return acc / (1.0 - acc)


def rate_ratio(rates: TransitionRates) -> float:
    """ecr/eir on the extended reals: +inf when eir == 0 < ecr, nan at 0/0."""
    if rates.eir > 0.0:
        return rates.ecr / rates.eir
    return math.inf if rates.ecr > 0.0 else math.nan


def stop_or_iterate(accuracy: float, rates: TransitionRates) -> EquilibriumVerdict:
    """Decide whether another pass helps at the current accuracy.

    The verdict is driven by the sign of the net benefit, with values
    inside ``EQUILIBRIUM_TOLERANCE`` reported as AT_EQUILIBRIUM. The
    degenerate absorbing case eir == ecr == 0 lands there as well, since
    no pass can then change anything.
    """
    nb = net_benefit(accuracy, rates)
    if abs(nb) <= EQUILIBRIUM_TOLERANCE:
        verdict = Verdict.AT_EQUILIBRIUM
    elif nb > 0.0:
        verdict = Verdict.ITERATE
    else:
        verdict = Verdict.STOP
    return EquilibriumVerdict(
        verdict=verdict,
        rate_ratio=rate_ratio(rates),
        accuracy_odds=equilibrium_ratio(accuracy),
        net_benefit=nb,
    )


def steady_state(rates: TransitionRates) -> SteadyStateSummary:
    """Long-run accuracy ecr/(eir+ecr) and eigenvalue 1 - eir - ecr."""
    total = rates.eir + rates.ecr
    if total == 0.0:
        return SteadyStateSummary(accuracy=math.nan, eigenvalue=1.0, absorbing=True)
    return SteadyStateSummary(
        accuracy=rates.ecr / total, eigenvalue=1.0 - total, absorbing=False
    )


def subdominant_eigenvalue(rates: TransitionRates) -> float:
    """Second eigenvalue of the transition matrix; |value| < 1 unless absorbing."""
    return 1.0 - rates.eir - rates.ecr


def closed_form_accuracy(k: int, rates: TransitionRates, initial_accuracy: float) -> float:
    """Accuracy after ``k`` passes at fixed rates, without iterating.

    Equals ``pi + lam**k * (acc0 - pi)`` with ``pi = ecr/(eir+ecr)`` and
    ``lam = 1 - eir - ecr``; when the chain is absorbing the accuracy
    never moves. Matches k-fold :func:`step_accuracy` to float precision.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    acc0 = _check_probability("initial_accuracy", initial_accuracy)
    if k == 0:
        return acc0
    summary = steady_state(rates)
    if summary.absorbing:
        return acc0
    return summary.accuracy + summary.eigenvalue**k * (acc0 - summary.accuracy)
