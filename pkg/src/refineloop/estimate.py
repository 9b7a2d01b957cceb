"""Rate estimation from correctness logs.

Transition rates are conditional frequencies: eir is estimated among the
problems that entered a transition correct, ecr among those that entered
it incorrect. An empty conditioning pool leaves the rate undefined
(``None``), never silently zero. Pooled rates sum counts across
transitions before dividing, which is the maximum-likelihood estimate for
a homogeneous chain and what a running stop-rule should consume.
"""

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .dynamics import AccuracyPoint
from .logs import CorrectnessLog

__all__ = [
    "TransitionCounts",
    "TransitionEstimate",
    "RateEstimates",
    "count_transitions",
    "accuracy_series",
    "estimate_rates",
    "running_pooled_rates",
    "wilson_interval",
]


@dataclass(frozen=True)
class TransitionCounts:
    """2x2 flow counts across one transition (c=correct, i=incorrect)."""

    n_cc: int
    n_ci: int
    n_ic: int
    n_ii: int

    @property
    def n_correct_before(self) -> int:
        return self.n_cc + self.n_ci

    @property
    def n_incorrect_before(self) -> int:
        return self.n_ic + self.n_ii

    @property
    def total(self) -> int:
        return self.n_cc + self.n_ci + self.n_ic + self.n_ii


@dataclass(frozen=True)
class TransitionEstimate:
    """Per-transition rates with Wilson intervals; None where the pool is empty."""

    counts: TransitionCounts
    eir: float | None
    ecr: float | None
    eir_interval: tuple[float, float] | None
    ecr_interval: tuple[float, float] | None


@dataclass(frozen=True)
class RateEstimates:
    per_transition: tuple[TransitionEstimate, ...]
    pooled_eir: float | None
    pooled_ecr: float | None
    accuracy_series: tuple[AccuracyPoint, ...]


def count_transitions(log: CorrectnessLog, transition: int) -> TransitionCounts:
    """Flow counts across columns ``transition`` -> ``transition + 1``."""
    if not 0 <= transition < log.n_iterations:
        raise ValueError(
            f"transition must be in [0, {log.n_iterations}), got {transition}"
        )
    before = log.correctness[:, transition]
    after = log.correctness[:, transition + 1]
    return TransitionCounts(
        n_cc=int(np.count_nonzero(before & after)),
        n_ci=int(np.count_nonzero(before & ~after)),
        n_ic=int(np.count_nonzero(~before & after)),
        n_ii=int(np.count_nonzero(~before & ~after)),
    )


def accuracy_series(log: CorrectnessLog) -> list[AccuracyPoint]:
    """Per-iteration accuracy and net benefit, derived from integer counts."""
    n = log.n_problems
    counts = [int(np.count_nonzero(log.correctness[:, k])) for k in range(log.n_iterations + 1)]
    points = [AccuracyPoint(iteration=0, accuracy=counts[0] / n)]
    for k in range(1, len(counts)):
        points.append(
            AccuracyPoint(
                iteration=k,
                accuracy=counts[k] / n,
                net_benefit=(counts[k] - counts[k - 1]) / n,
            )
        )
    return points


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Always contains the point estimate; degenerate ``trials == 0`` returns
    the vacuous interval (0, 1).
    """
    if trials < 0 or successes < 0 or successes > trials:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    if trials == 0:
        return (0.0, 1.0)
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    n = trials
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n))
    # at the degenerate point estimates the bound is exactly the estimate,
    # but center - half leaves ~1 ulp of residue; pin it
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def _rate(successes: int, pool: int) -> float | None:
    return successes / pool if pool > 0 else None


def estimate_rates(log: CorrectnessLog, confidence: float = 0.95) -> RateEstimates:
    """Per-transition and pooled rate estimates for one log."""
    per = []
    intro, correct_pool, fixed, incorrect_pool = 0, 0, 0, 0
    for t in range(log.n_iterations):
        counts = count_transitions(log, t)
        eir = _rate(counts.n_ci, counts.n_correct_before)
        ecr = _rate(counts.n_ic, counts.n_incorrect_before)
        per.append(
            TransitionEstimate(
                counts=counts,
                eir=eir,
                ecr=ecr,
                eir_interval=(
                    wilson_interval(counts.n_ci, counts.n_correct_before, confidence)
                    if eir is not None
                    else None
                ),
                ecr_interval=(
                    wilson_interval(counts.n_ic, counts.n_incorrect_before, confidence)
                    if ecr is not None
                    else None
                ),
            )
        )
        intro += counts.n_ci
        correct_pool += counts.n_correct_before
        fixed += counts.n_ic
        incorrect_pool += counts.n_incorrect_before
    return RateEstimates(
        per_transition=tuple(per),
        pooled_eir=_rate(intro, correct_pool),
        pooled_ecr=_rate(fixed, incorrect_pool),
        accuracy_series=tuple(accuracy_series(log)),
    )


def running_pooled_rates(log: CorrectnessLog, upto_transition: int) -> tuple[float | None, float | None]:
    """Count-pooled (eir, ecr) over transitions 0..upto_transition inclusive."""
    if not 0 <= upto_transition < log.n_iterations:
        raise ValueError(
            f"upto_transition must be in [0, {log.n_iterations}), got {upto_transition}"
        )
    intro, correct_pool, fixed, incorrect_pool = 0, 0, 0, 0
    for t in range(upto_transition + 1):
        counts = count_transitions(log, t)
        intro += counts.n_ci
        correct_pool += counts.n_correct_before
        fixed += counts.n_ic
        incorrect_pool += counts.n_incorrect_before
    return (_rate(intro, correct_pool), _rate(fixed, incorrect_pool))
