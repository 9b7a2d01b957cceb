"""Monte Carlo and analytic trajectories of refinement loops.

The population simulator runs N independent two-state chains under a rate
schedule. All randomness comes from the counter-based generator in
:mod:`refineloop.rng`: iteration k of problem i consumes the draw at
(seed, stream k+1, index i), so any subset of problems can be simulated
in any order (or on any worker count) with bit-identical results.
Iteration 0 is deterministic: exactly round(N * acc0) problems start
correct, their slots chosen by a seeded shuffle.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .dynamics import AccuracyPoint, TransitionRates, step_accuracy, _check_probability
from .logs import CorrectnessLog
from .schedule import RateSchedule

__all__ = ["SimConfig", "SimTrajectory", "simulate_population", "analytic_trajectory", "deterministic_replay"]


@dataclass(frozen=True)
class SimConfig:
    n_problems: int
    n_iterations: int
    initial_accuracy: float
    seed: int
    schedule: RateSchedule

    def __post_init__(self):
        if not isinstance(self.n_problems, int) or self.n_problems < 1:
            raise ValueError(f"n_problems must be a positive int, got {self.n_problems!r}")
        if not isinstance(self.n_iterations, int) or self.n_iterations < 1:
            raise ValueError(f"n_iterations must be a positive int, got {self.n_iterations!r}")
        _check_probability("initial_accuracy", self.initial_accuracy)
        rng.check_seed(self.seed)
        if not isinstance(self.schedule, RateSchedule):
            raise ValueError("schedule must be a RateSchedule")


@dataclass(eq=False)
class SimTrajectory:
    """Simulated correctness log plus an echo of the config that made it."""

    log: CorrectnessLog
    config: SimConfig


def _problem_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"p{i:0{width}d}" for i in range(n)]


def _resolve_schedule(config: SimConfig) -> list[TransitionRates]:
    # Resolve every transition up front so an under-specified schedule
    # fails before any work is done.
    return [config.schedule.rates_for(t) for t in range(config.n_iterations)]


def _initial_column(config: SimConfig) -> np.ndarray:
    n = config.n_problems
    n_correct = int(round(n * config.initial_accuracy))
    keys = rng.uniforms(config.seed, rng.SIM_INIT_STREAM, np.arange(n))
    order = np.argsort(keys, kind="stable")
    state = np.zeros(n, dtype=bool)
    state[order[:n_correct]] = True
    return state


def simulate_population(config: SimConfig) -> SimTrajectory:
    """Simulate N chains under the config's schedule; fully seed-determined."""
    rates = _resolve_schedule(config)
    state = _initial_column(config)
    columns = [state]
    indices = np.arange(config.n_problems)
    for t, r in enumerate(rates):
        u = rng.uniforms(config.seed, rng.SIM_TRANSITION_BASE + t, indices)
        # A correct answer survives when u >= eir; an incorrect one is
        # fixed when u < ecr.
        state = np.where(state, u >= r.eir, u < r.ecr)
        columns.append(state)
    metadata = {
        "generator": rng.GENERATOR_ID,
        "seed": str(config.seed),
        "initial_accuracy": repr(float(config.initial_accuracy)),
        "n_problems": str(config.n_problems),
        "n_iterations": str(config.n_iterations),
        "schedule": ";".join(f"{r.eir!r}:{r.ecr!r}" for r in rates),
    }
    if config.schedule.name:
        metadata["schedule_name"] = config.schedule.name
    log = CorrectnessLog(
        problem_ids=_problem_ids(config.n_problems),
        correctness=np.column_stack(columns),
        metadata=metadata,
    )
    return SimTrajectory(log=log, config=config)


def analytic_trajectory(schedule: RateSchedule, initial_accuracy: float, n_iterations: int) -> list[AccuracyPoint]:
    """Exact population accuracy under the schedule, no sampling noise."""
    acc = _check_probability("initial_accuracy", initial_accuracy)
    points = [AccuracyPoint(iteration=0, accuracy=acc)]
    for t in range(n_iterations):
        nxt = step_accuracy(acc, schedule.rates_for(t))
        points.append(AccuracyPoint(iteration=t + 1, accuracy=nxt, net_benefit=nxt - acc))
        acc = nxt
    return points


def deterministic_replay(schedule: RateSchedule, initial_accuracy: float, n_problems: int,
                         n_iterations: int | None = None) -> CorrectnessLog:
    """Integer-exact replay: each transition flips round(pool * rate) problems.

    No randomness at all; the spoiled answers are taken from the top of
    the correct pool and the fixed ones from the bottom of the incorrect
    pool. Useful for reconstructing published aggregate tables, whose
    counts are exactly these rounded pools.
    """
    k = len(schedule) if n_iterations is None else n_iterations
    if k < 1:
        raise ValueError("need at least one transition")
    _check_probability("initial_accuracy", initial_accuracy)
    n_correct = int(round(n_problems * initial_accuracy))
    state = np.zeros(n_problems, dtype=bool)
    state[:n_correct] = True
    columns = [state.copy()]
    for t in range(k):
        r = schedule.rates_for(t)
        correct_idx = np.flatnonzero(state)
        incorrect_idx = np.flatnonzero(~state)
        n_spoil = int(round(len(correct_idx) * r.eir))
        n_fix = int(round(len(incorrect_idx) * r.ecr))
        state = state.copy()
        if n_spoil:
            state[correct_idx[-n_spoil:]] = False
        if n_fix:
            state[incorrect_idx[:n_fix]] = True
        columns.append(state)
    metadata = {
        "builder": "deterministic-replay",
        "initial_accuracy": repr(float(initial_accuracy)),
        "n_problems": str(n_problems),
    }
    if schedule.name:
        metadata["schedule_name"] = schedule.name
    return CorrectnessLog(
        problem_ids=_problem_ids(n_problems),
        correctness=np.column_stack(columns),
        metadata=metadata,
    )
