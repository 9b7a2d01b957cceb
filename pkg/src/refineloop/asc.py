"""Adaptive stopping controller for refinement loops.

One instance runs: generate an answer, score confidence; if confident,
stop. Otherwise refine up to ``max_iterations`` times, and after each
refinement stop on the first of two criteria, checked in this order:

* confidence: the new answer's score reaches ``tau`` -- keep it;
* equilibrium: the running error-introduction rate has caught up with the
  error-correction rate (``eir >= ecr``, ties stop) -- the loop is no
  longer expected to help, so keep the *previous* answer.

If neither fires, the budget runs out and the last answer stands. Where
the rates come from is explicit: a calibration pair fixed up front, a
live labeled estimate (batch mode), or nothing (criterion disabled).

Batch mode runs many instances in lockstep rounds; with labels it pools
transition counts across instances after every round and applies one
shared equilibrium decision to the still-active instances.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Protocol, Sequence

from .dynamics import TransitionRates
from .stats import McNemarResult, BootstrapDelta, mcnemar_from_logs, paired_bootstrap_delta

__all__ = [
    "StopReason",
    "EquilibriumMode",
    "AscConfig",
    "RefinementBackend",
    "AscBackendError",
    "AscOutcome",
    "BatchSummary",
    "run_asc_instance",
    "run_asc_batch",
    "ScriptedBackend",
    "ScenarioError",
    "Scenario",
    "load_scenario",
    "run_scenario",
    "ConfidenceTaxReport",
    "confidence_tax_report",
]


class StopReason(Enum):
    CONFIDENCE = "confidence"
    EQUILIBRIUM = "equilibrium"
    BUDGET = "budget"


class EquilibriumMode(Enum):
    DISABLED = "disabled"
    CALIBRATION_ONLY = "calibration-only"
    ONLINE_LABELED = "online-labeled"


@dataclass(frozen=True)
class AscConfig:
    tau: float = 8.0
    max_iterations: int = 4
    calibration_rates: TransitionRates | None = None
    equilibrium_mode: EquilibriumMode = EquilibriumMode.DISABLED

    def __post_init__(self):
        if not 1.0 <= self.tau <= 10.0:
            raise ValueError(f"tau must be on the 1-10 confidence scale, got {self.tau!r}")
        if not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive int, got {self.max_iterations!r}")
        if self.equilibrium_mode is EquilibriumMode.CALIBRATION_ONLY and self.calibration_rates is None:
            raise ValueError("calibration-only equilibrium mode needs calibration_rates")


class RefinementBackend(Protocol):
    """What the controller needs from a model."""

    def generate(self, problem: Any) -> Any: ...

    def refine(self, problem: Any, previous: Any) -> Any: ...

    def confidence(self, problem: Any, answer: Any) -> float: ...


class AscBackendError(RuntimeError):
    """Backend failure, with the partial trace gathered before it."""

    def __init__(self, message: str, problem: Any, answers: list, scores: list):
        super().__init__(message)
        self.problem = problem
        self.answers = list(answers)
        self.scores = list(scores)


@dataclass(frozen=True)
class AscOutcome:
    final_answer: Any
    iterations_used: int
    stop_reason: StopReason
    confidence_trace: tuple[float, ...]
    answer_index: int  # which r^(k) was returned; equals iterations_used


class _Instance:
    """State machine for one problem; driven one round at a time."""

    def __init__(self, problem: Any, backend: RefinementBackend, config: AscConfig):
        self.problem = problem
        self.backend = backend
        self.config = config
        self.answers: list[Any] = []
        self.scores: list[float] = []
        self.outcome: AscOutcome | None = None

    @property
    def active(self) -> bool:
        return self.outcome is None

    def _call(self, fn, *args):
        try:
            return fn(*args)
        except Exception as exc:
            raise AscBackendError(
                f"backend failed during {fn.__name__}: {exc}", self.problem, self.answers, self.scores
            ) from exc

    def _finish(self, index: int, reason: StopReason) -> None:
        self.outcome = AscOutcome(
            final_answer=self.answers[index],
            iterations_used=index,
            stop_reason=reason,
            confidence_trace=tuple(self.scores),
            answer_index=index,
        )

    def initial_round(self) -> None:
        answer = self._call(self.backend.generate, self.problem)
        self.answers.append(answer)
        score = float(self._call(self.backend.confidence, self.problem, answer))
        self.scores.append(score)
        if score >= self.config.tau:
            self._finish(0, StopReason.CONFIDENCE)

    def refine_round(self) -> None:
        answer = self._call(self.backend.refine, self.problem, self.answers[-1])
        self.answers.append(answer)
        score = float(self._call(self.backend.confidence, self.problem, answer))
        self.scores.append(score)
        if score >= self.config.tau:
            self._finish(len(self.answers) - 1, StopReason.CONFIDENCE)

    def equilibrium_check(self, rates: TransitionRates | None) -> None:
        # Ties stop: once introductions keep pace with corrections the
        # expected net benefit is not positive. The answer produced by the
        # round that triggered the stop is discarded in favor of its
        # predecessor.
        if rates is not None and rates.eir >= rates.ecr:
            self._finish(len(self.answers) - 2, StopReason.EQUILIBRIUM)

    def budget_stop(self) -> None:
        self._finish(len(self.answers) - 1, StopReason.BUDGET)


def _static_rates(config: AscConfig, equilibrium_feed) -> Callable[[], TransitionRates | None]:
    mode = config.equilibrium_mode
    if mode is EquilibriumMode.DISABLED:
        return lambda: None
    if mode is EquilibriumMode.CALIBRATION_ONLY:
        return lambda: config.calibration_rates
    if equilibrium_feed is None:
        raise ValueError("online-labeled equilibrium mode needs an equilibrium_feed")
    return equilibrium_feed


def run_asc_instance(
    problem: Any,
    backend: RefinementBackend,
    config: AscConfig,
    equilibrium_feed: Callable[[], TransitionRates | None] | None = None,
) -> AscOutcome:
    """Run the controller to completion for a single problem."""
    rates_now = _static_rates(config, equilibrium_feed)
    inst = _Instance(problem, backend, config)
    inst.initial_round()
    for _ in range(config.max_iterations):
        if not inst.active:
            break
        inst.refine_round()
        if inst.active:
            inst.equilibrium_check(rates_now())
    if inst.active:
        inst.budget_stop()
    return inst.outcome


@dataclass(frozen=True)
class BatchSummary:
    n_instances: int
    rounds_executed: int
    iterations_histogram: dict[int, int]
    stop_reasons: dict[StopReason, int]
    equilibrium_fired_round: int | None
    final_pooled_rates: TransitionRates | None


class _PooledCounts:
    """Running labeled transition counts across a batch."""

    def __init__(self):
        self.intro = 0
        self.correct_pool = 0
        self.fixed = 0
        self.incorrect_pool = 0

    def add(self, was_correct: bool, is_correct: bool) -> None:
        if was_correct:
            self.correct_pool += 1
            self.intro += not is_correct
        else:
            self.incorrect_pool += 1
            self.fixed += is_correct

    def rates(self) -> TransitionRates | None:
        # Both pools must be populated before the criterion can compare
        # the two estimates; otherwise it is skipped for the round.
        if self.correct_pool == 0 or self.incorrect_pool == 0:
            return None
        return TransitionRates(
            eir=self.intro / self.correct_pool, ecr=self.fixed / self.incorrect_pool
        )


def _label_lookup(labels, problem: Any, iteration: int) -> bool:
    try:
        return bool(labels[problem][iteration])
    except (KeyError, IndexError, TypeError) as exc:
        raise ValueError(
            f"online-labeled mode: no label for problem {problem!r}, iteration {iteration}"
        ) from exc


def run_asc_batch(
    problems: Sequence[Any],
    backend: RefinementBackend,
    config: AscConfig,
    labels: Mapping[Any, Sequence[bool]] | None = None,
) -> tuple[list[AscOutcome], BatchSummary]:
    """Run many instances in lockstep rounds under one shared stop rule.

    In online-labeled mode ``labels[problem][k]`` must give the
    correctness of that problem's iteration-k answer; rates are re-pooled
    after every round from all transitions executed so far, and one
    equilibrium decision is applied to every still-active instance.
    """
    online = config.equilibrium_mode is EquilibriumMode.ONLINE_LABELED
    if online:
        if labels is None:
            raise ValueError("online-labeled equilibrium mode needs labels for every problem")
        for problem in problems:
            _label_lookup(labels, problem, 0)
    instances = [_Instance(p, backend, config) for p in problems]
    pooled = _PooledCounts()
    equilibrium_round: int | None = None
    rounds = 0
    for inst in instances:
        inst.initial_round()
    for k in range(1, config.max_iterations + 1):
        refining = [inst for inst in instances if inst.active]
        if not refining:
            break
        rounds = k
        for inst in refining:
            inst.refine_round()
        if online:
            # Every instance that refined this round contributes its
            # observed transition, including ones that just stopped on
            # confidence; their labels are data like any other.
            for inst in refining:
                was = _label_lookup(labels, inst.problem, k - 1)
                now = _label_lookup(labels, inst.problem, k)
                pooled.add(was, now)
            rates = pooled.rates()
        elif config.equilibrium_mode is EquilibriumMode.CALIBRATION_ONLY:
            rates = config.calibration_rates
        else:
            rates = None
        if rates is not None and rates.eir >= rates.ecr:
            fired = False
            for inst in instances:
                if inst.active:
                    inst.equilibrium_check(rates)
                    fired = True
            if fired and equilibrium_round is None:
                equilibrium_round = k
    for inst in instances:
        if inst.active:
            inst.budget_stop()
    outcomes = [inst.outcome for inst in instances]
    histogram: dict[int, int] = {}
    reasons: dict[StopReason, int] = {}
    for out in outcomes:
        histogram[out.iterations_used] = histogram.get(out.iterations_used, 0) + 1
        reasons[out.stop_reason] = reasons.get(out.stop_reason, 0) + 1
    return outcomes, BatchSummary(
        n_instances=len(outcomes),
        rounds_executed=rounds,
        iterations_histogram=dict(sorted(histogram.items())),
        stop_reasons=reasons,
        equilibrium_fired_round=equilibrium_round,
        final_pooled_rates=pooled.rates() if online else None,
    )


# -- scripted scenarios -------------------------------------------------------

SCENARIO_VERSION = "asc-scenario/v1"


class ScenarioError(ValueError):
    """A scenario file violated the format."""


@dataclass(frozen=True)
class ScriptedProblem:
    problem_id: str
    answers: tuple[Any, ...]  # r^(0), r^(1), ...
    confidences: tuple[float, ...]
    correct: tuple[bool, ...] | None = None


class ScriptedBackend:
    """Replays scripted answers and confidence scores; records every call.

    ``calls`` accumulates (method, problem_id) tuples in invocation order,
    which doubles as the golden trace in tests.
    """

    def __init__(self, problems: Sequence[ScriptedProblem]):
        self._scripts = {p.problem_id: p for p in problems}
        self._cursor = {p.problem_id: 0 for p in problems}
        self.calls: list[tuple[str, str]] = []

    def _script(self, problem: str) -> ScriptedProblem:
        try:
            return self._scripts[problem]
        except KeyError:
            raise KeyError(f"no script for problem {problem!r}") from None

    def _next_answer(self, problem: str) -> Any:
        script = self._script(problem)
        k = self._cursor[problem]
        if k >= len(script.answers):
            raise IndexError(f"script for {problem!r} exhausted after {k} answers")
        self._cursor[problem] = k + 1
        return script.answers[k]

    def generate(self, problem: str) -> Any:
        self.calls.append(("generate", problem))
        return self._next_answer(problem)

    def refine(self, problem: str, previous: Any) -> Any:
        self.calls.append(("refine", problem))
        return self._next_answer(problem)

    def confidence(self, problem: str, answer: Any) -> float:
        self.calls.append(("confidence", problem))
        script = self._script(problem)
        return float(script.confidences[self._cursor[problem] - 1])


@dataclass(frozen=True)
class Scenario:
    config: AscConfig
    problems: tuple[ScriptedProblem, ...]
    metadata: dict[str, str]

    def labels(self) -> dict[str, tuple[bool, ...]] | None:
        if any(p.correct is None for p in self.problems):
            return None
        return {p.problem_id: p.correct for p in self.problems}


def _scenario_problem(entry, index: int) -> ScriptedProblem:
    if not isinstance(entry, dict):
        raise ScenarioError(f"problems[{index}] must be an object")
    try:
        pid = str(entry["id"])
        answers = tuple(entry["answers"])
        confidences = tuple(float(g) for g in entry["confidences"])
    except KeyError as exc:
        raise ScenarioError(f"problems[{index}] missing field {exc}") from None
    if len(answers) != len(confidences):
        raise ScenarioError(
            f"problems[{index}]: {len(answers)} answers vs {len(confidences)} confidences"
        )
    if not answers:
        raise ScenarioError(f"problems[{index}]: needs at least the initial answer")
    for g in confidences:
        if not 1.0 <= g <= 10.0:
            raise ScenarioError(f"problems[{index}]: confidence {g} outside the 1-10 scale")
    correct = None
    if "correct" in entry:
        correct = tuple(bool(c) for c in entry["correct"])
        if len(correct) != len(answers):
            raise ScenarioError(f"problems[{index}]: correct length must match answers")
    return ScriptedProblem(problem_id=pid, answers=answers, confidences=confidences, correct=correct)


def load_scenario(path) -> Scenario:
    """Parse a declarative scenario file (JSON, versioned)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != SCENARIO_VERSION:
        raise ScenarioError(f"expected a JSON object with format={SCENARIO_VERSION!r}")
    try:
        mode = EquilibriumMode(doc.get("equilibrium_mode", "disabled"))
    except ValueError:
        raise ScenarioError(
            f"equilibrium_mode must be one of {[m.value for m in EquilibriumMode]}"
        ) from None
    rates = None
    if "calibration_rates" in doc:
        pair = doc["calibration_rates"]
        try:
            rates = TransitionRates(float(pair["eir"]), float(pair["ecr"]))
        except (TypeError, KeyError, ValueError) as exc:
            raise ScenarioError(f"calibration_rates must be {{eir, ecr}} probabilities: {exc}") from None
    try:
        config = AscConfig(
            tau=float(doc.get("tau", 8.0)),
            max_iterations=int(doc.get("max_iterations", 4)),
            calibration_rates=rates,
            equilibrium_mode=mode,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    raw_problems = doc.get("problems")
    if not isinstance(raw_problems, list) or not raw_problems:
        raise ScenarioError("scenario needs a non-empty problems list")
    problems = tuple(_scenario_problem(entry, i) for i, entry in enumerate(raw_problems))
    if len({p.problem_id for p in problems}) != len(problems):
        raise ScenarioError("problem ids must be unique")
    metadata = {str(k): str(v) for k, v in dict(doc.get("metadata", {})).items()}
    return Scenario(config=config, problems=problems, metadata=metadata)


def run_scenario(scenario: Scenario) -> tuple[list[AscOutcome], BatchSummary, ScriptedBackend]:
    """Run a scripted scenario through the lockstep batch controller."""
    labels = scenario.labels()
    if scenario.config.equilibrium_mode is EquilibriumMode.ONLINE_LABELED and labels is None:
        raise ScenarioError("online-labeled scenarios must label every problem")
    backend = ScriptedBackend(scenario.problems)
    outcomes, summary = run_asc_batch(
        [p.problem_id for p in scenario.problems], backend, scenario.config, labels=labels
    )
    return outcomes, summary, backend


# -- confidence tax -----------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceTaxReport:
    """Iteration-0 cost of confidence elicitation, with paired tests."""

    accuracy_with: float
    accuracy_without: float
    delta_pp: float  # with-elicitation minus without
    test: McNemarResult
    bootstrap: BootstrapDelta


def confidence_tax_report(log_with, log_without, resamples: int = 10_000, seed: int = 0) -> ConfidenceTaxReport:
    """Compare iteration-0 accuracy with vs without confidence elicitation.

    Both logs must cover the same problems; rows are aligned by id.
    """
    if set(log_with.problem_ids) != set(log_without.problem_ids):
        raise ValueError("logs cover different problem sets; cannot pair them")
    pos = {pid: i for i, pid in enumerate(log_without.problem_ids)}
    order = [pos[pid] for pid in log_with.problem_ids]
    col_with = log_with.correctness[:, 0]
    col_without = log_without.correctness[order, 0]
    n = len(order)
    return ConfidenceTaxReport(
        accuracy_with=float(col_with.sum()) / n,
        accuracy_without=float(col_without.sum()) / n,
        delta_pp=float(col_with.sum() - col_without.sum()) / n * 100.0,
        test=mcnemar_from_logs(col_without, col_with),
        bootstrap=paired_bootstrap_delta(col_without, col_with, resamples=resamples, seed=seed),
    )
