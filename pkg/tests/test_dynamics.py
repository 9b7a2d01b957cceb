"""Closed-form dynamics: frozen anchor values and algebraic properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refineloop.dynamics import (
    EQUILIBRIUM_TOLERANCE,
    TransitionRates,
    Verdict,
    closed_form_accuracy,
    equilibrium_ratio,
    net_benefit,
    rate_ratio,
    steady_state,
    step_accuracy,
    stop_or_iterate,
    subdominant_eigenvalue,
)

probabilities = st.floats(0.0, 1.0, allow_nan=False, allow_infinity=False)


# -- frozen anchors ------------------------------------------------------------


def test_step_accuracy_anchor():
    # 0.912 * 0.987 + 0.088 * 0.0
    assert step_accuracy(0.912, TransitionRates(0.013, 0.0)) == pytest.approx(0.900144, abs=1e-12)


def test_equilibrium_ratio_anchors():
    assert equilibrium_ratio(0.5) == 1.0
    assert equilibrium_ratio(0.0) == 0.0
    assert equilibrium_ratio(1.0) == math.inf
    assert equilibrium_ratio(0.896) == pytest.approx(8.615384615384615, rel=1e-12)
    assert equilibrium_ratio(0.976) == pytest.approx(40.666666666666664, rel=1e-12)


def test_rate_ratio_extended_reals():
    assert rate_ratio(TransitionRates(0.002, 0.25)) == 125.0
    assert rate_ratio(TransitionRates(0.0, 0.1)) == math.inf
    assert math.isnan(rate_ratio(TransitionRates(0.0, 0.0)))
    assert rate_ratio(TransitionRates(0.1, 0.0)) == 0.0


def test_stop_or_iterate_anchor_iterate():
    verdict = stop_or_iterate(0.976, TransitionRates(eir=0.002, ecr=0.25))
    assert verdict.verdict is Verdict.ITERATE
    assert verdict.rate_ratio == 125.0
    assert verdict.accuracy_odds == pytest.approx(40.666666666666664, rel=1e-12)
    assert verdict.net_benefit > 0


def test_stop_or_iterate_anchor_stop():
    verdict = stop_or_iterate(0.912, TransitionRates(eir=0.013, ecr=0.0))
    assert verdict.verdict is Verdict.STOP
    assert verdict.net_benefit == pytest.approx(-0.011856, abs=1e-12)


def test_absorbing_pair_is_at_equilibrium():
    verdict = stop_or_iterate(0.7, TransitionRates(0.0, 0.0))
    assert verdict.verdict is Verdict.AT_EQUILIBRIUM
    assert verdict.net_benefit == 0.0
    assert math.isnan(verdict.rate_ratio)


def test_stationary_point_is_at_equilibrium():
    # acc equal to ecr/(eir+ecr) zeroes the net benefit
    verdict = stop_or_iterate(0.75, TransitionRates(0.05, 0.15))
    assert verdict.verdict is Verdict.AT_EQUILIBRIUM


def test_steady_state_values():
    summary = steady_state(TransitionRates(0.05, 0.15))
    assert summary.accuracy == pytest.approx(0.75, abs=1e-15)
    assert summary.eigenvalue == pytest.approx(0.8, abs=1e-15)
    assert not summary.absorbing

    frozen = steady_state(TransitionRates(0.0, 0.0))
    assert math.isnan(frozen.accuracy)
    assert frozen.eigenvalue == 1.0
    assert frozen.absorbing


def test_subdominant_eigenvalue():
    assert subdominant_eigenvalue(TransitionRates(0.05, 0.15)) == pytest.approx(0.8)
    assert subdominant_eigenvalue(TransitionRates(1.0, 1.0)) == pytest.approx(-1.0)
    assert subdominant_eigenvalue(TransitionRates(0.0, 0.0)) == 1.0


def test_closed_form_iteration_zero_is_exact():
    assert closed_form_accuracy(0, TransitionRates(0.3, 0.4), 0.123456789) == 0.123456789


def test_closed_form_absorbing_never_moves():
    for k in (1, 5, 50):
        assert closed_form_accuracy(k, TransitionRates(0.0, 0.0), 0.37) == 0.37


def test_input_validation():
    with pytest.raises(ValueError):
        TransitionRates(-0.1, 0.5)
    with pytest.raises(ValueError):
        TransitionRates(0.1, 1.5)
    with pytest.raises(ValueError):
        step_accuracy(1.2, TransitionRates(0.1, 0.1))
    with pytest.raises(ValueError):
        closed_form_accuracy(-1, TransitionRates(0.1, 0.1), 0.5)
    with pytest.raises(ValueError):
        closed_form_accuracy(2.0, TransitionRates(0.1, 0.1), 0.5)


# -- matrix-power oracle -------------------------------------------------------


def _matrix_power_accuracy(k: int, eir: float, ecr: float, acc0: float) -> float:
    """Independent oracle: (acc, 1-acc) times the k-th matrix power."""
    T = np.array([[1.0 - eir, eir], [ecr, 1.0 - ecr]])
    row = np.array([acc0, 1.0 - acc0]) @ np.linalg.matrix_power(T, k)
    return float(row[0])


def test_matrix_power_oracle_random_tuples():
    gen = np.random.default_rng(20240815)
    for _ in range(1000):
        eir, ecr, acc0 = gen.random(3)
        k = int(gen.integers(0, 65))
        want = _matrix_power_accuracy(k, eir, ecr, acc0)
        got = closed_form_accuracy(k, TransitionRates(eir, ecr), acc0)
        assert abs(got - want) <= 1e-12


# -- algebraic properties ------------------------------------------------------


@given(eir=probabilities, ecr=probabilities, acc0=probabilities, k=st.integers(0, 64))
@settings(max_examples=300)
def test_closed_form_matches_recurrence(eir, ecr, acc0, k):
    rates = TransitionRates(eir, ecr)
    acc = acc0
    for _ in range(k):
        acc = step_accuracy(acc, rates)
    assert abs(closed_form_accuracy(k, rates, acc0) - acc) <= 1e-12


@given(eir=probabilities, ecr=probabilities)
def test_matrix_rows_sum_to_one_exactly(eir, ecr):
    matrix = TransitionRates(eir, ecr).matrix()
    assert matrix[0][0] + matrix[0][1] == 1.0
    assert matrix[1][0] + matrix[1][1] == 1.0


@given(
    eir=st.floats(1e-6, 1.0, allow_nan=False),
    ecr=probabilities,
    acc=st.floats(0.0, 1.0 - 1e-9, allow_nan=False),
)
def test_verdict_agrees_with_net_benefit_sign(eir, ecr, acc):
    rates = TransitionRates(eir, ecr)
    nb = net_benefit(acc, rates)
    verdict = stop_or_iterate(acc, rates).verdict
    if nb > EQUILIBRIUM_TOLERANCE:
        assert verdict is Verdict.ITERATE
    elif nb < -EQUILIBRIUM_TOLERANCE:
        assert verdict is Verdict.STOP
    else:
        assert verdict is Verdict.AT_EQUILIBRIUM


@given(eir=st.floats(1e-9, 1.0), ecr=st.floats(1e-9, 1.0))
def test_steady_state_is_fixed_point(eir, ecr):
    rates = TransitionRates(eir, ecr)
    pi = steady_state(rates).accuracy
    assert abs(step_accuracy(pi, rates) - pi) <= 1e-12


@given(acc=st.floats(1e-5, 1.0 - 1e-5, allow_nan=False))
def test_equilibrium_ratio_reciprocal_symmetry(acc):
    # near the endpoints the rounding of 1 - acc alone moves the product
    # by ~eps/min(acc, 1 - acc), so the domain stays away from them
    product = equilibrium_ratio(acc) * equilibrium_ratio(1.0 - acc)
    assert product == pytest.approx(1.0, rel=1e-9)


def test_equilibrium_ratio_strictly_increasing_on_grid():
    grid = np.linspace(0.0, 0.999, 400)
    values = [equilibrium_ratio(float(a)) for a in grid]
    assert all(b > a for a, b in zip(values, values[1:]))


@given(
    eir=st.floats(1e-4, 0.9),
    ecr=st.floats(1e-4, 0.9),
    acc0=probabilities,
)
@settings(max_examples=200)
def test_distance_to_steady_state_shrinks_geometrically(eir, ecr, acc0):
    rates = TransitionRates(eir, ecr)
    summary = steady_state(rates)
    lam = abs(summary.eigenvalue)
    gap = abs(acc0 - summary.accuracy)
    acc = acc0
    for _ in range(8):
        acc = step_accuracy(acc, rates)
        new_gap = abs(acc - summary.accuracy)
        # geometric with ratio |lambda|, allowing float slack near zero
        assert new_gap <= lam * gap + 1e-12
        gap = new_gap
