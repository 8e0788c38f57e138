import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binomtest

from rainbow_qae.estimation import (
    AmplitudeProblem,
    EstimationError,
    clopper_pearson,
    exact_amplitude,
    grover_operator,
    grover_power_probability,
    iqae,
)
from rainbow_qae.statevector import CRY, RY, Circuit


def single_qubit(amp):
    return AmplitudeProblem(Circuit(1, [RY(2 * math.asin(math.sqrt(amp)), 0)]), 0)


def two_qubit(amp_given_one=0.6):
    # flag on qubit 1, entangled with a superposed control
    theta = 2 * math.asin(math.sqrt(amp_given_one))
    return AmplitudeProblem(Circuit(2, [RY(1.1, 0), CRY(theta, 0, 1)]), 1)


@pytest.mark.parametrize("problem", [single_qubit(0.3), two_qubit()])
def test_grover_law(problem):
    theta = math.asin(math.sqrt(exact_amplitude(problem)))
    for k in range(6):
        got = grover_power_probability(problem, k)
        assert got == pytest.approx(math.sin((2 * k + 1) * theta) ** 2, abs=1e-12)


def test_grover_operator_layout():
    problem = two_qubit()
    q = grover_operator(problem)
    assert q.num_qubits == 2
    assert len(q) == 2 + 2 * len(problem.circuit) + 2 + 3 + 2


@given(st.integers(0, 60), st.integers(1, 60), st.floats(0.01, 0.3))
def test_clopper_pearson_matches_scipy(ones, extra, alpha):
    shots = ones + extra if ones < 60 else ones
    ci = binomtest(ones, shots).proportion_ci(1 - alpha, method="exact")
    lo, hi = clopper_pearson(ones, shots, alpha)
    assert lo == pytest.approx(ci.low, abs=1e-10)
    assert hi == pytest.approx(ci.high, abs=1e-10)


@pytest.mark.parametrize("amp", [0.0, 0.05, 0.3, 0.5, 0.9, 1.0])
def test_iqae_contract(amp):
    res = iqae(single_qubit(amp), epsilon=0.01, alpha=0.05, shots_per_round=200, seed=3)
    lo, hi = res.confidence_interval
    assert lo <= res.estimation <= hi
    assert hi - lo <= 2 * 0.01 + 1e-12
    assert abs(res.estimation - amp) <= 0.01
    assert res.converged


def test_iqae_zero_amplitude_is_exact():
    res = iqae(single_qubit(0.0), epsilon=0.005, seed=0)
    assert res.estimation == 0.0


def test_iqae_reproducible():
    a = iqae(two_qubit(), epsilon=0.01, seed=11)
    b = iqae(two_qubit(), epsilon=0.01, seed=11)
    assert a.estimation == b.estimation and a.rounds == b.rounds


def test_powers_increase_and_queries_add_up():
    res = iqae(single_qubit(0.3), epsilon=0.001, shots_per_round=100, seed=5)
    powers = res.powers
    assert powers == sorted(powers)
    assert res.oracle_queries == sum(r.k * r.shots for r in res.rounds)
    assert res.telemetry_csv().splitlines()[0] == "round,k,shots,ones,lower,upper"


def test_power_cap_is_respected():
    res = iqae(single_qubit(0.3), epsilon=0.002, shots_per_round=100, seed=1, max_power=3)
    assert max(res.powers) <= 3
    assert abs(res.estimation - 0.3) <= 0.002


def test_non_convergence_reports_telemetry():
    with pytest.raises(EstimationError) as info:
        iqae(single_qubit(0.3), epsilon=0.001, shots_per_round=10, seed=0, max_power=0, max_rounds=3)
    partial = info.value.result
    assert not partial.converged and len(partial.rounds) == 3


def test_argument_validation():
    with pytest.raises(ValueError):
        iqae(single_qubit(0.3), epsilon=0.6)
    with pytest.raises(ValueError):
        iqae(single_qubit(0.3), alpha=0.0)
    with pytest.raises(ValueError):
        AmplitudeProblem(Circuit(1, []), 3)


def test_query_count_scales_like_inverse_epsilon():
    theta = math.asin(math.sqrt(0.3))
    law = lambda k: math.sin((2 * k + 1) * theta) ** 2
    problem = single_qubit(0.3)
    eps = np.array([0.01, 0.003, 0.001, 0.0003])
    queries = [
        np.mean([iqae(problem, e, 0.05, 100, seed=s, probability=law).oracle_queries for s in range(20)])
        for e in eps
    ]
    slope = np.polyfit(np.log(eps), np.log(queries), 1)[0]
    # Heisenberg-like 1/eps up to log factors, far from the classical 1/eps^2
    assert -1.35 < slope < -0.8
