"""Grover operator and Iterative Quantum Amplitude Estimation (IQAE).

IQAE follows Grinko, Gacon, Zoufal and Woerner, "Iterative Quantum Amplitude
Estimation" (npj Quantum Information 7, 2021): Grover powers ``k`` are chosen
so that the scaled angle interval stays inside one half-plane, and each round
tightens a Clopper-Pearson interval on ``sin^2((2k+1) theta)``.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .statevector import MCX, RY, Circuit, Gate, StateVector, X, flag_probability, run_gates, simulate

__all__ = [
    "AmplitudeProblem",
    "EstimationResult",
    "RoundRecord",
    "EstimationError",
    "grover_operator",
    "grover_power_probability",
    "exact_amplitude",
    "iqae",
    "clopper_pearson",
]


class EstimationError(RuntimeError):
    """IQAE did not converge; ``result`` carries the partial telemetry."""

    def __init__(self, message: str, result: "EstimationResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class AmplitudeProblem:
    """State preparation ``A`` and the qubit whose ``|1>`` probability is estimated."""

    circuit: Circuit
    flag: int

    def __post_init__(self) -> None:
        if not 0 <= self.flag < self.circuit.num_qubits:
            raise ValueError("flag qubit is outside the circuit")

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits


@dataclass(frozen=True)
class RoundRecord:
    k: int
    shots: int
    ones: int
    lower: float
    upper: float


@dataclass
class EstimationResult:
    estimation: float
    confidence_interval: tuple[float, float]
    epsilon: float
    alpha: float
    rounds: list[RoundRecord] = field(default_factory=list)
    oracle_queries: int = 0
    converged: bool = True

    @property
    def powers(self) -> list[int]:
        return [r.k for r in self.rounds]

    def telemetry_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["round", "k", "shots", "ones", "lower", "upper"])
        for i, r in enumerate(self.rounds):
            writer.writerow([i, r.k, r.shots, r.ones, repr(r.lower), repr(r.upper)])
        return buf.getvalue()


def _phase_flip(qubit: int) -> list[Gate]:
    # RY(pi) followed by X is diag(1, -1)
    return [RY(math.pi, qubit), X(qubit)]


def _zero_reflection(n: int) -> list[Gate]:
    """``I - 2|0><0|`` on ``n`` qubits, from X, RY and one MCX."""
    t = n - 1
    flips = [X(q) for q in range(n)]
    if n == 1:
        return flips + _phase_flip(t) + flips
    # RY(-pi/2) X RY(pi/2) = Z on the target
    mcz = [RY(math.pi / 2, t), MCX(tuple(range(n - 1)), t), RY(-math.pi / 2, t)]
    return flips + mcz + flips


def grover_operator(problem: AmplitudeProblem) -> Circuit:
    """``Q = A S_0 A^-1 S_chi`` (up to a global sign), gates listed in run order."""
    a = problem.circuit
    gates = (
        _phase_flip(problem.flag)
        + list(a.inverse().gates)
        + _zero_reflection(a.num_qubits)
        + list(a.gates)
    )
    return Circuit(a.num_qubits, gates, a.registers)


def exact_amplitude(problem: AmplitudeProblem) -> float:
    """``P(flag = 1)`` after ``A|0>``, from one exact simulation."""
    return flag_probability(simulate(problem.circuit), problem.flag)


class _PowerCache:
    """Holds ``Q^k A|0>`` and advances it; IQAE powers never decrease."""

    def __init__(self, problem: AmplitudeProblem):
        self.problem = problem
        self.q_gates = grover_operator(problem).gates
        self.k = 0
        self.psi = simulate(problem.circuit).amplitudes
        self._start = self.psi.copy()

    def probability(self, k: int) -> float:
        if k < self.k:
            self.psi = self._start.copy()
            self.k = 0
        while self.k < k:
            run_gates(self.psi, self.q_gates)
            self.k += 1
        return flag_probability(StateVector(self.psi), self.problem.flag)


def grover_power_probability(problem: AmplitudeProblem, k: int) -> float:
    """``P(flag = 1)`` after ``Q^k A|0>``, by gate-level simulation."""
    return _PowerCache(problem).probability(k)


def clopper_pearson(ones: int, shots: int, alpha: float) -> tuple[float, float]:
    """Exact two-sided ``1 - alpha`` binomial interval."""
    lower = 0.0 if ones == 0 else float(beta.ppf(alpha / 2, ones, shots - ones + 1))
    upper = 1.0 if ones == shots else float(beta.ppf(1 - alpha / 2, ones + 1, shots - ones))
    return lower, upper


def _find_next_k(
    k: int, upper_half: bool, theta: tuple[float, float], min_ratio: float, max_power: int | None
) -> tuple[int, bool]:
    # theta in units of full turns, i.e. amplitude = sin^2(2 pi theta)
    lo, hi = theta
    old_scaling = 4 * k + 2
    max_scaling = int(1 / (2 * (hi - lo)))
    scaling = max_scaling - (max_scaling - 2) % 4
    if max_power is not None:
        scaling = min(scaling, 4 * max_power + 2)
    while scaling >= min_ratio * old_scaling:
        t_lo = scaling * lo - int(scaling * lo)
        t_hi = scaling * hi - int(scaling * hi)
        if t_lo <= t_hi <= 0.5 and t_lo <= 0.5:
            return (scaling - 2) // 4, True
        if t_hi >= 0.5 and t_hi >= t_lo >= 0.5:
            return (scaling - 2) // 4, False
        scaling -= 4
    return k, upper_half


def iqae(
    problem: AmplitudeProblem,
    epsilon: float = 0.01,
    alpha: float = 0.05,
    shots_per_round: int = 1000,
    seed: int | np.random.Generator | None = None,
    *,
    max_power: int | None = None,
    max_rounds: int | None = None,
    min_ratio: float = 2.0,
    probability=None,
) -> EstimationResult:
    """Estimate ``P(flag = 1)`` of ``problem`` to half-width ``epsilon`` at confidence ``1 - alpha``.

    Args:
        problem: the ``A`` operator and its flag qubit.
        epsilon: target half-width of the amplitude confidence interval.
        alpha: total failure probability, split evenly over the rounds.
        shots_per_round: measurements per Grover power.
        seed: RNG seed (or generator) for the simulated measurements.
        max_power: optional cap on the Grover power; rounds at the cap pool
            their shots until the interval is narrow enough.
        max_rounds: non-convergence guard; defaults to a generous multiple of
            the uncapped round bound.
        min_ratio: minimum growth factor of ``4k + 2`` between new powers.
        probability: optional callable ``k -> P(flag = 1 after Q^k)``
            replacing gate-level simulation (used for synthetic tests).

    Raises:
        EstimationError: when ``max_rounds`` is exhausted.
    """
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5), got {epsilon}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if shots_per_round < 1:
        raise ValueError("shots_per_round must be >= 1")
    if max_power is not None and max_power < 0:
        raise ValueError("max_power must be non-negative")

    rng = np.random.default_rng(seed)
    prob_of = probability if probability is not None else _PowerCache(problem).probability
    # round bound from the uncapped schedule; it also fixes the per-round alpha
    planned = int(math.log(min_ratio * math.pi / (8 * epsilon)) / math.log(min_ratio)) + 1
    alpha_round = alpha / planned
    if max_rounds is None:
        max_rounds = 20 * planned + 100

    theta = (0.0, 0.25)
    k, upper = 0, True
    rounds: list[RoundRecord] = []
    pooled_ones = pooled_shots = 0
    queries = 0
    theta_hat = 0.0
    a_lo, a_hi = 0.0, 1.0

    while theta[1] - theta[0] > epsilon / math.pi:
        if len(rounds) >= max_rounds:
            partial = EstimationResult(
                math.sin(2 * math.pi * theta_hat) ** 2, (a_lo, a_hi), epsilon, alpha,
                rounds, queries, converged=False,
            )
            raise EstimationError(f"IQAE did not converge in {max_rounds} rounds", partial)
        new_k, upper = _find_next_k(k, upper, theta, min_ratio, max_power)
        if new_k != k or not rounds:
            pooled_ones = pooled_shots = 0
        k = new_k
        p = min(max(prob_of(k), 0.0), 1.0)
        ones = int(rng.binomial(shots_per_round, p))
        queries += shots_per_round * k
        pooled_ones += ones
        pooled_shots += shots_per_round

        c_lo, c_hi = clopper_pearson(pooled_ones, pooled_shots, alpha_round)
        p_hat = pooled_ones / pooled_shots
        if upper:
            t_lo = math.acos(1 - 2 * c_lo) / (2 * math.pi)
            t_hi = math.acos(1 - 2 * c_hi) / (2 * math.pi)
            t_hat = math.acos(1 - 2 * p_hat) / (2 * math.pi)
        else:
            t_lo = 1 - math.acos(1 - 2 * c_hi) / (2 * math.pi)
            t_hi = 1 - math.acos(1 - 2 * c_lo) / (2 * math.pi)
            t_hat = 1 - math.acos(1 - 2 * p_hat) / (2 * math.pi)
        scaling = 4 * k + 2
        turns_lo, turns_hi = int(scaling * theta[0]), int(scaling * theta[1])
        theta = ((turns_lo + t_lo) / scaling, (turns_hi + t_hi) / scaling)
        theta_hat = (turns_lo + t_hat) / scaling
        a_lo = math.sin(2 * math.pi * theta[0]) ** 2
        a_hi = math.sin(2 * math.pi * theta[1]) ** 2
        rounds.append(RoundRecord(k, shots_per_round, ones, a_lo, a_hi))

    estimate = min(max(math.sin(2 * math.pi * theta_hat) ** 2, a_lo), a_hi)
    return EstimationResult(estimate, (a_lo, a_hi), epsilon, alpha, rounds, queries)
