"""Circuit-versus-oracle checks run by ``rainbow-qae validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import exact_amplitude
from .payoff import PayoffMethod, loading_probabilities
from .pricing import (
    PricingConfig,
    PricingParams,
    _state_prep,
    build_pricing_operator,
    classical_oracle_expectation,
    post_process,
)
from .statevector import marginal_probabilities, simulate

__all__ = ["CheckResult", "run_checks", "AMPLITUDE_TOL", "PRICE_RTOL"]

AMPLITUDE_TOL = 1e-10
PRICE_RTOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: error={self.error:.3e} tol={self.tolerance:.0e} {self.detail}".rstrip()


def _pointwise(params: PricingParams, method: PayoffMethod, angle_error: float) -> CheckResult:
    spec = params.payoff_spec(method)
    xs = np.arange(2**spec.width)
    got = loading_probabilities(spec, angle_error=angle_error)
    want = spec.f_tilde(xs)
    err = np.abs(got - want)
    worst = int(np.argmax(err))
    passed = bool(err[worst] < AMPLITUDE_TOL)
    detail = "" if passed else f"worst at x={worst}: expected {want[worst]:.12g}, got {got[worst]:.12g}"
    return CheckResult(f"pointwise_{method.value}", passed, float(err[worst]), AMPLITUDE_TOL, detail)


def _branches(params: PricingParams, config: PricingConfig, oracle) -> CheckResult:
    circuit, lay = _state_prep(params, config)
    state = simulate(circuit)
    qubits = list(lay.x) + [q for reg in reversed(lay.d) for q in reg]
    joint = marginal_probabilities(state, qubits).reshape(len(oracle.probabilities), -1)
    want = np.zeros_like(joint)
    want[np.arange(len(want)), oracle.x_values] = oracle.probabilities
    err = np.abs(joint - want)
    flat = int(np.argmax(err))
    passed = bool(err.flat[flat] < AMPLITUDE_TOL)
    d_index, x = divmod(flat, joint.shape[1])
    detail = "" if passed else (
        f"sample {d_index}: expected x={oracle.x_values[d_index]}, mass found at x={x}"
    )
    return CheckResult("branch_values", passed, float(err.flat[flat]), AMPLITUDE_TOL, detail)


def run_checks(
    params: PricingParams,
    config: PricingConfig,
    *,
    angle_error: float = 0.0,
) -> list[CheckResult]:
    """Pointwise loading, branch values, amplitude/oracle agreement and method independence.

    Args:
        params: derived pricing parameters.
        config: circuit configuration.
        angle_error: perturbation of the first direct-loading rotation, a
            fault-injection hook; any non-zero value should make checks fail.

    Returns:
        One :class:`CheckResult` per check, in a fixed order.
    """
    oracle = classical_oracle_expectation(params, config)
    results = [_pointwise(params, m, angle_error if m is PayoffMethod.DIRECT else 0.0)
               for m in PayoffMethod]
    results.append(_branches(params, config, oracle))
    prices = {}
    for method in PayoffMethod:
        problem = build_pricing_operator(
            params, config, method, angle_error=angle_error if method is PayoffMethod.DIRECT else 0.0
        )
        amp = exact_amplitude(problem)
        want = oracle.f_tilde(method)
        err = abs(amp - want)
        results.append(CheckResult(
            f"amplitude_oracle_{method.value}", bool(err < AMPLITUDE_TOL), err, AMPLITUDE_TOL,
            f"circuit={amp:.12g} oracle={want:.12g}",
        ))
        prices[method] = post_process(amp, params, method)
    d, i = prices[PayoffMethod.DIRECT], prices[PayoffMethod.INTEGRATION]
    rel = abs(d - i) / max(abs(oracle.payoff), 1e-300)
    results.append(CheckResult(
        "method_independence", bool(rel < PRICE_RTOL), rel, PRICE_RTOL,
        f"direct={d:.10g} integration={i:.10g} oracle={oracle.payoff:.10g}",
    ))
    if not math.isfinite(rel):
        results[-1] = CheckResult("method_independence", False, math.inf, PRICE_RTOL, "non-finite price")
    return results
