"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a one-line verdict that is printed in the pytest terminal
summary (and immediately with ``-s``).  Run alone with
``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rainbow_qae.config import bundled_config
from rainbow_qae.distributions import exponential_state_prep
from rainbow_qae.estimation import AmplitudeProblem, _PowerCache, exact_amplitude, iqae
from rainbow_qae.payoff import PayoffBlockSpec, PayoffMethod, loading_probabilities
from rainbow_qae.pricing import (
    ConfigurationError,
    MarketModel,
    PricingConfig,
    build_pricing_operator,
    classical_oracle_expectation,
    derive_params,
    monte_carlo_price,
    post_process,
    price_interval,
    quadrature_price,
)
from rainbow_qae.resources import (
    infidelity_bound,
    t_depth_comparator,
    t_depth_cry,
    t_depth_direct,
    t_depth_integration,
    t_depth_integrator,
    t_depth_mcx,
)
from rainbow_qae.statevector import RY, Circuit, allocate, marginal_probabilities, simulate

REFERENCE_PRICE = 23.0238


def record(number, passed, summary, start, *, soft=False):
    verdict = "PASS" if passed else ("SOFT-FAIL" if soft else "FAIL")
    line = f"criterion {number}: {verdict} {summary} [{time.perf_counter() - start:.1f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_pointwise_loading():
    start = time.perf_counter()
    worst = 0.0
    for width in (2, 3, 4, 5):
        x = np.arange(2**width)
        x_max = 2**width - 1
        for a in (0.05, 0.2, 0.5):
            direct = loading_probabilities(PayoffBlockSpec(a, -1.0, 0.0, width, "direct"))
            worst = max(worst, np.max(np.abs(direct - np.exp(-a * (x_max - x)))))
            integ = loading_probabilities(PayoffBlockSpec(a, -1.0, 0.0, width, "integration"))
            want = (np.exp(a * (x + 1)) - 1) / (np.exp(a * (x_max + 1)) - 1)
            worst = max(worst, np.max(np.abs(integ - want)))
    passed = worst < 1e-10 and time.perf_counter() - start < 60
    record(1, passed, f"pointwise loading max error {worst:.2e} (tol 1e-10)", start)
    assert passed


def test_criterion_2_exponential_state_prep():
    start = time.perf_counter()
    worst = 0.0
    for width in range(1, 7):
        for a in (-0.7, -0.1, 0.0, 0.05, 0.2, 0.5, 1.3):
            layout = allocate({"r": width})
            probs = marginal_probabilities(simulate(layout + exponential_state_prep(a, layout["r"])), layout["r"])
            g = np.exp(a * np.arange(2**width))
            worst = max(worst, np.max(np.abs(probs - g / g.sum())))
    passed = worst < 1e-12
    record(2, passed, f"exponential state prep max error {worst:.2e} (tol 1e-12)", start)
    assert passed


def test_criterion_3_amplitude_equals_oracle(reference_market):
    start = time.perf_counter()
    worst = 0.0
    for frac_bits in (1, 2):
        config = PricingConfig(m=2, frac_bits=frac_bits)
        params = derive_params(reference_market, config)
        oracle = classical_oracle_expectation(params, config)
        for method in PayoffMethod:
            amp = exact_amplitude(build_pricing_operator(params, config, method))
            worst = max(worst, abs(amp - oracle.f_tilde(method)))
    passed = worst < 1e-10 and time.perf_counter() - start < 300
    record(3, passed, f"amplitude vs enumeration oracle max error {worst:.2e} (tol 1e-10)", start)
    assert passed


def test_criterion_4_grover_trajectory():
    start = time.perf_counter()
    run = bundled_config("single_asset")
    params = derive_params(run.market, run.pricing)
    worst, qubits = 0.0, 0
    for method in PayoffMethod:
        problem = build_pricing_operator(params, run.pricing, method)
        qubits = max(qubits, problem.num_qubits)
        theta = math.asin(math.sqrt(exact_amplitude(problem)))
        cache = _PowerCache(problem)
        for k in range(5):
            worst = max(worst, abs(cache.probability(k) - math.sin((2 * k + 1) * theta) ** 2))
    passed = worst < 1e-9 and qubits <= 14
    record(4, passed, f"Grover law on {qubits}-qubit circuit, k<=4, max error {worst:.2e} (tol 1e-9)", start)
    assert passed


def test_criterion_5_iqae_coverage():
    start = time.perf_counter()
    amp, eps = 0.3, 0.02
    problem = AmplitudeProblem(Circuit(1, [RY(2 * math.asin(math.sqrt(amp)), 0)]), 0)
    hits = sum(
        abs(iqae(problem, eps, 0.05, 1000, seed=seed).estimation - amp) <= eps for seed in range(200)
    )
    passed = hits >= 183
    record(5, passed, f"IQAE within epsilon in {hits}/200 runs (need >= 183)", start)
    assert passed


def random_market(rng):
    vols = rng.uniform(1e-4, 6e-4, 2)
    rho = rng.uniform(-0.9, 0.9)
    cov = np.array([[vols[0], rho * math.sqrt(vols[0] * vols[1])], [0, vols[1]]])
    cov[1, 0] = cov[0, 1]
    s0 = rng.uniform(50, 300, 2)
    strike = rng.uniform(0.7, 1.3) * s0.mean()
    return MarketModel(tuple(s0), tuple(rng.uniform(-1e-3, 1e-3, 2)), tuple(map(tuple, cov)),
                       strike, rng.uniform(20, 400))


def test_criterion_6_post_processing_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_recon = worst_methods = 0.0
    draws = attempts = 0
    while draws < 100 and attempts < 5000:
        attempts += 1
        market = random_market(rng)
        config = PricingConfig(m=int(rng.integers(1, 4)), frac_bits=int(rng.integers(0, 4)))
        try:
            params = derive_params(market, config)
        except ConfigurationError:
            continue
        oracle = classical_oracle_expectation(params, config)
        if not all(0 <= params.h_tilde(m) <= 1 for m in PayoffMethod):
            continue
        draws += 1
        # E[max(exp(b z), K exp(-b')) ] exp(b') - K on the register grid
        z = params.a * oracle.x_values
        target = float(np.sum(oracle.probabilities * np.maximum(np.exp(z), market.strike * math.exp(-params.b_prime)))
                       * math.exp(params.b_prime) - market.strike)
        prices = {m: post_process(oracle.f_tilde(m), params, m) for m in PayoffMethod}
        scale = max(abs(target), 1e-12)
        for p in prices.values():
            worst_recon = max(worst_recon, abs(p - target) / scale)
        worst_methods = max(worst_methods, abs(prices["direct"] - prices["integration"]) / scale)
    passed = draws == 100 and worst_recon < 1e-9 and worst_methods < 1e-9
    record(6, passed, f"{draws} draws, reconstruction rel error {worst_recon:.2e}, "
                      f"method gap {worst_methods:.2e} (tol 1e-9)", start)
    assert passed


@pytest.fixture(scope="module")
def reference_run():
    run = bundled_config("paper_experiment")
    params = derive_params(run.market, run.pricing)
    oracle = classical_oracle_expectation(params, run.pricing)
    return run, params, oracle


def test_criterion_7a_confidence_interval_contains_oracle(reference_run):
    start = time.perf_counter()
    run, params, oracle = reference_run
    parts, ok = [], True
    for method in PayoffMethod:
        problem = build_pricing_operator(params, run.pricing, method)
        for eps, cap in ((0.05, 2), (0.01, None)):
            res = iqae(problem, eps, run.pricing.alpha, run.pricing.shots, run.pricing.seed, max_power=cap)
            lo, hi = price_interval(res, params, method)
            inside = lo <= oracle.payoff <= hi
            ok &= inside
            tag = f"eps={eps}" + (f",cap={cap}" if cap is not None else "")
            parts.append(f"{method.value[:5]}[{tag}] [{lo:.2f},{hi:.2f}]{'' if inside else ' MISS'}")
    record("7a", ok, f"oracle {oracle.payoff:.4f} in CI: " + "; ".join(parts), start)
    assert ok


def test_criterion_7b_reference_price(reference_run):
    start = time.perf_counter()
    run, params, oracle = reference_run
    delta = oracle.payoff - REFERENCE_PRICE
    alt_config = PricingConfig(m=2, frac_bits=run.pricing.frac_bits, grid="left-bins")
    alt_params = derive_params(run.market, alt_config)
    alt = classical_oracle_expectation(alt_params, alt_config).payoff
    passed = abs(delta) <= 1.5
    record("7b", passed, f"oracle {oracle.payoff:.4f} vs reference {REFERENCE_PRICE} delta {delta:+.4f} "
                         f"(left-bins grid {alt:.4f}, delta {alt - REFERENCE_PRICE:+.4f}; soft, tol 1.5)",
           start, soft=True)
    # soft criterion: the delta is reported, not enforced


def test_criterion_8_resource_formulas():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1.0)

    for _ in range(20):
        k = int(rng.integers(1, 1025))
        eps = float(10 ** rng.uniform(-12, -0.01))
        lg2 = lambda v: math.log(v) / math.log(2)
        lg3 = lambda v: math.log(v) / math.log(3)
        direct = 6 * lg2(k) + 14 * lg3((k + 1) / 2) + 12 * lg2(2 * (k + 1) / eps) + 20
        integ = 12 * lg2(k) + 6 * lg2(2 / eps) + 33
        checks = [
            (t_depth_comparator(k), 6 * lg2(k) + 15),
            (t_depth_cry(eps), 3 * lg2(1 / eps)),
            (t_depth_mcx(k), 14 * lg3((k + 1) / 2) + 5),
            (t_depth_integrator(k), 6 * lg2(k) + 18),
            (t_depth_direct(k, eps).total, direct),
            (t_depth_integration(k, eps).total, integ),
        ]
        s_max = float(rng.uniform(100, 1000))
        strike = float(rng.uniform(10, s_max * 0.99))
        shift = float(rng.uniform(1, s_max * 0.99))
        target = float(rng.uniform(1e-4, 1))
        d = infidelity_bound("direct", target, s_max, strike=strike)
        i = infidelity_bound("integration", target, s_max, shift=shift, strike=strike)
        checks += [(d.bound, target / s_max), (i.bound, target / (s_max - shift)),
                   (d.baseline, target / (s_max - strike))]
        worst = max(worst, max(rel(a, b) for a, b in checks))
    passed = worst < 1e-12
    record(8, passed, f"20 random points, max relative deviation {worst:.2e} (tol 1e-12)", start)
    assert passed


def test_criterion_9_monte_carlo_vs_quadrature(reference_market):
    start = time.perf_counter()
    mc, se = monte_carlo_price(reference_market, 1_000_000, seed=0)
    quad = quadrature_price(reference_market)
    z = (mc - quad) / se
    passed = abs(z) <= 3 and time.perf_counter() - start < 120
    record(9, passed, f"MC {mc:.4f} +- {se:.4f} vs quadrature {quad:.4f} ({z:+.2f} stderr, tol 3)", start)
    assert passed


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
