"""Quantum amplitude-estimation pricing of best-of (rainbow) call options.

Circuits are built from X and RY gates with arbitrary control polarity and
run on an exact dense statevector simulator.
"""

from .estimation import AmplitudeProblem, EstimationResult, exact_amplitude, grover_operator, iqae
from .payoff import PayoffBlockSpec, PayoffMethod, build_payoff_block
from .pricing import (
    ConfigurationError,
    MarketModel,
    PricingConfig,
    PricingParams,
    PricingReport,
    build_pricing_operator,
    build_state_preparation,
    classical_oracle_expectation,
    derive_params,
    monte_carlo_price,
    post_process,
    price_option,
)
from .resources import infidelity_bound, t_depth_direct, t_depth_integration
from .statevector import Circuit, Gate, Register, StateVector, simulate

__all__ = [
    "AmplitudeProblem",
    "EstimationResult",
    "exact_amplitude",
    "grover_operator",
    "iqae",
    "PayoffBlockSpec",
    "PayoffMethod",
    "build_payoff_block",
    "ConfigurationError",
    "MarketModel",
    "PricingConfig",
    "PricingParams",
    "PricingReport",
    "build_pricing_operator",
    "build_state_preparation",
    "classical_oracle_expectation",
    "derive_params",
    "monte_carlo_price",
    "post_process",
    "price_option",
    "infidelity_bound",
    "t_depth_direct",
    "t_depth_integration",
    "Circuit",
    "Gate",
    "Register",
    "StateVector",
    "simulate",
]
