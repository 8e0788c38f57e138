"""Load the rescaled payoff into the amplitude of a target qubit.

The register ``x`` holds an unsigned integer in ``[0, x_max]`` with
``x_max = 2**R - 1``.  Above the strike threshold the target is rotated so
that ``P(target=1 | x)`` follows an exponential in ``x``; below it the target
carries a constant ``h_tilde``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .arithmetic import FixedPointSpec, compare_registers, compare_to_constant, threshold_int
from .distributions import exponential_state_prep
from .statevector import CRY, MCX, Circuit, Gate, Register, allocate, flag_probability, simulate

__all__ = [
    "PayoffMethod",
    "PayoffBlockSpec",
    "direct_profile",
    "integration_profile",
    "direct_angles",
    "constant_branch",
    "direct_exponential",
    "integration_loading",
    "build_payoff_block",
    "loading_probabilities",
]


class PayoffMethod(str, enum.Enum):
    DIRECT = "direct"
    INTEGRATION = "integration"


def direct_profile(x, a: float, width: int):
    """``exp(-a * (x_max - x))``."""
    return np.exp(-a * ((2**width - 1) - np.asarray(x, dtype=float)))


def integration_profile(x, a: float, width: int):
    """``(exp(a(x+1)) - 1) / (exp(a(x_max+1)) - 1)``, i.e. the partial sum of g."""
    x = np.asarray(x, dtype=float)
    if a == 0:
        return (x + 1) / 2**width
    return np.expm1(a * (x + 1)) / np.expm1(a * 2**width)


def direct_angles(a: float, width: int) -> np.ndarray:
    """``theta_i = 2 * arccos(sqrt(exp(-a * 2**i)))``."""
    return 2 * np.arccos(np.sqrt(np.exp(-a * 2.0 ** np.arange(width))))


@dataclass(frozen=True)
class PayoffBlockSpec:
    """Parameters of the payoff block acting on an ``width``-bit register.

    ``threshold`` is in register units scaled by ``2**-frac_bits``: the
    exponential branch is taken when ``x / 2**frac_bits >= threshold``.
    """

    a: float
    threshold: float
    h_tilde: float
    width: int
    method: PayoffMethod = PayoffMethod.DIRECT
    frac_bits: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", PayoffMethod(self.method))
        if not 0.0 <= self.h_tilde <= 1.0:
            raise ValueError(f"h_tilde={self.h_tilde} is outside [0, 1]")
        if self.method is PayoffMethod.DIRECT and self.a < 0:
            raise ValueError("direct loading needs a >= 0")

    @property
    def x_max(self) -> int:
        return 2**self.width - 1

    @property
    def fixed_point(self) -> FixedPointSpec:
        return FixedPointSpec(self.width, self.frac_bits)

    @property
    def threshold_int(self) -> int:
        return threshold_int(self.threshold, self.fixed_point)

    def exponential_branch(self, x):
        if self.method is PayoffMethod.DIRECT:
            return direct_profile(x, self.a, self.width)
        return integration_profile(x, self.a, self.width)

    def f_tilde(self, x):
        """Target-qubit probability for register value(s) ``x``."""
        x = np.asarray(x)
        return np.where(x >= self.threshold_int, self.exponential_branch(x), self.h_tilde)


def constant_branch(target: int, h_tilde: float, control: int) -> Circuit:
    """RY(2 asin sqrt(h_tilde)) on ``target`` when ``control`` is ``|0>``."""
    if not 0.0 <= h_tilde <= 1.0:
        raise ValueError(f"h_tilde={h_tilde} is outside [0, 1]")
    if h_tilde == 0.0:
        return Circuit.from_gates([], num_qubits=max(target, control) + 1)
    theta = 2 * math.asin(math.sqrt(h_tilde))
    return Circuit.from_gates([CRY(theta, control, target, positive=False)])


def direct_exponential(
    x: Register,
    r: Register,
    target: int,
    a: float,
    comparator_flag: int,
    *,
    angle_error: float = 0.0,
) -> Circuit:
    """Per-bit rotations on ``r`` controlled by ``x_i = 0``, collected by an MCX.

    ``r`` stays ``|0...0>`` with probability ``exp(-a * (x_max - x))``; the
    MCX (negative on every ``r`` bit, positive on ``comparator_flag``) moves
    that probability onto ``target``.  ``angle_error`` perturbs the first
    rotation and exists only for fault-injection tests.
    """
    if a < 0:
        raise ValueError("direct loading needs a >= 0")
    if r.width != x.width:
        raise ValueError("x and r must have the same width")
    angles = direct_angles(a, x.width)
    angles[0] += angle_error
    gates: list[Gate] = [
        CRY(theta, xq, rq, positive=False) for theta, xq, rq in zip(angles, x, r) if theta != 0.0
    ]
    gates.append(MCX(tuple(r) + (comparator_flag,), target, (False,) * r.width + (True,)))
    return Circuit.from_gates(gates)


def integration_loading(
    x: Register,
    r: Register,
    target: int,
    a: float,
    comparator_flag: int,
    *,
    ancilla: int,
) -> Circuit:
    """Exponential state on ``r`` then ``target ^= [r <= x]`` when the flag is set."""
    if r.width != x.width:
        raise ValueError("x and r must have the same width")
    prep = exponential_state_prep(a, r)
    integrate = compare_registers(r, x, target, ancilla=ancilla, control=comparator_flag)
    return prep + integrate


def build_payoff_block(
    spec: PayoffBlockSpec,
    x: Register,
    r: Register,
    target: int,
    flag: int,
    *,
    ancilla: int | None = None,
    angle_error: float = 0.0,
) -> Circuit:
    """Threshold comparator, exponential branch on flag=1, constant branch on flag=0.

    ``r``, ``flag`` and ``target`` must start in ``|0>``; the integration
    method also needs one zeroed ``ancilla``.
    """
    if x.width != spec.width:
        raise ValueError("register width does not match the payoff spec")
    circuit = compare_to_constant(x, spec.threshold, flag, spec.fixed_point)
    if spec.method is PayoffMethod.DIRECT:
        circuit += direct_exponential(x, r, target, spec.a, flag, angle_error=angle_error)
    else:
        if ancilla is None:
            raise ValueError("integration loading needs an ancilla qubit")
        circuit += integration_loading(x, r, target, spec.a, flag, ancilla=ancilla)
    return circuit + constant_branch(target, spec.h_tilde, flag)


def loading_probabilities(spec: PayoffBlockSpec, *, angle_error: float = 0.0) -> np.ndarray:
    """``P(target = 1 | x)`` for every ``x``, by simulating the block on each basis input.

    Returns:
        Array of length ``2**spec.width``; compare against ``spec.f_tilde``.
    """
    layout = allocate([("x", spec.width), ("r", spec.width), ("cmp", 1), ("target", 1), ("anc", 1)])
    block = layout + build_payoff_block(
        spec, layout["x"], layout["r"], layout["target"][0], layout["cmp"][0],
        ancilla=layout["anc"][0], angle_error=angle_error,
    )
    x = layout["x"]
    target = layout["target"][0]
    return np.array(
        [flag_probability(simulate(block, x.basis_bits(v)), target) for v in range(2**spec.width)]
    )
