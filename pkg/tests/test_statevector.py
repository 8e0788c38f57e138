import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rainbow_qae.statevector import (
    CX,
    MCRY,
    MCX,
    RY,
    X,
    Circuit,
    Gate,
    Register,
    StateVector,
    allocate,
    apply,
    flag_probability,
    marginal_probabilities,
    parse_dump,
    sample,
    simulate,
)


def dense_matrix(gate: Gate, n: int) -> np.ndarray:
    """Reference unitary built column by column from the gate definition."""
    dim = 2**n
    u = np.zeros((dim, dim))
    c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
    for col in range(dim):
        fires = all(((col >> q) & 1) == int(p) for q, p in zip(gate.controls, gate.polarity))
        if not fires:
            u[col, col] = 1
            continue
        bit = (col >> gate.target) & 1
        flipped = col ^ (1 << gate.target)
        if gate.kind == "x":
            u[flipped, col] = 1
        elif bit == 0:
            u[col, col], u[flipped, col] = c, s
        else:
            u[col, col], u[flipped, col] = c, -s
    return u


@st.composite
def gates(draw, n=4):
    qubits = draw(st.permutations(range(n)))
    n_controls = draw(st.integers(0, n - 1))
    target, controls = qubits[0], tuple(qubits[1 : 1 + n_controls])
    polarity = tuple(draw(st.lists(st.booleans(), min_size=n_controls, max_size=n_controls)))
    if draw(st.booleans()):
        return Gate("x", target, controls=controls, polarity=polarity)
    angle = draw(st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False))
    return Gate("ry", target, angle, controls, polarity)


def random_state(n, seed):
    v = np.random.default_rng(seed).normal(size=2**n)
    return v / np.linalg.norm(v)


@given(gates(), st.integers(0, 1000))
def test_kernel_matches_dense_reference(gate, seed):
    psi = random_state(4, seed)
    got = apply(StateVector(psi), gate).amplitudes
    np.testing.assert_allclose(got, dense_matrix(gate, 4) @ psi, atol=1e-12)


@given(st.lists(gates(), max_size=12), st.integers(0, 1000))
def test_circuit_inverse_restores_state(gate_list, seed):
    circuit = Circuit(4, gate_list)
    psi = random_state(4, seed)
    out = StateVector(psi.copy())
    for g in circuit.gates + circuit.inverse().gates:
        out = apply(out, g)
    np.testing.assert_allclose(out.amplitudes, psi, atol=1e-12)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_little_endian_basis_convention():
    state = simulate(Circuit(3, [X(0)]))
    assert state.amplitudes[1] == 1.0
    state = simulate(Circuit(3, [X(2)]))
    assert state.amplitudes[4] == 1.0


def test_ry_amplitudes():
    state = simulate(Circuit(1, [RY(2 * math.asin(math.sqrt(0.3)), 0)]))
    assert flag_probability(state, 0) == pytest.approx(0.3, abs=1e-15)


def test_negative_control_fires_on_zero():
    gate = CX(0, 1, positive=False)
    assert simulate(Circuit(2, [gate])).amplitudes[2] == 1.0
    assert simulate(Circuit(2, [gate]), initial=1).amplitudes[1] == 1.0


def test_gate_touching_every_qubit():
    # all-controls MCX addresses a single amplitude pair
    gate = MCX((0, 1, 2), 3, (False, False, False))
    assert simulate(Circuit(4, [gate])).amplitudes[8] == 1.0
    gate = MCRY(math.pi, (0, 1), 2, (True, True))
    out = simulate(Circuit(3, [gate]), initial=3)
    assert out.amplitudes[7] == pytest.approx(1.0)


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("z", 0)
    with pytest.raises(ValueError):
        Gate("x", 0, controls=(0,))
    with pytest.raises(ValueError):
        Gate("x", 0, controls=(1, 1))
    with pytest.raises(ValueError):
        Gate("ry", 0, math.nan)
    with pytest.raises(ValueError):
        Circuit(2, [X(2)])


def test_gate_names_and_counts():
    c = Circuit(3, [X(0), CX(0, 1), MCX((0, 1), 2), RY(0.1, 0), MCRY(0.2, (0, 1), 2)])
    assert c.count_ops() == {"CX": 1, "MCRY": 1, "MCX": 1, "RY": 1, "X": 1}
    assert c.depth() == 5


@given(st.integers(1, 5), st.data())
def test_marginals_match_bruteforce(n, data):
    psi = random_state(n, data.draw(st.integers(0, 100)))
    qubits = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    want = np.zeros(2 ** len(qubits))
    for idx, amp in enumerate(psi):
        v = sum(((idx >> q) & 1) << j for j, q in enumerate(qubits))
        want[v] += amp**2
    np.testing.assert_allclose(marginal_probabilities(StateVector(psi), qubits), want, atol=1e-14)


def test_sample_is_seeded():
    state = StateVector(random_state(3, 0))
    a = sample(state, [0, 2], 500, seed=7)
    assert a == sample(state, [0, 2], 500, seed=7)
    assert sum(a.values()) == 500


def test_dump_round_trip():
    c = allocate({"a": 2, "b": 1}) + Circuit(3, [MCX((0, 1), 2, (True, False)), RY(0.123456789, 1)])
    back = parse_dump(c.dump())
    assert back.gates == c.gates
    assert back.registers == c.registers
    with pytest.raises(ValueError, match="line 2"):
        parse_dump("QUBITS 2\nMCX c:0+ t:\n")


def test_allocate_and_registers():
    c = allocate([("x", 3), ("flag", 1)])
    assert c.num_qubits == 4
    assert c["flag"].qubits == (3,)
    reg = c["x"]
    assert reg.value_in(reg.basis_bits(5)) == 5
    with pytest.raises(ValueError):
        allocate([("x", 1), ("x", 2)])
    with pytest.raises(ValueError):
        allocate({"x": 0})
    with pytest.raises(ValueError):
        Register("r", (0, 0))
