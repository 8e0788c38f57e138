"""Gate-level circuit IR and an exact dense statevector simulator.

Basis states are indexed little-endian: qubit ``q`` contributes ``2**q`` to the
basis index, and qubit 0 of a register is its least significant bit.

Only real gates are supported (X and RY, each with any number of positive or
negative controls), so amplitudes stay real and are stored as ``float64``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Register",
    "Gate",
    "Circuit",
    "StateVector",
    "allocate",
    "apply",
    "simulate",
    "flag_probability",
    "marginal_probabilities",
    "sample",
    "parse_dump",
]


@dataclass(frozen=True)
class Register:
    """Named, ordered group of qubits; ``qubits[0]`` is the least significant bit."""

    name: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if not self.qubits:
            raise ValueError(f"register {self.name!r} must have width >= 1")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"register {self.name!r} repeats a qubit")

    @property
    def width(self) -> int:
        return len(self.qubits)

    def __len__(self) -> int:
        return len(self.qubits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.qubits)

    def __getitem__(self, i):
        return self.qubits[i]

    def value_in(self, basis_index: int) -> int:
        """Integer held by this register in a computational basis state."""
        return sum(((basis_index >> q) & 1) << j for j, q in enumerate(self.qubits))

    def basis_bits(self, value: int) -> int:
        """Basis-index contribution of this register holding ``value``."""
        if not 0 <= value < 2**self.width:
            raise ValueError(f"value {value} does not fit register {self.name!r}")
        return sum(((value >> j) & 1) << q for j, q in enumerate(self.qubits))


@dataclass(frozen=True)
class Gate:
    """X or RY on ``target``, fired when every control matches its polarity.

    ``polarity[i]`` is True when control ``controls[i]`` fires on ``|1>`` and
    False when it fires on ``|0>``.  RY follows
    ``RY(t)|0> = cos(t/2)|0> + sin(t/2)|1>``.
    """

    kind: str
    target: int
    angle: float = 0.0
    controls: tuple[int, ...] = ()
    polarity: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("x", "ry"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        controls = tuple(int(c) for c in self.controls)
        polarity = (
            (True,) * len(controls)
            if self.polarity is None
            else tuple(bool(p) for p in self.polarity)
        )
        if len(polarity) != len(controls):
            raise ValueError("polarity must match controls")
        if len(set(controls)) != len(controls):
            raise ValueError("repeated control qubit")
        if self.target in controls:
            raise ValueError("target is also a control")
        if not math.isfinite(self.angle):
            raise ValueError("gate angle must be finite")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "polarity", polarity)
        object.__setattr__(self, "target", int(self.target))
        object.__setattr__(self, "angle", float(self.angle) if self.kind == "ry" else 0.0)

    @property
    def name(self) -> str:
        base = "X" if self.kind == "x" else "RY"
        n = len(self.controls)
        if n == 0:
            return base
        return ("C" if n == 1 else "MC") + base

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)

    def inverse(self) -> Gate:
        if self.kind == "x":
            return self
        return Gate("ry", self.target, -self.angle, self.controls, self.polarity)

    def controlled(self, qubit: int, positive: bool = True) -> Gate:
        return Gate(
            self.kind,
            self.target,
            self.angle,
            (qubit,) + self.controls,
            (positive,) + self.polarity,
        )

    def to_line(self) -> str:
        parts = [self.name]
        if self.kind == "ry":
            parts.append(repr(self.angle))
        if self.controls:
            parts.append(
                "c:"
                + ",".join(f"{q}{'+' if p else '-'}" for q, p in zip(self.controls, self.polarity))
            )
        parts.append(f"t:{self.target}")
        return " ".join(parts)


# Convenience constructors, named after the gates they build.
def X(target: int) -> Gate:
    return Gate("x", target)


def CX(control: int, target: int, positive: bool = True) -> Gate:
    return Gate("x", target, controls=(control,), polarity=(positive,))


def MCX(controls: Sequence[int], target: int, polarity: Sequence[bool] | None = None) -> Gate:
    return Gate("x", target, controls=tuple(controls), polarity=polarity)


def RY(angle: float, target: int) -> Gate:
    return Gate("ry", target, angle)


def CRY(angle: float, control: int, target: int, positive: bool = True) -> Gate:
    return Gate("ry", target, angle, (control,), (positive,))


def MCRY(
    angle: float, controls: Sequence[int], target: int, polarity: Sequence[bool] | None = None
) -> Gate:
    return Gate("ry", target, angle, tuple(controls), polarity)


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list over ``num_qubits`` qubits with a register table.

    Builders return new circuits; compose them with ``+`` or :meth:`extend`.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = ()
    registers: Mapping[str, Register] = field(default_factory=dict)
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "registers", dict(self.registers))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        seen: dict[int, str] = {}
        for reg in self.registers.values():
            for q in reg.qubits:
                if q >= self.num_qubits:
                    raise ValueError(f"register {reg.name!r} uses unallocated qubit {q}")
                if q in seen:
                    raise ValueError(f"qubit {q} is in both {seen[q]!r} and {reg.name!r}")
                seen[q] = reg.name
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits or min(g.qubits) < 0:
                raise ValueError(f"gate {g.to_line()} references an unallocated qubit")

    @classmethod
    def from_gates(cls, gates: Iterable[Gate], num_qubits: int | None = None, **kw) -> Circuit:
        gates = tuple(gates)
        needed = max((max(g.qubits) + 1 for g in gates), default=0)
        return cls(max(needed, num_qubits or 0), gates, **kw)

    def __getitem__(self, name: str) -> Register:
        return self.registers[name]

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        return self.extend(other)

    def extend(self, other: Circuit | Iterable[Gate]) -> Circuit:
        """New circuit running ``self`` then ``other``."""
        if isinstance(other, Circuit):
            registers = dict(self.registers)
            for name, reg in other.registers.items():
                if name in registers and registers[name] != reg:
                    raise ValueError(f"conflicting definitions of register {name!r}")
                registers[name] = reg
            metadata = {**self.metadata, **other.metadata}
            return Circuit(
                max(self.num_qubits, other.num_qubits),
                self.gates + other.gates,
                registers,
                metadata,
            )
        return self.extend(Circuit.from_gates(other))

    def with_metadata(self, **items) -> Circuit:
        return Circuit(self.num_qubits, self.gates, self.registers, {**self.metadata, **items})

    def inverse(self) -> Circuit:
        return Circuit(
            self.num_qubits,
            tuple(g.inverse() for g in reversed(self.gates)),
            self.registers,
            self.metadata,
        )

    def controlled(self, qubit: int, positive: bool = True) -> Circuit:
        """Control every constituent gate on ``qubit``."""
        return Circuit(
            max(self.num_qubits, qubit + 1),
            tuple(g.controlled(qubit, positive) for g in self.gates),
            self.registers,
            self.metadata,
        )

    def depth(self) -> int:
        level = [0] * self.num_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.name] = counts.get(g.name, 0) + 1
        return dict(sorted(counts.items()))

    def dump(self) -> str:
        """Line-oriented text form, one gate per line."""
        header = [f"QUBITS {self.num_qubits}"]
        for reg in self.registers.values():
            header.append(f"REG {reg.name} " + ",".join(map(str, reg.qubits)))
        return "\n".join(header + [g.to_line() for g in self.gates]) + "\n"


def parse_dump(text: str) -> Circuit:
    """Inverse of :meth:`Circuit.dump`."""
    num_qubits = 0
    registers: dict[str, Register] = {}
    gates: list[Gate] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        tokens = line.split()
        if not tokens:
            continue
        head = tokens[0]
        try:
            if head == "QUBITS":
                num_qubits = int(tokens[1])
            elif head == "REG":
                registers[tokens[1]] = Register(tokens[1], tuple(int(q) for q in tokens[2].split(",")))
            else:
                kind = "x" if head.endswith("X") else "ry"
                angle = float(tokens[1]) if kind == "ry" else 0.0
                controls: list[int] = []
                polarity: list[bool] = []
                target = None
                for tok in tokens[1:]:
                    if tok.startswith("c:"):
                        for c in tok[2:].split(","):
                            controls.append(int(c[:-1]))
                            polarity.append(c[-1] == "+")
                    elif tok.startswith("t:"):
                        target = int(tok[2:])
                gates.append(Gate(kind, target, angle, tuple(controls), tuple(polarity)))
        except (IndexError, ValueError, TypeError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {line!r}: {exc}") from exc
    return Circuit(num_qubits, gates, registers)


def allocate(widths: Mapping[str, int] | Iterable[tuple[str, int]]) -> Circuit:
    """Empty circuit with registers laid out contiguously in declaration order."""
    items = list(widths.items()) if isinstance(widths, Mapping) else list(widths)
    registers: dict[str, Register] = {}
    start = 0
    for name, width in items:
        if name in registers:
            raise ValueError(f"duplicate register name {name!r}")
        if width < 1:
            raise ValueError(f"register {name!r} needs a positive width, got {width}")
        registers[name] = Register(name, tuple(range(start, start + width)))
        start += width
    return Circuit(start, (), registers)


@dataclass(frozen=True)
class StateVector:
    """Dense amplitudes of an ``num_qubits``-qubit state, little-endian."""

    amplitudes: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> StateVector:
        if not 0 <= index < 2**num_qubits:
            raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
        psi = np.zeros(2**num_qubits)
        psi[index] = 1.0
        return cls(psi)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _apply_inplace(psi: np.ndarray, n: int, gate: Gate) -> None:
    if max(gate.qubits) >= n:
        raise IndexError(f"gate {gate.to_line()} acts outside a {n}-qubit state")
    view = psi.reshape((2,) * n)
    # axis n-1-q holds qubit q in C order
    index: list = [slice(None)] * n
    for q, pol in zip(gate.controls, gate.polarity):
        index[n - 1 - q] = slice(1, 2) if pol else slice(0, 1)
    t = n - 1 - gate.target
    index[t] = slice(0, 1)
    a0 = view[tuple(index)]
    index[t] = slice(1, 2)
    a1 = view[tuple(index)]
    if gate.kind == "x":
        tmp = a0.copy()
        a0[...] = a1
        a1[...] = tmp
    else:
        c = math.cos(gate.angle / 2)
        s = math.sin(gate.angle / 2)
        tmp = a0.copy()
        a0 *= c
        a0 -= s * a1
        a1 *= c
        a1 += s * tmp


def apply(state: StateVector, gate: Gate) -> StateVector:
    """Return ``U_gate |state>`` as a new state."""
    psi = np.array(state.amplitudes, copy=True)
    _apply_inplace(psi, state.num_qubits, gate)
    return StateVector(psi)


def run_gates(psi: np.ndarray, gates: Iterable[Gate]) -> np.ndarray:
    """Apply gates to ``psi`` in place and return it."""
    n = int(psi.size).bit_length() - 1
    for g in gates:
        _apply_inplace(psi, n, g)
    return psi


def simulate(circuit: Circuit, initial: int = 0) -> StateVector:
    """Run ``circuit`` on the computational basis state ``|initial>``."""
    psi = StateVector.basis(circuit.num_qubits, initial).amplitudes
    return StateVector(run_gates(psi, circuit.gates))


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Distribution of the integer read little-endian from ``qubits``."""
    n = state.num_qubits
    qubits = list(qubits)
    if any(not 0 <= q < n for q in qubits):
        raise IndexError("qubit out of range")
    p = state.probabilities().reshape((2,) * n)
    keep = [n - 1 - q for q in qubits]
    drop = tuple(ax for ax in range(n) if ax not in keep)
    marg = p.sum(axis=drop) if drop else p
    remaining = sorted(keep)
    wanted = [n - 1 - q for q in reversed(qubits)]
    marg = np.transpose(marg, [remaining.index(ax) for ax in wanted])
    return np.ascontiguousarray(marg).reshape(-1)


def flag_probability(state: StateVector, qubit: int) -> float:
    """Probability of reading ``|1>`` on ``qubit``."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range")
    view = state.amplitudes.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    return float(np.sum(np.abs(view[:, 1, :]) ** 2))


def sample(
    state: StateVector,
    qubits: Sequence[int],
    shots: int,
    seed: int | np.random.Generator | None = None,
) -> dict[int, int]:
    """Multinomial measurement counts of ``qubits``; deterministic per seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = marginal_probabilities(state, qubits)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    return {int(v): int(c) for v, c in enumerate(draws) if c}
