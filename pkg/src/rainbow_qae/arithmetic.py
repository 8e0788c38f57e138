"""Reversible fixed-point arithmetic: comparators, affine sums and a maximum.

All builders take :class:`~rainbow_qae.statevector.Register` objects and
return a :class:`~rainbow_qae.statevector.Circuit` acting on those qubits.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .statevector import CX, MCX, Circuit, Gate, Register, X

log = logging.getLogger(__name__)

__all__ = [
    "FixedPointSpec",
    "AffineSpec",
    "compare_to_constant",
    "compare_registers",
    "weighted_affine_sum",
    "maximum",
    "maximum_work_qubits",
    "round_half_even",
    "threshold_int",
]

# 2^(input bits) table entries are enumerated by weighted_affine_sum
MAX_TABLE_BITS = 16


def round_half_even(v: float) -> int:
    return int(round(v))


@dataclass(frozen=True)
class FixedPointSpec:
    """``width`` bits, ``frac_bits`` of them after the binary point.

    Unsigned patterns hold ``x / 2**frac_bits``; signed patterns are two's
    complement.
    """

    width: int
    frac_bits: int = 0
    signed: bool = False

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if not 0 <= self.frac_bits <= self.width:
            raise ValueError("frac_bits must lie in [0, width]")

    @property
    def min_int(self) -> int:
        return -(2 ** (self.width - 1)) if self.signed else 0

    @property
    def max_int(self) -> int:
        return 2 ** (self.width - 1) - 1 if self.signed else 2**self.width - 1

    @property
    def resolution(self) -> float:
        return 2.0**-self.frac_bits

    def to_int(self, pattern: int) -> int:
        if self.signed and pattern >= 2 ** (self.width - 1):
            return pattern - 2**self.width
        return pattern

    def to_pattern(self, value: int) -> int:
        if not self.min_int <= value <= self.max_int:
            raise ValueError(f"{value} is outside [{self.min_int}, {self.max_int}]")
        return value % 2**self.width

    def value(self, pattern: int) -> float:
        return self.to_int(pattern) / 2**self.frac_bits


@dataclass(frozen=True)
class AffineSpec:
    """``out = round(2**P * (sum_k coefficients[k] * v_k + offset))``.

    ``v_k`` are the unsigned integers held by the input registers; the result
    is rounded half-to-even and saturated to the output range.
    """

    coefficients: tuple[float, ...]
    offset: float
    out: FixedPointSpec
    rounding: str = "half-even"

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.rounding != "half-even":
            raise ValueError("only half-even rounding is supported")

    def raw(self, values: Sequence[int]) -> int:
        if len(values) != len(self.coefficients):
            raise ValueError("one value per coefficient expected")
        acc = sum(c * v for c, v in zip(self.coefficients, values)) + self.offset
        return round_half_even(acc * 2**self.out.frac_bits)

    def evaluate(self, values: Sequence[int]) -> tuple[int, bool]:
        """Saturated integer result and whether saturation occurred."""
        v = self.raw(values)
        clipped = min(max(v, self.out.min_int), self.out.max_int)
        return clipped, clipped != v


def threshold_int(threshold: float, fxp: FixedPointSpec) -> int:
    """``ceil(2**P * threshold)``, the smallest integer pattern at or above it."""
    t = math.ceil(threshold * 2**fxp.frac_bits)
    # nudge back values that sit on a grid point up to float noise
    if abs(t - 1 - threshold * 2**fxp.frac_bits) < 1e-9:
        t -= 1
    return t


def compare_to_constant(
    x: Register,
    threshold: float,
    flag: int,
    fxp: FixedPointSpec | None = None,
) -> Circuit:
    """Flip ``flag`` iff the fixed-point value in ``x`` is >= ``threshold``.

    The comparison is exact on representable values: it tests
    ``int(x) >= ceil(2**P * threshold)``.  Thresholds outside the register
    range make the flag constant, which is logged rather than rejected.

    The construction is ancilla-free: ``x >= T`` is split into disjoint prefix
    patterns ``x[j] == (T-1)[j]`` for ``j > i`` and ``x[i] = 1 > (T-1)[i]``,
    each one a multi-controlled X.
    """
    fxp = fxp or FixedPointSpec(x.width)
    if fxp.width != x.width:
        raise ValueError("fixed-point width does not match the register")
    t_int = threshold_int(threshold, fxp)
    meta = {"threshold_int": t_int, "constant_flag": None}
    if t_int <= fxp.min_int:
        log.info("threshold %s below register range: flag is always 1", threshold)
        meta["constant_flag"] = 1
        return Circuit.from_gates([X(flag)], metadata=meta)
    if t_int > fxp.max_int:
        log.info("threshold %s above register range: flag is always 0", threshold)
        meta["constant_flag"] = 0
        return Circuit.from_gates([], num_qubits=max(x.qubits + (flag,)) + 1, metadata=meta)

    n = x.width
    # offset-binary view of signed values: flipping the sign bit orders patterns
    sign_flip = 2 ** (n - 1) if fxp.signed else 0
    below = fxp.to_pattern(t_int - 1) ^ sign_flip
    gates: list[Gate] = []
    for i in reversed(range(n)):
        if (below >> i) & 1:
            continue
        controls, polarity = [], []
        for j in range(n - 1, i, -1):
            bit = bool((below >> j) & 1)
            controls.append(x[j])
            polarity.append(bit if not (fxp.signed and j == n - 1) else not bit)
        controls.append(x[i])
        polarity.append(not (fxp.signed and i == n - 1))
        gates.append(MCX(controls, flag, polarity))
    return Circuit.from_gates(gates, metadata=meta)


def _maj(c: int, b: int, a: int) -> list[Gate]:
    return [CX(a, b), CX(a, c), MCX((c, b), a)]


def compare_registers(
    r: Register,
    x: Register,
    flag: int,
    *,
    ancilla: int,
    control: int | None = None,
    signed: bool = False,
) -> Circuit:
    """Flip ``flag`` iff ``r <= x`` (optionally only when ``control`` is 1).

    Ripple-carry comparison: the carry of ``r + ~x`` equals ``[r > x]``.  The
    carry chain is computed in place with majority gates (the register ``r``
    temporarily holds the carries and ``x`` its complement), the negated top
    carry is copied to ``flag``, and the chain is uncomputed.  ``r``, ``x``
    and the zero-initialised ``ancilla`` are restored.
    """
    if r.width != x.width:
        raise ValueError(f"width mismatch: {r.width} vs {x.width}")
    n = r.width
    prep: list[Gate] = [X(q) for q in x]
    if signed:
        prep += [X(r[n - 1]), X(x[n - 1])]
    chain: list[Gate] = []
    carry_in = ancilla
    for i in range(n):
        chain += _maj(carry_in, x[i], r[i])
        carry_in = r[i]
    if control is None:
        copy = [CX(r[n - 1], flag, positive=False)]
    else:
        copy = [MCX((control, r[n - 1]), flag, (True, False))]
    undo_chain = [g.inverse() for g in reversed(chain)]
    gates = prep + chain + copy + undo_chain + prep[::-1]
    return Circuit.from_gates(gates)


def weighted_affine_sum(
    inputs: Sequence[Register], spec: AffineSpec, out: Register
) -> Circuit:
    """XOR the affine combination of the inputs into the zeroed ``out`` register.

    Built as a reversible lookup table: for every joint input value one
    multi-controlled X per set output bit.  Saturated entries are recorded in
    ``metadata["saturated"]``.
    """
    if len(inputs) != len(spec.coefficients):
        raise ValueError("one coefficient per input register expected")
    if out.width != spec.out.width:
        raise ValueError("output register width does not match the spec")
    total_bits = sum(reg.width for reg in inputs)
    if total_bits > MAX_TABLE_BITS:
        raise ValueError(f"{total_bits} input bits exceed the lookup-table limit")
    controls = tuple(q for reg in inputs for q in reg)
    gates: list[Gate] = []
    saturated = []
    for values in itertools.product(*(range(2**reg.width) for reg in inputs)):
        result, sat = spec.evaluate(values)
        if sat:
            saturated.append(tuple(values))
        pattern = spec.out.to_pattern(result)
        if not pattern:
            continue
        polarity = tuple(
            bool((v >> j) & 1) for reg, v in zip(inputs, values) for j in range(reg.width)
        )
        for j in range(out.width):
            if (pattern >> j) & 1:
                gates.append(MCX(controls, out[j], polarity) if controls else X(out[j]))
    if saturated:
        log.debug("affine sum saturated on %d of its inputs", len(saturated))
    return Circuit.from_gates(gates, metadata={"saturated": saturated})


def maximum_work_qubits(n_inputs: int, width: int) -> int:
    """Ancillas needed by :func:`maximum`: select flags, intermediates, one carry."""
    if n_inputs < 1:
        raise ValueError("maximum of an empty list")
    if n_inputs == 1:
        return 0
    return (n_inputs - 1) + (n_inputs - 2) * width + 1


def _select(flag: int, a: Register, b: Register, dest: Register) -> list[Gate]:
    gates = []
    for qa, qb, qd in zip(a, b, dest):
        gates.append(MCX((flag, qb), qd, (True, True)))
        gates.append(MCX((flag, qa), qd, (False, True)))
    return gates


def maximum(
    zs: Sequence[Register],
    out: Register,
    *,
    work: Sequence[int] = (),
    fxp: FixedPointSpec | None = None,
    uncompute: bool = False,
) -> Circuit:
    """Write ``max(zs)`` into the zeroed ``out`` register.

    A comparator-select chain: ``flag = [acc <= z_i]`` then
    ``dest = flag ? z_i : acc``.  ``work`` supplies zeroed ancillas (see
    :func:`maximum_work_qubits`).  By default select flags and intermediate
    maxima are left as garbage; ``uncompute=True`` returns them to zero.
    """
    if not zs:
        raise ValueError("maximum of an empty list")
    width = out.width
    if any(z.width != width for z in zs):
        raise ValueError("all inputs must share the output width")
    fxp = fxp or FixedPointSpec(width)
    if len(zs) == 1:
        return Circuit.from_gates([CX(a, b) for a, b in zip(zs[0], out)])
    need = maximum_work_qubits(len(zs), width)
    if len(work) < need:
        raise ValueError(f"maximum needs {need} work qubits, got {len(work)}")
    n_stages = len(zs) - 1
    flags = list(work[:n_stages])
    carry = work[need - 1]
    inter = [
        Register(f"max_tmp{i}", tuple(work[n_stages + i * width : n_stages + (i + 1) * width]))
        for i in range(n_stages - 1)
    ]
    stages = []
    acc = zs[0]
    for i in range(n_stages):
        dest = out if i == n_stages - 1 else inter[i]
        cmp = list(compare_registers(acc, zs[i + 1], flags[i], ancilla=carry, signed=fxp.signed).gates)
        sel = _select(flags[i], acc, zs[i + 1], dest)
        stages.append((cmp, sel))
        acc = dest
    gates: list[Gate] = [g for cmp, sel in stages for g in cmp + sel]
    if uncompute:
        gates += stages[-1][0]
        for cmp, sel in reversed(stages[:-1]):
            gates += sel + cmp
    return Circuit.from_gates(gates)
