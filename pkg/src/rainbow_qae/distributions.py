"""State preparation for discretised Gaussians and the exponential profile g(r)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .statevector import MCRY, RY, Circuit, Register

__all__ = [
    "DiscreteDistribution",
    "gaussian_grid",
    "load_distribution",
    "exponential_state_prep",
    "exponential_profile",
    "exponential_angles",
]


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probabilities ``p(j)`` on the grid ``x_min + j * dx``, ``j < 2**m``."""

    probabilities: np.ndarray
    x_min: float
    dx: float

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0 or p.size & (p.size - 1):
            raise ValueError("need 2**m probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def num_qubits(self) -> int:
        return self.probabilities.size.bit_length() - 1

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.probabilities.size)


def gaussian_grid(m: int, truncation: float = 3.0, convention: str = "points") -> DiscreteDistribution:
    """Discretised standard normal on ``2**m`` points.

    ``convention="points"`` puts the grid endpoints at ``-truncation`` and
    ``+truncation`` and weights each point by the normal pdf.
    ``convention="left-bins"`` splits ``[-truncation, truncation]`` into
    ``2**m`` equal bins, labels each with its left edge and weights it by the
    bin's probability mass.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if truncation <= 0:
        raise ValueError("truncation must be positive")
    n = 2**m
    if convention == "points":
        x = np.linspace(-truncation, truncation, n)
        p = norm.pdf(x)
        dx = 2 * truncation / (n - 1)
    elif convention == "left-bins":
        edges = np.linspace(-truncation, truncation, n + 1)
        p = np.diff(norm.cdf(edges))
        dx = 2 * truncation / n
    else:
        raise ValueError(f"unknown grid convention {convention!r}")
    return DiscreteDistribution(p / p.sum(), -truncation, dx)


def load_distribution(dist: DiscreteDistribution, reg: Register) -> Circuit:
    """Prepare ``sum_j sqrt(p(j)) |j>`` on a zeroed register.

    Binary-split tree: the most significant qubit is rotated first, then each
    lower qubit by the conditional probability given every prefix of the
    higher bits.
    """
    p = dist.probabilities
    m = reg.width
    if p.size != 2**m:
        raise ValueError(f"distribution has {p.size} entries, register holds {2**m}")
    gates = []
    for level in reversed(range(m)):
        blocks = p.reshape(2 ** (m - level - 1), 2, 2**level).sum(axis=2)
        higher = [reg[j] for j in range(level + 1, m)]
        for prefix, (p0, p1) in enumerate(blocks):
            total = p0 + p1
            if total <= 0 or p1 <= 0:
                continue
            angle = 2 * math.asin(min(1.0, math.sqrt(p1 / total)))
            polarity = [bool((prefix >> (j - level - 1)) & 1) for j in range(level + 1, m)]
            if higher:
                gates.append(MCRY(angle, higher, reg[level], polarity))
            else:
                gates.append(RY(angle, reg[level]))
    return Circuit.from_gates(gates)


def exponential_angles(a: float, width: int) -> np.ndarray:
    """``alpha_i = 2 * arctan(exp(a * 2**i / 2))``."""
    return 2 * np.arctan(np.exp(a * 2.0 ** np.arange(width) / 2))


def exponential_profile(a: float, width: int) -> np.ndarray:
    """``g(r) = exp(a r) / sum_j exp(a j)`` for ``r < 2**width``."""
    w = np.exp(a * (np.arange(2**width) - (2**width - 1 if a > 0 else 0)))
    return w / w.sum()


def exponential_state_prep(a: float, reg: Register) -> Circuit:
    """One RY per qubit; the register then reads ``r`` with probability ``g(r)``."""
    return Circuit.from_gates(
        RY(angle, q) for angle, q in zip(exponential_angles(a, reg.width), reg)
    )
