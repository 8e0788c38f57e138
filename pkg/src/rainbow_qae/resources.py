"""Closed-form fault-tolerant cost model for the payoff-loading blocks.

T-depths use real-valued logarithms exactly as the symbolic formulas are
written; ``engineering=True`` rounds each block up to an integer instead.
Gaussian loading and the maximum are not costed here.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .payoff import PayoffMethod

__all__ = [
    "TDepthReport",
    "InfidelityBudget",
    "InfidelityBound",
    "t_depth_comparator",
    "t_depth_ry",
    "t_depth_cry",
    "t_depth_mcx",
    "t_depth_integrator",
    "t_depth_direct",
    "t_depth_integration",
    "t_depth",
    "infidelity_bound",
    "resource_table",
    "table_to_csv",
]

# T-depth of one Toffoli in the Clifford+T decomposition
T_PER_TOFFOLI = 3


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"register size k must be a positive integer, got {k}")


def _check_eps(eps: float, name: str = "epsilon") -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {eps}")


def t_depth_comparator(k: int) -> float:
    """``6 log2(k) + 15``: Toffoli depth ``2 log2(k) + 5`` at three T layers each."""
    _check_k(k)
    return T_PER_TOFFOLI * (2 * math.log2(k) + 5)


def t_depth_ry(eps_ry: float) -> float:
    """``3 log2(1/eps_ry)`` for one synthesised RY rotation."""
    if not 0.0 < eps_ry <= 1.0:
        raise ValueError(f"rotation precision must lie in (0, 1], got {eps_ry}")
    return 3 * math.log2(1 / eps_ry)


def t_depth_cry(eps_ry: float) -> float:
    """Same cost as one RY; controlled rotations are counted as two RYs by the callers."""
    return t_depth_ry(eps_ry)


def t_depth_mcx(k: int) -> float:
    """``14 log3(n/2) + 5`` for an MCX with ``n = k + 1`` controls."""
    _check_k(k)
    return 14 * math.log((k + 1) / 2, 3) + 5


def t_depth_integrator(k: int) -> float:
    """``6 log2(k) + 18``: subtractor, its uncomputation and a controlled sign check."""
    _check_k(k)
    return 6 * math.log2(k) + 18


@dataclass(frozen=True)
class TDepthReport:
    """Per-block T-depths of one payoff block; ``total`` is their sum."""

    method: PayoffMethod
    k: int
    eps_payoff: float
    components: dict[str, float] = field(default_factory=dict)
    engineering: bool = False

    @property
    def total(self) -> float:
        return sum(self.components.values())

    def as_row(self) -> dict[str, object]:
        return {
            "method": self.method.value,
            "k": self.k,
            "eps_payoff": self.eps_payoff,
            **self.components,
            "total": self.total,
        }


def _finish(method, k, eps, components, engineering) -> TDepthReport:
    if engineering:
        components = {name: float(math.ceil(v - 1e-9)) for name, v in components.items()}
    return TDepthReport(PayoffMethod(method), int(k), eps, components, engineering)


def t_depth_direct(k: int, eps_payoff: float, *, engineering: bool = False) -> TDepthReport:
    """Direct exponential loading on a ``k``-qubit register.

    The ``2(k + 1)`` rotations (``k`` loading CRYs plus the constant branch,
    each as two RYs) share ``eps_payoff`` evenly.

    Returns:
        Components ``comparator``, ``exponential_loading``, ``payoff_rotation``
        and ``mcx``; their total is
        ``6 log2 k + 14 log3((k+1)/2) + 12 log2(2(k+1)/eps) + 20``.
    """
    _check_k(k)
    _check_eps(eps_payoff, "eps_payoff")
    eps_ry = eps_payoff / (2 * (k + 1))
    cry = 2 * t_depth_cry(eps_ry)
    components = {
        "comparator": t_depth_comparator(k),
        "exponential_loading": cry,
        "payoff_rotation": cry,
        "mcx": t_depth_mcx(k),
    }
    return _finish(PayoffMethod.DIRECT, k, eps_payoff, components, engineering)


def t_depth_integration(k: int, eps_payoff: float, *, engineering: bool = False) -> TDepthReport:
    """Integration loading on a ``k``-qubit register.

    Returns:
        Components ``comparator``, ``integrator`` and ``payoff_rotation``;
        total ``12 log2 k + 6 log2(2/eps) + 33``.
    """
    _check_k(k)
    _check_eps(eps_payoff, "eps_payoff")
    components = {
        "comparator": t_depth_comparator(k),
        "integrator": t_depth_integrator(k),
        "payoff_rotation": 2 * t_depth_cry(eps_payoff / 2),
    }
    return _finish(PayoffMethod.INTEGRATION, k, eps_payoff, components, engineering)


def t_depth(method: PayoffMethod | str, k: int, eps_payoff: float, **kw) -> TDepthReport:
    if PayoffMethod(method) is PayoffMethod.DIRECT:
        return t_depth_direct(k, eps_payoff, **kw)
    return t_depth_integration(k, eps_payoff, **kw)


@dataclass(frozen=True)
class InfidelityBudget:
    """Split of the probability-domain infidelity across the pipeline stages.

    ``total`` is the sum of the QAE, payoff, Gaussian-loading and maximum
    parts; ``eps_ry`` is the per-rotation precision inside the payoff block.
    """

    eps_qae: float
    eps_payoff: float
    eps_gsp: float = 0.0
    eps_max: float = 0.0
    eps_ry: float = 0.0
    s_max: float = math.inf

    def __post_init__(self) -> None:
        for name in ("eps_qae", "eps_payoff", "eps_gsp", "eps_max", "eps_ry", "s_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> float:
        return self.eps_qae + self.eps_payoff + self.eps_gsp + self.eps_max


@dataclass(frozen=True)
class InfidelityBound:
    method: PayoffMethod
    epsilon: float
    bound: float
    baseline: float | None
    note: str = ""


def infidelity_bound(
    method: PayoffMethod | str,
    epsilon: float,
    s_max: float,
    *,
    strike: float | None = None,
    shift: float | None = None,
    params=None,
) -> InfidelityBound:
    """Allowed probability-domain infidelity for a price error of ``epsilon``.

    Args:
        method: payoff-loading method.
        epsilon: target error in currency units.
        s_max: largest representable price, ``exp(b' + a x_max)``.
        strike: strike, used for the undelayed baseline ``epsilon / (s_max - K)``.
        shift: ``exp(b' - a)``, required for the integration method.
        params: optional pricing parameters supplying any of the above.

    Returns:
        Direct ``epsilon / s_max``, integration ``epsilon / (s_max - shift)``,
        and the baseline (``None`` with a note when ``s_max <= K``).
    """
    method = PayoffMethod(method)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if params is not None:
        strike = params.strike if strike is None else strike
        shift = math.exp(params.b_prime - params.a) if shift is None else shift
    if method is PayoffMethod.DIRECT:
        denom = s_max
    else:
        if shift is None:
            raise ValueError("integration bound needs exp(b' - a)")
        denom = s_max - shift
    if denom <= 0:
        raise ValueError(f"bound denominator {denom} is not positive")
    baseline, note = None, ""
    if strike is not None:
        if s_max > strike:
            baseline = epsilon / (s_max - strike)
        else:
            note = "s_max <= strike: undelayed baseline undefined"
    return InfidelityBound(method, epsilon, epsilon / denom, baseline, note)


def resource_table(
    ks: Iterable[int],
    eps_payoffs: Sequence[float],
    methods: Sequence[PayoffMethod | str] = tuple(PayoffMethod),
    *,
    engineering: bool = False,
) -> list[TDepthReport]:
    """Reports for every ``(method, eps, k)`` combination, in that nesting order."""
    ks = list(ks)
    return [
        t_depth(m, k, eps, engineering=engineering)
        for m in methods
        for eps in eps_payoffs
        for k in ks
    ]


def table_to_csv(reports: Sequence[TDepthReport]) -> str:
    """CSV with the union of component columns; missing blocks are left empty."""
    columns = ["method", "k", "eps_payoff"]
    for r in reports:
        columns += [c for c in r.components if c not in columns]
    columns.append("total")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, columns, restval="", lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.as_row().items()})
    return buf.getvalue()
