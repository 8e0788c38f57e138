import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rainbow_qae.resources import (
    InfidelityBudget,
    infidelity_bound,
    resource_table,
    t_depth_comparator,
    t_depth_cry,
    t_depth_direct,
    t_depth_integration,
    t_depth_mcx,
    table_to_csv,
)

ks = st.integers(1, 512)
eps = st.floats(1e-12, 0.999)


def test_block_examples():
    assert [t_depth_comparator(k) for k in (1, 2, 8)] == [15, 21, 33]
    assert [t_depth_cry(e) for e in (1.0, 0.5, 2.0**-10)] == [0, 3, 30]
    assert t_depth_mcx(1) == 5
    assert t_depth_mcx(5) == pytest.approx(19)
    assert t_depth_mcx(17) == pytest.approx(33)


def test_totals_examples():
    assert t_depth_direct(1, 0.5).total == pytest.approx(56)
    integ = t_depth_integration(1, 0.5)
    assert integ.total == pytest.approx(45)
    assert integ.components["integrator"] == 18


@given(ks, eps)
def test_totals_are_component_sums(k, e):
    for report in (t_depth_direct(k, e), t_depth_integration(k, e)):
        assert report.total == sum(report.components.values())


@given(ks, eps)
def test_monotone_in_k_and_precision(k, e):
    for f in (t_depth_direct, t_depth_integration):
        assert f(k + 1, e).total >= f(k, e).total
        assert f(k, e / 2).total >= f(k, e).total


def test_crossover_exists():
    for e in (0.1, 0.01, 1e-4):
        first = next(k for k in range(1, 4096)
                     if t_depth_integration(k, e).total < t_depth_direct(k, e).total)
        assert all(t_depth_integration(k, e).total < t_depth_direct(k, e).total
                   for k in range(first, first + 200))


def test_engineering_mode_rounds_each_block_up():
    report = t_depth_direct(3, 0.01, engineering=True)
    assert all(v == int(v) for v in report.components.values())
    exact = t_depth_direct(3, 0.01)
    for name, v in report.components.items():
        assert v == math.ceil(exact.components[name] - 1e-9)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        t_depth_direct(0, 0.1)
    with pytest.raises(ValueError):
        t_depth_integration(4, 1.0)
    with pytest.raises(ValueError):
        t_depth_cry(0.0)


def test_infidelity_bounds():
    assert infidelity_bound("direct", 0.01, 200).bound == pytest.approx(5e-5)
    assert infidelity_bound("integration", 0.01, 200, shift=100).bound == pytest.approx(1e-4)
    b = infidelity_bound("direct", 0.01, 200, strike=150)
    assert b.bound <= b.baseline
    assert b.baseline == pytest.approx(0.01 / 50)
    low = infidelity_bound("direct", 0.01, 200, strike=250)
    assert low.baseline is None and "undefined" in low.note
    with pytest.raises(ValueError):
        infidelity_bound("integration", 0.01, 200)


def test_budget_total():
    budget = InfidelityBudget(eps_qae=1e-3, eps_payoff=2e-3, eps_gsp=3e-3, eps_max=4e-3, eps_ry=1e-5)
    assert budget.total == pytest.approx(1e-2)
    with pytest.raises(ValueError):
        InfidelityBudget(eps_qae=-1, eps_payoff=0)


def test_csv_table():
    text = table_to_csv(resource_table(range(1, 17), [0.01]))
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["method", "k", "eps_payoff"] and header[-1] == "total"
    assert len(lines) == 1 + 2 * 16
    for method in ("direct", "integration"):
        totals = [float(l.split(",")[-1]) for l in lines[1:] if l.startswith(method)]
        assert totals == sorted(totals)
