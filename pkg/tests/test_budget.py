from fractions import Fraction

import pytest

from dpforest.budget import BudgetLedger
from dpforest.errors import InternalInvariantError


def test_hundred_equal_spends_compose_to_exactly_the_budget():
    ledger = BudgetLedger(1.0)
    share = Fraction(1, 100)
    for _ in range(100):
        ledger.record("whole-dataset", share)
    assert ledger.composed_cost() == Fraction(1)
    assert ledger.within_budget()


def test_float_budget_splits_exactly():
    # 0.3 is not a nice binary float; the ledger must still not drift
    ledger = BudgetLedger(0.3)
    share = Fraction(0.3) / 10
    for _ in range(10):
        ledger.record("whole-dataset", share)
    assert ledger.composed_cost() == Fraction(0.3)
    assert ledger.within_budget()


def test_disjoint_scopes_compose_in_parallel():
    ledger = BudgetLedger(1.0)
    ledger.record("slice/0", Fraction(1, 2))
    ledger.record("slice/1", Fraction(7, 10))
    ledger.record("slice/2", Fraction(1, 10))
    assert ledger.composed_cost() == Fraction(7, 10)
    assert ledger.within_budget()


def test_same_scope_composes_sequentially():
    ledger = BudgetLedger(1.0)
    ledger.record("slice/0", Fraction(3, 10))
    ledger.record("slice/0", Fraction(3, 10))
    ledger.record("slice/1", Fraction(1, 2))
    assert ledger.scope_costs()["slice/0"] == Fraction(3, 5)
    assert ledger.composed_cost() == Fraction(3, 5)


def test_overspend_detected():
    ledger = BudgetLedger(Fraction(1, 2))
    ledger.record("x", Fraction(1, 3))
    assert ledger.within_budget()
    ledger.record("x", Fraction(1, 3))
    assert not ledger.within_budget()
    with pytest.raises(InternalInvariantError):
        ledger.assert_within_budget()


def test_budget_boundary_is_inclusive():
    ledger = BudgetLedger(Fraction(1))
    ledger.record("x", Fraction(1))
    assert ledger.within_budget()
    ledger.assert_within_budget()


def test_empty_ledger_costs_nothing():
    ledger = BudgetLedger(2.0)
    assert ledger.composed_cost() == 0
    assert ledger.entries == ()


def test_validation():
    with pytest.raises(ValueError):
        BudgetLedger(0)
    with pytest.raises(ValueError):
        BudgetLedger(-1.0)
    with pytest.raises(ValueError):
        BudgetLedger(float("inf"))
    ledger = BudgetLedger(1.0)
    with pytest.raises(ValueError):
        ledger.record("x", 0)
    with pytest.raises(ValueError):
        ledger.record("x", -0.1)
    with pytest.raises(ValueError):
        ledger.record("", Fraction(1, 10))
    with pytest.raises(ValueError):
        ledger.record("x", float("nan"))
