import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronoshed.core import ActiveInstance, Job
from chronoshed.instances import integrality_gap, tracking_gadget
from chronoshed.maxflow import check_feasibility
from chronoshed.oracle import (BudgetExceeded, OracleBudget, brute_force_feasible, hall_feasible,
                               measure_cover_lp, opt_active, opt_active_by_components, opt_busy,
                               opt_convert_bruteforce, preemptive_lower_bounds, window_components)

F = Fraction


def test_opt_active_small():
    inst = ActiveInstance([Job("a", 0, 3, 2), Job("b", 1, 3, 2)], 2)
    assert opt_active(inst) == 2
    inst = ActiveInstance([Job("a", 0, 2, 1), Job("b", 0, 2, 1), Job("c", 0, 2, 1)], 2)
    assert opt_active(inst) == 2
    assert opt_active(ActiveInstance([], 1)) == 0


def test_opt_active_infeasible():
    inst = ActiveInstance([Job("a", 0, 1, 1), Job("b", 0, 1, 1)], 1)
    with pytest.raises(ValueError):
        opt_active(inst)


def test_budget_limits():
    inst = integrality_gap(3).instance
    with pytest.raises(BudgetExceeded):
        opt_active(inst)
    with pytest.raises(BudgetExceeded):
        opt_active(inst, OracleBudget(jobs=20, slots=4))
    with pytest.raises(BudgetExceeded):
        opt_busy([Job(f"u{i}", 0, 1, 1) for i in range(9)], 2)


def test_budget_from_env(monkeypatch):
    monkeypatch.setenv("CHRONOSHED_ORACLE_BUDGET_MS", "250")
    assert OracleBudget.from_env().wall_ms == 250
    monkeypatch.delenv("CHRONOSHED_ORACLE_BUDGET_MS")
    assert OracleBudget.from_env(jobs=3) == OracleBudget(jobs=3)


def test_gap_family_by_components():
    for g in (2, 3, 5):
        inst = integrality_gap(g).instance
        assert len(window_components(inst)) == g
        assert opt_active_by_components(inst, OracleBudget(jobs=g + 1)) == 2 * g
    assert opt_active(integrality_gap(2).instance) == 4


def test_opt_busy_examples():
    assert opt_busy([Job(f"u{i}", 2 * i, 2 * i + 1, 1) for i in range(3)], 3) == 3
    jobs = [Job("A", 0, 2, 2), Job("B", 0, 2, 2), Job("C", 0, 2, 2), Job("D", 2, 3, 1)]
    assert opt_busy(jobs, 2) == 5
    assert opt_busy([Job("a", 0, 5, 2)], 1) == 2
    assert opt_busy([Job("a", F(1, 2), 3, F(3, 2)), Job("b", 0, 2, 1)], 1) == F(5, 2)


def test_opt_busy_gadget():
    fx = tracking_gadget(2, F(1, 10))
    assert opt_busy(list(fx.instance.jobs), 2, OracleBudget(jobs=12)) == F(59, 10)


def test_convert_bruteforce_examples():
    assert opt_convert_bruteforce([Job("a", 0, 4, 1), Job("b", 2, 6, 1)]) == 1
    assert opt_convert_bruteforce([Job("a", 0, 1, 1), Job("b", 5, 7, 2)]) == 3
    with pytest.raises(ValueError):
        opt_convert_bruteforce([Job("a", 0, F(3, 2), 1)])


def test_measure_cover_and_lower_bounds():
    jobs = [Job("a", 0, 3, 2), Job("b", 1, 4, 2)]
    assert measure_cover_lp(jobs) == 2
    assert preemptive_lower_bounds(jobs, 1) == 4
    assert preemptive_lower_bounds(jobs, 4) == 2
    assert measure_cover_lp([]) == 0


@st.composite
def slot_pairs(draw):
    T = draw(st.integers(1, 7))
    g = draw(st.integers(1, 3))
    jobs = []
    for i in range(draw(st.integers(1, 5))):
        r = draw(st.integers(0, T - 1))
        d = draw(st.integers(r + 1, T))
        jobs.append(Job(f"j{i}", r, d, draw(st.integers(1, d - r))))
    inst = ActiveInstance(jobs, g)
    return inst, draw(st.sets(st.sampled_from(list(inst.slots))))


@settings(max_examples=200, deadline=None)
@given(slot_pairs())
def test_feasibility_oracles_agree(pair):
    inst, slots = pair
    flow = check_feasibility(inst, slots).feasible
    assert hall_feasible(inst, slots) == flow == brute_force_feasible(inst, slots)


@settings(max_examples=60, deadline=None)
@given(slot_pairs())
def test_opt_active_is_smallest_feasible_set(pair):
    inst, _ = pair
    if not check_feasibility(inst, inst.slots).feasible:
        return
    best = min(size for size in range(inst.T + 1)
               for c in itertools.combinations(inst.slots, size) if brute_force_feasible(inst, c))
    assert opt_active(inst) == best == opt_active_by_components(inst)
