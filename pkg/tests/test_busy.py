import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronoshed import busy
from chronoshed.busy import (BundleSchedule, PreemptiveSchedule, bounded_cost_formula, bundle_problems,
                             busy_three_approx, convert_to_interval_unbounded, first_fit, greedy_tracking,
                             longest_track, max_overlap, preemptive_bounded, preemptive_problems,
                             preemptive_unbounded)
from chronoshed.core import Job, TimeInterval, job_span, mass
from chronoshed.instances import clique, tracking_gadget
from chronoshed.oracle import (OracleBudget, measure_cover_lp, opt_busy, opt_convert_bruteforce,
                               preemptive_lower_bounds)

F = Fraction


def iv(a, b):
    return TimeInterval(a, b)


def test_max_overlap_half_open():
    assert max_overlap([iv(0, 1), iv(1, 2)]) == 1
    assert max_overlap([iv(0, 2), iv(1, 3), iv(1, 2)]) == 3
    assert max_overlap([]) == 0


def test_longest_track_basic():
    jobs = [Job("a", 0, 2, 2), Job("b", 1, 3, 2), Job("c", 2, 3, 1)]
    tr = longest_track(jobs)
    assert tr.length == 3 and tr.is_disjoint
    assert [j.id for j in tr.jobs] == ["a", "c"]
    assert longest_track([Job("x", 0, 5, 5), Job("y", 1, 2, 1)]).length == 5
    disjoint = [Job("p", 0, 1, 1), Job("q", 2, 3, 1)]
    assert len(longest_track(disjoint).jobs) == 2
    assert longest_track([]).length == 0


def test_longest_track_tie_keeps_earlier_end():
    jobs = [Job("a", 0, 2, 2), Job("b", 1, 3, 2)]
    assert [j.id for j in longest_track(jobs).jobs] == ["a"]
    seen = {longest_track(jobs, random.Random(s)).jobs[0].id for s in range(20)}
    assert seen == {"a", "b"}


def test_longest_track_rejects_flexible():
    with pytest.raises(ValueError):
        longest_track([Job("a", 0, 3, 1)])


def test_greedy_tracking_bundles():
    jobs = [Job("A", 0, 2, 2), Job("B", 0, 2, 2), Job("C", 0, 2, 2), Job("D", 2, 3, 1)]
    sched = greedy_tracking(jobs, 2)
    assert [sorted(j.id for j in b.jobs) for b in sched.bundles] == [["A", "B", "D"], ["C"]]
    assert [b.span for b in sched.bundles] == [3, 2]
    assert sched.cost == 5 == opt_busy(jobs, 2)
    assert bundle_problems(jobs, sched, 2) == []
    doc = sched.to_json()
    assert doc["kind"] == "bundles" and len(doc["machines"]) == 2
    json.dumps(doc)
    with pytest.raises(ValueError):
        greedy_tracking(jobs, 0)


def test_clique_uses_ceil_n_over_g_machines():
    fx = clique(7, 3)
    sched = greedy_tracking(list(fx.instance.jobs), 3)
    assert len(sched.bundles) == 3 and sched.cost == fx.metadata["optimum"]


def test_bundle_problems_reports():
    jobs = [Job("a", 0, 1, 1), Job("b", 0, 1, 1)]
    bad = BundleSchedule((busy.Bundle(tuple(jobs)),), {"a": F(0), "b": F(0)}, 1)
    assert any("capacity 1" in p for p in bundle_problems(jobs, bad, 1))
    moved = BundleSchedule((busy.Bundle((Job("a", 1, 2, 1),)),), {"a": F(1)}, 1)
    probs = bundle_problems(jobs, moved, 1)
    assert any("outside its window" in p for p in probs)
    assert any("job b appears on 0 machines" in p for p in probs)


def test_first_fit_valid():
    jobs = [Job("a", 0, 3, 3), Job("b", 1, 2, 1), Job("c", 1, 4, 3)]
    sched = first_fit(jobs, 1)
    assert bundle_problems(jobs, sched, 1) == []
    assert len(sched.bundles) == 3  # all three share the point 3/2
    assert len(first_fit(jobs, 3).bundles) == 1


def test_conversion_examples():
    conv = convert_to_interval_unbounded([Job("a", 0, 4, 2)])
    assert conv.start_times == {"a": 2} and conv.opt_infty == 2
    conv = convert_to_interval_unbounded([Job("a", 0, 4, 1), Job("b", 2, 6, 1)])
    assert conv.opt_infty == 1
    conv = convert_to_interval_unbounded([Job("a", 0, 1, 1), Job("b", 5, 7, 2)])
    assert conv.opt_infty == 3
    assert convert_to_interval_unbounded([]).opt_infty == 0


def test_preemptive_examples():
    jobs = [Job("a", 0, 2, 1), Job("b", 1, 3, 1)]
    opened, sched = preemptive_unbounded(jobs)
    assert opened == [iv(1, 2)] and sched.cost == 1
    jobs = [Job("a", 0, 3, 2), Job("b", 1, 4, 2)]
    opened, sched = preemptive_unbounded(jobs)
    assert sum(i.length for i in opened) == 2 == measure_cover_lp(jobs)
    bounded = preemptive_bounded(jobs, 1)
    assert preemptive_problems(jobs, bounded, 1) == []
    assert bounded.cost == bounded_cost_formula(jobs, 1) == 4
    doc = bounded.to_json()
    assert doc["kind"] == "preemptive" and set(doc["pieces"]) == {"a", "b"}


def test_preemptive_problems_reports():
    jobs = [Job("a", 0, 2, 1)]
    sched = PreemptiveSchedule({"a": ((0, iv(1, 3)),)})
    probs = preemptive_problems(jobs, sched, 1)
    assert any("needs 1" in p for p in probs) and any("outside its window" in p for p in probs)


# ---------------------------------------------------------------------------
# gadget


def test_gadget_deterministic_run_is_optimal():
    fx = tracking_gadget(2, F(1, 10))
    jobs = list(fx.instance.jobs)
    assert opt_busy(jobs, 2, OracleBudget(jobs=12)) == F(59, 10)
    assert busy_three_approx(jobs, 2).cost == F(59, 10)


def test_gadget_ratio_above_two_at_g3():
    # at g = 3 the mass bound certifies the optimum, and a randomized run exceeds twice it
    fx = tracking_gadget(3, F(1, 10))
    jobs = list(fx.instance.jobs)
    opt = fx.metadata["optimum"]
    assert mass(jobs) / 3 == opt == F(79, 10)
    sched = busy_three_approx(jobs, 3, random.Random(26))
    assert bundle_problems(jobs, sched, 3) == []
    assert 2 < sched.cost / opt <= 3


# ---------------------------------------------------------------------------
# properties


@st.composite
def busy_jobs(draw, max_n=6, interval=False, rational=True, horizon=8):
    out = []
    for i in range(draw(st.integers(1, max_n))):
        q = draw(st.sampled_from([1, 2, 3])) if rational else 1
        r = draw(st.integers(0, horizon * q - 1))
        d = draw(st.integers(r + 1, horizon * q))
        p = d - r if interval else draw(st.integers(1, d - r))
        out.append(Job(f"j{i}", F(r, q), F(d, q), F(p, q)))
    return out


@settings(max_examples=80, deadline=None)
@given(busy_jobs(interval=True), st.integers(1, 3))
def test_greedy_tracking_structure(jobs, g):
    sched = greedy_tracking(jobs, g)
    assert bundle_problems(jobs, sched, g) == []
    tracks = [t for b in sched.bundles for t in b.tracks]
    assert all(t.is_disjoint for t in tracks)
    assert [t.length for t in tracks] == sorted((t.length for t in tracks), reverse=True)
    assert sched.bundles[0].span <= job_span(jobs)
    assert sum(b.span for b in sched.bundles[1:]) <= 2 * mass(jobs) / g


@settings(max_examples=40, deadline=None)
@given(busy_jobs(max_n=5, interval=True, rational=False), st.integers(1, 3))
def test_greedy_tracking_three_approx(jobs, g):
    assert greedy_tracking(jobs, g).cost <= 3 * opt_busy(jobs, g)


@settings(max_examples=80, deadline=None)
@given(busy_jobs(max_n=6, rational=False))
def test_conversion_matches_brute_force(jobs):
    conv = convert_to_interval_unbounded(jobs)
    assert conv.opt_infty == opt_convert_bruteforce(jobs) == job_span(conv.instance)
    for j, pj in zip(jobs, conv.instance):
        assert j.release <= pj.release and pj.deadline <= j.deadline and pj.length == j.length


@settings(max_examples=40, deadline=None)
@given(busy_jobs(max_n=6), st.integers(0, 1000))
def test_random_conversion_stays_optimal(jobs, seed):
    conv = convert_to_interval_unbounded(jobs, random.Random(seed))
    assert job_span(conv.instance) == conv.opt_infty == convert_to_interval_unbounded(jobs).opt_infty


@settings(max_examples=30, deadline=None)
@given(busy_jobs(max_n=4, rational=False, horizon=6), st.integers(1, 2))
def test_busy_three_approx_bound(jobs, g):
    sched = busy_three_approx(jobs, g)
    assert bundle_problems(jobs, sched, g) == []
    assert sched.cost <= 3 * opt_busy(jobs, g)


@settings(max_examples=100, deadline=None)
@given(busy_jobs(max_n=7), st.integers(1, 4))
def test_preemptive_greedy_properties(jobs, g):
    opened, sched = preemptive_unbounded(jobs)
    assert preemptive_problems(jobs, sched, None) == []
    assert sched.cost == sum(i.length for i in opened) == measure_cover_lp(jobs)
    bounded = preemptive_bounded(jobs, g)
    assert preemptive_problems(jobs, bounded, g) == []
    assert bounded.cost == bounded_cost_formula(jobs, g)
    assert bounded.cost <= 2 * preemptive_lower_bounds(jobs, g)
