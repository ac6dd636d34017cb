import random

import pytest

from fluentkd.engine import Engine, EngineInvariantViolation
from fluentkd.kernel import (
    DomainTheory,
    EventOccurrence,
    FluentAssignment,
    MalformedWindow,
    Mvi,
    NaiveEvaluator,
    OutOfOrderEvent,
)
from fluentkd.terms import NEG_INF, POS_INF, WILDCARD, atom, term

from genutil import random_instance, random_query_pattern

F = atom("f")
A, B = atom("a"), atom("b")
ANY = FluentAssignment(WILDCARD, WILDCARD)


def fa(f, v):
    return FluentAssignment(f, v)


def ev(functor, *args, t=0):
    return EventOccurrence(term(functor, *args), t)


def simple_theory():
    def init_rule(e, ctx):
        if e.event.functor == "set":
            return [fa(e.event.args[0], e.event.args[1])]
        return []

    def term_rule(e, ctx):
        if e.event.functor == "clear":
            return [fa(e.event.args[0], e.event.args[1])]
        return []

    return DomainTheory(initiation_rules=(init_rule,), termination_rules=(term_rule,))


def test_update_opens_and_closes():
    eng = Engine(simple_theory())
    r = eng.update(ev("set", F, A, t=5))
    assert r.opened == [Mvi(F, A, 5, POS_INF)] and r.closed == []
    r = eng.update(ev("set", F, B, t=9))
    assert r.closed == [Mvi(F, A, 5, 9)]
    assert r.opened == [Mvi(F, B, 9, POS_INF)]


def test_out_of_order():
    eng = Engine(simple_theory())
    eng.update(ev("set", F, A, t=5))
    with pytest.raises(OutOfOrderEvent):
        eng.update(ev("set", F, A, t=4))


def test_close_interval_primitive():
    eng = Engine(simple_theory())
    eng.open_interval(F, A, 5)
    eng.close_interval(F, A, 9)
    assert eng.mvi_snapshot() == {Mvi(F, A, 5, 9)}
    eng.close_interval(F, B, 12)  # nothing open: no-op
    assert eng.mvi_snapshot() == {Mvi(F, A, 5, 9)}
    eng.open_interval(F, A, 5)
    eng.close_interval(F, A, 5)  # zero length: retracted outright
    assert eng.mvi_snapshot() == {Mvi(F, A, 5, 9)}


def test_open_interval_primitive():
    eng = Engine(simple_theory())
    eng.open_interval(F, A, 5)
    eng.open_interval(F, A, 7)  # same value already open: no-op
    assert eng.mvi_snapshot() == {Mvi(F, A, 5, POS_INF)}
    with pytest.raises(EngineInvariantViolation):
        eng.open_interval(F, B, 9)


def test_holds_at_queries():
    eng = Engine(simple_theory())
    eng.update(ev("set", F, A, t=5))
    eng.update(ev("set", atom("g"), B, t=6))
    assert eng.holds_at(fa(F, A), 5) == [fa(F, A)]
    assert eng.holds_at(fa(F, A), 4) == []
    assert set(eng.holds_at(ANY, 6)) == {fa(F, A), fa(atom("g"), B)}


def test_mholds_for_and_windows():
    eng = Engine(simple_theory())
    assert eng.mholds_for(ANY) == []
    eng.update(ev("set", F, A, t=2))
    eng.update(ev("clear", F, A, t=4))
    assert eng.mholds_for(ANY) == [Mvi(F, A, 2, 4)]
    assert eng.cached_between(5, 9, ANY) == []
    assert eng.cached_between(3, 9, ANY) == [Mvi(F, A, 2, 4)]
    assert eng.cached_between(NEG_INF, POS_INF, ANY) == eng.mholds_for(ANY)
    assert eng.cached_between(4, 4, ANY) == []
    with pytest.raises(MalformedWindow):
        eng.cached_between(9, 5, ANY)


def test_happens_in_window():
    eng = Engine(simple_theory())
    assert eng.happens_in_window(WILDCARD, 0, 100) == []
    e1, e2 = ev("set", F, A, t=5), ev("ping", t=7)
    eng.update(e1)
    eng.update(e2)
    assert eng.happens_in_window(term("set", WILDCARD, WILDCARD), 0, 100) == [e1]
    assert eng.happens_in_window(atom("ping"), 0, 100) == [e2]
    assert eng.happens_in_window(atom("ping"), 0, 6) == []
    assert eng.happens_in_window(WILDCARD, 5, 7) == [e1, e2]
    with pytest.raises(MalformedWindow):
        eng.happens_in_window(WILDCARD, 7, 5)


def test_left_open_interval_excluded_from_holds_at():
    eng = Engine(simple_theory())
    eng.update(ev("clear", F, A, t=7))
    assert eng.mvi_snapshot() == {Mvi(F, A, NEG_INF, 7)}
    assert eng.holds_at(fa(F, A), 3) == []
    assert eng.cached_between(0, 100, ANY) == [Mvi(F, A, NEG_INF, 7)]
    assert eng.cached_between(7, 100, ANY) == []


def test_initially_seeded():
    theory = DomainTheory(initially=(fa(F, A),))
    eng = Engine(theory)
    assert eng.mvi_snapshot() == {Mvi(F, A, 0, POS_INF)}
    assert eng.holds_at(ANY, 0) == [fa(F, A)]


def _windows(rng, horizon):
    a = rng.randint(0, horizon + 2)
    b = rng.randint(0, horizon + 2)
    return min(a, b), max(a, b)


@pytest.mark.parametrize("seed", range(150))
def test_engine_matches_naive_after_every_event(seed):
    theory, narrative, effects = random_instance(seed, max_events=60)
    eng = Engine(theory)
    ref = NaiveEvaluator(theory)
    rng = random.Random(seed ^ 0xC0FFEE)
    horizon = (max(e.time for e in narrative) if narrative else 0) + 2
    for e in narrative:
        r_eng = eng.update(e)
        r_ref = ref.update(e)
        assert set(r_eng.opened) == set(r_ref.opened), f"seed={seed} at {e}"
        assert set(r_eng.closed) == set(r_ref.closed), f"seed={seed} at {e}"
        assert eng.mvi_snapshot() == ref.mvi_snapshot(), f"seed={seed} at {e}"
        q = random_query_pattern(rng, effects)
        t = rng.randint(0, horizon)
        assert set(eng.holds_at(q, t)) == set(ref.holds_at(q, t)), (
            f"seed={seed} q={q} t={t}")
    # full query sweep at the end
    for _ in range(20):
        q = random_query_pattern(rng, effects)
        t = rng.randint(0, horizon)
        assert set(eng.holds_at(q, t)) == set(ref.holds_at(q, t))
        assert set(eng.mholds_for(q)) == set(ref.mholds_for(q))
        ws, we = _windows(rng, horizon)
        assert set(eng.cached_between(ws, we, q)) == set(ref.cached_between(ws, we, q))
        pat = rng.choice(
            [WILDCARD]
            + [term(f"e{i}", WILDCARD) for i in range(3)]
            + [atom(f"e{i}") for i in range(3)]
        )
        assert set(eng.happens_in_window(pat, ws, we)) == set(
            ref.happens_in_window(pat, ws, we)), f"seed={seed} pat={pat}"


@pytest.mark.parametrize("seed", range(40))
def test_update_mutation_budget(seed):
    # one event insert, plus per firing at most one delete and two inserts
    theory, narrative, _ = random_instance(seed, max_events=40)
    eng = Engine(theory)
    for e in narrative:
        firings0 = eng.rule_firings
        muts0 = eng.event_tree.mutation_count + eng.mvi_tree.mutation_count
        eng.update(e)
        fired = eng.rule_firings - firings0
        muts = eng.event_tree.mutation_count + eng.mvi_tree.mutation_count - muts0
        assert muts <= 1 + 3 * fired, f"seed={seed}"


@pytest.mark.parametrize("seed", range(40))
def test_update_touches_only_fired_fluents(seed):
    theory, narrative, _ = random_instance(seed, max_events=40)
    eng = Engine(theory)
    prev = eng.mvi_snapshot()
    for e in narrative:
        report = eng.update(e)
        cur = eng.mvi_snapshot()
        changed = prev ^ cur
        fired_fluents = {m.fluent for m in report.opened} | {
            m.fluent for m in report.closed}
        for m in changed:
            assert m.fluent in fired_fluents, f"seed={seed}: stray change {m}"
        prev = cur


def test_trees_stay_balanced_under_stream():
    theory = simple_theory()
    eng = Engine(theory)
    vals = [atom("x"), atom("y")]
    for i in range(3000):
        eng.update(ev("set", F, vals[i % 2], t=i))
    eng.event_tree.check_invariants()
    eng.mvi_tree.check_invariants()


@pytest.mark.parametrize("seed", range(25))
def test_event_tree_equals_history(seed):
    theory, narrative, _ = random_instance(seed, max_events=50)
    eng = Engine(theory)
    for e in narrative:
        eng.update(e)
    indexed = sorted(
        (p for _, p in eng.event_tree.items()),
        key=lambda e: (e.time, e.event.text))
    history = sorted(narrative, key=lambda e: (e.time, e.event.text))
    assert indexed == history, f"seed={seed}"
