import pytest

from fluentkd.kernel import (
    DomainTheory,
    EventOccurrence,
    FluentAssignment,
    Mvi,
    NaiveEvaluator,
    OutOfOrderEvent,
    naive_holds_at,
    naive_holds_for,
)
from fluentkd.terms import NEG_INF, POS_INF, WILDCARD, atom, term

from genutil import TableOracle, random_instance, random_query_pattern

F = atom("f")
A, B = atom("a"), atom("b")
ANY = FluentAssignment(WILDCARD, WILDCARD)


def fa(f, v):
    return FluentAssignment(f, v)


def simple_theory():
    """Events set(f, v) / clear(f, v) initiate and terminate directly."""

    def init_rule(e, ctx):
        if e.event.functor == "set":
            return [fa(e.event.args[0], e.event.args[1])]
        return []

    def term_rule(e, ctx):
        if e.event.functor == "clear":
            return [fa(e.event.args[0], e.event.args[1])]
        return []

    return DomainTheory(initiation_rules=(init_rule,), termination_rules=(term_rule,))


def ev(functor, *args, t=0):
    return EventOccurrence(term(functor, *args), t)


def feed(theory, events):
    ev_ = NaiveEvaluator(theory)
    for e in events:
        ev_.update(e)
    return ev_


def test_initially_holds_at_zero():
    theory = DomainTheory(initially=(fa(atom("mode"), atom("idle")),))
    state = NaiveEvaluator(theory)
    assert state.holds_at(FluentAssignment(atom("mode"), WILDCARD), 0) == [
        fa(atom("mode"), atom("idle"))
    ]


def test_closed_open_convention():
    state = feed(simple_theory(), [ev("set", F, A, t=5)])
    assert state.holds_at(fa(F, A), 5) == [fa(F, A)]
    assert state.holds_at(fa(F, A), 4) == []
    assert state.holds_at(fa(F, A), 100) == [fa(F, A)]


def test_holds_for_closed_and_open():
    state = feed(simple_theory(), [ev("set", F, A, t=3), ev("clear", F, A, t=9)])
    assert state.mvi_snapshot() == {Mvi(F, A, 3, 9)}
    state = feed(simple_theory(), [ev("set", F, A, t=3)])
    assert state.mvi_snapshot() == {Mvi(F, A, 3, POS_INF)}


def test_different_value_breaks():
    state = feed(simple_theory(), [ev("set", F, A, t=5), ev("set", F, B, t=9)])
    assert state.mvi_snapshot() == {Mvi(F, A, 5, 9), Mvi(F, B, 9, POS_INF)}
    assert state.holds_at(fa(F, WILDCARD), 9) == [fa(F, B)]


def test_reinitiation_is_noop():
    state = feed(simple_theory(), [ev("set", F, A, t=3), ev("set", F, A, t=6)])
    assert state.mvi_snapshot() == {Mvi(F, A, 3, POS_INF)}


def test_zero_length_interval_dropped():
    state = feed(simple_theory(), [ev("set", F, A, t=5), ev("clear", F, A, t=5)])
    assert state.mvi_snapshot() == set()
    assert state.holds_at(fa(F, A), 5) == []


def test_terminating_not_held_is_noop():
    state = feed(simple_theory(), [ev("set", F, A, t=3), ev("clear", F, B, t=5)])
    assert state.mvi_snapshot() == {Mvi(F, A, 3, POS_INF)}


def test_left_open_interval_from_bare_termination():
    state = feed(simple_theory(), [ev("clear", F, A, t=7)])
    assert state.mvi_snapshot() == {Mvi(F, A, NEG_INF, 7)}
    # records a termination, not an initiation: holds_at never sees it
    assert state.holds_at(fa(F, A), 3) == []
    assert state.cached_between(0, 100, ANY) == [Mvi(F, A, NEG_INF, 7)]


def test_left_open_blocked_by_initially():
    theory = DomainTheory(
        initially=(fa(F, B),),
        termination_rules=simple_theory().termination_rules,
        initiation_rules=simple_theory().initiation_rules,
    )
    state = NaiveEvaluator(theory)
    state.update(ev("clear", F, A, t=7))
    assert state.mvi_snapshot() == {Mvi(F, B, 0, POS_INF)}


def test_left_open_blocked_by_any_prior_happening():
    # the prior initiation vanished as a zero-length interval, but it still
    # counts as history for the fluent
    state = feed(
        simple_theory(),
        [ev("set", F, A, t=5), ev("clear", F, A, t=5), ev("clear", F, A, t=9)],
    )
    assert state.mvi_snapshot() == set()
    # a prior termination of a different value also blocks
    state = feed(simple_theory(), [ev("clear", F, B, t=3), ev("clear", F, A, t=9)])
    assert state.mvi_snapshot() == {Mvi(F, B, NEG_INF, 3)}


def test_out_of_order_rejected():
    state = feed(simple_theory(), [ev("set", F, A, t=5)])
    with pytest.raises(OutOfOrderEvent):
        state.update(ev("set", F, B, t=4))
    assert len(state.events) == 1


def test_update_reports_net_changes():
    state = NaiveEvaluator(simple_theory())
    r = state.update(ev("set", F, A, t=5))
    assert r.opened == [Mvi(F, A, 5, POS_INF)] and r.closed == []
    r = state.update(ev("set", F, B, t=9))
    assert r.opened == [Mvi(F, B, 9, POS_INF)]
    assert r.closed == [Mvi(F, A, 5, 9)]
    # same-tick retraction of a pre-existing open interval: closed [s, s)
    r = state.update(ev("set", F, A, t=9))
    assert r.closed == [Mvi(F, B, 9, 9)]
    assert r.opened == [Mvi(F, A, 9, POS_INF)]


@pytest.mark.parametrize("seed", range(400))
def test_matches_truth_table_oracle(seed):
    theory, narrative, effects = random_instance(seed)
    state = feed(theory, narrative)
    oracle = TableOracle(theory, narrative, effects)
    assert state.mvi_snapshot() == oracle.all_mvis(), f"seed={seed}"
    import random as _r

    rng = _r.Random(seed ^ 0xBEEF)
    for _ in range(10):
        q = random_query_pattern(rng, effects)
        t = rng.randint(0, oracle.horizon + 2)
        assert set(state.holds_at(q, t)) == oracle.holds_at(q, t), (
            f"seed={seed} q={q} t={t}")


@pytest.mark.parametrize("seed", range(150))
def test_flat_cache_equals_from_scratch(seed):
    theory, narrative, _ = random_instance(seed, max_events=40)
    state = feed(theory, narrative)
    assert state.mvi_snapshot() == naive_holds_for(theory, narrative)
    import random as _r

    rng = _r.Random(seed)
    t = rng.randint(0, 60)
    q = ANY
    assert set(state.holds_at(q, t)) == naive_holds_at(theory, narrative, q, t)


@pytest.mark.parametrize("seed", range(120))
def test_exclusivity_and_disjointness(seed):
    theory, narrative, effects = random_instance(seed)
    state = feed(theory, narrative)
    per_fluent = {}
    for m in state.mvi_snapshot():
        per_fluent.setdefault(m.fluent, []).append(m)
    for intervals in per_fluent.values():
        intervals.sort(key=lambda m: (m.t_start, m.t_end))
        for x, y in zip(intervals, intervals[1:]):
            assert x.t_end <= y.t_start, f"seed={seed}: overlap {x} {y}"
    oracle = TableOracle(theory, narrative, effects)
    for snap in oracle.table:
        assert len(snap) == len(set(snap))  # one value per fluent by construction


@pytest.mark.parametrize("seed", range(60))
def test_append_monotonicity(seed):
    theory, narrative, _ = random_instance(seed, max_events=30)
    if not narrative:
        return
    head, tail = narrative[:-1], narrative[-1]
    before = naive_holds_for(theory, head)
    after = naive_holds_for(theory, narrative)
    settled = {m for m in before if m.t_end <= tail.time and m.t_end != POS_INF}
    assert settled <= after, f"seed={seed}"
