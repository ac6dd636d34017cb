"""Event calculus vocabulary and the naive reference evaluator.

Interval semantics used everywhere in this package:

* Fluents are multi-valued but hold at most one value at a time; initiating
  a different value ends the previous one (the "different-value break").
* Validity intervals are closed-open: an interval [s, e) holds at s and at
  every tick before e, never at e.  Zero-length intervals are dropped.
* Re-initiating the currently held value is a no-op; terminating a value
  that is not held is a no-op.
* A termination with no earlier happening at all for that fluent yields a
  left-open interval [-inf, t); such intervals never satisfy holds_at
  queries (those require an initiation).
* ``initially`` facts act as initiations at tick 0, applied before any event.
* Rules fire per event, in rule order, terminations before initiations;
  each rule sees the effects of the rules and events applied before it.

The evaluator answers queries by scanning flat lists (pattern match first,
interval test second, mirroring clause-head unification), and maintains its
cached interval lists by recomputing each affected fluent from that
fluent's happening log on every update — so update cost grows with
narrative length.  It is the correctness oracle and the baseline engine.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .terms import NEG_INF, POS_INF, Term, WILDCARD, match

INIT = 0
TERM = 1


class OutOfOrderEvent(Exception):
    pass


class MalformedWindow(Exception):
    pass


@dataclass(frozen=True, slots=True)
class FluentAssignment:
    fluent: Term
    value: Term


@dataclass(frozen=True, slots=True)
class EventOccurrence:
    event: Term
    time: int

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("event time must be a non-negative tick")


@dataclass(frozen=True, slots=True)
class Mvi:
    """A maximal validity interval [t_start, t_end); sentinel ends mark
    open intervals (NEG_INF start, POS_INF end)."""

    fluent: Term
    value: Term
    t_start: int
    t_end: int

    @property
    def assignment(self) -> FluentAssignment:
        return FluentAssignment(self.fluent, self.value)


@dataclass(frozen=True)
class DomainTheory:
    """initially facts plus initiation/termination rules.

    A rule is a callable (EventOccurrence, ctx) -> iterable of hits, where a
    hit is a FluentAssignment or an (assignment, evidence) pair and ctx
    exposes holds_at / mholds_for / cached_between / happens_in_window.
    Rules must be pure given the context snapshot.
    """

    initially: tuple = ()
    initiation_rules: tuple = ()
    termination_rules: tuple = ()


@dataclass
class EffectsReport:
    """Net interval changes of one update.

    opened: intervals added (right-open ones, plus left-open insertions);
    closed: pre-existing open intervals that got an end, reported in their
    closed form — [s, s) marks an interval retracted by a same-tick break.
    evidence maps opened assignments to their rule-supplied witnesses.
    """

    opened: list = field(default_factory=list)
    closed: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)


def _normalize_hit(hit):
    if isinstance(hit, FluentAssignment):
        return hit, ()
    fa, ev = hit
    return fa, tuple(ev)


def replay_fluent(happenings) -> list:
    """Fold one fluent's (kind, tick, value) log into (value, s, e) triples."""
    out = []
    cur_v = None
    cur_s = 0
    touched = False
    for kind, t, v in happenings:
        if kind == INIT:
            if cur_v is not None:
                if v is cur_v:
                    continue
                if t > cur_s:
                    out.append((cur_v, cur_s, t))
            cur_v = v
            cur_s = t
            touched = True
        else:
            if cur_v is v:
                if t > cur_s:
                    out.append((cur_v, cur_s, t))
                cur_v = None
            elif cur_v is None and not touched:
                out.append((v, NEG_INF, t))
            touched = True
    if cur_v is not None:
        out.append((cur_v, cur_s, POS_INF))
    return out


class NaiveEvaluator:
    """Reference evaluator over a growing narrative; one per narrative."""

    def __init__(self, theory: DomainTheory):
        self.theory = theory
        self.events: list[EventOccurrence] = []
        self.last_time = 0
        self._happenings: dict[Term, list] = {}
        self._mvis: dict[Term, list] = {}
        self.scan_count = 0  # items examined by queries
        self.ctx_queries = 0
        for fa in theory.initially:
            self._happenings.setdefault(fa.fluent, []).append((INIT, 0, fa.value))
        for f, lst in self._happenings.items():
            self._mvis[f] = replay_fluent(lst)

    # -- update ----------------------------------------------------------

    def update(self, e: EventOccurrence) -> EffectsReport:
        if e.time < self.last_time:
            raise OutOfOrderEvent(f"{e.event} at {e.time} < {self.last_time}")
        self.events.append(e)
        self.last_time = e.time
        before: dict[Term, tuple] = {}
        evidence: dict[FluentAssignment, tuple] = {}
        for rule in self.theory.termination_rules:
            for hit in rule(e, self):
                fa, _ = _normalize_hit(hit)
                self._apply(TERM, e.time, fa, before)
        for rule in self.theory.initiation_rules:
            for hit in rule(e, self):
                fa, ev = _normalize_hit(hit)
                if ev:
                    evidence[fa] = ev
                self._apply(INIT, e.time, fa, before)
        return self._diff(before, evidence)

    def _apply(self, kind, t, fa, before):
        f = fa.fluent
        if f not in before:
            # replay replaces the list wholesale, so keeping the reference
            # is a free snapshot
            before[f] = self._mvis.get(f)
        lst = self._happenings.setdefault(f, [])
        lst.append((kind, t, fa.value))
        # CEC-style cache maintenance: rebuild the affected fluent's
        # intervals from its whole happening log
        self._mvis[f] = replay_fluent(lst)

    def _diff(self, before, evidence) -> EffectsReport:
        report = EffectsReport()
        for f, old in before.items():
            new = self._mvis.get(f, [])
            if old is None:
                old = []
            # replay emits intervals chronologically, so changes live in a
            # short common-suffix region
            k = 0
            lim = min(len(old), len(new))
            while k < lim and old[k] == new[k]:
                k += 1
            tail_old, tail_new = old[k:], new[k:]
            new_set = set(tail_new)
            added = [iv for iv in tail_new if iv not in tail_old]
            added_by_start = {(v, s): e for v, s, e in added}
            for v, s, e in tail_old:
                if (v, s, e) in new_set:
                    continue
                closed_end = added_by_start.pop((v, s), s)
                report.closed.append(Mvi(f, v, s, closed_end))
            for v, s, e in added:
                if (v, s) in added_by_start:
                    mvi = Mvi(f, v, s, e)
                    report.opened.append(mvi)
                    ev = evidence.get(FluentAssignment(f, v))
                    if ev:
                        report.evidence[mvi.assignment] = ev
        return report

    # -- queries ----------------------------------------------------------

    def holds_at(self, q: FluentAssignment, t: int) -> list[FluentAssignment]:
        """Ground assignments matching q that hold at t.  Left-open
        intervals never qualify (they record terminations, not initiations)."""
        qf, qv = q.fluent, q.value
        out = []
        scanned = 0
        for f, lst in self._mvis.items():
            scanned += len(lst)
            for v, s, e in lst:
                if match(qf, f) and match(qv, v) and s >= 0 and s <= t < e:
                    out.append(FluentAssignment(f, v))
        self.scan_count += scanned
        return out

    def mholds_for(self, q: FluentAssignment) -> list[Mvi]:
        qf, qv = q.fluent, q.value
        out = []
        scanned = 0
        for f, lst in self._mvis.items():
            scanned += len(lst)
            for v, s, e in lst:
                if match(qf, f) and match(qv, v):
                    out.append(Mvi(f, v, s, e))
        self.scan_count += scanned
        return out

    def cached_between(self, w_start: int, w_end: int, q: FluentAssignment) -> list[Mvi]:
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end})")
        qf, qv = q.fluent, q.value
        out = []
        scanned = 0
        for f, lst in self._mvis.items():
            scanned += len(lst)
            for v, s, e in lst:
                if match(qf, f) and match(qv, v) and max(s, w_start) < min(e, w_end):
                    out.append(Mvi(f, v, s, e))
        self.scan_count += scanned
        return out

    def happens_in_window(self, pattern: Term, w_start: int, w_end: int) -> list[EventOccurrence]:
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end}]")
        out = []
        self.scan_count += len(self.events)
        for e in self.events:
            if match(pattern, e.event) and w_start <= e.time <= w_end:
                out.append(e)
        return out

    # -- introspection ------------------------------------------------------

    def mvi_snapshot(self) -> set[Mvi]:
        return {
            Mvi(f, v, s, e)
            for f, lst in self._mvis.items()
            for v, s, e in lst
        }

    def live_mvi_count(self) -> int:
        return sum(len(lst) for lst in self._mvis.values())

    def structure_bytes(self) -> int:
        """Explicit accounting, symmetric with the kd engine: container
        shells plus their owned primitive values; interned terms excluded
        on both sides."""
        total = sys.getsizeof(self.events)
        for e in self.events:
            total += sys.getsizeof(e) + sys.getsizeof(e.time)
        total += sys.getsizeof(self._happenings) + sys.getsizeof(self._mvis)
        for lst in self._happenings.values():
            total += sys.getsizeof(lst)
            for h in lst:
                total += (sys.getsizeof(h) + sys.getsizeof(h[0])
                          + sys.getsizeof(h[1]))
        for lst in self._mvis.values():
            total += sys.getsizeof(lst)
            for iv in lst:
                total += (sys.getsizeof(iv) + sys.getsizeof(iv[1])
                          + sys.getsizeof(iv[2]))
        return total


# -- pure from-scratch evaluation (recomputation oracle) --------------------


class _ScanState:
    """Forward pass over a narrative; guards answered by direct scans over
    the happenings recorded so far (negation as failure by exhaustion)."""

    def __init__(self, theory: DomainTheory):
        self.theory = theory
        self.events: list[EventOccurrence] = []
        self.happenings: list = []  # (kind, tick, fluent, value), app order
        for fa in theory.initially:
            self.happenings.append((INIT, 0, fa.fluent, fa.value))

    def run(self, narrative) -> "_ScanState":
        last = 0
        for e in narrative:
            if e.time < last:
                raise OutOfOrderEvent(str(e))
            last = e.time
            self.events.append(e)
            for rule in self.theory.termination_rules:
                for hit in rule(e, self):
                    fa, _ = _normalize_hit(hit)
                    self.happenings.append((TERM, e.time, fa.fluent, fa.value))
            for rule in self.theory.initiation_rules:
                for hit in rule(e, self):
                    fa, _ = _normalize_hit(hit)
                    self.happenings.append((INIT, e.time, fa.fluent, fa.value))
        return self

    def holds_at(self, q: FluentAssignment, t: int) -> list[FluentAssignment]:
        # EC-style: find an initiation at or before t that no later
        # happening breaks up to t; same-tick order breaks ties.
        qf, qv = q.fluent, q.value
        H = self.happenings
        out = []
        for i, (kind, tick, f, v) in enumerate(H):
            if tick > t:
                break
            if kind != INIT or not (match(qf, f) and match(qv, v)):
                continue
            broken = False
            for j in range(i + 1, len(H)):
                k2, t2, f2, v2 = H[j]
                if t2 > t:
                    break
                if f2 is not f:
                    continue
                if (k2 == TERM and v2 is v) or (k2 == INIT and v2 is not v):
                    broken = True
                    break
            fa = FluentAssignment(f, v)
            if not broken and fa not in out:
                out.append(fa)
        return out

    def _intervals(self):
        per_fluent: dict[Term, list] = {}
        for kind, tick, f, v in self.happenings:
            per_fluent.setdefault(f, []).append((kind, tick, v))
        return {f: replay_fluent(lst) for f, lst in per_fluent.items()}

    def mholds_for(self, q: FluentAssignment) -> list[Mvi]:
        qf, qv = q.fluent, q.value
        return [
            Mvi(f, v, s, e)
            for f, lst in self._intervals().items()
            for v, s, e in lst
            if match(qf, f) and match(qv, v)
        ]

    def cached_between(self, w_start, w_end, q) -> list[Mvi]:
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end})")
        return [
            m for m in self.mholds_for(q)
            if max(m.t_start, w_start) < min(m.t_end, w_end)
        ]

    def happens_in_window(self, pattern, w_start, w_end):
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end}]")
        return [
            e for e in self.events
            if match(pattern, e.event) and w_start <= e.time <= w_end
        ]


def naive_holds_at(theory, narrative, q: FluentAssignment, t: int) -> set[FluentAssignment]:
    """From-scratch holds_at over a finite narrative (no cache involved)."""
    return set(_ScanState(theory).run(narrative).holds_at(q, t))


def naive_holds_for(theory, narrative, q: FluentAssignment = None) -> set[Mvi]:
    """From-scratch interval derivation over a finite narrative."""
    q = q if q is not None else FluentAssignment(WILDCARD, WILDCARD)
    return set(_ScanState(theory).run(narrative).mholds_for(q))
