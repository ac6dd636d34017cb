"""Cached, kd-indexed event calculus engine.

Two 4-d trees: events keyed (functor hash, arity, first-arg hash, time) and
intervals keyed (fluent hash, value hash, start, end).  An update indexes
the event, then caches its consequences: terminations close open intervals,
initiations close conflicting ones and open new ones.  Queries are
rectangular range searches plus an exact-match filter that absorbs hash
collisions.  Left-open intervals keep their true NEG_INF start in the
payload but are keyed at NEG_INF + 1, so the reserved sentinel never
appears in a stored coordinate; holds_at boxes start at 0 and therefore
never report them, matching the reference evaluator.
"""

from __future__ import annotations

import sys

from .kdtree import KdTree, Registry
from .kernel import (
    EffectsReport,
    EventOccurrence,
    FluentAssignment,
    MalformedWindow,
    Mvi,
    OutOfOrderEvent,
    _normalize_hit,
)
from .terms import NEG_INF, POS_INF, Term, WILDCARD, arg_hash, atom, match

LEFT_OPEN_KEY = NEG_INF + 1
_FULL = (NEG_INF, POS_INF)
_NO_ARG = atom("$noarg")


class EngineInvariantViolation(Exception):
    pass


class Engine:
    """Single-writer engine; independent engines share nothing."""

    def __init__(self, theory, registry: Registry | None = None):
        self.theory = theory
        self.registry = registry if registry is not None else Registry()
        self.event_tree: KdTree = self.registry.create("happens_at")
        self.mvi_tree: KdTree = self.registry.create("mholds_for")
        self.last_time = 0
        self._touched: set[Term] = set()
        self.rule_firings = 0
        self.ctx_queries = 0
        log: list = []
        for fa in theory.initially:
            self._apply_init(fa, 0, log)

    # -- keys --------------------------------------------------------------

    @staticmethod
    def _event_key(ev: Term, t: int):
        c2 = arg_hash(ev.args[0]) if ev.args else _NO_ARG.h64
        return (atom(ev.functor).h64, len(ev.args), c2, t)

    @staticmethod
    def _mvi_key(m: Mvi):
        s = LEFT_OPEN_KEY if m.t_start == NEG_INF else m.t_start
        return (m.fluent.h64, m.value.h64, s, m.t_end)

    # -- update ------------------------------------------------------------

    def update(self, e: EventOccurrence) -> EffectsReport:
        if e.time < self.last_time:
            raise OutOfOrderEvent(f"{e.event} at {e.time} < {self.last_time}")
        self.event_tree.insert(self._event_key(e.event, e.time), e)
        self.last_time = e.time
        log: list = []
        evidence: dict[FluentAssignment, tuple] = {}
        for rule in self.theory.termination_rules:
            for hit in rule(e, self):
                fa, _ = _normalize_hit(hit)
                self.rule_firings += 1
                self._apply_term(fa, e.time, log)
        for rule in self.theory.initiation_rules:
            for hit in rule(e, self):
                fa, ev = _normalize_hit(hit)
                self.rule_firings += 1
                if ev:
                    evidence[fa] = tuple(ev)
                self._apply_init(fa, e.time, log)
        return self._net_report(log, evidence)

    def _apply_term(self, fa: FluentAssignment, t: int, log: list) -> None:
        m = self._find_open(fa.fluent, fa.value)
        if m is not None:
            self._close(m, t, log)
        elif fa.fluent not in self._touched:
            # termination with no history for the fluent: it held since forever
            mvi = Mvi(fa.fluent, fa.value, NEG_INF, t)
            self.mvi_tree.insert(self._mvi_key(mvi), mvi)
            log.append((True, mvi, None))
        self._touched.add(fa.fluent)

    def _apply_init(self, fa: FluentAssignment, t: int, log: list) -> None:
        cur = self._find_open_any(fa.fluent)
        if cur is not None:
            if cur.value is fa.value:
                self._touched.add(fa.fluent)
                return  # re-initiation of the held value: no-op
            self._close(cur, t, log)
        mvi = Mvi(fa.fluent, fa.value, t, POS_INF)
        self.mvi_tree.insert(self._mvi_key(mvi), mvi)
        log.append((True, mvi, None))
        self._touched.add(fa.fluent)

    def _close(self, m: Mvi, t_end: int, log: list) -> None:
        self.mvi_tree.delete(self._mvi_key(m), lambda p: p is m)
        if t_end > m.t_start:
            closed = Mvi(m.fluent, m.value, m.t_start, t_end)
            self.mvi_tree.insert(self._mvi_key(closed), closed)
        else:
            closed = None  # zero-length: retract entirely
        log.append((False, m, closed))

    def _net_report(self, log, evidence) -> EffectsReport:
        report = EffectsReport()
        opened: dict = {}
        closed: dict = {}
        for is_open, m, closed_form in log:
            k = (m.fluent, m.value, m.t_start)
            if is_open:
                if closed.get(k, ()) is None:
                    # a pre-update interval retracted then reopened as-is:
                    # no net change
                    del closed[k]
                else:
                    opened[k] = m
            elif k in opened:
                del opened[k]  # opened and retracted within this update
            else:
                closed[k] = closed_form
        report.opened = list(opened.values())
        report.closed = [
            c if c is not None else Mvi(k[0], k[1], k[2], k[2])
            for k, c in closed.items()
        ]
        for m in report.opened:
            ev = evidence.get(m.assignment)
            if ev:
                report.evidence[m.assignment] = ev
        return report

    # -- interval primitives (public per the cache vocabulary) ---------------

    def close_interval(self, fluent: Term, value: Term, t_end: int) -> None:
        """Close the open interval for (fluent, value) at t_end; deletes it
        outright when t_end equals its start; no-op when none is open."""
        m = self._find_open(fluent, value)
        if m is not None:
            self._close(m, t_end, [])

    def open_interval(self, fluent: Term, value: Term, t_start: int) -> None:
        """Open (fluent, value) at t_start; idempotent for the held value."""
        cur = self._find_open_any(fluent)
        if cur is not None:
            if cur.value is value:
                return
            raise EngineInvariantViolation(
                f"{fluent} already open with value {cur.value}")
        mvi = Mvi(fluent, value, t_start, POS_INF)
        self.mvi_tree.insert(self._mvi_key(mvi), mvi)
        self._touched.add(fluent)

    def _find_open(self, fluent: Term, value: Term):
        box = ((fluent.h64, fluent.h64), (value.h64, value.h64),
               _FULL, (POS_INF, POS_INF))
        for _, m in self.mvi_tree.range_query(box):
            if m.fluent is fluent and m.value is value:
                return m
        return None

    def _find_open_any(self, fluent: Term):
        box = ((fluent.h64, fluent.h64), _FULL, _FULL, (POS_INF, POS_INF))
        for _, m in self.mvi_tree.range_query(box):
            if m.fluent is fluent:
                return m
        return None

    # -- queries -------------------------------------------------------------

    def holds_at(self, q: FluentAssignment, t: int) -> list[FluentAssignment]:
        """One range query: started by t, still open after t."""
        self.ctx_queries += 1
        box = (self._sym(q.fluent), self._sym(q.value), (0, t), (t + 1, POS_INF))
        out = []
        for _, m in self.mvi_tree.range_query(box):
            if match(q.fluent, m.fluent) and match(q.value, m.value):
                out.append(FluentAssignment(m.fluent, m.value))
        return out

    def mholds_for(self, q: FluentAssignment) -> list[Mvi]:
        self.ctx_queries += 1
        box = (self._sym(q.fluent), self._sym(q.value), _FULL, _FULL)
        return [m for _, m in self.mvi_tree.range_query(box)
                if match(q.fluent, m.fluent) and match(q.value, m.value)]

    def cached_between(self, w_start: int, w_end: int, q: FluentAssignment) -> list[Mvi]:
        """Intervals intersecting [w_start, w_end): the union of two range
        queries — straddling the window start, or starting inside — with
        duplicate elimination."""
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end})")
        self.ctx_queries += 1
        if w_start == w_end or w_start >= POS_INF:
            return []
        f_r, v_r = self._sym(q.fluent), self._sym(q.value)
        seen: dict[int, Mvi] = {}
        straddle = (f_r, v_r, (NEG_INF, w_start), (w_start + 1, POS_INF))
        inside = (f_r, v_r, (w_start, w_end - 1), _FULL)
        for box in (straddle, inside):
            for _, m in self.mvi_tree.range_query(box):
                if match(q.fluent, m.fluent) and match(q.value, m.value):
                    seen.setdefault(id(m), m)
        return list(seen.values())

    def happens_in_window(self, pattern: Term, w_start: int, w_end: int) -> list[EventOccurrence]:
        if w_start > w_end:
            raise MalformedWindow(f"[{w_start}, {w_end}]")
        self.ctx_queries += 1
        if pattern is WILDCARD:
            box = (_FULL, _FULL, _FULL, (w_start, w_end))
        else:
            if pattern.args:
                a0 = pattern.args[0]
                ground0 = not isinstance(a0, Term) or a0.ground
                c2 = (arg_hash(a0), arg_hash(a0)) if ground0 else _FULL
            else:
                c2 = (_NO_ARG.h64, _NO_ARG.h64)
            h = atom(pattern.functor).h64
            box = ((h, h), (len(pattern.args), len(pattern.args)), c2,
                   (w_start, w_end))
        return [e for _, e in self.event_tree.range_query(box)
                if match(pattern, e.event)]

    @staticmethod
    def _sym(side: Term):
        if side.ground:
            return (side.h64, side.h64)
        return _FULL

    # -- introspection ---------------------------------------------------------

    def mvi_snapshot(self) -> set[Mvi]:
        return {m for _, m in self.mvi_tree.items()}

    def live_mvi_count(self) -> int:
        return self.mvi_tree.live_count

    def structure_bytes(self) -> int:
        def ev_bytes(e):
            return sys.getsizeof(e) + sys.getsizeof(e.time)

        def mvi_bytes(m):
            return (sys.getsizeof(m) + sys.getsizeof(m.t_start)
                    + sys.getsizeof(m.t_end))

        return (self.event_tree.structure_bytes(ev_bytes)
                + self.mvi_tree.structure_bytes(mvi_bytes)
                + sys.getsizeof(self._touched))
