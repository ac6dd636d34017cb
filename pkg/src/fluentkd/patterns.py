"""Monitoring pattern language and its compilation into initiation rules.

Four pattern kinds over threshold atoms: simple (one threshold, a minimum
number of times inside a window), complex (several thresholds together),
sequential and complex-sequential (one leg followed strictly later by
another, inside one window).  Nesting is capped at two levels so compiled
rules stay readable.

A compiled rule initiates ``generic_alert([recipients..., rule_id]) =
up(normal, rule_id)`` at T when its pattern is satisfied over
[T - window, T] and no ``sent_alert`` event for the same rule occurred in
[T - suppress_window, T]; a second rule flips the alert value to ``sent``
when the feedback event arrives.  Every rule spec also renders to a
byte-stable canonical text (see docs/rule-format.md) used for golden files
and editor previews.

Counting semantics: a window tick counts when an observation event for one
of the atoms' signals happened at it and every atom's threshold holds at
it, so frequencies count observations, not interval lengths.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .kernel import EventOccurrence, FluentAssignment, MalformedWindow
from .terms import Term, WILDCARD, atom, list_term, term

COMPARATORS = ("<", ">", "<=", ">=")


class PatternError(ValueError):
    pass


class NestingTooDeep(PatternError):
    pass


class DuplicateRuleId(Exception):
    pass


@dataclass(frozen=True)
class ThresholdAtom:
    signal: str
    comparator: str
    threshold: float

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise PatternError(f"unknown comparator {self.comparator!r}")
        if not isinstance(self.threshold, (int, float)) or not math.isfinite(
            self.threshold
        ):
            raise PatternError(f"threshold must be finite, got {self.threshold!r}")

    def accepts(self, v) -> bool:
        if not isinstance(v, (int, float)):
            return False
        if self.comparator == "<":
            return v < self.threshold
        if self.comparator == ">":
            return v > self.threshold
        if self.comparator == "<=":
            return v <= self.threshold
        return v >= self.threshold

    def render(self) -> str:
        return f"{self.signal} {self.comparator} {float(self.threshold)!r}"


def _check_leg(frequency, window):
    if frequency < 1:
        raise PatternError("frequency must be >= 1")
    if window <= 0:
        raise PatternError("window must be positive")


@dataclass(frozen=True)
class SimplePattern:
    atom: ThresholdAtom
    frequency: int
    window: int

    def __post_init__(self):
        _check_leg(self.frequency, self.window)

    @property
    def atoms(self):
        return (self.atom,)


@dataclass(frozen=True)
class ComplexPattern:
    atoms: tuple
    frequency: int
    window: int

    def __post_init__(self):
        if not self.atoms:
            raise PatternError("complex pattern needs at least one atom")
        _check_leg(self.frequency, self.window)


@dataclass(frozen=True)
class SequentialPattern:
    first: SimplePattern
    then: SimplePattern
    window: int

    def __post_init__(self):
        if self.window <= 0:
            raise PatternError("window must be positive")
        for leg in (self.first, self.then):
            if not isinstance(leg, SimplePattern):
                raise NestingTooDeep(
                    "sequential legs must be simple patterns")


@dataclass(frozen=True)
class ComplexSequentialPattern:
    first: object
    then: object
    window: int

    def __post_init__(self):
        if self.window <= 0:
            raise PatternError("window must be positive")
        for leg in (self.first, self.then):
            if not isinstance(leg, (SimplePattern, ComplexPattern)):
                raise NestingTooDeep(
                    "complex-sequential legs must be simple or complex")


Pattern = (SimplePattern, ComplexPattern, SequentialPattern, ComplexSequentialPattern)


@dataclass(frozen=True)
class RuleSpec:
    rule_id: str
    recipients: tuple
    pattern: object
    suppress_window: int | None = None

    def __post_init__(self):
        if not self.rule_id:
            raise PatternError("rule_id must be non-empty")
        if not self.recipients:
            raise PatternError("at least one recipient required")
        if not isinstance(self.pattern, Pattern):
            raise PatternError(f"not a pattern: {self.pattern!r}")
        if self.suppress_window is not None and self.suppress_window <= 0:
            raise PatternError("suppress_window must be positive")

    @property
    def effective_suppress(self) -> int:
        return (self.suppress_window if self.suppress_window is not None
                else self.pattern.window)


@dataclass(frozen=True)
class Alert:
    rule_id: str
    recipients: tuple
    raised_at: int
    evidence: tuple  # ((tick, FluentAssignment), ...)


# -- observation vocabulary ---------------------------------------------------


def observation_fluent(signal: str) -> Term:
    return term("obs", signal)


def observation_event(signal: str, value: float) -> Term:
    return term("obs", signal, float(value))


def observation_rule(e: EventOccurrence, ctx):
    """obs(S, V) events set the fluent obs(S) to value(V)."""
    ev = e.event
    if ev.functor == "obs" and len(ev.args) == 2:
        return [FluentAssignment(term("obs", ev.args[0]), term("value", ev.args[1]))]
    return []


def alert_fluent(recipients, rule_id: str) -> Term:
    return term("generic_alert",
                list_term(*[atom(r) for r in recipients], atom(rule_id)))


# -- meta-predicates ----------------------------------------------------------


def _qualifying_ticks(ctx, atoms, w_start, w_end):
    """Map tick -> assignments for ticks in [w_start, w_end) where an
    observation event for one of the atoms' signals occurred and every
    atom's threshold holds."""
    if w_start > w_end:
        raise MalformedWindow(f"[{w_start}, {w_end})")
    if w_start == w_end:
        return {}
    signals = []
    for a in atoms:
        if a.signal not in signals:
            signals.append(a.signal)
    per_atom = []
    for a in atoms:
        ivs = []
        q = FluentAssignment(observation_fluent(a.signal), term("value", WILDCARD))
        for m in ctx.cached_between(w_start, w_end, q):
            v = m.value.args[0]
            if a.accepts(v):
                ivs.append((m.t_start, m.t_end, m))
        ivs.sort(key=lambda iv: iv[0])
        per_atom.append((ivs, [iv[0] for iv in ivs]))
    ticks = set()
    for s in signals:
        pat = term("obs", s, WILDCARD)
        for e in ctx.happens_in_window(pat, w_start, w_end - 1):
            ticks.add(e.time)
    out = {}
    for t in sorted(ticks):
        assignments = []
        ok = True
        for ivs, starts in per_atom:
            i = bisect_right(starts, t) - 1
            if i < 0 or not (ivs[i][0] <= t < ivs[i][1]):
                ok = False
                break
            m = ivs[i][2]
            fa = FluentAssignment(m.fluent, m.value)
            if fa not in assignments:
                assignments.append(fa)
        if ok:
            out[t] = tuple(assignments)
    return out


def more_or_equals_to(ctx, frequency: int, atoms, w_start: int, w_end: int):
    """Count qualifying ticks in [w_start, w_end); satisfied when the count
    reaches the frequency.  Returns (satisfied, witness ticks)."""
    ticks = _qualifying_ticks(ctx, atoms, w_start, w_end)
    return len(ticks) >= frequency, sorted(ticks)


def constrained_more_or_equals_to(ctx, frequency: int, atoms1, atoms2,
                                  window1, window2):
    """Pairs (t1, t2) with t1 qualifying for atoms1 in window1, t2 for
    atoms2 in window2, strictly in sequence (t1 < t2).  Satisfied when at
    least `frequency` pairs exist.  Returns (satisfied, pairs)."""
    w1s, w1e = window1
    w2s, w2e = window2
    if w2e < w1s:
        raise MalformedWindow("second window ends before the first starts")
    t1s = sorted(_qualifying_ticks(ctx, atoms1, w1s, w1e))
    t2s = sorted(_qualifying_ticks(ctx, atoms2, w2s, w2e))
    pairs = [(a, b) for a in t1s for b in t2s if a < b]
    return len(pairs) >= frequency, pairs


def _leg(p):
    return p.atoms, p.frequency


def evaluate_pattern(pattern, ctx, t: int):
    """Satisfaction of a pattern over [t - window, t].

    Returns (satisfied, witnesses) where witnesses are (tick, assignment)
    pairs backing the decision.
    """
    ws, we = t - pattern.window, t + 1
    if isinstance(pattern, (SimplePattern, ComplexPattern)):
        ticks = _qualifying_ticks(ctx, pattern.atoms, ws, we)
        ok = len(ticks) >= pattern.frequency
        witnesses = tuple(
            (tk, fa) for tk in sorted(ticks) for fa in ticks[tk])
        return ok, witnesses
    atoms1, freq1 = _leg(pattern.first)
    atoms2, freq2 = _leg(pattern.then)
    first_ticks = _qualifying_ticks(ctx, atoms1, ws, we)
    if len(first_ticks) < freq1:
        return False, ()
    then_ticks = _qualifying_ticks(ctx, atoms2, ws, we)
    pairs = [(a, b) for a in sorted(first_ticks) for b in sorted(then_ticks)
             if a < b]
    if len(pairs) < freq2:
        return False, ()
    witnesses = []
    for a, b in pairs:
        for fa in first_ticks[a]:
            if (a, fa) not in witnesses:
                witnesses.append((a, fa))
        for fa in then_ticks[b]:
            if (b, fa) not in witnesses:
                witnesses.append((b, fa))
    return True, tuple(witnesses)


# -- compilation ---------------------------------------------------------------


@dataclass(frozen=True)
class CompiledRule:
    spec: RuleSpec
    fluent: Term
    canonical_text: str
    initiation_rules: tuple


def compile_rule(spec: RuleSpec, existing_ids=()) -> CompiledRule:
    if spec.rule_id in existing_ids:
        raise DuplicateRuleId(spec.rule_id)
    fluent = alert_fluent(spec.recipients, spec.rule_id)
    up_value = term("up", "normal", spec.rule_id)
    sent_value = atom("sent")
    sent_event = term("sent_alert", fluent)
    suppress = spec.effective_suppress
    pattern = spec.pattern

    def raise_rule(e, ctx):
        t = e.time
        satisfied, witnesses = evaluate_pattern(pattern, ctx, t)
        if not satisfied:
            return []
        if ctx.happens_in_window(sent_event, t - suppress, t):
            return []
        return [(FluentAssignment(fluent, up_value), witnesses)]

    def sent_rule(e, ctx):
        if e.event is sent_event:
            return [FluentAssignment(fluent, sent_value)]
        return []

    return CompiledRule(
        spec=spec,
        fluent=fluent,
        canonical_text=canonical_text(spec),
        initiation_rules=(raise_rule, sent_rule),
    )


def monitoring_theory(compiled_rules=()):  # -> DomainTheory
    """Observation stream rule plus any compiled alert rules, in order."""
    from .kernel import DomainTheory

    rules = [observation_rule]
    for cr in compiled_rules:
        rules.extend(cr.initiation_rules)
    return DomainTheory(initiation_rules=tuple(rules))


# -- canonical text -------------------------------------------------------------


def _render_atoms(atoms) -> str:
    return "(" + ", ".join(a.render() for a in atoms) + ")"


def _render_window(window: int) -> str:
    return f"[T - {window}, T]"


def canonical_text(spec: RuleSpec) -> str:
    """Byte-stable rendering of the compiled rule (grammar in
    docs/rule-format.md); atom order follows the spec."""
    fluent = alert_fluent(spec.recipients, spec.rule_id)
    head = f"{fluent.text} = {term('up', 'normal', spec.rule_id).text}"
    w = _render_window(spec.pattern.window)
    body = []
    p = spec.pattern
    if isinstance(p, (SimplePattern, ComplexPattern)):
        body.append(f"more_or_equals_to({p.frequency}, {_render_atoms(p.atoms)}, {w})")
    else:
        a1, f1 = _leg(p.first)
        a2, f2 = _leg(p.then)
        body.append(f"more_or_equals_to({f1}, {_render_atoms(a1)}, {w})")
        body.append(
            f"constrained_more_or_equals_to({f2}, {_render_atoms(a1)}, "
            f"{_render_atoms(a2)}, {w}, {w})")
    body.append(
        f"not happens_in(sent_alert({fluent.text}), "
        f"{_render_window(spec.effective_suppress)})")
    lines = [f"rule {spec.rule_id} -> [{', '.join(spec.recipients)}]"]
    lines.append(f"initiates_at({head}, T) :-")
    lines.extend(f"    {b}," for b in body[:-1])
    lines.append(f"    {body[-1]}.")
    lines.append(f"initiates_at({fluent.text} = sent, T) :-")
    lines.append(f"    happens_at(sent_alert({fluent.text}), T).")
    return "\n".join(lines) + "\n"


# -- alert extraction ------------------------------------------------------------


def extract_alerts(report) -> list[Alert]:
    """Alerts raised by one update: every newly opened generic_alert=up(...)
    interval, ordered by (raised_at, rule_id)."""
    alerts = []
    for m in report.opened:
        f, v = m.fluent, m.value
        if f.functor != "generic_alert" or v.functor != "up" or len(v.args) != 2:
            continue
        selector = f.args[0]
        rule_id = v.args[1].functor
        recipients = tuple(a.functor for a in selector.args[:-1])
        ev = report.evidence.get(m.assignment)
        if not ev:
            ev = ((m.t_start, m.assignment),)
        alerts.append(Alert(rule_id, recipients, m.t_start, tuple(ev)))
    alerts.sort(key=lambda a: (a.raised_at, a.rule_id))
    return alerts


def apply_event(engine, e: EventOccurrence) -> list[Alert]:
    """Drive one external event through an engine: update, extract alerts,
    and feed one sent_alert event back per alert (same tick), so the
    suppress guard sees the notification immediately."""
    alerts = []
    queue = [e]
    while queue:
        report = engine.update(queue.pop(0))
        for alert in extract_alerts(report):
            alerts.append(alert)
            fl = alert_fluent(alert.recipients, alert.rule_id)
            queue.append(
                EventOccurrence(term("sent_alert", fl), alert.raised_at))
    return alerts


# -- JSON (schema docs/schemas/rule_spec.schema.json) -----------------------------


def _atom_to_dict(a: ThresholdAtom) -> dict:
    return {"signal": a.signal, "comparator": a.comparator,
            "threshold": float(a.threshold)}


def _atom_from_dict(d: dict) -> ThresholdAtom:
    return ThresholdAtom(str(d["signal"]), str(d["comparator"]),
                         float(d["threshold"]))


def pattern_to_dict(p) -> dict:
    if isinstance(p, SimplePattern):
        return {"kind": "simple", "atom": _atom_to_dict(p.atom),
                "frequency": p.frequency, "window": p.window}
    if isinstance(p, ComplexPattern):
        return {"kind": "complex", "atoms": [_atom_to_dict(a) for a in p.atoms],
                "frequency": p.frequency, "window": p.window}
    kind = ("sequential" if isinstance(p, SequentialPattern)
            else "complex_sequential")
    return {"kind": kind, "first": pattern_to_dict(p.first),
            "then": pattern_to_dict(p.then), "window": p.window}


def pattern_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "simple":
        return SimplePattern(_atom_from_dict(d["atom"]), int(d["frequency"]),
                             int(d["window"]))
    if kind == "complex":
        return ComplexPattern(tuple(_atom_from_dict(a) for a in d["atoms"]),
                              int(d["frequency"]), int(d["window"]))
    if kind in ("sequential", "complex_sequential"):
        first = pattern_from_dict(d["first"])
        then = pattern_from_dict(d["then"])
        cls = (SequentialPattern if kind == "sequential"
               else ComplexSequentialPattern)
        return cls(first, then, int(d["window"]))
    raise PatternError(f"unknown pattern kind {kind!r}")


def rule_spec_to_dict(spec: RuleSpec) -> dict:
    d = {"rule_id": spec.rule_id, "recipients": list(spec.recipients),
         "pattern": pattern_to_dict(spec.pattern)}
    if spec.suppress_window is not None:
        d["suppress_window"] = spec.suppress_window
    return d


def rule_spec_from_dict(d: dict) -> RuleSpec:
    return RuleSpec(
        rule_id=str(d["rule_id"]),
        recipients=tuple(str(r) for r in d["recipients"]),
        pattern=pattern_from_dict(d["pattern"]),
        suppress_window=(int(d["suppress_window"])
                         if d.get("suppress_window") is not None else None),
    )
