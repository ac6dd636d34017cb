"""fluentkd: event-calculus stream monitoring over 4-d kd-tree indexes."""

from .terms import (
    NEG_INF,
    POS_INF,
    Term,
    WILDCARD,
    atom,
    hash64,
    list_term,
    match,
    parse_term,
    term,
)
from .kdtree import KdTree, Registry
from .kernel import (
    DomainTheory,
    EffectsReport,
    EventOccurrence,
    FluentAssignment,
    Mvi,
    NaiveEvaluator,
    OutOfOrderEvent,
    naive_holds_at,
    naive_holds_for,
)
from .engine import Engine, EngineInvariantViolation
from .patterns import (
    Alert,
    ComplexPattern,
    ComplexSequentialPattern,
    RuleSpec,
    SequentialPattern,
    SimplePattern,
    ThresholdAtom,
    apply_event,
    canonical_text,
    compile_rule,
    constrained_more_or_equals_to,
    extract_alerts,
    monitoring_theory,
    more_or_equals_to,
    rule_spec_from_dict,
    rule_spec_to_dict,
)
from .ingest import (
    NarrativeLog,
    PatientStream,
    SignalRecord,
    bootstrap,
    parse_csv,
    serialize_csv,
    stream_events,
    synthetic_seed,
)

__all__ = [
    "NEG_INF", "POS_INF", "Term", "WILDCARD", "atom", "hash64", "list_term",
    "match", "parse_term", "term",
    "KdTree", "Registry",
    "DomainTheory", "EffectsReport", "EventOccurrence", "FluentAssignment",
    "Mvi", "NaiveEvaluator", "OutOfOrderEvent", "naive_holds_at",
    "naive_holds_for",
    "Engine", "EngineInvariantViolation",
    "Alert", "ComplexPattern", "ComplexSequentialPattern", "RuleSpec",
    "SequentialPattern", "SimplePattern", "ThresholdAtom", "apply_event",
    "canonical_text", "compile_rule", "constrained_more_or_equals_to",
    "extract_alerts", "monitoring_theory", "more_or_equals_to",
    "rule_spec_from_dict", "rule_spec_to_dict",
    "NarrativeLog", "PatientStream", "SignalRecord", "bootstrap", "parse_csv",
    "serialize_csv", "stream_events", "synthetic_seed",
]
