/**
 * Shared wire types, mirroring docs/schemas/*.schema.json on the service
 * side. The editor validates before submission but the service stays the
 * source of truth for semantics.
 */

export const SIGNALS = ["cgm", "glucose", "hr", "weight", "meal", "activity"] as const;
export type Signal = (typeof SIGNALS)[number];

export const COMPARATORS = ["<", ">", "<=", ">="] as const;
export type Comparator = (typeof COMPARATORS)[number];

export interface ThresholdAtom {
  signal: Signal;
  comparator: Comparator;
  threshold: number;
}

export interface SimplePattern {
  kind: "simple";
  atom: ThresholdAtom;
  frequency: number;
  window: number;
}

export interface ComplexPattern {
  kind: "complex";
  atoms: ThresholdAtom[];
  frequency: number;
  window: number;
}

export type LegPattern = SimplePattern | ComplexPattern;

export interface SequentialPattern {
  kind: "sequential";
  first: SimplePattern;
  then: SimplePattern;
  window: number;
}

export interface ComplexSequentialPattern {
  kind: "complex_sequential";
  first: LegPattern;
  then: LegPattern;
  window: number;
}

export type Pattern =
  | SimplePattern
  | ComplexPattern
  | SequentialPattern
  | ComplexSequentialPattern;

export interface RuleSpec {
  rule_id: string;
  recipients: string[];
  pattern: Pattern;
  suppress_window?: number;
}

export interface AlertEvidence {
  tick: number;
  fluent: string;
  value: string;
}

export interface Alert {
  rule_id: string;
  recipients: string[];
  raised_at: number;
  raised_at_iso: string | null;
  evidence: AlertEvidence[];
}

export interface SignalRecord {
  timestamp: string;
  signal: Signal;
  value: number;
}

const RULE_ID = /^[a-z][A-Za-z0-9_]*$/;

export function validateAtom(a: ThresholdAtom): string[] {
  const errors: string[] = [];
  if (!SIGNALS.includes(a.signal)) errors.push(`unknown signal ${a.signal}`);
  if (!COMPARATORS.includes(a.comparator))
    errors.push(`unknown comparator ${a.comparator}`);
  if (!Number.isFinite(a.threshold)) errors.push("threshold must be finite");
  return errors;
}

function validateLeg(p: LegPattern, errors: string[]): void {
  if (p.frequency < 1 || !Number.isInteger(p.frequency))
    errors.push("frequency must be a positive integer");
  if (p.window < 1 || !Number.isInteger(p.window))
    errors.push("window must be a positive integer (seconds)");
  const atoms = p.kind === "simple" ? [p.atom] : p.atoms;
  if (atoms.length === 0) errors.push("at least one threshold required");
  for (const a of atoms) errors.push(...validateAtom(a));
}

/** Depth of a pattern tree; legs count one level, sequencing adds one. */
export function patternDepth(p: Pattern): number {
  if (p.kind === "simple" || p.kind === "complex") return 1;
  return 1 + Math.max(patternDepth(p.first as Pattern), patternDepth(p.then as Pattern));
}

export function validatePattern(p: Pattern): string[] {
  const errors: string[] = [];
  if (p.kind === "simple" || p.kind === "complex") {
    validateLeg(p, errors);
    return errors;
  }
  if (patternDepth(p) > 2) {
    errors.push("NestingTooDeep: only two levels of nesting are allowed");
    return errors;
  }
  if (p.kind === "sequential") {
    for (const leg of [p.first, p.then]) {
      if (leg.kind !== "simple")
        errors.push("sequential legs must be simple patterns");
      else validateLeg(leg, errors);
    }
  } else {
    for (const leg of [p.first, p.then]) {
      if (leg.kind !== "simple" && leg.kind !== "complex")
        errors.push("NestingTooDeep: legs must be simple or complex");
      else validateLeg(leg, errors);
    }
  }
  if (p.window < 1 || !Number.isInteger(p.window))
    errors.push("window must be a positive integer (seconds)");
  return errors;
}

export function validateRuleSpec(spec: RuleSpec): string[] {
  const errors: string[] = [];
  if (!RULE_ID.test(spec.rule_id))
    errors.push("rule id must start lowercase and use letters/digits/_");
  if (spec.recipients.length === 0) errors.push("at least one recipient");
  if (spec.recipients.some((r) => r.trim() === ""))
    errors.push("recipients must be non-empty");
  errors.push(...validatePattern(spec.pattern));
  if (spec.suppress_window !== undefined && spec.suppress_window < 1)
    errors.push("suppress window must be positive");
  return errors;
}
