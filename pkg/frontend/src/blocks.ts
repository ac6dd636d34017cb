/**
 * Block model behind the editor canvas. A rule is built from at most two
 * "leg" blocks (threshold lists with a frequency); a sequencing toggle
 * turns two legs into a sequential pattern. The model is deliberately
 * incapable of expressing deeper nesting, and emits exactly the RuleSpec
 * JSON the service accepts.
 */

import {
  Comparator,
  LegPattern,
  Pattern,
  RuleSpec,
  Signal,
  ThresholdAtom,
  validateRuleSpec,
} from "./schema.js";

export interface AtomBlock {
  signal: Signal;
  comparator: Comparator;
  threshold: number;
}

export interface LegBlock {
  atoms: AtomBlock[];
  frequency: number;
}

export interface RuleCanvas {
  ruleId: string;
  recipients: string[];
  windowSeconds: number;
  suppressSeconds?: number;
  first: LegBlock;
  /** present => sequential semantics: first leg strictly before this one */
  then?: LegBlock;
}

export function emptyCanvas(): RuleCanvas {
  return {
    ruleId: "",
    recipients: ["doctor"],
    windowSeconds: 86400,
    first: { atoms: [], frequency: 1 },
  };
}

export function canvasIsEmpty(canvas: RuleCanvas): boolean {
  return canvas.first.atoms.length === 0 && !canvas.then;
}

function legToPattern(leg: LegBlock, window: number): LegPattern {
  const atoms: ThresholdAtom[] = leg.atoms.map((a) => ({
    signal: a.signal,
    comparator: a.comparator,
    threshold: a.threshold,
  }));
  if (atoms.length === 1) {
    return { kind: "simple", atom: atoms[0], frequency: leg.frequency, window };
  }
  return { kind: "complex", atoms, frequency: leg.frequency, window };
}

/** The canvas's pattern; legs inherit the rule window. */
export function canvasPattern(canvas: RuleCanvas): Pattern {
  const w = canvas.windowSeconds;
  const first = legToPattern(canvas.first, w);
  if (!canvas.then) return first;
  const then = legToPattern(canvas.then, w);
  if (first.kind === "simple" && then.kind === "simple") {
    return { kind: "sequential", first, then, window: w };
  }
  return { kind: "complex_sequential", first, then, window: w };
}

export function buildRuleSpec(canvas: RuleCanvas): RuleSpec {
  const spec: RuleSpec = {
    rule_id: canvas.ruleId,
    recipients: [...canvas.recipients],
    pattern: canvasPattern(canvas),
  };
  if (canvas.suppressSeconds !== undefined) {
    spec.suppress_window = canvas.suppressSeconds;
  }
  return spec;
}

/** Validation messages to surface inline; empty means submittable. */
export function canvasProblems(canvas: RuleCanvas): string[] {
  if (canvasIsEmpty(canvas)) return ["add at least one threshold"];
  if (canvas.first.atoms.length === 0)
    return ["the first leg needs at least one threshold"];
  if (canvas.then && canvas.then.atoms.length === 0)
    return ["the second leg needs at least one threshold"];
  return validateRuleSpec(buildRuleSpec(canvas));
}
