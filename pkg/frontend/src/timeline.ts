/**
 * Replay session and alert timeline model. The UI never computes alert
 * semantics itself: every marker comes from the service's alert list, and
 * playback just moves a cursor through ticks the service already decided.
 */

import { Alert } from "./schema.js";
import { MonitorApi } from "./api.js";

export interface TimelineMarker {
  tick: number;
  ruleId: string;
  color: string;
  alert: Alert;
}

const PALETTE = [
  "#4C72B0", "#C44E52", "#55A868", "#8172B2", "#CCB974", "#64B5CD",
];

/** Stable rule -> color assignment in first-seen order. */
export function colorKey(alerts: Alert[]): Map<string, string> {
  const colors = new Map<string, string>();
  for (const a of alerts) {
    if (!colors.has(a.rule_id)) {
      colors.set(a.rule_id, PALETTE[colors.size % PALETTE.length]);
    }
  }
  return colors;
}

export class ReplaySession {
  readonly patientId: string;
  cursor = 0;
  playbackSpeed = 60; // ticks advanced per playback step
  alerts: Alert[] = [];
  markers: TimelineMarker[] = [];
  lastTick = 0;
  private colors = new Map<string, string>();

  constructor(patientId: string, private api: MonitorApi) {
    this.patientId = patientId;
  }

  /** Replay on the server, then load the authoritative alert list. */
  async load(): Promise<void> {
    await this.api.replay(this.patientId);
    this.alerts = await this.api.alerts(this.patientId);
    this.colors = colorKey(this.alerts);
    this.markers = this.alerts.map((a) => ({
      tick: a.raised_at,
      ruleId: a.rule_id,
      color: this.colors.get(a.rule_id) ?? PALETTE[0],
      alert: a,
    }));
    this.lastTick = Math.max(0, ...this.markers.map((m) => m.tick));
    this.cursor = 0;
  }

  /** Markers at or before the cursor: what playback has revealed so far. */
  visibleMarkers(): TimelineMarker[] {
    return this.markers.filter((m) => m.tick <= this.cursor);
  }

  countsByRule(): Map<string, number> {
    const counts = new Map<string, number>();
    for (const m of this.markers) {
      counts.set(m.ruleId, (counts.get(m.ruleId) ?? 0) + 1);
    }
    return counts;
  }

  /** Advance playback; the cursor never moves backwards during play. */
  step(): void {
    if (this.cursor < this.lastTick) {
      this.cursor = Math.min(this.cursor + this.playbackSpeed, this.lastTick);
    }
  }

  finished(): boolean {
    return this.cursor >= this.lastTick;
  }
}
