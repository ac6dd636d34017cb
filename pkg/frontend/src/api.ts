/** Thin client for the monitoring service; the only backend the UI talks to. */

import { Alert, RuleSpec, SignalRecord } from "./schema.js";

export interface DeployedRule {
  rule_id: string;
  spec: RuleSpec;
  canonical_text: string;
}

export interface ReplayCounts {
  patient_id: string;
  events: number;
  mvis: number;
  alerts: number;
}

export interface FluentValue {
  fluent: string;
  value: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class MonitorApi {
  constructor(private baseUrl: string, private fetcher: typeof fetch = fetch) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async previewRule(spec: RuleSpec): Promise<string> {
    const res = await this.fetcher(this.url("/rules?dry_run=true"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
    const body = await expectJson<{ canonical_text: string }>(res);
    return body.canonical_text;
  }

  async deployRule(spec: RuleSpec): Promise<string> {
    const res = await this.fetcher(this.url("/rules"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
    const body = await expectJson<{ canonical_text: string }>(res);
    return body.canonical_text;
  }

  async rules(): Promise<DeployedRule[]> {
    const res = await this.fetcher(this.url("/rules"));
    return (await expectJson<{ rules: DeployedRule[] }>(res)).rules;
  }

  async patients(): Promise<string[]> {
    const res = await this.fetcher(this.url("/patients"));
    return (await expectJson<{ patients: string[] }>(res)).patients;
  }

  async pushEvents(patientId: string, records: SignalRecord[]): Promise<void> {
    const res = await this.fetcher(this.url(`/patients/${patientId}/events`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(records),
    });
    await expectJson(res);
  }

  async replay(patientId: string): Promise<ReplayCounts> {
    const res = await this.fetcher(this.url(`/patients/${patientId}/replay`), {
      method: "POST",
    });
    return expectJson<ReplayCounts>(res);
  }

  async alerts(patientId: string): Promise<Alert[]> {
    const res = await this.fetcher(this.url(`/patients/${patientId}/alerts`));
    return (await expectJson<{ alerts: Alert[] }>(res)).alerts;
  }

  async fluentsAt(patientId: string, at: number): Promise<FluentValue[]> {
    const res = await this.fetcher(
      this.url(`/patients/${patientId}/fluents?at=${at}`),
    );
    return (await expectJson<{ fluents: FluentValue[] }>(res)).fluents;
  }
}
