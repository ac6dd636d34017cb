"""HTTP boundary: rule deployment, event push, replay, alert retrieval.

One engine per patient, requests for a patient serialized by a lock.  The
narrative log stores only external observation records; alert feedback
events are re-derived on replay, so (log, deployed rules) fully determine
intervals and alerts.  Uploads are atomic: a batch whose earliest record
predates the engine clock is rejected without logging or applying anything.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from datetime import timedelta, timezone

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .engine import Engine
from .ingest import (
    IngestError,
    NarrativeLog,
    SignalRecord,
    parse_csv,
    parse_record,
    record_tick,
)
from .kernel import FluentAssignment, OutOfOrderEvent, EventOccurrence
from .patterns import (
    DuplicateRuleId,
    apply_event,
    compile_rule,
    monitoring_theory,
    observation_event,
    rule_spec_from_dict,
    rule_spec_to_dict,
)
from .terms import WILDCARD, TermSyntaxError, parse_term

_PATIENT_ID = re.compile(r"[A-Za-z0-9_-]{1,64}\Z")


@dataclass
class PatientRuntime:
    patient_id: str
    origin: object  # datetime of the first logged record
    engine: Engine
    alerts: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class MonitorService:
    def __init__(self, log_dir, default_window: int = 86400,
                 default_suppress: int | None = None):
        self.log = NarrativeLog(log_dir)
        self.default_window = default_window
        self.default_suppress = default_suppress
        self.rules: dict[str, object] = {}
        self.patients: dict[str, PatientRuntime] = {}
        self._lock = threading.Lock()
        for spec_dict in self.log.read_rules():
            spec = rule_spec_from_dict(spec_dict)
            self.rules[spec.rule_id] = compile_rule(spec)

    # -- rules -------------------------------------------------------------

    def fill_defaults(self, body: dict) -> dict:
        def fill(p):
            if isinstance(p, dict) and "kind" in p:
                p = dict(p)
                if "window" not in p:
                    p["window"] = self.default_window
                for leg in ("first", "then"):
                    if leg in p:
                        p[leg] = fill(p[leg])
            return p

        body = dict(body)
        if "pattern" in body:
            body["pattern"] = fill(body["pattern"])
        if "suppress_window" not in body and self.default_suppress is not None:
            body["suppress_window"] = self.default_suppress
        return body

    def deploy_rule(self, body: dict, dry_run: bool = False):
        spec = rule_spec_from_dict(self.fill_defaults(body))
        if dry_run:
            return compile_rule(spec)
        with self._lock:
            compiled = compile_rule(spec, existing_ids=self.rules)
            self.rules[spec.rule_id] = compiled
            self.log.append_rule(rule_spec_to_dict(spec))
            theory = monitoring_theory(self.rules.values())
            for runtime in self.patients.values():
                runtime.engine.theory = theory
        return compiled

    def _theory(self):
        return monitoring_theory(self.rules.values())

    # -- patients ------------------------------------------------------------

    def _runtime(self, patient_id: str, create: bool = False) -> PatientRuntime:
        with self._lock:
            rt = self.patients.get(patient_id)
        if rt is not None:
            return rt
        if self.log.has_patient(patient_id):
            return self.replay(patient_id)
        if not create:
            raise ServiceError(404, f"unknown patient {patient_id!r}")
        with self._lock:
            return self.patients.setdefault(
                patient_id,
                PatientRuntime(patient_id, None, Engine(self._theory())))

    def ingest(self, patient_id: str, records: list[SignalRecord]) -> dict:
        if not records:
            return {"accepted": 0, "rejected": 0, "alerts_raised": 0}
        records = sorted(records, key=lambda r: r.timestamp)
        rt = self._runtime(patient_id, create=True)
        with rt.lock:
            if rt.origin is None:
                rt.origin = records[0].timestamp
            first_tick = record_tick(records[0], rt.origin)
            if first_tick < rt.engine.last_time:
                raise ServiceError(
                    422,
                    f"record {records[0].iso} predates the engine clock "
                    f"(tick {first_tick} < {rt.engine.last_time}); "
                    "batch rejected")
            self.log.append(patient_id, records)
            raised = 0
            for r in records:
                e = EventOccurrence(
                    observation_event(r.signal, r.value),
                    record_tick(r, rt.origin))
                alerts = apply_event(rt.engine, e)
                rt.alerts.extend(alerts)
                raised += len(alerts)
        return {"accepted": len(records), "rejected": 0, "alerts_raised": raised}

    def replay(self, patient_id: str) -> PatientRuntime:
        records = self.log.read(patient_id)
        if not records:
            raise ServiceError(404, f"no narrative log for {patient_id!r}")
        engine = Engine(self._theory())
        rt = PatientRuntime(patient_id, records[0].timestamp, engine)
        for r in records:
            e = EventOccurrence(
                observation_event(r.signal, r.value),
                record_tick(r, rt.origin))
            rt.alerts.extend(apply_event(engine, e))
        with self._lock:
            self.patients[patient_id] = rt
        return rt

    def alert_json(self, rt: PatientRuntime, alert) -> dict:
        iso = None
        if rt.origin is not None:
            iso = (rt.origin + timedelta(seconds=alert.raised_at)).astimezone(
                timezone.utc).isoformat().replace("+00:00", "Z")
        return {
            "rule_id": alert.rule_id,
            "recipients": list(alert.recipients),
            "raised_at": alert.raised_at,
            "raised_at_iso": iso,
            "evidence": [
                {"tick": t, "fluent": fa.fluent.text, "value": fa.value.text}
                for t, fa in alert.evidence
            ],
        }


def _check_patient_id(patient_id: str) -> None:
    if not _PATIENT_ID.match(patient_id):
        raise ServiceError(400, f"invalid patient id {patient_id!r}")


def create_app(log_dir, default_window: int = 86400,
               default_suppress: int | None = None) -> FastAPI:
    app = FastAPI(title="fluentkd monitor")
    service = MonitorService(log_dir, default_window, default_suppress)
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"detail": exc.message})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/patients")
    def patients():
        known = set(service.log.patients()) | set(service.patients)
        return {"patients": sorted(known)}

    @app.get("/rules")
    def rules():
        return {
            "rules": [
                {
                    "rule_id": rid,
                    "spec": rule_spec_to_dict(c.spec),
                    "canonical_text": c.canonical_text,
                }
                for rid, c in service.rules.items()
            ]
        }

    @app.post("/rules")
    async def post_rule(request: Request, dry_run: bool = False):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise ServiceError(400, f"body is not JSON: {exc}")
        try:
            compiled = service.deploy_rule(body, dry_run=dry_run)
        except DuplicateRuleId as exc:
            raise ServiceError(409, f"rule {exc} already deployed")
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(400, f"bad rule spec: {exc}")
        return {
            "rule_id": compiled.spec.rule_id,
            "canonical_text": compiled.canonical_text,
            "deployed": not dry_run,
        }

    @app.post("/patients/{patient_id}/events")
    async def post_events(patient_id: str, request: Request):
        _check_patient_id(patient_id)
        body = await request.body()
        ctype = request.headers.get("content-type", "")
        try:
            if ctype.startswith("application/json"):
                payload = json.loads(body)
                if not isinstance(payload, list):
                    raise ServiceError(400, "expected a JSON array of records")
                records = [parse_record(o) for o in payload]
            else:
                records = list(parse_csv(body, patient_id).records)
        except ServiceError:
            raise
        except IngestError as exc:
            raise ServiceError(400, str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(400, f"bad record: {exc}")
        try:
            return service.ingest(patient_id, records)
        except OutOfOrderEvent as exc:
            raise ServiceError(422, str(exc))

    @app.get("/patients/{patient_id}/alerts")
    def get_alerts(patient_id: str, request: Request):
        _check_patient_id(patient_id)
        rt = service._runtime(patient_id)
        lo = request.query_params.get("from")
        hi = request.query_params.get("to")
        try:
            lo = int(lo) if lo is not None else None
            hi = int(hi) if hi is not None else None
        except ValueError:
            raise ServiceError(400, "from/to must be integer ticks")
        with rt.lock:
            out = [
                service.alert_json(rt, a)
                for a in rt.alerts
                if (lo is None or a.raised_at >= lo)
                and (hi is None or a.raised_at <= hi)
            ]
        return {"alerts": out}

    @app.get("/patients/{patient_id}/fluents")
    def get_fluents(patient_id: str, request: Request):
        _check_patient_id(patient_id)
        rt = service._runtime(patient_id)
        fluent_text = request.query_params.get("fluent")
        at = request.query_params.get("at")
        try:
            at_tick = int(at) if at is not None else rt.engine.last_time
            if at_tick < 0:
                raise ValueError("negative tick")
        except ValueError:
            raise ServiceError(400, "at must be a non-negative integer tick")
        if fluent_text:
            try:
                fluent = parse_term(fluent_text)
            except TermSyntaxError as exc:
                raise ServiceError(400, f"bad fluent: {exc}")
        else:
            fluent = WILDCARD
        with rt.lock:
            held = rt.engine.holds_at(FluentAssignment(fluent, WILDCARD), at_tick)
        return {
            "at": at_tick,
            "fluents": [
                {"fluent": fa.fluent.text, "value": fa.value.text} for fa in held
            ],
        }

    @app.post("/patients/{patient_id}/replay")
    def post_replay(patient_id: str):
        _check_patient_id(patient_id)
        rt = service.replay(patient_id)
        with rt.lock:
            return {
                "patient_id": patient_id,
                "events": len(service.log.read(patient_id)),
                "mvis": rt.engine.live_mvi_count(),
                "alerts": len(rt.alerts),
            }

    return app
