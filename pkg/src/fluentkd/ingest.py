"""Physiological stream ingestion: CSV parsing, synthetic narratives, logs.

CSV format: header ``timestamp,signal,value``, UTF-8, LF line endings.
Timestamps are ISO-8601 with an explicit UTC offset; signals are one of
cgm, glucose, hr, weight, meal, activity; values are finite decimals
(enumerated codes for meal/activity).  Ticks are seconds since the
patient's first record, so every engine sees small non-negative integers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .kernel import EventOccurrence
from .patterns import observation_event

SIGNALS = ("cgm", "glucose", "hr", "weight", "meal", "activity")

DAY = 86400
CGM_PERIOD = 300  # one sample per 5 minutes, 288 per day


class IngestError(Exception):
    pass


class CsvSyntax(IngestError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnknownSignal(IngestError):
    def __init__(self, row: int, signal: str):
        super().__init__(f"row {row}: unknown signal {signal!r}")
        self.row = row
        self.signal = signal


class UnsortedInput(IngestError):
    def __init__(self, row: int):
        super().__init__(f"row {row}: timestamps must be nondecreasing")
        self.row = row


class EmptySeed(IngestError):
    pass


@dataclass(frozen=True)
class SignalRecord:
    timestamp: datetime  # tz-aware UTC
    signal: str
    value: float

    @property
    def iso(self) -> str:
        return self.timestamp.astimezone(timezone.utc).isoformat().replace(
            "+00:00", "Z")


@dataclass(frozen=True)
class PatientStream:
    patient_id: str
    records: tuple

    @property
    def origin(self) -> datetime:
        return self.records[0].timestamp


def parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        raise ValueError("timestamp must carry a UTC offset")
    return ts.astimezone(timezone.utc)


def parse_record(obj: dict) -> SignalRecord:
    """One record from its JSON form {timestamp, signal, value}."""
    ts = parse_timestamp(str(obj["timestamp"]))
    signal = str(obj["signal"])
    if signal not in SIGNALS:
        raise UnknownSignal(0, signal)
    value = float(obj["value"])
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return SignalRecord(ts, signal, value)


def parse_csv(data, patient_id: str = "p0") -> PatientStream:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CsvSyntax(0, f"not valid UTF-8: {exc}") from exc
    else:
        text = data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvSyntax(1, "missing header") from None
    except csv.Error as exc:
        raise CsvSyntax(1, f"unparseable header: {exc}") from exc
    if [h.strip() for h in header] != ["timestamp", "signal", "value"]:
        raise CsvSyntax(1, f"bad header {header!r}")
    records = []
    prev = None
    for row_no, row in enumerate(_rows(reader), start=2):
        if not row:
            continue
        if len(row) != 3:
            raise CsvSyntax(row_no, f"expected 3 fields, got {len(row)}")
        ts_text, signal, value_text = (c.strip() for c in row)
        try:
            ts = parse_timestamp(ts_text)
        except ValueError as exc:
            raise CsvSyntax(row_no, f"bad timestamp {ts_text!r}: {exc}") from exc
        if signal not in SIGNALS:
            raise UnknownSignal(row_no, signal)
        try:
            value = float(value_text)
        except ValueError as exc:
            raise CsvSyntax(row_no, f"bad value {value_text!r}") from exc
        if not math.isfinite(value):
            raise CsvSyntax(row_no, f"non-finite value {value_text!r}")
        if prev is not None and ts < prev:
            raise UnsortedInput(row_no)
        prev = ts
        records.append(SignalRecord(ts, signal, value))
    return PatientStream(patient_id, tuple(records))


def _rows(reader):
    # csv.Error (NUL bytes, unterminated quotes) becomes a typed syntax
    # error carrying the offending line
    while True:
        try:
            yield next(reader)
        except StopIteration:
            return
        except csv.Error as exc:
            raise CsvSyntax(reader.line_num + 1, f"unparseable row: {exc}") from exc


def serialize_csv(stream: PatientStream) -> str:
    lines = ["timestamp,signal,value"]
    for r in stream.records:
        lines.append(f"{r.iso},{r.signal},{r.value!r}")
    return "\n".join(lines) + "\n"


def record_tick(record: SignalRecord, origin: datetime) -> int:
    return int((record.timestamp - origin).total_seconds())


def stream_events(stream: PatientStream, origin: datetime | None = None):
    """Observation events, one per record, ticked from the stream origin."""
    if not stream.records:
        return []
    origin = origin if origin is not None else stream.origin
    return [
        EventOccurrence(observation_event(r.signal, r.value),
                        record_tick(r, origin))
        for r in stream.records
    ]


# -- synthetic narratives ------------------------------------------------------


def synthetic_seed(patient_id: str = "seed0", days: int = 3,
                   rng_seed: int = 0) -> PatientStream:
    """A plausible patient-days seed: dense CGM, periodic vitals, sparse
    meals/weight.  Deterministic per rng_seed."""
    rng = random.Random(rng_seed)
    base = datetime(2014, 10, 1, tzinfo=timezone.utc)
    records = []
    for day in range(days):
        day0 = day * DAY
        for k in range(0, DAY, CGM_PERIOD):
            phase = 2.0 * math.pi * k / DAY
            v = 7.5 + 3.5 * math.sin(phase + rng.random() * 0.2) + rng.gauss(0, 0.6)
            records.append((day0 + k, "cgm", round(max(2.0, v), 1)))
        for k in range(0, DAY, 900):
            v = 72 + 25 * math.sin(2.0 * math.pi * k / DAY) + rng.gauss(0, 6)
            records.append((day0 + k, "hr", round(max(40.0, v), 1)))
        for k in (7 * 3600, 12 * 3600, 19 * 3600):
            records.append((day0 + k + rng.randrange(0, 1200), "meal",
                            float(rng.randint(1, 3))))
            records.append((day0 + k + rng.randrange(1200, 2400), "glucose",
                            round(rng.uniform(4.0, 12.0), 1)))
        records.append((day0 + 8 * 3600, "weight", round(rng.uniform(60, 90), 1)))
        for k in range(0, DAY, 1800):
            records.append((day0 + k, "activity", float(rng.randint(0, 5))))
    records.sort(key=lambda r: r[0])
    return PatientStream(patient_id, tuple(
        SignalRecord(base + timedelta(seconds=off), sig, val)
        for off, sig, val in records))


def bootstrap(seed_streams, target_events: int, patient_count: int,
              rng_seed: int = 0) -> list[PatientStream]:
    """Synthetic patients built by resampling day-long segments of the seed
    streams with replacement; intra-day ordering and cadence preserved."""
    seeds = [s for s in seed_streams]
    if not seeds or any(not s.records for s in seeds):
        raise EmptySeed("need at least one non-empty seed stream")
    largest = max(len(s.records) for s in seeds)
    if target_events < largest:
        raise ValueError(
            f"target_events {target_events} below largest seed {largest}")
    segments = []
    for s in seeds:
        origin = s.origin
        by_day: dict[int, list] = {}
        for r in s.records:
            tick = record_tick(r, origin)
            by_day.setdefault(tick // DAY, []).append(
                (tick % DAY, r.signal, r.value))
        for day in sorted(by_day):
            segments.append(by_day[day])
    rng = random.Random(rng_seed)
    base = datetime(2014, 10, 1, tzinfo=timezone.utc)
    out = []
    for i in range(patient_count):
        records = []
        day = 0
        while len(records) < target_events:
            seg = segments[rng.randrange(len(segments))]
            for off, sig, val in seg:
                records.append(SignalRecord(
                    base + timedelta(seconds=day * DAY + off), sig, val))
            day += 1
        out.append(PatientStream(f"synth{i:02d}", tuple(records)))
    return out


# -- append-only narrative log ---------------------------------------------------


class NarrativeLog:
    """Newline-delimited JSON per patient, plus a deployed-rules journal;
    fsynced once per appended batch so a replay after restart sees every
    acknowledged record."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _events_path(self, patient_id: str) -> Path:
        return self.root / f"events-{patient_id}.ndjson"

    def append(self, patient_id: str, records) -> None:
        with open(self._events_path(patient_id), "a", encoding="utf-8") as f:
            for r in records:
                f.write(json.dumps(
                    {"timestamp": r.iso, "signal": r.signal, "value": r.value},
                    separators=(",", ":")) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def read(self, patient_id: str) -> list[SignalRecord]:
        path = self._events_path(patient_id)
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    out.append(parse_record(json.loads(line)))
        return out

    def has_patient(self, patient_id: str) -> bool:
        return self._events_path(patient_id).exists()

    def patients(self) -> list[str]:
        return sorted(
            p.name[len("events-"):-len(".ndjson")]
            for p in self.root.glob("events-*.ndjson"))

    def append_rule(self, spec_dict: dict) -> None:
        with open(self.root / "rules.ndjson", "a", encoding="utf-8") as f:
            f.write(json.dumps(spec_dict, separators=(",", ":")) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def read_rules(self) -> list[dict]:
        path = self.root / "rules.ndjson"
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out
