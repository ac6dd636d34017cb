"""Benchmark harness: naive baseline vs kd-indexed engine.

Streams bootstrapped observation narratives through an engine, timing every
update and sampling query latencies, kd-node visits (or scan counts for the
baseline), live interval counts, and explicitly accounted structure bytes.
Runs repeat with identical inputs and the summary reports mean and standard
deviation per metric.  A correctness gate (kd engine vs baseline on a
stream prefix) runs before any measurement is emitted.
"""

from __future__ import annotations

import csv
import gc
import statistics
import threading
import time
from dataclasses import dataclass

from .engine import Engine
from .ingest import bootstrap, stream_events, synthetic_seed
from .kernel import FluentAssignment, NaiveEvaluator
from .patterns import monitoring_theory, observation_fluent
from .terms import WILDCARD, term

ENGINES = ("naive", "ceckd")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class BenchConfig:
    engine: str
    events: int
    repeats: int = 50
    threads: int = 1
    query_mix: tuple = ("ground_holds_at", "unbound_holds_at")
    rng_seed: int = 0
    sample_every: int = 100
    warmup: int = 100

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.events < 100:
            raise ConfigError("events must be >= 100")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for q in self.query_mix:
            if q not in ("ground_holds_at", "unbound_holds_at"):
                raise ConfigError(f"unknown query kind {q!r}")


CSV_COLUMNS = [
    "engine", "repeat", "event_index", "update_ns",
    "ground_query_ns", "ground_examined", "unbound_query_ns",
    "unbound_examined", "live_mvis", "structure_bytes",
]


def make_engine(kind: str):
    theory = monitoring_theory()
    return NaiveEvaluator(theory) if kind == "naive" else Engine(theory)


def bench_stream(events: int, rng_seed: int, patients: int = 1):
    """Bootstrapped observation event lists, one per patient."""
    seed_days = 1 if events <= 1500 else 3
    seed = synthetic_seed(days=seed_days, rng_seed=rng_seed)
    target = max(events, len(seed.records))
    streams = bootstrap([seed], target, patients, rng_seed=rng_seed + 1)
    return [stream_events(s)[:events] for s in streams]


def _examined(engine, kind: str) -> int:
    if kind == "ceckd":
        return engine.mvi_tree.last_query_visits
    return 0


def _scan_delta(engine, before: int) -> int:
    return engine.scan_count - before if hasattr(engine, "scan_count") else 0


def _query_metrics(engine, kind, last_cgm):
    """(ground_ns, ground_examined, unbound_ns, unbound_examined)."""
    ground_q = FluentAssignment(
        observation_fluent("cgm"), term("value", last_cgm))
    unbound_q = FluentAssignment(WILDCARD, WILDCARD)
    t = engine.last_time
    out = []
    for q in (ground_q, unbound_q):
        scan0 = getattr(engine, "scan_count", 0)
        t0 = time.perf_counter_ns()
        engine.holds_at(q, t)
        dt = time.perf_counter_ns() - t0
        examined = (engine.mvi_tree.last_query_visits if kind == "ceckd"
                    else getattr(engine, "scan_count", 0) - scan0)
        out.extend((dt, examined))
    return out


def run(config: BenchConfig, check_equivalence: bool = True):
    """Stream config.events through the chosen engine config.repeats times.

    Returns (rows, summary): rows follow CSV_COLUMNS, the summary carries
    mean/stddev aggregates across repeats.
    """
    events = bench_stream(config.events, config.rng_seed)[0]
    if check_equivalence:
        verify_equivalence(events[: min(1000, len(events))])
    rows = []
    per_repeat = {
        "mean_update_ns": [], "decile_ratio": [],
        "ground_query_ns": [], "unbound_query_ns": [],
        "structure_bytes": [], "final_live_mvis": [],
    }
    for repeat in range(config.repeats):
        engine = make_engine(config.engine)
        latencies = []
        last_cgm = 0.0
        samples = []
        # collector pauses grow with the live heap and would be charged to
        # whichever update they land in; keep them out of the timed section
        gc.collect()
        gc.disable()
        try:
            for i, e in enumerate(events):
                if e.event.args and e.event.args[0].functor == "cgm":
                    last_cgm = e.event.args[1]
                t0 = time.perf_counter_ns()
                engine.update(e)
                latencies.append(time.perf_counter_ns() - t0)
                at_sample = (i + 1) % config.sample_every == 0 or i + 1 == len(events)
                if at_sample:
                    g_ns, g_ex, u_ns, u_ex = _query_metrics(
                        engine, config.engine, last_cgm)
                    # byte accounting walks the whole structure: sample the
                    # curve on the first repeat only, always at the end
                    expensive = repeat == 0 or i + 1 == len(events)
                    nbytes = engine.structure_bytes() if expensive else 0
                    samples.append([
                        config.engine, repeat, i + 1,
                        _window_mean(latencies, config.sample_every),
                        g_ns, g_ex, u_ns, u_ex,
                        engine.live_mvi_count(), nbytes,
                    ])
        finally:
            gc.enable()
        rows.extend(samples)
        w = config.warmup
        tail = latencies[w:]
        dec = max(1, len(tail) // 10)
        first_decile = statistics.fmean(tail[:dec])
        last_decile = statistics.fmean(tail[-dec:])
        per_repeat["mean_update_ns"].append(statistics.fmean(tail))
        per_repeat["decile_ratio"].append(last_decile / first_decile)
        per_repeat["ground_query_ns"].append(samples[-1][4])
        per_repeat["unbound_query_ns"].append(samples[-1][6])
        per_repeat["structure_bytes"].append(samples[-1][9])
        per_repeat["final_live_mvis"].append(samples[-1][8])
    summary = {"engine": config.engine, "events": config.events,
               "repeats": config.repeats, "rng_seed": config.rng_seed}
    for k, vals in per_repeat.items():
        summary[f"{k}_mean"] = statistics.fmean(vals)
        summary[f"{k}_stddev"] = statistics.pstdev(vals) if len(vals) > 1 else 0.0
    return rows, summary


def _window_mean(latencies, window):
    tail = latencies[-window:]
    return int(statistics.fmean(tail))


def verify_equivalence(events) -> None:
    """Benchmarks must never trade correctness: kd engine and baseline must
    agree on the prefix before any measurement is reported."""
    eng, ref = make_engine("ceckd"), make_engine("naive")
    for e in events:
        eng.update(e)
        ref.update(e)
    if eng.mvi_snapshot() != ref.mvi_snapshot():
        raise AssertionError("engine/baseline divergence on bench prefix")
    unbound = FluentAssignment(WILDCARD, WILDCARD)
    ts = [0, eng.last_time // 2, eng.last_time]
    for t in ts:
        if set(eng.holds_at(unbound, t)) != set(ref.holds_at(unbound, t)):
            raise AssertionError(f"holds_at divergence at t={t}")


def run_concurrent(config: BenchConfig):
    """config.threads independent engines on as many threads, one
    bootstrapped patient each; aggregate throughput and summed bytes."""
    import sys

    streams = bench_stream(config.events, config.rng_seed, config.threads)
    engines = [make_engine(config.engine) for _ in range(config.threads)]
    barrier = threading.Barrier(config.threads + 1)

    def worker(engine, events):
        barrier.wait()
        for e in events:
            engine.update(e)

    threads = [
        threading.Thread(target=worker, args=(eng, ev), daemon=True)
        for eng, ev in zip(engines, streams)
    ]
    for th in threads:
        th.start()
    # coarser interpreter switching keeps heavily oversubscribed CPU-bound
    # threads from thrashing; identical setting for either engine kind
    interval = sys.getswitchinterval()
    sys.setswitchinterval(0.05)
    gc.collect()
    barrier.wait()
    t0 = time.perf_counter_ns()
    try:
        for th in threads:
            th.join()
        wall_ns = time.perf_counter_ns() - t0
    finally:
        sys.setswitchinterval(interval)
    total_events = sum(len(s) for s in streams)
    return {
        "engine": config.engine,
        "threads": config.threads,
        "events_per_engine": config.events,
        "wall_ns": wall_ns,
        "aggregate_events_per_s": total_events / (wall_ns / 1e9),
        "total_structure_bytes": sum(e.structure_bytes() for e in engines),
        "total_live_mvis": sum(e.live_mvi_count() for e in engines),
    }


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)


def read_csv(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = []
        for rec in reader:
            rows.append([
                rec["engine"], int(rec["repeat"]), int(rec["event_index"]),
                int(rec["update_ns"]), int(rec["ground_query_ns"]),
                int(rec["ground_examined"]), int(rec["unbound_query_ns"]),
                int(rec["unbound_examined"]), int(rec["live_mvis"]),
                int(rec["structure_bytes"]),
            ])
        return rows
