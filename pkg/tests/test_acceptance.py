"""Acceptance suite: one test per criterion, one printed verdict line each.

The update/query-shape criteria share a single 50-repeat benchmark run
(module-scoped fixture), so the whole module stays inside its time budget.
Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
"""

import json
import random
from collections import Counter
import statistics
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from fluentkd.bench import BenchConfig, bench_stream, make_engine, run, run_concurrent
from fluentkd.engine import Engine
from fluentkd.kdtree import KdTree
from fluentkd.kernel import EventOccurrence, FluentAssignment, NaiveEvaluator
from fluentkd.patterns import (
    apply_event,
    compile_rule,
    monitoring_theory,
    observation_event,
    observation_fluent,
    rule_spec_from_dict,
)
from fluentkd.service import create_app
from fluentkd.terms import WILDCARD, atom, term

from genutil import random_instance, random_query_pattern
from test_kdtree import ScanOracle, rand_box, rand_key

GOLDENS = Path(__file__).parent / "goldens"
UNBOUND = FluentAssignment(WILDCARD, WILDCARD)


def _verdict(name, detail):
    print(f"[acceptance] {name}: PASS — {detail}")


# -- criterion: oracle equivalence over randomized narratives ----------------


def test_oracle_equivalence_1000_narratives():
    n_narratives = 1000
    seeds = list(range(n_narratives))
    events_total = 0
    for seed in seeds:
        theory, narrative, effects = random_instance(
            seed, max_events=200, n_fluents=6, n_values=4)
        eng = Engine(theory)
        ref = NaiveEvaluator(theory)
        rng = random.Random(seed * 31 + 7)
        horizon = (max(e.time for e in narrative) if narrative else 0) + 2
        for e in narrative:
            eng.update(e)
            ref.update(e)
            events_total += 1
            assert eng.mvi_snapshot() == ref.mvi_snapshot(), f"seed={seed}"
            q = random_query_pattern(rng, effects)
            t = rng.randint(0, horizon)
            assert set(eng.holds_at(q, t)) == set(ref.holds_at(q, t)), (
                f"seed={seed}")
            assert set(eng.mholds_for(q)) == set(ref.mholds_for(q)), (
                f"seed={seed}")
            a = rng.randint(0, horizon)
            b = rng.randint(0, horizon)
            ws, we = min(a, b), max(a, b)
            assert set(eng.cached_between(ws, we, q)) == set(
                ref.cached_between(ws, we, q)), f"seed={seed}"
            pat = rng.choice([WILDCARD, term("e0", WILDCARD), atom("e1")])
            assert set(eng.happens_in_window(pat, ws, we)) == set(
                ref.happens_in_window(pat, ws, we)), f"seed={seed}"
    _verdict(
        "oracle equivalence",
        f"{n_narratives} narratives ({events_total} events), seeds "
        f"{seeds[0]}..{seeds[-1]}, all four query ops equal after every event")


# -- criterion: kd-tree vs linear-scan oracle ---------------------------------


def test_kdtree_oracle_100_workloads():
    n_workloads = 100
    ops_per_workload = 2000
    for seed in range(n_workloads):
        rng = random.Random(seed)
        span = rng.choice([8, 60, 1000])
        tree, oracle = KdTree(), ScanOracle()
        payload = 0
        for _ in range(ops_per_workload):
            op = rng.random()
            if op < 0.55:
                k = rand_key(rng, span)
                tree.insert(k, payload)
                oracle.insert(k, payload)
                payload += 1
            elif op < 0.8 and oracle.points:
                k, _ = rng.choice(oracle.points)
                parity = rng.random() < 0.5
                pred = (lambda p: True) if parity else (lambda p: p % 2 == 0)
                assert tree.delete(k, pred) == oracle.delete(k, pred), (
                    f"seed={seed}")
            else:
                box = rand_box(rng, span)
                assert Counter(tree.range_query(box)) == Counter(
                    oracle.range_query(box)), f"seed={seed}"
            assert tree.live_count == len(oracle.points)
        tree.check_invariants()
    _verdict(
        "kd-tree oracle",
        f"{n_workloads} workloads x {ops_per_workload} interleaved ops match "
        "the linear-scan oracle; invariants hold")


# -- criteria sharing the 50-repeat, 10k-event benchmark run ------------------


@pytest.fixture(scope="module")
def bench_summaries():
    out = {}
    for engine in ("naive", "ceckd"):
        _, summary = run(
            BenchConfig(engine=engine, events=10000, repeats=50, rng_seed=0),
            check_equivalence=engine == "naive")
        out[engine] = summary
    return out


def test_update_time_shape(bench_summaries):
    naive, ceckd = bench_summaries["naive"], bench_summaries["ceckd"]
    naive_ratio = naive["decile_ratio_mean"]
    ceckd_ratio = ceckd["decile_ratio_mean"]
    assert naive_ratio >= 3.0, naive_ratio
    assert ceckd_ratio <= 1.5, ceckd_ratio
    _verdict(
        "update-time shape",
        f"last/first decile: naive {naive_ratio:.2f} "
        f"± {naive['decile_ratio_stddev']:.2f} (>= 3), "
        f"kd {ceckd_ratio:.2f} ± {ceckd['decile_ratio_stddev']:.2f} (<= 1.5); "
        f"mean update naive {naive['mean_update_ns_mean'] / 1e3:.0f} "
        f"± {naive['mean_update_ns_stddev'] / 1e3:.0f} us, "
        f"kd {ceckd['mean_update_ns_mean'] / 1e3:.0f} "
        f"± {ceckd['mean_update_ns_stddev'] / 1e3:.0f} us over 50 repeats")


def test_unbound_query_shape(bench_summaries):
    naive, ceckd = bench_summaries["naive"], bench_summaries["ceckd"]
    ratio = naive["unbound_query_ns_mean"] / ceckd["unbound_query_ns_mean"]
    assert ratio >= 5.0, ratio
    _verdict(
        "unbound-query shape",
        f"mean unbound holds_at at 10k events: naive "
        f"{naive['unbound_query_ns_mean'] / 1e3:.0f} us / kd "
        f"{ceckd['unbound_query_ns_mean'] / 1e3:.0f} us = {ratio:.1f}x (>= 5)")


def test_memory_ratio(bench_summaries):
    naive, ceckd = bench_summaries["naive"], bench_summaries["ceckd"]
    ratio = ceckd["structure_bytes_mean"] / naive["structure_bytes_mean"]
    assert 1.0 <= ratio <= 3.0, ratio
    _verdict(
        "memory ratio",
        f"kd {ceckd['structure_bytes_mean'] / 2**20:.1f} MiB / naive "
        f"{naive['structure_bytes_mean'] / 2**20:.1f} MiB = {ratio:.2f} "
        "(within [1, 3]) at 10k events")


# -- criterion: visit-count scaling -------------------------------------------


def _alternating_stream(n):
    vals = (5.0, 6.0)
    return [
        EventOccurrence(observation_event("cgm", vals[i % 2]), i + 1)
        for i in range(n)
    ]


def test_visit_count_scaling():
    stats = {}
    for n in (1000, 16000):
        eng = make_engine("ceckd")
        ref = make_engine("naive")
        for e in _alternating_stream(n):
            eng.update(e)
            ref.update(e)
        assert eng.live_mvi_count() == n
        rng = random.Random(n)
        visits, scans = [], []
        for _ in range(100):
            t = rng.randint(1, n)
            q = FluentAssignment(
                observation_fluent("cgm"), term("value", (5.0, 6.0)[t % 2]))
            eng.holds_at(q, t)
            visits.append(eng.mvi_tree.last_query_visits)
            s0 = ref.scan_count
            ref.holds_at(q, t)
            scans.append(ref.scan_count - s0)
        stats[n] = (statistics.fmean(visits), statistics.fmean(scans))
    visit_ratio = stats[16000][0] / stats[1000][0]
    scan_ratio = stats[16000][1] / stats[1000][1]
    assert visit_ratio <= 8.0, visit_ratio
    assert scan_ratio >= 12.0, scan_ratio
    _verdict(
        "visit-count scaling",
        f"ground holds_at from 1k to 16k intervals: kd visits "
        f"{stats[1000][0]:.0f} -> {stats[16000][0]:.0f} "
        f"({visit_ratio:.1f}x <= 8), naive scans {stats[1000][1]:.0f} -> "
        f"{stats[16000][1]:.0f} ({scan_ratio:.1f}x >= 12)")


# -- criterion: 40 concurrent engines ------------------------------------------


def test_concurrency_40_engines():
    events = 10000
    summaries = {}
    for engine in ("ceckd", "naive"):
        summaries[engine] = run_concurrent(
            BenchConfig(engine=engine, events=events, repeats=1, threads=40,
                        rng_seed=0))
    ceckd, naive = summaries["ceckd"], summaries["naive"]
    assert ceckd["total_structure_bytes"] <= 2**30, ceckd
    assert (ceckd["aggregate_events_per_s"]
            > naive["aggregate_events_per_s"]), summaries
    _verdict(
        "concurrency",
        f"40 kd engines x {events} events: "
        f"{ceckd['total_structure_bytes'] / 2**20:.0f} MiB total (<= 1 GiB), "
        f"throughput kd {ceckd['aggregate_events_per_s']:.0f}/s vs naive "
        f"{naive['aggregate_events_per_s']:.0f}/s")


# -- criterion: rule goldens and alert deduplication ----------------------------


def test_rule_goldens_and_alert_dedup():
    for name, needles in (
        ("rule0", ("cgm > 13.0", "hr > 120.0")),
        ("rule1", ("hr > 130.0", "cgm > 15.0", "cgm < 5.0", "hr < 60.0")),
    ):
        spec = rule_spec_from_dict(json.loads((GOLDENS / f"{name}.json").read_text()))
        compiled = compile_rule(spec)
        golden = (GOLDENS / f"{name}.txt").read_text()
        assert compiled.canonical_text == golden, name
        for needle in needles:
            assert needle in compiled.canonical_text, (name, needle)

    spec = rule_spec_from_dict(json.loads((GOLDENS / "rule0.json").read_text()))
    compiled = compile_rule(spec)
    eng = Engine(monitoring_theory([compiled]))
    alerts = []
    day = 86400
    for t in range(0, 3 * day, 600):  # thresholds met at every reading
        alerts += apply_event(eng, EventOccurrence(
            observation_event("cgm", 14.0), t))
        alerts += apply_event(eng, EventOccurrence(
            observation_event("hr", 125.0), t))
    assert alerts
    gaps = [b.raised_at - a.raised_at for a, b in zip(alerts, alerts[1:])]
    assert all(g > spec.effective_suppress for g in gaps), gaps
    _verdict(
        "rule goldens",
        f"rule0/rule1 canonical texts byte-equal to goldens; 3-day trace "
        f"raised {len(alerts)} alerts, min gap "
        f"{min(gaps) if gaps else 'n/a'} > suppress window {spec.effective_suppress}")


# -- criterion: end-to-end replay determinism -----------------------------------


def test_replay_determinism_10_patients(tmp_path):
    c = TestClient(create_app(tmp_path / "log"))
    spec = json.loads((GOLDENS / "rule0.json").read_text())
    spec["pattern"]["window"] = 1800
    assert c.post("/rules", json=spec).status_code == 200

    recorded = {}
    for i in range(10):
        pid = f"patient{i}"
        rng = random.Random(1000 + i)
        rows = ["timestamp,signal,value"]
        t = 0
        for _ in range(300):
            t += rng.choice([60, 120, 300])
            sig = rng.choice(["cgm", "hr", "glucose"])
            val = (round(rng.uniform(8.0, 16.0), 1) if sig in ("cgm", "glucose")
                   else round(rng.uniform(90.0, 140.0), 1))
            h, rem = divmod(t, 3600)
            m, s = divmod(rem, 60)
            rows.append(f"2014-10-01T{h:02d}:{m:02d}:{s:02d}Z,{sig},{val}")
        r = c.post(f"/patients/{pid}/events", content="\n".join(rows) + "\n",
                   headers={"content-type": "text/csv"})
        assert r.status_code == 200, r.text
        recorded[pid] = c.get(f"/patients/{pid}/alerts").json()["alerts"]

    # crash-restart: fresh app over the same log directory
    c2 = TestClient(create_app(tmp_path / "log"))
    total = 0
    for pid, before in recorded.items():
        rep = c2.post(f"/patients/{pid}/replay")
        assert rep.status_code == 200
        after = c2.get(f"/patients/{pid}/alerts").json()["alerts"]
        assert after == before, pid
        total += len(after)
    _verdict(
        "replay determinism",
        f"10 randomized patients, {total} alerts identical before and after "
        "crash-restart replay")
