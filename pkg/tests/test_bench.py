import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from fluentkd.bench import (
    BenchConfig,
    ConfigError,
    bench_stream,
    read_csv,
    run,
    run_concurrent,
    write_csv,
)
from fluentkd.cli import main as cli_main
from fluentkd.figures import render_all


def test_config_validation():
    with pytest.raises(ConfigError):
        BenchConfig(engine="prolog", events=1000)
    with pytest.raises(ConfigError):
        BenchConfig(engine="naive", events=50)
    with pytest.raises(ConfigError):
        BenchConfig(engine="naive", events=1000, repeats=0)
    with pytest.raises(ConfigError):
        BenchConfig(engine="naive", events=1000, query_mix=("knn",))


def test_bench_stream_reproducible():
    a = bench_stream(500, 3)[0]
    b = bench_stream(500, 3)[0]
    assert a == b
    assert len(a) == 500
    assert all(x.time <= y.time for x, y in zip(a, a[1:]))


def test_smoke_run_produces_rows_and_summary():
    rows, summary = run(BenchConfig(engine="ceckd", events=200, repeats=2,
                                    rng_seed=1))
    assert len(rows) >= 2
    assert summary["engine"] == "ceckd"
    assert summary["mean_update_ns_mean"] > 0
    assert summary["decile_ratio_mean"] > 0
    assert summary["structure_bytes_mean"] > 0
    # row schema: engine, repeat, index ascending per repeat
    per_repeat = {}
    for r in rows:
        per_repeat.setdefault(r[1], []).append(r[2])
    for idxs in per_repeat.values():
        assert idxs == sorted(idxs)


def test_csv_roundtrip(tmp_path):
    rows, _ = run(BenchConfig(engine="naive", events=150, repeats=1, rng_seed=2))
    path = tmp_path / "bench.csv"
    write_csv(path, rows)
    assert read_csv(path) == rows


def test_concurrent_degenerate_case():
    summary = run_concurrent(BenchConfig(engine="ceckd", events=150, repeats=1,
                                         threads=1, rng_seed=0))
    assert summary["threads"] == 1
    assert summary["aggregate_events_per_s"] > 0
    assert summary["total_structure_bytes"] > 0


def test_concurrent_multi_thread():
    summary = run_concurrent(BenchConfig(engine="ceckd", events=150, repeats=1,
                                         threads=4, rng_seed=0))
    assert summary["total_live_mvis"] > 0
    assert summary["threads"] == 4


def test_figures_rendered(tmp_path):
    rows, _ = run(BenchConfig(engine="ceckd", events=200, repeats=1, rng_seed=1))
    paths = render_all(rows, tmp_path / "figs")
    assert len(paths) == 4
    for p in paths:
        assert Path(p).exists() and Path(p).stat().st_size > 1000


def test_cli_bench_and_plots(tmp_path):
    runner = CliRunner()
    out = tmp_path / "bench.csv"
    res = runner.invoke(cli_main, [
        "bench", "run", "--engine", "ceckd", "--events", "200",
        "--repeats", "1", "--seed", "1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert out.exists()
    assert out.with_suffix(".summary.json").exists()
    res = runner.invoke(cli_main, [
        "bench", "plots", "--csv", str(out), "--outdir", str(tmp_path / "f")])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "f" / "update_time.png").exists()


def test_cli_compile_rule(tmp_path):
    runner = CliRunner()
    golden = Path(__file__).parent / "goldens"
    res = runner.invoke(cli_main, ["compile-rule", str(golden / "rule0.json")])
    assert res.exit_code == 0
    assert res.output == (golden / "rule0.txt").read_text()
    bad = tmp_path / "bad.json"
    bad.write_text('{"rule_id": "x"}')
    res = runner.invoke(cli_main, ["compile-rule", str(bad)])
    assert res.exit_code == 1


def test_cli_bootstrap(tmp_path):
    runner = CliRunner()
    res = runner.invoke(cli_main, [
        "bootstrap", "--patients", "2", "--events", "600", "--seed", "4",
        "--seed-days", "1", "--outdir", str(tmp_path / "streams")])
    assert res.exit_code == 0, res.output
    files = sorted((tmp_path / "streams").glob("*.csv"))
    assert len(files) == 2
    from fluentkd.ingest import parse_csv

    stream = parse_csv(files[0].read_text(), "synth00")
    assert len(stream.records) >= 600
