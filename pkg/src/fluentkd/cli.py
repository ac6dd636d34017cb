"""Command line interface: serve, benchmark, plot, compile, bootstrap."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .bench import BenchConfig, read_csv, run, run_concurrent, write_csv
from .figures import render_all
from .ingest import bootstrap as bootstrap_streams
from .ingest import serialize_csv, synthetic_seed
from .patterns import compile_rule, rule_spec_from_dict


@click.group()
def main():
    """Event-calculus stream monitoring over kd-tree indexes."""


@main.command()
@click.option("--log-dir", type=click.Path(), default="./narrative-log",
              show_default=True, help="Narrative log directory.")
@click.option("--host", default=None, help="Bind address (overrides FLUENTKD_ADDR).")
@click.option("--port", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config: log_dir, default_window, default_suppress.")
def serve(log_dir, host, port, config_path):
    """Run the ingestion/alerting HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = {}
    if config_path:
        cfg = json.loads(Path(config_path).read_text())
    addr = os.environ.get("FLUENTKD_ADDR", "127.0.0.1:8000")
    default_host, _, default_port = addr.partition(":")
    app = create_app(
        cfg.get("log_dir", log_dir),
        default_window=int(cfg.get("default_window", 86400)),
        default_suppress=cfg.get("default_suppress"),
    )
    uvicorn.run(app, host=host or default_host or "127.0.0.1",
                port=port or int(default_port or 8000))


@main.group()
def bench():
    """Benchmarks comparing the naive baseline and the kd engine."""


def _bench_options(f):
    f = click.option("--events", default=10000, show_default=True)(f)
    f = click.option("--repeats", default=50, show_default=True)(f)
    f = click.option("--seed", default=0, show_default=True)(f)
    f = click.option("--sample-every", default=100, show_default=True,
                     help="Metric sampling interval in events.")(f)
    f = click.option("--warmup", default=100, show_default=True,
                     help="Events excluded from latency statistics.")(f)
    f = click.option("--query-mix", default="ground_holds_at,unbound_holds_at",
                     show_default=True, help="Comma-separated query kinds.")(f)
    return f


def _mk_config(engine, events, repeats, seed, sample_every, warmup, query_mix,
               threads=1):
    return BenchConfig(
        engine=engine, events=events, repeats=repeats, threads=threads,
        rng_seed=seed, sample_every=sample_every, warmup=warmup,
        query_mix=tuple(q.strip() for q in query_mix.split(",") if q.strip()))


@bench.command("run")
@click.option("--engine", type=click.Choice(bench_mod.ENGINES), required=True)
@_bench_options
@click.option("--out", type=click.Path(), required=True, help="CSV output path.")
def bench_run(engine, events, repeats, seed, sample_every, warmup, query_mix, out):
    """Stream a bootstrapped narrative through one engine."""
    config = _mk_config(engine, events, repeats, seed, sample_every, warmup,
                        query_mix)
    rows, summary = run(config)
    write_csv(out, rows)
    _emit_summary(out, [summary])


@bench.command("compare")
@_bench_options
@click.option("--out", type=click.Path(), required=True, help="CSV output path.")
def bench_compare(events, repeats, seed, sample_every, warmup, query_mix, out):
    """Run both engines on the same narrative into one CSV."""
    all_rows, summaries = [], []
    for engine in bench_mod.ENGINES:
        config = _mk_config(engine, events, repeats, seed, sample_every,
                            warmup, query_mix)
        rows, summary = run(config, check_equivalence=engine == "naive")
        all_rows.extend(rows)
        summaries.append(summary)
    write_csv(out, all_rows)
    _emit_summary(out, summaries)


@bench.command("concurrent")
@click.option("--engine", type=click.Choice(bench_mod.ENGINES), required=True)
@click.option("--threads", default=40, show_default=True)
@_bench_options
@click.option("--out", type=click.Path(), default=None, help="JSON output path.")
def bench_concurrent(engine, threads, events, repeats, seed, sample_every,
                     warmup, query_mix, out):
    """Independent engines on separate threads, one patient each."""
    config = _mk_config(engine, events, repeats, seed, sample_every, warmup,
                        query_mix, threads=threads)
    summary = run_concurrent(config)
    text = json.dumps(summary, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    click.echo(text)


@bench.command("plots")
@click.option("--csv", "csv_path", type=click.Path(exists=True), required=True)
@click.option("--outdir", type=click.Path(), default="figures", show_default=True)
def bench_plots(csv_path, outdir):
    """Render the four standard charts from a benchmark CSV."""
    rows = read_csv(csv_path)
    for path in render_all(rows, outdir):
        click.echo(str(path))


def _emit_summary(out, summaries):
    path = Path(out).with_suffix(".summary.json")
    path.write_text(json.dumps(summaries, indent=2) + "\n")
    for s in summaries:
        click.echo(
            f"{s['engine']}: mean update "
            f"{s['mean_update_ns_mean'] / 1e3:.1f} +- "
            f"{s['mean_update_ns_stddev'] / 1e3:.1f} us, "
            f"decile ratio {s['decile_ratio_mean']:.2f} "
            f"+- {s['decile_ratio_stddev']:.2f}")
    click.echo(f"summary written to {path}")


@main.command("compile-rule")
@click.argument("spec_path", type=click.Path(exists=True))
def compile_rule_cmd(spec_path):
    """Compile a RuleSpec JSON file and print its canonical text."""
    try:
        spec = rule_spec_from_dict(json.loads(Path(spec_path).read_text()))
        compiled = compile_rule(spec)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(compiled.canonical_text, nl=False)


@main.command("bootstrap")
@click.option("--patients", default=50, show_default=True)
@click.option("--events", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--seed-days", default=3, show_default=True,
              help="Length of the synthetic seed stream in days.")
@click.option("--outdir", type=click.Path(), required=True)
def bootstrap_cmd(patients, events, seed, seed_days, outdir):
    """Write bootstrapped patient CSV files for benchmarking."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed_stream = synthetic_seed(days=seed_days, rng_seed=seed)
    target = max(events, len(seed_stream.records))
    for stream in bootstrap_streams([seed_stream], target, patients,
                                    rng_seed=seed + 1):
        path = outdir / f"{stream.patient_id}.csv"
        path.write_text(serialize_csv(stream))
        click.echo(f"{path} ({len(stream.records)} records)")


if __name__ == "__main__":
    main()
