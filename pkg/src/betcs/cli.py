"""Command-line front end for the betting confidence sequences.

Subcommands mirror the harness: wealth-curve, widths, coverage, track,
bench, plus a quick selftest.  Tabular output is CSV with full-precision
floats; track emits JSON lines so it can be tailed.
"""

from __future__ import annotations

import csv
import json
import sys

import click
import numpy as np

from . import __version__, harness
from .confseq import load_checkpoint, make_estimator

_ALL_METHODS = ("hr", "up", "lbup", "hybrid", "cb")


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _write_csv(path, fieldnames, rows):
    out = open(path, "w", newline="") if path != "-" else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])
    finally:
        if out is not sys.stdout:
            out.close()


def _emit(path, fieldnames, rows, fmt):
    """Write rows as CSV (17-significant-digit floats) or JSON lines."""
    if fmt == "csv":
        _write_csv(path, fieldnames, rows)
        return
    out = open(path, "w") if path != "-" else sys.stdout
    try:
        for row in rows:
            out.write(json.dumps({k: row[k] for k in fieldnames}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


_FORMAT = click.option(
    "--format", "fmt", default="csv", show_default=True,
    type=click.Choice(("csv", "jsonl")),
)


def _parse_methods(text):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in methods:
        base, _ = harness.resolve_method(m)
        if base not in _ALL_METHODS:
            raise click.BadParameter(
                f"unknown method {m!r}; choose from {_ALL_METHODS} "
                "(lbup may carry an order suffix, e.g. lbup1, lbup3)"
            )
    return methods


def _method_kwargs(method, n, t_switch):
    if method == "lbup":
        return {"n": n}
    if method == "hybrid":
        return {"n": n, "t_switch": t_switch}
    return {}


def _method_label(ctx, param, value):
    base, _ = harness.resolve_method(value)
    if base not in _ALL_METHODS:
        raise click.BadParameter(
            f"unknown method {value!r}; choose from {_ALL_METHODS} "
            "(lbup may carry an order suffix, e.g. lbup1, lbup3)"
        )
    return value


@click.group()
@click.version_option(version=__version__)
def main():
    """Time-uniform confidence sequences for bounded means via betting."""


@main.command("wealth-curve")
@click.option("--dist", default="bern:0.5", show_default=True, help="Stream spec: bern:P, beta:A,B, or file:PATH.")
@click.option("--method", default="up", show_default=True, callback=_method_label)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--horizon", default=500, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--snapshots", default="1,5,10,50,100,500", show_default=True)
@click.option("--n", default=3, show_default=True, type=int, help="Truncation order for lbup/hybrid.")
@click.option("--t-switch", default=50, show_default=True, type=int, help="Hybrid switch round.")
@click.option("--out", default="-", show_default=True, help="Output path, or - for stdout.")
@_FORMAT
def wealth_curve_cmd(dist, method, delta, horizon, seed, snapshots, n, t_switch, out, fmt):
    """Log wealth across candidate means at snapshot rounds."""
    values = harness.generate(dist, horizon, seed)
    snaps = tuple(int(s) for s in snapshots.split(","))
    m_grid, curves = harness.wealth_curve(
        method, values, delta=delta, snapshots=snaps,
        **_method_kwargs(method, n, t_switch),
    )
    rows = [
        {"t": t, "m": float(m), "log_wealth": float(v)}
        for t in sorted(curves)
        for m, v in zip(m_grid, curves[t])
    ]
    _emit(out, ["t", "m", "log_wealth"], rows, fmt)


@main.command("widths")
@click.option("--dist", default="bern:0.5", show_default=True)
@click.option("--methods", default="hr,up,lbup,hybrid", show_default=True)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--horizon", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n", default=3, show_default=True, type=int)
@click.option("--t-switch", default=50, show_default=True, type=int)
@click.option("--out", default="-", show_default=True)
@_FORMAT
def widths_cmd(dist, methods, delta, horizon, seed, n, t_switch, out, fmt):
    """Per-round confidence intervals for each method on one stream."""
    methods = _parse_methods(methods)
    values = harness.generate(dist, horizon, seed)
    rows = harness.run_widths(
        methods, values, delta=delta,
        method_kwargs={m: _method_kwargs(m, n, t_switch) for m in methods},
        refresh_times=(horizon,),
    )
    fields = ["t", "y"]
    for m in methods:
        fields += [f"{m}_low", f"{m}_high", f"{m}_elapsed_ns"]
    _emit(out, fields, rows, fmt)


@main.command("coverage")
@click.option("--dist", default="bern:0.25", show_default=True)
@click.option("--methods", default="hr,up,lbup,hybrid", show_default=True)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--horizon", default=1000, show_default=True, type=int)
@click.option("--replicates", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n", default=3, show_default=True, type=int)
@click.option("--t-switch", default=50, show_default=True, type=int)
@click.option("--out", default="-", show_default=True)
@_FORMAT
def coverage_cmd(dist, methods, delta, horizon, replicates, seed, n, t_switch, out, fmt):
    """Monte Carlo miscoverage of the sequences at the true mean."""
    methods = _parse_methods(methods)
    rates = harness.coverage_mc(
        dist, methods, delta=delta, horizon=horizon,
        replicates=replicates, seed=seed, order=n, t_switch=t_switch,
    )
    rows = [
        {"method": m, "miscoverage": rates[m], "delta": delta,
         "replicates": replicates, "horizon": horizon}
        for m in methods
    ]
    _emit(out, ["method", "miscoverage", "delta", "replicates", "horizon"], rows, fmt)


@main.command("track")
@click.option("--dist", default="bern:0.5", show_default=True)
@click.option("--method", default="lbup", show_default=True, callback=_method_label)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--horizon", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n", default=3, show_default=True, type=int)
@click.option("--t-switch", default=50, show_default=True, type=int)
@click.option("--checkpoint", default=None, help="JSON state file; resumed if present, saved on exit.")
@click.option("--out", default="-", show_default=True, help="Output path, or - for stdout.")
@click.option("--format", "fmt", default="jsonl", show_default=True,
              type=click.Choice(("csv", "jsonl")))
def track_cmd(dist, method, delta, horizon, seed, n, t_switch, checkpoint, out, fmt):
    """Stream outcomes through one estimator, emitting one record per round.

    With --checkpoint the estimator state is restored first (if the file
    exists) and written back afterwards, so a track can be split across
    invocations; the stream continues from the restored round.
    """
    import os

    base, extra = harness.resolve_method(method)
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint) as fh:
            est = load_checkpoint(fh.read())
        if est._method_name != base:
            raise click.ClickException("checkpoint was written by a different method")
    else:
        est = make_estimator(
            base, delta=delta, **{**_method_kwargs(base, n, t_switch), **extra}
        )
        est._ensure_initialized()
    values = harness.generate(dist, horizon, seed)
    fields = ["t", "y", "low", "high", "mean", "violations"]
    sink = open(out, "w", newline="") if out != "-" else sys.stdout
    try:
        writer = csv.writer(sink) if fmt == "csv" else None
        if writer is not None:
            writer.writerow(fields)
        for y in values[est.t_:]:
            est.update(float(y))
            low, high = est.interval_
            record = {
                "t": est.t_, "y": float(y), "low": low, "high": high,
                "mean": est.empirical_mean_, "violations": est.violations_,
            }
            if writer is not None:
                writer.writerow([_fmt(record[k]) for k in fields])
            else:
                sink.write(json.dumps(record) + "\n")
    finally:
        if sink is not sys.stdout:
            sink.close()
    if checkpoint:
        with open(checkpoint, "w") as fh:
            fh.write(est.to_checkpoint())


@main.command("bench")
@click.option("--method", default="lbup", show_default=True, callback=_method_label)
@click.option("--horizon", default=100_000, show_default=True, type=int)
@click.option("--t-min", default=1000, show_default=True, type=int)
@click.option("--checkpoints", default=13, show_default=True, type=int)
@click.option("--window", default=5, show_default=True, type=int)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n", default=3, show_default=True, type=int)
@click.option("--dist", default="bern:0.5", show_default=True)
@click.option("--out", default="-", show_default=True)
@_FORMAT
def bench_cmd(method, horizon, t_min, checkpoints, window, delta, seed, n, dist, out, fmt):
    """Per-step update cost at geometric checkpoint rounds, with slopes."""
    kwargs = {"n": n} if method in ("lbup", "hybrid") else {}
    result = harness.bench(
        method, horizon=horizon, t_min=t_min, n_checkpoints=checkpoints,
        window=window, delta=delta, seed=seed, spec=dist, **kwargs,
    )
    rows = [
        {"t": c, "per_step_ns": p, "cumulative_ns": q,
         "per_step_slope": result["per_step_slope"],
         "cumulative_slope": result["cumulative_slope"]}
        for c, p, q in zip(
            result["checkpoints"], result["per_step_ns"], result["cumulative_ns"]
        )
    ]
    _emit(out, ["t", "per_step_ns", "cumulative_ns", "per_step_slope",
                "cumulative_slope"], rows, fmt)


@main.command("selftest")
def selftest_cmd():
    """Tiny end-to-end check: runs every method on a short stream."""
    values = harness.generate("beta:2,5", 64, seed=7)
    failures = []
    for method in _ALL_METHODS:
        est = make_estimator(method, delta=0.05)
        est.partial_fit(values)
        low, high = est.interval_
        ok = 0.0 <= low <= est.empirical_mean_ <= high <= 1.0
        click.echo(f"{method:7s} t={est.t_} interval=({low:.4f}, {high:.4f}) "
                   f"{'ok' if ok else 'FAIL'}")
        if not ok:
            failures.append(method)
    if failures:
        raise click.ClickException(f"selftest failed for: {', '.join(failures)}")
    click.echo("selftest passed")


if __name__ == "__main__":
    main()
