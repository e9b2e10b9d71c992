"""Experiment drivers: wealth curves, width tracks, coverage Monte Carlo,
and per-step timing benchmarks.

The coverage study never builds intervals: the sequence miscovers the true
mean exactly when the running maximum of the wealth at that mean crosses
1/delta, so it vectorizes the wealth at a single point across replicates.
On binary streams the wealth at time t depends only on (t, count), which
dedupes the work down to the unique pairs actually realized.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.special import gammaln

from . import lowerbound as lb
from .confseq import make_estimator
from .sampling import StreamSpec
from .special import DEFAULT_QUADRATURE

DEFAULT_M_GRID = np.linspace(0.001, 0.999, 512)
DEFAULT_SNAPSHOTS = (1, 5, 10, 50, 100, 500)


def generate(spec, horizon, seed, replicate=None):
    """Draw a stream from a StreamSpec or a spec string."""
    if isinstance(spec, str):
        spec = StreamSpec.parse(spec)
    return spec.draw(horizon, seed, replicate)


def resolve_method(label):
    """Split a method label into (estimator name, kwargs).

    Labels like "lbup1"/"lbup3" pin the truncation order; everything else
    passes through unchanged.
    """
    if label.startswith("lbup") and label[4:].isdigit():
        return "lbup", {"n": int(label[4:])}
    return label, {}


def wealth_curve(method, values, delta=0.05, snapshots=DEFAULT_SNAPSHOTS,
                 m_grid=None, **kwargs):
    """Log wealth over a grid of candidate means at chosen snapshot rounds.

    Returns (m_grid, {t: log_wealth_array}) for the snapshot times that lie
    within the stream.
    """
    if m_grid is None:
        m_grid = DEFAULT_M_GRID
    base, extra = resolve_method(method)
    est = make_estimator(base, delta=delta, **{**kwargs, **extra})
    est._ensure_initialized()
    wanted = sorted(set(int(t) for t in snapshots))
    curves = {}
    for i, y in enumerate(np.asarray(values, dtype=float), start=1):
        est.observe_only(y)
        if wanted and i == wanted[0]:
            curves[i] = np.asarray(est._log_wealth_batch(m_grid), dtype=float)
            wanted.pop(0)
        if not wanted:
            break
    return np.asarray(m_grid), curves


def run_widths(methods, values, delta=0.05, method_kwargs=None,
               refresh_times=()):
    """Stream the outcomes through each method, recording intervals per round.

    Returns a list of row dicts with the outcome, per-method low/high, and
    per-method cumulative elapsed nanoseconds.  refresh_times forces an
    exact refresh on estimators that batch theirs (the coin-betting one).
    """
    method_kwargs = method_kwargs or {}
    ests = {}
    for m in methods:
        base, extra = resolve_method(m)
        ests[m] = make_estimator(
            base, delta=delta, **{**method_kwargs.get(m, {}), **extra}
        )
    elapsed = {m: 0 for m in methods}
    refresh_times = set(int(t) for t in refresh_times)
    rows = []
    for i, y in enumerate(np.asarray(values, dtype=float), start=1):
        row = {"t": i, "y": float(y)}
        for name, est in ests.items():
            start = time.perf_counter_ns()
            est.update(y)
            if i in refresh_times and hasattr(est, "force_refresh"):
                est.force_refresh()
            elapsed[name] += time.perf_counter_ns() - start
            row[f"{name}_low"], row[f"{name}_high"] = est.interval_
            row[f"{name}_elapsed_ns"] = elapsed[name]
        rows.append(row)
    return rows


# -- coverage Monte Carlo ----------------------------------------------------


def _count_log_wealth(t, s, mu, alpha, beta):
    # mixture wealth from (round, count) under a Beta(alpha, beta) mixing law
    log_norm = gammaln(alpha) + gammaln(beta) - gammaln(alpha + beta)
    log_mix = gammaln(s + alpha) + gammaln(t - s + beta) - gammaln(t + alpha + beta)
    return log_mix - log_norm - s * math.log(mu) - (t - s) * math.log1p(-mu)


def _lbup_log_numerators(t_arr, s_counts, mu, order, quad, chunk=4096):
    """ln[(1-mu) Z(data side) + mu Z(mirrored side)] per (t, count) row."""
    n2 = 2 * order
    s_rows = np.column_stack([t_arr] + [s_counts] * n2).astype(float)
    out = np.empty(len(t_arr))
    for lo in range(0, len(t_arr), chunk):
        hi = min(lo + chunk, len(t_arr))
        block = s_rows[lo:hi]
        for side, m_side in ((0, mu), (1, 1.0 - mu)):
            src = block if side == 0 else block @ lb._mirror_matrix(n2 + 1).T
            delta, eta = lb._delta_params_rows(src, np.full(len(src), m_side), order)
            lz = lb.log_normalizer_batch(delta, eta, quad)
            if side == 0:
                acc = np.log1p(-mu) + lz
            else:
                acc = np.logaddexp(acc, np.log(mu) + lz)
        out[lo:hi] = acc
    return out


def _binary_miscoverage(method, counts, mu, delta, order, t_switch, quad):
    """Fraction of replicates whose running wealth at mu ever crosses 1/delta."""
    R, T = counts.shape
    t_grid = np.arange(1, T + 1, dtype=float)[None, :]
    threshold = math.log(1.0 / delta)
    if method in ("hr", "up"):
        a, b = (0.5, 0.5)
        lw = _count_log_wealth(t_grid, counts, mu, a, b)
    elif method == "lbup":
        codes = (np.arange(1, T + 1, dtype=np.int64)[None, :] * (T + 1)
                 + counts.astype(np.int64))
        uniq, inverse = np.unique(codes.ravel(), return_inverse=True)
        lw_u = _lbup_log_numerators(
            (uniq // (T + 1)).astype(float), (uniq % (T + 1)).astype(float),
            mu, order, quad,
        )
        lw = lw_u[inverse].reshape(R, T)
    elif method == "hybrid":
        lw = _count_log_wealth(t_grid, counts, mu, 1.0, 1.0)
        if T > t_switch:
            codes = (np.arange(1, T + 1, dtype=np.int64)[None, :] * (T + 1)
                     + counts.astype(np.int64))
            tail_codes = codes[:, t_switch - 1 :]
            uniq, inverse = np.unique(tail_codes.ravel(), return_inverse=True)
            num_u = _lbup_log_numerators(
                (uniq // (T + 1)).astype(float), (uniq % (T + 1)).astype(float),
                mu, order, quad,
            )
            nums = num_u[inverse].reshape(R, T - t_switch + 1)
            up_at_switch = lw[:, t_switch - 1]
            lw[:, t_switch:] = (
                up_at_switch[:, None] + nums[:, 1:] - nums[:, :1]
            )
    else:
        raise ValueError(f"coverage study does not support method {method!r}")
    running = np.maximum.accumulate(lw, axis=1)
    return float(np.mean(running[:, -1] >= threshold))


def coverage_mc(spec, methods, delta=0.05, horizon=1000, replicates=1000,
                seed=0, order=3, t_switch=50, quad=DEFAULT_QUADRATURE):
    """Miscoverage rates of the wealth-based sequences at the true mean.

    Only distribution specs with a known mean are supported; binary streams
    use the count-based fast paths.
    """
    if isinstance(spec, str):
        spec = StreamSpec.parse(spec)
    mu = spec.mean
    if mu is None:
        raise ValueError("coverage study needs a stream with a known mean")
    if spec.kind != "bern":
        raise NotImplementedError("coverage fast paths cover Bernoulli streams")
    ys = np.stack([spec.draw(horizon, seed, r) for r in range(replicates)])
    counts = np.cumsum(ys, axis=1)
    out = {}
    for m in methods:
        base, extra = resolve_method(m)
        out[m] = _binary_miscoverage(
            base, counts, mu, delta, extra.get("n", order), t_switch, quad
        )
    return out


# -- timing benchmark --------------------------------------------------------


def slope_fit(ts, values):
    """Least-squares slope of ln(values) against ln(ts)."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (ts > 0) & (values > 0)
    return float(np.polyfit(np.log(ts[keep]), np.log(values[keep]), 1)[0])


def bench(method, horizon=100_000, t_min=1000, n_checkpoints=13, window=5,
          delta=0.05, seed=0, spec="bern:0.5", **kwargs):
    """Per-step update cost at geometric checkpoint rounds.

    Outside the measurement windows the estimator only ingests outcomes;
    inside them each full update (ingest plus interval refresh) is timed.
    Returns checkpoint rounds, median per-step nanoseconds, cumulative
    elapsed nanoseconds, and the two log-log slopes.
    """
    values = generate(spec, horizon, seed)
    checkpoints = np.unique(
        np.geomspace(t_min, horizon, n_checkpoints).astype(int)
    )
    in_window = np.zeros(horizon + 1, dtype=bool)
    for c in checkpoints:
        in_window[max(1, c - window + 1) : c + 1] = True
    base, extra = resolve_method(method)
    est = make_estimator(base, delta=delta, **{**kwargs, **extra})
    est._ensure_initialized()
    window_times = {int(c): [] for c in checkpoints}
    cumulative = {}
    elapsed = 0
    next_idx = 0
    for i, y in enumerate(values, start=1):
        if in_window[i]:
            start = time.perf_counter_ns()
            est.update(y)
            dt = time.perf_counter_ns() - start
        else:
            start = time.perf_counter_ns()
            est.observe_only(y)
            dt = time.perf_counter_ns() - start
        elapsed += dt
        if next_idx < len(checkpoints) and i <= checkpoints[next_idx]:
            if in_window[i]:
                window_times[int(checkpoints[next_idx])].append(dt)
            if i == checkpoints[next_idx]:
                cumulative[int(checkpoints[next_idx])] = elapsed
                next_idx += 1
    per_step = np.array([float(np.median(window_times[int(c)])) for c in checkpoints])
    cum = np.array([float(cumulative[int(c)]) for c in checkpoints])
    return {
        "checkpoints": checkpoints.tolist(),
        "per_step_ns": per_step.tolist(),
        "cumulative_ns": cum.tolist(),
        "per_step_slope": slope_fit(checkpoints, per_step),
        "cumulative_slope": slope_fit(checkpoints, cum),
    }
