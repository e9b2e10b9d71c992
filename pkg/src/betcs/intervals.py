"""Sublevel-set interval location for log-wealth curves.

A confidence set at level delta is {m : log_wealth(m) < ln(1/delta)}.  The
helpers here locate the endpoints of the sublevel interval around a feasible
seed (the empirical mean in practice).  Wealth curves are log-convex for the
closed-form methods, but the lower-bound methods are only empirically
well-behaved, so the guarded variant scans a grid first and keeps the
contiguous feasible run containing the seed before refining the crossings.
"""

from __future__ import annotations

import math

import numpy as np


class InfeasibleSeedError(ValueError):
    """The seed itself fails the sublevel predicate; report the previous
    interval unchanged."""


def bisect_crossing(feasible, bad, good, tol):
    """Boundary between an infeasible point and a feasible point.

    feasible(m) -> bool; requires feasible(good) and not feasible(bad).
    Returns the final bad-side point, so the reported interval is never
    smaller than the true sublevel interval by more than tol.
    """
    while abs(good - bad) > tol:
        mid = 0.5 * (bad + good)
        if mid == bad or mid == good:
            break
        if feasible(mid):
            good = mid
        else:
            bad = mid
    return bad


def refine_crossing_batched(feasible_batch, bad, good, tol, points=16):
    """Like bisect_crossing but shrinking the bracket (points+1)-fold per
    round using a batched predicate (array of m -> array of bool).

    Keeps the boundary of the feasible component adjacent to good: the new
    bracket straddles the infeasible interior point closest to good.
    """
    while abs(good - bad) > tol:
        grid = np.linspace(bad, good, points + 2)
        inner = grid[1:-1]
        if inner[0] == bad or inner[-1] == good:
            break
        ok = feasible_batch(inner)
        bad_idx = np.flatnonzero(~ok)
        if bad_idx.size == 0:
            good = inner[0]
        else:
            j = bad_idx[-1]
            bad = inner[j]
            if j + 1 < len(inner):
                good = inner[j + 1]
    return bad


def find_sublevel_interval(log_wealth_at, threshold, seed, tol=1e-9, eps=1e-9):
    """Endpoints of the sublevel interval {m : log_wealth(m) < threshold}
    around seed, searching (eps, 1-eps) and clamping to 0 or 1 when no
    crossing exists on a side.  Raises InfeasibleSeedError when the seed
    itself is not below the threshold."""
    if not log_wealth_at(seed) < threshold:
        raise InfeasibleSeedError(f"log wealth at seed {seed} >= {threshold}")

    def feasible(m):
        return log_wealth_at(m) < threshold

    lo_edge = eps
    hi_edge = 1.0 - eps
    if seed <= lo_edge:
        low = 0.0
    elif feasible(lo_edge):
        low = 0.0
    else:
        low = bisect_crossing(feasible, lo_edge, seed, tol)
    if seed >= hi_edge:
        high = 1.0
    elif feasible(hi_edge):
        high = 1.0
    else:
        high = bisect_crossing(feasible, hi_edge, seed, tol)
    return low, high


def guarded_sublevel_interval(
    log_wealth_batch,
    threshold,
    seed,
    lo,
    hi,
    tol=1e-9,
    grid_points=64,
    refine_points=16,
):
    """Largest interval containing the seed inside the sublevel set, searched
    within [lo, hi] with a grid prescan on each side.

    The prescan detects excursions above the threshold between the bracket
    edge and the seed (the wealth need not be quasiconvex); the feasible run
    adjacent to the seed wins and its outer crossing is refined to tol.
    Returns (low, high) where endpoints equal lo/hi when the whole side
    stays feasible.  Raises InfeasibleSeedError when the seed fails.
    """

    def feasible_batch(ms):
        return np.asarray(log_wealth_batch(np.asarray(ms, dtype=float))) < threshold

    if not feasible_batch(np.array([seed]))[0]:
        raise InfeasibleSeedError(f"log wealth at seed {seed} >= {threshold}")

    low = lo
    if lo < seed:
        grid = np.linspace(lo, seed, grid_points)
        ok = feasible_batch(grid)
        bad_idx = np.flatnonzero(~ok[:-1])  # seed entry is feasible
        if bad_idx.size:
            i = bad_idx[-1]  # infeasible point closest to the seed
            low = refine_crossing_batched(
                feasible_batch, grid[i], grid[i + 1], tol, refine_points
            )
    high = hi
    if seed < hi:
        grid = np.linspace(seed, hi, grid_points)
        ok = feasible_batch(grid)
        bad_idx = np.flatnonzero(~ok[1:])
        if bad_idx.size:
            i = bad_idx[0] + 1  # infeasible point closest to the seed
            high = refine_crossing_batched(
                feasible_batch, grid[i], grid[i - 1], tol, refine_points
            )
    return low, high
