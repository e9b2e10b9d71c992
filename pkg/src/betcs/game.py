"""Two-horse-race betting games.

A candidate mean m prices the two horses at odds (1/m, 1/(1-m)); an outcome
y in [0, 1] pays the odds vector (y/m, (1-y)/(1-m)).  A bettor splitting
wealth (b, 1-b) multiplies its capital by b y/m + (1-b)(1-y)/(1-m) each
round.  This module provides the per-strategy wealth arithmetic, hindsight
benchmarks, the Krichevsky-Trofimov bettor, and wealth tables with the
achievability certificate that characterizes which wealth profiles some
causal strategy can realize.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .special import binary_entropy
from .validation import (
    check_bet_fraction,
    check_mean_candidate,
    check_stream,
    check_unit_value,
)


class IncompleteTableError(ValueError):
    """A wealth table is missing some outcome sequence up to its horizon."""


class DegenerateWealthError(ValueError):
    """Strategy extraction hit a state with zero achievable wealth."""


def race_odds(m):
    """Odds pair (1/m, 1/(1-m)) for candidate mean m."""
    m = check_mean_candidate(m)
    return 1.0 / m, 1.0 / (1.0 - m)


def constant_bettor_log_wealth(y, m, b):
    """Log wealth of the constant bettor b after the whole stream y.

    Returns -inf when some round's gain is exactly zero (the bettor is
    ruined); gains are never negative.
    """
    y = check_stream(y)
    m = check_mean_candidate(m)
    b = check_bet_fraction(b)
    gains = b * y / m + (1.0 - b) * (1.0 - y) / (1.0 - m)
    if np.any(gains == 0.0):
        return -math.inf
    return float(np.sum(np.log(gains)))


def best_hindsight_log_wealth(s, t, o1, o2):
    """Log wealth of the best constant bettor chosen in hindsight.

    s is the (possibly fractional) total of first-horse outcomes among t
    rounds; equals s ln o1 + (t-s) ln o2 - t H(s/t) with H the binary
    entropy.
    """
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    s = float(s)
    if not 0.0 <= s <= t:
        raise ValueError("s must lie in [0, t]")
    if o1 <= 0.0 or o2 <= 0.0:
        raise ValueError("odds must be positive")
    return s * math.log(o1) + (t - s) * math.log(o2) - t * binary_entropy(s / t)


def kt_bet(prior_sum, t):
    """Krichevsky-Trofimov bet for round t given the sum of prior outcomes.

    b_t = (prior_sum + 1/2) / t, where prior_sum adds the first t-1
    outcomes (fractional outcomes allowed).
    """
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    prior_sum = float(prior_sum)
    if not 0.0 <= prior_sum <= t - 1:
        raise ValueError("prior_sum must lie in [0, t-1]")
    return (prior_sum + 0.5) / t


def simulate_strategy_wealth(bets, y, m):
    """Cumulative log-wealth curve of a causal strategy on stream y.

    bets is a callable receiving the prefix y[:i] (i = 0, 1, ...) and
    returning the fraction wagered on the first horse for round i+1.
    Returns an array of length len(y); entry i is the log wealth after
    round i+1.  A zero-gain round makes the remainder of the curve -inf.
    """
    y = check_stream(y)
    m = check_mean_candidate(m)
    curve = np.empty(len(y))
    log_w = 0.0
    for i, yi in enumerate(y):
        b = check_bet_fraction(bets(y[:i]), name="bets(prefix)")
        gain = b * yi / m + (1.0 - b) * (1.0 - yi) / (1.0 - m)
        log_w = -math.inf if gain == 0.0 else log_w + math.log(gain)
        curve[i] = log_w
    return curve


def kt_strategy():
    """Bets callable implementing the KT rule, for simulate_strategy_wealth."""
    return lambda prefix: kt_bet(float(np.sum(prefix)), len(prefix) + 1)


def cb_transform(y, m):
    """Coin-betting reduction: outcome (1 - y + m)/2 at fixed even odds.

    Returns (c, (2.0, 2.0)).  The per-round gain b(1-y+m) + (1-b)(1+y-m)
    equals 2 b c + 2 (1-b)(1-c), i.e. a race at odds (2, 2) on outcome c.
    """
    y = check_unit_value(y)
    m = check_mean_candidate(m)
    return (1.0 - y + m) / 2.0, (2.0, 2.0)


@dataclass
class AchievabilityReport:
    a1_ok: bool
    a2_ok: bool
    worst_violation: float


class WealthTable:
    """Target wealth values on every basis outcome sequence up to a horizon.

    Keys are tuples of winner indices j in range(K); the wealth the table
    assigns to a sequence is the value a strategy should reach when those
    basis outcomes (odds o_j on the winner, zero elsewhere) occur.  An
    optional scalar potential extends the table to fractional last outcomes
    for K = 2: psi(t, x) with x the running total of first-horse outcomes.
    """

    def __init__(self, odds, horizon, values, interior_potential=None):
        odds = tuple(float(o) for o in odds)
        if len(odds) < 2 or any(o <= 0.0 for o in odds):
            raise ValueError("odds must be >= 2 positive entries")
        horizon = int(horizon)
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if interior_potential is not None and len(odds) != 2:
            raise ValueError("interior potential only makes sense for K = 2")
        self.odds = odds
        self.horizon = horizon
        self.values = dict(values)
        self.interior_potential = interior_potential
        self._check_complete()

    @classmethod
    def from_potential(cls, potential, odds, horizon):
        """Build a K = 2 table from a scalar potential psi(t, first_horse_sum)."""
        values = {(): float(potential(0, 0.0))}
        for t in range(1, horizon + 1):
            for key in itertools.product(range(2), repeat=t):
                x = float(key.count(0))
                values[key] = float(potential(t, x))
        return cls(odds, horizon, values, interior_potential=potential)

    def _check_complete(self):
        k = len(self.odds)
        for t in range(self.horizon + 1):
            expected = k**t
            seen = sum(1 for key in self.values if len(key) == t)
            if seen != expected:
                raise IncompleteTableError(
                    f"length-{t} sequences: have {seen}, need {expected}"
                )
        for key, v in self.values.items():
            if len(key) > self.horizon:
                raise IncompleteTableError(f"key {key} exceeds horizon")
            if not (v >= 0.0) or math.isinf(v):
                raise ValueError(f"wealth values must be finite and >= 0, got {v}")

    def prefixes(self, length):
        return itertools.product(range(len(self.odds)), repeat=length)


def check_achievability(table, c_grid=None, tol=1e-12):
    """Certify the two inequalities characterizing achievable wealth.

    Budget: for every prefix, the odds-discounted children must not exceed
    the parent: sum_j psi(prefix + j)/o_j <= psi(prefix).  Interior: for
    K = 2 tables with a scalar potential, mixing the two basis children must
    dominate the potential at the mixed outcome on a grid of interior
    points.  worst_violation is the largest signed excess (<= 0 means both
    certificates hold everywhere).
    """
    if c_grid is None:
        c_grid = np.linspace(0.1, 0.9, 9)
    odds = table.odds
    worst = -math.inf
    a1_ok = True
    for t in range(1, table.horizon + 1):
        for pre in table.prefixes(t - 1):
            parent = table.values[pre]
            budget = sum(
                table.values[pre + (j,)] / odds[j] for j in range(len(odds))
            )
            viol = budget - parent
            worst = max(worst, viol)
            if viol > tol:
                a1_ok = False

    a2_ok = True
    if table.interior_potential is not None:
        pot = table.interior_potential
        for t in range(1, table.horizon + 1):
            for pre in table.prefixes(t - 1):
                x = float(pre.count(0))
                up = table.values[pre + (0,)]
                down = table.values[pre + (1,)]
                for c in c_grid:
                    mixed = float(pot(t, x + c))
                    viol = mixed - (c * up + (1.0 - c) * down)
                    worst = max(worst, viol)
                    if viol > tol:
                        a2_ok = False
    return AchievabilityReport(a1_ok=a1_ok, a2_ok=a2_ok, worst_violation=worst)


def strategy_from_wealth(table):
    """Extract the causal betting strategy that realizes an achievable table.

    Returns a callable mapping a basis prefix (tuple of winner indices) to
    the bet vector for the next round.  Each asset gets at least its
    discounted child-to-parent wealth ratio; any slack left by a strict
    budget inequality is allocated proportionally, i.e. the ratios are
    renormalized to sum to one.
    """
    odds = table.odds

    def bets(prefix):
        prefix = tuple(prefix)
        if len(prefix) >= table.horizon:
            raise ValueError("prefix is already at the horizon")
        parent = table.values[prefix]
        if parent <= 0.0:
            raise DegenerateWealthError(f"zero wealth at prefix {prefix}")
        lower = np.array(
            [table.values[prefix + (j,)] / (odds[j] * parent) for j in range(len(odds))]
        )
        total = lower.sum()
        if total <= 0.0:
            raise DegenerateWealthError(f"all children have zero wealth at {prefix}")
        if total > 1.0 + 1e-9:
            raise ValueError("table violates the budget inequality; run "
                             "check_achievability first")
        return lower / total

    return bets
