"""Horse-race confidence sequences via the Krichevsky-Trofimov mixture.

The mixture of all constant bettors under a Beta(1/2, 1/2) weighting admits
a closed-form wealth: a potential in the running outcome total alone.  That
makes every candidate mean m an O(1) evaluation, and the sublevel interval
is found by safeguarded Newton on each side of the empirical mean.
"""

from __future__ import annotations

import math

import numpy as np

from .intervals import InfeasibleSeedError
from .special import binary_entropy, log_beta
from .validation import check_delta, check_stream

_LOG_BETA_HALF = math.lgamma(0.5) * 2.0 - math.lgamma(1.0)  # ln B(1/2, 1/2)


def log_kt_potential(x, t, o1, o2):
    """Log of the KT mixture wealth after t rounds with first-horse total x.

    Equals x ln o1 + (t - x) ln o2 + ln B(x + 1/2, t - x + 1/2) - ln B(1/2, 1/2);
    x may be fractional (continuous outcomes enter through their sum).
    """
    t = int(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > t)):
        raise ValueError("x must lie in [0, t]")
    if o1 <= 0.0 or o2 <= 0.0:
        raise ValueError("odds must be positive")
    out = (
        x * math.log(o1)
        + (t - x) * math.log(o2)
        + log_beta(x + 0.5, t - x + 0.5)
        - _LOG_BETA_HALF
    )
    return float(out) if np.ndim(out) == 0 else out


def log_wealth_counts(s, t, m):
    """HR log wealth at candidate mean m from the outcome total s of t rounds.

    Vectorized over m; m entries must lie strictly inside (0, 1).
    """
    m = np.asarray(m, dtype=float)
    if np.any((m <= 0.0) | (m >= 1.0)):
        raise ValueError("m must lie in (0, 1)")
    if t == 0:
        out = np.zeros_like(m)
        return float(out) if out.ndim == 0 else out
    s = float(s)
    if not 0.0 <= s <= t:
        raise ValueError("s must lie in [0, t]")
    const = log_beta(s + 0.5, t - s + 0.5) - _LOG_BETA_HALF
    out = -s * np.log(m) - (t - s) * np.log1p(-m) + const
    return float(out) if out.ndim == 0 else out


def log_wealth(y, m):
    """HR log wealth of the stream y at candidate mean m."""
    y = check_stream(y)
    return log_wealth_counts(float(np.sum(y)), len(y), m)


def _newton_side(s, t, const, threshold, bad, good, tol):
    # Root of g(m) = -s ln m - (t-s) ln(1-m) + const - threshold, bracketed by
    # g(bad) >= 0 > g(good).  Newton step with bisection fallback.
    def g(m):
        return -s * math.log(m) - (t - s) * math.log1p(-m) + const - threshold

    def gp(m):
        return -s / m + (t - s) / (1.0 - m)

    x = 0.5 * (bad + good)
    lo, hi = min(bad, good), max(bad, good)
    for _ in range(200):
        gx = g(x)
        if gx >= 0.0:
            bad = x
        else:
            good = x
        lo, hi = min(bad, good), max(bad, good)
        if hi - lo <= tol:
            return bad
        d = gp(x)
        step_ok = d != 0.0
        if step_ok:
            x_new = x - gx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        x = x_new
    return bad


def interval(s, t, delta, tol=1e-9, eps=1e-9):
    """Sublevel interval {m : HR log wealth < ln(1/delta)} for counts (s, t).

    Seeded at the empirical mean (the exact minimizer of the wealth curve),
    clamped into (eps, 1 - eps); sides with no crossing clamp to 0 or 1.
    """
    delta = check_delta(delta)
    if t == 0:
        return 0.0, 1.0
    threshold = math.log(1.0 / delta)
    const = float(log_beta(s + 0.5, t - s + 0.5)) - _LOG_BETA_HALF
    seed = min(max(s / t, eps), 1.0 - eps)

    def lw(m):
        return -s * math.log(m) - (t - s) * math.log1p(-m) + const

    if not lw(seed) < threshold:
        raise InfeasibleSeedError(f"wealth at seed {seed} is above ln(1/delta)")
    if seed <= eps or lw(eps) < threshold:
        low = 0.0
    else:
        low = _newton_side(s, t, const, threshold, eps, seed, tol)
    if seed >= 1.0 - eps or lw(1.0 - eps) < threshold:
        high = 1.0
    else:
        high = _newton_side(s, t, const, threshold, 1.0 - eps, seed, tol)
    return low, high


def pinsker_interval(s, t, delta):
    """Closed-form superset of the HR interval via the quadratic relaxation.

    Radius sqrt(g/2) around s/t with
    g = [ln(1/delta) - t H(s/t) - ln q(s)]/t, where q(s) is the KT mixture
    mass B(s + 1/2, t - s + 1/2)/B(1/2, 1/2); g >= 0 always.
    """
    delta = check_delta(delta)
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    s = float(s)
    if not 0.0 <= s <= t:
        raise ValueError("s must lie in [0, t]")
    p = s / t
    log_q = float(log_beta(s + 0.5, t - s + 0.5)) - _LOG_BETA_HALF
    g = (math.log(1.0 / delta) - t * float(binary_entropy(p)) - log_q) / t
    r = math.sqrt(max(g, 0.0) / 2.0)
    return max(0.0, p - r), min(1.0, p + r)
