"""Exact universal portfolio over constant bettors with a Beta prior.

The mixture wealth over all constant bet fractions only depends on the
stream through a partition polynomial: coefficient k is the total product
weight the stream assigns to "k first-horse wins" patterns.  One O(t)
recursion per round maintains it, after which the wealth at any candidate
mean is a single log-sum over k.
"""

from __future__ import annotations

import math

import numpy as np

from .intervals import find_sublevel_interval
from .special import log_beta
from .validation import check_delta, check_unit_value


class BetaPrior:
    """Beta(alpha, beta) prior over the constant bet fraction."""

    def __init__(self, alpha=0.5, beta=0.5):
        if alpha <= 0.0 or beta <= 0.0:
            raise ValueError("prior parameters must be positive")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self._log_norm = float(log_beta(self.alpha, self.beta))

    def log_moment(self, k, t):
        """ln of the prior mean of b^k (1-b)^(t-k); vectorized over k."""
        k = np.asarray(k, dtype=float)
        t = float(t)
        if np.any((k < 0) | (k > t)):
            raise ValueError("k must lie in [0, t]")
        out = log_beta(k + self.alpha, t - k + self.beta) - self._log_norm
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"BetaPrior({self.alpha:g}, {self.beta:g})"


class PartitionPoly:
    """Product weights of a [0, 1] stream over win-count classes.

    coeffs[k] after t rounds is the sum over all k-subsets S of rounds of
    prod_{i in S} y_i * prod_{i not in S} (1 - y_i).  The coefficients sum
    to one and their first moment is the stream total; a log offset guards
    the (defensive) underflow rescue, so true coefficients are
    coeffs * exp(log_offset).
    """

    __slots__ = ("coeffs", "log_offset")

    _RESCALE_FLOOR = 1e-300

    def __init__(self, coeffs=None, log_offset=0.0):
        if coeffs is None:
            coeffs = np.array([1.0])
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.log_offset = float(log_offset)

    @property
    def t(self):
        return len(self.coeffs) - 1

    def push(self, y):
        """Absorb one outcome (in place)."""
        y = check_unit_value(y)
        c = self.coeffs
        new = np.zeros(len(c) + 1)
        new[1:] = y * c
        new[:-1] += (1.0 - y) * c
        mx = new.max()
        if 0.0 < mx < self._RESCALE_FLOOR:
            self.log_offset += math.log(mx)
            new /= mx
        self.coeffs = new
        return self

    def copy(self):
        return PartitionPoly(self.coeffs.copy(), self.log_offset)


def poly_update(poly, y):
    """Functional form of PartitionPoly.push: returns a new polynomial."""
    return poly.copy().push(y)


def poly_identities(poly):
    """(total mass, first moment) of the true coefficients.

    The total is 1 and the first moment is the stream sum, up to float error.
    """
    scale = math.exp(poly.log_offset)
    k = np.arange(len(poly.coeffs))
    return scale * float(poly.coeffs.sum()), scale * float((k * poly.coeffs).sum())


def up_log_wealth(poly, m, prior=None):
    """Portfolio log wealth at candidate mean(s) m.

    Vectorized over m.  Zero coefficients are skipped, so ln 0 is never
    formed; binary streams keep a single surviving class.
    """
    if prior is None:
        prior = BetaPrior(0.5, 0.5)
    t = poly.t
    m_arr = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any((m_arr <= 0.0) | (m_arr >= 1.0)):
        raise ValueError("m must lie in (0, 1)")
    if t == 0:
        out = np.zeros_like(m_arr)
        return float(out[0]) if np.ndim(m) == 0 else out
    mask = poly.coeffs > 0.0
    k = np.flatnonzero(mask).astype(float)
    base = np.log(poly.coeffs[mask]) + poly.log_offset + prior.log_moment(k, t)
    z = base - np.outer(np.log(m_arr), k) - np.outer(np.log1p(-m_arr), t - k)
    mx = z.max(axis=-1, keepdims=True)
    out = np.squeeze(mx, -1) + np.log(np.sum(np.exp(z - mx), axis=-1))
    return float(out[0]) if np.ndim(m) == 0 else out


def up_round_interval(poly, delta, prior=None, tol=1e-9, eps=1e-9):
    """Single-round sublevel interval of the portfolio wealth.

    The anytime-valid sequence is the running intersection of these across
    rounds; the seed is the empirical mean read off the polynomial.
    """
    delta = check_delta(delta)
    if poly.t == 0:
        return 0.0, 1.0
    total, first = poly_identities(poly)
    seed = min(max(first / total / poly.t, eps), 1.0 - eps)
    threshold = math.log(1.0 / delta)
    return find_sublevel_interval(
        lambda m: up_log_wealth(poly, m, prior), threshold, seed, tol=tol, eps=eps
    )
