"""Streaming confidence sequences from betting wealth processes.

Each estimator runs a wealth process against every candidate mean and
reports the running intersection of the sublevel sets {m : wealth(m) <
1/delta}.  By Ville's inequality the whole trajectory of intervals covers
the true mean simultaneously with probability 1 - delta; intersecting
keeps the sequence monotone (intervals never widen).

The estimators follow the scikit-learn protocol: hyperparameters in
__init__, state in trailing-underscore attributes, partial_fit/update for
streaming, fit to consume a batch from scratch.
"""

from __future__ import annotations

import json
import math

import numpy as np
from sklearn.base import BaseEstimator

from . import lowerbound as lb
from .horserace import interval as hr_interval
from .horserace import log_wealth_counts
from .intervals import (
    InfeasibleSeedError,
    find_sublevel_interval,
    guarded_sublevel_interval,
)
from .portfolio import BetaPrior, PartitionPoly, up_log_wealth
from .special import DEFAULT_QUADRATURE, log_integrate_unit
from .validation import check_delta, check_stream, check_unit_value

__all__ = [
    "InfeasibleSeedError",
    "find_sublevel_interval",
    "HorseRaceCS",
    "UniversalPortfolioCS",
    "LowerBoundUPCS",
    "HybridUPCS",
    "CoinBettingCS",
    "make_estimator",
    "load_checkpoint",
]


class _BettingCS(BaseEstimator):
    """Shared streaming scaffolding for the wealth-based estimators.

    Subclasses implement _reset_state, _push(y), _log_wealth_batch(ms) and
    optionally override _round_interval for a cheaper exact refresh.
    """

    _method_name = ""
    _eps = 1e-9

    def __init__(self, delta=0.05):
        self.delta = delta

    # -- lifecycle ---------------------------------------------------------

    def _ensure_initialized(self):
        if not hasattr(self, "t_"):
            check_delta(self.delta)
            self.t_ = 0
            self.low_ = 0.0
            self.high_ = 1.0
            self.mean_sum_ = 0.0
            self.violations_ = 0
            self.empty_ = False
            self._reset_state()

    def fit(self, X, y=None):
        """Consume a batch of outcomes from scratch."""
        for attr in ("t_", "low_", "high_", "mean_sum_", "violations_", "empty_"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Consume a batch of outcomes, keeping existing state."""
        self._ensure_initialized()
        for v in check_stream(X):
            self._observe(float(v))
        self._refresh_interval()
        return self

    def update(self, y):
        """Consume one outcome and refresh the reported interval."""
        self._ensure_initialized()
        self._observe(check_unit_value(y))
        self._refresh_interval()
        return self

    def observe_only(self, y):
        """Consume one outcome without refreshing the interval (for batching)."""
        self._ensure_initialized()
        self._observe(check_unit_value(y))
        return self

    def force_refresh(self):
        """Recompute the interval now (pairs with observe_only batching)."""
        self._ensure_initialized()
        self._full_refresh()
        return self

    def _full_refresh(self):
        self._refresh_interval()

    def _observe(self, y):
        self._push(y)
        self.t_ += 1
        self.mean_sum_ += y

    # -- interval maintenance ----------------------------------------------

    @property
    def interval_(self):
        self._ensure_initialized()
        return self.low_, self.high_

    @property
    def empirical_mean_(self):
        self._ensure_initialized()
        return self.mean_sum_ / self.t_ if self.t_ else 0.5

    def _threshold(self):
        return math.log(1.0 / self.delta)

    def _seed(self):
        return min(max(self.empirical_mean_, self._eps), 1.0 - self._eps)

    def _round_interval(self):
        """This round's sublevel interval, ignoring the running intersection."""
        lo, hi = guarded_sublevel_interval(
            self._log_wealth_batch,
            self._threshold(),
            self._seed(),
            self._eps,
            1.0 - self._eps,
        )
        if lo == self._eps:
            lo = 0.0
        if hi == 1.0 - self._eps:
            hi = 1.0
        return lo, hi

    def _refresh_interval(self):
        if self.t_ == 0:
            return
        if self.empty_:
            return
        seed = self._seed()
        lo_bound = max(self.low_, self._eps)
        hi_bound = min(self.high_, 1.0 - self._eps)
        if lo_bound <= seed <= hi_bound and lo_bound < hi_bound:
            try:
                lo, hi = guarded_sublevel_interval(
                    self._log_wealth_batch,
                    self._threshold(),
                    seed,
                    lo_bound,
                    hi_bound,
                )
                lo = self.low_ if lo == lo_bound else lo
                hi = self.high_ if hi == hi_bound else hi
                self.low_, self.high_ = lo, hi
                return
            except InfeasibleSeedError:
                pass
        # seed fell outside, or was rejected: intersect a full-bracket interval
        try:
            lo, hi = self._round_interval()
        except InfeasibleSeedError:
            self.violations_ += 1
            return
        new_lo = max(self.low_, lo)
        new_hi = min(self.high_, hi)
        if new_lo > new_hi:
            self.violations_ += 1
            point = min(max(self._seed(), self.low_), self.high_)
            self.low_ = self.high_ = point
            self.empty_ = True
            return
        self.low_, self.high_ = new_lo, new_hi

    # -- checkpointing -------------------------------------------------------

    def to_checkpoint(self):
        """JSON string capturing hyperparameters and streaming state."""
        self._ensure_initialized()
        return json.dumps(
            {
                "method": self._method_name,
                "delta": self.delta,
                "t": self.t_,
                "low": self.low_,
                "high": self.high_,
                "mean_sum": self.mean_sum_,
                "violations": self.violations_,
                "empty": self.empty_,
                "state": self._state_record(),
            }
        )

    @classmethod
    def from_checkpoint(cls, text):
        data = json.loads(text)
        est = make_estimator(data["method"], delta=data["delta"])
        est._ensure_initialized()
        est.t_ = int(data["t"])
        est.low_ = float(data["low"])
        est.high_ = float(data["high"])
        est.mean_sum_ = float(data["mean_sum"])
        est.violations_ = int(data["violations"])
        est.empty_ = bool(data["empty"])
        est._load_state(data["state"])
        return est

    # subclass hooks

    def _reset_state(self):
        raise NotImplementedError

    def _push(self, y):
        raise NotImplementedError

    def _log_wealth_batch(self, ms):
        raise NotImplementedError

    def _state_record(self):
        raise NotImplementedError

    def _load_state(self, record):
        raise NotImplementedError


class HorseRaceCS(_BettingCS):
    """Mixture bettor on binary outcomes; fractional outcomes enter through
    their sum, matching the closed-form count-based wealth."""

    _method_name = "hr"

    def _reset_state(self):
        self._sum = 0.0

    def _push(self, y):
        self._sum += y

    def _log_wealth_batch(self, ms):
        return log_wealth_counts(self._sum, self.t_, ms)

    def _round_interval(self):
        return hr_interval(self._sum, self.t_, self.delta, eps=self._eps)

    def _refresh_interval(self):
        # the count-based interval has a cheap Newton solve; always use it
        if self.t_ == 0 or self.empty_:
            return
        try:
            lo, hi = self._round_interval()
        except InfeasibleSeedError:
            self.violations_ += 1
            return
        new_lo = max(self.low_, lo)
        new_hi = min(self.high_, hi)
        if new_lo > new_hi:
            self.violations_ += 1
            point = min(max(self._seed(), self.low_), self.high_)
            self.low_ = self.high_ = point
            self.empty_ = True
            return
        self.low_, self.high_ = new_lo, new_hi

    def _state_record(self):
        return {"sum": self._sum}

    def _load_state(self, record):
        self._sum = float(record["sum"])


class UniversalPortfolioCS(_BettingCS):
    """Beta-mixture portfolio over constant bets, exact via the partition
    polynomial; per-round cost grows linearly with the stream."""

    _method_name = "up"

    def __init__(self, delta=0.05, alpha=0.5, beta=0.5):
        super().__init__(delta=delta)
        self.alpha = alpha
        self.beta = beta

    def _reset_state(self):
        self._poly = PartitionPoly()
        self._prior = BetaPrior(self.alpha, self.beta)

    def _push(self, y):
        self._poly.push(y)

    def _log_wealth_batch(self, ms):
        return np.atleast_1d(up_log_wealth(self._poly, ms, self._prior))

    def _state_record(self):
        return {
            "coeffs": list(self._poly.coeffs),
            "log_offset": self._poly.log_offset,
            "alpha": self.alpha,
            "beta": self.beta,
        }

    def _load_state(self, record):
        self.alpha = float(record["alpha"])
        self.beta = float(record["beta"])
        self._poly = PartitionPoly(record["coeffs"], record["log_offset"])
        self._prior = BetaPrior(self.alpha, self.beta)


class LowerBoundUPCS(_BettingCS):
    """Constant-memory envelope under the portfolio wealth; per-round cost
    is independent of the stream length."""

    _method_name = "lbup"
    _eps = 1e-4

    def __init__(self, delta=0.05, n=3, quad=DEFAULT_QUADRATURE):
        super().__init__(delta=delta)
        self.n = n
        self.quad = quad

    def _reset_state(self):
        self._acc = lb.MomentAccumulator(self.n)

    def _push(self, y):
        self._acc.push(y)

    def _log_wealth_batch(self, ms):
        return lb.lbup_log_wealth_batch(self._acc.s, self._acc.order, ms, None, self.quad)

    def _state_record(self):
        return lb.accumulator_record(self._acc)

    def _load_state(self, record):
        self.n = int(record["n"])
        self._acc = lb.accumulator_from_record(record)


class HybridUPCS(_BettingCS):
    """Exact portfolio until t_switch rounds, envelope growth afterwards.

    The flat prior keeps the post-switch wealth at or above the pure
    envelope's, so the hybrid inherits its guarantees while the early
    rounds stay exact.
    """

    _method_name = "hybrid"
    _eps = 1e-4

    def __init__(self, delta=0.05, n=3, t_switch=50, alpha=1.0, beta=1.0, quad=DEFAULT_QUADRATURE):
        super().__init__(delta=delta)
        self.n = n
        self.t_switch = t_switch
        self.alpha = alpha
        self.beta = beta
        self.quad = quad

    def _reset_state(self):
        self._poly = PartitionPoly()
        self._prior = BetaPrior(self.alpha, self.beta)
        self._acc = lb.MomentAccumulator(self.n)
        self._switch_acc = None

    def _push(self, y):
        self._acc.push(y)
        if self.t_ < self.t_switch:
            self._poly.push(y)
            if self.t_ + 1 == self.t_switch:
                self._switch_acc = self._acc.copy()

    def _log_wealth_batch(self, ms):
        if self.t_ <= self.t_switch:
            return np.atleast_1d(up_log_wealth(self._poly, ms, self._prior))
        return lb.hybrid_log_wealth_batch(
            self._poly, self._prior, self._acc.s, self._switch_acc.s,
            self._acc.order, ms, self.quad,
        )

    def _state_record(self):
        switch_s = None if self._switch_acc is None else [float(v) for v in self._switch_acc.s]
        return {
            "n": self.n,
            "t": self.t_,
            "s": [float(v) for v in self._acc.s],
            "t_UP": self.t_switch,
            "up_snapshot": {
                "coeffs": list(self._poly.coeffs),
                "log_offset": self._poly.log_offset,
                "alpha": self.alpha,
                "beta": self.beta,
                "s": switch_s,
            },
        }

    def _load_state(self, record):
        self.n = int(record["n"])
        self.t_switch = int(record["t_UP"])
        self._acc = lb.accumulator_from_record(record)
        snap = record["up_snapshot"]
        self.alpha = float(snap["alpha"])
        self.beta = float(snap["beta"])
        self._poly = PartitionPoly(snap["coeffs"], snap["log_offset"])
        self._prior = BetaPrior(self.alpha, self.beta)
        self._switch_acc = (
            None
            if snap["s"] is None
            else lb.MomentAccumulator(self.n, np.asarray(snap["s"], dtype=float))
        )


class CoinBettingCS(_BettingCS):
    """Beta mixture over constant coin bets on the shifted outcomes.

    The per-round gain at bet fraction b is 1 + (2b - 1)(y - m); the mixture
    integral over b is concave in log (a sum of logs of affine functions),
    so the adaptive integrator resolves its single peak reliably at O(t)
    per panel.  An evaluation still costs O(t), so the interval is
    refreshed exactly only every _refresh_every rounds (and on
    force_refresh); in between, the stored endpoints are tightened by a
    few bisection steps, which keeps them conservative and the sequence
    monotone.
    """

    _method_name = "cb"
    _refresh_every = 64
    _incremental_steps = 8

    def __init__(self, delta=0.05, alpha=1.0, beta=1.0, quad=DEFAULT_QUADRATURE):
        super().__init__(delta=delta)
        self.alpha = alpha
        self.beta = beta
        self.quad = quad

    def _reset_state(self):
        self._ys = []
        self._prior = BetaPrior(self.alpha, self.beta)

    def _push(self, y):
        self._ys.append(y)

    def _log_wealth_batch(self, ms):
        ms = np.atleast_1d(np.asarray(ms, dtype=float))
        ys = np.asarray(self._ys)
        a, b = self._prior.alpha, self._prior.beta
        log_norm = self._prior._log_norm
        out = np.empty(len(ms))
        for i, m in enumerate(ms):
            d = ys - m

            def lf_vec(bs, d=d):
                bs = np.atleast_1d(np.asarray(bs, dtype=float))
                lam = 2.0 * bs - 1.0
                v = np.log1p(np.multiply.outer(lam, d)).sum(axis=-1)
                if a != 1.0:
                    v = v + (a - 1.0) * np.log(bs)
                if b != 1.0:
                    v = v + (b - 1.0) * np.log1p(-bs)
                return v - log_norm

            out[i] = log_integrate_unit(
                lambda x, f=lf_vec: float(f(x)[0]), self.quad, log_f_vec=lf_vec
            )
        return out

    def _feasible(self, m):
        return float(self._log_wealth_batch(np.array([m]))[0]) < self._threshold()

    def _full_refresh(self):
        super()._refresh_interval()

    def _refresh_interval(self):
        if self.t_ == 0 or self.empty_:
            return
        if self.t_ <= self._refresh_every or self.t_ % self._refresh_every == 0:
            super()._refresh_interval()
            return
        # cheap incremental tightening: bisect each stored endpoint toward
        # the (feasible) empirical mean for a bounded number of steps
        seed = self._seed()
        if not (self.low_ <= seed <= self.high_) or not self._feasible(seed):
            super()._refresh_interval()
            return
        lo, hi = max(self.low_, self._eps), min(self.high_, 1.0 - self._eps)
        if lo < seed and not self._feasible(lo):
            good = seed
            for _ in range(self._incremental_steps):
                mid = 0.5 * (lo + good)
                if self._feasible(mid):
                    good = mid
                else:
                    lo = mid
            self.low_ = lo
        if hi > seed and not self._feasible(hi):
            good = seed
            for _ in range(self._incremental_steps):
                mid = 0.5 * (good + hi)
                if self._feasible(mid):
                    good = mid
                else:
                    hi = mid
            self.high_ = hi

    def _state_record(self):
        return {"ys": list(map(float, self._ys)), "alpha": self.alpha, "beta": self.beta}

    def _load_state(self, record):
        self.alpha = float(record["alpha"])
        self.beta = float(record["beta"])
        self._ys = [float(v) for v in record["ys"]]
        self._prior = BetaPrior(self.alpha, self.beta)


_METHODS = {
    "hr": HorseRaceCS,
    "up": UniversalPortfolioCS,
    "lbup": LowerBoundUPCS,
    "hybrid": HybridUPCS,
    "cb": CoinBettingCS,
}


def make_estimator(method, delta=0.05, **kwargs):
    """Build an estimator by short method name: hr, up, lbup, hybrid, cb."""
    try:
        cls = _METHODS[method]
    except KeyError:
        raise ValueError(
            f"unknown method {method!r}; expected one of {sorted(_METHODS)}"
        ) from None
    return cls(delta=delta, **kwargs)


def load_checkpoint(text):
    """Rebuild any estimator from its to_checkpoint JSON."""
    return _BettingCS.from_checkpoint(text)
