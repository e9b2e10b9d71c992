"""Tests for the streaming confidence-sequence estimators.

Covers the scikit-learn protocol (fit/partial_fit/update, get_params,
clone), the running-intersection invariants, cross-method interval
relations (count-based equivalence, envelope nesting, hybrid switching),
the coin-betting mixture against an independent portfolio-identity
oracle, and checkpoint round trips with non-default hyperparameters.
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone

from betcs.confseq import (
    CoinBettingCS,
    HorseRaceCS,
    HybridUPCS,
    LowerBoundUPCS,
    UniversalPortfolioCS,
    load_checkpoint,
    make_estimator,
)
from betcs.horserace import interval as hr_interval
from betcs.portfolio import BetaPrior, PartitionPoly, up_log_wealth

ALL_METHODS = ("hr", "up", "lbup", "hybrid", "cb")
# an exact coin-betting refresh costs a root search over O(t) quadratures,
# so per-round-update loops parametrize over the cheap methods and the
# coin bettor gets dedicated tests with sparser refresh points
FAST_METHODS = ("hr", "up", "lbup", "hybrid")

# Even-odds coin-betting mixture log wealth for the stream
# default_rng(8).beta(10, 10, 2000) at m = 0.3, evaluated by 40-digit
# quadrature (mpmath.quad on the log-sum-exp-shifted integrand).  The
# partition-polynomial identity is exact algebra but numerically unusable
# at this length (coefficient underflow), so the long-horizon check pins
# this value instead.
CB_LOG_WEALTH_T2000 = 350.23732799962266


def beta_stream(t, a=2.0, b=5.0, seed=0):
    return np.random.default_rng(seed).beta(a, b, t)


def binary_stream(t, p=0.4, seed=1):
    return np.random.default_rng(seed).binomial(1, p, t).astype(float)


def cb_log_wealth_via_portfolio(ys, m, alpha=1.0, beta=1.0):
    """Independent route for the coin-betting mixture wealth.

    The per-round gain 1 + (2b - 1)(y - m) equals the two-horse race gain
    at fair odds (2, 2) on the shifted outcome x = (1 + y - m) / 2, so the
    Beta mixture over bet fractions is the portfolio wealth of the shifted
    stream evaluated at candidate mean one half.
    """
    poly = PartitionPoly()
    for y in ys:
        poly.push((1.0 + float(y) - m) / 2.0)
    return up_log_wealth(poly, 0.5, BetaPrior(alpha, beta))


class TestEstimatorProtocol:
    def test_make_estimator_dispatch(self):
        assert isinstance(make_estimator("hr"), HorseRaceCS)
        assert isinstance(make_estimator("up"), UniversalPortfolioCS)
        assert isinstance(make_estimator("lbup"), LowerBoundUPCS)
        assert isinstance(make_estimator("hybrid"), HybridUPCS)
        assert isinstance(make_estimator("cb"), CoinBettingCS)

    def test_make_estimator_unknown_method(self):
        with pytest.raises(ValueError, match="unknown method"):
            make_estimator("martingale")

    def test_make_estimator_forwards_kwargs(self):
        est = make_estimator("lbup", delta=0.1, n=1)
        assert est.delta == 0.1
        assert est.n == 1
        est = make_estimator("hybrid", t_switch=10)
        assert est.t_switch == 10

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_initial_interval_is_unit(self, method):
        est = make_estimator(method)
        assert est.interval_ == (0.0, 1.0)
        assert est.empirical_mean_ == 0.5
        assert est.t_ == 0

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_clone_copies_hyperparameters_only(self, method):
        est = make_estimator(method, delta=0.1)
        est.partial_fit(beta_stream(10))
        twin = clone(est)
        assert twin.delta == 0.1
        assert not hasattr(twin, "t_")

    def test_get_set_params_round_trip(self):
        est = UniversalPortfolioCS(delta=0.02, alpha=2.0, beta=3.0)
        params = est.get_params()
        assert params["delta"] == 0.02
        assert params["alpha"] == 2.0
        assert params["beta"] == 3.0
        est.set_params(alpha=1.5)
        assert est.get_params()["alpha"] == 1.5

    def test_fit_resets_previous_state(self):
        y1 = beta_stream(25, seed=3)
        y2 = beta_stream(25, seed=4)
        est = UniversalPortfolioCS(delta=0.05)
        est.fit(y1)
        est.fit(y2)
        fresh = UniversalPortfolioCS(delta=0.05).fit(y2)
        assert est.t_ == 25
        assert est.interval_ == fresh.interval_
        assert est.mean_sum_ == fresh.mean_sum_

    def test_partial_fit_accumulates(self):
        ys = beta_stream(40, seed=5)
        two_stage = UniversalPortfolioCS(delta=0.05)
        two_stage.partial_fit(ys[:20]).partial_fit(ys[20:])
        one_shot = UniversalPortfolioCS(delta=0.05).fit(ys)
        assert two_stage.t_ == 40
        # the extra mid-stream refresh can only shrink the intersection
        assert two_stage.low_ >= one_shot.low_ - 1e-7
        assert two_stage.high_ <= one_shot.high_ + 1e-7

    def test_update_validates_values(self):
        est = HorseRaceCS(delta=0.05)
        with pytest.raises(ValueError):
            est.update(1.5)
        with pytest.raises(TypeError):
            est.update("0.3")

    def test_fit_validates_stream_shape(self):
        est = HorseRaceCS(delta=0.05)
        with pytest.raises(ValueError):
            est.fit(np.zeros((3, 2)))

    def test_invalid_delta_raises_on_first_use(self):
        est = HorseRaceCS(delta=0.0)
        with pytest.raises(ValueError):
            est.update(0.5)

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_delta_one_completes(self, method):
        est = make_estimator(method, delta=1.0)
        for y in binary_stream(10, p=0.5, seed=9):
            est.update(y)
        low, high = est.interval_
        assert 0.0 <= low <= high <= 1.0


class TestIntervalInvariants:
    @pytest.mark.parametrize("method", FAST_METHODS)
    def test_never_widens_continuous(self, method):
        est = make_estimator(method, delta=0.05)
        lows, highs = [], []
        for y in beta_stream(80, seed=11):
            est.update(y)
            lows.append(est.low_)
            highs.append(est.high_)
        assert np.all(np.diff(lows) >= 0)
        assert np.all(np.diff(highs) <= 0)
        assert est.violations_ == 0
        assert not est.empty_

    @pytest.mark.parametrize("method", FAST_METHODS)
    def test_never_widens_binary(self, method):
        est = make_estimator(method, delta=0.05)
        lows, highs = [], []
        for y in binary_stream(80, p=0.3, seed=12):
            est.update(y)
            lows.append(est.low_)
            highs.append(est.high_)
        assert np.all(np.diff(lows) >= 0)
        assert np.all(np.diff(highs) <= 0)
        assert est.violations_ == 0

    @pytest.mark.parametrize("method", FAST_METHODS)
    def test_contains_empirical_mean(self, method):
        est = make_estimator(method, delta=0.05)
        for y in beta_stream(60, seed=13):
            est.update(y)
            assert est.low_ <= est.empirical_mean_ <= est.high_

    @pytest.mark.parametrize("method", FAST_METHODS)
    def test_covers_true_mean_along_stream(self, method):
        p = 0.3
        est = make_estimator(method, delta=0.05)
        for y in binary_stream(150, p=p, seed=14):
            est.update(y)
            assert est.low_ <= p <= est.high_

    def test_coin_betting_stream_invariants(self):
        # refresh every fifth round (and per round past the exact-refresh
        # cadence, exercising the incremental path); the endpoint sequence
        # must stay monotone and keep both means covered at every refresh
        p = 0.3
        ys = binary_stream(70, p=p, seed=14)
        est = CoinBettingCS(delta=0.05)
        lows, highs = [], []
        for t, y in enumerate(ys, start=1):
            if t % 5 == 0 or t > 64:
                est.update(y)
                lows.append(est.low_)
                highs.append(est.high_)
                assert est.low_ <= est.empirical_mean_ <= est.high_
                assert est.low_ <= p <= est.high_
            else:
                est.observe_only(y)
        assert np.all(np.diff(lows) >= 0)
        assert np.all(np.diff(highs) <= 0)
        assert est.violations_ == 0
        assert not est.empty_


class TestMethodRelations:
    def test_hr_matches_count_interval_intersection(self):
        ys = binary_stream(60, p=0.35, seed=21)
        est = HorseRaceCS(delta=0.05)
        s = 0.0
        low, high = 0.0, 1.0
        for t, y in enumerate(ys, start=1):
            s += y
            lo, hi = hr_interval(s, t, 0.05)
            low, high = max(low, lo), min(high, hi)
            est.update(y)
            assert est.interval_ == (low, high)

    def test_hr_matches_count_interval_continuous(self):
        ys = beta_stream(40, seed=22)
        est = HorseRaceCS(delta=0.05)
        s = 0.0
        low, high = 0.0, 1.0
        for t, y in enumerate(ys, start=1):
            s += y
            lo, hi = hr_interval(s, t, 0.05)
            low, high = max(low, lo), min(high, hi)
            est.update(y)
            assert est.interval_ == (low, high)

    def test_up_equals_hr_on_binary(self):
        ys = binary_stream(40, p=0.45, seed=23)
        up = UniversalPortfolioCS(delta=0.05)
        hr = HorseRaceCS(delta=0.05)
        for y in ys:
            up.update(y)
            hr.update(y)
            assert_allclose(up.interval_, hr.interval_, rtol=0, atol=5e-8)

    def test_lbup_interval_contains_flat_up_interval(self):
        ys = beta_stream(60, seed=24)
        for n in (1, 3):
            lbup = LowerBoundUPCS(delta=0.05, n=n)
            up = UniversalPortfolioCS(delta=0.05, alpha=1.0, beta=1.0)
            for y in ys:
                lbup.update(y)
                up.update(y)
                assert lbup.low_ <= up.low_ + 5e-8
                assert lbup.high_ >= up.high_ - 5e-8

    def test_hybrid_equals_flat_up_before_switch(self):
        ys = beta_stream(15, a=2.0, b=2.0, seed=25)
        hybrid = HybridUPCS(delta=0.05, n=2, t_switch=15)
        up = UniversalPortfolioCS(delta=0.05, alpha=1.0, beta=1.0)
        for y in ys:
            hybrid.update(y)
            up.update(y)
            # identical wealth; the hybrid clamps its search at a coarser
            # floor, so endpoints can differ by up to that clamp width
            assert_allclose(hybrid.interval_, up.interval_, rtol=0, atol=2e-4)

    def test_hybrid_interval_nests_inside_envelope(self):
        ys = beta_stream(60, seed=26)
        hybrid = HybridUPCS(delta=0.05, n=2, t_switch=20)
        lbup = LowerBoundUPCS(delta=0.05, n=2)
        for y in ys:
            hybrid.update(y)
            lbup.update(y)
        assert hybrid.low_ >= lbup.low_ - 5e-8
        assert hybrid.high_ <= lbup.high_ + 5e-8


class TestCoinBettingWealth:
    def test_matches_portfolio_identity_flat_prior(self):
        ys = beta_stream(60, seed=31)
        est = CoinBettingCS(delta=0.05)
        for y in ys:
            est.observe_only(y)
        ms = np.array([0.2, 0.35, 0.5, 0.62, 0.8])
        got = est._log_wealth_batch(ms)
        want = [cb_log_wealth_via_portfolio(ys, m) for m in ms]
        assert_allclose(got, want, rtol=1e-8, atol=1e-10)

    def test_matches_portfolio_identity_nonflat_prior(self):
        ys = beta_stream(50, seed=32)
        est = CoinBettingCS(delta=0.05, alpha=2.0, beta=3.0)
        for y in ys:
            est.observe_only(y)
        ms = np.array([0.3, 0.5, 0.7])
        got = est._log_wealth_batch(ms)
        want = [cb_log_wealth_via_portfolio(ys, m, 2.0, 3.0) for m in ms]
        assert_allclose(got, want, rtol=1e-8, atol=1e-10)

    def test_long_horizon_frozen_value(self):
        ys = np.random.default_rng(8).beta(10, 10, 2000)
        est = CoinBettingCS(delta=0.05)
        for y in ys:
            est.observe_only(float(y))
        got = float(est._log_wealth_batch(np.array([0.3]))[0])
        assert_allclose(got, CB_LOG_WEALTH_T2000, rtol=0, atol=2e-9)

    def test_incremental_refresh_is_conservative(self):
        # past the exact-refresh cadence the stored endpoints are bisection
        # tightenings; a forced full refresh may only shrink them further
        ys = beta_stream(80, seed=33)
        est = CoinBettingCS(delta=0.05)
        for y in ys[:63]:
            est.observe_only(y)
        est.update(ys[63])  # exact refresh on the cadence round
        for y in ys[64:]:
            est.update(y)  # incremental path
        stored = est.interval_
        est.force_refresh()
        exact = est.interval_
        assert stored[0] <= exact[0] + 1e-12
        assert stored[1] >= exact[1] - 1e-12
        assert exact[0] <= est.empirical_mean_ <= exact[1]


class TestObserveOnlyBatching:
    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_observe_then_force_matches_fit(self, method):
        # a horizon inside the coin-betting exact-refresh cadence so every
        # method resolves its interval with the same single full solve
        ys = beta_stream(40, seed=41)
        batched = make_estimator(method, delta=0.05)
        for y in ys:
            batched.observe_only(y)
        assert batched.interval_ == (0.0, 1.0)
        batched.force_refresh()
        fitted = make_estimator(method, delta=0.05).fit(ys)
        assert batched.interval_ == fitted.interval_
        assert batched.t_ == fitted.t_

    def test_observe_only_skips_refresh(self):
        est = UniversalPortfolioCS(delta=0.05)
        est.update(0.4)
        before = est.interval_
        est.observe_only(0.6)
        assert est.interval_ == before
        assert est.t_ == 2


class TestCheckpoints:
    CONFIGS = [
        ("hr", {}),
        ("up", {"alpha": 2.0, "beta": 5.0}),
        ("lbup", {"n": 1}),
        ("hybrid", {"n": 1, "t_switch": 10}),
        ("cb", {"alpha": 2.0, "beta": 3.0}),
    ]

    def test_checkpoint_schema(self):
        est = LowerBoundUPCS(delta=0.05, n=2).fit(beta_stream(10, seed=51))
        data = json.loads(est.to_checkpoint())
        assert set(data) == {
            "method", "delta", "t", "low", "high",
            "mean_sum", "violations", "empty", "state",
        }
        assert data["method"] == "lbup"
        assert data["t"] == 10

    @staticmethod
    def _feed(est, values, cadence):
        for y in values:
            if (getattr(est, "t_", 0) + 1) % cadence == 0:
                est.update(y)
            else:
                est.observe_only(y)

    @pytest.mark.parametrize("method,kwargs", CONFIGS)
    def test_round_trip_resumes_bit_for_bit(self, method, kwargs):
        # the resumed side replays the same observe/update sequence as the
        # original (the cadence keys off the global round), so every float
        # in the final state must come out identical
        cadence = 8 if method == "cb" else 1
        ys = beta_stream(40, seed=52)
        full = make_estimator(method, delta=0.02, **kwargs)
        self._feed(full, ys[:28], cadence)
        text = full.to_checkpoint()
        self._feed(full, ys[28:], cadence)

        resumed = load_checkpoint(text)
        self._feed(resumed, ys[28:], cadence)

        assert resumed.t_ == full.t_
        assert resumed.interval_ == full.interval_
        assert resumed.mean_sum_ == full.mean_sum_
        assert resumed.violations_ == full.violations_
        assert resumed.empty_ == full.empty_
        assert json.loads(resumed.to_checkpoint()) == json.loads(full.to_checkpoint())

    @pytest.mark.parametrize("method,kwargs", CONFIGS)
    def test_round_trip_restores_hyperparameters(self, method, kwargs):
        est = make_estimator(method, delta=0.02, **kwargs)
        est.partial_fit(beta_stream(20, seed=53))
        resumed = load_checkpoint(est.to_checkpoint())
        assert resumed.delta == 0.02
        params = resumed.get_params()
        for key, value in kwargs.items():
            assert params[key] == value

    def test_round_trip_before_hybrid_switch(self):
        # checkpoint taken before the switch round: the portfolio snapshot
        # is still pending and must be recreated on the resumed side
        ys = beta_stream(30, seed=54)
        full = HybridUPCS(delta=0.05, n=1, t_switch=10)
        for y in ys[:6]:
            full.update(y)
        text = full.to_checkpoint()
        assert json.loads(text)["state"]["up_snapshot"]["s"] is None
        for y in ys[6:]:
            full.update(y)
        resumed = load_checkpoint(text)
        for y in ys[6:]:
            resumed.update(y)
        assert resumed.interval_ == full.interval_
        assert resumed._switch_acc is not None

    def test_round_trip_at_zero_rounds(self):
        est = LowerBoundUPCS(delta=0.05, n=2)
        resumed = load_checkpoint(est.to_checkpoint())
        assert resumed.t_ == 0
        assert resumed.interval_ == (0.0, 1.0)
        ys = beta_stream(15, seed=55)
        assert resumed.fit(ys).interval_ == LowerBoundUPCS(delta=0.05, n=2).fit(ys).interval_

    def test_load_checkpoint_rejects_unknown_method(self):
        est = HorseRaceCS(delta=0.05).fit(beta_stream(5, seed=56))
        data = json.loads(est.to_checkpoint())
        data["method"] = "bogus"
        with pytest.raises(ValueError, match="unknown method"):
            load_checkpoint(json.dumps(data))
