"""Constant-memory lower bound on the universal portfolio wealth.

Replacing each round's log gain by a polynomial lower bound (a truncated
alternating log series, valid at even truncation orders) collapses the whole
stream into 2n+1 running power sums.  The resulting wealth envelope is a
two-piece exponential-family integral over the bet fraction whose parameters
come from those sums alone, so evaluating any candidate mean costs O(1) in
the stream length: two normalizer integrals on the unit interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import comb

from .intervals import guarded_sublevel_interval
from .portfolio import up_log_wealth
from .special import (
    DEFAULT_QUADRATURE,
    NonConvergenceError,
    log_integrate_unit,
    log_integrate_unit_rule,
    unit_gl_rule,
)
from .validation import check_delta, check_mean_candidate, check_unit_value


def log_remainder_ratio(x, order):
    """Ratio of the log(1+x) series remainder to its first omitted term.

    With ell = order, this is (log(1+x) - sum_{k<ell} (-1)^(k+1) x^k / k)
    divided by (-1)^ell x^ell / ell; continuous and strictly increasing on
    (-1, inf) with value -1 at x = 0.  A short series takes over near zero
    where the direct quotient cancels catastrophically.
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(x <= -1.0):
        raise ValueError("x must be > -1")
    out = np.empty_like(x)
    near = np.abs(x) < 1e-4
    if np.any(near):
        xs = x[near]
        # -1 + ell x/(ell+1) - ell x^2/(ell+2) + ... (six terms)
        acc = np.zeros_like(xs)
        for j in range(5, 0, -1):
            acc = (acc + (-1.0) ** (j + 1) * order / (order + j)) * xs
        out[near] = acc - 1.0
    if np.any(~near):
        xf = x[~near]
        head = np.zeros_like(xf)
        for k in range(1, order):
            head += (-1.0) ** (k + 1) * xf**k / k
        rem = np.log1p(xf) - head
        out[~near] = rem / ((-1.0) ** order * xf**order / order)
    return float(out) if out.ndim == 0 else out


def log_gain_lower_bound(y, m, b, order):
    """Polynomial lower bound on ln(b y/m + (1-b)(1-y)/(1-m)).

    order = n truncates the log-gain series at the even power 2n.  With u
    the outcome's branch-dependent distance ratio and v the bet's, the true
    log gain is ln(1 - u v) and the bound is
    -u^(2n) sum_{k >= 2n} v^k / k - sum_{k < 2n} (u v)^k / k, which never
    exceeds it, with equality at y = m and at b = m.  Grouping the tail
    this way (rather than expanding u^(2n) ln(leftover) plus corrections)
    keeps the evaluation free of the huge cancelling intermediates that
    appear when |u| is large.  The branch is chosen by the side of m the
    bet b falls on; b must lie strictly inside (0, 1) (the log of the
    leftover fraction appears in the tail).
    Broadcasts over array inputs.
    """
    n = int(order)
    if n < 1:
        raise ValueError("order must be >= 1")
    y, m, b = np.broadcast_arrays(
        np.asarray(y, dtype=float), np.asarray(m, dtype=float), np.asarray(b, dtype=float)
    )
    if np.any((y < 0.0) | (y > 1.0)):
        raise ValueError("y must lie in [0, 1]")
    if np.any((m <= 0.0) | (m >= 1.0)):
        raise ValueError("m must lie in (0, 1)")
    if np.any((b <= 0.0) | (b >= 1.0)):
        raise ValueError("b must lie strictly inside (0, 1)")
    upper = b >= m
    u = np.where(upper, 1.0 - y / m, 1.0 - (1.0 - y) / (1.0 - m))
    v = np.where(upper, (b - m) / (1.0 - m), (m - b) / m)
    leftover = np.where(upper, (1.0 - b) / (1.0 - m), b / m)
    # tail(v) = sum_{k >= 2n} v^k / k: direct series below 1/2; above,
    # -ln(1 - v) minus the head, where 1 - v is the leftover fraction
    # computed from b and m directly so nothing is lost when v is near 1
    head = np.zeros_like(v)
    vk = np.ones_like(v)
    for k in range(1, 2 * n):
        vk = vk * v
        head = head + vk / k
    with np.errstate(divide="ignore"):
        tail_big = -np.log(leftover) - head
    term = v ** (2 * n) / (2 * n)
    tail_small = term.copy()
    for k in range(2 * n + 1, 2 * n + 64):
        term = term * v * ((k - 1) / k)
        tail_small = tail_small + term
    tail = np.where(v < 0.5, tail_small, tail_big)
    uv = u * v
    total = np.zeros_like(v)
    uvk = np.ones_like(v)
    for k in range(1, 2 * n):
        uvk = uvk * uv
        total = total - uvk / k
    total = total - u ** (2 * n) * tail
    return float(total) if total.ndim == 0 else total


class MomentAccumulator:
    """Running power sums s[j] = sum_i y_i^j for j = 0..2n.

    s[0] counts the rounds; everything the wealth envelope needs about the
    stream lives here, so memory is O(n) regardless of horizon.
    """

    __slots__ = ("order", "s")

    def __init__(self, order, s=None):
        order = int(order)
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        if s is None:
            self.s = np.zeros(2 * order + 1)
        else:
            s = np.asarray(s, dtype=float)
            if s.shape != (2 * order + 1,):
                raise ValueError(f"s must have length {2 * order + 1}")
            self.s = s.copy()

    @property
    def t(self):
        return int(round(self.s[0]))

    @property
    def mean(self):
        return self.s[1] / self.s[0] if self.s[0] > 0 else 0.0

    def push(self, y):
        y = check_unit_value(y)
        self.s += y ** np.arange(2 * self.order + 1)
        return self

    def push_many(self, ys):
        ys = np.asarray(ys, dtype=float)
        if ys.size:
            self.s += (ys[:, None] ** np.arange(2 * self.order + 1)).sum(axis=0)
        return self

    def copy(self):
        return MomentAccumulator(self.order, self.s)


def accumulate(acc, y):
    """Functional form of MomentAccumulator.push: returns a new accumulator."""
    return acc.copy().push(y)


@lru_cache(maxsize=None)
def _mirror_matrix(length):
    # s_j(1-y) = sum_{l<=j} C(j, l) (-1)^l s_l(y)
    mat = np.zeros((length, length))
    for j in range(length):
        l = np.arange(j + 1)
        mat[j, : j + 1] = comb(j, l) * (-1.0) ** l
    return mat


def mirrored_moments(s):
    """Power sums of the flipped stream 1 - y from those of y."""
    s = np.asarray(s, dtype=float)
    return _mirror_matrix(len(s)) @ s


@dataclass
class ExpFamilyParams:
    """Parameters of the envelope density exp(sum_k rho_k (1-x)^k / k + eta ln x)."""

    rho: np.ndarray
    eta: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.eta = float(self.eta)

    @property
    def order(self):
        return (len(self.rho) + 1) // 2

    def is_zero(self):
        return self.eta == 0.0 and not np.any(self.rho)


@lru_cache(maxsize=None)
def _binom_tables(order):
    n2 = 2 * order
    j = np.arange(n2 + 1)
    top = comb(n2, j).astype(float)
    rows = np.zeros((n2 - 1, n2 + 1))
    for k in range(1, n2):
        rows[k - 1, : k + 1] = comb(k, np.arange(k + 1))
    return top, rows


def _delta_params_rows(s_rows, m_arr, order):
    # one (power sums, candidate mean) pair per row
    n2 = 2 * order
    j = np.arange(n2 + 1)
    top, rows = _binom_tables(order)
    p = s_rows * ((-1.0) ** j)[None, :] / m_arr[:, None] ** j[None, :]
    eta = p @ top
    delta = -(p @ rows.T)
    return delta, np.maximum(eta, 0.0)


def _delta_params_from_moments(s, m_arr, order):
    """Centered parameters (delta, eta) of one stream at each candidate mean.

    delta_k = rho_k - eta = -sum_i (1 - y_i/m)^k and eta = sum_i
    (1 - y_i/m)^(2n), both as binomial sums over the power sums.  The
    centered form is what the density evaluator needs: forming rho itself
    at extreme m cancels ~16 digits against eta.
    """
    s_rows = np.broadcast_to(np.asarray(s, dtype=float), (len(m_arr), len(s)))
    return _delta_params_rows(s_rows, m_arr, order)


def exp_family_params(acc, m):
    """Envelope parameters of the data side at candidate mean m.

    rho_k = sum_i [(1 - y_i/m)^(2n) - (1 - y_i/m)^k], eta = sum_i (1 - y_i/m)^(2n),
    computed from the power sums; eta is clamped at zero against cancellation.
    """
    m = check_mean_candidate(m)
    delta, eta = _delta_params_from_moments(acc.s, np.array([m]), acc.order)
    return ExpFamilyParams(delta[0] + eta[0], eta[0])


def barred_params(acc, m):
    """Envelope parameters of the mirrored side: stream 1-y at mean 1-m."""
    m = check_mean_candidate(m)
    delta, eta = _delta_params_from_moments(
        mirrored_moments(acc.s), np.array([1.0 - m]), acc.order
    )
    return ExpFamilyParams(delta[0] + eta[0], eta[0])


@dataclass
class PriorHyper:
    """Optional prior parameters added to each side's envelope parameters."""

    rho1: np.ndarray
    eta1: float
    rho2: np.ndarray
    eta2: float

    def __post_init__(self):
        self.rho1 = np.asarray(self.rho1, dtype=float)
        self.rho2 = np.asarray(self.rho2, dtype=float)
        self.eta1 = float(self.eta1)
        self.eta2 = float(self.eta2)
        if self.rho1.shape != self.rho2.shape:
            raise ValueError("both sides must share the truncation order")
        if self.eta1 < 0.0 or self.eta2 < 0.0:
            raise ValueError("eta hyperparameters must be >= 0")

    @classmethod
    def zeros(cls, order):
        k = 2 * int(order) - 1
        return cls(np.zeros(k), 0.0, np.zeros(k), 0.0)

    def is_zero(self):
        return (
            self.eta1 == 0.0
            and self.eta2 == 0.0
            and not np.any(self.rho1)
            and not np.any(self.rho2)
        )


def _tail_scalar(u, start):
    if u >= 0.5:
        head = 0.0
        for k in range(1, start):
            head += u**k / k
        return -math.log1p(-u) - head
    term = u**start / start
    total = term
    k = start
    while term > 1e-18 * total:
        k += 1
        term *= u * (k - 1) / k
        total += term
    return total


def _log_series_tail(u, start):
    """sum_{k >= start} u^k / k for u in [0, 1), elementwise and stably.

    Below 1/2 the series is summed directly (geometric decay); above, the
    closed form -ln(1-u) minus the head is fine because the tail is no
    longer tiny relative to the head.
    """
    u = np.asarray(u, dtype=float)
    if u.size <= 4:
        return np.array([_tail_scalar(float(v), start) for v in u])
    out = np.empty_like(u)
    small = u < 0.5
    if np.any(small):
        us = u[small]
        term = us**start / start
        total = term.copy()
        for k in range(start + 1, start + 64):
            term *= us * ((k - 1) / k)
            total += term
        out[small] = total
    if np.any(~small):
        ub = u[~small]
        head = np.zeros_like(ub)
        for k in range(1, start):
            head += ub**k / k
        out[~small] = -np.log1p(-ub) - head
    return out


_TAIL_MEMO = {}


def _tail_for_nodes(x, start):
    # the quadrature rules reuse the same node arrays, so memoize by layout
    key = (start, x.shape[0], float(x[0]), float(x[-1]))
    hit = _TAIL_MEMO.get(key)
    if hit is None:
        hit = _log_series_tail(1.0 - x, start)
        _TAIL_MEMO[key] = hit
    return hit


def _log_density_centered(x, delta, eta):
    """Log envelope density from centered parameters, (B, K) x (N,) -> (B, N).

    ln f = sum_k delta_k u^k / k - eta * sum_{k >= K+1} u^k / k with
    u = 1 - x.  Written this way, the huge-but-cancelling parts of rho and
    eta * ln x never meet in floating point.
    """
    x = np.asarray(x, dtype=float)
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    u = 1.0 - x
    acc = np.zeros((delta.shape[0], len(x)))
    for k in range(delta.shape[1], 0, -1):
        acc = (acc + delta[:, k - 1 : k] / k) * u[None, :]
    start = delta.shape[1] + 1
    tail = _tail_for_nodes(x, start) if x.size > 4 else _log_series_tail(u, start)
    return acc - eta[:, None] * tail[None, :]


def log_unnormalized_density(x, rho, eta):
    """Log envelope density, batched: rho (B, K), eta (B,), x (N,) -> (B, N)."""
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    return _log_density_centered(x, rho - eta[:, None], eta)


_AGREEMENT_GATE = 1e-9


def log_normalizer_batch(delta, eta, quad=None):
    """ln integral over (0,1) of the envelope density, batched over rows.

    Takes centered parameters (delta = rho - eta, see _log_density_centered).
    Ladder: graded composite Gauss-Legendre at two resolutions with an
    agreement gate; disagreeing rows escalate to a denser fixed rule and
    then to the adaptive integrator; if that runs out of budget, the dense
    value is accepted (quadrature can only lose mass, which is the
    conservative direction for the wealth).
    """
    if quad is None:
        quad = DEFAULT_QUADRATURE
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    x0, lw0 = unit_gl_rule(16, quad.endpoint_clip)
    x1, lw1 = unit_gl_rule(32, quad.endpoint_clip)
    v0 = log_integrate_unit_rule(_log_density_centered(x0, delta, eta), lw0)
    v1 = np.atleast_1d(
        log_integrate_unit_rule(_log_density_centered(x1, delta, eta), lw1)
    )
    v0 = np.atleast_1d(v0)

    zero_rows = (eta == 0.0) & ~np.any(delta, axis=1)
    v1[zero_rows] = 0.0

    gate = max(_AGREEMENT_GATE, quad.rel_tol)

    def _agree(a, b):
        return (np.abs(a - b) <= gate) | (np.isneginf(a) & np.isneginf(b))

    disagree = np.flatnonzero(~zero_rows & ~_agree(v0, v1))
    for points in (128, 512):
        if not disagree.size:
            return v1
        # denser fixed rules, each still evaluated as one batch
        xd, lwd = unit_gl_rule(points, quad.endpoint_clip)
        vd = np.atleast_1d(
            log_integrate_unit_rule(
                _log_density_centered(xd, delta[disagree], eta[disagree]), lwd
            )
        )
        still = ~_agree(v1[disagree], vd)
        v1[disagree] = vd
        disagree = disagree[still]
    for i in disagree:
        d, e = delta[i], eta[i]

        def lf(x, d=d, e=e):
            return float(
                _log_density_centered(np.array([x]), d[None, :], np.array([e]))[0, 0]
            )

        def lf_vec(xs, d=d, e=e):
            return _log_density_centered(np.asarray(xs), d[None, :], np.array([e]))[0]

        try:
            v1[i] = log_integrate_unit(lf, quad, log_f_vec=lf_vec)
        except NonConvergenceError:
            pass  # keep the densest fixed-rule value (mass can only be lost)
    return v1


def log_normalizer(params, quad=None):
    """Scalar ln Z of an ExpFamilyParams (exact 0 for all-zero parameters)."""
    if params.is_zero():
        return 0.0
    delta = params.rho - params.eta
    return float(log_normalizer_batch(delta[None, :], np.array([params.eta]), quad)[0])


def _wealth_log_numerator_batch(s, order, m_arr, hyper, quad):
    # ln[(1-m) Z(data side) + m Z(mirrored side)] for each m
    d1, eta1 = _delta_params_from_moments(s, m_arr, order)
    d2, eta2 = _delta_params_from_moments(mirrored_moments(s), 1.0 - m_arr, order)
    if hyper is not None and not hyper.is_zero():
        d1 = d1 + (hyper.rho1 - hyper.eta1)[None, :]
        eta1 = eta1 + hyper.eta1
        d2 = d2 + (hyper.rho2 - hyper.eta2)[None, :]
        eta2 = eta2 + hyper.eta2
    lz1 = log_normalizer_batch(d1, eta1, quad)
    lz2 = log_normalizer_batch(d2, eta2, quad)
    return np.logaddexp(np.log1p(-m_arr) + lz1, np.log(m_arr) + lz2)


def _prior_log_mass_batch(order, m_arr, hyper, quad):
    if hyper is None or hyper.is_zero():
        return np.zeros_like(m_arr)
    lz1 = log_normalizer(ExpFamilyParams(hyper.rho1, hyper.eta1), quad)
    lz2 = log_normalizer(ExpFamilyParams(hyper.rho2, hyper.eta2), quad)
    return np.logaddexp(np.log1p(-m_arr) + lz1, np.log(m_arr) + lz2)


def lbup_log_wealth_batch(s, order, m_arr, hyper=None, quad=None):
    """Envelope log wealth from power sums s at an array of candidate means."""
    m_arr = np.asarray(m_arr, dtype=float)
    if np.any((m_arr <= 0.0) | (m_arr >= 1.0)):
        raise ValueError("m must lie in (0, 1)")
    num = _wealth_log_numerator_batch(np.asarray(s, dtype=float), order, m_arr, hyper, quad)
    return num - _prior_log_mass_batch(order, m_arr, hyper, quad)


def lbup_log_wealth(acc, m, hyper=None, quad=None):
    """Envelope log wealth of the accumulated stream at candidate mean m."""
    m = check_mean_candidate(m)
    return float(lbup_log_wealth_batch(acc.s, acc.order, np.array([m]), hyper, quad)[0])


def hybrid_log_wealth_batch(
    poly_switch, prior, s_now, s_switch, order, m_arr, quad=None
):
    """Exact portfolio wealth up to the switch round, envelope growth after.

    Equals the switch-time portfolio wealth times the ratio of envelope
    numerators between now and the switch; at the switch itself the ratio
    is exactly one.
    """
    m_arr = np.asarray(m_arr, dtype=float)
    up_part = np.atleast_1d(up_log_wealth(poly_switch, m_arr, prior))
    s_now = np.asarray(s_now, dtype=float)
    s_switch = np.asarray(s_switch, dtype=float)
    if np.array_equal(s_now, s_switch):
        return up_part
    num_now = _wealth_log_numerator_batch(s_now, order, m_arr, None, quad)
    num_switch = _wealth_log_numerator_batch(s_switch, order, m_arr, None, quad)
    return up_part + num_now - num_switch


def hybrid_log_wealth(poly_switch, prior, acc_now, acc_switch, m, quad=None):
    """Scalar form of hybrid_log_wealth_batch over accumulators."""
    m = check_mean_candidate(m)
    return float(
        hybrid_log_wealth_batch(
            poly_switch, prior, acc_now.s, acc_switch.s, acc_now.order, np.array([m]), quad
        )[0]
    )


def lbup_interval(
    acc,
    delta,
    hyper=None,
    quad=None,
    eps=1e-4,
    tol=1e-9,
    grid_points=64,
):
    """Largest interval around the empirical mean inside the envelope's
    sublevel set at threshold ln(1/delta).

    A grid prescan on each side guards against non-quasiconvex excursions
    before the crossings are refined; sides that never cross clamp to 0/1.
    """
    delta = check_delta(delta)
    if acc.t == 0:
        return 0.0, 1.0
    threshold = math.log(1.0 / delta)
    seed = min(max(acc.mean, eps), 1.0 - eps)

    def batch(ms):
        return lbup_log_wealth_batch(acc.s, acc.order, ms, hyper, quad)

    low, high = guarded_sublevel_interval(
        batch, threshold, seed, eps, 1.0 - eps, tol=tol, grid_points=grid_points
    )
    if low == eps:
        low = 0.0
    if high == 1.0 - eps:
        high = 1.0
    return low, high


def accumulator_record(acc, t_switch=None, up_snapshot=None):
    """JSON-ready record of the envelope state (plus hybrid snapshot fields)."""
    return {
        "n": acc.order,
        "t": acc.t,
        "s": [float(v) for v in acc.s],
        "t_UP": t_switch,
        "up_snapshot": up_snapshot,
    }


def accumulator_from_record(record):
    """Rebuild a MomentAccumulator from accumulator_record output."""
    acc = MomentAccumulator(int(record["n"]), np.asarray(record["s"], dtype=float))
    if acc.t != int(record["t"]):
        raise ValueError("inconsistent round count in record")
    return acc
