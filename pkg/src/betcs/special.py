"""Log-domain special functions and quadrature on the unit interval.

Betting wealth spans hundreds of orders of magnitude well before the
horizons of interest, so everything here works with logarithms and never
materializes the linear-scale quantity.  The adaptive integrator applies a
max-shift per panel, which keeps panel sums representable no matter how
large or small the integrand gets.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp


class NonConvergenceError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions before tolerances were met."""


class NonFiniteLogIntegrandError(ValueError):
    """log-integrand returned +inf or nan (−inf is a legal value: f = 0)."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for log-domain integration on (0, 1).

    Convergence requires the estimated error to fall below
    max(abs_tol, rel_tol) * integral; the integrand's overall scale is
    arbitrary in the log domain, so both tolerances act relative to the
    integral itself.  Endpoints are clipped at endpoint_clip because
    integrands may involve log(x) or log(1 - x).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2048
    endpoint_clip: float = 1e-12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not 0 < self.endpoint_clip < 0.5:
            raise ValueError("endpoint_clip must be in (0, 0.5)")


DEFAULT_QUADRATURE = QuadratureSpec()


def log_gamma(x):
    """ln Gamma(x) for x > 0.  Scalar or array."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_gamma requires x > 0")
    out = sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


def log_beta(a, b):
    """ln B(a, b) for a, b > 0.  Scalar or array."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("log_beta requires a, b > 0")
    out = sp.gammaln(a) + sp.gammaln(b) - sp.gammaln(a + b)
    return float(out) if out.ndim == 0 else out


def lower_incomplete_gamma(s, x):
    """Lower incomplete gamma integral of t^(s-1) e^(-t) over (0, x)."""
    if s <= 0:
        raise ValueError("lower_incomplete_gamma requires s > 0")
    if x < 0:
        raise ValueError("lower_incomplete_gamma requires x >= 0")
    return float(sp.gammainc(s, x)) * math.exp(sp.gammaln(s))


def log_lower_incomplete_gamma(s, x):
    """ln of lower_incomplete_gamma, stable when the regularized form underflows."""
    if s <= 0:
        raise ValueError("log_lower_incomplete_gamma requires s > 0")
    if x < 0:
        raise ValueError("log_lower_incomplete_gamma requires x >= 0")
    if x == 0:
        return -math.inf
    p = sp.gammainc(s, x)
    if p > 0.0:
        return math.log(p) + float(sp.gammaln(s))
    # x far into the left tail: gamma(s, x) = x^s e^(-x) sum_k x^k / prod(s..s+k)
    log_term = s * math.log(x) - x - math.log(s)
    total = 0.0  # log-sum relative to the k = 0 term
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= x / (s + k)
        total_new = total + term
        if total_new == total or k > 10_000:
            break
        total = total_new
    return log_term + math.log1p(total)


def binary_entropy(p):
    """Entropy -p ln p - (1-p) ln(1-p) of a coin, 0 at p in {0, 1}."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("binary_entropy requires p in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -sp.xlogy(p, p) - sp.xlogy(1.0 - p, 1.0 - p)
    return float(out) if out.ndim == 0 else out


def binary_kl(p, q):
    """KL divergence p ln(p/q) + (1-p) ln((1-p)/(1-q)), with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("binary_kl requires p in [0, 1]")
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise ValueError("binary_kl requires q in (0, 1)")
    out = sp.xlogy(p, p / q) + sp.xlogy(1.0 - p, (1.0 - p) / (1.0 - q))
    return float(out) if out.ndim == 0 else out


def _log_simpson(h, lf_left, lf_mid, lf_right):
    # ln[(h/6)(f_l + 4 f_m + f_r)] by max-shift over the three samples
    m = max(lf_left, lf_mid + math.log(4.0), lf_right)
    if m == -math.inf:
        return -math.inf
    s = (
        math.exp(lf_left - m)
        + 4.0 * math.exp(lf_mid - m)
        + math.exp(lf_right - m)
    )
    return math.log(h / 6.0) + m + math.log(s)


def _log_abs_diff(a, b):
    # ln|e^a - e^b|
    hi, lo = (a, b) if a >= b else (b, a)
    if hi == -math.inf:
        return -math.inf
    d = lo - hi
    if d == 0.0:
        return -math.inf
    return hi + math.log(-math.expm1(d))


def _logsumexp_list(values):
    m = max(values, default=-math.inf)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(v - m) for v in values))


def log_integrate_unit(log_f, spec: QuadratureSpec | None = None, log_f_vec=None):
    """ln of the integral of exp(log_f) over the unit interval.

    Globally adaptive Simpson on (clip, 1 - clip): the panel with the largest
    estimated error is split until the total error passes the tolerances.
    All panel arithmetic happens in the log domain with a per-panel max-shift,
    so integrands like exp(500 (1-x)) are handled without overflow.
    log_f_vec, if given, evaluates an array of points in one call.
    """
    if spec is None:
        spec = DEFAULT_QUADRATURE

    def lf(x):
        v = float(log_f(x))
        if math.isnan(v) or v == math.inf:
            raise NonFiniteLogIntegrandError(f"log integrand is {v} at x={x}")
        return v

    def lf_pair(x1, x2):
        if log_f_vec is None:
            return lf(x1), lf(x2)
        v1, v2 = (float(v) for v in log_f_vec(np.array([x1, x2])))
        for x, v in ((x1, v1), (x2, v2)):
            if math.isnan(v) or v == math.inf:
                raise NonFiniteLogIntegrandError(f"log integrand is {v} at x={x}")
        return v1, v2

    a0 = spec.endpoint_clip
    b0 = 1.0 - spec.endpoint_clip

    # A panel carries its endpoint/midpoint samples, its refined (two-half)
    # Simpson estimate, and the Richardson error of that estimate.
    def make_panel(a, b, fa, fm, fb):
        lm = 0.5 * (a + 0.5 * (a + b))
        rm = 0.5 * (0.5 * (a + b) + b)
        flm, frm = lf_pair(lm, rm)
        h = b - a
        s1 = _log_simpson(h, fa, fm, fb)
        s_left = _log_simpson(0.5 * h, fa, flm, fm)
        s_right = _log_simpson(0.5 * h, fm, frm, fb)
        s2 = np.logaddexp(s_left, s_right)
        err = _log_abs_diff(s2, s1) - math.log(15.0)
        return (a, b, fa, flm, fm, frm, fb, float(s2), err)

    edges = np.linspace(a0, b0, 17)
    if log_f_vec is None:
        samples = [lf(x) for x in edges]
        mids = [lf(0.5 * (edges[i] + edges[i + 1])) for i in range(16)]
    else:
        both = np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])])
        vals = np.asarray(log_f_vec(both), dtype=float)
        if np.any(np.isnan(vals)) or np.any(vals == math.inf):
            raise NonFiniteLogIntegrandError("log integrand is nan or +inf")
        samples = list(vals[:17])
        mids = list(vals[17:])
    heap = []
    counter = 0
    for i in range(16):
        p = make_panel(edges[i], edges[i + 1], samples[i], mids[i], samples[i + 1])
        heapq.heappush(heap, (-p[8], counter, p))
        counter += 1

    splits = 0
    while True:
        total = _logsumexp_list([p[7] for _, _, p in heap])
        global_err = _logsumexp_list([p[8] for _, _, p in heap])
        # both tolerances are taken relative to the integral itself: the
        # integrand's scale is arbitrary in the log domain, so an absolute
        # bound in linear units would be meaningless for tiny integrals
        log_bound = math.log(max(spec.abs_tol, spec.rel_tol)) + total
        if global_err <= log_bound:
            return total
        if splits >= spec.max_subdivisions:
            raise NonConvergenceError(
                f"no convergence after {splits} subdivisions "
                f"(err={global_err:.3g} > bound={log_bound:.3g} in log scale)"
            )
        _, _, worst = heapq.heappop(heap)
        a, b, fa, flm, fm, frm, fb, s2, _ = worst
        mid = 0.5 * (a + b)
        if mid - a < 8.0 * np.spacing(max(abs(a), abs(b))):
            # panel is at floating-point resolution; accept its estimate
            frozen = (a, b, fa, flm, fm, frm, fb, s2, -math.inf)
            heapq.heappush(heap, (math.inf, counter, frozen))
            counter += 1
            continue
        left = make_panel(a, mid, fa, flm, fm)
        right = make_panel(mid, b, fm, frm, fb)
        heapq.heappush(heap, (-left[8], counter, left))
        counter += 1
        heapq.heappush(heap, (-right[8], counter, right))
        counter += 1
        splits += 1


@lru_cache(maxsize=None)
def unit_gl_rule(points_per_panel=16, clip=1e-12):
    """Composite Gauss-Legendre rule on (clip, 1-clip), graded at both ends.

    Panel edges shrink geometrically toward 0 and 1 so integrands with
    endpoint concentration (x^eta with large eta, or steep exp((1-x) poly)
    factors) are still sampled where their mass lives.  Returns (nodes,
    log-weights) as flat arrays.
    """
    graded = [clip, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2]
    inner = np.linspace(1e-2, 1.0 - 1e-2, 21)
    edges = np.concatenate(
        [graded, inner[1:-1], [1.0 - e for e in reversed(graded)]]
    )
    x, w = np.polynomial.legendre.leggauss(points_per_panel)
    nodes = []
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * x)
        weights.append(half * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    return nodes, np.log(weights)


def log_integrate_unit_rule(log_f_values, log_weights):
    """ln sum of exp(log_f + log_w) along the last axis (fixed-rule integral).

    log_f_values may be batched: shape (..., n_nodes).
    """
    z = log_f_values + log_weights
    m = np.max(z, axis=-1, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.squeeze(m, -1) + np.log(np.sum(np.exp(z - m_safe), axis=-1))
    if out.ndim == 0:
        return float(out)
    return out
