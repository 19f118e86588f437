"""
Confidence intervals for restore-duration metrics under the lognormal
Poisson restore model with a single restore at ``r_1`` (z = 1).

The n-1 positive offsets are taken as i.i.d. lognormal(mu, sigma). Interval
size is reported as the multiplicative half-width ``sqrt(upper/lower)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from scipy import integrate, optimize

from .errors import IndexOutOfRange, NumericalFailure, OutOfQuantileRange
from .fitting import FittedModels
from .metrics import as_percent, format_percent, interp_position, parse_metric
from .special import betaincinv, chi_cdf, chi_sf, norm_cdf, norm_ppf

log = logging.getLogger(__name__)

# typical (mu, sigma) of events of size n, and the metrics reported for them
SIZE_GRID_ROWS = (
    (10, 1.18, 1.72),
    (20, 1.60, 1.58),
    (50, 2.20, 1.35),
    (100, 2.52, 1.35),
    (200, 3.15, 1.33),
)
SIZE_GRID_METRICS = ("D_GM", "D_50", "tau", "D_ln_90", "D_90", "D_ln_95", "D_95", "D_n-1", "D_n")

# convolution quadrature and root-finding settings
_SPAN_SD = 8.0
_QUAD_EPSABS = 1e-10
_ROOT_RTOL = 1e-9


@dataclass(frozen=True)
class VariabilityQuery:
    n: int
    mu: float
    sigma: float
    c: float = 0.10
    x: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")

    @property
    def z_c(self) -> float:
        return norm_ppf(1 - self.c / 2)


@dataclass(frozen=True)
class VariabilityResult:
    metric: str
    lower: float
    upper: float
    half_width: float


def _result(metric: str, lower: float, upper: float) -> VariabilityResult:
    return VariabilityResult(metric, lower, upper, math.sqrt(upper / lower))


def query_from_fit(fit: FittedModels, c: float = 0.10, x: float | None = None) -> VariabilityQuery:
    if fit.z != 1:
        log.warning("variability assumes z = 1; event has z = %d, treating as z = 1", fit.z)
    return VariabilityQuery(fit.n, fit.mu, fit.sigma, c, x)


def ci_dgm(q: VariabilityQuery) -> VariabilityResult:
    """Geometric mean of n-1 lognormal samples: exp(mu +- sigma z_c / sqrt(n-1))."""
    half = q.sigma * q.z_c / math.sqrt(q.n - 1)
    return VariabilityResult("D_GM", math.exp(q.mu - half), math.exp(q.mu + half), math.exp(half))


def ci_tau(q: VariabilityQuery) -> VariabilityResult:
    """Arithmetic mean of n-1 lognormal samples by Cox's approximation."""
    if q.n < 3:
        raise ValueError("n must be at least 3")
    s = q.sigma
    log_half = q.z_c * s * math.sqrt(1 / (q.n - 1) + s * s / (2 * q.n - 4))
    log_center = q.mu + s * s / 2
    return VariabilityResult(
        "tau", math.exp(log_center - log_half), math.exp(log_center + log_half), math.exp(log_half)
    )


def lognormal_quantile_phi(n: int, x) -> float:
    arg = (n * as_percent(x) / 100 - 1) / (n - 1)
    if not 0 < arg < 1:
        raise OutOfQuantileRange(f"x={x} outside (100/n, 100) for n={n}")
    return norm_ppf(float(arg))


def log_dx_ln_cdf(y: float, n: int, mu: float, sigma: float, phi: float) -> float:
    """CDF of ``mu_hat + phi * sigma_hat`` at ``y``.

    ``mu_hat ~ N(mu, sigma/sqrt(n-1))`` and ``sigma_hat ~ (sigma/sqrt(n-2)) chi_{n-2}``
    are independent; the CDF is the convolution of the normal density with
    the CDF of the scaled chi variable (reflected when ``phi < 0``).
    """
    sd = sigma / math.sqrt(n - 1)
    scale = phi * sigma / math.sqrt(n - 2)
    k = n - 2
    lo, hi = mu - _SPAN_SD * sd, mu + _SPAN_SD * sd

    def density(w):
        return math.exp(-0.5 * ((w - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))

    if scale > 0:
        # P(scale * chi <= y - w) vanishes for w >= y
        upper = min(y, hi)
        if upper <= lo:
            return 0.0
        val, _ = integrate.quad(
            lambda w: density(w) * chi_cdf((y - w) / scale, k),
            lo, upper, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSABS, limit=200,
        )
        return min(max(val, 0.0), 1.0)
    # scale < 0: P(scale * chi <= t) is 1 for t >= 0, else P(chi >= t / scale)
    base = norm_cdf((y - mu) / sd)
    lower = max(y, lo)
    if lower >= hi:
        return base
    val, _ = integrate.quad(
        lambda w: density(w) * chi_sf((y - w) / scale, k),
        lower, hi, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSABS, limit=200,
    )
    return min(max(base + val, 0.0), 1.0)


def _invert_cdf(cdf, p: float, lo: float, hi: float) -> float:
    for _ in range(60):
        if cdf(lo) < p:
            break
        lo -= hi - lo
    for _ in range(60):
        if cdf(hi) > p:
            break
        hi += hi - lo
    f_lo, f_hi = cdf(lo) - p, cdf(hi) - p
    if not f_lo < 0 < f_hi:
        raise NumericalFailure(f"could not bracket CDF quantile p={p}")
    return optimize.brentq(lambda y: cdf(y) - p, lo, hi, xtol=1e-12, rtol=_ROOT_RTOL)


def ci_dx_ln(q: VariabilityQuery) -> VariabilityResult:
    """Interval for the lognormal-model quantile ``exp(mu_hat + phi sigma_hat)``."""
    if q.x is None:
        raise ValueError("query needs x")
    if q.n < 3:
        raise ValueError("n must be at least 3")
    name = f"D_ln_{format_percent(q.x)}"
    phi = lognormal_quantile_phi(q.n, q.x)
    if abs(phi) < 1e-12 or q.sigma == 0:
        res = ci_dgm(q)
        if q.sigma == 0:
            v = math.exp(q.mu + phi * q.sigma)
            return VariabilityResult(name, v, v, 1.0)
        return VariabilityResult(name, res.lower, res.upper, res.half_width)
    sd = q.sigma / math.sqrt(q.n - 1)
    center = q.mu + phi * q.sigma
    span = _SPAN_SD * sd + abs(phi) * q.sigma * 2
    cdf = lambda y: log_dx_ln_cdf(y, q.n, q.mu, q.sigma, phi)  # noqa: E731
    y_lo = _invert_cdf(cdf, q.c / 2, center - span, center + span)
    y_hi = _invert_cdf(cdf, 1 - q.c / 2, center - span, center + span)
    return VariabilityResult(name, math.exp(y_lo), math.exp(y_hi), math.exp((y_hi - y_lo) / 2))


def order_statistic_ppf(p: float, n: int, k: int, mu: float, sigma: float) -> float:
    """Inverse CDF of D_k, the (k-1)th order statistic of n-1 lognormal samples."""
    if not 2 <= k <= n:
        raise IndexOutOfRange(f"k={k} outside 2..{n}")
    m, j = n - 1, k - 1
    prob = betaincinv(j, m - j + 1, p)
    return math.exp(mu + sigma * norm_ppf(prob))


def ci_order_statistic(q: VariabilityQuery, k: int) -> VariabilityResult:
    lower = order_statistic_ppf(q.c / 2, q.n, k, q.mu, q.sigma)
    upper = order_statistic_ppf(1 - q.c / 2, q.n, k, q.mu, q.sigma)
    name = "D_n" if k == q.n else "D_n-1" if k == q.n - 1 else f"D_k_{k}"
    return _result(name, lower, upper)


def ci_dx_interp(q: VariabilityQuery) -> VariabilityResult:
    """Interval for D_x% by interpolating the order-statistic inverse CDFs at position u."""
    if q.x is None:
        raise ValueError("query needs x")
    u = interp_position(q.n, q.x)
    lo, hi = math.floor(u), math.ceil(u)
    frac = float(u - lo)
    name = f"D_{format_percent(q.x)}"
    if lo == hi:
        res = ci_order_statistic(q, lo)
        return VariabilityResult(name, res.lower, res.upper, res.half_width)

    def endpoint(p):
        a = order_statistic_ppf(p, q.n, lo, q.mu, q.sigma)
        b = order_statistic_ppf(p, q.n, hi, q.mu, q.sigma)
        return (1 - frac) * a + frac * b

    return _result(name, endpoint(q.c / 2), endpoint(1 - q.c / 2))


def confidence_interval(metric: str, n: int, mu: float, sigma: float, c: float = 0.10) -> VariabilityResult:
    """Dispatch by metric name (``D_GM``, ``tau``, ``D_ln_95``, ``D_90``, ``D_n-1``, ``D_k_7``, ...)."""
    kind, param = parse_metric(metric, n)
    q = VariabilityQuery(n, mu, sigma, c, param if kind in ("D_x", "D_ln") else None)
    if kind == "D_GM":
        res = ci_dgm(q)
    elif kind == "tau":
        res = ci_tau(q)
    elif kind == "D_ln":
        res = ci_dx_ln(q)
    elif kind == "D_x":
        res = ci_dx_interp(q)
    elif kind == "D_k":
        res = ci_order_statistic(q, param)
    else:
        raise ValueError(f"no analytic interval for metric {metric!r}")
    return VariabilityResult(metric, res.lower, res.upper, res.half_width)


def variability_table(rows=SIZE_GRID_ROWS, metrics=SIZE_GRID_METRICS, c: float = 0.10) -> list[dict]:
    """Half-width grid: one dict per (n, mu, sigma) row with one entry per metric."""
    table = []
    for n, mu, sigma in rows:
        row = {"n": n, "mu": mu, "sigma": sigma}
        for m in metrics:
            row[m] = confidence_interval(m, n, mu, sigma, c).half_width
        table.append(row)
    return table
