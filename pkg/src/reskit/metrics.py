"""
Duration metrics of a resilience event, in hours.

Quantile positions are computed with exact rational arithmetic on the
event's minute offsets, so identities such as "D_50% is the usual median"
hold exactly rather than to rounding error. A float percent ``x`` is read
by its decimal representation (``95.0`` means 95 exactly); pass a
:class:`fractions.Fraction` for other exact values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, NamedTuple

from .errors import NoPositiveRestores, OutOfQuantileRange, SigmaUndefined
from .events import ResilienceEvent
from .fitting import FittedModels, compute_z, fit_event
from .special import norm_ppf

DEFAULT_X_GRID = (50, 90, 95)


def as_percent(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _exact(t) -> Fraction:
    return Fraction(t)


def _hours(minutes: Fraction) -> float:
    return float(minutes / 60)


def restore_offset(event: ResilienceEvent, k: int) -> float:
    """D_k = r_k - r_1 in hours (1-based k)."""
    if not 1 <= k <= event.n:
        raise IndexError(f"k={k} outside 1..{event.n}")
    return _hours(_exact(event.restore_times[k - 1]) - _exact(event.restore_times[0]))


class StraightforwardMetrics(NamedTuple):
    D_O: float
    D_r1: float
    D_n: float
    D_E: float
    D_k: tuple[float, ...]


def straightforward_metrics(event: ResilienceEvent) -> StraightforwardMetrics:
    o, r = event.outage_times, event.restore_times
    o1, on, r1, rn = (_exact(t) for t in (o[0], o[-1], r[0], r[-1]))
    d_k = tuple(_hours(_exact(t) - r1) for t in r)
    return StraightforwardMetrics(
        D_O=_hours(on - o1),
        D_r1=_hours(r1 - o1),
        D_n=_hours(rn - r1),
        D_E=_hours(rn - o1),
        D_k=d_k,
    )


def quantile_ge(event: ResilienceEvent, x) -> float:
    """Time to the first restore with at least x% restored: ``r_ceil(nx/100) - r_1``."""
    xf = as_percent(x)
    if not 0 < xf <= 100:
        raise OutOfQuantileRange(f"x={x} outside (0, 100]")
    k = math.ceil(event.n * xf / 100)
    return restore_offset(event, k)


def interp_position(n: int, x) -> Fraction:
    """Median-unbiased (type 8) position ``1/3 + (n + 1/3) x/100``, clamped to [1, n]."""
    xf = as_percent(x)
    u = Fraction(1, 3) + (n + Fraction(1, 3)) * xf / 100
    return min(max(u, Fraction(1)), Fraction(n))


def quantile_interp(event: ResilienceEvent, x) -> float:
    """Restore time to x% restoration, interpolating between ``D_floor(u)`` and ``D_ceil(u)``."""
    xf = as_percent(x)
    if not 0 <= xf <= 100:
        raise OutOfQuantileRange(f"x={x} outside [0, 100]")
    n = event.n
    u = interp_position(n, xf)
    lo, hi = math.floor(u), math.ceil(u)
    frac = u - lo
    r = event.restore_times
    r1 = _exact(r[0])
    d_lo = _exact(r[lo - 1]) - r1
    d_hi = _exact(r[hi - 1]) - r1
    return _hours((1 - frac) * d_lo + frac * d_hi)


def _positive_fit(event: ResilienceEvent, fit: FittedModels | None) -> FittedModels:
    fit = fit if fit is not None else fit_event(event)
    if fit.z >= fit.n or fit.mu is None:
        raise NoPositiveRestores(f"event {event.event_id}: all restores simultaneous")
    return fit


def geometric_mean_restore(event: ResilienceEvent, fit: FittedModels | None = None) -> float:
    """Geometric mean of the positive restore offsets, ``exp(mu)``."""
    return math.exp(_positive_fit(event, fit).mu)


def quantile_lognormal(
    event: ResilienceEvent, fit: FittedModels | None, x, positive_only: bool = False
) -> float:
    """Time at which the lognormal mean restore curve reaches x% of all n restores.

    With ``positive_only`` the percentage refers to the n-z positive offsets.
    """
    fit = _positive_fit(event, fit)
    if fit.sigma is None:
        raise SigmaUndefined(f"event {event.event_id}: sigma undefined")
    xf = as_percent(x)
    if positive_only:
        arg = xf / 100
    else:
        arg = (fit.n * xf / 100 - fit.z) / (fit.n - fit.z)
    if not 0 < arg < 1:
        raise OutOfQuantileRange(f"x={x} gives normal quantile argument {float(arg)} outside (0, 1)")
    return math.exp(fit.mu + fit.sigma * norm_ppf(float(arg)))


def quantile_exponential(
    event: ResilienceEvent, fit: FittedModels | None, x, positive_only: bool = False
) -> float:
    """Time at which the exponential mean restore curve reaches x% of all n restores."""
    fit = _positive_fit(event, fit)
    xf = as_percent(x)
    n, z = fit.n, fit.z
    if positive_only:
        if not 0 <= xf < 100:
            raise OutOfQuantileRange(f"x={x} outside [0, 100)")
        ratio = 1 / (1 - xf / 100)
    else:
        if not Fraction(100 * z, n) <= xf < 100:
            raise OutOfQuantileRange(f"x={x} outside [{100 * z / n}, 100)")
        ratio = Fraction(n - z) / (n * (1 - xf / 100))
    if ratio == 1:
        return 0.0
    return fit.tau * math.log(ratio)


def _optional(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (NoPositiveRestores, SigmaUndefined, OutOfQuantileRange):
        return None


@dataclass(frozen=True)
class DurationMetrics:
    event_id: str
    n: int
    z: int
    D_O: float
    D_r1: float
    D_n: float
    D_E: float
    D_n_minus_1: float | None
    D_50: float
    D_GM: float | None
    lambda_O: float | None
    mu: float | None
    sigma: float | None
    tau: float | None
    D_k: tuple[float, ...] = ()
    D_ge: dict = field(default_factory=dict)
    D_x: dict = field(default_factory=dict)
    D_x_ln: dict = field(default_factory=dict)
    D_x_exp: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        """Flat name -> value mapping of every scalar and x-indexed metric."""
        out = {
            "n": self.n,
            "z": self.z,
            "D_O": self.D_O,
            "lambda_O": self.lambda_O,
            "D_r1": self.D_r1,
            "D_E": self.D_E,
            "D_n": self.D_n,
            "D_n-1": self.D_n_minus_1,
            "D_50": self.D_50,
            "D_GM": self.D_GM,
            "mu": self.mu,
            "sigma": self.sigma,
            "tau": self.tau,
        }
        for name, family in (("D_ge", self.D_ge), ("D", self.D_x), ("D_ln", self.D_x_ln), ("D_exp", self.D_x_exp)):
            for x, value in family.items():
                out[f"{name}_{format_percent(x)}"] = value
        return out


def format_percent(x) -> str:
    xf = as_percent(x)
    if xf.denominator == 1:
        return str(xf.numerator)
    return repr(float(xf))


def compute_metrics(
    event: ResilienceEvent,
    fit: FittedModels | None = None,
    x_grid: Iterable = DEFAULT_X_GRID,
    positive_only: bool = False,
) -> DurationMetrics:
    """Every duration metric of the event; metrics whose preconditions fail are None."""
    fit = fit if fit is not None else fit_event(event)
    basic = straightforward_metrics(event)
    x_grid = list(x_grid)
    return DurationMetrics(
        event_id=event.event_id,
        n=event.n,
        z=compute_z(event),
        D_O=basic.D_O,
        D_r1=basic.D_r1,
        D_n=basic.D_n,
        D_E=basic.D_E,
        D_n_minus_1=basic.D_k[-2] if event.n >= 2 else None,
        D_50=quantile_interp(event, 50),
        D_GM=_optional(geometric_mean_restore, event, fit),
        lambda_O=fit.lambda_O,
        mu=fit.mu,
        sigma=fit.sigma,
        tau=fit.tau,
        D_k=basic.D_k,
        D_ge={x: quantile_ge(event, x) for x in x_grid if 0 < as_percent(x) <= 100},
        D_x={x: quantile_interp(event, x) for x in x_grid},
        D_x_ln={x: _optional(quantile_lognormal, event, fit, x, positive_only) for x in x_grid},
        D_x_exp={x: _optional(quantile_exponential, event, fit, x, positive_only) for x in x_grid},
    )


_SIMPLE = {"D_GM", "tau", "mu", "sigma", "lambda_O", "D_O", "D_r1", "D_E"}
_FAMILY = re.compile(r"^D_(ln|exp|ge)_(\d+(?:\.\d+)?)$|^D_(\d+(?:\.\d+)?)$|^D_k_(\d+)$")


def parse_metric(name: str, n: int | None = None) -> tuple[str, object]:
    """Split a metric name into ``(kind, parameter)``.

    ``D_n`` and ``D_n-1`` resolve to ``("D_k", n)`` and ``("D_k", n-1)``;
    ``D_95`` to ``("D_x", 95)``; ``D_ln_95`` to ``("D_ln", 95)``.
    """
    if name in _SIMPLE:
        return name, None
    if name in ("D_n", "D_n-1"):
        if n is None:
            raise ValueError(f"{name} needs the event size n")
        return "D_k", n if name == "D_n" else n - 1
    m = _FAMILY.match(name)
    if not m:
        raise ValueError(f"unknown metric {name!r}")
    family, fx, x, k = m.groups()
    if k is not None:
        return "D_k", int(k)
    if x is not None:
        return "D_x", Fraction(x)
    return {"ln": "D_ln", "exp": "D_exp", "ge": "D_ge"}[family], Fraction(fx)
