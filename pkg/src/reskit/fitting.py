"""
Per-event estimates for the Poisson outage and restore models.

Outages: constant rate on ``(o_1, o_n)``, estimated as ``(n-1)/(o_n-o_1)``.
Restores: the ``n-z`` positive offsets ``r_k - r_1`` are i.i.d. lognormal
``(mu, sigma)`` or exponential with mean ``tau``. All durations are in hours
(``mu`` is the mean log of offsets measured in hours).

The mean curves take ``t`` in hours since the event origin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    DegenerateOutageWindow,
    NoPositiveRestores,
    OutOfDomain,
    SigmaUndefined,
)
from .events import ResilienceEvent
from .special import norm_cdf


class RestoreModel(str, enum.Enum):
    LOGNORMAL = "LOGNORMAL"
    EXPONENTIAL = "EXPONENTIAL"


@dataclass(frozen=True)
class FittedModels:
    n: int
    z: int
    lambda_O: float | None = None
    mu: float | None = None
    sigma: float | None = None
    tau: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def outage_hours(event: ResilienceEvent) -> np.ndarray:
    return np.asarray(event.outage_times, dtype=float) / 60.0


def restore_hours(event: ResilienceEvent) -> np.ndarray:
    return np.asarray(event.restore_times, dtype=float) / 60.0


def compute_z(event: ResilienceEvent) -> int:
    """Number of restores tied with the first restore."""
    if event.n < 1:
        raise ValueError("event has no restores")
    r1 = event.restore_times[0]
    return sum(1 for r in event.restore_times if r == r1)


def positive_offsets(event: ResilienceEvent) -> np.ndarray:
    """Restore offsets ``r_k - r_1`` in hours for ``k = z+1..n``."""
    r1 = event.restore_times[0]
    return np.array([(r - r1) / 60.0 for r in event.restore_times if r != r1], dtype=float)


def fit_outage_rate(event: ResilienceEvent) -> float:
    """Outage rate per hour."""
    if event.n < 2 or event.outage_times[-1] == event.outage_times[0]:
        raise DegenerateOutageWindow(f"event {event.event_id}: all outages simultaneous")
    window = (event.outage_times[-1] - event.outage_times[0]) / 60.0
    return (event.n - 1) / window


def fit_lognormal_restore(event: ResilienceEvent) -> tuple[float, float | None]:
    """Return ``(mu, sigma)``; ``sigma`` is None with a single positive offset."""
    logs = np.log(positive_offsets(event))
    if logs.size == 0:
        raise NoPositiveRestores(f"event {event.event_id}: all restores simultaneous")
    mu = float(logs.mean())
    if logs.size < 2:
        return mu, None
    return mu, float(logs.std(ddof=1))


def fit_exponential_restore(event: ResilienceEvent) -> float:
    offsets = positive_offsets(event)
    if offsets.size == 0:
        raise NoPositiveRestores(f"event {event.event_id}: all restores simultaneous")
    return float(offsets.mean())


def fit_event(event: ResilienceEvent) -> FittedModels:
    """Fit every model that the event supports; unsupported fields stay None."""
    z = compute_z(event)
    try:
        lam = fit_outage_rate(event)
    except DegenerateOutageWindow:
        lam = None
    mu = sigma = tau = None
    if z < event.n:
        mu, sigma = fit_lognormal_restore(event)
        tau = fit_exponential_restore(event)
    return FittedModels(n=event.n, z=z, lambda_O=lam, mu=mu, sigma=sigma, tau=tau)


def mean_outage_curve(fit: FittedModels, event: ResilienceEvent, t: float) -> float:
    """Expected cumulative outages ``1 + lambda_O (t - o_1)`` for ``o_1 <= t <= o_n``."""
    if fit.lambda_O is None:
        raise DegenerateOutageWindow(f"event {event.event_id}: outage rate undefined")
    o1, on = event.outage_times[0] / 60.0, event.outage_times[-1] / 60.0
    if not o1 <= t <= on:
        raise OutOfDomain(f"t={t} outside outage window [{o1}, {on}]")
    if t == on:
        return float(event.n)
    return 1.0 + fit.lambda_O * (t - o1)


def mean_restore_curve(
    fit: FittedModels,
    event: ResilienceEvent,
    t: float,
    model: RestoreModel | str = RestoreModel.LOGNORMAL,
) -> float:
    """Expected cumulative restores at ``t >= r_1`` under the chosen restore model."""
    model = RestoreModel(model)
    r1 = event.restore_times[0] / 60.0
    if t < r1:
        raise OutOfDomain(f"t={t} precedes first restore {r1}")
    n, z = fit.n, fit.z
    if z == n:
        return float(n)
    dt = t - r1
    if model is RestoreModel.LOGNORMAL:
        if fit.sigma is None:
            raise SigmaUndefined(f"event {event.event_id}: sigma undefined")
        if dt == 0:
            return float(z)
        if fit.sigma == 0:
            frac = 1.0 if math.log(dt) >= fit.mu else 0.0
        else:
            frac = norm_cdf((math.log(dt) - fit.mu) / fit.sigma)
    else:
        frac = -math.expm1(-dt / fit.tau)
    return z + (n - z) * frac
