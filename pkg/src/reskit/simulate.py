"""
Synthetic resilience events from the Poisson outage/restore models, and a
Monte Carlo oracle for metric variability.

Random streams
--------------
Replicate ``i`` of a run with seed ``s`` draws from Philox4x64-10 with the
128-bit key ``(s mod 2**64, (attempt << 48) | i)`` and counter 0, where
``attempt`` counts regenerations of an undefined replicate. Each replicate
first draws its ``n-2`` interior outage times (uniform), then its ``n-z``
positive restore offsets, so ``generate_event(spec, i)`` and replicate ``i``
of :func:`monte_carlo_metrics` see identical draws.

The oracle computes metrics on whole replicate matrices with plain numpy
and shares no code with :mod:`reskit.metrics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import InvalidSpec, MetricUndefined
from .events import EPOCH, ResilienceEvent
from .fitting import RestoreModel
from .ingest import ElementType, OutageRecord, is_weather_cause

_MASK64 = (1 << 64) - 1
_CHUNK = 8192
_MAX_ATTEMPTS = 50


@dataclass(frozen=True)
class SimSpec:
    n: int
    z: int = 1
    outage_window_hours: float = 2.69
    mu: float = 1.64
    sigma: float = 1.56
    tau: float = 16.4
    restore_model: RestoreModel = RestoreModel.LOGNORMAL
    seed: int = 0
    r1_offset_hours: float = 0.52
    quantize_minutes: bool = False
    interconnection: str = "SIM"
    cause: str = "Lightning"

    def __post_init__(self):
        object.__setattr__(self, "restore_model", RestoreModel(self.restore_model))
        if self.n < 2:
            raise InvalidSpec("n must be at least 2")
        if not 1 <= self.z <= self.n:
            raise InvalidSpec("z must satisfy 1 <= z <= n")
        if not self.outage_window_hours > 0:
            raise InvalidSpec("outage window must be positive")
        if self.sigma < 0 or self.tau <= 0 or self.r1_offset_hours < 0:
            raise InvalidSpec("sigma >= 0, tau > 0 and r1 offset >= 0 required")


def replicate_rng(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    if not 0 <= index < (1 << 48):
        raise ValueError("replicate index out of range")
    key = np.array([seed & _MASK64, (attempt << 48) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw(spec: SimSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One replicate: interior outage times and sorted positive restore offsets, in hours."""
    interior = np.sort(rng.uniform(0.0, spec.outage_window_hours, spec.n - 2))
    m = spec.n - spec.z
    if spec.restore_model is RestoreModel.LOGNORMAL:
        offsets = np.exp(rng.normal(spec.mu, spec.sigma, m))
    else:
        offsets = rng.exponential(spec.tau, m)
    return interior, np.sort(offsets)


def _quantize(hours: np.ndarray) -> np.ndarray:
    return np.round(hours * 60.0) / 60.0


def _event_hours(spec: SimSpec, interior, offsets) -> tuple[np.ndarray, np.ndarray]:
    outages = np.concatenate([[0.0], interior, [spec.outage_window_hours]])
    r1 = spec.r1_offset_hours
    restores = np.concatenate([np.full(spec.z, r1), r1 + offsets])
    if spec.quantize_minutes:
        outages, restores = _quantize(outages), _quantize(restores)
        restores = np.maximum(restores, outages[0])
    return outages, np.sort(restores)


def generate_event(spec: SimSpec, replicate: int = 0, attempt: int = 0) -> ResilienceEvent:
    """Draw one synthetic event (times in minutes since the first outage)."""
    interior, offsets = _draw(spec, replicate_rng(spec.seed, replicate, attempt))
    outages, restores = _event_hours(spec, interior, offsets)
    if spec.quantize_minutes:
        o = tuple(int(round(t * 60)) for t in outages)
        r = tuple(int(round(t * 60)) for t in restores)
    else:
        o = tuple(float(t * 60) for t in outages)
        r = tuple(float(t * 60) for t in restores)
    return ResilienceEvent(
        event_id=f"{spec.interconnection}-sim{replicate:06d}",
        interconnection=spec.interconnection,
        outage_times=o,
        restore_times=r,
        member_record_ids=tuple(f"{spec.interconnection}-sim{replicate:06d}-{k:04d}" for k in range(1, spec.n + 1)),
        weather_related=is_weather_cause(spec.cause),
        cause_counts=((spec.cause, spec.n),) if spec.cause else (),
        origin=EPOCH,
    )


def generate_events(spec: SimSpec, count: int) -> list[ResilienceEvent]:
    return [generate_event(spec, i) for i in range(count)]


def events_to_records(
    events: Sequence[ResilienceEvent], start: datetime = EPOCH, gap_hours: float = 2.0
) -> list[OutageRecord]:
    """Lay events end to end as minute-resolution outage records.

    The k-th outage is paired with the k-th restore, which needs ``r_k >= o_k``
    for every k. Consecutive events are separated by ``gap_hours`` after the
    previous event's last restore so extraction keeps them apart.
    """
    records = []
    cursor = start
    for ev in events:
        o = [int(round(t)) for t in ev.outage_times]
        r = [int(round(t)) for t in ev.restore_times]
        if any(rk < ok for ok, rk in zip(o, r)):
            raise InvalidSpec(f"event {ev.event_id}: some restore precedes its paired outage")
        cause = ev.cause_counts[0][0] if ev.cause_counts else ""
        for k, (ok, rk, rid) in enumerate(zip(o, r, ev.member_record_ids)):
            records.append(OutageRecord(
                record_id=rid,
                element_id=f"{ev.event_id}-E{k + 1:04d}",
                element_type=ElementType.AC_CIRCUIT,
                interconnection=ev.interconnection,
                outage_start=cursor + timedelta(minutes=ok),
                restore_time=cursor + timedelta(minutes=rk),
                initiating_cause=cause,
            ))
        cursor += timedelta(minutes=max(r) + int(gap_hours * 60))
    return records


# --- Monte Carlo oracle -------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    metric: str
    half_width: float
    lower: float
    upper: float
    replicates: int
    regenerated: int


def _restore_matrix(spec: SimSpec, indices: Iterable[int], attempt: int = 0) -> np.ndarray:
    """Rows of sorted restore offsets ``D_1..D_n`` (hours) for the given replicates."""
    indices = list(indices)
    out = np.empty((len(indices), spec.n))
    for row, i in enumerate(indices):
        interior, offsets = _draw(spec, replicate_rng(spec.seed, i, attempt))
        outages, restores = _event_hours(spec, interior, offsets)
        out[row] = restores - restores[0]
    return out


def _parse(name: str) -> tuple[str, float | None]:
    for prefix in ("D_ln_", "D_exp_", "D_ge_", "D_k_"):
        if name.startswith(prefix):
            return prefix[:-1], float(name[len(prefix):])
    if name in ("D_n", "D_n-1", "D_GM", "mu", "sigma", "tau", "D_O", "D_r1", "D_E", "lambda_O"):
        return name, None
    if name.startswith("D_"):
        return "D", float(name[2:])
    raise ValueError(f"unknown metric {name!r}")


def oracle_metric(name: str, D: np.ndarray, spec: SimSpec) -> np.ndarray:
    """Metric value per row of the restore-offset matrix ``D``; NaN where undefined."""
    R, n = D.shape
    kind, x = _parse(name)
    pos = D > 0
    cnt = pos.sum(axis=1)
    z = n - cnt
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(pos, np.log(np.where(pos, D, 1.0)), 0.0)
        mu = np.where(cnt > 0, logs.sum(axis=1) / cnt, np.nan)
        dev = np.where(pos, (logs - mu[:, None]) ** 2, 0.0)
        sigma = np.where(cnt > 1, np.sqrt(dev.sum(axis=1) / (cnt - 1)), np.nan)
        tau = np.where(cnt > 0, D.sum(axis=1) / cnt, np.nan)
        if kind == "D_GM":
            return np.exp(mu)
        if kind == "mu":
            return mu
        if kind == "sigma":
            return sigma
        if kind == "tau":
            return tau
        if kind == "D_n":
            return D[:, -1].copy()
        if kind == "D_n-1":
            return D[:, -2].copy()
        if kind == "D_k":
            return D[:, int(x) - 1].copy()
        if kind == "D_O":
            return np.full(R, spec.outage_window_hours)
        if kind == "lambda_O":
            return np.full(R, (n - 1) / spec.outage_window_hours)
        if kind == "D_r1":
            return np.full(R, spec.r1_offset_hours)
        if kind == "D_E":
            return spec.r1_offset_hours + D[:, -1]
        if kind == "D_ge":
            k = math.ceil(n * x / 100 - 1e-9)
            return D[:, k - 1].copy()
        if kind == "D":
            u = min(max(1 / 3 + (n + 1 / 3) * x / 100, 1.0), float(n))
            lo = math.floor(u + 1e-9)
            frac = u - lo if u - lo > 1e-9 else 0.0
            hi = min(lo + 1, n)
            return (1 - frac) * D[:, lo - 1] + frac * D[:, hi - 1]
        if kind == "D_ln":
            arg = (n * x / 100 - z) / cnt
            ok = (arg > 0) & (arg < 1)
            return np.where(ok, np.exp(mu + sigma * ndtri(np.where(ok, arg, 0.5))), np.nan)
        if kind == "D_exp":
            ratio = cnt / (n * (1 - x / 100))
            ok = (ratio >= 1) & (x < 100)
            return np.where(ok, tau * np.log(np.where(ok, ratio, 1.0)), np.nan)
    raise ValueError(f"unknown metric {name!r}")


def monte_carlo_metrics(
    spec: SimSpec, metrics: Sequence[str], replicates: int = 200_000, c: float = 0.10
) -> dict[str, MonteCarloResult]:
    """Empirical ``c/2`` and ``1-c/2`` quantiles of each metric over simulated events.

    All metrics are evaluated on the same replicates. A replicate where a
    metric is undefined is redrawn from the next ``attempt`` stream.
    """
    if replicates < 1000:
        raise ValueError("replicates must be at least 1000")
    values = {m: np.empty(replicates) for m in metrics}
    regenerated = {m: 0 for m in metrics}
    for start in range(0, replicates, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, replicates))
        D = _restore_matrix(spec, idx)
        for m in metrics:
            v = oracle_metric(m, D, spec)
            bad = ~np.isfinite(v)
            attempt = 0
            while bad.any():
                attempt += 1
                if attempt > _MAX_ATTEMPTS:
                    raise MetricUndefined(f"{m} undefined for {int(bad.sum())} replicates after {_MAX_ATTEMPTS} redraws")
                regenerated[m] += int(bad.sum())
                redo = _restore_matrix(spec, idx[bad], attempt)
                v[bad] = oracle_metric(m, redo, spec)
                bad = ~np.isfinite(v)
            values[m][idx] = v
    out = {}
    for m in metrics:
        lo, hi = np.quantile(values[m], [c / 2, 1 - c / 2])
        hw = 1.0 if hi == lo else math.sqrt(hi / lo)
        out[m] = MonteCarloResult(m, hw, float(lo), float(hi), replicates, regenerated[m])
    return out


def monte_carlo_half_width(
    spec: SimSpec, metric: str, x: float | None = None, replicates: int = 200_000, c: float = 0.10
) -> float:
    """Multiplicative half-width ``sqrt(upper/lower)`` of the simulated metric distribution."""
    name = metric if x is None else f"{metric}_{x:g}"
    return monte_carlo_metrics(spec, [name], replicates, c)[name].half_width


def table_spec(n: int, mu: float, sigma: float, seed: int = 0) -> SimSpec:
    """Lognormal restore spec with a single restore at ``r_1``, as used for interval checks."""
    return SimSpec(n=n, z=1, mu=mu, sigma=sigma, seed=seed)


def with_seed(spec: SimSpec, seed: int) -> SimSpec:
    return replace(spec, seed=seed)
