import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reskit.errors import NoPositiveRestores, OutOfQuantileRange, SigmaUndefined
from reskit.fitting import fit_event
from reskit.metrics import (
    compute_metrics,
    geometric_mean_restore,
    interp_position,
    parse_metric,
    quantile_exponential,
    quantile_ge,
    quantile_interp,
    quantile_lognormal,
    restore_offset,
    straightforward_metrics,
)

from conftest import make_event, minute_events


def offsets_event(offsets, r1=1.0):
    return make_event([0] * len(offsets), [r1 + d for d in offsets])


def test_straightforward():
    m = straightforward_metrics(make_event([0, 1], [2, 5]))
    assert (m.D_O, m.D_r1, m.D_n, m.D_E) == (1, 2, 3, 5)
    assert m.D_k == (0, 3)
    one = straightforward_metrics(make_event([0], [4]))
    assert one.D_O == 0 and one.D_n == 0


@pytest.mark.parametrize("n,expected_k", [(16, 16), (20, 19), (10, 10), (39, 38), (40, 38)])
def test_quantile_ge_index(n, expected_k):
    ev = offsets_event(range(n))
    assert quantile_ge(ev, 95) == restore_offset(ev, expected_k)
    assert quantile_ge(ev, 100) == restore_offset(ev, n)


def test_quantile_ge_range():
    with pytest.raises(OutOfQuantileRange):
        quantile_ge(offsets_event([0, 1]), 0)


def test_quantile_interp_examples():
    ev = offsets_event([0, 1, 2, 3, 4])
    assert interp_position(5, 50) == 3
    assert quantile_interp(ev, 50) == 2.0
    assert interp_position(5, 90) == 5
    assert quantile_interp(ev, 90) == 4.0
    assert quantile_interp(ev, 0) == 0.0


def test_interp_position_is_exact():
    assert interp_position(20, 95) == Fraction(1, 3) + Fraction(61, 3) * Fraction(95, 100)
    assert interp_position(20, 95.0) == interp_position(20, 95)


def test_geometric_mean():
    ev = offsets_event([0, 1, 4])
    assert geometric_mean_restore(ev) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(NoPositiveRestores):
        geometric_mean_restore(offsets_event([0, 0]))


def test_lognormal_quantile_value():
    # offsets with mean log 0 and sample sd 1 after standardising
    rng = np.random.default_rng(5)
    logs = rng.normal(size=20)
    logs = (logs - logs.mean()) / logs.std(ddof=1)
    ev = offsets_event([0.0, *np.exp(logs)])
    fit = fit_event(ev)
    assert fit.mu == pytest.approx(0, abs=1e-12) and fit.sigma == pytest.approx(1, abs=1e-12)
    assert quantile_lognormal(ev, fit, 95) == pytest.approx(math.exp(1.6211), rel=1e-4)
    assert quantile_lognormal(ev, fit, 95) == pytest.approx(5.06, abs=0.005)


def test_lognormal_quantile_errors():
    ev = offsets_event([0, 1, 2, 3])
    with pytest.raises(OutOfQuantileRange):
        quantile_lognormal(ev, None, 25)
    with pytest.raises(OutOfQuantileRange):
        quantile_lognormal(ev, None, 100)
    with pytest.raises(SigmaUndefined):
        quantile_lognormal(offsets_event([0, 3]), None, 90)


def test_exponential_quantile_value():
    rng = np.random.default_rng(9)
    d = rng.exponential(10, 19)
    d *= 10 / d.mean()
    ev = offsets_event([0.0, *d])
    assert quantile_exponential(ev, None, 95) == pytest.approx(10 * math.log(19), rel=1e-9)
    assert quantile_exponential(ev, None, 5) == 0.0
    half = quantile_exponential(ev, None, 50)
    assert half == pytest.approx(10 * math.log(2 * 19 / 20), rel=1e-9)
    with pytest.raises(OutOfQuantileRange):
        quantile_exponential(ev, None, 4)


def test_positive_only_variant():
    ev = offsets_event([0, 0, 1, 2, 3, 4])
    fit = fit_event(ev)
    assert quantile_lognormal(ev, fit, 50, positive_only=True) == pytest.approx(math.exp(fit.mu))
    assert quantile_exponential(ev, fit, 50, positive_only=True) == pytest.approx(fit.tau * math.log(2))


def test_parse_metric():
    assert parse_metric("D_n", 20) == ("D_k", 20)
    assert parse_metric("D_n-1", 20) == ("D_k", 19)
    assert parse_metric("D_95") == ("D_x", 95)
    assert parse_metric("D_ln_97.5") == ("D_ln", Fraction("97.5"))
    assert parse_metric("tau") == ("tau", None)
    with pytest.raises(ValueError):
        parse_metric("bogus")


def usual_median(values):
    s = sorted(values)
    n = len(s)
    return s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2


@given(ev=minute_events())
@settings(max_examples=150, deadline=None)
def test_metric_invariants(ev):
    m = compute_metrics(ev, x_grid=(10, 50, 90, 95, 100))
    assert m.D_E == pytest.approx(m.D_r1 + m.D_n, rel=1e-12, abs=1e-15)
    assert m.D_x[100] == m.D_n
    xs = np.linspace(0, 100, 41)
    vals = [quantile_interp(ev, float(x)) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    offsets = [Fraction(r - ev.restore_times[0], 60) for r in ev.restore_times]
    assert Fraction(quantile_interp(ev, 50)) == pytest.approx(usual_median(offsets), rel=1e-15)
    for x in (10, 50, 90, 95, 100):
        assert m.D_ge[x] == m.D_k[math.ceil(ev.n * x / 100) - 1]
    if m.D_GM is not None:
        assert m.D_GM == math.exp(m.mu)
        pos = [d for d in m.D_k if d > 0]
        assert min(pos) * (1 - 1e-12) <= m.D_GM <= max(pos) * (1 + 1e-12)


@given(ev=minute_events(min_n=3), data=st.data())
@settings(max_examples=200, deadline=None)
def test_model_quantile_identities(ev, data):
    fit = fit_event(ev)
    n, z = fit.n, fit.z
    if z >= n:
        return
    x0 = Fraction(100 * z, n)
    assert quantile_exponential(ev, fit, x0) == 0.0
    if fit.sigma is not None and z < n:
        x_gm = 50 + Fraction(50 * z, n)
        assert quantile_lognormal(ev, fit, x_gm) == pytest.approx(math.exp(fit.mu), rel=1e-12)


def test_compute_metrics_nulls():
    m = compute_metrics(offsets_event([0, 0, 0]))
    assert m.D_GM is None and m.mu is None and all(v is None for v in m.D_x_ln.values())
    s = m.scalars()
    assert s["D_ln_95"] is None and s["D_50"] == 0.0
