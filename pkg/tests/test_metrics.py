import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from powerbias.dist import Exponential, Gamma, Normal, PointMass, UniformInterval, sample
from powerbias.metrics import (
    CheckReport,
    Subtest,
    chi2_threshold,
    ecdf_table,
    ks_critical_value,
    ks_one_sample,
    ks_two_sample,
    wasserstein1,
)
from powerbias.rng import stream

arrays = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60).map(np.array)


def test_critical_value():
    assert ks_critical_value(1e-3) == pytest.approx(1.9495, abs=1e-4)


def test_identical_batches():
    x = sample(Normal(0.0, 1.0), stream(1), 1000)
    assert ks_two_sample(x, x).statistic == 0.0
    assert wasserstein1(x, x) == 0.0


def test_null_and_power():
    a = sample(Normal(0.0, 1.0), stream(1), 100_000)
    b = sample(Normal(0.0, 1.0), stream(2), 100_000)
    c = sample(Exponential(1.0), stream(3), 100_000)
    assert not ks_two_sample(a, b).rejects
    assert ks_two_sample(a, c).rejects
    res = ks_two_sample(a, b)
    assert res.threshold == pytest.approx(ks_critical_value(1e-3) * math.sqrt(2 / 100_000))


def test_one_sample():
    u = sample(UniformInterval(0.0, 1.0), stream(4), 50_000)
    assert not ks_one_sample(u, UniformInterval(0.0, 1.0)).rejects
    g = sample(Gamma(2.0, 1.0), stream(5), 50_000)
    assert ks_one_sample(g, Exponential(1.0)).rejects


@settings(max_examples=60, deadline=None)
@given(x=arrays, y=arrays)
def test_ks_matches_scipy_and_is_symmetric(x, y):
    ours = ks_two_sample(x, y).statistic
    assert ours == pytest.approx(stats.ks_2samp(x, y, method="asymp").statistic, abs=1e-12)
    assert ours == ks_two_sample(y, x).statistic


@settings(max_examples=40, deadline=None)
@given(x=arrays, y=arrays)
def test_ks_invariant_under_monotone_map(x, y):
    # pooled ranks, cubed: strictly increasing on the observed values without float ties
    pool = np.unique(np.concatenate([x, y]))
    f = lambda t: (np.searchsorted(pool, t).astype(float) - 3.5) ** 3
    assert ks_two_sample(x, y).statistic == pytest.approx(ks_two_sample(f(x), f(y)).statistic, abs=1e-12)


def test_ks_one_sample_matches_scipy():
    x = sample(Normal(0.3, 1.0), stream(6), 2000).values
    assert ks_one_sample(x, Normal(0.0, 1.0)).statistic == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)


def test_wasserstein_examples():
    zero = sample(PointMass(0.0), stream(1), 1000)
    one = sample(PointMass(1.0), stream(1), 1000)
    assert wasserstein1(zero, one) == 1.0
    a = sample(Normal(0.0, 1.0), stream(7), 100_000)
    b = sample(Normal(0.5, 1.0), stream(8), 100_000)
    assert abs(wasserstein1(a, b) - 0.5) < 0.02


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50).flatmap(lambda n: st.tuples(*[st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n)] * 3)))
def test_wasserstein_metric_properties(triple):
    x, y, z = (np.array(t) for t in triple)
    assert wasserstein1(x, y) == pytest.approx(stats.wasserstein_distance(x, y), abs=1e-9)
    assert wasserstein1(x, y) == wasserstein1(y, x)
    assert wasserstein1(x, z) <= wasserstein1(x, y) + wasserstein1(y, z) + 1e-9


def test_wasserstein_unequal_sizes():
    a = sample(Normal(0.0, 1.0), stream(9), 40_000)
    b = sample(Normal(1.0, 1.0), stream(10), 10_000)
    assert abs(wasserstein1(a, b) - 1.0) < 0.05


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        ks_two_sample(np.array([]), np.array([1.0]))


def test_null_calibration():
    rejections = 0
    for seed in range(200):
        x = sample(Normal(0.0, 1.0), stream(seed, 0), 5000)
        y = sample(Normal(0.0, 1.0), stream(seed, 1), 5000)
        rejections += ks_two_sample(x, y).rejects
    assert rejections <= 2


def test_chi2_threshold():
    assert chi2_threshold(1, 0.05) == pytest.approx(3.841458820694124)


def test_ecdf_table():
    x = sample(UniformInterval(0.0, 1.0), stream(1), 5000)
    rows = ecdf_table(x, UniformInterval(0.0, 1.0), points=50)
    assert all(abs(e - r) < 0.05 for _, e, r in rows)
    assert rows[-1][1] == 1.0


def test_report_round_trip_and_decisions():
    rows = [
        Subtest("ok", 0.1, 0.2),
        Subtest("control", 5.0, 1.0, expect="above"),
        Subtest("bad", 3.0, 1.0, threshold_adjusted=4.0, detail={"k": 1}),
        Subtest("infinite", math.inf, 1.0, expect="above"),
    ]
    rep = CheckReport("demo", {"a": 1}, 42, 100, rows)
    assert rep.statistic == 1.0 and rep.threshold == 0.0 and not rep.passed
    assert rep.passed_adjusted
    data = rep.to_dict()
    assert data["subtests"][3]["statistic"] == "inf"
    back = CheckReport.from_dict(data)
    assert back.to_dict() == data


def test_report_schema_version_checked():
    data = CheckReport("demo", {}, 1, 10, []).to_dict()
    data["schema_version"] = 99
    with pytest.raises(ValueError):
        CheckReport.from_dict(data)
