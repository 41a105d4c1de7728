import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crossperm.engines import NullStats
from crossperm.validation import (
    NullSimConfig,
    ks_uniform_distance,
    null_quantiles,
    reference_quantiles,
    simulate_null,
    write_quantile_tsv,
)


def test_null_quantiles_examples():
    assert null_quantiles(NullStats([1.0, 2.0, 3.0, 4.0]), [0.5]) == [(0.5, 2.5)]
    sym = NullStats(np.concatenate([np.arange(1, 101), -np.arange(1, 101)]).astype(float))
    assert null_quantiles(sym, [0.5])[0][1] == pytest.approx(0.0)
    with pytest.raises(ValueError):
        null_quantiles(sym, [0.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=100))
def test_null_quantiles_monotone(vals):
    probs = [0.01, 0.1, 0.5, 0.9, 0.99]
    q = [v for _, v in null_quantiles(NullStats(vals), probs)]
    assert all(b >= a for a, b in zip(q, q[1:]))


def test_reference_quantiles():
    assert reference_quantiles("corr", 20, [0.5])[0] == pytest.approx(0.0, abs=1e-15)
    assert reference_quantiles("normal", 0, [0.975])[0] == pytest.approx(1.959964, abs=1e-6)
    q = reference_quantiles("welch", 12, [0.1, 0.9], df=9.3)
    assert q[0] == pytest.approx(-q[1], rel=1e-12)
    with pytest.raises(ValueError):
        reference_quantiles("james", 10, [0.5])


def test_ks_uniform_distance():
    assert ks_uniform_distance([0.5]) == 0.5
    p = (np.arange(1000) + 0.5) / 1000
    assert ks_uniform_distance(p) == pytest.approx(0.0005)


def test_config_validation():
    with pytest.raises(ValueError):
        NullSimConfig(test="corr", d=2)
    with pytest.raises(ValueError):
        NullSimConfig(test="corr", method="neto")
    with pytest.raises(ValueError):
        NullSimConfig(probs=(0.5, 0.1))
    with pytest.raises(ValueError):
        NullSimConfig(alpha=1.0)


def test_single_replication():
    rep = simulate_null(NullSimConfig(test="welch", reps=1, B=99), 3)
    assert rep.rejection_rate in (0.0, 1.0)
    assert rep.reps == 1


def test_report_independent_of_threads(tmp_path):
    cfg = dict(test="corr", n=15, reps=40, B=199)
    a = simulate_null(NullSimConfig(**cfg, threads=1), 5)
    b = simulate_null(NullSimConfig(**cfg, threads=4), 5)
    assert a == b
    write_quantile_tsv(a, tmp_path / "q.tsv")
    lines = (tmp_path / "q.tsv").read_text().splitlines()
    assert lines[0] == "prob\tempirical\treference"
    assert len(lines) == 1 + len(a.quantile_table)


def test_james_report_has_no_reference():
    rep = simulate_null(NullSimConfig(test="james", n=12, d=2, reps=5, B=99), 1)
    assert all(r is None for _, _, r in rep.quantile_table)
    assert rep.to_dict()["quantile_table"][0]["reference"] is None


@pytest.mark.slow
@pytest.mark.parametrize("test,scale2", [("corr", 1.0), ("welch", 3.0)])
def test_naive_and_efficient_rejection_rates_agree(test, scale2):
    kw = dict(test=test, n=30, reps=1000, B=999, scale2=scale2)
    eff = simulate_null(NullSimConfig(method="efficient", **kw), 42)
    naive = simulate_null(NullSimConfig(method="naive", **kw), 42)
    assert 0.03 <= eff.rejection_rate <= 0.07
    assert abs(eff.rejection_rate - naive.rejection_rate) <= 0.02


@pytest.mark.slow
@pytest.mark.parametrize("method", ["efficient", "ordinary"])
def test_james_null_rejection(method):
    rep = simulate_null(NullSimConfig(test="james", method=method, n=50, d=3, reps=500,
                                      B=999), 42)
    assert 0.02 <= rep.rejection_rate <= 0.08
