import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meanderwalk import verify
from meanderwalk.empirical import EmpiricalDistribution, ks_distance, ks_two_sample
from meanderwalk.rng import spawn_rng


def test_ecdf_basic():
    d = EmpiricalDistribution.from_samples([1.0, 2.0, 3.0])
    assert d.ecdf(2.0) == pytest.approx(2 / 3)
    assert d.ecdf(0.5) == 0.0
    assert d.ecdf(3.0) == 1.0


def test_ecdf_weighted():
    d = EmpiricalDistribution.from_samples([1.0, 2.0], weights=[3.0, 1.0])
    assert d.ecdf(1.5) == pytest.approx(0.75)


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        EmpiricalDistribution.from_samples([])


def test_ks_against_own_ecdf_is_zero():
    d = EmpiricalDistribution.from_samples([0.1, 0.4, 0.9, 2.0])
    assert ks_distance(d, d.ecdf) == 0.0


def test_ks_uniform_calibration():
    rng = spawn_rng(123, 0)
    u = rng.random(10000)
    d = EmpiricalDistribution.from_samples(u)
    ks = ks_distance(d, lambda x: np.clip(x, 0, 1))
    assert ks <= 0.025


@given(seed=st.integers(0, 10000))
@settings(max_examples=20, deadline=None)
def test_ks_invariant_under_increasing_transform(seed):
    rng = spawn_rng(seed, 1)
    x = rng.exponential(1.0, size=200) + 0.1
    cdf = lambda v: 1.0 - np.exp(-np.clip(np.asarray(v) - 0.1, 0, None))
    d1 = ks_distance(EmpiricalDistribution.from_samples(x), cdf)
    # transform both the data and the reference by v -> v**3
    d2 = ks_distance(
        EmpiricalDistribution.from_samples(x**3),
        lambda v: cdf(np.cbrt(np.asarray(v))),
    )
    assert d1 == pytest.approx(d2, abs=1e-12)


def test_ks_two_sample_identical_is_zero():
    a = np.array([1.0, 2.0, 5.0])
    assert ks_two_sample(a, a) == 0.0
    b = np.array([10.0, 12.0])
    assert ks_two_sample(a, b) == 1.0


def test_report_canonical_json_excludes_meta(srw_env):
    rep = verify.verify_ratio(srw_env, 64, (0.5, 1.0))
    doc = json.loads(rep.canonical_json())
    assert "meta" not in doc
    assert doc["name"] == "ratio"
    assert rep.meta["runtime_s"] >= 0


def test_ratio_exact_at_t1(srw_env):
    rep = verify.verify_ratio(srw_env, 128, (1.0,))
    assert rep.checks[0]["value"] == 0.0
    assert rep.passed


def test_ratio_reproducible(srw_env):
    a = verify.verify_ratio(srw_env, 256, (0.25, 0.5))
    b = verify.verify_ratio(srw_env, 256, (0.25, 0.5))
    assert a.canonical_json() == b.canonical_json()


def test_rayleigh_small_scale(srw_env_large):
    rep = verify.verify_rayleigh(srw_env_large, 256, 4000, seed=5, sigma=1.0)
    # small n carries visible lattice bias; just require sanity here
    assert rep.checks[0]["value"] <= 0.06
    assert rep.params["n"] == 256


def test_thresholds_single_block():
    t = verify.THRESHOLDS
    assert t.ks_rayleigh_srw == 0.02
    assert t.ks_rayleigh_random == 0.03
    assert t.ks_marginal == 0.03
    assert t.oracle_tol == 1e-12


def test_report_plot_csv(tmp_path, srw_env_large):
    rep = verify.verify_rayleigh(srw_env_large, 128, 2000, seed=5, sigma=1.0)
    rep.write_plot_csv(tmp_path)
    files = list(tmp_path.glob("rayleigh_*.csv"))
    assert files
    header = files[0].read_text().splitlines()[0]
    assert header == "x,empirical,target"


def test_report_write_json(tmp_path, srw_env):
    rep = verify.verify_ratio(srw_env, 64, (0.5,))
    f = tmp_path / "r.json"
    rep.write_json(f)
    doc = json.loads(f.read_text())
    assert doc["result"]["passed"] == rep.passed
    assert "runtime_s" in doc["meta"]


def test_verification_report_pass_iff_all_checks(srw_env):
    rep = verify.verify_ratio(srw_env, 64, (0.25, 0.5, 1.0))
    assert rep.passed == all(c["ok"] for c in rep.checks)
