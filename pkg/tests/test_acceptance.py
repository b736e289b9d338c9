"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines; the heavyweight conditioned-sampling batches are shared through
session fixtures, so the whole suite completes in a few minutes.
"""

import json
import math

import numpy as np
import pytest

import meanderwalk as mw
from meanderwalk import continuum, network, particles, verify, walk
from meanderwalk.empirical import EmpiricalDistribution, ks_distance

from _oracles import enumerate_crossing_paths, enumerate_meander_law
from conftest import ACC_M, ACC_N

T = verify.THRESHOLDS


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion} failed: {detail}"


# -- criterion 1: exact-oracle equivalence ----------------------------------


def test_criterion_1_exact_oracle_equivalence(srw_env, rand2_env):
    worst = 0.0
    # meander laws against exhaustive enumeration
    for env, n in ((srw_env, 10), (rand2_env, 7)):
        law, _ = enumerate_meander_law(env, n)
        _, table = mw.survival_probability(env, n, window_w=n * env.r_max + 4)
        assert table.bracket_width == 0.0
        for path, p_enum in law.items():
            p_tr = walk.meander_path_probability(table, np.array(path))
            worst = max(worst, abs(p_tr - p_enum))
    # crossing laws against truncated path enumeration
    for env, N, max_len in ((srw_env, 5, 13), (rand2_env, 5, 7)):
        law, p_cross = enumerate_crossing_paths(env, N, max_len)
        table = mw.harmonic_hit(env, N)
        assert abs(table.p_cross - p_cross) <= 1e-12
        covered = 0.0
        for path, p_enum in law.items():
            p_tr = walk.crossing_path_probability(table, np.array(path))
            worst = max(worst, abs(p_tr - p_enum))
            covered += p_enum
        assert covered > 0.5  # the enumerated set carries real mass
    report(
        "criterion-1 exact-oracle",
        worst <= T.oracle_tol,
        f"max |transform - enumeration| = {worst:.3e} (tol {T.oracle_tol:.0e})",
    )


# -- criterion 2: Rayleigh endpoint law --------------------------------------


def test_criterion_2_rayleigh(srw_env_large, rand3_env_large, srw_meander_batch, rand3_meander_batch):
    rep_srw = verify.verify_rayleigh(
        srw_env_large, ACC_N, ACC_M, seed=3, sigma=1.0,
        _samples=srw_meander_batch["recs"][ACC_N],
    )
    rep_rand = verify.verify_rayleigh(
        rand3_env_large, ACC_N, ACC_M, seed=3, sigma=rand3_meander_batch["sigma"],
        _samples=rand3_meander_batch["recs"][ACC_N],
    )
    ks_srw = rep_srw.checks[0]["value"]
    ks_rand = rep_rand.checks[0]["value"]
    report(
        "criterion-2 rayleigh",
        rep_srw.passed and rep_rand.passed,
        f"KS srw = {ks_srw:.4f} (tol {T.ks_rayleigh_srw}), "
        f"KS random = {ks_rand:.4f} (tol {T.ks_rayleigh_random})",
    )


# -- criterion 3: meander mid-time marginals ---------------------------------


def test_criterion_3_marginals(srw_env_large, rand3_env_large, srw_meander_batch, rand3_meander_batch):
    t_list = (0.25, 0.5, 0.75)
    rep_srw = verify.verify_marginal(
        srw_env_large, ACC_N, t_list, ACC_M, seed=3, sigma=1.0,
        _recs=srw_meander_batch["recs"],
    )
    rep_rand = verify.verify_marginal(
        rand3_env_large, ACC_N, t_list, ACC_M, seed=3,
        sigma=rand3_meander_batch["sigma"], _recs=rand3_meander_batch["recs"],
    )
    vals = [round(c["value"], 4) for c in rep_srw.checks + rep_rand.checks]
    report(
        "criterion-3 marginal",
        rep_srw.passed and rep_rand.passed,
        f"KS per t (srw then random) = {vals} (tol {T.ks_marginal})",
    )


# -- criterion 4: survival ratio ---------------------------------------------


def test_criterion_4_survival_ratio(srw_env_large, rand3_env_large):
    rep_srw = verify.verify_ratio(srw_env_large, ACC_N, (0.25, 0.5))
    rep_rand = verify.verify_ratio(rand3_env_large, ACC_N, (0.25, 0.5))
    vals = [round(c["value"], 5) for c in rep_srw.checks + rep_rand.checks]
    report(
        "criterion-4 survival-ratio",
        rep_srw.passed and rep_rand.passed,
        f"|ratio*sqrt(t) - 1| (srw then random) = {vals} "
        f"(tol {T.ratio_srw} / {T.ratio_random})",
    )


# -- criterion 5: crossing-probability and exit-time lemmas ------------------


def test_criterion_5_crossing_lemmas(srw_env_large, rand3_env_large):
    sweep = (8, 16, 32, 64, 128, 256)
    rep_srw = verify.verify_crossing_lemmas(srw_env_large, sweep)
    srw_vals = np.array(rep_srw.meta["np_cross"])
    srw_exact_half = np.abs(srw_vals - 0.5).max() <= 1e-12
    rep_rand = verify.verify_crossing_lemmas(rand3_env_large, sweep)
    flat = dict((c["name"], c["value"]) for c in rep_rand.checks)["np_cross_flatness"]
    ok = rep_srw.passed and rep_rand.passed and srw_exact_half
    report(
        "criterion-5 lemmas",
        ok,
        f"srw N*P === 1/2: {srw_exact_half}; random flatness = {flat:.4f} "
        f"(tol {T.lemma_flatness}); little bound dominates on every instance",
    )


# -- criterion 6: uniform overshoot control ----------------------------------


def test_criterion_6_overshoot(rand8_env):
    rep = verify.verify_overshoot(rand8_env, (32, 64, 128), 3000, seed=5)
    m_star = rep.meta["min_uniform_m"][str(T.overshoot_eta)]
    sup_tail = [c for c in rep.checks if c["name"].endswith(f"eta{T.overshoot_eta}")][0]
    report(
        "criterion-6 overshoot",
        rep.passed,
        f"single M = {m_star} gives conditional tail {sup_tail['value']:.4f} <= "
        f"{T.overshoot_eta} simultaneously for N in (32, 64, 128)",
    )


# -- criterion 7: particle-system reversibility and Little's law -------------


def test_criterion_7_particles(rand3_env, srw_env):
    worst = 0.0
    for env in (srw_env, rand3_env):
        spec = particles.build_particle_system(env, 4)
        rr = particles.check_reversibility(spec, max_particles=3, tol=T.reversibility_tol)
        worst = max(worst, rr.max_violation)
        assert rr.passed
    model = particles.build_queue(rand3_env, 32)
    q = particles.simulate_queue(model, 1e5 / model.lambda_0, seed=21)
    exact = network.expected_exit_time_exact(rand3_env, 32)
    et_ok = abs(q.e_t_hat - exact) <= 3 * q.e_t_se
    little_ok = q.little_rel_err <= T.little_rel
    report(
        "criterion-7 particles",
        et_ok and little_ok,
        f"detailed-balance violation = {worst:.2e} (tol {T.reversibility_tol:.0e}); "
        f"Little rel err = {q.little_rel_err:.4f} (tol {T.little_rel}); "
        f"E_T = {q.e_t_hat:.3f} vs exact {exact:.3f} (3se = {3 * q.e_t_se:.3f})",
    )


# -- criterion 8: crossing-time limit law ------------------------------------


def test_criterion_8_corollary(srw_env_large):
    rho_cert, _ = continuum.sample_rho1_batch(10000, 1e-5, 1.0, seed=42)
    se = rho_cert.std(ddof=1) / math.sqrt(rho_cert.size)
    cert_ok = abs(rho_cert.mean() - 1 / 3) <= 3 * se

    rep = verify.verify_corollary(srw_env_large, 64, 10000, seed=9, sigma=1.0)
    ks = rep.checks[0]["value"]
    report(
        "criterion-8 corollary",
        cert_ok and rep.passed,
        f"E[rho1] = {rho_cert.mean():.5f} vs 1/3 (3se = {3 * se:.5f}); "
        f"two-sample KS(T_n, rho1) = {ks:.4f} (tol {T.ks_corollary})",
    )


# -- criterion 9: continuum self-checks --------------------------------------


def test_criterion_9_continuum():
    vals, _ = continuum.sample_meander_batch(10000, 2**-10, seed=11)
    dist = EmpiricalDistribution.from_samples(vals[:, -1])
    ks = ks_distance(dist, lambda x: 1.0 - np.exp(-np.square(x) / 2))
    ks_ok = ks <= T.meander_endpoint_ks

    norm_dev = max(abs(continuum.q_normalization(t) - 1.0) for t in (0.1, 0.5, 0.9, 1.0))
    norm_ok = norm_dev <= T.q_norm_tol

    a, c, delta = 1.0, 9.0, 3.0
    bound = continuum.meander_sup_tail(a, c, delta)
    cols = int((a + delta) / (c + delta) / 2**-10) + 1
    sup = vals[:, :cols].max(axis=1)
    emp = float((sup < (c + delta) ** -0.5).mean())
    se = math.sqrt(max(emp * (1 - emp), 1e-9) / len(sup))
    juni_ok = emp <= bound + 3 * se

    report(
        "criterion-9 continuum",
        ks_ok and norm_ok and juni_ok,
        f"meander endpoint KS = {ks:.4f} (tol {T.meander_endpoint_ks}); "
        f"max |q-norm - 1| = {norm_dev:.2e} (tol {T.q_norm_tol:.0e}); "
        f"sup-tail MC {emp:.4f} <= bound {bound:.4f} + 3se",
    )


# -- criterion 10: determinism ------------------------------------------------


def test_criterion_10_determinism(srw_env_large, rand3_env):
    pairs = []
    for _ in range(2):
        r1 = verify.verify_ratio(srw_env_large, 512, (0.25, 0.5))
        r2 = verify.verify_rayleigh(srw_env_large, 256, 2000, seed=5, sigma=1.0)
        r3 = verify.verify_crossing_lemmas(rand3_env, (8, 16, 32))
        pairs.append((r1.canonical_json(), r2.canonical_json(), r3.canonical_json()))
    same = pairs[0] == pairs[1]

    # raw sampling layers repeat byte-identically as well
    _, table = mw.survival_probability(rand3_env, 24)
    a = walk.sample_meander_batch(table, 200, seed=7, record_steps=[24])[24]
    b = walk.sample_meander_batch(table, 200, seed=7, record_steps=[24])[24]
    samples_same = np.array_equal(a, b)

    report(
        "criterion-10 determinism",
        same and samples_same,
        "byte-identical reports and samples on repeated runs with fixed seeds",
    )
