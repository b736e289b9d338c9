"""Verification suites: discrete-walk functionals against their limit laws.

Every suite returns a VerificationReport whose `result` block is a pure
function of (environment, seeds, parameters); wall-clock time and other
incidentals live in `meta` and are excluded from canonical serialisation,
so identical invocations produce byte-identical reports.

All tolerances sit in THRESHOLDS.  Monte Carlo thresholds are roughly
three times the null KS scale 1.36/sqrt(m) plus a finite-size budget
calibrated on the fair nearest-neighbour walk, where exact oracles
exist; exact-recursion checks carry their own deterministic tolerances.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import continuum, network, walk
from .empirical import EmpiricalDistribution, ks_distance, ks_two_sample
from .environment import Environment


@dataclass(frozen=True)
class Thresholds:
    ks_rayleigh_srw: float = 0.02
    ks_rayleigh_random: float = 0.03
    ks_marginal: float = 0.03
    ratio_srw: float = 0.05
    ratio_random: float = 0.08
    lemma_flatness: float = 0.20
    exit_over_n_max: float = 0.8
    overshoot_eta: float = 0.05
    overshoot_eta_loose: float = 0.1
    reversibility_tol: float = 1e-12
    little_rel: float = 0.05
    ks_corollary: float = 0.05
    ks_corollary_marginal: float = 0.05
    meander_endpoint_ks: float = 0.02
    meander_midtime_ks: float = 0.03
    q_norm_tol: float = 1e-8
    oracle_tol: float = 1e-12
    solver_agreement: float = 1e-10
    tightness_x3_window: float = 0.01
    tightness_small_t_cap: float = 0.2
    tightness_small_h_floor: float = 0.97


THRESHOLDS = Thresholds()


@dataclass(eq=False)
class VerificationReport:
    name: str
    params: dict
    checks: list  # dicts: {name, value, threshold, op, ok}
    passed: bool
    meta: dict = field(default_factory=dict)

    def result_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "checks": self.checks,
            "passed": self.passed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.result_dict(), sort_keys=True, separators=(",", ":"))

    def to_json(self) -> str:
        doc = {"result": self.result_dict(), "meta": self.meta}
        return json.dumps(doc, sort_keys=True, indent=2)

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def write_plot_csv(self, directory: str | Path) -> None:
        """(x, empirical, target) rows for any check that carried curve data."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        curves = self.meta.get("curves", {})
        for label, cols in curves.items():
            lines = ["x,empirical,target"]
            lines += [f"{a!r},{b!r},{c!r}" for a, b, c in zip(*cols)]
            (directory / f"{self.name}_{label}.csv").write_text("\n".join(lines) + "\n")


def _check(name: str, value: float, threshold: float, op: str = "<=") -> dict:
    ok = value <= threshold if op == "<=" else value >= threshold
    return {"name": name, "value": float(value), "threshold": float(threshold), "op": op, "ok": bool(ok)}


def _finish(name, params, checks, t0, meta=None) -> VerificationReport:
    meta = dict(meta or {})
    meta["runtime_s"] = time.perf_counter() - t0
    return VerificationReport(
        name=name,
        params=params,
        checks=checks,
        passed=all(c["ok"] for c in checks),
        meta=meta,
    )


def rayleigh_cdf(x):
    return 1.0 - np.exp(-np.square(x) / 2.0)


def _q_cdf_on_samples(t: float, xs: np.ndarray) -> np.ndarray:
    """Quadrature CDF of the meander marginal, evaluated once per unique value."""
    uniq, inv = np.unique(xs, return_inverse=True)
    vals = np.array([continuum.q_cdf(t, float(x)) for x in uniq])
    return vals[inv]


def resolve_sigma(env: Environment, seed: int, n_fit: int = 4096):
    """sigma = 1 exactly for the fair nearest-neighbour walk; otherwise the
    noise-free slope of the exact variance profile (the Monte Carlo
    estimator stays available and is tested against this value)."""
    if env.params.generator_kind.value == "deterministic_srw":
        return 1.0, 0.0
    n_fit = min(n_fit, 2 * min(env.interior_max, -env.interior_min))
    return walk.sigma_exact(env, n_fit), 0.0


# ---------------------------------------------------------------------------
# conditioned-walk suites
# ---------------------------------------------------------------------------


def meander_slices(env, n, m, seed, slice_steps, table=None):
    """Conditioned-positive positions at the requested steps (cached table)."""
    if table is None:
        _, table = walk.survival_probability(env, n)
    recs = walk.sample_meander_batch(table, m, seed, record_steps=slice_steps)
    return recs, table


def verify_rayleigh(
    env: Environment,
    n: int,
    m: int,
    seed: int,
    sigma: float | None = None,
    thresholds: Thresholds = THRESHOLDS,
    _samples: np.ndarray | None = None,
) -> VerificationReport:
    """Endpoint of the conditioned walk against the Rayleigh law."""
    t0 = time.perf_counter()
    if sigma is None:
        sigma, _ = resolve_sigma(env, seed + 1)
    if _samples is None:
        recs, _ = meander_slices(env, n, m, seed, [n])
        endpoint = recs[n]
    else:
        endpoint = _samples
    z = endpoint / (sigma * math.sqrt(n))
    dist = EmpiricalDistribution.from_samples(z)
    ks = ks_distance(dist, rayleigh_cdf)
    srw = env.params.generator_kind.value == "deterministic_srw"
    thr = thresholds.ks_rayleigh_srw if srw else thresholds.ks_rayleigh_random
    checks = [
        _check("ks_rayleigh", ks, thr),
        _check("all_positive", float((endpoint > 0).mean()), 1.0, op=">="),
    ]
    grid = np.linspace(0.0, 3.5, 71)
    meta = {"curves": {"rayleigh": (grid.tolist(), dist.ecdf(grid).tolist(), rayleigh_cdf(grid).tolist())}}
    return _finish(
        "rayleigh",
        {"env_id": env.env_id, "n": n, "m": m, "seed": seed, "sigma": sigma},
        checks,
        t0,
        meta,
    )


def verify_marginal(
    env: Environment,
    n: int,
    t_list,
    m: int,
    seed: int,
    sigma: float | None = None,
    thresholds: Thresholds = THRESHOLDS,
    _recs: dict | None = None,
) -> VerificationReport:
    """Mid-time marginals of the conditioned walk against the meander density."""
    t0 = time.perf_counter()
    if sigma is None:
        sigma, _ = resolve_sigma(env, seed + 1)
    t_list = list(t_list)
    steps = [int(math.floor(n * t)) for t in t_list]
    if _recs is None:
        _recs, _ = meander_slices(env, n, m, seed, steps)
    checks = []
    curves = {}
    for t, step in zip(t_list, steps):
        z = _recs[step] / (sigma * math.sqrt(n))
        dist = EmpiricalDistribution.from_samples(z)
        ks = ks_distance(dist, lambda xs, tt=t: _q_cdf_on_samples(tt, xs))
        checks.append(_check(f"ks_marginal_t{t}", ks, thresholds.ks_marginal))
        grid = np.linspace(0.0, 3.0, 61)
        curves[f"t{t}"] = (
            grid.tolist(),
            dist.ecdf(grid).tolist(),
            [continuum.q_cdf(t, float(g)) for g in grid],
        )
    return _finish(
        "marginal",
        {"env_id": env.env_id, "n": n, "t_list": t_list, "m": m, "seed": seed, "sigma": sigma},
        checks,
        t0,
        {"curves": curves},
    )


def verify_ratio(
    env: Environment, n: int, t_list, thresholds: Thresholds = THRESHOLDS
) -> VerificationReport:
    """Exact survival ratios: P[stay positive nt steps] / P[... n steps]
    times sqrt(t) should approach one."""
    t0 = time.perf_counter()
    srw = env.params.generator_kind.value == "deterministic_srw"
    thr = thresholds.ratio_srw if srw else thresholds.ratio_random
    p_n, _ = walk.survival_probability(env, n, keep_table=False)
    checks = []
    for t in t_list:
        nt = int(math.floor(n * t))
        p_nt, _ = walk.survival_probability(env, nt, keep_table=False)
        dev = abs((p_nt / p_n) * math.sqrt(t) - 1.0)
        checks.append(_check(f"ratio_t{t}", dev, thr if t != 1.0 else 1e-12))
    return _finish(
        "ratio", {"env_id": env.env_id, "n": n, "t_list": list(t_list)}, checks, t0
    )


def verify_overshoot(
    env: Environment,
    n_list,
    m: int,
    seed: int,
    thresholds: Thresholds = THRESHOLDS,
) -> VerificationReport:
    """Conditional overshoot of the crossing position above the level.

    Checks that one margin M controls the conditional tail below eta
    simultaneously over all levels in `n_list`.
    """
    t0 = time.perf_counter()
    per_level = {}
    for i, N in enumerate(n_list):
        table = walk.harmonic_hit(env, N)
        batch = walk.sample_crossing_batch(table, m, seed + i)
        per_level[N] = batch.x_hit - N
    r = env.params.r_max
    etas = sorted({thresholds.overshoot_eta, thresholds.overshoot_eta_loose})
    checks = []
    min_m = {}
    for eta in etas:
        worst = 0
        for N, over in per_level.items():
            ms = np.arange(0, r)
            tails = np.array([(over > M).mean() for M in ms])
            hit = np.nonzero(tails <= eta)[0]
            worst = max(worst, int(ms[hit[0]]) if hit.size else r)
        min_m[eta] = worst
        sup_tail = max(float((over > worst).mean()) for over in per_level.values())
        checks.append(_check(f"sup_tail_at_uniform_M_eta{eta}", sup_tail, eta))
        checks.append(_check(f"uniform_M_eta{eta}", float(worst), float(r - 1)))
    return _finish(
        "overshoot",
        {"env_id": env.env_id, "n_list": list(n_list), "m": m, "seed": seed},
        checks,
        t0,
        {"min_uniform_m": {str(k): v for k, v in min_m.items()}},
    )


def verify_crossing_lemmas(
    env: Environment, n_list, thresholds: Thresholds = THRESHOLDS
) -> VerificationReport:
    """Exact crossing probabilities and exit times across a sweep of levels.

    N * P[cross] must stay flat (bounded below, no decay trend) and the
    exit time per unit level bounded above by the queue mass ratio.
    """
    t0 = time.perf_counter()
    np_cross = []
    exit_over_n = []
    bound_ok = True
    for N in n_list:
        p = network.crossing_probability_exact(env, N)
        e = network.expected_exit_time_exact(env, N)
        red = network.reduce(env, N, network.ReductionKind.OMEGA3)
        lb = network.little_bound(red)
        np_cross.append(N * p)
        exit_over_n.append(e / N)
        bound_ok = bound_ok and (lb >= e)
    np_cross = np.array(np_cross)
    exit_over_n = np.array(exit_over_n)
    flat = float(np_cross.max() / np_cross.min() - 1.0)
    # decay trend: slope of N*P against log N, scaled by the mean
    lx = np.log(np.asarray(n_list, dtype=float))
    slope = float(np.polyfit(lx, np_cross, 1)[0] / np_cross.mean())
    checks = [
        _check("np_cross_min_positive", float(np_cross.min()), 0.0, op=">="),
        _check("np_cross_flatness", flat, thresholds.lemma_flatness),
        _check("np_cross_no_decay_trend", -slope, thresholds.lemma_flatness),
        _check("exit_over_n_max", float(exit_over_n.max()), thresholds.exit_over_n_max
               if env.params.generator_kind.value == "deterministic_srw" else 10.0),
        _check("little_bound_dominates", 1.0 if bound_ok else 0.0, 1.0, op=">="),
    ]
    return _finish(
        "lemmas",
        {"env_id": env.env_id, "n_list": list(n_list)},
        checks,
        t0,
        {"np_cross": np_cross.tolist(), "exit_over_n": exit_over_n.tolist()},
    )


def verify_corollary(
    env: Environment,
    n: int,
    m: int,
    seed: int,
    sigma: float | None = None,
    dt_rho: float = 1e-4,
    t_marginal: float = 0.1,
    thresholds: Thresholds = THRESHOLDS,
) -> VerificationReport:
    """Crossing time and stopped path against the Bessel-3 pair.

    The walk conditioned to reach level n before the nonpositive half-line
    yields the crossing time of the polygonal path on the n^2 clock; the
    reference is the Bessel-3 first passage of 1/sigma.
    """
    t0 = time.perf_counter()
    if sigma is None:
        sigma, _ = resolve_sigma(env, seed + 1)
    table = walk.harmonic_hit(env, n)
    n2 = n * n
    u0 = int(math.floor(n2 * t_marginal))
    batch = walk.sample_crossing_batch(table, m, seed, record_steps=(u0, u0 + 1))

    frac = (n - batch.x_prev) / (batch.x_hit - batch.x_prev)
    t_n = ((batch.tau - 1) + frac) / n2

    rho, bessel_at_t0 = continuum.sample_rho1_batch(
        m, dt_rho, sigma, seed + 17, record_at=t_marginal
    )

    # stopped-path marginal at t_marginal: frozen at 1/sigma once crossed
    ga = batch.records[u0].astype(float)
    gb = batch.records[u0 + 1].astype(float)
    interp = (ga + (n2 * t_marginal - u0) * (gb - ga)) / (sigma * n)
    y_t0 = np.where(batch.tau > u0 + 1, interp, 1.0 / sigma)
    # paths that crossed inside (u0, u0+1] still contribute their pre-hit value
    mid = (batch.tau == u0 + 1)
    if mid.any():
        cut = np.minimum(frac[mid], n2 * t_marginal - u0)
        y_t0[mid] = (ga[mid] + cut * (batch.x_hit[mid] - ga[mid])) / (sigma * n)
        y_t0[mid & (t_n <= t_marginal)] = 1.0 / sigma

    ks_t = ks_two_sample(t_n, rho)
    ks_y = ks_two_sample(y_t0, bessel_at_t0)
    checks = [
        _check("ks_crossing_time", ks_t, thresholds.ks_corollary),
        _check("all_crossed", float(np.isfinite(t_n).mean()), 1.0, op=">="),
        _check("ks_path_marginal", ks_y, thresholds.ks_corollary_marginal),
    ]
    return _finish(
        "corollary",
        {
            "env_id": env.env_id,
            "n": n,
            "m": m,
            "seed": seed,
            "sigma": sigma,
            "dt_rho": dt_rho,
            "t_marginal": t_marginal,
        },
        checks,
        t0,
        {"mean_rho": float(rho.mean()), "mean_t_n": float(t_n.mean())},
    )


def verify_tightness_probe(
    env: Environment,
    n: int,
    m: int,
    seed: int,
    sigma: float | None = None,
    x_list=(2.0, 2.5, 3.0),
    small_t_list=(0.04, 0.02, 0.01),
    h_small_t: float = 0.3,
    h_floor: float = 0.05,
    t_mid: float = 0.5,
    thresholds: Thresholds = THRESHOLDS,
) -> VerificationReport:
    """Finite-n probes of the tightness and positivity conditions.

    Tail of the endpoint decreasing in x with the Rayleigh target at x=3;
    early-time mass above a fixed level shrinking as t decreases; mass
    above a small level at a fixed mid time close to one.
    """
    t0 = time.perf_counter()
    if sigma is None:
        sigma, _ = resolve_sigma(env, seed + 1)
    steps = sorted({n} | {int(math.floor(n * t)) for t in small_t_list} | {int(math.floor(n * t_mid))})
    recs, _ = meander_slices(env, n, m, seed, steps)
    scale = sigma * math.sqrt(n)

    z1 = recs[n] / scale
    tails = [float((z1 > x).mean()) for x in x_list]
    target_x3 = math.exp(-x_list[-1] ** 2 / 2.0)
    mono_x = all(a >= b for a, b in zip(tails, tails[1:]))

    small_t_tail = [
        float((recs[int(math.floor(n * t))] / scale > h_small_t).mean()) for t in small_t_list
    ]
    mono_t = all(a >= b for a, b in zip(small_t_tail, small_t_tail[1:]))

    mid_mass = float((recs[int(math.floor(n * t_mid))] / scale > h_floor).mean())

    checks = [
        _check("endpoint_tail_monotone_in_x", 1.0 if mono_x else 0.0, 1.0, op=">="),
        _check("endpoint_tail_x3_abs_err", abs(tails[-1] - target_x3), thresholds.tightness_x3_window),
        _check("small_t_tail_monotone", 1.0 if mono_t else 0.0, 1.0, op=">="),
        _check("small_t_terminal", small_t_tail[-1], thresholds.tightness_small_t_cap),
        _check("small_h_mass", mid_mass, thresholds.tightness_small_h_floor, op=">="),
    ]
    return _finish(
        "tightness",
        {
            "env_id": env.env_id,
            "n": n,
            "m": m,
            "seed": seed,
            "sigma": sigma,
            "x_list": list(x_list),
            "small_t_list": list(small_t_list),
            "h_small_t": h_small_t,
            "h_floor": h_floor,
            "t_mid": t_mid,
        },
        checks,
        t0,
        {"endpoint_tails": tails, "small_t_tails": small_t_tail},
    )


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def panel_envs(base: Environment, per_family: int, seed: int) -> list[Environment]:
    """Fresh environments (iid and modulated families) sharing the base
    window, used as a finite stand-in for the almost-sure statements."""
    from .environment import EnvironmentParams, GeneratorKind

    out = []
    p = base.params
    for fam_idx, kind in enumerate(
        (GeneratorKind.IID_UNIFORM, GeneratorKind.MARKOV_MODULATED)
    ):
        for j in range(per_family):
            params = EnvironmentParams(
                kappa=0.5,
                k_bound=2.0,
                beta=1.0,
                r_max=max(p.r_max, 2),
                x_min=p.x_min,
                x_max=p.x_max,
                generator_kind=kind,
                seed=seed * 1000 + fam_idx * 100 + j,
            )
            out.append(Environment.generate(params))
    return out


def _panel_member_reports(args) -> dict:
    env, n, thresholds = args
    return {
        "env_id": env.env_id,
        "kind": env.params.generator_kind.value,
        "seed": env.params.seed,
        "ratio": verify_ratio(env, n, (0.25, 0.5, 1.0), thresholds=thresholds).result_dict(),
        "lemmas": verify_crossing_lemmas(
            env, (8, 16, 32, 64, 128, 256), thresholds=thresholds
        ).result_dict(),
    }


def run_panel(
    base: Environment,
    per_family: int,
    seed: int,
    n: int = 4096,
    jobs: int = 1,
    thresholds: Thresholds = THRESHOLDS,
) -> dict:
    """Exact suites (survival ratios, crossing lemmas) over a seed panel.

    Every member must pass.  Fan-out order is fixed, so the merged
    output is deterministic for any job count.
    """
    envs = panel_envs(base, per_family, seed)
    work = [(env, n, thresholds) for env in envs]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            members = pool.map(_panel_member_reports, work)
    else:
        members = [_panel_member_reports(w) for w in work]
    return {
        "members": members,
        "passed": all(
            m["ratio"]["passed"] and m["lemmas"]["passed"] for m in members
        ),
    }


def run_all(
    env: Environment,
    seed: int,
    calibration_env: Environment,
    n: int = 4096,
    m: int = 20000,
    thresholds: Thresholds = THRESHOLDS,
) -> dict:
    """Full suite on one environment, preceded by the srw calibration run.

    Aborts (raises) if calibration fails, since every Monte Carlo
    tolerance is anchored on that environment.
    """
    cal = verify_rayleigh(calibration_env, n, m, seed, sigma=1.0, thresholds=thresholds)
    if not cal.passed:
        raise RuntimeError("srw calibration failed; aborting the suite")

    sigma, _ = resolve_sigma(env, seed + 1)
    slice_steps = sorted(
        {n}
        | {int(math.floor(n * t)) for t in (0.25, 0.5, 0.75)}
        | {int(math.floor(n * t)) for t in (0.04, 0.02, 0.01)}
    )
    recs, table = meander_slices(env, n, m, seed, slice_steps)

    reports = {"calibration_rayleigh": cal}
    reports["rayleigh"] = verify_rayleigh(
        env, n, m, seed, sigma=sigma, thresholds=thresholds, _samples=recs[n]
    )
    reports["marginal"] = verify_marginal(
        env, n, (0.25, 0.5, 0.75), m, seed, sigma=sigma, thresholds=thresholds, _recs=recs
    )
    reports["ratio"] = verify_ratio(env, n, (0.25, 0.5, 1.0), thresholds=thresholds)
    reports["lemmas"] = verify_crossing_lemmas(
        env, (8, 16, 32, 64, 128, 256), thresholds=thresholds
    )
    if env.params.r_max >= 2:
        reports["overshoot"] = verify_overshoot(
            env, (32, 64, 128), max(m // 8, 1000), seed, thresholds=thresholds
        )
    reports["corollary"] = verify_corollary(
        env, 64, max(m // 2, 1000), seed, sigma=sigma, thresholds=thresholds
    )
    reports["tightness"] = verify_tightness_probe(
        env, n, m, seed, sigma=sigma, thresholds=thresholds
    )
    return reports
