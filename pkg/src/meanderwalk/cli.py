"""Command-line front end.

Subcommands mirror the library: `env` generation/validation, `walk`
simulation and conditioned sampling, `net` exact network quantities,
`continuum` reference-process sampling, and `verify` suites.  Exit code
0 means success (and pass, for checks), 1 a failed check, 2 a usage
error.  All randomness is driven by explicit --seed flags and identical
invocations print byte-identical structured output (timings live in a
separate meta block).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import continuum, network, particles, verify, walk
from .environment import (
    Environment,
    EnvironmentParams,
    GeneratorKind,
    srw_params,
    validate as validate_env,
)

_OUT_DIR_ENV_VAR = "MEANDERWALK_OUT"


def _canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def _emit(doc, out: str | None) -> None:
    text = _canonical(doc)
    print(text)
    if out:
        base = Path(os.environ.get(_OUT_DIR_ENV_VAR, "."))
        path = Path(out) if Path(out).is_absolute() else base / out
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def _load_env(path: str) -> Environment:
    return Environment.read_json(path)


# ---------------------------------------------------------------------------
# handlers
# ---------------------------------------------------------------------------


def _cmd_env_gen(args) -> int:
    if args.kind == "srw":
        params = srw_params(args.window[0], args.window[1], seed=args.seed)
    else:
        params = EnvironmentParams(
            kappa=args.kappa,
            k_bound=args.kbound,
            beta=args.beta,
            r_max=args.rmax,
            x_min=args.window[0],
            x_max=args.window[1],
            generator_kind=GeneratorKind(args.kind),
            seed=args.seed,
        )
    env = Environment.generate(params)
    env.write_json(args.out)
    _emit({"written": str(args.out), "env_id": env.env_id, "sites": params.n_sites}, None)
    return 0


def _cmd_env_validate(args) -> int:
    env = _load_env(args.env_file)
    report = validate_env(env)
    _emit(report.to_dict(), args.out)
    return 0 if report.passed else 1


def _cmd_walk_simulate(args) -> int:
    env = _load_env(args.env)
    path = walk.simulate(env, args.start, args.steps, args.seed)
    if args.out:
        path.write_csv(args.out, n=args.steps)
    _emit(
        {
            "start": args.start,
            "steps": args.steps,
            "final": int(path.positions[-1]),
            "min": int(path.positions.min()),
            "max": int(path.positions.max()),
        },
        None,
    )
    return 0


def _cmd_walk_survival(args) -> int:
    env = _load_env(args.env)
    value, table = walk.survival_probability(
        env, args.n, window_w=args.window_w, keep_table=False
    )
    _emit(
        {
            "n": args.n,
            "survival_lower": value,
            "survival_upper": table.value_upper,
            "bracket_width": table.bracket_width,
            "window_w": table.window_w,
        },
        args.out,
    )
    return 0


def _cmd_walk_sample_meander(args) -> int:
    env = _load_env(args.env)
    _, table = walk.survival_probability(env, args.n)
    final = []
    for i in range(args.count):
        p = walk.conditioned_sample_meander(env, args.n, table, args.seed + i)
        final.append(int(p.positions[-1]))
        if args.out and args.count == 1:
            p.write_csv(args.out, n=args.n)
    _emit({"n": args.n, "count": args.count, "final_positions": final}, None)
    return 0


def _cmd_walk_sample_crossing(args) -> int:
    env = _load_env(args.env)
    table = walk.harmonic_hit(env, args.level)
    finals = []
    for i in range(args.count):
        p = walk.conditioned_sample_crossing(env, args.level, table, args.seed + i)
        finals.append({"steps": p.steps, "hit": int(p.positions[-1])})
        if args.out and args.count == 1:
            p.write_csv(args.out, n=args.level)
    _emit({"level": args.level, "count": args.count, "paths": finals}, None)
    return 0


def _cmd_walk_sigma(args) -> int:
    env = _load_env(args.env)
    sigma, se = walk.estimate_sigma(env, args.n_fit, args.runs, args.seed)
    _emit({"sigma_hat": sigma, "stderr": se, "n_fit": args.n_fit, "runs": args.runs}, args.out)
    return 0


def _cmd_net_reduce(args) -> int:
    env = _load_env(args.env)
    red = network.reduce(env, args.level, args.kind)
    doc = red.to_json_dict()
    _emit(doc, args.out)
    return 0


def _cmd_net_ceff(args) -> int:
    env = _load_env(args.env)
    red = network.reduce(env, args.level, network.ReductionKind.OMEGA3)
    ceff = network.effective_conductance(env, red)
    _emit(
        {
            "level": args.level,
            "c_eff": ceff,
            "series_bound": network.series_conductance_bound(env, args.level),
            "kappa_over_nm1": env.params.kappa / (args.level - 1),
        },
        args.out,
    )
    return 0


def _cmd_net_hitprob(args) -> int:
    env = _load_env(args.env)
    p = network.crossing_probability_exact(env, args.level)
    red = network.reduce(env, args.level, network.ReductionKind.OMEGA1)
    p1 = network.crossing_probability_via_omega1(env, red)
    p2 = network.crossing_probability_via_reversal(env, red)
    _emit(
        {
            "level": args.level,
            "p_cross": p,
            "p_cross_omega1": p1,
            "p_cross_reversal": p2,
            "max_disagreement": max(abs(p - p1), abs(p - p2)),
        },
        args.out,
    )
    return 0


def _cmd_net_exittime(args) -> int:
    env = _load_env(args.env)
    e = network.expected_exit_time_exact(env, args.level)
    _emit({"level": args.level, "expected_exit_time": e}, args.out)
    return 0


def _cmd_net_little_bound(args) -> int:
    env = _load_env(args.env)
    red = network.reduce(env, args.level, network.ReductionKind.OMEGA3)
    _emit(
        {
            "level": args.level,
            "little_bound": network.little_bound(red),
            "expected_exit_time": network.expected_exit_time_exact(env, args.level),
        },
        args.out,
    )
    return 0


def _cmd_net_reversibility(args) -> int:
    env = _load_env(args.env)
    spec = particles.build_particle_system(env, args.level)
    report = particles.check_reversibility(spec, args.max_particles, tol=args.tol)
    _emit(report.to_dict(), args.out)
    return 0 if report.passed else 1


def _cmd_net_queue(args) -> int:
    env = _load_env(args.env)
    model = particles.build_queue(env, args.level)
    report = particles.simulate_queue(model, args.horizon, args.seed)
    doc = report.to_dict()
    ok = report.little_rel_err <= 0.05
    doc["little_ok"] = ok
    _emit(doc, args.out)
    return 0 if ok else 1


def _cmd_continuum_meander(args) -> int:
    path = continuum.sample_meander(args.dt, args.seed)
    if args.out:
        path.write_csv(args.out)
    _emit(
        {
            "dt": args.dt,
            "endpoint": float(path.values[-1]),
            "resamples": path.meta.get("resamples", 0),
        },
        None,
    )
    return 0


def _cmd_continuum_bessel(args) -> int:
    path = continuum.sample_bessel3(args.dt, args.horizon, args.seed)
    if args.out:
        path.write_csv(args.out)
    _emit({"dt": args.dt, "horizon": args.horizon, "endpoint": float(path.values[-1])}, None)
    return 0


def _cmd_continuum_rho1(args) -> int:
    rho, _ = continuum.sample_rho1_batch(args.count, args.dt, args.sigma, args.seed)
    _emit(
        {
            "sigma": args.sigma,
            "dt": args.dt,
            "count": args.count,
            "mean": float(rho.mean()),
            "target_mean": 1.0 / (3.0 * args.sigma**2),
        },
        args.out,
    )
    return 0


def _cmd_continuum_qdensity(args) -> int:
    ys = np.linspace(0.0, args.ymax, args.points)
    rows = [(float(y), continuum.q_density(args.t, float(y))) for y in ys]
    lines = ["y,q"] + [f"{y!r},{q!r}" for y, q in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def _cmd_verify(args) -> int:
    env = _load_env(args.env)
    thresholds = verify.THRESHOLDS
    kind = args.verify_cmd
    if kind == "all":
        cal_env = Environment.generate(srw_params(env.x_min, env.x_max))
        reports = verify.run_all(env, args.seed, cal_env, n=args.n, m=args.m)
        doc = {k: r.result_dict() for k, r in reports.items()}
        doc["passed"] = all(r.passed for r in reports.values())
        if args.panel > 0:
            panel = verify.run_panel(env, args.panel, args.seed, jobs=args.jobs)
            doc["panel"] = panel
            doc["passed"] = doc["passed"] and panel["passed"]
        _emit(doc, args.out)
        if args.plot_dir:
            for r in reports.values():
                r.write_plot_csv(args.plot_dir)
        return 0 if doc["passed"] else 1

    if kind == "rayleigh":
        report = verify.verify_rayleigh(env, args.n, args.m, args.seed, sigma=args.sigma)
    elif kind == "marginal":
        report = verify.verify_marginal(
            env, args.n, args.t or (0.25, 0.5, 0.75), args.m, args.seed, sigma=args.sigma
        )
    elif kind == "ratio":
        report = verify.verify_ratio(env, args.n, args.t or (0.25, 0.5, 1.0))
    elif kind == "overshoot":
        report = verify.verify_overshoot(env, args.levels, args.m, args.seed)
    elif kind == "lemmas":
        report = verify.verify_crossing_lemmas(env, args.levels)
    elif kind == "corollary":
        report = verify.verify_corollary(env, args.n, args.m, args.seed, sigma=args.sigma)
    elif kind == "tightness":
        report = verify.verify_tightness_probe(env, args.n, args.m, args.seed, sigma=args.sigma)
    else:  # pragma: no cover
        raise SystemExit(2)
    _emit({"result": report.result_dict()}, args.out)
    if args.plot_dir:
        report.write_plot_csv(args.plot_dir)
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """A JSON config file may supply long-flag defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    cfg_path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    cfg = json.loads(Path(cfg_path).read_text())
    extra: list[str] = []
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        elif isinstance(value, list):
            extra.append(flag)
            extra.extend(str(v) for v in value)
        else:
            extra.extend([flag, str(value)])
    # config-derived flags go before explicit ones so argparse keeps the latter
    return rest + extra


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meanderwalk", description=__doc__)
    sub = p.add_subparsers(dest="group", required=True)

    def add_common(sp, seed=True, out=True, env=False):
        if env:
            sp.add_argument("--env", required=True, help="environment JSON file")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if out:
            sp.add_argument("--out", "-o", default=None)

    # env
    env_p = sub.add_parser("env").add_subparsers(dest="env_cmd", required=True)
    g = env_p.add_parser("gen")
    g.add_argument("--kind", choices=["srw", "iid_uniform", "markov_modulated"], required=True)
    g.add_argument("--kappa", type=float, default=0.5)
    g.add_argument("--kbound", type=float, default=2.0)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--rmax", type=int, default=1)
    g.add_argument("--window", type=int, nargs=2, required=True, metavar=("LO", "HI"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o", required=True)
    g.set_defaults(func=_cmd_env_gen)
    v = env_p.add_parser("validate")
    v.add_argument("env_file")
    v.add_argument("--out", "-o", default=None)
    v.set_defaults(func=_cmd_env_validate)

    # walk
    w = sub.add_parser("walk").add_subparsers(dest="walk_cmd", required=True)
    s = w.add_parser("simulate")
    add_common(s, env=True)
    s.add_argument("--start", type=int, default=0)
    s.add_argument("--steps", type=int, required=True)
    s.set_defaults(func=_cmd_walk_simulate)
    s = w.add_parser("survival")
    add_common(s, seed=False, env=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--window-w", type=int, default=None)
    s.set_defaults(func=_cmd_walk_survival)
    s = w.add_parser("sample-meander")
    add_common(s, env=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=1)
    s.set_defaults(func=_cmd_walk_sample_meander)
    s = w.add_parser("sample-crossing")
    add_common(s, env=True)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--count", type=int, default=1)
    s.set_defaults(func=_cmd_walk_sample_crossing)
    s = w.add_parser("sigma")
    add_common(s, env=True)
    s.add_argument("--n-fit", type=int, default=2048)
    s.add_argument("--runs", type=int, default=2000)
    s.set_defaults(func=_cmd_walk_sigma)

    # net
    n = sub.add_parser("net").add_subparsers(dest="net_cmd", required=True)
    for name, fn, extras in [
        ("reduce", _cmd_net_reduce, [("--kind", {"choices": ["omega1", "omega2", "omega3"], "default": "omega3"})]),
        ("ceff", _cmd_net_ceff, []),
        ("hitprob", _cmd_net_hitprob, []),
        ("exittime", _cmd_net_exittime, []),
        ("little-bound", _cmd_net_little_bound, []),
    ]:
        s = n.add_parser(name)
        add_common(s, seed=False, env=True)
        s.add_argument("--level", type=int, required=True)
        for flag, kw in extras:
            s.add_argument(flag, **kw)
        s.set_defaults(func=fn)
    s = n.add_parser("reversibility")
    add_common(s, seed=False, env=True)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--max-particles", type=int, default=3)
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=_cmd_net_reversibility)
    s = n.add_parser("queue")
    add_common(s, env=True)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--horizon", type=float, default=1e5)
    s.set_defaults(func=_cmd_net_queue)

    # continuum
    c = sub.add_parser("continuum").add_subparsers(dest="cont_cmd", required=True)
    s = c.add_parser("meander")
    add_common(s)
    s.add_argument("--dt", type=float, default=2.0**-10)
    s.set_defaults(func=_cmd_continuum_meander)
    s = c.add_parser("bessel")
    add_common(s)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--horizon", type=float, default=1.0)
    s.set_defaults(func=_cmd_continuum_bessel)
    s = c.add_parser("rho1")
    add_common(s)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--count", type=int, default=1000)
    s.set_defaults(func=_cmd_continuum_rho1)
    s = c.add_parser("qdensity")
    add_common(s, seed=False)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--ymax", type=float, default=4.0)
    s.add_argument("--points", type=int, default=201)
    s.set_defaults(func=_cmd_continuum_qdensity)

    # verify
    vf = sub.add_parser("verify").add_subparsers(dest="verify_cmd", required=True)
    for name in ["rayleigh", "marginal", "ratio", "overshoot", "lemmas", "corollary", "tightness", "all"]:
        s = vf.add_parser(name)
        add_common(s, env=True)
        s.add_argument("--n", type=int, default=4096)
        s.add_argument("--m", type=int, default=20000)
        s.add_argument("--sigma", type=float, default=None)
        s.add_argument("--t", type=float, nargs="*", default=None)
        s.add_argument("--levels", type=int, nargs="*", default=[8, 16, 32, 64, 128, 256])
        s.add_argument("--plot-dir", default=None)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--panel", type=int, default=5 if name == "all" else 0,
                       help="environments per generator family for the exact-suite panel")
        s.set_defaults(func=_cmd_verify)

    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
