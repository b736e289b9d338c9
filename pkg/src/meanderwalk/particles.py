"""Injection/absorption particle system on {0, ..., N} and its queue view.

The particle system is a collection of independent walkers moving with
rates q(x, y) = w3(x, y) / C3_x on the collapsed omega3 network, with
Poisson injection at the boundary states (rates C3_0 and C3_N) and
unit-rate clearing of particles sitting at a boundary state.  With these
clearing rates the product of Poisson(C3_x) laws satisfies detailed
balance exactly, which the enumeration check verifies transition pair by
transition pair.

The one-sided variant (injection at 0 only) is an M/G/infinity queue
whose service time is the walk's exit time from (0, N); its simulation
checks Little's identity E[T] = E[R] / lambda_0 against the exact
expected exit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .environment import Environment
from .network import NetworkReduction, ReductionKind, omega3_weight_table, reduce
from .rng import spawn_rng


@dataclass(eq=False)
class ParticleSystemSpec:
    N: int
    masses: np.ndarray  # C3_0..C3_N (self-loop excluded)
    q: np.ndarray  # (N+1, N+1) jump rates, zero diagonal
    lambda_0: float
    lambda_n: float
    absorb_rate: float = 1.0  # per-particle clearing rate at states 0 and N
    env_id: str = ""


@dataclass(frozen=True)
class ParticleConfig:
    occupation: tuple  # eta_0..eta_N, nonnegative integers

    def __post_init__(self):
        if any(k < 0 for k in self.occupation):
            raise ValueError("occupation numbers must be nonnegative")

    def bump(self, i: int, delta: int) -> "ParticleConfig":
        occ = list(self.occupation)
        occ[i] += delta
        return ParticleConfig(tuple(occ))

    def move(self, i: int, j: int) -> "ParticleConfig":
        return self.bump(i, -1).bump(j, +1)


def build_particle_system(env: Environment, N: int, red: NetworkReduction | None = None) -> ParticleSystemSpec:
    if red is None:
        red = reduce(env, N, ReductionKind.OMEGA3)
    if red.kind is not ReductionKind.OMEGA3:
        raise ValueError("particle system needs the omega3 reduction")
    W = omega3_weight_table(env, red)
    q = W / red.masses[:, None]
    np.fill_diagonal(q, 0.0)
    return ParticleSystemSpec(
        N=N,
        masses=red.masses.copy(),
        q=q,
        lambda_0=float(red.masses[0]),
        lambda_n=float(red.masses[N]),
        env_id=env.env_id,
    )


def particle_rates(spec: ParticleSystemSpec, eta: ParticleConfig, eta_prime: ParticleConfig) -> float:
    """Transition rate from eta to eta_prime; 0 for non-neighbouring pairs."""
    a = np.asarray(eta.occupation, dtype=np.int64)
    b = np.asarray(eta_prime.occupation, dtype=np.int64)
    if a.shape != b.shape or a.shape != (spec.N + 1,):
        raise ValueError("configurations must live on 0..N")
    d = b - a
    plus = np.nonzero(d > 0)[0]
    minus = np.nonzero(d < 0)[0]

    if len(plus) == 1 and len(minus) == 0 and d[plus[0]] == 1:
        i = int(plus[0])
        if i == 0:
            return spec.lambda_0
        if i == spec.N:
            return spec.lambda_n
        return 0.0
    if len(minus) == 1 and len(plus) == 0 and d[minus[0]] == -1:
        i = int(minus[0])
        if i in (0, spec.N):
            return float(a[i]) * spec.absorb_rate
        return 0.0
    if len(plus) == 1 and len(minus) == 1 and d[plus[0]] == 1 and d[minus[0]] == -1:
        j, i = int(minus[0]), int(plus[0])
        return float(a[j]) * float(spec.q[j, i])
    return 0.0


def _neighbours(spec: ParticleSystemSpec, eta: ParticleConfig):
    """All configurations reachable in one transition, with their rates."""
    N = spec.N
    occ = eta.occupation
    yield eta.bump(0, +1), spec.lambda_0
    yield eta.bump(N, +1), spec.lambda_n
    for i in (0, N):
        if occ[i] > 0:
            yield eta.bump(i, -1), occ[i] * spec.absorb_rate
    for j in range(N + 1):
        if occ[j] == 0:
            continue
        for i in range(N + 1):
            if i != j and spec.q[j, i] > 0:
                yield eta.move(j, i), occ[j] * spec.q[j, i]


@dataclass(frozen=True)
class ReversibilityReport:
    passed: bool
    max_violation: float  # relative detailed-balance defect
    n_configs: int
    n_pairs: int
    tol: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_violation": self.max_violation,
            "n_configs": self.n_configs,
            "n_pairs": self.n_pairs,
            "tol": self.tol,
        }


def check_reversibility(spec: ParticleSystemSpec, max_particles: int, tol: float = 1e-12) -> ReversibilityReport:
    """Enumerate configuration pairs and verify detailed balance for the
    product-Poisson weights with means C3_x.

    Uses unnormalised weights prod_x C3_x^eta_x / eta_x!, which cancel the
    common Poisson normaliser on both flows.
    """
    if spec.N > 8:
        raise ValueError("enumeration cap: N <= 8")
    if max_particles > 6:
        raise ValueError("enumeration cap: max_particles <= 6")

    def weight(eta: ParticleConfig) -> float:
        w = 1.0
        for x, k in enumerate(eta.occupation):
            w *= spec.masses[x] ** k / math.factorial(k)
        return w

    configs = [
        ParticleConfig(occ)
        for occ in product(range(max_particles + 1), repeat=spec.N + 1)
        if sum(occ) <= max_particles
    ]
    max_rel = 0.0
    n_pairs = 0
    for eta in configs:
        w_eta = weight(eta)
        for eta2, rate in _neighbours(spec, eta):
            if sum(eta2.occupation) > max_particles:
                continue
            n_pairs += 1
            back = particle_rates(spec, eta2, eta)
            flow = float(rate) * w_eta
            flow_back = float(back) * weight(eta2)
            scale = max(abs(flow), abs(flow_back))
            if scale > 0:
                max_rel = max(max_rel, abs(flow - flow_back) / scale)
    return ReversibilityReport(
        passed=bool(max_rel <= tol),
        max_violation=float(max_rel),
        n_configs=len(configs),
        n_pairs=n_pairs,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# M/G/infinity queue with the walk's exit time as service law
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class QueueModel:
    """One-sided system: Poisson(lambda_0) arrivals, service = exit time of
    the quenched walk started at 0 (absorbed on entering either barrier),
    run in continuous time with unit-rate jump clocks."""

    N: int
    lambda_0: float
    offsets: np.ndarray
    trans_p: np.ndarray  # rows for x = 0..N-1 under the true environment
    mass_bound: float  # sum of omega3 masses, for the domination check
    env_id: str = ""


def build_queue(env: Environment, N: int) -> QueueModel:
    red = reduce(env, N, ReductionKind.OMEGA3)
    offsets, TW = env.weight_matrix(0, N - 1)
    C = env.masses(0, N - 1)
    return QueueModel(
        N=N,
        lambda_0=float(red.masses[0]),
        offsets=offsets,
        trans_p=TW / C[:, None],
        mass_bound=float(red.masses.sum()),
        env_id=env.env_id,
    )


def _exit_steps_batch(model: QueueModel, m: int, rng: np.random.Generator) -> np.ndarray:
    """Number of jumps for m independent walks from 0 until leaving (0, N)."""
    N = model.N
    pos = np.zeros(m, dtype=np.int64)
    idx = np.arange(m)
    steps = np.zeros(m, dtype=np.int64)
    k = 0
    while pos.size:
        k += 1
        rows = model.trans_p[pos]
        cw = np.cumsum(rows, axis=1)
        u = rng.random(pos.size) * cw[:, -1]
        choice = np.minimum((cw <= u[:, None]).sum(axis=1), rows.shape[1] - 1)
        new = pos + model.offsets[choice]
        gone = (new <= 0) | (new >= N)
        steps[idx[gone]] = k
        pos, idx = new[~gone], idx[~gone]
        if k > 10_000_000:
            raise RuntimeError("exit-time sampler ran away")
    return steps


@dataclass(frozen=True)
class QueueReport:
    e_t_hat: float
    e_r_hat: float
    lambda_0: float
    e_t_se: float
    e_r_se: float
    little_rel_err: float
    mass_bound: float
    burn_in: float
    horizon: float
    n_arrivals: int
    n_departed: int

    def to_dict(self) -> dict:
        return {
            "e_t_hat": self.e_t_hat,
            "e_r_hat": self.e_r_hat,
            "lambda_0": self.lambda_0,
            "e_t_se": self.e_t_se,
            "e_r_se": self.e_r_se,
            "little_rel_err": self.little_rel_err,
            "mass_bound": self.mass_bound,
            "burn_in": self.burn_in,
            "horizon": self.horizon,
            "n_arrivals": self.n_arrivals,
            "n_departed": self.n_departed,
        }


def simulate_queue(
    model: QueueModel, horizon: float, seed: int, burn_frac: float = 0.1
) -> QueueReport:
    """Event-driven M/G/infinity run over [0, horizon].

    E_T is the mean sojourn of customers departing within the horizon;
    E_R is the time average of the in-system count after the burn-in.
    """
    rng = spawn_rng(seed, 5)
    gaps = rng.exponential(1.0 / model.lambda_0, size=int(model.lambda_0 * horizon * 1.3) + 100)
    arrivals = np.cumsum(gaps)
    arrivals = arrivals[arrivals < horizon]
    n_arr = arrivals.size
    if n_arr < 10:
        raise ValueError(f"horizon {horizon} too short: only {n_arr} arrivals")

    steps = _exit_steps_batch(model, n_arr, rng)
    # unit-rate jump clocks: sojourn is a sum of `steps` iid Exp(1) holds
    services = rng.gamma(shape=steps.astype(float), scale=1.0)
    departures = arrivals + services

    burn = burn_frac * horizon
    departed = departures <= horizon
    e_t = float(services[departed].mean())
    e_t_se = float(services[departed].std(ddof=1) / math.sqrt(departed.sum()))

    span = horizon - burn
    overlap = np.clip(np.minimum(departures, horizon) - np.maximum(arrivals, burn), 0.0, None)
    e_r = float(overlap.sum() / span)

    # block means over the observation window for a serial-correlation-aware se
    n_blocks = 20
    edges = np.linspace(burn, horizon, n_blocks + 1)
    block_means = np.empty(n_blocks)
    for b in range(n_blocks):
        lo, hi = edges[b], edges[b + 1]
        ov = np.clip(np.minimum(departures, hi) - np.maximum(arrivals, lo), 0.0, None)
        block_means[b] = ov.sum() / (hi - lo)
    e_r_se = float(block_means.std(ddof=1) / math.sqrt(n_blocks))

    little = abs(e_t * model.lambda_0 - e_r) / e_r if e_r > 0 else math.inf
    return QueueReport(
        e_t_hat=e_t,
        e_r_hat=e_r,
        lambda_0=model.lambda_0,
        e_t_se=e_t_se,
        e_r_se=e_r_se,
        little_rel_err=float(little),
        mass_bound=model.mass_bound,
        burn_in=burn,
        horizon=horizon,
        n_arrivals=int(n_arr),
        n_departed=int(departed.sum()),
    )
