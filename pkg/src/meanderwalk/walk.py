"""Quenched walk simulation, exact conditioning, and diffusive rescaling.

Survival probabilities of the event {X_k > 0, k = 1..n} are computed by
an exact backward recursion on a truncated spatial window, returning a
certified lower/upper bracket (absorb-to-0 vs absorb-to-1 beyond the
window).  Conditioned paths are then sampled exactly through the Doob
transform of the recursion table: time-inhomogeneous for conditioning on
staying positive, time-homogeneous for conditioning on crossing a level
before returning to the nonpositive half-line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse

from .environment import Environment, WindowError
from .rng import spawn_rng

TABLE_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WalkPath:
    start: int
    positions: np.ndarray  # X_0..X_m, X_0 == start
    env_id: str = ""
    seed: int = 0

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def steps(self) -> int:
        return len(self.positions) - 1

    def write_csv(self, path: str | Path, n: int | None = None, sigma: float | None = None) -> None:
        header = {"env_id": self.env_id, "seed": self.seed, "n": n, "sigma": sigma}
        lines = ["# " + json.dumps(header, sort_keys=True), "k,X_k"]
        lines += [f"{k},{int(x)}" for k, x in enumerate(self.positions)]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class RescaledPath:
    n: int
    sigma: float
    times: np.ndarray
    values: np.ndarray

    def evaluate(self, t) -> np.ndarray:
        """Polygonal interpolation; exact at the grid points."""
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)


def simulate(env: Environment, start: int, m: int, seed: int) -> WalkPath:
    """m steps of the quenched chain from `start`; raises on window exit."""
    rng = spawn_rng(seed, 1)
    rows: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    pos = start
    out = np.empty(m + 1, dtype=np.int64)
    out[0] = pos
    for k in range(m):
        if pos not in rows:
            row = env.transition_row(pos)
            ys = np.array([y for y, _ in row.targets])
            cs = np.cumsum([p for _, p in row.targets])
            rows[pos] = (ys, cs)
        ys, cs = rows[pos]
        j = min(int(np.searchsorted(cs, rng.random(), side="right")), len(ys) - 1)
        pos = int(ys[j])
        out[k + 1] = pos
        if not env.interior_min <= pos <= env.interior_max:
            if k + 1 < m:
                raise WindowError(f"walk left the stored window at step {k + 1} (site {pos})")
    return WalkPath(start=start, positions=out, env_id=env.env_id, seed=seed)


def stopping_time(path: WalkPath, targets, tau_plus: bool = False):
    """First index (>=1 if tau_plus) where the path enters `targets`.

    `targets` is a collection of sites or a predicate on sites.  Returns
    None when the path never enters within its length.
    """
    member = targets if callable(targets) else (lambda y, s=frozenset(targets): y in s)
    start = 1 if tau_plus else 0
    for k in range(start, len(path.positions)):
        if member(int(path.positions[k])):
            return k
    return None


# ---------------------------------------------------------------------------
# survival (stay-positive) recursion and meander conditioning
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SurvivalTable:
    """Backward recursion table for the stay-positive event up to time n.

    h[k, x-1] is the probability, from site x in (0, W] with k steps
    already taken, that the remaining n-k steps all land in (0, W]
    (absorb-to-0 beyond W, i.e. the certified lower-bound variant).
    """

    n: int
    window_w: int
    offsets: np.ndarray
    trans_p: np.ndarray  # (W, 2R) jump probabilities p(x, x+offset)
    p0: np.ndarray  # jump probabilities from the origin to 1..R
    h: np.ndarray  # (n+1, W) lower-bound survival table; h[n] == 1
    value_lower: float
    value_upper: float
    env_id: str = ""

    @property
    def value(self) -> float:
        return self.value_lower

    @property
    def bracket_width(self) -> float:
        return self.value_upper - self.value_lower

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            format_version=TABLE_FORMAT_VERSION,
            kind="survival",
            n=self.n,
            window_w=self.window_w,
            offsets=self.offsets,
            trans_p=self.trans_p,
            p0=self.p0,
            h=self.h,
            value_lower=self.value_lower,
            value_upper=self.value_upper,
            env_id=self.env_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "SurvivalTable":
        with np.load(path, allow_pickle=False) as z:
            if int(z["format_version"]) != TABLE_FORMAT_VERSION or str(z["kind"]) != "survival":
                raise ValueError("not a survival table dump of a supported version")
            return cls(
                n=int(z["n"]),
                window_w=int(z["window_w"]),
                offsets=z["offsets"],
                trans_p=z["trans_p"],
                p0=z["p0"],
                h=z["h"],
                value_lower=float(z["value_lower"]),
                value_upper=float(z["value_upper"]),
                env_id=str(z["env_id"]),
            )


def default_window(n: int) -> int:
    """Spatial truncation for conditioned-positive paths of length n."""
    return int(math.ceil(8.0 * math.sqrt(n * math.log(n + 1.0))))


def _survival_pass(env: Environment, n: int, W: int, keep_table: bool):
    R = env.r_max
    offsets, TW = env.weight_matrix(1, W)
    C = env.masses(1, W)
    P = TW / C[:, None]
    sites = np.arange(1, W + 1)
    tgt = sites[:, None] + offsets[None, :]
    inb = (tgt >= 1) & (tgt <= W)
    s_up = (P * (tgt > W)).sum(axis=1)
    ri, ci = np.nonzero(inb)
    M = scipy.sparse.csr_matrix(
        (P[ri, ci], (ri, tgt[ri, ci] - 1)), shape=(W, W)
    )

    if keep_table:
        h = np.zeros((n + 1, W))  # row 0 unused; zeroed for reproducible dumps
        h[n] = 1.0
    else:
        h = np.zeros((0, W))  # value-only pass: unusable for sampling, on purpose
    h_lo = np.ones(W)
    h_up = np.ones(W)
    for k in range(n - 1, 0, -1):
        h_lo = M @ h_lo
        h_up = M @ h_up + s_up
        if keep_table:
            h[k] = h_lo

    _, TW0 = env.weight_matrix(0, 0)
    c0 = float(TW0.sum())
    p0 = TW0[0, R:] / c0  # targets 1..R
    if n == 0:
        return 1.0, 1.0, offsets, P, p0, h
    value_lo = float(p0 @ h_lo[:R])
    value_up = float(p0 @ h_up[:R])
    return value_lo, value_up, offsets, P, p0, h


def survival_probability(
    env: Environment,
    n: int,
    window_w: int | None = None,
    bracket_tol: float = 1e-10,
    keep_table: bool = True,
) -> tuple[float, SurvivalTable]:
    """Exact survival probability of {X_k > 0, k=1..n} from the origin.

    Returns the certified lower bound together with the recursion table;
    the companion upper bound sits on the table as `value_upper`.  When
    `window_w` is omitted the default window is doubled until the
    lower/upper bracket is below `bracket_tol` (or the environment
    window is exhausted).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    max_w = env.interior_max
    if window_w is not None:
        if window_w < 1:
            raise ValueError("window_w must be >= 1")
        ws = [min(window_w, max_w)]
    else:
        w = min(max(default_window(n), env.r_max + 1), max_w)
        ws = [w]
        while ws[-1] < max_w:
            ws.append(min(2 * ws[-1], max_w))

    last = None
    for W in ws:
        lo, up, offsets, P, p0, h = _survival_pass(env, n, W, keep_table)
        last = (lo, up, offsets, P, p0, h, W)
        if up - lo <= bracket_tol:
            break
    else:
        if window_w is None and last is not None and last[1] - last[0] > bracket_tol:
            raise WindowError(
                f"survival bracket {last[1] - last[0]:.3e} above {bracket_tol:.1e} "
                f"with the environment window exhausted at W={last[6]}"
            )

    lo, up, offsets, P, p0, h, W = last
    table = SurvivalTable(
        n=n,
        window_w=W,
        offsets=offsets,
        trans_p=P,
        p0=p0,
        h=h,
        value_lower=lo,
        value_upper=up,
        env_id=env.env_id,
    )
    return lo, table


def sample_meander_batch(
    table: SurvivalTable,
    m: int,
    seed: int,
    record_steps=None,
) -> dict[int, np.ndarray]:
    """m exact samples of the walk conditioned to stay in (0, W] for n steps.

    Returns {k: positions} for every k in `record_steps` (all of 1..n
    when omitted).  The transform keeps each returned position strictly
    positive by construction.
    """
    n, W = table.n, table.window_w
    if n == 0:
        return {}
    rng = spawn_rng(seed, 2)
    record = set(range(1, n + 1)) if record_steps is None else set(record_steps)
    out: dict[int, np.ndarray] = {}

    R = len(table.p0)
    w0 = table.p0 * table.h[1, :R]
    c0 = np.cumsum(w0)
    u = rng.random(m) * c0[-1]
    pos = 1 + np.minimum(np.searchsorted(c0, u, side="right"), R - 1)
    if 1 in record:
        out[1] = pos.copy()

    ar = np.arange(m)
    for k in range(1, n):
        rows = table.trans_p[pos - 1]
        tgt = pos[:, None] + table.offsets[None, :]
        valid = (tgt >= 1) & (tgt <= W)
        t_idx = np.clip(tgt, 1, W) - 1
        wt = rows * table.h[k + 1, t_idx] * valid
        cw = np.cumsum(wt, axis=1)
        u = rng.random(m) * cw[:, -1]
        choice = np.minimum((cw <= u[:, None]).sum(axis=1), wt.shape[1] - 1)
        pos = tgt[ar, choice]
        if k + 1 in record:
            out[k + 1] = pos.copy()
    return out


def conditioned_sample_meander(
    env: Environment, n: int, table: SurvivalTable, seed: int
) -> WalkPath:
    """One exact sample from the law conditioned on staying positive n steps."""
    if table.n != n or table.env_id != env.env_id:
        raise ValueError("table was built for a different environment or horizon")
    recs = sample_meander_batch(table, 1, seed, record_steps=range(1, n + 1))
    positions = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        positions[k] = recs[k][0]
    return WalkPath(start=0, positions=positions, env_id=env.env_id, seed=seed)


def meander_path_probability(table: SurvivalTable, positions: np.ndarray) -> float:
    """Exact probability of `positions` under the conditioned sampling law."""
    n, W = table.n, table.window_w
    R = len(table.p0)
    pos = np.asarray(positions, dtype=np.int64)
    if pos[0] != 0 or len(pos) != n + 1:
        raise ValueError("path must start at 0 and have n steps")
    w0 = table.p0 * table.h[1, :R]
    prob = w0[pos[1] - 1] / w0.sum()
    for k in range(1, n):
        x = pos[k]
        tgt = x + table.offsets
        valid = (tgt >= 1) & (tgt <= W)
        wt = table.trans_p[x - 1] * table.h[k + 1, np.clip(tgt, 1, W) - 1] * valid
        j = int(np.nonzero(tgt == pos[k + 1])[0][0])
        prob *= wt[j] / wt.sum()
    return float(prob)


# ---------------------------------------------------------------------------
# crossing (reach N before returning to the nonpositive half-line)
# ---------------------------------------------------------------------------


def interior_solve(
    nint: int,
    R: int,
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    rhs: np.ndarray,
    dense_cutoff: int = 512,
) -> np.ndarray:
    """Solve (I - P_int) h = rhs, P_int given by its banded entries.

    Dense LU below the cutoff, banded elimination (bandwidth R) above.
    """
    if nint == 0:
        return np.zeros(0)
    if nint <= dense_cutoff:
        A = np.eye(nint)
        A[rows, cols] -= vals
        return np.linalg.solve(A, rhs)
    ab = np.zeros((2 * R + 1, nint))
    ab[R, :] = 1.0
    ab[R + rows - cols, cols] -= vals
    return scipy.linalg.solve_banded((R, R), ab, rhs)


@dataclass(eq=False)
class HarmonicTable:
    """Harmonic solution of the crossing problem on (0, N).

    h_full[x] is the probability of entering [N, inf) before (-inf, 0]
    from x, with the boundary extensions h=0 on the nonpositive sites
    and h=1 at and above N.
    """

    N: int
    h_full: np.ndarray  # indices 0..N
    p_cross: float  # start-at-0 crossing probability
    residual: float
    offsets: np.ndarray
    trans_p: np.ndarray  # rows for x = 0..N-1
    env_id: str = ""

    def h_ext(self, y: np.ndarray) -> np.ndarray:
        """Boundary-extended harmonic values for arbitrary integer targets."""
        y = np.asarray(y)
        out = np.ones(y.shape)
        out[y <= 0] = 0.0
        mid = (y >= 1) & (y < self.N)
        out[mid] = self.h_full[y[mid]]
        return out

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            format_version=TABLE_FORMAT_VERSION,
            kind="harmonic",
            N=self.N,
            h_full=self.h_full,
            p_cross=self.p_cross,
            residual=self.residual,
            offsets=self.offsets,
            trans_p=self.trans_p,
            env_id=self.env_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "HarmonicTable":
        with np.load(path, allow_pickle=False) as z:
            if int(z["format_version"]) != TABLE_FORMAT_VERSION or str(z["kind"]) != "harmonic":
                raise ValueError("not a harmonic table dump of a supported version")
            return cls(
                N=int(z["N"]),
                h_full=z["h_full"],
                p_cross=float(z["p_cross"]),
                residual=float(z["residual"]),
                offsets=z["offsets"],
                trans_p=z["trans_p"],
                env_id=str(z["env_id"]),
            )


def harmonic_hit(env: Environment, N: int, residual_tol: float = 1e-10) -> HarmonicTable:
    """Exact solve of h(x) = sum_y p(x,y) h(y) on (0, N), h=0 below, h=1 above."""
    if N < 2:
        raise ValueError("N must be >= 2")
    R = env.r_max
    if env.x_min > -R or env.x_max < N + R:
        raise WindowError(f"environment window must cover [{-R}, {N + R}]")

    offsets, TW = env.weight_matrix(0, N - 1)
    C = env.masses(0, N - 1)
    P = TW / C[:, None]

    sites = np.arange(1, N)
    tgt = sites[:, None] + offsets[None, :]
    P_int = P[1:]
    rhs = (P_int * (tgt >= N)).sum(axis=1)
    inb = (tgt >= 1) & (tgt <= N - 1)
    ri, ci = np.nonzero(inb)
    vals = P_int[ri, ci]
    cols = tgt[ri, ci] - 1

    nint = N - 1
    h_int = interior_solve(nint, R, ri, cols, vals, rhs)

    # plug-back residual certifies the solve
    Mh = np.zeros(nint)
    np.add.at(Mh, ri, vals * h_int[cols])
    residual = float(np.abs(h_int - (Mh + rhs)).max())
    if residual > residual_tol:
        raise RuntimeError(f"harmonic solve residual {residual:.3e} above {residual_tol:.1e}")

    h_full = np.empty(N + 1)
    h_full[0] = 0.0
    h_full[1:N] = h_int
    h_full[N] = 1.0

    tgt0 = offsets
    hvals = np.ones(tgt0.size)
    hvals[tgt0 <= 0] = 0.0
    mid = (tgt0 >= 1) & (tgt0 < N)
    hvals[mid] = h_full[tgt0[mid]]
    p_cross = float((P[0] * hvals).sum())

    return HarmonicTable(
        N=N,
        h_full=h_full,
        p_cross=p_cross,
        residual=residual,
        offsets=offsets,
        trans_p=P,
        env_id=env.env_id,
    )


@dataclass(eq=False)
class CrossingBatch:
    tau: np.ndarray  # hitting index of [N, inf) per path
    x_prev: np.ndarray  # position one step before the hit
    x_hit: np.ndarray  # position at the hit (>= N; overshoot = x_hit - N)
    records: dict  # step index -> positions (crossed paths hold -1)


def sample_crossing_batch(
    table: HarmonicTable,
    m: int,
    seed: int,
    record_steps=(),
    max_steps: int | None = None,
) -> CrossingBatch:
    """m exact samples of the walk conditioned to reach [N, inf) first."""
    N = table.N
    rng = spawn_rng(seed, 3)
    if max_steps is None:
        max_steps = 2000 * N * N + 10_000
    record = sorted(set(record_steps))

    pos = np.zeros(m, dtype=np.int64)
    idx = np.arange(m)  # identity of still-running paths
    tau = np.zeros(m, dtype=np.int64)
    x_prev = np.zeros(m, dtype=np.int64)
    x_hit = np.zeros(m, dtype=np.int64)
    records = {s: np.full(m, -1, dtype=np.int64) for s in record}

    k = 0
    offs = table.offsets
    while pos.size:
        k += 1
        if k > max_steps:
            raise RuntimeError(f"crossing sampler exceeded {max_steps} steps")
        rows = table.trans_p[pos]
        tgt = pos[:, None] + offs[None, :]
        wt = rows * table.h_ext(tgt)
        cw = np.cumsum(wt, axis=1)
        u = rng.random(pos.size) * cw[:, -1]
        choice = np.minimum((cw <= u[:, None]).sum(axis=1), wt.shape[1] - 1)
        new = tgt[np.arange(pos.size), choice]

        crossed = new >= N
        if crossed.any():
            done = idx[crossed]
            tau[done] = k
            x_prev[done] = pos[crossed]
            x_hit[done] = new[crossed]
        alive = ~crossed
        pos, idx = new[alive], idx[alive]
        if k in records and pos.size:
            records[k][idx] = pos
    return CrossingBatch(tau=tau, x_prev=x_prev, x_hit=x_hit, records=records)


def conditioned_sample_crossing(
    env: Environment, N: int, table: HarmonicTable, seed: int
) -> WalkPath:
    """One exact sample conditioned on reaching [N, inf) before (-inf, 0]."""
    if table.N != N or table.env_id != env.env_id:
        raise ValueError("table was built for a different environment or level")
    rng = spawn_rng(seed, 3)
    offs = table.offsets
    pos = 0
    out = [0]
    while pos < N:
        row = table.trans_p[pos]
        tgt = pos + offs
        wt = row * table.h_ext(tgt)
        cw = np.cumsum(wt)
        u = rng.random() * cw[-1]
        j = min(int(np.searchsorted(cw, u, side="right")), len(offs) - 1)
        pos = int(tgt[j])
        out.append(pos)
    return WalkPath(start=0, positions=np.array(out, dtype=np.int64), env_id=env.env_id, seed=seed)


def crossing_path_probability(table: HarmonicTable, positions: np.ndarray) -> float:
    """Exact probability of `positions` under the conditioned crossing law."""
    pos = np.asarray(positions, dtype=np.int64)
    if pos[0] != 0 or pos[-1] < table.N or (pos[:-1] >= table.N).any():
        raise ValueError("path must start at 0 and end at its first entry into [N, inf)")
    prob = 1.0
    for k in range(len(pos) - 1):
        x = pos[k]
        tgt = x + table.offsets
        wt = table.trans_p[x] * table.h_ext(tgt)
        j = int(np.nonzero(tgt == pos[k + 1])[0][0])
        prob *= wt[j] / wt.sum()
    return float(prob)


# ---------------------------------------------------------------------------
# rescaling and crossing functionals
# ---------------------------------------------------------------------------


def rescale(path: WalkPath, n: int, sigma: float) -> RescaledPath:
    """Polygonal diffusive rescaling: value X_k / (sigma sqrt(n)) at time k/n."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    m = path.steps
    times = np.arange(m + 1) / n
    values = path.positions / (sigma * math.sqrt(n))
    return RescaledPath(n=n, sigma=sigma, times=times, values=values)


def crossing_functionals(path: WalkPath, n: int, sigma: float) -> tuple[float, RescaledPath]:
    """Crossing time of level 1/sigma on the n^2 diffusive clock, plus the
    rescaled path frozen at that level from the crossing time onward."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = path.positions
    hit = np.nonzero(x >= n)[0]
    if hit.size == 0:
        raise ValueError(f"path never reaches level {n}")
    k = int(hit[0])
    n2 = n * n
    if k == 0:
        t_cross = 0.0
    else:
        frac = (n - x[k - 1]) / (x[k] - x[k - 1])
        t_cross = (k - 1 + frac) / n2

    level = 1.0 / sigma
    z = rescale(path, n2, sigma)
    keep = z.times < t_cross
    times = np.concatenate([z.times[keep], [t_cross], z.times[~keep]])
    values = np.concatenate([z.values[keep], [level], np.full((~keep).sum(), level)])
    return t_cross, RescaledPath(n=n2, sigma=sigma, times=times, values=values)


# ---------------------------------------------------------------------------
# diffusivity estimation
# ---------------------------------------------------------------------------


def walk_batch(env: Environment, start: int, n_steps: int, m: int, seed: int) -> np.ndarray:
    """(m, n_steps+1) unconditioned trajectories; raises on window exit."""
    R = env.r_max
    lo, hi = env.interior_min, env.interior_max
    offsets, TW = env.weight_matrix(lo, hi)
    C = env.masses(lo, hi)
    P = TW / C[:, None]
    rng = spawn_rng(seed, 4)

    pos = np.full(m, start, dtype=np.int64)
    out = np.empty((m, n_steps + 1), dtype=np.int64)
    out[:, 0] = pos
    ar = np.arange(m)
    for k in range(n_steps):
        rows = P[pos - lo]
        cw = np.cumsum(rows, axis=1)
        u = rng.random(m) * cw[:, -1]
        choice = np.minimum((cw <= u[:, None]).sum(axis=1), rows.shape[1] - 1)
        pos = pos + offsets[choice]
        if pos.min() < lo or pos.max() > hi:
            raise WindowError(f"unconditioned batch left the window at step {k + 1}")
        out[:, k + 1] = pos
    return out


def variance_profile_exact(env: Environment, n: int, window: int | None = None) -> np.ndarray:
    """Exact Var(X_k), k = 0..n, by propagating the site distribution.

    The window is truncated with absorbing boundaries; the escaped mass
    is tracked and must stay below 1e-12, which the diffusive default
    window guarantees by a wide margin.
    """
    if window is None:
        window = min(default_window(n) * 2, env.interior_max, -env.interior_min)
    lo, hi = -window, window
    if lo < env.interior_min or hi > env.interior_max:
        raise WindowError(f"variance window [{lo}, {hi}] exceeds the environment")
    offsets, TW = env.weight_matrix(lo, hi)
    C = env.masses(lo, hi)
    P = TW / C[:, None]
    nsites = hi - lo + 1
    sites = np.arange(lo, hi + 1)
    tgt = sites[:, None] + offsets[None, :]
    inb = (tgt >= lo) & (tgt <= hi)
    ri, ci = np.nonzero(inb)
    M = scipy.sparse.csr_matrix(
        (P[ri, ci], (ri, tgt[ri, ci] - lo)), shape=(nsites, nsites)
    ).T.tocsr()

    mu = np.zeros(nsites)
    mu[-lo] = 1.0
    xs = sites.astype(float)
    var = np.empty(n + 1)
    var[0] = 0.0
    for k in range(1, n + 1):
        mu = M @ mu
        m1 = xs @ mu
        m2 = (xs * xs) @ mu
        var[k] = m2 - m1 * m1
    lost = 1.0 - mu.sum()
    if lost > 1e-12:
        raise WindowError(f"variance propagation lost mass {lost:.3e}; widen the window")
    return var


def sigma_exact(env: Environment, n_fit: int, window: int | None = None) -> float:
    """Noise-free diffusive scale: origin-constrained slope of the exact
    Var(X_k) profile over k in [n_fit/2, n_fit]."""
    var = variance_profile_exact(env, n_fit, window=window)
    ks = np.arange(n_fit // 2, n_fit + 1)
    slope = float((ks @ var[ks]) / (ks @ ks))
    return math.sqrt(slope)


def estimate_sigma(
    env: Environment, n_fit: int, m_runs: int, seed: int, start: int = 0
) -> tuple[float, float]:
    """Diffusive scale from the slope of Var(X_k) against k.

    Least squares through the origin over k in [n_fit/2, n_fit], with a
    jackknife (leave-one-run-out) standard error.
    """
    if n_fit < 100 or m_runs < 100:
        raise ValueError("need n_fit >= 100 and m_runs >= 100")
    X = walk_batch(env, start, n_fit, m_runs, seed).astype(float)
    ks = np.arange(n_fit // 2, n_fit + 1)
    Xk = X[:, ks]
    m = m_runs

    s1 = Xk.sum(axis=0)
    s2 = (Xk**2).sum(axis=0)
    var = (s2 - s1**2 / m) / (m - 1)
    wk = ks / float((ks**2).sum())
    slope = float(wk @ var)

    # leave-one-out slopes, vectorised over runs
    s1_i = s1[None, :] - Xk
    s2_i = s2[None, :] - Xk**2
    var_i = (s2_i - s1_i**2 / (m - 1)) / (m - 2)
    slopes_i = var_i @ wk
    slope_se = math.sqrt((m - 1) / m * ((slopes_i - slopes_i.mean()) ** 2).sum())

    sigma_hat = math.sqrt(max(slope, 0.0))
    if sigma_hat == 0.0:
        raise RuntimeError("degenerate variance fit")
    sigma_se = slope_se / (2.0 * sigma_hat)
    return sigma_hat, sigma_se
