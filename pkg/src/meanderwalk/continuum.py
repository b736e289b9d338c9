"""Reference continuum processes and densities.

The meander sampler follows the last-zero construction directly: sample
a Brownian path on [0, 1], locate the final zero by bridge bisection
inside the last sign-change cell, then rescale the post-zero segment to
unit length and take absolute values.  Values at off-grid times are
filled by Brownian-bridge conditionals between the surrounding known
points, so single-time marginals are exact at the base-grid resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .rng import spawn_rng

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(eq=False)
class ContinuumPath:
    kind: str  # bm | meander | bessel3
    dt: float
    values: np.ndarray
    t0: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def evaluate(self, t) -> np.ndarray:
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)

    def write_csv(self, path) -> None:
        import json
        from pathlib import Path

        header = {"kind": self.kind, "dt": self.dt, **self.meta}
        lines = ["# " + json.dumps(header, sort_keys=True), "t,value"]
        lines += [f"{t!r},{v!r}" for t, v in zip(self.times, self.values)]
        Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Brownian motion and the meander
# ---------------------------------------------------------------------------


def _bm_increments(rng: np.random.Generator, m: int, steps: int, dt: float) -> np.ndarray:
    w = np.empty((m, steps + 1))
    w[:, 0] = 0.0
    np.cumsum(rng.normal(0.0, math.sqrt(dt), size=(m, steps)), axis=1, out=w[:, 1:])
    return w


def sample_bm(dt: float, horizon: float, seed: int) -> ContinuumPath:
    """Standard Brownian motion on [0, horizon]; exact at the grid points."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round(horizon / dt))
    rng = spawn_rng(seed, 6)
    w = _bm_increments(rng, 1, steps, dt)[0]
    return ContinuumPath(kind="bm", dt=dt, values=w, meta={"seed": seed})


def _last_zero_cells(rng: np.random.Generator, w: np.ndarray, dt: float) -> np.ndarray:
    """Index of the grid cell holding the path's last zero.

    Given the grid values, the bridge pieces over the cells are
    independent, and a piece with same-sign endpoints a, b touches zero
    with probability exp(-2ab/dt).  Sampling those indicators and taking
    the rightmost cell containing a zero makes the cell choice exact;
    cell 0 is always available through the pinned zero at time 0.
    """
    prod = w[:, :-1] * w[:, 1:]
    p_touch = np.exp(-2.0 * np.maximum(prod, 0.0) / dt)
    has_zero = (prod <= 0.0) | (rng.random(prod.shape) < p_touch)
    has_zero[:, 0] = True
    rev = has_zero[:, ::-1]
    return has_zero.shape[1] - 1 - rev.argmax(axis=1)


def _bisect_last_zero(
    rng: np.random.Generator,
    ta: np.ndarray,
    tb: np.ndarray,
    va: np.ndarray,
    vb: np.ndarray,
    iters: int = 26,
) -> np.ndarray:
    """Rightmost zero of a Brownian bridge between (ta, va) and (tb, vb),
    located by sampled-midpoint bisection.

    The cell is known to contain a zero.  When the endpoints straddle,
    the side is chosen by the sign of the sampled midpoint; for
    same-sign endpoints the side is chosen by the conditional touch
    probabilities of the two halves.  The midpoint draw is not
    reweighted by the touch event, which leaves a sub-cell placement
    error far below the cell width.
    """
    ta, tb = ta.copy(), tb.copy()
    va, vb = va.copy(), vb.copy()
    for _ in range(iters):
        tm = 0.5 * (ta + tb)
        span = tb - ta
        half = 0.5 * span
        mean = va + 0.5 * (vb - va)
        var = np.maximum((tb - tm) * (tm - ta) / span, 0.0)
        vm = mean + np.sqrt(var) * rng.normal(size=ta.shape)
        p_l = np.exp(-2.0 * np.maximum(va * vm, 0.0) / np.maximum(half, 1e-300))
        p_r = np.exp(-2.0 * np.maximum(vm * vb, 0.0) / np.maximum(half, 1e-300))
        denom = np.maximum(p_r + p_l - p_r * p_l, 1e-300)
        right = rng.random(ta.shape) < p_r / denom
        ta = np.where(right, tm, ta)
        va = np.where(right, vm, va)
        tb = np.where(right, tb, tm)
        vb = np.where(right, vb, vm)
    straddle = va * vb <= 0.0
    denom = np.abs(va) + np.abs(vb)
    frac = np.where(
        straddle & (denom > 0), np.abs(va) / np.where(denom > 0, denom, 1.0), 0.5
    )
    return ta + frac * (tb - ta)


def sample_meander_batch(m: int, dt: float, seed: int) -> tuple[np.ndarray, int]:
    """(values, resamples): m meander paths on the grid j*dt, j = 0..1/dt.

    Paths whose post-zero stretch is shorter than one grid cell are
    resampled; the count of such rejections is returned.
    """
    if dt > 2.0**-10 + 1e-15:
        raise ValueError("meander sampling requires dt <= 2**-10")
    K = int(round(1.0 / dt))
    rng = spawn_rng(seed, 7)
    out = np.empty((m, K + 1))
    todo = m
    resamples = 0

    while todo:
        w = _bm_increments(rng, todo, K, dt)
        cells = _last_zero_cells(rng, w, dt)
        rows = np.arange(todo)
        ta = cells * dt
        tb = (cells + 1) * dt
        va = w[rows, cells]
        vb = w[rows, cells + 1]
        va = np.where(cells == 0, 0.0, va)  # pinned start counts as a zero
        tau1 = _bisect_last_zero(rng, ta, tb, va, vb)
        delta = 1.0 - tau1

        ok = delta >= dt
        n_ok = int(ok.sum())
        resamples += todo - n_ok
        if n_ok == 0:
            continue
        w, tau1, delta, cells = w[ok], tau1[ok], delta[ok], cells[ok]

        vals = np.empty((n_ok, K + 1))
        vals[:, 0] = 0.0
        rows = np.arange(n_ok)
        for j in range(1, K + 1):
            u = tau1 + delta * (j * dt)
            u = np.minimum(u, 1.0)
            cell = np.minimum((u / dt).astype(np.int64), K - 1)
            tl = cell * dt
            tr = tl + dt
            vl = w[rows, cell]
            vr = w[rows, cell + 1]
            # inside the last-zero cell the left anchor is the zero itself
            anchored = cell == cells
            tl = np.where(anchored, tau1, tl)
            vl = np.where(anchored, 0.0, vl)
            span = tr - tl
            frac = np.clip((u - tl) / span, 0.0, 1.0)
            mean = vl + frac * (vr - vl)
            var = np.maximum((tr - u) * (u - tl) / span, 0.0)
            on_grid = var <= 0.0
            sample = mean + np.sqrt(var) * rng.normal(size=n_ok)
            vals[:, j] = np.where(on_grid, mean, sample)
        vals = np.abs(vals) / np.sqrt(delta)[:, None]

        out[m - todo : m - todo + n_ok] = vals
        todo -= n_ok
    return out, resamples


def sample_meander(dt: float, seed: int) -> ContinuumPath:
    """One meander path on [0, 1] built from the last zero of a Brownian path."""
    vals, resamples = sample_meander_batch(1, dt, seed)
    return ContinuumPath(
        kind="meander", dt=dt, values=vals[0], meta={"seed": seed, "resamples": resamples}
    )


def meander_scaled(path: ContinuumPath, t: float) -> ContinuumPath:
    """Meander on [0, t]: value sqrt(t) * path(s / t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if path.kind != "meander":
        raise ValueError("expected a meander path")
    return ContinuumPath(
        kind="meander",
        dt=path.dt * t,
        values=math.sqrt(t) * path.values,
        meta={**path.meta, "scaled_to": t},
    )


# ---------------------------------------------------------------------------
# meander transition density from the origin
# ---------------------------------------------------------------------------


def normal_integral(x: float) -> float:
    """sqrt(2/pi) * integral_0^x exp(-u^2/2) du, i.e. erf(x / sqrt(2))."""
    if x != x:  # NaN guard
        raise ValueError("x must be a number")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if math.isinf(x):
        return 1.0
    return math.erf(x / math.sqrt(2.0))


def q_density(t: float, y: float) -> float:
    """Meander transition density from (0, 0) to (t, y), 0 < t <= 1."""
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    if y < 0:
        raise ValueError("y must be nonnegative")
    if y == 0.0:
        return 0.0
    if t == 1.0:
        tail = 1.0  # the (1 - t)^(-1/2) argument diverges; its integral is 1
    else:
        tail = normal_integral(y / math.sqrt(1.0 - t))
    return t**-1.5 * y * math.exp(-(y * y) / (2.0 * t)) * tail


def q_cdf(t: float, x: float) -> float:
    """integral_0^x q(t, y) dy by adaptive quadrature."""
    if x <= 0:
        return 0.0
    val, _ = scipy.integrate.quad(lambda y: q_density(t, y), 0.0, x, limit=200)
    return float(val)


def q_cdf_closed(t: float, x: float) -> float:
    """Closed form of the same integral, used to cross-check the quadrature:

        F_t(x) = Ntilde(x / sqrt(t(1-t))) - t^(-1/2) e^(-x^2/(2t)) Ntilde(x / sqrt(1-t))

    with the t -> 1 limit F_1(x) = 1 - exp(-x^2 / 2).
    """
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    if x <= 0:
        return 0.0
    if t == 1.0:
        return 1.0 - math.exp(-(x * x) / 2.0)
    a = normal_integral(x / math.sqrt(t * (1.0 - t)))
    b = t**-0.5 * math.exp(-(x * x) / (2.0 * t)) * normal_integral(x / math.sqrt(1.0 - t))
    return a - b


def q_normalization(t: float) -> float:
    """integral_0^inf q(t, y) dy; equals 1 for every t in (0, 1]."""
    val, _ = scipy.integrate.quad(lambda y: q_density(t, y), 0.0, np.inf, limit=200)
    return float(val)


def meander_sup_tail(a: float, c: float, delta: float) -> float:
    """Closed-form bound (1/3) sqrt((c+delta)/(c-a)) (a+delta)^(-3/2) for the
    probability that the meander on [0, c+delta] stays below 1 up to time
    a + delta; valid for c > 2a >= 0 and delta > 0."""
    if not (c > 2 * a >= 0):
        raise ValueError("need c > 2a >= 0")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return (1.0 / 3.0) * math.sqrt((c + delta) / (c - a)) * (a + delta) ** -1.5


# ---------------------------------------------------------------------------
# Bessel-3 and its level-crossing time
# ---------------------------------------------------------------------------


def sample_bessel3(dt: float, horizon: float, seed: int) -> ContinuumPath:
    """Radial part of a 3-d Brownian motion on [0, horizon]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round(horizon / dt))
    rng = spawn_rng(seed, 8)
    coords = np.cumsum(rng.normal(0.0, math.sqrt(dt), size=(steps, 3)), axis=0)
    vals = np.empty(steps + 1)
    vals[0] = 0.0
    vals[1:] = np.sqrt((coords**2).sum(axis=1))
    return ContinuumPath(kind="bessel3", dt=dt, values=vals, meta={"seed": seed})


def bessel3_endpoint_batch(m: int, t: float, seed: int) -> np.ndarray:
    """Exact B3(t) marginals: the norm of a centred 3-d Gaussian."""
    rng = spawn_rng(seed, 8)
    g = rng.normal(0.0, math.sqrt(t), size=(m, 3))
    return np.sqrt((g**2).sum(axis=1))


def sample_rho1_batch(
    m: int,
    dt: float,
    sigma: float,
    seed: int,
    record_at: float | None = None,
    max_time: float = 400.0,
) -> tuple[np.ndarray, np.ndarray | None]:
    """First times at which m Bessel-3 paths reach 1/sigma.

    Grid detection with linear sub-grid refinement; intra-step excursions
    above the level are not bridged, so dt controls the (upward) bias.
    When `record_at` is given, also returns B3(record_at ^ rho1) per path.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    level = 1.0 / sigma
    rng = spawn_rng(seed, 9)

    coords = np.zeros((m, 3))
    radius = np.zeros(m)
    idx = np.arange(m)
    rho = np.full(m, np.nan)
    rec = np.full(m, np.nan) if record_at is not None else None
    rec_step = int(round(record_at / dt)) if record_at is not None else -1

    sqdt = math.sqrt(dt)
    max_steps = int(max_time / dt)
    k = 0
    while idx.size:
        k += 1
        if k > max_steps:
            raise RuntimeError(f"rho1 sampling exceeded the {max_time} time cap")
        coords += rng.normal(0.0, sqdt, size=coords.shape)
        new_radius = np.sqrt((coords**2).sum(axis=1))
        crossed = new_radius >= level
        if crossed.any():
            prev = radius[crossed]
            cur = new_radius[crossed]
            frac = (level - prev) / (cur - prev)
            rho[idx[crossed]] = ((k - 1) + frac) * dt
        if rec is not None and k == rec_step:
            live = ~crossed
            rec[idx[live]] = new_radius[live]
        keep = ~crossed
        coords, radius, idx = coords[keep], new_radius[keep], idx[keep]

    if rec is not None:
        rec[np.isnan(rec)] = level  # crossed before record_at: frozen at the level
    return rho, rec


def sample_rho1(dt: float, sigma: float, seed: int) -> float:
    """One crossing time of level 1/sigma by a Bessel-3 path."""
    rho, _ = sample_rho1_batch(1, dt, sigma, seed)
    return float(rho[0])
