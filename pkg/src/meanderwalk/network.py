"""Collapsed electrical networks for the crossing problem on (0, N).

Three reductions of an environment are built for the barrier sets
B = (-inf, 0] and E = [N, inf):

* omega1 prunes every edge whose endpoints both lie in (B \\ {0}) u E;
* omega2 additionally collapses B onto the single state 0;
* omega3 collapses both B onto 0 and E onto N.

Edges internal to B that survive the pruning become a self-loop at the
collapsed state; the loop is stored separately (`loop0`) and excluded
from the boundary masses, so for the unit-conductance chain the omega3
masses read (1, 2, ..., 2, 1).  The classical vertex-mass identities
then hold in loop-corrected form, e.g. C3_0 + 2*loop0 equals the total
omega1 mass of B.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .environment import Environment, WindowError
from .walk import harmonic_hit, interior_solve


class ReductionKind(str, Enum):
    OMEGA1 = "omega1"
    OMEGA2 = "omega2"
    OMEGA3 = "omega3"


@dataclass(eq=False)
class NetworkReduction:
    kind: ReductionKind
    N: int
    r_max: int
    env_id: str

    # omega1 boundary data (also carried by omega2/omega3 for the identities)
    b_sites: np.ndarray  # sites of B with positive omega1 mass
    e_sites: np.ndarray
    c1_b_sites: np.ndarray  # omega1 masses per B site (site 0 keeps its full C_0)
    c1_e_sites: np.ndarray
    c1_b: float
    c1_e: float
    pi_b: np.ndarray
    pi_e: np.ndarray

    # collapsed structure (omega2/omega3)
    loop0: float = 0.0  # aggregated weight of surviving edges internal to B
    edge0n: float = 0.0  # aggregated weight of edges between 0 and E (omega3)
    to0: np.ndarray | None = None  # x in (0, N) -> collapsed edge to 0
    ton: np.ndarray | None = None  # x in (0, N) -> collapsed edge to N (omega3)
    to0_omega2: np.ndarray | None = None  # x > 0 -> collapsed edge to 0 (omega2)
    c2_0: float = 0.0
    masses: np.ndarray | None = None  # omega3 masses C3_0..C3_N, self-loop excluded

    def to_json_dict(self) -> dict:
        doc = {
            "kind": self.kind.value,
            "N": self.N,
            "r_max": self.r_max,
            "env_id": self.env_id,
            "b_sites": self.b_sites.tolist(),
            "e_sites": self.e_sites.tolist(),
            "c1_b_sites": self.c1_b_sites.tolist(),
            "c1_e_sites": self.c1_e_sites.tolist(),
            "c1_b": self.c1_b,
            "c1_e": self.c1_e,
            "pi_b": self.pi_b.tolist(),
            "pi_e": self.pi_e.tolist(),
            "loop0": self.loop0,
        }
        if self.kind is ReductionKind.OMEGA2:
            doc["to0"] = self.to0_omega2.tolist()
            doc["c2_0"] = self.c2_0
        if self.kind is ReductionKind.OMEGA3:
            doc["edges"] = self.edge_list()
            doc["masses"] = self.masses.tolist()
        return doc

    def edge_list(self) -> list:
        """Collapsed omega3 edges as (x, y, weight) with x < y; loop0 separate."""
        if self.kind is not ReductionKind.OMEGA3:
            raise ValueError("edge_list is defined for omega3 reductions")
        edges = []
        if self.edge0n > 0:
            edges.append((0, self.N, float(self.edge0n)))
        for i, x in enumerate(range(1, self.N)):
            if self.to0[i] > 0:
                edges.append((0, x, float(self.to0[i])))
            if self.ton[i] > 0:
                edges.append((x, self.N, float(self.ton[i])))
        return edges

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True))


def _boundary_data(env: Environment, N: int):
    """omega1 boundary sites, per-site masses and the hitting measures."""
    R = env.r_max
    b_sites = np.arange(-R, 1)
    e_sites = np.arange(N, N + R)

    c1_b = np.zeros(b_sites.size)
    for i, x in enumerate(b_sites):
        if x == 0:
            c1_b[i] = env.mass(0)
        else:
            # edges from x into {0} u (0, N)
            c1_b[i] = sum(env.edge(x, y) for y in range(max(0, x - R), min(N, x + R + 1)))
    c1_e = np.zeros(e_sites.size)
    for i, z in enumerate(e_sites):
        c1_e[i] = sum(env.edge(y, z) for y in range(max(0, z - R), N))

    C1_B = float(c1_b.sum())
    C1_E = float(c1_e.sum())
    return b_sites, e_sites, c1_b, c1_e, C1_B, C1_E, c1_b / C1_B, c1_e / C1_E


def reduce(env: Environment, N: int, kind: ReductionKind | str) -> NetworkReduction:
    """Build one of the three collapsed networks for barriers at 0 and N."""
    kind = ReductionKind(kind)
    R = env.r_max
    if N < 2:
        raise ValueError("N must be >= 2")
    if env.x_min > -R or env.x_max < N + R:
        raise WindowError(f"environment window must cover [{-R}, {N + R}]")

    b_sites, e_sites, c1_b_sites, c1_e_sites, C1_B, C1_E, pi_b, pi_e = _boundary_data(env, N)
    loop0 = sum(env.edge(x, 0) for x in range(-R, 0))

    red = NetworkReduction(
        kind=kind,
        N=N,
        r_max=R,
        env_id=env.env_id,
        b_sites=b_sites,
        e_sites=e_sites,
        c1_b_sites=c1_b_sites,
        c1_e_sites=c1_e_sites,
        c1_b=C1_B,
        c1_e=C1_E,
        pi_b=pi_b,
        pi_e=pi_e,
        loop0=float(loop0),
    )
    if kind is ReductionKind.OMEGA1:
        return red

    if kind is ReductionKind.OMEGA2:
        # collapse B only; every x > 0 keeps its surviving edges into B
        xs = np.arange(1, env.x_max + 1)
        to0 = np.zeros(xs.size)
        for i, x in enumerate(xs):
            if x < N:
                to0[i] = sum(env.edge(b, x) for b in range(max(-R, x - R), 1))
            else:
                to0[i] = env.edge(0, x)  # edges E -> (B \ {0}) were pruned
        red.to0_omega2 = to0
        red.c2_0 = float(to0.sum())
        return red

    # omega3: collapse both sides
    xs = np.arange(1, N)
    to0 = np.zeros(xs.size)
    ton = np.zeros(xs.size)
    for i, x in enumerate(xs):
        to0[i] = sum(env.edge(b, x) for b in range(max(-R, x - R), 1))
        ton[i] = sum(env.edge(x, z) for z in range(max(N, x + 1), x + R + 1))
    edge0n = sum(env.edge(0, z) for z in range(N, N + R))

    masses = np.zeros(N + 1)
    masses[0] = to0.sum() + edge0n
    masses[N] = ton.sum() + edge0n
    masses[1:N] = env.masses(1, N - 1)
    red.to0 = to0
    red.ton = ton
    red.edge0n = float(edge0n)
    red.masses = masses
    return red


def omega3_weight_table(env: Environment, red: NetworkReduction) -> np.ndarray:
    """Dense symmetric omega3 edge table, (N+1) x (N+1), self-loop excluded."""
    if red.kind is not ReductionKind.OMEGA3:
        raise ValueError("expected an omega3 reduction")
    N = red.N
    W = np.zeros((N + 1, N + 1))
    W[0, N] = W[N, 0] = red.edge0n
    for i, x in enumerate(range(1, N)):
        W[0, x] = W[x, 0] = red.to0[i]
        W[x, N] = W[N, x] = red.ton[i]
    for x in range(1, N):
        for y in range(x + 1, min(N, x + red.r_max + 1)):
            if y < N:
                w = env.edge(x, y)
                W[x, y] = W[y, x] = w
    return W


# ---------------------------------------------------------------------------
# exact electrical quantities
# ---------------------------------------------------------------------------


def _interior_system(env: Environment, N: int):
    """Interior jump probabilities and the banded entries of P_int."""
    offsets, TW = env.weight_matrix(1, N - 1)
    C = env.masses(1, N - 1)
    P = TW / C[:, None]
    sites = np.arange(1, N)
    tgt = sites[:, None] + offsets[None, :]
    inb = (tgt >= 1) & (tgt <= N - 1)
    ri, ci = np.nonzero(inb)
    return offsets, P, tgt, ri, ci, P[ri, ci], tgt[ri, ci] - 1


def effective_conductance(env: Environment, red: NetworkReduction) -> float:
    """Effective conductance between the merged node {0, 1} and N on omega3.

    Equals C3_N times the probability, from N, of hitting {0, 1} before
    returning to N; bounded below by the nearest-neighbour series value
    kappa / (N - 1).
    """
    if red.kind is not ReductionKind.OMEGA3:
        raise ValueError("expected an omega3 reduction")
    N, R = red.N, red.r_max

    # success probability from each interior site y >= 2 of hitting {0,1}
    # (collapsed-0 or site 1) before the collapsed state N
    if N > 2:
        offsets, TW = env.weight_matrix(2, N - 1)
        C = env.masses(2, N - 1)
        P = TW / C[:, None]
        sites = np.arange(2, N)
        tgt = sites[:, None] + offsets[None, :]
        # jumping into B or to site 1 wins; reaching [N, inf) loses
        win = (P * (tgt <= 1)).sum(axis=1)
        inb = (tgt >= 2) & (tgt <= N - 1)
        ri, ci = np.nonzero(inb)
        g = interior_solve(N - 2, R, ri, tgt[ri, ci] - 2, P[ri, ci], win)
    else:
        g = np.zeros(0)

    ceff = red.edge0n + red.ton[0]  # direct N->0 and N->1 contributions
    if N > 2:
        ceff += float(red.ton[1:] @ g)
    return float(ceff)


def series_conductance_bound(env: Environment, N: int) -> float:
    """Nearest-neighbour series value (sum of resistances 1..N-1) inverted."""
    inv = sum(1.0 / env.edge(i, i + 1) for i in range(1, N))
    return 1.0 / inv


def crossing_probability_exact(env: Environment, N: int) -> float:
    """P[enter [N, inf) before returning to (-inf, 0]] from 0, full window."""
    return harmonic_hit(env, N).p_cross


def crossing_probability_via_omega1(env: Environment, red: NetworkReduction) -> float:
    """Same crossing probability assembled from the omega1 reduction arrays."""
    N, R = red.N, red.r_max
    offsets, P, tgt, ri, ci, vals, cols = _interior_system(env, N)
    # mass sent from each interior site directly into E, from the reduction's
    # edge bookkeeping rather than the raw window sweep
    C_int = env.masses(1, N - 1)
    e_mass = np.zeros(N - 1)
    for i, x in enumerate(range(1, N)):
        e_mass[i] = sum(env.edge(x, z) for z in red.e_sites if z <= x + R)
    rhs = e_mass / C_int
    h = interior_solve(N - 1, R, ri, cols, vals, rhs)

    _, TW0 = env.weight_matrix(0, 0)
    c0 = float(TW0.sum())
    p_cross = 0.0
    for o, w in zip(offsets, TW0[0]):
        y = int(o)
        if y >= N:
            p_cross += w / c0
        elif 1 <= y <= N - 1:
            p_cross += w / c0 * h[y - 1]
    return float(p_cross)


def crossing_probability_via_reversal(env: Environment, red: NetworkReduction) -> float:
    """Crossing probability through the path-reversal identity.

    Computes (C1_E / C_0) * P^{pi_E}[hit B before returning to E, landing
    exactly at 0] on omega1 and returns it; agreement with the direct
    solve validates the boundary measures.
    """
    N, R = red.N, red.r_max
    offsets, P, tgt, ri, ci, vals, cols = _interior_system(env, N)
    # success = land exactly on 0 before touching E again or deeper B
    C_int = env.masses(1, N - 1)
    hit0 = np.zeros(N - 1)
    for i, x in enumerate(range(1, N)):
        hit0[i] = env.edge(x, 0) / C_int[i]
    f = interior_solve(N - 1, R, ri, cols, vals, hit0)

    total = 0.0
    for z, pz, cz in zip(red.e_sites, red.pi_e, red.c1_e_sites):
        if cz == 0.0:
            continue
        # omega1 transition from z: only edges into {0} u (0, N) survive
        acc = env.edge(z, 0) / cz
        for y in range(max(1, z - R), N):
            w = env.edge(z, y)
            if w > 0:
                acc += w / cz * f[y - 1]
        total += pz * acc
    c_0 = env.mass(0)
    return float(red.c1_e / c_0 * total)


def expected_exit_time_exact(env: Environment, N: int) -> float:
    """E[steps to leave (0, N)] from 0, counting the exit step.

    Solves m(x) = 1 + sum_y p(x, y) m(y) on the interior with m = 0 on
    both barrier sets and adds the first step from the origin.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    R = env.r_max
    offsets, P, tgt, ri, ci, vals, cols = _interior_system(env, N)
    m_int = interior_solve(N - 1, R, ri, cols, vals, np.ones(N - 1))

    # residual certificate for the solve
    Mm = np.zeros(N - 1)
    np.add.at(Mm, ri, vals * m_int[cols])
    residual = float(np.abs(m_int - (Mm + 1.0)).max())
    if residual > 1e-9:
        raise RuntimeError(f"exit-time solve residual {residual:.3e}")

    _, TW0 = env.weight_matrix(0, 0)
    c0 = float(TW0.sum())
    expect = 1.0
    for o, w in zip(offsets, TW0[0]):
        y = int(o)
        if 1 <= y <= N - 1:
            expect += w / c0 * m_int[y - 1]
    return float(expect)


def little_bound(red: NetworkReduction) -> float:
    """Mass-ratio upper bound sum_x C3_x / C3_0 for the expected exit time."""
    if red.kind is not ReductionKind.OMEGA3:
        raise ValueError("expected an omega3 reduction")
    return float(red.masses.sum() / red.masses[0])
