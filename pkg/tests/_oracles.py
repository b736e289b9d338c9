"""Independent brute-force oracles used by the tests.

These deliberately avoid the package's recursion/solver code paths:
laws are obtained by exhaustive path enumeration (meander case) or by
time-truncated path-sum iteration with a certified tail (crossing
case), so agreement with the transform samplers is a genuine two-route
check.
"""

from __future__ import annotations

import numpy as np


def step_offsets(r_max: int) -> np.ndarray:
    return np.concatenate([np.arange(-r_max, 0), np.arange(1, r_max + 1)])


def _prob_lookup(env, span: int):
    """p(x, x+offset) table over x in [-span, span]."""
    offsets, TW = env.weight_matrix(-span, span)
    C = env.masses(-span, span)
    return offsets, TW / C[:, None], span


def enumerate_meander_law(env, n: int):
    """Exact conditional law of the staying-positive walk by enumerating
    every step sequence of length n.  Returns {path_tuple: probability}
    (conditional) and the unconditional survival probability."""
    R = env.r_max
    width = 2 * R
    offsets, P, span = _prob_lookup(env, (n + 1) * R + 1)
    total = width**n
    law = {}
    surv = 0.0
    chunk = 1 << 14
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, n), dtype=np.int64)
        rem = idx.copy()
        for j in range(n - 1, -1, -1):
            digits[:, j] = rem % width
            rem //= width
        steps = offsets[digits]
        pos = np.zeros((idx.size, n + 1), dtype=np.int64)
        np.cumsum(steps, axis=1, out=pos[:, 1:])
        alive = (pos[:, 1:] >= 1).all(axis=1)
        if not alive.any():
            continue
        pos = pos[alive]
        digits = digits[alive]
        probs = P[pos[:, :-1] + span, digits].prod(axis=1)
        surv += probs.sum()
        for row, pr in zip(pos, probs):
            law[tuple(int(v) for v in row)] = law.get(tuple(int(v) for v in row), 0.0) + float(pr)
    return {k: v / surv for k, v in law.items()}, surv


def crossing_probability_pathsum(env, N: int, max_iter: int = 5000, tail_tol: float = 1e-14):
    """P[reach [N, inf) before (-inf, 0]] from 0 by iterated path sums.

    Propagates the interior occupation measure step by step and
    accumulates the mass that exits upward; the leftover interior mass
    certifies the truncation error.
    """
    R = env.r_max
    offsets, TW = env.weight_matrix(0, N - 1)
    C = env.masses(0, N - 1)
    P = TW / C[:, None]
    sites = np.arange(0, N)
    tgt = sites[:, None] + offsets[None, :]

    win_mass = (P * (tgt >= N)).sum(axis=1)
    inb = (tgt >= 1) & (tgt <= N - 1)
    M = np.zeros((N, N - 1))
    for i in range(N):
        for j in range(offsets.size):
            if inb[i, j]:
                M[i, tgt[i, j] - 1] += P[i, j]

    alpha = np.zeros(N - 1)
    win = float(win_mass[0])
    alpha += M[0]
    for _ in range(max_iter):
        win += float(alpha @ win_mass[1:])
        alpha = alpha @ M[1:]
        if alpha.sum() < tail_tol:
            break
    else:
        raise RuntimeError("path-sum iteration did not flush the interior mass")
    return win


def enumerate_crossing_paths(env, N: int, max_len: int):
    """All conditioned crossing paths of length <= max_len with their exact
    conditional probabilities (denominator from the path-sum oracle)."""
    R = env.r_max
    width = 2 * R
    offsets, P, span = _prob_lookup(env, N + (max_len + 1) * R + 1)
    p_cross = crossing_probability_pathsum(env, N)

    law = {}
    total = width**max_len
    chunk = 1 << 14
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, max_len), dtype=np.int64)
        rem = idx.copy()
        for j in range(max_len - 1, -1, -1):
            digits[:, j] = rem % width
            rem //= width
        steps = offsets[digits]
        pos = np.zeros((idx.size, max_len + 1), dtype=np.int64)
        np.cumsum(steps, axis=1, out=pos[:, 1:])
        # first hitting index of [N, inf), provided the interior held until then
        for row, drow in zip(pos, digits):
            path = [0]
            ok = True
            hit = -1
            for k in range(1, max_len + 1):
                x = int(row[k])
                path.append(x)
                if x >= N:
                    hit = k
                    break
                if x <= 0:
                    ok = False
                    break
            if not ok or hit < 0:
                continue
            key = tuple(path)
            if key in law:
                continue
            pr = 1.0
            for k in range(hit):
                pr *= P[path[k] + span, int(drow[k])]
            law[key] = pr / p_cross
    return law, p_cross


def exit_time_pathsum(env, N: int, max_iter: int = 500000, tail_tol: float = 1e-13):
    """E[exit step from (0, N)] from 0 by accumulating survival mass."""
    R = env.r_max
    offsets, TW = env.weight_matrix(0, N - 1)
    C = env.masses(0, N - 1)
    P = TW / C[:, None]
    sites = np.arange(0, N)
    tgt = sites[:, None] + offsets[None, :]
    inb = (tgt >= 1) & (tgt <= N - 1)
    M = np.zeros((N, N - 1))
    for i in range(N):
        for j in range(offsets.size):
            if inb[i, j]:
                M[i, tgt[i, j] - 1] += P[i, j]
    # E[tau] = sum_{k>=0} P[tau > k]; P[tau > 0] = 1
    expect = 1.0
    alpha = M[0]
    for _ in range(max_iter):
        s = alpha.sum()
        expect += s
        if s < tail_tol:
            return expect
        alpha = alpha @ M[1:]
    raise RuntimeError("exit-time path sum did not converge")
