"""Weighted empirical distributions and Kolmogorov-Smirnov distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class EmpiricalDistribution:
    samples: np.ndarray  # sorted
    weights: np.ndarray  # positive, summing to one

    @classmethod
    def from_samples(cls, samples, weights=None) -> "EmpiricalDistribution":
        s = np.asarray(samples, dtype=float)
        if s.size == 0:
            raise ValueError("empty sample set")
        if weights is None:
            w = np.full(s.size, 1.0 / s.size)
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != s.shape or (w <= 0).any():
                raise ValueError("weights must be positive and match the samples")
            w = w / w.sum()
        order = np.argsort(s, kind="stable")
        return cls(samples=s[order], weights=w[order])

    def ecdf(self, x) -> np.ndarray:
        """P[sample <= x] under the empirical weights."""
        cw = np.concatenate([[0.0], np.cumsum(self.weights)])
        idx = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right")
        return cw[idx]


def ks_distance(dist: EmpiricalDistribution, cdf) -> float:
    """sup_x |ECDF(x) - F(x)| evaluated at the sample points (both gaps).

    The lower gap compares against the reference's left limit, so a
    sample scores zero against its own ECDF; for continuous references
    the left limit is indistinguishable from the value itself.
    """
    xs = dist.samples
    f = np.asarray(cdf(xs), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(xs, -np.inf)), dtype=float)
    hi = np.cumsum(dist.weights)
    lo = hi - dist.weights
    return float(max(np.abs(hi - f).max(), np.abs(f_left - lo).max()))


def ks_two_sample(a, b) -> float:
    """Two-sample sup-distance between unweighted ECDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    xs = np.concatenate([a, b])
    fa = np.searchsorted(a, xs, side="right") / a.size
    fb = np.searchsorted(b, xs, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ecdf(dist: EmpiricalDistribution, x) -> np.ndarray:
    return dist.ecdf(x)
