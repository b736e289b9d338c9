"""Random-conductance environments on the integer lattice.

An environment stores one banded, symmetric table of edge conductances
w(x, x+d) for 1 <= d <= R_max over a finite window of sites.  Every
nearest-neighbour edge is bounded below by `kappa` (uniform ellipticity)
and every edge obeys the polynomial cap K / (1 + d^(3+beta)), so each
site's total conductance C_x lies in a computable band
[kappa_hat, 1/kappa_hat].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .rng import counter_uniforms

FORMAT_VERSION = 1

# channel layout for counter-based draws: d in 1..R_max are the edge
# channels; the two extra channels drive the modulation chain
_CH_REFRESH = 10_001
_CH_STATE = 10_002


class GeneratorKind(str, Enum):
    IID_UNIFORM = "iid_uniform"
    MARKOV_MODULATED = "markov_modulated"
    DETERMINISTIC_SRW = "deterministic_srw"


class WindowError(RuntimeError):
    """A site (or its jump neighbourhood) falls outside the stored window."""


class InfeasibleParamsError(ValueError):
    """Parameter set cannot satisfy both the ellipticity floor and the tail cap."""


@dataclass(frozen=True)
class EnvironmentParams:
    kappa: float
    k_bound: float
    beta: float
    r_max: int
    x_min: int
    x_max: int
    generator_kind: GeneratorKind = GeneratorKind.IID_UNIFORM
    seed: int = 0

    def __post_init__(self):
        if self.kappa <= 0 or self.k_bound <= 0 or self.beta <= 0:
            raise ValueError("kappa, k_bound and beta must be positive")
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")
        if self.x_min >= self.x_max:
            raise ValueError("window must satisfy x_min < x_max")
        if self.x_max - self.x_min < 2 * self.r_max:
            raise WindowError(
                f"window [{self.x_min}, {self.x_max}] too small for jump range {self.r_max}"
            )
        if self.kappa > self.tail_cap(1):
            raise InfeasibleParamsError(
                f"kappa={self.kappa} exceeds the distance-1 tail cap {self.tail_cap(1)}"
            )
        object.__setattr__(self, "generator_kind", GeneratorKind(self.generator_kind))

    def tail_cap(self, d) -> float | np.ndarray:
        """Upper bound K / (1 + d^(3+beta)) for an edge of length d."""
        return self.k_bound / (1.0 + np.asarray(d, dtype=float) ** (3.0 + self.beta))

    def kappa_hat(self) -> float:
        """Two-sided ellipticity constant: kappa_hat <= C_x <= 1/kappa_hat.

        The tail sum is truncated at r_max because longer edges are
        identically zero in this model.
        """
        ds = np.arange(1, self.r_max + 1)
        cap_sum = float(self.tail_cap(ds).sum())
        return min(self.kappa, 1.0 / (2.0 * cap_sum))

    @property
    def n_sites(self) -> int:
        return self.x_max - self.x_min + 1

    def header_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "k_bound": self.k_bound,
            "beta": self.beta,
            "r_max": self.r_max,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "generator_kind": self.generator_kind.value,
            "seed": self.seed,
            "format_version": FORMAT_VERSION,
        }


@dataclass(frozen=True)
class TransitionRow:
    x: int
    targets: list  # list of (y, probability), positive-conductance targets only
    total_conductance: float


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: list  # (x, d, "E"|"K") triples
    kappa_hat: float
    c_min: float
    c_max: float
    c_bounds_ok: bool

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [list(v) for v in self.violations],
            "kappa_hat": self.kappa_hat,
            "c_min": self.c_min,
            "c_max": self.c_max,
            "c_bounds_ok": self.c_bounds_ok,
        }


def _modulation_states(seed: int, x_lo: int, x_hi: int) -> np.ndarray:
    """Stationary two-state modulation chain sampled site by site.

    The chain refreshes at each site with probability 1/2 (fresh value
    uniform on {1/2, 1}) and otherwise copies its left neighbour, i.e. a
    symmetric two-state Markov chain with flip probability 1/4, started
    from its stationary law.  The state at x only depends on draws at
    sites <= x, so it is window independent.
    """
    lookback = 64
    while True:
        xs = np.arange(x_lo - lookback, x_hi + 1, dtype=np.int64)
        refresh = counter_uniforms(seed, xs, _CH_REFRESH) < 0.5
        if refresh[:lookback].any():
            break
        lookback *= 2  # astronomically unlikely; keeps the scan exact
    fresh = np.where(counter_uniforms(seed, xs, _CH_STATE) < 0.5, 0.5, 1.0)
    idx = np.where(refresh, np.arange(xs.size), -1)
    last = np.maximum.accumulate(idx)
    return fresh[last][lookback:]


@dataclass(frozen=True, eq=False)
class Environment:
    """Conductance table over the window [x_min, x_max].

    rows[i, d-1] holds w(x_min + i, x_min + i + d); each undirected edge
    is stored exactly once at its left endpoint.  Immutable after
    generation.
    """

    params: EnvironmentParams
    rows: np.ndarray = field(repr=False)

    # -- construction ------------------------------------------------------

    @classmethod
    def generate(cls, params: EnvironmentParams) -> "Environment":
        p = params
        xs = np.arange(p.x_min, p.x_max + 1, dtype=np.int64)
        ds = np.arange(1, p.r_max + 1)
        caps = np.asarray(p.tail_cap(ds), dtype=float)

        if p.generator_kind is GeneratorKind.DETERMINISTIC_SRW:
            if p.tail_cap(1) < 1.0 or p.kappa > 1.0:
                raise InfeasibleParamsError(
                    "deterministic_srw needs kappa <= 1 and k_bound/2 >= 1"
                )
            rows = np.zeros((xs.size, p.r_max))
            rows[:, 0] = 1.0
            return cls(params=p, rows=rows)

        lo = np.zeros(p.r_max)
        lo[0] = p.kappa
        u = np.stack(
            [counter_uniforms(p.seed, xs, d) for d in range(1, p.r_max + 1)], axis=1
        )
        rows = lo[None, :] + (caps - lo)[None, :] * u

        if p.generator_kind is GeneratorKind.MARKOV_MODULATED:
            m = _modulation_states(p.seed, p.x_min, p.x_max)
            rows = rows * m[:, None]
            # clamp so the ellipticity floor survives the modulation
            rows[:, 0] = np.maximum(rows[:, 0], p.kappa)

        return cls(params=p, rows=rows)

    @classmethod
    def from_rows(cls, params: EnvironmentParams, rows: np.ndarray) -> "Environment":
        rows = np.asarray(rows, dtype=float)
        if rows.shape != (params.n_sites, params.r_max):
            raise ValueError(f"rows must have shape {(params.n_sites, params.r_max)}")
        return cls(params=params, rows=rows)

    # -- geometry ----------------------------------------------------------

    @property
    def x_min(self) -> int:
        return self.params.x_min

    @property
    def x_max(self) -> int:
        return self.params.x_max

    @property
    def r_max(self) -> int:
        return self.params.r_max

    @property
    def interior_min(self) -> int:
        """Smallest site whose full jump neighbourhood is stored."""
        return self.params.x_min + self.params.r_max

    @property
    def interior_max(self) -> int:
        return self.params.x_max

    def _row_index(self, x: int | np.ndarray):
        return np.asarray(x) - self.params.x_min

    # -- weights -----------------------------------------------------------

    def weight(self, x: int, d: int) -> float:
        """Conductance of the stored edge (x, x+d), 1 <= d <= r_max."""
        if not 1 <= d <= self.r_max:
            return 0.0
        if not self.x_min <= x <= self.x_max:
            raise WindowError(f"site {x} outside stored window")
        return float(self.rows[x - self.x_min, d - 1])

    def edge(self, x: int, y: int) -> float:
        """Symmetric lookup of w(x, y); zero beyond the jump range."""
        if x == y:
            return 0.0
        lo, d = min(x, y), abs(x - y)
        if d > self.r_max:
            return 0.0
        return self.weight(lo, d)

    def mass(self, x: int) -> float:
        """Total conductance C_x = sum_y w(x, y)."""
        return float(self.masses(x, x)[0])

    def masses(self, lo: int, hi: int) -> np.ndarray:
        """C_x for every site in [lo, hi]; needs the r_max-neighbourhood stored."""
        R = self.r_max
        if lo - R < self.x_min or hi > self.x_max:
            raise WindowError(
                f"masses for [{lo}, {hi}] need stored rows [{lo - R}, {hi}]"
            )
        idx = np.arange(lo, hi + 1) - self.x_min
        right = self.rows[idx].sum(axis=1)
        left = np.zeros_like(right)
        for d in range(1, R + 1):
            left += self.rows[idx - d, d - 1]
        return right + left

    def weight_matrix(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """(offsets, W) with W[i, j] = w(site_i, site_i + offsets[j]).

        offsets run over [-R..-1, 1..R]; sites over [lo, hi].
        """
        R = self.r_max
        if lo - R < self.x_min or hi > self.x_max:
            raise WindowError(
                f"weight matrix for [{lo}, {hi}] needs stored rows [{lo - R}, {hi}]"
            )
        offsets = np.concatenate([np.arange(-R, 0), np.arange(1, R + 1)])
        idx = np.arange(lo, hi + 1) - self.x_min
        W = np.empty((idx.size, 2 * R))
        for j, d in enumerate(range(R, 0, -1)):  # offsets -R..-1
            W[:, j] = self.rows[idx - d, d - 1]
        W[:, R:] = self.rows[idx]
        return offsets, W

    def transition_row(self, x: int) -> TransitionRow:
        """Jump probabilities w(x,y)/C_x over the positive-conductance targets."""
        if not self.interior_min <= x <= self.interior_max:
            raise WindowError(
                f"site {x} outside interior [{self.interior_min}, {self.interior_max}]"
            )
        offsets, W = self.weight_matrix(x, x)
        c = float(W.sum())
        targets = [
            (int(x + o), float(w / c)) for o, w in zip(offsets, W[0]) if w > 0.0
        ]
        return TransitionRow(x=x, targets=targets, total_conductance=c)

    # -- operations --------------------------------------------------------

    def shift(self, z: int) -> "Environment":
        """Environment reading weight (x, d) as this one's (x + z, d).

        The window is relabelled to [x_min - z, x_max - z]; the stored
        table is shared, so shift(a) then shift(-a) returns to the
        original labelling exactly.
        """
        p = self.params
        shifted = EnvironmentParams(
            kappa=p.kappa,
            k_bound=p.k_bound,
            beta=p.beta,
            r_max=p.r_max,
            x_min=p.x_min - z,
            x_max=p.x_max - z,
            generator_kind=p.generator_kind,
            seed=p.seed,
        )
        return Environment(params=shifted, rows=self.rows)

    @property
    def env_id(self) -> str:
        header = json.dumps(self.params.header_dict(), sort_keys=True)
        return hashlib.sha1(header.encode()).hexdigest()[:12]

    # -- persistence -------------------------------------------------------

    def write_json(self, path: str | Path) -> None:
        doc = self.params.header_dict()
        doc["rows"] = self.rows.tolist()
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def read_json(cls, path: str | Path) -> "Environment":
        doc = json.loads(Path(path).read_text())
        version = doc.pop("format_version", None)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported environment format version {version}")
        rows = np.asarray(doc.pop("rows"), dtype=float)
        params = EnvironmentParams(**doc)
        return cls.from_rows(params, rows)


def generate(params: EnvironmentParams) -> Environment:
    return Environment.generate(params)


def validate(env: Environment) -> ValidationReport:
    """Report ellipticity-floor and tail-cap violations plus the C_x band."""
    p = env.params
    violations: list[tuple[int, int, str]] = []

    bad_e = np.nonzero(env.rows[:, 0] < p.kappa)[0]
    violations.extend((int(i + p.x_min), 1, "E") for i in bad_e)

    caps = np.asarray(p.tail_cap(np.arange(1, p.r_max + 1)), dtype=float)
    bad_x, bad_d = np.nonzero(env.rows > caps[None, :])
    violations.extend(
        (int(x + p.x_min), int(d + 1), "K") for x, d in zip(bad_x, bad_d)
    )
    violations.sort()

    khat = p.kappa_hat()
    c = env.masses(env.interior_min, env.interior_max)
    c_min, c_max = float(c.min()), float(c.max())
    c_ok = (c_min >= khat - 1e-12) and (c_max <= 1.0 / khat + 1e-12)

    return ValidationReport(
        passed=not violations and c_ok,
        violations=violations,
        kappa_hat=khat,
        c_min=c_min,
        c_max=c_max,
        c_bounds_ok=c_ok,
    )


def srw_params(x_min: int, x_max: int, seed: int = 0) -> EnvironmentParams:
    """Convenience parameter set for the fair nearest-neighbour walk."""
    return EnvironmentParams(
        kappa=1.0,
        k_bound=2.0,
        beta=1.0,
        r_max=1,
        x_min=x_min,
        x_max=x_max,
        generator_kind=GeneratorKind.DETERMINISTIC_SRW,
        seed=seed,
    )
