"""Optimal transport on the line and the sharp Brunn-Minkowski verifier.

A Measure1D carries the piecewise-linear CDF through the grid nodes, so its
quantile function is piecewise linear in v and W2 can be integrated exactly
on the merged breakpoints of two quantile functions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from models.coeffs import tau
from models.density import GridDensity, normalize
from utils.config import config
from utils.errors import DomainError

logger = logging.getLogger(__name__)

# masses and reference densities below this count as zero
MASS_FLOOR = 1e-12
DENSITY_FLOOR = 1e-14
GRID_RTOL = 1e-12


@dataclass(frozen=True)
class Measure1D:
    grid: GridDensity
    cdf: np.ndarray

    def __post_init__(self):
        cdf = np.asarray(self.cdf, dtype=float)
        if cdf.shape != self.grid.values.shape:
            raise DomainError("cdf must be sampled on the grid nodes")
        if np.any(np.diff(cdf) < 0.0):
            raise DomainError("cdf must be nondecreasing")
        if abs(cdf[0]) > 1e-12 or abs(cdf[-1] - 1.0) > 1e-12:
            raise DomainError(f"cdf must run from 0 to 1, got [{cdf[0]}, {cdf[-1]}]")
        cdf.setflags(write=False)
        object.__setattr__(self, 'cdf', cdf)

    @classmethod
    def from_density(cls, h: GridDensity) -> 'Measure1D':
        grid = normalize(h)
        cdf = grid.cumulative()
        cdf /= cdf[-1]
        return cls(grid, cdf)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def second_moment(self) -> float:
        return float(np.dot(self.grid.node_weights, self.nodes ** 2))


def uniform_measure(a: float, b: float, grid_nodes: int = config.GRID_NODES) -> Measure1D:
    if not b > a:
        raise DomainError(f"empty interval [{a}, {b}]")
    return Measure1D.from_density(GridDensity(a, (b - a) / (grid_nodes - 1), np.ones(grid_nodes)))


def cdf_at(mu: Measure1D, t):
    value = np.interp(t, mu.nodes, mu.cdf, left=0.0, right=1.0)
    return float(value) if np.ndim(t) == 0 else value


def quantile(mu: Measure1D, v):
    """Left-continuous inverse inf{t : F(t) >= v} of the piecewise-linear CDF"""
    vv = np.asarray(v, dtype=float)
    if np.any((vv < 0.0) | (vv > 1.0)) or np.any(np.isnan(vv)):
        raise DomainError("quantile levels must lie in [0, 1]")
    cdf, nodes = mu.cdf, mu.nodes
    j = np.searchsorted(cdf, vv, side='left')
    j = np.clip(j, 0, cdf.size - 1)
    prev = np.clip(j - 1, 0, cdf.size - 1)
    rise = cdf[j] - cdf[prev]
    with np.errstate(divide='ignore', invalid='ignore'):
        frac = np.where(rise > 0.0, (vv - cdf[prev]) / rise, 1.0)
    out = np.where(j == 0, nodes[0], nodes[prev] + np.clip(frac, 0.0, 1.0) * (nodes[j] - nodes[prev]))
    return float(out) if np.ndim(v) == 0 else out


def monotone_map(mu0: Measure1D, mu1: Measure1D) -> np.ndarray:
    """T = quantile_1 o cdf_0 sampled on mu0's nodes"""
    return np.maximum.accumulate(quantile(mu1, cdf_at(mu0, mu0.nodes)))


def w2(mu0: Measure1D, mu1: Measure1D) -> float:
    breaks = np.union1d(mu0.cdf, mu1.cdf)
    breaks = breaks[(breaks >= 0.0) & (breaks <= 1.0)]
    lo, hi = breaks[:-1], breaks[1:]
    width = hi - lo
    keep = width > 0.0
    lo, width = lo[keep], width[keep]
    # quantile differences are linear on each segment; recover the one-sided
    # endpoint values from two interior samples
    d1 = quantile(mu0, lo + 0.25 * width) - quantile(mu1, lo + 0.25 * width)
    d3 = quantile(mu0, lo + 0.75 * width) - quantile(mu1, lo + 0.75 * width)
    left = 1.5 * d1 - 0.5 * d3
    right = 1.5 * d3 - 0.5 * d1
    total = np.sum(width * (left * left + left * right + right * right)) / 3.0
    return math.sqrt(max(float(total), 0.0))


def _same_grid(a: Measure1D, b: Measure1D):
    ga, gb = a.grid, b.grid
    if ga.size != gb.size or abs(ga.origin - gb.origin) > GRID_RTOL * (1.0 + abs(ga.origin)) \
            or abs(ga.step - gb.step) > GRID_RTOL * ga.step:
        raise DomainError("measures live on different grids")


def entropy_relative(mu: Measure1D, ref: Measure1D) -> float:
    """int rho log rho d(ref) with rho = d(mu)/d(ref) at the nodes"""
    _same_grid(mu, ref)
    m, r = mu.grid.values, ref.grid.values
    if np.any((r < DENSITY_FLOOR) & (m > DENSITY_FLOOR)):
        return math.inf
    w = mu.grid.trapezoid_weights
    pos = m > DENSITY_FLOOR
    return float(np.sum(w[pos] * m[pos] * np.log(m[pos] / r[pos])))


def entropy_n(mu: Measure1D, ref: Measure1D, N: float) -> float:
    """S_N(mu|ref) = -int rho^(1 - 1/N) d(ref) over {rho > 0}"""
    if N < 1.0:
        raise DomainError(f"entropy_n needs N >= 1, got {N}")
    _same_grid(mu, ref)
    m, r = mu.grid.values, ref.grid.values
    w = ref.grid.trapezoid_weights
    pos = (m > DENSITY_FLOOR) & (r > DENSITY_FLOOR)
    rho = m[pos] / r[pos]
    return -float(np.sum(w[pos] * r[pos] * rho ** (1.0 - 1.0 / N)))


@dataclass(frozen=True)
class IntervalSet:
    """Sorted union of disjoint closed intervals"""

    intervals: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> 'IntervalSet':
        items = sorted((float(a), float(b)) for a, b in pairs)
        merged: List[List[float]] = []
        for a, b in items:
            if not (math.isfinite(a) and math.isfinite(b)) or b < a:
                raise DomainError(f"invalid interval [{a}, {b}]")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @classmethod
    def parse(cls, text: str) -> 'IntervalSet':
        """Parse `a1:b1,a2:b2,...`"""
        pairs = []
        for chunk in filter(None, (c.strip() for c in text.split(','))):
            parts = chunk.split(':')
            if len(parts) != 2:
                raise DomainError(f"interval {chunk!r} is not of the form a:b")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise DomainError(f"interval {chunk!r} has non-numeric endpoints")
        return cls.from_pairs(pairs)

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __str__(self) -> str:
        return ','.join(f"{a!r}:{b!r}" for a, b in self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    @property
    def hull(self) -> Tuple[float, float]:
        return self.intervals[0][0], self.intervals[-1][1]

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.intervals)

    def clip(self, lo: float, hi: float) -> 'IntervalSet':
        return IntervalSet.from_pairs((max(a, lo), min(b, hi)) for a, b in self.intervals
                                      if min(b, hi) >= max(a, lo))


def intermediate_set(A0: IntervalSet, A1: IntervalSet, t: float) -> IntervalSet:
    """{(1-t)x + ty : x in A0, y in A1}"""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    return IntervalSet.from_pairs(((1.0 - t) * a0 + t * a1, (1.0 - t) * b0 + t * b1)
                                  for a0, b0 in A0 for a1, b1 in A1)


def theta_extremal(A0: IntervalSet, A1: IntervalSet, K: float) -> float:
    """inf |x - y| over A0 x A1 when K >= 0, sup |x - y| when K < 0"""
    if A0.is_empty or A1.is_empty:
        raise DomainError("theta is undefined for an empty set")
    if K >= 0.0:
        return min(max(0.0, a1 - b0, a0 - b1) for a0, b0 in A0 for a1, b1 in A1)
    return max(max(abs(b1 - a0), abs(b0 - a1)) for a0, b0 in A0 for a1, b1 in A1)


class BmReport(BaseModel):
    lhs: float
    rhs: float
    theta: float
    slack: float
    holds: bool
    tolerance: float
    a_t: str
    mass0: float
    mass1: float
    mass_t: float


def tau_term(coeff: float, mass: float, N: float) -> float:
    if mass <= 0.0:
        return 0.0
    return coeff * mass ** (1.0 / N)


def verify_bm(h: GridDensity, K: float, N: float, A0: IntervalSet, A1: IntervalSet,
              t: float, tol: float = config.TOL) -> BmReport:
    """m(A_t)^(1/N) >= tau^(1-t)(theta) m(A0)^(1/N) + tau^(t)(theta) m(A1)^(1/N)"""
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    hn = normalize(h)
    m0, m1 = hn.mass_on(A0), hn.mass_on(A1)
    if m0 < MASS_FLOOR or m1 < MASS_FLOOR:
        raise DomainError(f"input sets need positive mass, got m(A0)={m0}, m(A1)={m1}")
    theta = theta_extremal(A0, A1, K)
    a_t = intermediate_set(A0, A1, t)
    mt = hn.mass_on(a_t)
    lhs = mt ** (1.0 / N)
    rhs = tau_term(tau(K, N, 1.0 - t, theta), m0, N) + tau_term(tau(K, N, t, theta), m1, N)
    slack = lhs - rhs if math.isfinite(rhs) else -math.inf
    if slack < -tol:
        logger.debug(f"Brunn-Minkowski slack {slack:.3e} for A0={A0}, A1={A1}, t={t}")
    return BmReport(lhs=lhs, rhs=rhs, theta=theta, slack=slack, holds=slack >= -tol,
                    tolerance=tol, a_t=str(a_t), mass0=m0, mass1=m1, mass_t=mt)


class DisplacementReport(BaseModel):
    t: float
    lhs: float
    rhs: float
    slack: float
    worst_pointwise_slack: float
    holds: bool
    tolerance: float
    samples: int


def restricted_quantile(h: GridDensity, A: IntervalSet, v: np.ndarray) -> Tuple[np.ndarray, float]:
    """Quantiles of h restricted to A and normalized, with the mass m(A)"""
    pieces = [(a, b, float(h.integral_to(a)), float(h.integral_to(b) - h.integral_to(a))) for a, b in A]
    total = sum(p[3] for p in pieces)
    if total < MASS_FLOOR:
        raise DomainError(f"set {A} has zero mass")
    target = np.asarray(v, dtype=float) * total
    out = np.empty_like(target)
    done = 0.0
    for k, (a, b, base, mass) in enumerate(pieces):
        last = k == len(pieces) - 1
        sel = (target >= done) & ((target <= done + mass) if not last else np.ones_like(target, dtype=bool))
        out[sel] = np.clip(h.inverse_integral(base + np.clip(target[sel] - done, 0.0, mass)), a, b)
        done += mass
    return out, total


def displacement_check(h: GridDensity, K: float, N: float, A0: IntervalSet, A1: IntervalSet,
                       t: float, tol: float = config.TOL, oversample: int = 4) -> DisplacementReport:
    """Jacobian splitting along mu_t = ((1-t)Id + tT)#mu_0 between restrictions of h.

    With q_i the quantile functions of h|A_i, q_i' h(q_i) = m(A_i) and
    -S_N(mu_t|h) = int (q_t' h(q_t))^(1/N) dv, compared with the
    tau-combination of m(A_0)^(1/N) and m(A_1)^(1/N) at theta_v = |q_1 - q_0|.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    hn = normalize(h)
    count = oversample * hn.size
    v = (np.arange(count) + 0.5) / count
    q0, m0 = restricted_quantile(hn, A0, v)
    q1, m1 = restricted_quantile(hn, A1, v)
    h0, h1 = hn.value_at(q0), hn.value_at(q1)
    usable = (h0 > DENSITY_FLOOR) & (h1 > DENSITY_FLOOR)
    q0, q1, h0, h1 = q0[usable], q1[usable], h0[usable], h1[usable]
    qt = (1.0 - t) * q0 + t * q1
    slope_t = (1.0 - t) * m0 / h0 + t * m1 / h1
    lhs_v = (slope_t * hn.value_at(qt)) ** (1.0 / N)
    theta = np.abs(q1 - q0)
    rhs_v = np.array([tau_term(tau(K, N, 1.0 - t, th), m0, N) + tau_term(tau(K, N, t, th), m1, N)
                      for th in theta])
    lhs, rhs = float(lhs_v.sum() / count), float(rhs_v.sum() / count)
    slack = lhs - rhs if math.isfinite(rhs) else -math.inf
    worst = float(np.min(lhs_v - rhs_v)) if lhs_v.size else 0.0
    return DisplacementReport(t=t, lhs=lhs, rhs=rhs, slack=slack, worst_pointwise_slack=worst,
                              holds=slack >= -tol, tolerance=tol, samples=int(usable.sum()))


def random_interval_set(lo: float, hi: float, rng: np.random.Generator, max_pieces: int = 3,
                        min_length: Optional[float] = None) -> IntervalSet:
    """Seeded union of 1..max_pieces random sub-intervals of [lo, hi]"""
    span = hi - lo
    min_length = span * 1e-3 if min_length is None else min_length
    pairs = []
    for _ in range(int(rng.integers(1, max_pieces + 1))):
        a = rng.uniform(lo, hi - min_length)
        b = min(hi, a + max(min_length, rng.uniform(0.0, 0.5) * span))
        pairs.append((a, b))
    return IntervalSet.from_pairs(pairs)


def random_measure(h: GridDensity, rng: np.random.Generator, modes: int = 4, scale: float = 1.0) -> Measure1D:
    """Seeded probability measure absolutely continuous w.r.t. h, on h's grid"""
    x = np.linspace(0.0, 1.0, h.size)
    coefficients = rng.normal(scale=scale, size=modes) / np.arange(1, modes + 1)
    log_ratio = np.cos(np.pi * np.outer(x, np.arange(1, modes + 1))) @ coefficients
    return Measure1D.from_density(h.with_values(h.values * np.exp(log_ratio - log_ratio.max())))
