"""One-dimensional CD(K,N) densities on uniform grids.

A density is sampled at nodes origin + i * step and is treated as its
piecewise-linear interpolant: masses, cumulative integrals and their
inverses are exact for that interpolant.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy import integrate

from models.coeffs import CdParams, c_delta, sigma
from utils.config import config
from utils.errors import DensityFormatError, DomainError

logger = logging.getLogger(__name__)

# g = h^(1/(N-1)) below this counts as zero
ZERO_ROOT = 1e-14
# N - 1 below this is treated as N = 1
NEAR_ONE = 1e-6
MIN_NODES = 4
UNIFORM_RTOL = 1e-9

MODEL_KINDS = ('sin', 'sinh', 'cosh', 'exp', 'power', 'constant')


@dataclass(frozen=True)
class GridDensity:
    origin: float
    step: float
    values: np.ndarray
    # window on which a mollified density inherits the CD condition
    core: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < MIN_NODES:
            raise DomainError(f"a grid density needs at least {MIN_NODES} nodes")
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise DomainError(f"grid step must be positive, got {self.step}")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise DomainError("density values must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'origin', float(self.origin))
        object.__setattr__(self, 'step', float(self.step))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.size)

    @property
    def length(self) -> float:
        return (self.size - 1) * self.step

    @property
    def end(self) -> float:
        return self.origin + self.length

    @property
    def mass(self) -> float:
        return float(integrate.trapezoid(self.values, dx=self.step))

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.size, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    @property
    def node_weights(self) -> np.ndarray:
        """Quadrature weights of int f h: trapezoid weight times h"""
        return self.trapezoid_weights * self.values

    @property
    def cell_weights(self) -> np.ndarray:
        """Mass of h on each cell, paired with cell-constant derivatives"""
        return 0.5 * self.step * (self.values[:-1] + self.values[1:])

    def positive_range(self) -> Tuple[int, int]:
        idx = np.flatnonzero(self.values > 0.0)
        if idx.size == 0:
            raise DomainError("density has no positive values")
        return int(idx[0]), int(idx[-1])

    def cumulative(self) -> np.ndarray:
        c = np.zeros(self.size)
        c[1:] = np.cumsum(self.cell_weights)
        return c

    def value_at(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)

    def integral_to(self, x) -> np.ndarray:
        """Exact integral of the interpolant from origin to x"""
        x = np.clip(np.asarray(x, dtype=float), self.origin, self.end)
        c = self.cumulative()
        i = np.clip(((x - self.origin) / self.step).astype(int), 0, self.size - 2)
        u = x - (self.origin + i * self.step)
        return c[i] + 0.5 * u * (self.values[i] + self.value_at(x))

    def inverse_integral(self, m) -> np.ndarray:
        """Smallest x with integral_to(x) = m, m in [0, mass]"""
        m = np.asarray(m, dtype=float)
        c = self.cumulative()
        i = np.clip(np.searchsorted(c, m, side='left') - 1, 0, self.size - 2)
        r = np.clip(m - c[i], 0.0, None)
        h0 = self.values[i]
        slope = (self.values[i + 1] - h0) / self.step
        disc = np.sqrt(np.clip(h0 * h0 + 2.0 * slope * r, 0.0, None))
        denom = h0 + disc
        with np.errstate(divide='ignore', invalid='ignore'):
            u = np.where(denom > 0.0, 2.0 * r / denom, 0.0)
        return np.clip(self.origin + i * self.step + np.clip(u, 0.0, self.step), self.origin, self.end)

    def mass_on(self, intervals: Iterable[Tuple[float, float]]) -> float:
        total = 0.0
        for a, b in intervals:
            total += float(self.integral_to(b) - self.integral_to(a))
        return total

    def with_values(self, values: np.ndarray) -> 'GridDensity':
        return GridDensity(self.origin, self.step, values, self.core)


class CdValidationReport(BaseModel):
    valid: bool
    worst_violation: float
    witness: Optional[Tuple[float, float, float]] = None
    checks_run: int
    tolerance: float


def normalize(h: GridDensity) -> GridDensity:
    mass = h.mass
    if not mass > 0.0:
        raise DomainError("cannot normalize a density with zero mass")
    return h.with_values(h.values / mass)


def weighted_integral(h: GridDensity, f: np.ndarray) -> float:
    """int f h dt (trapezoid)"""
    return float(np.dot(h.node_weights, f))


def gradient_energy(h: GridDensity, f: np.ndarray, q: float) -> float:
    """int |f'|^q h dt with cell-constant derivatives"""
    slope = np.diff(f) / h.step
    return float(np.dot(h.cell_weights, np.abs(slope) ** q))


def _check_window(h: GridDensity) -> Tuple[int, int]:
    lo, hi = h.positive_range()
    if h.core is not None:
        a, b = h.core
        lo = max(lo, int(math.ceil((a - h.origin) / h.step - 1e-9)))
        hi = min(hi, int(math.floor((b - h.origin) / h.step + 1e-9)))
    return lo, hi


def _validate_constant(h: GridDensity, lo: int, hi: int, tol: float) -> CdValidationReport:
    v = h.values[lo:hi + 1]
    top = v.max()
    spread = float((top - v.min()) / top)
    witness = None
    if spread > tol:
        i, j = lo + int(np.argmin(v)), lo + int(np.argmax(v))
        witness = (float(h.origin + min(i, j) * h.step), float(h.origin + max(i, j) * h.step), 0.5)
    return CdValidationReport(valid=spread <= tol, worst_violation=spread, witness=witness,
                              checks_run=int(v.size), tolerance=tol)


def validate_cd(h: GridDensity, K: float, N: float, tol: float = config.TOL) -> CdValidationReport:
    """Check the (K,N)-concavity of h^(1/(N-1)) on sampled triples and a three-point stencil"""
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if N < 1.0:
        raise DomainError(f"N must be >= 1, got {N}")
    lo, hi = _check_window(h)
    if N - 1.0 < NEAR_ONE:
        return _validate_constant(h, lo, hi, tol)

    g_all = h.values[lo:hi + 1] ** (1.0 / (N - 1.0))
    g = g_all / g_all.max()
    n = g.size
    step = h.step
    t0 = h.origin + lo * step
    worst, witness, checks = -math.inf, None, 0

    def record(viol: np.ndarray, i0: np.ndarray, i1: np.ndarray, s: float):
        nonlocal worst, witness
        if viol.size == 0:
            return
        k = int(np.argmax(viol))
        if viol[k] > worst:
            worst = float(viol[k])
            witness = (float(t0 + i0[k] * step), float(t0 + i1[k] * step), s)

    inner_zero = np.flatnonzero(g[1:-1] <= ZERO_ROOT) + 1
    if inner_zero.size:
        worst = 1.0
        witness = (float(t0 + (inner_zero[0] - 1) * step), float(t0 + (inner_zero[0] + 1) * step), 0.5)

    gap = 2
    while gap <= n - 1:
        theta = gap * step
        i0 = np.arange(0, n - gap)
        i1 = i0 + gap
        for s in ((0.5,) if gap == 2 else (0.25, 0.5, 0.75)):
            coeff0 = sigma(K, N - 1.0, 1.0 - s, theta)
            coeff1 = sigma(K, N - 1.0, s, theta)
            with np.errstate(invalid='ignore'):
                left = np.where(g[i0] <= ZERO_ROOT, 0.0, coeff0 * g[i0])
                right = np.where(g[i1] <= ZERO_ROOT, 0.0, coeff1 * g[i1])
            viol = left + right - g[i0 + int(round(s * gap))]
            record(viol, i0, i1, s)
            checks += viol.size
        gap *= 2

    if n >= 3:
        delta = K / (N - 1.0)
        c = float(c_delta(delta, step))
        resid = (g[:-2] + g[2:] - 2.0 * c * g[1:-1]) / step ** 2
        # floating point floor of the second difference
        floor = 16.0 * np.finfo(float).eps / step ** 2
        viol = (resid - floor) / (1.0 + abs(delta))
        idx = np.arange(n - 2)
        record(viol, idx, idx + 2, 0.5)
        checks += viol.size

    valid = worst <= tol
    if not valid:
        logger.debug(f"CD({K},{N}) violation {worst:.3e} at {witness}")
    return CdValidationReport(valid=valid, worst_violation=worst, witness=witness,
                              checks_run=checks, tolerance=tol)


def mollifier(x: np.ndarray) -> np.ndarray:
    """Unnormalized bump exp(-1/(x(1-x))) on (0, 1)"""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


def mollify(h: GridDensity, N: float, eps: float) -> GridDensity:
    """[(h^(1/(N-1))) * psi_eps]^(N-1) with h extended by zero"""
    if not eps > 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not N - 1.0 >= NEAR_ONE:
        raise DomainError(f"mollify needs N > 1, got {N}")
    m = int(math.ceil(eps / h.step - 1e-9))
    if m < 4:
        logger.warning(f"mollifier width {eps} spans only {m} cells of size {h.step}")
    kernel = mollifier(np.arange(m + 1) * h.step / eps)
    if kernel.sum() == 0.0:
        kernel = np.zeros(m + 1)
        kernel[m // 2] = 1.0
    kernel /= kernel.sum()
    g = h.values ** (1.0 / (N - 1.0))
    smooth = np.concatenate([np.zeros(m), np.convolve(g, kernel)])
    values = np.clip(smooth, 0.0, None) ** (N - 1.0)
    core = (h.origin + m * h.step, h.end)
    if h.core is not None:
        core = (max(core[0], h.core[0] + m * h.step), min(core[1], h.core[1]))
    return GridDensity(h.origin - m * h.step, h.step, values, core)


def sup_distance(a: GridDensity, b: GridDensity, window: Optional[Tuple[float, float]] = None) -> float:
    x = np.union1d(a.nodes, b.nodes)
    if window is not None:
        x = x[(x >= window[0]) & (x <= window[1])]
    return float(np.max(np.abs(a.value_at(x) - b.value_at(x)))) if x.size else 0.0


def model_density(kind: str, cd: CdParams, shift: float = 0.0,
                  grid_nodes: int = config.GRID_NODES) -> GridDensity:
    """Sampled model profile of the given kind on [shift, shift + D]"""
    K, N, D = cd.K, cd.N, cd.D
    if kind not in MODEL_KINDS:
        raise DomainError(f"unknown model kind {kind!r}")
    if not math.isfinite(D):
        raise DomainError("model densities need a finite diameter")
    t = shift + np.linspace(0.0, D, grid_nodes)
    needs_curvature = kind in ('sin', 'sinh', 'cosh')
    if needs_curvature and N - 1.0 < NEAR_ONE:
        raise DomainError(f"{kind} profile needs N > 1")

    if kind == 'sin':
        if not K > 0.0:
            raise DomainError("sin profile needs K > 0")
        r = math.sqrt(K / (N - 1.0))
        if shift < -1e-12 or r * (shift + D) > math.pi * (1.0 + 1e-12):
            raise DomainError(f"[{shift}, {shift + D}] leaves [0, pi/sqrt(K/(N-1))]")
        values = np.clip(np.sin(r * t), 0.0, None) ** (N - 1.0)
    elif kind in ('sinh', 'cosh'):
        if not K < 0.0:
            raise DomainError(f"{kind} profile needs K < 0")
        r = math.sqrt(-K / (N - 1.0))
        if kind == 'sinh':
            if shift < -1e-12:
                raise DomainError("sinh profile needs shift >= 0")
            values = np.clip(np.sinh(r * t), 0.0, None) ** (N - 1.0)
        else:
            values = np.cosh(r * t) ** (N - 1.0)
    elif kind == 'exp':
        if not K < 0.0:
            raise DomainError("exp profile needs K < 0")
        values = np.exp(math.sqrt(-K * (N - 1.0)) * t)
    elif kind == 'power':
        if K != 0.0:
            raise DomainError("power profile needs K = 0")
        if shift < -1e-12:
            raise DomainError("power profile needs shift >= 0")
        values = np.clip(t, 0.0, None) ** (N - 1.0)
    else:
        if K > 0.0:
            raise DomainError("constant profile needs K <= 0")
        values = np.ones_like(t)
    return GridDensity(float(t[0]), D / (grid_nodes - 1), values)


def random_cd_density(K: float, N: float, length: float, rng: np.random.Generator,
                      grid_nodes: int = config.GRID_NODES) -> GridDensity:
    """Random member of F^s_{K,N,length}.

    The CD(K,N) condition g'' + delta g <= 0 on g = h^(1/(N-1)) is a convex
    cone, so positive combinations of model solutions (and, for K = 0,
    concave quadratics) stay inside it.
    """
    t = np.linspace(0.0, length, grid_nodes)
    if N - 1.0 < NEAR_ONE:
        if K > 0.0:
            raise DomainError("CD(K,1) with K > 0 has no non-degenerate densities")
        return normalize(GridDensity(0.0, length / (grid_nodes - 1), np.ones_like(t)))
    delta = K / (N - 1.0)
    atoms: List[np.ndarray] = []
    count = int(rng.integers(1, 4))
    if delta > 0.0:
        r = math.sqrt(delta)
        if length > math.pi / r:
            raise DomainError(f"length {length} exceeds the Bonnet-Myers bound {math.pi / r}")
        for _ in range(count):
            a = rng.uniform(length - math.pi / r, 0.0)
            atoms.append(np.clip(np.sin(r * (t - a)), 0.0, None))
    elif delta == 0.0:
        for _ in range(count):
            choice = int(rng.integers(0, 4))
            if choice == 0:
                atoms.append(np.ones_like(t))
            elif choice == 1:
                atoms.append(t - rng.uniform(-length, 0.0))
            elif choice == 2:
                atoms.append(rng.uniform(length, 2.0 * length) - t)
            else:
                atoms.append(t * (length - t))
    else:
        r = math.sqrt(-delta)
        for _ in range(count):
            choice = int(rng.integers(0, 4))
            if choice == 0:
                atoms.append(np.cosh(r * (t - rng.uniform(-length, 2.0 * length))))
            elif choice == 1:
                atoms.append(np.sinh(r * (t - rng.uniform(-length, 0.0))))
            elif choice == 2:
                atoms.append(np.sinh(r * (rng.uniform(length, 2.0 * length) - t)))
            else:
                atoms.append(np.exp(rng.choice([-1.0, 1.0]) * r * t))
    g = np.zeros_like(t)
    for atom in atoms:
        top = atom.max()
        if top > 0.0:
            g += rng.uniform(0.2, 1.0) * atom / top
    return normalize(GridDensity(0.0, length / (grid_nodes - 1), np.clip(g, 0.0, None) ** (N - 1.0)))


def density_suite(K: float, N: float, D: float, count: int, seed: int = config.SEED,
                  grid_nodes: int = config.GRID_NODES) -> List[GridDensity]:
    """Seeded random CD(K,N) densities with support lengths in [0.3 D, D]"""
    cd = CdParams(K, N, D)
    top = min(D, cd.bonnet_myers_bound)
    if not math.isfinite(top):
        raise DomainError("a density suite needs a finite diameter")
    rng = np.random.default_rng(seed)
    return [random_cd_density(K, N, rng.uniform(0.3, 1.0) * top, rng, grid_nodes) for _ in range(count)]


STANDARD_SUITE = (
    (0.0, 2.0, 1.0),
    (1.0, 2.0, math.pi),
    (-1.0, 3.0, 2.0),
    (0.0, 4.0, 2.0),
    (3.0, 4.0, math.pi),
)


def standard_suite(seed: int = config.SEED, per_case: int = 10,
                   grid_nodes: int = config.GRID_NODES) -> List[Tuple[CdParams, GridDensity]]:
    """The 50-density reference suite spread over five (K, N, D) cases"""
    suite = []
    for k, (K, N, D) in enumerate(STANDARD_SUITE):
        for h in density_suite(K, N, D, per_case, seed + k, grid_nodes):
            suite.append((CdParams(K, N, D), h))
    return suite


def read_density_csv(path: str) -> GridDensity:
    """Read a `t,h` CSV with a uniform, strictly increasing t column"""
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DensityFormatError(f"unreadable density file: {e}")
    columns = [str(c).strip() for c in frame.columns]
    if columns != ['t', 'h']:
        raise DensityFormatError(f"expected header 't,h', got {','.join(columns)}", line=1)
    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DensityFormatError("non-numeric or non-finite value", line=row + 2)
    t = numeric['t'].to_numpy(dtype=float)
    h = numeric['h'].to_numpy(dtype=float)
    if t.size < MIN_NODES:
        raise DensityFormatError(f"need at least {MIN_NODES} rows, got {t.size}", line=t.size + 1)
    negative = np.flatnonzero(h < 0.0)
    if negative.size:
        raise DensityFormatError("negative density value", line=int(negative[0]) + 2)
    step = (t[-1] - t[0]) / (t.size - 1)
    if not step > 0.0:
        raise DensityFormatError("t column must be strictly increasing", line=3)
    deviation = np.abs(np.diff(t) - step) / step
    off = np.flatnonzero(deviation > UNIFORM_RTOL)
    if off.size:
        raise DensityFormatError(f"non-uniform grid (relative step deviation {deviation[off[0]]:.3e})",
                                 line=int(off[0]) + 3)
    return GridDensity(float(t[0]), float(step), h)


def write_density_csv(h: GridDensity, path: str) -> None:
    frame = pd.DataFrame({'t': h.nodes, 'h': h.values})
    frame.to_csv(path, index=False, float_format='%.17g')


def grid_function_csv(path: str, size: int) -> np.ndarray:
    """Read a one-column (or `t,f`) grid function of the given length"""
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DensityFormatError(f"unreadable function file: {e}")
    values = pd.to_numeric(frame.iloc[:, -1], errors='coerce')
    if values.isna().any():
        raise DensityFormatError("non-numeric function value", line=int(np.flatnonzero(values.isna())[0]) + 2)
    if values.size != size:
        raise DensityFormatError(f"function has {values.size} rows, density has {size}")
    return values.to_numpy(dtype=float)


def node_index(h: GridDensity, x: Sequence[float]) -> np.ndarray:
    return np.clip(np.rint((np.asarray(x) - h.origin) / h.step).astype(int), 0, h.size - 1)
