"""Cheeger, log-Sobolev, Sobolev and Talagrand constants on grid densities.

Estimates of the log-Sobolev and Sobolev constants minimize witness ratios
over sampled model densities and test functions, so they are upper bounds of
the true constants; the report says so and carries the sharp value only where
it is known.
"""

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import optimize

from models.coeffs import CdParams, bonnet_myers_bound, jacobian_model, truncation_window
from models.density import (GridDensity, NEAR_ONE, gradient_energy, normalize,
                            weighted_integral)
from models.spectral import lambda_model, neumann_eigenpair
from models.transport1d import Measure1D, entropy_relative, w2
from utils.config import config
from utils.errors import DomainError

logger = logging.getLogger(__name__)

SIDE_MASS_FLOOR = 1e-12
ENTROPY_FLOOR = 1e-14
OPTIMIZER_ENTROPY_FLOOR = 1e-10
SOBOLEV_DEGENERATE = 1e-13
PERTURBATION = 1e-3
COSINE_MODES = 8
ROW_BLOCK = 256


class CheegerResult(BaseModel):
    value: float
    optimal_cut: List[Tuple[float, float]]
    side_mass: float


class RatioResult(BaseModel):
    value: float
    degenerate: bool = False


class FunctionalReport(BaseModel):
    constant_estimate: float
    reference: Optional[float] = None
    witness_function: Optional[List[float]] = None
    slack: float
    holds: bool
    upper_bound: bool = True
    degenerate: bool = False
    tolerance: float


class GapReport(BaseModel):
    logsob_upper: float
    spectral: float
    gap: float


def median_c1(f: np.ndarray, mu: Measure1D) -> Tuple[float, float]:
    """A median M of f under mu and c1 = int |f - M| dmu"""
    f = np.asarray(f, dtype=float)
    w = mu.grid.node_weights
    order = np.argsort(f, kind='stable')
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1], side='left'))
    median = float(f[order[min(k, f.size - 1)]])
    return median, float(np.dot(w, np.abs(f - median)))


def _cut_pairs(hn: GridDensity):
    """Best interval [t_i, t_j] between grid nodes, perimeter over the lighter side"""
    c = hn.cumulative()
    total = c[-1]
    v = hn.values
    n = hn.size
    left = v.copy()
    left[0] = 0.0
    right = v.copy()
    right[-1] = 0.0
    best = (math.inf, 0, 1)
    for start in range(0, n - 1, ROW_BLOCK):
        rows = np.arange(start, min(start + ROW_BLOCK, n - 1))
        mass = c[None, :] - c[rows, None]
        side = np.minimum(mass, total - mass)
        per = left[rows, None] + right[None, :]
        ok = (np.arange(n)[None, :] > rows[:, None]) & (side > SIDE_MASS_FLOOR)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(ok, per / np.where(ok, side, 1.0), np.inf)
        k = int(np.argmin(ratio))
        i, j = divmod(k, n)
        if ratio[i, j] < best[0]:
            best = (float(ratio[i, j]), int(rows[i]), int(j))
    return best


def _half_mass_cuts(hn: GridDensity):
    """Intervals of exactly half the mass with one endpoint on a node"""
    c = hn.cumulative()
    total = c[-1]
    nodes, v = hn.nodes, hn.values
    best = (math.inf, 0.0, 0.0)
    # node on the left
    idx = np.flatnonzero(c + 0.5 * total <= total)
    if idx.size:
        x = hn.inverse_integral(c[idx] + 0.5 * total)
        per = np.where(idx > 0, v[idx], 0.0) + np.where(x < hn.end, hn.value_at(x), 0.0)
        k = int(np.argmin(per))
        best = min(best, (float(per[k] / (0.5 * total)), float(nodes[idx[k]]), float(x[k])))
    # node on the right
    idx = np.flatnonzero(c - 0.5 * total >= 0.0)
    if idx.size:
        x = hn.inverse_integral(c[idx] - 0.5 * total)
        per = np.where(x > hn.origin, hn.value_at(x), 0.0) + np.where(idx < hn.size - 1, v[idx], 0.0)
        k = int(np.argmin(per))
        best = min(best, (float(per[k] / (0.5 * total)), float(x[k]), float(nodes[idx[k]])))
    return best


def _lighter_side(hn: GridDensity, a: float, b: float) -> Tuple[List[Tuple[float, float]], float]:
    mass = hn.mass_on([(a, b)]) / hn.mass
    if mass <= 0.5:
        return [(a, b)], mass
    pieces = [(lo, hi) for lo, hi in ((hn.origin, a), (b, hn.end)) if hi > lo]
    return pieces, 1.0 - mass


def _two_interval_search(hn: GridDensity) -> Tuple[float, List[Tuple[float, float]], float]:
    stride = max(1, int(math.ceil((hn.size - 1) / config.COARSE_NODES)))
    idx = np.unique(np.append(np.arange(0, hn.size, stride), hn.size - 1))
    c = hn.cumulative()[idx]
    total = c[-1]
    v = hn.values[idx]
    left = np.where(idx > 0, v, 0.0)
    right = np.where(idx < hn.size - 1, v, 0.0)
    a, b = np.triu_indices(idx.size, k=1)
    pair_mass = c[b] - c[a]
    pair_per = left[a] + right[b]
    best = (math.inf, 0, 0, 0.0)
    for r in range(a.size):
        # second interval starts strictly after the first one ends
        s = np.flatnonzero(a > b[r])
        if s.size == 0:
            continue
        mass = pair_mass[r] + pair_mass[s]
        side = np.minimum(mass, total - mass)
        ok = side > SIDE_MASS_FLOOR
        if not ok.any():
            continue
        ratio = np.where(ok, (pair_per[r] + pair_per[s]) / np.where(ok, side, 1.0), np.inf)
        k = int(np.argmin(ratio))
        if ratio[k] < best[0]:
            best = (float(ratio[k]), r, int(s[k]), float(side[k] / total))
    value, r, s, side = best
    if not math.isfinite(value):
        return math.inf, [], 0.0
    nodes = hn.nodes[idx]
    cut = [(float(nodes[a[r]]), float(nodes[b[r]])), (float(nodes[a[s]]), float(nodes[b[s]]))]
    return value, cut, side


def cheeger_density(h: GridDensity, restrict_to_intervals: bool = True) -> CheegerResult:
    """inf of perimeter / mass over sets of mass in (0, 1/2]"""
    hn = normalize(h)
    value, i, j = _cut_pairs(hn)
    a, b = float(hn.nodes[i]), float(hn.nodes[j])
    half_value, ha, hb = _half_mass_cuts(hn)
    if half_value < value:
        value, a, b = half_value, ha, hb
    cut, side = _lighter_side(hn, a, b)
    if not restrict_to_intervals:
        two_value, two_cut, two_side = _two_interval_search(hn)
        if two_value < value:
            value, cut, side = two_value, two_cut, two_side
    if not math.isfinite(value):
        raise DomainError("no admissible cut with positive mass")
    return CheegerResult(value=value, optimal_cut=cut, side_mass=side)


def _log_profile(kind: str, r: float, N: float, t: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore', invalid='ignore'):
        if kind == 'sin':
            return (N - 1.0) * np.log(np.clip(np.sin(r * t), 0.0, None))
        if kind == 'sinh':
            x = np.clip(r * t, 0.0, None)
            return (N - 1.0) * (x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0))
        if kind == 'cosh':
            x = np.abs(r * t)
            return (N - 1.0) * (x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0))
        if kind == 'exp':
            return r * t
        if kind == 'power':
            return (N - 1.0) * np.log(np.clip(t, 0.0, None))
        if kind == 'constant':
            return np.zeros_like(t)
    raise DomainError(f"unknown model kind {kind!r}")


def model_profile(kind: str, K: float, N: float, shift: float, D: float, grid_nodes: int) -> GridDensity:
    """Normalized model profile on [shift, shift + D], evaluated in log scale"""
    if kind == 'exp':
        r = math.sqrt(-K * (N - 1.0))
    elif kind in ('sin', 'sinh', 'cosh'):
        r = math.sqrt(abs(K) / (N - 1.0))
    else:
        r = 0.0
    t = shift + np.linspace(0.0, D, grid_nodes)
    logv = _log_profile(kind, r, N, t)
    top = np.max(logv)
    values = np.where(np.isfinite(logv), np.exp(logv - top), 0.0)
    return normalize(GridDensity(float(t[0]), D / (grid_nodes - 1), values))


def _shift_infimum(objective: Callable[[float], float], lo: float, hi: float) -> Tuple[float, float]:
    """Coarse scan then golden-section refinement; ties go to the smallest shift"""
    if hi <= lo:
        return objective(lo), lo
    xs = np.linspace(lo, hi, config.CHEEGER_SCAN_POINTS)
    values = np.array([objective(float(x)) for x in xs])
    k = int(np.argmin(values))
    best, arg = float(values[k]), float(xs[k])
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(objective, bounds=(float(a), float(b)), method='bounded',
                                       options=dict(xatol=1e-10 * (1.0 + abs(b))))
        if res.fun < best - 1e-15:
            best, arg = float(res.fun), float(res.x)
    return best, arg


def cheeger_model(K: float, N: float, D: float, grid_nodes: int = config.CHEEGER_MODEL_NODES) -> float:
    """Model Cheeger constant h_{K,N,D} by the case dispatch on (K, D)"""
    cd = CdParams(K, N, D)
    if N - 1.0 < NEAR_ONE:
        return 2.0 / D if K <= 0.0 and math.isfinite(D) else 0.0
    if K <= 0.0 and not math.isfinite(D):
        return 0.0

    def family(kind: str) -> Callable[[float], float]:
        return lambda xi: cheeger_density(model_profile(kind, K, N, xi, D, grid_nodes)).value

    if K > 0.0:
        bound = cd.bonnet_myers_bound
        if D >= bound * (1.0 - 1e-12):
            return cheeger_density(model_profile('sin', K, N, 0.0, bound, grid_nodes)).value
        value, xi = _shift_infimum(family('sin'), 0.0, bound - D)
        logger.debug(f"cheeger_model sin family: {value:.10g} at shift {xi:.6g}")
        return value
    if K == 0.0:
        value, _ = _shift_infimum(family('power'), 0.0, 20.0 * N * D)
        return min(value, 2.0 / D)
    r = math.sqrt(-K / (N - 1.0))
    reach = 10.0 / r + D
    sinh_value, _ = _shift_infimum(family('sinh'), 0.0, reach)
    cosh_value, _ = _shift_infimum(family('cosh'), -0.5 * D, reach)
    exp_value = family('exp')(0.0)
    return min(sinh_value, cosh_value, exp_value)


def cheeger_power_closed_form(N: float, D: float) -> float:
    """N/D inf over xi >= 0, v in (0, 1/2] of (v(xi+1)^N + (1-v)xi^N)^((N-1)/N) / (v((xi+1)^N - xi^N))"""
    if not N >= 1.0 or not D > 0.0:
        raise DomainError(f"need N >= 1 and D > 0, got N={N}, D={D}")

    def inner(xi: float) -> float:
        # the quotient decreases in v, so v = 1/2
        big, small = (xi + 1.0) ** N, xi ** N
        return (0.5 * (big + small)) ** ((N - 1.0) / N) / (0.5 * (big - small))

    grid = np.concatenate([[0.0], np.logspace(-3, 4, 200)])
    values = np.array([inner(float(x)) for x in grid])
    k = int(np.argmin(values))
    best = float(values[k])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(inner, bounds=(float(a), float(b)), method='bounded')
        best = min(best, float(res.fun))
    # xi -> inf flattens the profile
    return N / D * min(best, 2.0 / N)


def cheeger_model_jacobian(K: float, N: float, D: float, h_points: int = 9, shift_points: int = 9,
                           grid_nodes: int = 201) -> float:
    """Brute force of h_{K,N,D} over the densities J_{H,K,N} restricted to windows of length D"""
    cd = CdParams(K, N, D)
    if N - 1.0 < NEAR_ONE:
        return cheeger_model(K, N, D)
    delta = K / (N - 1.0)
    scale = math.sqrt(abs(delta)) if delta != 0.0 else 1.0 / D
    best = math.inf
    for H in np.linspace(-4.0, 4.0, h_points) * (N - 1.0) * scale:
        lo, hi = truncation_window(H / (N - 1.0), delta)
        reach = 10.0 / scale + D
        lo, hi = max(lo, -reach), min(hi, reach)
        length = min(D, hi - lo, cd.bonnet_myers_bound)
        if not length > 0.0:
            continue
        for a in np.linspace(lo, hi - length, shift_points):
            t = a + np.linspace(0.0, length, grid_nodes)
            values = np.asarray(jacobian_model(float(H), K, N, t))
            if not np.all(np.isfinite(values)) or values.max() <= 0.0:
                continue
            h = GridDensity(float(t[0]), length / (grid_nodes - 1), values / values.max())
            best = min(best, cheeger_density(h).value)
    return best


def one_quotient(h: GridDensity, u: np.ndarray) -> float:
    """int |u'| h / int |u - median| h"""
    mu = Measure1D.from_density(h)
    _, c1 = median_c1(u, mu)
    if c1 <= 0.0:
        return math.inf
    return gradient_energy(mu.grid, u, 1.0) / c1


def smoothed_indicator(h: GridDensity, cut: List[Tuple[float, float]], width: int = 2) -> np.ndarray:
    x = h.nodes
    u = np.zeros(h.size)
    ramp = width * h.step
    for a, b in cut:
        rise = np.clip((x - a) / ramp + 0.5, 0.0, 1.0) if a > h.origin else np.ones_like(x)
        fall = np.clip((b - x) / ramp + 0.5, 0.0, 1.0) if b < h.end else np.ones_like(x)
        u = np.maximum(u, np.minimum(rise, fall))
    return u


def lambda_11(h: GridDensity, sweeps: int = 5) -> float:
    """Minimal 1-Rayleigh quotient, seeded by the smoothed optimal Cheeger cut"""
    hn = normalize(h)
    cut = cheeger_density(hn).optimal_cut
    u = smoothed_indicator(hn, cut)
    best = one_quotient(hn, u)
    band = np.flatnonzero((u > 0.0) & (u < 1.0))
    band = np.unique(np.clip(np.concatenate([band - 1, band, band + 1]), 1, hn.size - 2))
    for _ in range(sweeps):
        improved = False
        for i in band:
            for candidate in (u[i - 1], u[i + 1], 0.5 * (u[i - 1] + u[i + 1])):
                old = u[i]
                if candidate == old:
                    continue
                u[i] = candidate
                value = one_quotient(hn, u)
                if value < best - 1e-15:
                    best, improved = value, True
                else:
                    u[i] = old
        if not improved:
            break
    return best


def _check_nonnegative(f: np.ndarray):
    if np.any(np.asarray(f) < 0.0):
        raise DomainError("test function must be nonnegative")


def entropy_fisher(hn: GridDensity, f: np.ndarray) -> Tuple[float, float]:
    x = f - 1.0
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(f > 0.0, f * np.log1p(x) - x, 1.0)
    ent = weighted_integral(hn, terms)
    slope = np.diff(f) / hn.step
    mid = 0.5 * (f[:-1] + f[1:])
    with np.errstate(divide='ignore', invalid='ignore'):
        fisher_cells = np.where(mid > 0.0, slope * slope / mid, 0.0)
    return ent, float(np.dot(hn.cell_weights, fisher_cells))


def logsob_ratio(h: GridDensity, f: np.ndarray) -> RatioResult:
    """Fisher information over twice the entropy of f, f renormalized to int f h = 1"""
    f = np.asarray(f, dtype=float)
    _check_nonnegative(f)
    hn = normalize(h)
    total = weighted_integral(hn, f)
    if not total > 0.0:
        raise DomainError("test function has zero integral")
    ent, fisher = entropy_fisher(hn, f / total)
    if ent <= ENTROPY_FLOOR:
        return RatioResult(value=math.inf, degenerate=True)
    return RatioResult(value=fisher / (2.0 * ent))


def _cosine_basis(size: int, modes: int = COSINE_MODES) -> np.ndarray:
    x = np.linspace(0.0, 1.0, size)
    return np.cos(np.pi * np.outer(np.arange(1, modes + 1), x))


def _model_family(K: float, N: float, D: float, grid_nodes: int) -> List[GridDensity]:
    """Model densities sampled by shift, the families behind h_{K,N,D} and the estimates"""
    if K > 0.0:
        room = max(bonnet_myers_bound(K, N) - D, 0.0)
        shifts = sorted({0.0, 0.5 * room, room})
        return [model_profile('sin', K, N, xi, min(D, bonnet_myers_bound(K, N)), grid_nodes) for xi in shifts]
    if K == 0.0:
        return [model_profile('constant', K, N, 0.0, D, grid_nodes),
                model_profile('power', K, N, 0.0, D, grid_nodes),
                model_profile('power', K, N, D, D, grid_nodes)]
    return [model_profile('cosh', K, N, -0.5 * D, D, grid_nodes),
            model_profile('sinh', K, N, 0.0, D, grid_nodes),
            model_profile('exp', K, N, 0.0, D, grid_nodes)]


def logsob_reference(K: float, N: float, D: float) -> Optional[float]:
    if K > 0.0 and N > 1.0 and abs(D - bonnet_myers_bound(K, N)) <= 1e-12 * bonnet_myers_bound(K, N):
        return K * N / (N - 1.0)
    return None


def logsob_estimate(K: float, N: float, D: float, budget: int = 3, seed: int = config.SEED,
                    grid_nodes: int = config.GRID_NODES, tol: float = config.TOL) -> FunctionalReport:
    """Upper bound of the log-Sobolev constant alpha^LS_{K,N,D}"""
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if not N > 1.0:
        raise DomainError(f"logsob_estimate needs N > 1, got {N}")
    CdParams(K, N, D)
    rng = np.random.default_rng(seed)
    evaluated: List[Tuple[GridDensity, np.ndarray, float, float]] = []
    best, witness = math.inf, None

    def consider(hn: GridDensity, f: np.ndarray):
        nonlocal best, witness
        f = f / weighted_integral(hn, f)
        ent, fisher = entropy_fisher(hn, f)
        if ent <= ENTROPY_FLOOR:
            return
        evaluated.append((hn, f, ent, fisher))
        ratio = fisher / (2.0 * ent)
        if ratio < best:
            best, witness = ratio, f

    for hn in _model_family(K, N, D, grid_nodes):
        _, u = neumann_eigenpair(hn)
        for sign in (1.0, -1.0):
            consider(hn, 1.0 + sign * PERTURBATION * u)
        basis = _cosine_basis(hn.size)

        def objective(v: np.ndarray) -> float:
            g = v @ basis
            f = np.exp(g - g.max())
            f /= weighted_integral(hn, f)
            ent, fisher = entropy_fisher(hn, f)
            if ent <= OPTIMIZER_ENTROPY_FLOOR:
                return 1e6
            return fisher / (2.0 * ent)

        for _ in range(budget):
            v0 = rng.normal(scale=0.5, size=COSINE_MODES) / np.arange(1, COSINE_MODES + 1)
            res = optimize.minimize(objective, v0, method='L-BFGS-B', options=dict(maxiter=200))
            g = res.x @ basis
            consider(hn, np.exp(g - g.max()))

    slack = min((fisher - 2.0 * best * ent for _, _, ent, fisher in evaluated), default=math.inf)
    reference = logsob_reference(K, N, D)
    logger.info(f"log-Sobolev estimate for K={K}, N={N}, D={D}: {best:.8g} (reference {reference})")
    return FunctionalReport(constant_estimate=best, reference=reference,
                            witness_function=None if witness is None else witness.tolist(),
                            slack=slack, holds=slack >= -tol, degenerate=not evaluated, tolerance=tol)


def sobolev_ratio(h: GridDensity, f: np.ndarray, p: float, q: float) -> RatioResult:
    """(p - q) int |f'|^q h / ((int |f|^p h)^(q/p) - int |f|^q h)"""
    if abs(p - q) < 1e-6:
        raise DomainError(f"sobolev_ratio needs p != q, got p={p}, q={q}")
    if p < 1.0 or q < 1.0:
        raise DomainError(f"sobolev_ratio needs p, q >= 1, got p={p}, q={q}")
    f = np.asarray(f, dtype=float)
    hn = normalize(h)
    lp = weighted_integral(hn, np.abs(f) ** p)
    lq = weighted_integral(hn, np.abs(f) ** q)
    bracket = lp ** (q / p) - lq
    if abs(bracket) <= SOBOLEV_DEGENERATE * (1.0 + lq):
        return RatioResult(value=math.inf, degenerate=True)
    return RatioResult(value=(p - q) * gradient_energy(hn, f, q) / bracket)


def sobolev_estimate(K: float, N: float, D: float, p: float, q: float, budget: int = 3,
                     seed: int = config.SEED, grid_nodes: int = config.GRID_NODES,
                     tol: float = config.TOL) -> FunctionalReport:
    """Upper bound of the (p,q)-Sobolev constant alpha^{p,q}_{K,N,D}"""
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if not N > 2.0:
        raise DomainError(f"sobolev_estimate needs N > 2, got {N}")
    if abs(p - q) < 1e-6:
        raise DomainError(f"sobolev_estimate needs p != q, got p={p}, q={q}")
    CdParams(K, N, D)
    rng = np.random.default_rng(seed)
    evaluated: List[Tuple[float, float]] = []
    best, witness = math.inf, None

    def terms(hn: GridDensity, f: np.ndarray) -> Tuple[float, float]:
        lp = weighted_integral(hn, np.abs(f) ** p)
        lq = weighted_integral(hn, np.abs(f) ** q)
        return (p - q) * gradient_energy(hn, f, q), lp ** (q / p) - lq

    def consider(hn: GridDensity, f: np.ndarray):
        nonlocal best, witness
        ratio = sobolev_ratio(hn, f, p, q)
        if ratio.degenerate:
            return
        evaluated.append(terms(hn, f))
        if ratio.value < best:
            best, witness = ratio.value, f

    for hn in _model_family(K, N, D, grid_nodes):
        _, u = neumann_eigenpair(hn)
        for sign in (1.0, -1.0):
            consider(hn, 1.0 + sign * PERTURBATION * u)
        basis = _cosine_basis(hn.size)

        def objective(v: np.ndarray) -> float:
            ratio = sobolev_ratio(hn, 1.0 + v @ basis, p, q)
            return 1e6 if ratio.degenerate or ratio.value < 0.0 else ratio.value

        for _ in range(budget):
            v0 = rng.normal(scale=0.3, size=COSINE_MODES) / np.arange(1, COSINE_MODES + 1)
            res = optimize.minimize(objective, v0, method='L-BFGS-B', options=dict(maxiter=200))
            consider(hn, 1.0 + res.x @ basis)

    # numerator and bracket carry the same sign, so this is >= 0 at the minimum
    slack = min((abs(num) - best * abs(bracket) for num, bracket in evaluated), default=math.inf)
    reference = None
    if q == 2.0 and 2.0 < p <= 2.0 * N / (N - 2.0):
        reference = logsob_reference(K, N, D)
    logger.info(f"({p},{q})-Sobolev estimate for K={K}, N={N}, D={D}: {best:.8g}")
    return FunctionalReport(constant_estimate=best, reference=reference,
                            witness_function=None if witness is None else np.asarray(witness).tolist(),
                            slack=slack, holds=slack >= -tol, degenerate=not evaluated, tolerance=tol)


def talagrand_check(h: GridDensity, mu: Measure1D, alpha: float, tol: float = config.TOL) -> FunctionalReport:
    """W2(mu, h)^2 <= (2 / alpha) Ent(mu | h)"""
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    ref = Measure1D.from_density(h)
    ent = entropy_relative(mu, ref)
    distance2 = w2(mu, ref) ** 2
    slack = 2.0 / alpha * ent - distance2
    return FunctionalReport(constant_estimate=alpha, slack=slack, holds=slack >= -tol,
                            upper_bound=False, tolerance=tol)


def spectral_logsob_gap(K: float, N: float, D: float, budget: int = 3, seed: int = config.SEED,
                        grid_nodes: int = config.GRID_NODES) -> GapReport:
    """Numeric gap between the log-Sobolev upper bound and lambda^{1,2}_{K,N,D}"""
    upper = logsob_estimate(K, N, D, budget, seed, grid_nodes).constant_estimate
    spectral = lambda_model(2.0, K, N, min(D, bonnet_myers_bound(K, N))).lambda_
    return GapReport(logsob_upper=upper, spectral=spectral, gap=upper - spectral)
