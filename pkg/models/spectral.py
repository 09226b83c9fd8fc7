"""First nontrivial eigenvalue of the p-Laplacian on CD(K,N) model spaces.

The model value is found by shooting the Pruefer angle of the symmetric
extremal profile on [-D/2, D/2]; the Rayleigh quotient minimizers act as an
independent oracle on arbitrary grid densities.
"""

import logging
import math
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg, optimize

from models.coeffs import CdParams, bonnet_myers_bound, model_log_derivative
from models.density import GridDensity, NEAR_ONE
from models.ptrig import check_p, pi_p, sin_cos_p
from utils.config import config
from utils.errors import BracketError, DomainError

logger = logging.getLogger(__name__)

# graded steps near the tangent pole: h <= GRADING * (distance to pole)
GRADING = 0.02
RICHARDSON_TOL = 1e-10
MAX_REFINEMENTS = 6
MAX_EXPANSIONS = 60
# diameters this close to the Bonnet-Myers bound take the endpoint value
CLOSED_FORM_RTOL = 1e-8


class EigenResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias='lambda')
    bracket: Tuple[float, float]
    iterations: int
    phi_end_error: float
    grid_step: float
    at_pole: bool = False
    tolerance: float
    solver: str
    converged: bool = True


def _alpha(p: float, lam: float) -> float:
    return (lam / (p - 1.0)) ** (1.0 / p)


def _phi_rhs(p: float, K: float, N: float, alpha: float, t: float, phi: float) -> float:
    s, c = sin_cos_p(p, phi)
    drift = model_log_derivative(K, N, t) / (p - 1.0)
    return alpha + drift * math.copysign(abs(c) ** (p - 1.0), c) * s


def _rk4(p: float, K: float, N: float, alpha: float, t_end: float, step: float,
         pole: float = math.inf) -> float:
    t, phi = 0.0, 0.0
    while t < t_end:
        h = min(step, t_end - t, GRADING * (pole - t))
        k1 = _phi_rhs(p, K, N, alpha, t, phi)
        k2 = _phi_rhs(p, K, N, alpha, t + 0.5 * h, phi + 0.5 * h * k1)
        k3 = _phi_rhs(p, K, N, alpha, t + 0.5 * h, phi + 0.5 * h * k2)
        k4 = _phi_rhs(p, K, N, alpha, t + h, phi + h * k3)
        phi += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        t += h
    return phi


def _pole_window(K: float, N: float, D: float) -> Tuple[float, float, bool]:
    """(pole location, cutoff distance, whether D/2 lies inside the cutoff)"""
    if K <= 0.0 or N - 1.0 < NEAR_ONE:
        return math.inf, 0.0, False
    pole = 0.5 * bonnet_myers_bound(K, N)
    cutoff = config.POLE_CUTOFF * pole
    return pole, cutoff, pole - 0.5 * D < cutoff


def shoot_phi(p: float, K: float, N: float, D: float, lam: float,
              step: Optional[float] = None) -> float:
    """phi(D/2) for phi' = alpha + (h'/h)/(p-1) cos_p^(p-1)(phi) sin_p(phi), phi(0) = 0.

    h is the symmetric extremal profile, so h'/h = -(N-1) tan_{K,N} for K > 0
    and +(N-1) tan_{K,N} for K < 0. When D/2 falls within the pole cutoff the
    angle is integrated up to the cutoff and continued with the local
    solution psi(s) = -alpha s / N + C s^(1-N) of the linearized equation,
    s being the distance to the pole.
    """
    p = check_p(p)
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not D > 0.0 or not math.isfinite(D):
        raise DomainError(f"D must be positive and finite, got {D}")
    if N < 1.0:
        raise DomainError(f"N must be >= 1, got {N}")
    alpha = _alpha(p, lam)
    half = 0.5 * D
    if K == 0.0 or N - 1.0 < NEAR_ONE:
        return alpha * half
    if K > 0.0 and D > bonnet_myers_bound(K, N) * (1.0 + 1e-12):
        raise DomainError(f"D={D} exceeds the Bonnet-Myers bound {bonnet_myers_bound(K, N)}")
    step = half / config.SHOOT_STEPS if step is None else step
    pole, cutoff, near_pole = _pole_window(K, N, D)
    if not near_pole:
        return _rk4(p, K, N, alpha, half, step, pole)
    phi_c = _rk4(p, K, N, alpha, pole - cutoff, step, pole)
    gap = max(pole - half, 0.0)
    psi = phi_c - 0.5 * pi_p(p)
    return 0.5 * pi_p(p) + psi + alpha / N * (cutoff - gap * (gap / cutoff) ** (N - 1.0))


def lambda_closed_form(p: float, K: float, N: float, D: float) -> Optional[float]:
    """(p-1)(pi_p/D)^p for K = 0, KN/(N-1) for p = 2 and K > 0 at the Bonnet-Myers diameter, else None.

    The endpoint match is relative to D with CLOSED_FORM_RTOL = 1e-8, not
    1e-12: diameters typed with eight or nine digits of pi still take the
    endpoint value.
    """
    p = check_p(p)
    if K == 0.0:
        return (p - 1.0) * (pi_p(p) / D) ** p
    if p == 2.0 and K > 0.0 and N > 1.0 and abs(D - bonnet_myers_bound(K, N)) <= CLOSED_FORM_RTOL * D:
        return K * N / (N - 1.0)
    return None


def li_wang_bound(p: float, K: float, N: float) -> float:
    """(N K / (N-1))^(p/2) / (p-1)^(p-1), a lower bound for p >= 2 and K > 0"""
    if not p >= 2.0:
        raise DomainError(f"li_wang_bound needs p >= 2, got {p}")
    if not K > 0.0:
        raise DomainError(f"li_wang_bound needs K > 0, got {K}")
    if not N > 1.0:
        raise DomainError(f"li_wang_bound needs N > 1, got {N}")
    return (N * K / (N - 1.0)) ** (p / 2.0) / (p - 1.0) ** (p - 1.0)


def _find_bracket(residual, lo: float, hi: float) -> Tuple[float, float, float, float]:
    r_lo, r_hi = residual(lo), residual(hi)
    for _ in range(MAX_EXPANSIONS):
        if r_lo <= 0.0 <= r_hi:
            return lo, hi, r_lo, r_hi
        if r_lo > 0.0:
            hi, r_hi = lo, r_lo
            lo /= 4.0
            r_lo = residual(lo)
        else:
            lo, r_lo = hi, r_hi
            hi *= 4.0
            r_hi = residual(hi)
        logger.warning(f"expanding eigenvalue bracket to [{lo:.6g}, {hi:.6g}]")
    raise BracketError(f"no sign change of the shooting residual in [{lo:.6g}, {hi:.6g}]",
                       bracket=(lo, hi), residuals=(r_lo, r_hi))


def _shoot_solve(p: float, K: float, N: float, D: float, tol: float) -> EigenResult:
    target = 0.5 * pi_p(p)
    anchor = (p - 1.0) * (pi_p(p) / D) ** p
    top = anchor
    if K > 0.0 and p >= 2.0:
        top = max(top, li_wang_bound(p, K, N))
    _, _, near_pole = _pole_window(K, N, D)
    steps = config.SHOOT_STEPS
    lo, hi = anchor / 4.0, 4.0 * top
    converged = False
    for _ in range(MAX_REFINEMENTS + 1):
        step = 0.5 * D / steps

        def residual(lam: float) -> float:
            return shoot_phi(p, K, N, D, lam, step) - target

        lo, hi, _, _ = _find_bracket(residual, lo, hi)
        root, info = optimize.brentq(residual, lo, hi, xtol=0.25 * tol, rtol=4.0 * np.finfo(float).eps,
                                     maxiter=200, full_output=True)
        # accept once phi(D/2) agrees with the halved step
        fine = shoot_phi(p, K, N, D, root, 0.5 * step) - target
        if abs(fine - residual(root)) <= RICHARDSON_TOL:
            converged = True
            break
        width = max(1e-6 * root, tol)
        lo, hi = max(root - width, 0.5 * root), root + width
        steps *= 2
        logger.debug(f"refining shooting step to D/{2 * steps} for p={p}, K={K}, N={N}, D={D}")
    if not converged:
        logger.warning(f"phi(D/2) did not stabilize to {RICHARDSON_TOL} after {MAX_REFINEMENTS} step halvings "
                       f"for p={p}, K={K}, N={N}, D={D}; keeping step {step:.3g}")
    half_width = 0.5 * tol
    low, high = max(root - half_width, 0.0), root + half_width
    if residual(low) > 0.0 or residual(high) < 0.0:
        logger.debug(f"bracket [{low}, {high}] does not straddle the residual sign change")
    return EigenResult(lambda_=root, bracket=(low, high), iterations=info.iterations,
                       phi_end_error=abs(residual(root)), grid_step=step, at_pole=near_pole,
                       tolerance=tol, solver='shooting-rk4', converged=converged)


@lru_cache(maxsize=1024)
def _lambda_cached(p: float, K: float, N: float, D: float, tol: float, use_closed_form: bool) -> EigenResult:
    if N - 1.0 < NEAR_ONE or K == 0.0:
        value = (p - 1.0) * (pi_p(p) / D) ** p
        return EigenResult(lambda_=value, bracket=(value, value), iterations=0, phi_end_error=0.0,
                           grid_step=0.0, tolerance=tol, solver='closed-form')
    if use_closed_form:
        value = lambda_closed_form(p, K, N, D)
        if value is not None:
            return EigenResult(lambda_=value, bracket=(value, value), iterations=0, phi_end_error=0.0,
                               grid_step=0.0, at_pole=True, tolerance=tol, solver='closed-form')
    result = _shoot_solve(p, K, N, D, tol)
    logger.info(f"lambda(p={p}, K={K}, N={N}, D={D}) = {result.lambda_:.12g}")
    return result


def lambda_model(p: float, K: float, N: float, D: float, tol: float = config.TOL,
                 use_closed_form: bool = True) -> EigenResult:
    """lambda^{1,p}_{K,N,D} from the model ODE"""
    p = check_p(p)
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    cd = CdParams(K, N, D)
    if not math.isfinite(D):
        raise DomainError("lambda_model needs a finite diameter")
    if K > 0.0 and D > cd.bonnet_myers_bound * (1.0 + 1e-12):
        raise DomainError(f"D={D} exceeds the Bonnet-Myers bound {cd.bonnet_myers_bound}")
    return _lambda_cached(p, float(K), float(N), float(D), float(tol), bool(use_closed_form))


def rigidity_gap(p: float, N: float, eps: float, delta_grid: Sequence[float],
                 tol: float = config.TOL) -> float:
    """min over delta and D in [D_min, pi - eps] of lambda(N-1-delta, N+delta, D) - lambda(N-1, N, pi)"""
    p = check_p(p)
    if not 0.0 < eps < math.pi:
        raise DomainError(f"eps must lie in (0, pi), got {eps}")
    if not N > 1.0:
        raise DomainError(f"rigidity_gap needs N > 1, got {N}")
    reference = lambda_model(p, N - 1.0, N, math.pi, tol).lambda_
    # below D_min the K = 0 value alone is twice the reference
    d_min = pi_p(p) * ((p - 1.0) / (2.0 * reference)) ** (1.0 / p)
    d_max = math.pi - eps
    diameters = np.linspace(d_min, d_max, config.RIGIDITY_D_POINTS) if d_min < d_max else np.array([d_max])
    gap = math.inf
    for delta in delta_grid:
        K, Nd = N - 1.0 - delta, N + delta
        for D in diameters:
            value = lambda_model(p, K, Nd, float(D), tol).lambda_
            gap = min(gap, value - reference)
    logger.info(f"rigidity gap for p={p}, N={N}, eps={eps}: {gap:.6g}")
    return gap


def _positive_slice(h: GridDensity) -> Tuple[slice, np.ndarray, np.ndarray]:
    lo, hi = h.positive_range()
    if hi - lo < 2:
        raise DomainError("density support spans fewer than three nodes")
    sl = slice(lo, hi + 1)
    nw = h.node_weights[sl]
    cw = h.cell_weights[lo:hi]
    return sl, nw, cw


def _extend(h: GridDensity, sl: slice, u: np.ndarray) -> np.ndarray:
    full = np.empty(h.size)
    full[:sl.start] = u[0]
    full[sl] = u
    full[sl.stop:] = u[-1]
    return full


def neumann_eigenpair(h: GridDensity) -> Tuple[float, np.ndarray]:
    """First nonzero eigenvalue and eigenfunction of -(h u')' = lambda h u"""
    if not h.mass > 0.0:
        raise DomainError("density has zero mass")
    sl, nw, cw = _positive_slice(h)
    step2 = h.step ** 2
    stiff = np.zeros(nw.size)
    stiff[:-1] += cw
    stiff[1:] += cw
    root = np.sqrt(nw)
    d = stiff / step2 / nw
    e = -cw / step2 / (root[:-1] * root[1:])
    values, vectors = linalg.eigh_tridiagonal(d, e, select='i', select_range=(0, 1))
    u = vectors[:, 1] / root
    u /= np.max(np.abs(u))
    return float(values[1]), _extend(h, sl, u)


def p_mean_shift(h: GridDensity, u: np.ndarray, p: float) -> float:
    """The c with int (u - c)|u - c|^(p-2) h = 0"""
    w = h.node_weights
    if p == 2.0:
        return float(np.dot(w, u) / w.sum())
    lo, hi = float(np.min(u)), float(np.max(u))
    if hi - lo <= 0.0:
        return lo

    def moment(c: float) -> float:
        d = u - c
        return float(np.dot(w, np.sign(d) * np.abs(d) ** (p - 1.0)))

    if moment(lo) <= 0.0:
        return lo
    if moment(hi) >= 0.0:
        return hi
    return optimize.brentq(moment, lo, hi, xtol=1e-15 * max(1.0, hi - lo), maxiter=200)


def p_rayleigh_quotient(h: GridDensity, u: np.ndarray, p: float) -> float:
    """int |u'|^p h / int |u - c|^p h with c the p-mean shift; inf for constants"""
    c = p_mean_shift(h, u, p)
    denom = float(np.dot(h.node_weights, np.abs(u - c) ** p))
    energy = float(np.dot(h.cell_weights, np.abs(np.diff(u) / h.step) ** p))
    if denom <= 0.0:
        return math.inf
    return energy / denom


def _quotient_and_gradient(z: np.ndarray, nw: np.ndarray, cw: np.ndarray, step: float, p: float):
    slope = np.diff(z) / step
    flux = p * cw * np.sign(slope) * np.abs(slope) ** (p - 1.0) / step
    energy = float(np.dot(cw, np.abs(slope) ** p))
    grad_e = np.zeros_like(z)
    grad_e[:-1] -= flux
    grad_e[1:] += flux
    lo, hi = float(z.min()), float(z.max())
    if hi - lo <= 0.0:
        return 1e300, np.zeros_like(z)

    def moment(c: float) -> float:
        d = z - c
        return float(np.dot(nw, np.sign(d) * np.abs(d) ** (p - 1.0)))

    c = optimize.brentq(moment, lo, hi, xtol=1e-15 * (hi - lo), maxiter=200)
    d = z - c
    mass = float(np.dot(nw, np.abs(d) ** p))
    q = energy / mass
    grad_m = p * nw * np.sign(d) * np.abs(d) ** (p - 1.0)
    return q, (grad_e - q * grad_m) / mass


def _smooth_start(size: int, rng: np.random.Generator) -> np.ndarray:
    x = np.linspace(0.0, 1.0, size)
    u = np.zeros(size)
    for k in range(1, 5):
        u += rng.standard_normal() / k ** 2 * np.cos(k * math.pi * x)
    return u


def rayleigh_p_minimizer(h: GridDensity, p: float, tol: float = config.TOL,
                         starts: int = config.RAYLEIGH_STARTS,
                         seed: int = config.SEED) -> Tuple[float, np.ndarray]:
    """Minimal p-Rayleigh quotient over grid functions and its minimizer.

    p = 2 is the tridiagonal Neumann problem. Other p use L-BFGS-B from the
    p = 2 eigenfunction, its sign flip and random smooth starts; the result is
    an upper bound for the discrete infimum.
    """
    p = check_p(p)
    if not h.mass > 0.0:
        raise DomainError("density has zero mass")
    value, u2 = neumann_eigenpair(h)
    if p == 2.0:
        return value, u2
    sl, nw, cw = _positive_slice(h)
    rng = np.random.default_rng(seed)
    seeds: List[np.ndarray] = [u2[sl], -u2[sl]]
    while len(seeds) < max(starts, 1):
        seeds.append(_smooth_start(nw.size, rng))
    best, best_u = math.inf, u2[sl]
    for x0 in seeds[:max(starts, 1)]:
        x0 = x0 / np.max(np.abs(x0))
        res = optimize.minimize(_quotient_and_gradient, x0, args=(nw, cw, h.step, p), jac=True,
                                method='L-BFGS-B',
                                options=dict(maxiter=config.RAYLEIGH_MAXITER, ftol=tol * 1e-3, gtol=1e-10))
        if res.fun < best:
            best, best_u = float(res.fun), res.x
    u = _extend(h, sl, best_u)
    logger.debug(f"rayleigh_p(p={p}) = {best:.10g} over {len(seeds[:max(starts, 1)])} starts")
    return best, u / np.max(np.abs(u))


def rayleigh_p(h: GridDensity, p: float, tol: float = config.TOL,
               starts: int = config.RAYLEIGH_STARTS, seed: int = config.SEED) -> float:
    return rayleigh_p_minimizer(h, p, tol, starts, seed)[0]
