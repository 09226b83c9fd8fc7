"""Generalized trigonometric functions pi_p, sin_p, cos_p.

sin_p is the inverse of arcsin_p(s) = int_0^s (1 - u^p)^(-1/p) du on
[-pi_p/2, pi_p/2], reflected about pi_p/2 and extended 2 pi_p periodically.
The quadrature path is the reference definition; `sin_cos_p` evaluates the
same functions through the regularized incomplete beta function and is the
one the solvers call in inner loops.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import integrate, special

from utils.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

NEWTON_TOL = 1e-12
_QUAD_OPTS = dict(epsabs=1e-15, epsrel=1e-13, limit=200)


def check_p(p: float) -> float:
    p = float(p)
    if not p > 1.0 or not math.isfinite(p):
        raise DomainError(f"exponent p must satisfy 1 < p < inf, got {p}")
    return p


@lru_cache(maxsize=256)
def pi_p(p: float) -> float:
    """Half period of sin_p: 2 pi / (p sin(pi / p))"""
    p = check_p(p)
    return 2.0 * math.pi / (p * math.sin(math.pi / p))


def pi_p_quadrature(p: float) -> float:
    """pi_p from the defining integral over [-1, 1]"""
    return 2.0 * _arcsin_quad(check_p(p), 1.0)


def _arcsin_quad(p: float, a: float) -> float:
    # a in [0, 1]
    if a == 0.0:
        return 0.0
    head = min(a, 0.5)
    value, _ = integrate.quad(lambda u: (1.0 - u ** p) ** (-1.0 / p), 0.0, head, **_QUAD_OPTS)
    if a <= 0.5:
        return value

    # u = 1 - v^q removes the endpoint singularity at u = 1
    q = p / (p - 1.0)

    def integrand(v: float) -> float:
        w = v ** q
        gap = -math.expm1(p * math.log1p(-w))
        return q * v ** (q - 1.0) * gap ** (-1.0 / p)

    v_hi = 0.5 ** (1.0 / q)
    v_lo = (1.0 - a) ** (1.0 / q)
    tail, _ = integrate.quad(integrand, v_lo, v_hi, **_QUAD_OPTS)
    return value + tail


def arcsin_p(p: float, s: ArrayLike) -> ArrayLike:
    """Incomplete integral int_0^s (1 - u^p)^(-1/p) du by adaptive quadrature"""
    p = check_p(p)
    if np.ndim(s):
        flat = [arcsin_p(p, float(x)) for x in np.ravel(s)]
        return np.asarray(flat).reshape(np.shape(s))
    s = float(s)
    if not abs(s) <= 1.0:
        raise DomainError(f"arcsin_p needs |s| <= 1, got {s}")
    return math.copysign(_arcsin_quad(p, abs(s)), s)


def _reduce(p: float, t: float) -> Tuple[float, float]:
    """Map t to r in [-pi_p/2, pi_p/2] with sin_p(t) = sin_p(r); return (r, sign of cos_p)"""
    half = pi_p(p)
    r0 = math.fmod(t + half / 2.0, 2.0 * half)
    if r0 < 0.0:
        r0 += 2.0 * half
    r0 -= half / 2.0
    if r0 > half / 2.0:
        return half - r0, -1.0
    return r0, 1.0


def _invert_arcsin(p: float, r: float) -> float:
    """Safeguarded Newton on arcsin_p over the bracket [-1, 1]"""
    half = pi_p(p) / 2.0
    if r >= half:
        return 1.0
    if r <= -half:
        return -1.0
    lo, hi = -1.0, 1.0
    x = float(sin_cos_p(p, r)[0])
    for _ in range(100):
        residual = arcsin_p(p, x) - r
        if residual > 0.0:
            hi = x
        else:
            lo = x
        slope_inv = (1.0 - abs(x) ** p) ** (1.0 / p)
        x_new = x - residual * slope_inv
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= NEWTON_TOL or hi - lo <= NEWTON_TOL:
            return x_new
        x = x_new
    logger.warning(f"sin_p inversion did not settle for p={p}, t={r}")
    return x


def sin_p(p: float, t: ArrayLike) -> ArrayLike:
    p = check_p(p)
    if np.ndim(t):
        flat = [sin_p(p, float(x)) for x in np.ravel(t)]
        return np.asarray(flat).reshape(np.shape(t))
    r, _ = _reduce(p, float(t))
    return _invert_arcsin(p, r)


def cos_p(p: float, t: ArrayLike) -> ArrayLike:
    """Derivative of sin_p: (1 - |sin_p|^p)^(1/p) with the sign of the slope"""
    p = check_p(p)
    if np.ndim(t):
        flat = [cos_p(p, float(x)) for x in np.ravel(t)]
        return np.asarray(flat).reshape(np.shape(t))
    r, sign = _reduce(p, float(t))
    s = _invert_arcsin(p, r)
    return sign * max(0.0, 1.0 - abs(s) ** p) ** (1.0 / p)


def arcsin_p_fast(p: float, s: ArrayLike) -> ArrayLike:
    """arcsin_p through the incomplete beta function I_{|s|^p}(1/p, 1 - 1/p)"""
    p = check_p(p)
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) > 1.0):
        raise DomainError("arcsin_p needs |s| <= 1")
    value = 0.5 * pi_p(p) * special.betainc(1.0 / p, 1.0 - 1.0 / p, np.abs(s) ** p)
    return np.sign(s) * value


def sin_cos_p(p: float, t: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """Vectorized (sin_p(t), cos_p(t)) by inverting the incomplete beta function"""
    p = check_p(p)
    if np.ndim(t) == 0:
        return _sin_cos_scalar(p, float(t))
    t = np.asarray(t, dtype=float)
    half = pi_p(p)
    a, b = 1.0 / p, 1.0 - 1.0 / p
    r0 = np.mod(t + half / 2.0, 2.0 * half) - half / 2.0
    cos_sign = np.where(r0 > half / 2.0, -1.0, 1.0)
    r = np.where(r0 > half / 2.0, half - r0, r0)
    x = np.clip(2.0 * np.abs(r) / half, 0.0, 1.0)
    low = x <= 0.5
    sp_low = special.betaincinv(a, b, np.where(low, x, 0.5))
    cp_high = special.betaincinv(b, a, np.where(low, 0.5, 1.0 - x))
    s_pow = np.where(low, sp_low, 1.0 - cp_high)
    c_pow = np.where(low, 1.0 - sp_low, cp_high)
    return np.sign(r) * s_pow ** (1.0 / p), cos_sign * c_pow ** (1.0 / p)


def _sin_cos_scalar(p: float, t: float) -> Tuple[float, float]:
    if p == 2.0:
        return math.sin(t), math.cos(t)
    r, cos_sign = _reduce(p, t)
    half = pi_p(p)
    x = min(1.0, 2.0 * abs(r) / half)
    if x <= 0.5:
        s_pow = float(special.betaincinv(1.0 / p, 1.0 - 1.0 / p, x))
        c_pow = 1.0 - s_pow
    else:
        c_pow = float(special.betaincinv(1.0 - 1.0 / p, 1.0 / p, 1.0 - x))
        s_pow = 1.0 - c_pow
    return math.copysign(s_pow ** (1.0 / p), r), cos_sign * c_pow ** (1.0 / p)


def signed_power(x: ArrayLike, e: float) -> ArrayLike:
    """x^(e) := sign(x) |x|^e"""
    return np.sign(x) * np.abs(x) ** e
