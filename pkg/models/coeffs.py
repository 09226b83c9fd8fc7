"""Distortion coefficients and model Jacobians.

Extended reals are plain floats with `math.inf` as the infinity sentinel;
sigma is the only producer of +inf and tau propagates it without ever
evaluating inf * 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from utils.errors import DomainError

logger = logging.getLogger(__name__)

INF = math.inf
ArrayLike = Union[float, np.ndarray]

# relative tolerance for "D is the Bonnet-Myers diameter"
BONNET_MYERS_RTOL = 1e-12


def bonnet_myers_bound(K: float, N: float) -> float:
    """pi sqrt((N-1)/K) for K > 0, +inf otherwise"""
    if K > 0:
        return math.pi * math.sqrt((N - 1.0) / K)
    return INF


@dataclass(frozen=True)
class CdParams:
    """Curvature bound K, dimension bound N and diameter bound D"""

    K: float
    N: float
    D: float = INF

    def __post_init__(self):
        if not self.N >= 1.0:
            raise DomainError(f"N must be >= 1, got {self.N}")
        if not self.D > 0.0:
            raise DomainError(f"D must be positive, got {self.D}")
        if math.isfinite(self.D) and self.D > self.bonnet_myers_bound * (1.0 + BONNET_MYERS_RTOL):
            logger.warning(f"D={self.D} exceeds the Bonnet-Myers bound {self.bonnet_myers_bound} "
                           f"for K={self.K}, N={self.N}")

    @property
    def bonnet_myers_bound(self) -> float:
        return bonnet_myers_bound(self.K, self.N)

    @property
    def at_bonnet_myers(self) -> bool:
        bound = self.bonnet_myers_bound
        return math.isfinite(bound) and abs(self.D - bound) <= BONNET_MYERS_RTOL * bound

    @property
    def delta(self) -> float:
        if self.N == 1.0:
            raise DomainError("delta = K/(N-1) is undefined for N = 1")
        return self.K / (self.N - 1.0)


def _sinh_ratio(t: float, x: float) -> float:
    """sinh(t x) / sinh(x) for x > 0 without overflow"""
    if x < 20.0:
        return math.sinh(t * x) / math.sinh(x)
    return math.exp((t - 1.0) * x) * (-math.expm1(-2.0 * t * x)) / (-math.expm1(-2.0 * x))


def sigma(K: float, N: float, t: float, theta: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"sigma needs t in [0, 1], got {t}")
    if not theta >= 0.0:
        raise DomainError(f"sigma needs theta >= 0, got {theta}")
    if N < 0.0:
        raise DomainError(f"sigma needs N >= 0, got {N}")
    k_theta2 = K * theta * theta
    if k_theta2 == 0.0:
        return t
    if k_theta2 >= N * math.pi ** 2:
        return INF
    if k_theta2 > 0.0:
        x = theta * math.sqrt(K / N)
        return math.sin(t * x) / math.sin(x)
    if N == 0.0:
        return t
    return _sinh_ratio(t, theta * math.sqrt(-K / N))


def tau(K: float, N: float, t: float, theta: float) -> float:
    if N < 1.0:
        raise DomainError(f"tau needs N >= 1, got {N}")
    s = sigma(K, N - 1.0, t, theta)
    if N == 1.0:
        # x^0 := 1, also for x = inf
        return t
    if s == INF:
        return 0.0 if t == 0.0 else INF
    return t ** (1.0 / N) * s ** ((N - 1.0) / N)


def tan_kn(K: float, N: float, t: float) -> float:
    if not N > 1.0:
        raise DomainError(f"tan_kn needs N > 1, got {N}")
    if K == 0.0:
        return 0.0
    d = math.sqrt(abs(K) / (N - 1.0))
    if K < 0.0:
        return d * math.tanh(d * t)
    if abs(d * t) >= math.pi / 2.0:
        raise DomainError(f"tan_kn pole: |t|={abs(t)} >= {math.pi / (2.0 * d)}")
    return d * math.tan(d * t)


def model_log_derivative(K: float, N: float, t: float) -> float:
    """h'/h for the symmetric extremal c_delta(t)^(N-1), delta = K/(N-1)"""
    if K == 0.0:
        return 0.0
    return -math.copysign(N - 1.0, K) * tan_kn(K, N, t)


def s_delta(delta: float, t: ArrayLike) -> ArrayLike:
    if delta > 0.0:
        r = math.sqrt(delta)
        return np.sin(r * np.asarray(t)) / r
    if delta < 0.0:
        r = math.sqrt(-delta)
        return np.sinh(r * np.asarray(t)) / r
    return np.asarray(t, dtype=float) * 1.0


def c_delta(delta: float, t: ArrayLike) -> ArrayLike:
    if delta > 0.0:
        return np.cos(math.sqrt(delta) * np.asarray(t))
    if delta < 0.0:
        return np.cosh(math.sqrt(-delta) * np.asarray(t))
    return np.ones_like(np.asarray(t, dtype=float))


def truncation_window(a: float, delta: float):
    """(xi_minus, xi_plus) of c_delta + a s_delta around 0"""
    if delta > 0.0:
        r = math.sqrt(delta)
        phase = math.atan2(a / r, 1.0)
        return (phase - math.pi / 2.0) / r, (phase + math.pi / 2.0) / r
    if delta == 0.0:
        if a > 0.0:
            return -1.0 / a, INF
        if a < 0.0:
            return -INF, -1.0 / a
        return -INF, INF
    r = math.sqrt(-delta)
    b = a / r
    if abs(b) <= 1.0:
        return -INF, INF
    root = math.atanh(-1.0 / b) / r
    return (root, INF) if root < 0.0 else (-INF, root)


def jacobian_model(H: float, K: float, N: float, t: ArrayLike) -> ArrayLike:
    """Jacobian J_{H,K,N}(t), truncated to the root window of its base around 0"""
    if N < 1.0:
        raise DomainError(f"jacobian_model needs N >= 1, got {N}")
    tt = np.asarray(t, dtype=float)
    if N == 1.0:
        if K > 0.0:
            out = (tt == 0.0).astype(float)
        else:
            out = (H * tt >= 0.0).astype(float)
    else:
        delta = K / (N - 1.0)
        a = H / (N - 1.0)
        base = c_delta(delta, tt) + a * s_delta(delta, tt)
        lo, hi = truncation_window(a, delta)
        inside = (tt >= lo) & (tt <= hi)
        out = np.where(inside, np.clip(base, 0.0, None), 0.0) ** (N - 1.0)
    return float(out) if np.ndim(t) == 0 else out
