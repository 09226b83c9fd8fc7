"""Synthetic disintegrations and replay of the localization arguments.

A Disintegration is a finite family of weighted one-dimensional fibers plus
a singular part Z of weighted points. The aggregate_* functions check each
fiberwise inequality as its own step, then the integrated inequality, so a
report always shows which layer failed.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from models.coeffs import bonnet_myers_bound, tau
from models.density import (CdValidationReport, GridDensity, gradient_energy, grid_function_csv,
                            normalize, random_cd_density, read_density_csv, validate_cd,
                            weighted_integral)
from models.functional import entropy_fisher, logsob_reference
from models.spectral import lambda_model, p_mean_shift
from models.transport1d import IntervalSet, tau_term, verify_bm
from utils.config import config
from utils.errors import DensityFormatError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
RATIO_TOL = 1e-9


@dataclass(frozen=True)
class Fiber:
    weight: float
    density: GridDensity
    function: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.weight > 0.0:
            raise DomainError(f"fiber weight must be positive, got {self.weight}")
        object.__setattr__(self, 'density', normalize(self.density))
        if self.function is not None:
            f = np.array(self.function, dtype=float)
            if f.shape != self.density.values.shape:
                raise DomainError("fiber function must be sampled on the fiber grid")
            f.setflags(write=False)
            object.__setattr__(self, 'function', f)

    @property
    def support_length(self) -> float:
        lo, hi = self.density.positive_range()
        return (hi - lo) * self.density.step


@dataclass(frozen=True)
class Disintegration:
    fibers: Tuple[Fiber, ...]
    singular_weight: float = 0.0
    # (weight, value) pairs on Z
    singular_values: Tuple[Tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'fibers', tuple(self.fibers))
        object.__setattr__(self, 'singular_values', tuple((float(w), float(v)) for w, v in self.singular_values))
        if self.singular_weight < 0.0:
            raise DomainError(f"singular weight must be >= 0, got {self.singular_weight}")
        if self.singular_values:
            listed = sum(w for w, _ in self.singular_values)
            if abs(listed - self.singular_weight) > WEIGHT_TOL:
                raise DomainError(f"singular points carry weight {listed}, expected {self.singular_weight}")
        error = self.weight_error
        if error > WEIGHT_TOL:
            raise DomainError(f"fiber and singular weights sum to {1.0 + error:.15g} (or {1.0 - error:.15g}), not 1")

    @property
    def weight_error(self) -> float:
        return abs(sum(f.weight for f in self.fibers) + self.singular_weight - 1.0)

    def with_functions(self, functions: Sequence[np.ndarray],
                       singular: Optional[Sequence[float]] = None) -> 'Disintegration':
        fibers = tuple(Fiber(f.weight, f.density, g) for f, g in zip(self.fibers, functions))
        values = self.singular_values
        if singular is not None:
            values = tuple((w, float(v)) for (w, _), v in zip(self.singular_values, singular))
        return Disintegration(fibers, self.singular_weight, values)


class DisintegrationReport(BaseModel):
    valid: bool
    weight_error: float
    worst_fiber: Optional[int] = None
    worst_violation: float
    fiber_reports: List[CdValidationReport]
    tolerance: float


class StepReport(BaseModel):
    name: str
    fiber: Optional[int] = None
    lhs: float
    rhs: float
    slack: float
    holds: bool


class AggregationReport(BaseModel):
    steps: List[StepReport]
    global_lhs: float
    global_rhs: float
    global_slack: float
    holds: bool
    fibers_hold: bool
    constant: Optional[float] = None
    degenerate: bool = False
    tolerance: float


def _step(name: str, lhs: float, rhs: float, tol: float, fiber: Optional[int] = None) -> StepReport:
    """Record lhs <= rhs"""
    slack = rhs - lhs
    return StepReport(name=name, fiber=fiber, lhs=lhs, rhs=rhs, slack=slack, holds=slack >= -tol)


def _report(steps: List[StepReport], lhs: float, rhs: float, tol: float, **extra) -> AggregationReport:
    fibers_hold = all(s.holds for s in steps)
    slack = rhs - lhs
    report = AggregationReport(steps=steps, global_lhs=lhs, global_rhs=rhs, global_slack=slack,
                               holds=slack >= -tol, fibers_hold=fibers_hold, tolerance=tol, **extra)
    if fibers_hold and not report.holds:
        logger.warning(f"fiberwise steps hold but the integrated inequality fails by {slack:.3e}")
    return report


def verify_disintegration(d: Disintegration, K: float, N: float, D: Optional[float] = None,
                          tol: float = config.TOL) -> DisintegrationReport:
    """Weight normalization and the CD(K,N) condition on every fiber"""
    reports, worst, worst_fiber = [], -math.inf, None
    for i, fiber in enumerate(d.fibers):
        report = validate_cd(fiber.density, K, N, tol)
        violation = report.worst_violation
        if D is not None and fiber.support_length > D * (1.0 + 1e-9) + fiber.density.step:
            violation = max(violation, fiber.support_length - D)
            report = report.model_copy(update=dict(valid=False, worst_violation=violation))
        reports.append(report)
        if violation > worst:
            worst, worst_fiber = violation, i
    valid = d.weight_error <= WEIGHT_TOL and all(r.valid for r in reports)
    if not valid:
        logger.info(f"disintegration invalid, worst fiber {worst_fiber} ({worst:.3e})")
    return DisintegrationReport(valid=valid, weight_error=d.weight_error,
                                worst_fiber=None if valid else worst_fiber,
                                worst_violation=worst if reports else 0.0,
                                fiber_reports=reports, tolerance=tol)


def disintegrated_integral(d: Disintegration, fiber_values: Sequence[np.ndarray],
                           singular: Optional[Sequence[float]] = None) -> float:
    """Integral against the disintegrated measure: sum q_i int f_i h_i + sum over Z"""
    total = sum(f.weight * weighted_integral(f.density, np.asarray(v)) for f, v in zip(d.fibers, fiber_values))
    if singular is not None:
        total += sum(w * float(v) for (w, _), v in zip(d.singular_values, singular))
    return float(total)


def _functions(d: Disintegration) -> List[np.ndarray]:
    missing = [i for i, f in enumerate(d.fibers) if f.function is None]
    if missing:
        raise PreconditionError(f"fiber {missing[0]} carries no function", fiber=missing[0])
    return [f.function for f in d.fibers]


def _check_diameter(d: Disintegration, D: float):
    for i, fiber in enumerate(d.fibers):
        if fiber.support_length > D * (1.0 + 1e-9) + fiber.density.step:
            raise PreconditionError(f"fiber {i} has length {fiber.support_length} > D={D}", fiber=i)


def aggregate_spectral(d: Disintegration, p: float, K: float, N: float, D: float,
                       tol: float = config.TOL) -> AggregationReport:
    """lambda int |f|^p <= int |f'|^p, fiber by fiber and integrated"""
    functions = _functions(d)
    _check_diameter(d, D)
    lam = lambda_model(p, K, N, D, tol).lambda_
    steps = []
    lhs_total, rhs_total = 0.0, 0.0
    for i, (fiber, f) in enumerate(zip(d.fibers, functions)):
        h = fiber.density
        signed = np.sign(f) * np.abs(f) ** (p - 1.0)
        mean = weighted_integral(h, signed)
        scale = weighted_integral(h, np.abs(signed))
        if abs(mean) > tol * max(1.0, scale):
            raise PreconditionError(f"fiber {i} function has p-mean {mean:.3e}, expected 0", fiber=i)
        lhs = lam * weighted_integral(h, np.abs(f) ** p)
        rhs = gradient_energy(h, f, p)
        steps.append(_step('fiber spectral gap', lhs, rhs, tol, fiber=i))
        lhs_total += fiber.weight * lhs
        rhs_total += fiber.weight * rhs
    for k, (_, value) in enumerate(d.singular_values):
        if abs(value) > tol:
            raise PreconditionError(f"function must vanish on Z, point {k} has value {value}")
    # both sides vanish on Z
    steps.append(_step('singular part', 0.0, 0.0, tol))
    steps.append(_step('weighted sum', lhs_total, rhs_total, tol))
    return _report(steps, lhs_total, rhs_total, tol, constant=lam)


def aggregate_bm(d: Disintegration, A0: Sequence[IntervalSet], A1: Sequence[IntervalSet], t: float,
                 K: float, N: float, tol: float = config.TOL,
                 z_membership: Optional[Sequence[Tuple[bool, bool]]] = None) -> AggregationReport:
    """Brunn-Minkowski on each fiber, the mass-ratio form and the integrated inequality.

    The report's global_lhs is the tau-combination and global_rhs is m(A_t)^(1/N),
    so its slack matches verify_bm.
    """
    if len(A0) != len(d.fibers) or len(A1) != len(d.fibers):
        raise DomainError("one pair of sets per fiber is required")
    membership = list(z_membership) if z_membership is not None else [(False, False)] * len(d.singular_values)
    if len(membership) != len(d.singular_values):
        raise DomainError("one membership flag pair per singular point is required")

    masses = [(f.density.mass_on(a0), f.density.mass_on(a1)) for f, a0, a1 in zip(d.fibers, A0, A1)]
    m0 = sum(f.weight * m[0] for f, m in zip(d.fibers, masses))
    m1 = sum(f.weight * m[1] for f, m in zip(d.fibers, masses))
    both = 0.0
    for k, ((w, _), (in0, in1)) in enumerate(zip(d.singular_values, membership)):
        if in0 != in1:
            raise PreconditionError(f"singular point {k} lies in only one of A0, A1")
        if in0:
            both += w
    m0, m1 = m0 + both, m1 + both
    if not (m0 > 0.0 and m1 > 0.0):
        raise DomainError(f"input sets need positive total mass, got m(A0)={m0}, m(A1)={m1}")
    for i, (a, b) in enumerate(masses):
        if abs(a * m1 - b * m0) > RATIO_TOL * max(a * m1, b * m0):
            raise PreconditionError(f"fiber {i} mass ratios {a / m0:.6g} and {b / m1:.6g} differ", fiber=i)
    if both > 0.0 and abs(m0 - m1) > RATIO_TOL * max(m0, m1):
        raise PreconditionError("singular points in A0 and A1 need m(A0) = m(A1)")

    active = [i for i, (a, b) in enumerate(masses) if a > 0.0 and b > 0.0]
    fiber_bm = {i: verify_bm(d.fibers[i].density, K, N, A0[i], A1[i], t, tol) for i in active}
    mt = sum(d.fibers[i].weight * fiber_bm[i].mass_t for i in active) + both
    steps = [_step('fiber Brunn-Minkowski', fiber_bm[i].rhs, fiber_bm[i].lhs, tol, fiber=i) for i in active]

    thetas = [fiber_bm[i].theta for i in active]
    if both > 0.0 and K >= 0.0:
        # a point of Z is its own geodesic
        thetas.append(0.0)
    if thetas:
        theta = min(thetas) if K >= 0.0 else max(thetas)
    else:
        theta = 0.0
    tau0, tau1 = tau(K, N, 1.0 - t, theta), tau(K, N, t, theta)
    combined = tau_term(tau0, m0, N) + tau_term(tau1, m1, N)
    for i in active:
        r = fiber_bm[i]
        steps.append(_step('fiber mass inequality', r.mass0 / m0 * combined ** N, r.mass_t, tol, fiber=i))
    if both > 0.0:
        steps.append(_step('singular coefficient', (tau0 + tau1) ** N, 1.0, tol))

    lhs = mt ** (1.0 / N)
    if len(active) == 1 and both == 0.0 and d.fibers[active[0]].weight == 1.0:
        r = fiber_bm[active[0]]
        lhs, combined = r.lhs, r.rhs
    return _report(steps, combined, lhs, tol, constant=theta)


def aggregate_logsob(d: Disintegration, K: float, N: float, D: float, alpha: Optional[float] = None,
                     tol: float = config.TOL) -> AggregationReport:
    """2 alpha Ent(f) <= Fisher(f), fiber by fiber and integrated"""
    functions = _functions(d)
    _check_diameter(d, D)
    if alpha is None:
        alpha = logsob_reference(K, N, D)
        if alpha is None:
            raise DomainError("no reference log-Sobolev constant for these parameters; pass alpha")
    steps = []
    ent_total, fisher_total = 0.0, 0.0
    for i, (fiber, f) in enumerate(zip(d.fibers, functions)):
        if np.any(f < 0.0):
            raise PreconditionError(f"fiber {i} function is negative somewhere", fiber=i)
        mass = weighted_integral(fiber.density, f)
        if abs(mass - 1.0) > 1e-9:
            raise PreconditionError(f"fiber {i} function integrates to {mass:.12g}, expected 1", fiber=i)
        ent, fisher = entropy_fisher(fiber.density, f)
        steps.append(_step('fiber log-Sobolev', 2.0 * alpha * ent, fisher, tol, fiber=i))
        ent_total += fiber.weight * ent
        fisher_total += fiber.weight * fisher
    for k, (_, value) in enumerate(d.singular_values):
        if value != 1.0:
            raise PreconditionError(f"function must equal 1 on Z, point {k} has value {value}")
    # f log f = 0 exactly on Z
    steps.append(_step('singular part', 0.0, 0.0, tol))
    return _report(steps, 2.0 * alpha * ent_total, fisher_total, tol, constant=alpha)


def aggregate_sobolev(d: Disintegration, p: float, q: float, K: float, N: float, D: float,
                      alpha: float, tol: float = config.TOL) -> AggregationReport:
    """alpha/(p-q) [(int |f|^p)^(q/p) - int |f|^q] <= int |f'|^q, fiber by fiber and integrated.

    Fibers must carry the global p-norm, int |f_i|^p h_i = int |f|^p, and Z
    points |f(z)|^p = int |f|^p; the bracket is then additive over the layers.
    """
    if abs(p - q) < 1e-6:
        raise DomainError(f"aggregate_sobolev needs p != q, got p={p}, q={q}")
    functions = _functions(d)
    _check_diameter(d, D)
    norm_p = disintegrated_integral(d, [np.abs(f) ** p for f in functions],
                                    [abs(v) ** p for _, v in d.singular_values])
    steps = []
    lhs_total, rhs_total = 0.0, 0.0
    for i, (fiber, f) in enumerate(zip(d.fibers, functions)):
        lp = weighted_integral(fiber.density, np.abs(f) ** p)
        if abs(lp - norm_p) > 1e-9 * max(1.0, norm_p):
            raise PreconditionError(f"fiber {i} p-norm {lp:.12g} differs from {norm_p:.12g}", fiber=i)
        bracket = norm_p ** (q / p) - weighted_integral(fiber.density, np.abs(f) ** q)
        lhs = alpha * bracket / (p - q)
        rhs = gradient_energy(fiber.density, f, q)
        steps.append(_step('fiber Sobolev', lhs, rhs, tol, fiber=i))
        lhs_total += fiber.weight * lhs
        rhs_total += fiber.weight * rhs
    for k, (_, value) in enumerate(d.singular_values):
        if abs(abs(value) ** p - norm_p) > 1e-9 * max(1.0, norm_p):
            raise PreconditionError(f"singular point {k} has |f|^p={abs(value) ** p:.12g}, expected {norm_p:.12g}")
    steps.append(_step('singular part', 0.0, 0.0, tol))
    return _report(steps, lhs_total, rhs_total, tol, constant=alpha)


@dataclass(frozen=True)
class LayeredFunction:
    """A function given on every fiber grid and at every singular point"""

    fibers: Tuple[np.ndarray, ...]
    singular: Tuple[float, ...] = ()

    def integrals(self, d: Disintegration) -> List[float]:
        return [weighted_integral(f.density, np.asarray(v)) for f, v in zip(d.fibers, self.fibers)]

    def total(self, d: Disintegration) -> float:
        return disintegrated_integral(d, self.fibers, self.singular)


def four_functions(d: Disintegration, f1: LayeredFunction, f2: LayeredFunction, f3: LayeredFunction,
                   f4: LayeredFunction, alpha: float, beta: float, tol: float = config.TOL) -> AggregationReport:
    """(int f1)^alpha (int f2)^beta <= (int f3)^alpha (int f4)^beta from its fiberwise form.

    With c = int f3 / int f1 the fibers must satisfy int (f3 - c f1) dm_q = 0
    and the fiberwise inequality; on Z, f2 <= c^(alpha/beta) f4 pointwise.
    """
    if alpha < 0.0 or beta < 0.0:
        raise DomainError(f"exponents must be nonnegative, got alpha={alpha}, beta={beta}")
    g1, g2, g3, g4 = (f.total(d) for f in (f1, f2, f3, f4))
    if not (g1 > 0.0 and g3 > 0.0):
        raise DomainError(f"int f1 and int f3 must be positive, got {g1} and {g3}")
    c = g3 / g1
    degenerate = alpha == 0.0 or beta == 0.0
    i1, i2, i3, i4 = (f.integrals(d) for f in (f1, f2, f3, f4))
    steps = []
    for i in range(len(d.fibers)):
        lhs = i1[i] ** alpha * i2[i] ** beta
        rhs = i3[i] ** alpha * i4[i] ** beta
        steps.append(_step('fiber product inequality', lhs, rhs, tol, fiber=i))
        if beta == 0.0:
            continue
        scale = max(1.0, abs(i3[i]), abs(c * i1[i]))
        steps.append(_step('fiber constraint', abs(i3[i] - c * i1[i]), 0.0, tol * scale, fiber=i))
        # carries the inequality on fibers where int f1 = 0
        steps.append(_step('fiber reduced inequality', i2[i], c ** (alpha / beta) * i4[i], tol, fiber=i))
    if beta == 0.0:
        for k, (v1, v3) in enumerate(zip(f1.singular, f3.singular)):
            steps.append(_step(f'singular point {k}', v1, v3, tol))
    else:
        for k, (v2, v4) in enumerate(zip(f2.singular, f4.singular)):
            steps.append(_step(f'singular point {k}', v2, c ** (alpha / beta) * v4, tol))
    lhs = g1 ** alpha * g2 ** beta
    rhs = g3 ** alpha * g4 ** beta
    return _report(steps, lhs, rhs, tol, constant=c, degenerate=degenerate)


def random_disintegration(K: float, N: float, D: float, fibers: int, rng: np.random.Generator,
                          grid_nodes: int = config.GRID_NODES, singular_weight: float = 0.0,
                          singular_points: int = 0) -> Disintegration:
    """Dirichlet weights over random CD(K,N) fibers of length at most D"""
    top = min(D, bonnet_myers_bound(K, N))
    if not math.isfinite(top):
        raise DomainError("random fibers need a finite diameter")
    if fibers < 1 and singular_weight < 1.0:
        raise DomainError("need at least one fiber unless Z carries all the mass")
    weights = rng.dirichlet(np.ones(fibers)) * (1.0 - singular_weight) if fibers else np.array([])
    members = tuple(Fiber(float(w), random_cd_density(K, N, rng.uniform(0.3, 1.0) * top, rng, grid_nodes))
                    for w in weights)
    points = ()
    if singular_points:
        split = rng.dirichlet(np.ones(singular_points)) * singular_weight
        points = tuple((float(w), 0.0) for w in split)
        # rounding: make the listed weights add up exactly
        singular_weight = float(sum(w for w, _ in points))
    total = float(sum(f.weight for f in members)) + singular_weight
    if members and abs(total - 1.0) > 0.0:
        first = members[0]
        members = (Fiber(first.weight + 1.0 - total, first.density),) + members[1:]
    return Disintegration(members, singular_weight, points)


def _smooth_profile(size: int, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    x = np.linspace(0.0, 1.0, size)
    coefficients = rng.normal(size=modes) / np.arange(1, modes + 1)
    return np.cos(np.pi * np.outer(np.arange(1, modes + 1), x)).T @ coefficients


def admissible_functions(d: Disintegration, inequality: str, rng: np.random.Generator,
                         p: float = 2.0) -> Disintegration:
    """Attach random fiber functions meeting the preconditions of one aggregate_* check.

    'spectral': zero p-mean on every fiber, 0 on Z. 'logsob': positive with
    int f_i h_i = 1, 1 on Z. 'sobolev': int |f_i|^p h_i = 1 on every fiber,
    |f| = 1 on Z, so the global p-norm is 1.
    """
    functions = []
    for fiber in d.fibers:
        u = _smooth_profile(fiber.density.size, rng)
        if inequality == 'spectral':
            functions.append(u - p_mean_shift(fiber.density, u, p))
        elif inequality == 'logsob':
            f = np.exp(0.5 * u)
            functions.append(f / weighted_integral(fiber.density, f))
        elif inequality == 'sobolev':
            f = 1.0 + 0.3 * u / max(1.0, float(np.max(np.abs(u))))
            functions.append(f / weighted_integral(fiber.density, np.abs(f) ** p) ** (1.0 / p))
        else:
            raise DomainError(f"unknown inequality {inequality!r}")
    singular = {'spectral': 0.0, 'logsob': 1.0, 'sobolev': 1.0}[inequality]
    return d.with_functions(functions, [singular] * len(d.singular_values))


class FiberSpec(BaseModel):
    weight: float
    density_csv: str
    function_csv: Optional[str] = None


class SingularSpec(BaseModel):
    weight: float
    value: float = 0.0


class DisintegrationSpec(BaseModel):
    fibers: List[FiberSpec]
    singular: List[SingularSpec] = []


def read_disintegration(path: str) -> Disintegration:
    """Read the JSON disintegration file; CSV paths are relative to it"""
    try:
        with open(path) as handle:
            spec = DisintegrationSpec.model_validate_json(handle.read())
    except ValidationError as e:
        raise DensityFormatError(f"invalid disintegration file {path}: {e}")
    base = os.path.dirname(os.path.abspath(path))
    fibers = []
    for item in spec.fibers:
        density = read_density_csv(os.path.join(base, item.density_csv))
        function = None
        if item.function_csv:
            function = grid_function_csv(os.path.join(base, item.function_csv), density.size)
        fibers.append(Fiber(item.weight, density, function))
    singular = tuple((s.weight, s.value) for s in spec.singular)
    return Disintegration(tuple(fibers), float(sum(w for w, _ in singular)), singular)
