import json
import math

import numpy as np
import pytest

from models.coeffs import CdParams
from models.density import GridDensity, model_density, random_cd_density, write_density_csv
from models.localize import (Disintegration, Fiber, LayeredFunction, admissible_functions, aggregate_bm,
                             aggregate_logsob, aggregate_sobolev, aggregate_spectral, disintegrated_integral,
                             four_functions, random_disintegration, read_disintegration, verify_disintegration)
from models.spectral import neumann_eigenpair
from models.transport1d import IntervalSet, random_interval_set, verify_bm
from utils.errors import DensityFormatError, DomainError, PreconditionError

GRID = 300


def flat_fiber(weight, length=1.0, nodes=201, function=None):
    return Fiber(weight, GridDensity(0.0, length / (nodes - 1), np.ones(nodes)), function)


def equal_mass_sets(h, rng):
    """A random set and an interval of the same mass on a normalized density"""
    a0 = random_interval_set(h.origin, h.end, rng)
    mass = h.mass_on(a0)
    x = rng.uniform(h.origin, float(h.inverse_integral(1.0 - mass)))
    y = float(h.inverse_integral(h.integral_to(x) + mass))
    return a0, IntervalSet.from_pairs([(x, y)])


def test_fiber_and_disintegration_validation():
    fiber = flat_fiber(0.5)
    assert fiber.density.mass == pytest.approx(1.0)
    assert fiber.support_length == pytest.approx(1.0)
    with pytest.raises(DomainError):
        flat_fiber(0.0)
    with pytest.raises(DomainError):
        flat_fiber(1.0, function=np.zeros(5))
    with pytest.raises(DomainError):
        Disintegration((fiber,))
    with pytest.raises(DomainError):
        Disintegration((fiber,), 0.5, ((0.25, 0.0),))
    with pytest.raises(DomainError):
        Disintegration((fiber,), -0.5)
    d = Disintegration((fiber, flat_fiber(0.25)), 0.25, ((0.1, 0.0), (0.15, 0.0)))
    assert d.weight_error <= 1e-12


def test_verify_disintegration_flags_the_bad_fiber():
    good = flat_fiber(0.5)
    sinh = model_density('sinh', CdParams(-1.0, 3.0, 1.0), grid_nodes=GRID)
    d = Disintegration((good, Fiber(0.5, sinh)))
    assert verify_disintegration(d, -1.0, 3.0).valid
    report = verify_disintegration(d, 0.0, 3.0)
    assert not report.valid
    assert report.worst_fiber == 1
    assert report.fiber_reports[0].valid


def test_verify_disintegration_checks_lengths():
    d = Disintegration((flat_fiber(1.0, length=2.0),))
    assert verify_disintegration(d, 0.0, 2.0, D=2.0).valid
    report = verify_disintegration(d, 0.0, 2.0, D=1.0)
    assert not report.valid and report.worst_fiber == 0


def test_disintegrated_integral():
    d = Disintegration((flat_fiber(0.25), flat_fiber(0.5)), 0.25, ((0.25, 0.0),))
    values = [np.full(201, 2.0), np.full(201, 4.0)]
    assert disintegrated_integral(d, values, [8.0]) == pytest.approx(0.5 + 2.0 + 2.0)


def test_spectral_tight_on_the_eigenfunction():
    N = 3.0
    h = model_density('sin', CdParams(N - 1.0, N, math.pi), grid_nodes=2000)
    fiber = Fiber(1.0, h)
    _, u = neumann_eigenpair(fiber.density)
    d = Disintegration((fiber,)).with_functions([u])
    report = aggregate_spectral(d, 2.0, N - 1.0, N, math.pi)
    assert report.constant == pytest.approx(N)
    assert abs(report.global_slack) <= 5e-3 * report.global_rhs


def test_spectral_singular_only():
    d = Disintegration((), 1.0, ((0.5, 0.0), (0.5, 0.0)))
    report = aggregate_spectral(d, 2.0, 0.0, 2.0, 1.0)
    assert report.holds and report.global_lhs == 0.0


def test_spectral_preconditions():
    d = Disintegration((flat_fiber(1.0),))
    with pytest.raises(PreconditionError) as e:
        aggregate_spectral(d, 2.0, 0.0, 2.0, 1.0)
    assert e.value.fiber == 0
    with pytest.raises(PreconditionError) as e:
        aggregate_spectral(d.with_functions([np.ones(201)]), 2.0, 0.0, 2.0, 1.0)
    assert e.value.fiber == 0
    long = Disintegration((flat_fiber(1.0, length=2.0, function=np.linspace(-1, 1, 201)),))
    with pytest.raises(PreconditionError):
        aggregate_spectral(long, 2.0, 0.0, 2.0, 1.0)
    nonzero_on_z = Disintegration((flat_fiber(0.5, function=np.linspace(-1, 1, 201)),), 0.5, ((0.5, 1.0),))
    with pytest.raises(PreconditionError):
        aggregate_spectral(nonzero_on_z, 2.0, 0.0, 2.0, 1.0)


@pytest.mark.slow
@pytest.mark.parametrize("K, N, D", [(0.0, 2.0, 1.0), (2.0, 3.0, math.pi), (-1.0, 3.0, 2.0)])
def test_spectral_bench(K, N, D):
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = random_disintegration(K, N, D, int(rng.integers(1, 6)), rng, GRID,
                                  singular_weight=float(rng.choice([0.0, 0.2])), singular_points=2)
        report = aggregate_spectral(admissible_functions(d, 'spectral', rng), 2.0, K, N, D)
        assert report.global_slack >= -1e-9


def test_bm_single_fiber_matches_direct_check(rng):
    h = random_cd_density(1.0, 2.0, 2.5, rng, GRID)
    A0 = random_interval_set(h.origin, h.end, rng)
    A1 = random_interval_set(h.origin, h.end, rng)
    d = Disintegration((Fiber(1.0, h),))
    report = aggregate_bm(d, [A0], [A1], 0.4, 1.0, 2.0)
    direct = verify_bm(d.fibers[0].density, 1.0, 2.0, A0, A1, 0.4)
    assert report.global_slack == direct.slack
    assert report.holds == direct.holds
    assert report.constant == direct.theta


def test_bm_on_two_flat_fibers():
    d = Disintegration((flat_fiber(0.5), flat_fiber(0.5)))
    A0 = [IntervalSet.parse("0:0.2")] * 2
    A1 = [IntervalSet.parse("0.8:1")] * 2
    report = aggregate_bm(d, A0, A1, 0.5, 0.0, 2.0)
    assert report.holds
    assert report.global_slack == pytest.approx(0.0, abs=1e-10)
    assert [s.name for s in report.steps].count('fiber mass inequality') == 2


def test_bm_preconditions():
    d = Disintegration((flat_fiber(0.5), flat_fiber(0.5)))
    with pytest.raises(PreconditionError) as e:
        aggregate_bm(d, [IntervalSet.parse("0:0.2"), IntervalSet.parse("0:0.4")],
                     [IntervalSet.parse("0:0.2")] * 2, 0.5, 0.0, 2.0)
    assert e.value.fiber == 0
    with pytest.raises(DomainError):
        aggregate_bm(d, [IntervalSet.parse("0:0.2")], [IntervalSet.parse("0:0.2")], 0.5, 0.0, 2.0)
    with_z = Disintegration((flat_fiber(0.5),), 0.5, ((0.5, 0.0),))
    with pytest.raises(PreconditionError):
        aggregate_bm(with_z, [IntervalSet.parse("0:0.2")], [IntervalSet.parse("0:0.2")], 0.5, 0.0, 2.0,
                     z_membership=[(True, False)])


def test_bm_with_singular_points():
    d = Disintegration((flat_fiber(0.5),), 0.5, ((0.5, 0.0),))
    report = aggregate_bm(d, [IntervalSet.parse("0:0.2")], [IntervalSet.parse("0.8:1")], 0.5, 0.0, 3.0,
                          z_membership=[(True, True)])
    assert report.constant == 0.0
    assert any(s.name == 'singular coefficient' and s.holds for s in report.steps)
    assert report.holds


@pytest.mark.slow
@pytest.mark.parametrize("K, N, D", [(0.0, 2.0, 1.0), (1.0, 2.0, math.pi), (-1.0, 3.0, 2.0)])
def test_bm_bench(K, N, D):
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = random_disintegration(K, N, D, int(rng.integers(1, 5)), rng, GRID)
        pairs = [equal_mass_sets(f.density, rng) for f in d.fibers]
        report = aggregate_bm(d, [a for a, _ in pairs], [b for _, b in pairs], rng.uniform(), K, N)
        assert report.global_slack >= -1e-9


def test_logsob_preconditions_and_default_constant():
    fiber = Fiber(1.0, model_density('sin', CdParams(1.0, 2.0, math.pi), grid_nodes=GRID))
    d = Disintegration((fiber,))
    report = aggregate_logsob(d.with_functions([np.ones(GRID)]), 1.0, 2.0, math.pi)
    assert report.constant == pytest.approx(2.0)
    assert report.global_slack == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        aggregate_logsob(d.with_functions([np.full(GRID, 2.0)]), 1.0, 2.0, math.pi)
    with pytest.raises(PreconditionError):
        aggregate_logsob(d.with_functions([np.linspace(-1.0, 3.0, GRID)]), 1.0, 2.0, math.pi)
    with pytest.raises(DomainError):
        aggregate_logsob(d.with_functions([np.ones(GRID)]), 1.0, 2.0, 4.0)


@pytest.mark.slow
@pytest.mark.parametrize("N", [2.0, 3.0])
def test_logsob_bench(N):
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = random_disintegration(N - 1.0, N, math.pi, int(rng.integers(1, 6)), rng, GRID,
                                  singular_weight=float(rng.choice([0.0, 0.1])), singular_points=1)
        report = aggregate_logsob(admissible_functions(d, 'logsob', rng), N - 1.0, N, math.pi)
        assert report.global_slack >= -1e-9


@pytest.mark.slow
def test_sobolev_bench():
    rng = np.random.default_rng(4)
    for _ in range(200):
        d = random_disintegration(3.0, 4.0, math.pi, int(rng.integers(1, 6)), rng, GRID,
                                  singular_weight=float(rng.choice([0.0, 0.1])), singular_points=1)
        report = aggregate_sobolev(admissible_functions(d, 'sobolev', rng, p=4.0), 4.0, 2.0, 3.0, 4.0,
                                   math.pi, 4.0)
        assert report.global_slack >= -1e-9


def test_sobolev_preconditions():
    d = Disintegration((flat_fiber(0.5), flat_fiber(0.5)))
    with pytest.raises(PreconditionError) as e:
        aggregate_sobolev(d.with_functions([np.ones(201), np.full(201, 2.0)]), 4.0, 2.0, 0.0, 4.0, 1.0, 1.0)
    assert e.value.fiber in (0, 1)
    with pytest.raises(DomainError):
        aggregate_sobolev(d.with_functions([np.ones(201)] * 2), 2.0, 2.0, 0.0, 4.0, 1.0, 1.0)


def layered(d, rng):
    fibers = tuple(np.exp(0.3 * rng.standard_normal())
                   * (1.5 + np.cos(np.linspace(0.0, rng.uniform(1.0, 6.0), f.density.size)))
                   for f in d.fibers)
    singular = tuple(float(rng.uniform(0.5, 2.0)) for _ in d.singular_values)
    return LayeredFunction(fibers, singular)


def four_function_instance(d, rng):
    """f3 = c f1 in fiber mean and f2 <= c^(alpha/beta) f4 on every layer"""
    alpha, beta = rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)
    c = rng.uniform(0.5, 2.0)
    f1, f4 = layered(d, rng), layered(d, rng)
    g = layered(d, rng)
    f3_fibers = []
    for fiber, a, b in zip(d.fibers, f1.fibers, g.fibers):
        w = fiber.density.node_weights
        f3_fibers.append(c * a * b * np.dot(w, a) / np.dot(w, a * b))
    f3 = LayeredFunction(tuple(f3_fibers), tuple(c * v for v in f1.singular))
    k = c ** (alpha / beta)
    f2 = LayeredFunction(tuple(k * rng.uniform(0.2, 1.0) * v for v in f4.fibers),
                         tuple(k * rng.uniform(0.2, 1.0) * v for v in f4.singular))
    return f1, f2, f3, f4, alpha, beta, c


def test_four_functions_identity():
    rng = np.random.default_rng(5)
    d = random_disintegration(0.0, 2.0, 1.0, 3, rng, GRID, singular_weight=0.2, singular_points=2)
    f1, f2 = layered(d, rng), layered(d, rng)
    report = four_functions(d, f1, f2, f1, f2, 0.7, 1.3)
    assert report.constant == pytest.approx(1.0)
    assert report.holds and report.fibers_hold
    assert report.global_slack == pytest.approx(0.0, abs=1e-12)


def test_four_functions_domain():
    d = Disintegration((flat_fiber(1.0),))
    one = LayeredFunction((np.ones(201),))
    zero = LayeredFunction((np.zeros(201),))
    with pytest.raises(DomainError):
        four_functions(d, one, one, one, one, -1.0, 1.0)
    with pytest.raises(DomainError):
        four_functions(d, zero, one, one, one, 1.0, 1.0)


def test_four_functions_degenerate_matches_spectral():
    rng = np.random.default_rng(6)
    d = admissible_functions(random_disintegration(1.0, 3.0, 2.0, 2, rng, GRID), 'spectral', rng)
    spectral = aggregate_spectral(d, 2.0, 1.0, 3.0, 2.0)
    lam = spectral.constant
    f1 = LayeredFunction(tuple(lam * f.function ** 2 for f in d.fibers))
    f3 = LayeredFunction(tuple(np.gradient(f.function, f.density.step) ** 2 for f in d.fibers))
    report = four_functions(d, f1, f1, f3, f3, 1.0, 0.0)
    assert report.degenerate
    assert report.global_lhs == pytest.approx(spectral.global_lhs, rel=1e-12)
    assert not any(s.name == 'fiber constraint' for s in report.steps)


@pytest.mark.slow
def test_four_functions_bench():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = random_disintegration(0.0, 2.0, 1.0, int(rng.integers(1, 6)), rng, GRID,
                                  singular_weight=float(rng.choice([0.0, 0.3])), singular_points=2)
        f1, f2, f3, f4, alpha, beta, c = four_function_instance(d, rng)
        report = four_functions(d, f1, f2, f3, f4, alpha, beta)
        assert report.constant == pytest.approx(c)
        assert report.fibers_hold
        assert report.global_slack >= -1e-9


def test_random_disintegration_weights(rng):
    d = random_disintegration(1.0, 2.0, 2.0, 4, rng, GRID, singular_weight=0.3, singular_points=3)
    assert len(d.fibers) == 4 and len(d.singular_values) == 3
    assert d.weight_error <= 1e-12
    assert all(f.support_length <= 2.0 + f.density.step for f in d.fibers)
    assert verify_disintegration(d, 1.0, 2.0, 2.0).valid
    with pytest.raises(DomainError):
        random_disintegration(0.0, 2.0, math.inf, 2, rng)


def test_admissible_functions(rng):
    d = random_disintegration(0.0, 3.0, 1.0, 3, rng, GRID, singular_weight=0.1, singular_points=1)
    logsob = admissible_functions(d, 'logsob', rng)
    for f in logsob.fibers:
        assert np.all(f.function > 0.0)
        assert np.dot(f.density.node_weights, f.function) == pytest.approx(1.0)
    assert logsob.singular_values[0][1] == 1.0
    with pytest.raises(DomainError):
        admissible_functions(d, 'cheeger', rng)


def test_read_disintegration(tmp_path):
    h = model_density('constant', CdParams(0.0, 2.0, 1.0), grid_nodes=50)
    write_density_csv(h, str(tmp_path / "fiber.csv"))
    np.savetxt(tmp_path / "f.csv", np.linspace(-1.0, 1.0, 50), header="f", comments="")
    spec = {"fibers": [{"weight": 0.75, "density_csv": "fiber.csv", "function_csv": "f.csv"}],
            "singular": [{"weight": 0.25, "value": 0.0}]}
    (tmp_path / "d.json").write_text(json.dumps(spec))
    d = read_disintegration(str(tmp_path / "d.json"))
    assert d.fibers[0].weight == 0.75
    assert d.singular_weight == 0.25
    np.testing.assert_allclose(d.fibers[0].function, np.linspace(-1.0, 1.0, 50))
    assert verify_disintegration(d, 0.0, 2.0, 1.0).valid


def test_read_disintegration_rejects_bad_json(tmp_path):
    (tmp_path / "d.json").write_text(json.dumps({"fibers": [{"weight": "heavy"}]}))
    with pytest.raises(DensityFormatError):
        read_disintegration(str(tmp_path / "d.json"))
