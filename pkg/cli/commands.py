"""Command table of the cdmodels CLI.

Each handler takes the validated RunConfig and returns (report, holds); the
caller turns the pair into output and an exit status.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from models.coeffs import CdParams
from models.density import GridDensity, model_density, read_density_csv, validate_cd
from models.functional import (cheeger_density, cheeger_model, logsob_estimate, sobolev_estimate, spectral_logsob_gap,
                               talagrand_check)
from models.localize import (admissible_functions, aggregate_logsob, aggregate_sobolev, aggregate_spectral,
                             random_disintegration, read_disintegration, verify_disintegration)
from models.spectral import lambda_closed_form, lambda_model, li_wang_bound
from models.transport1d import IntervalSet, random_measure, verify_bm
from utils.config import config
from utils.errors import CdModelsError, DomainError

logger = logging.getLogger(__name__)

COMMANDS = ('lambda', 'cheeger', 'logsob', 'sobolev', 'bm', 'talagrand', 'validate', 'localize', 'sweep')
SWEEP_CONSTANTS = ('lambda', 'closed_form', 'li_wang', 'cheeger', 'logsob', 'logsob_gap')


class RunConfig(BaseModel):
    command: Literal['lambda', 'cheeger', 'logsob', 'sobolev', 'bm', 'talagrand', 'validate', 'localize', 'sweep']
    params: Dict[str, Any] = {}
    grid_nodes: int = Field(default=config.GRID_NODES, ge=16)
    tol: float = Field(default=config.TOL, gt=0.0)
    output: Optional[str] = None
    format: Literal['json', 'csv'] = 'json'

    def get(self, name: str, default: Any = None) -> Any:
        value = self.params.get(name)
        return default if value is None else value

    def require(self, *names: str) -> List[Any]:
        missing = [n for n in names if self.params.get(n) is None]
        if missing:
            raise DomainError(f"{self.command} needs --{', --'.join(missing)}")
        return [self.params[n] for n in names]


def provenance(cfg: RunConfig, solver: str) -> Dict[str, Any]:
    return {'solver': solver, 'grid': cfg.grid_nodes, 'tolerance': cfg.tol}


def _default_kind(K: float) -> str:
    if K > 0.0:
        return 'sin'
    return 'constant' if K == 0.0 else 'cosh'


def load_density(cfg: RunConfig) -> GridDensity:
    """--density CSV, else the --model profile on [shift, shift + D]"""
    path = cfg.get('density')
    if path:
        return read_density_csv(path)
    K, N, D = cfg.require('K', 'N', 'D')
    kind = cfg.get('model') or _default_kind(K)
    return model_density(kind, CdParams(K, N, D), cfg.get('shift', 0.0), cfg.grid_nodes)


def run_lambda(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    p, K, N, D = cfg.require('p', 'K', 'N', 'D')
    result = lambda_model(p, K, N, D, cfg.tol)
    report = result.model_dump(by_alias=True)
    report['provenance'] = provenance(cfg, result.solver)
    return report, True


def run_cheeger(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    if cfg.get('density') or cfg.get('model'):
        result = cheeger_density(load_density(cfg))
        report = result.model_dump()
        solver = 'two-interval cut search'
    else:
        K, N, D = cfg.require('K', 'N', 'D')
        report = {'cheeger': cheeger_model(K, N, D, config.CHEEGER_MODEL_NODES)}
        solver = 'model case analysis'
    report['provenance'] = provenance(cfg, solver)
    return report, True


def run_logsob(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    K, N, D = cfg.require('K', 'N', 'D')
    result = logsob_estimate(K, N, D, seed=cfg.get('seed', config.SEED), grid_nodes=cfg.grid_nodes, tol=cfg.tol)
    report = result.model_dump(exclude={'witness_function'})
    report['provenance'] = provenance(cfg, 'perturbative and L-BFGS-B upper bound')
    return report, result.holds


def run_sobolev(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    K, N, D, p, q = cfg.require('K', 'N', 'D', 'p', 'q')
    result = sobolev_estimate(K, N, D, p, q, seed=cfg.get('seed', config.SEED),
                              grid_nodes=cfg.grid_nodes, tol=cfg.tol)
    report = result.model_dump(exclude={'witness_function'})
    report['provenance'] = provenance(cfg, 'perturbative and L-BFGS-B upper bound')
    return report, result.holds


def run_bm(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    K, N, A0, A1, t = cfg.require('K', 'N', 'A0', 'A1', 't')
    result = verify_bm(load_density(cfg), K, N, IntervalSet.parse(A0), IntervalSet.parse(A1), t, cfg.tol)
    report = result.model_dump()
    report['provenance'] = provenance(cfg, 'exact interval masses')
    return report, result.holds


def run_talagrand(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    (alpha,) = cfg.require('alpha')
    h = load_density(cfg)
    rng = np.random.default_rng(cfg.get('seed', config.SEED))
    trials = cfg.get('trials', config.TRIALS)
    worst = None
    for _ in range(trials):
        result = talagrand_check(h, random_measure(h, rng), alpha, cfg.tol)
        if worst is None or result.slack < worst.slack:
            worst = result
    report = {'trials': trials, 'worst': worst.model_dump() if worst else None,
              'provenance': provenance(cfg, 'exact piecewise-linear W2')}
    return report, worst is None or worst.holds


def run_validate(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    K, N = cfg.require('K', 'N')
    result = validate_cd(load_density(cfg), K, N, cfg.tol)
    report = result.model_dump()
    report['provenance'] = provenance(cfg, 'weak and three-point concavity checks')
    return report, result.valid


def _aggregate(d, check: str, cfg: RunConfig):
    K, N, D = cfg.require('K', 'N', 'D')
    if check == 'spectral':
        return aggregate_spectral(d, cfg.get('p', 2.0), K, N, D, cfg.tol)
    if check == 'logsob':
        return aggregate_logsob(d, K, N, D, cfg.get('alpha'), cfg.tol)
    if check == 'sobolev':
        p, q, alpha = cfg.require('p', 'q', 'alpha')
        return aggregate_sobolev(d, p, q, K, N, D, alpha, cfg.tol)
    raise DomainError(f"unknown localization check {check!r}")


def run_localize(cfg: RunConfig) -> Tuple[Dict[str, Any], bool]:
    """Check a disintegration file, or replay a check on seeded random disintegrations"""
    K, N = cfg.require('K', 'N')
    check = cfg.get('check', 'spectral')
    path = cfg.get('disintegration')
    if path:
        d = read_disintegration(path)
        validity = verify_disintegration(d, K, N, cfg.get('D'), cfg.tol)
        report = {'disintegration': validity.model_dump()}
        holds = validity.valid
        if d.fibers and all(f.function is not None for f in d.fibers):
            aggregation = _aggregate(d, check, cfg)
            report['aggregation'] = aggregation.model_dump()
            holds = holds and aggregation.holds
    else:
        (D,) = cfg.require('D')
        rng = np.random.default_rng(cfg.get('seed', config.SEED))
        trials = cfg.get('trials', config.TRIALS)
        worst = None
        for _ in range(trials):
            d = random_disintegration(K, N, D, int(rng.integers(1, 6)), rng, cfg.grid_nodes)
            result = _aggregate(admissible_functions(d, check, rng, cfg.get('p', 2.0)), check, cfg)
            if worst is None or result.global_slack < worst.global_slack:
                worst = result
        report = {'trials': trials, 'check': check, 'worst': worst.model_dump() if worst else None}
        holds = worst is None or worst.holds
    report['provenance'] = provenance(cfg, f'{check} aggregation')
    return report, holds


def parse_range(value: Any) -> List[float]:
    """`start:stop:count`, or a single number"""
    if isinstance(value, (int, float)):
        return [float(value)]
    parts = str(value).split(':')
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            return [float(x) for x in np.linspace(start, stop, count)] if count > 0 else []
    except ValueError:
        pass
    raise DomainError(f"range {value!r} is not of the form start:stop:count")


def sweep_row(point: Tuple[float, float, float, float], constants: Tuple[str, ...], tol: float,
              grid_nodes: int, seed: int) -> Dict[str, Any]:
    p, K, N, D = point
    row: Dict[str, Any] = {'p': p, 'K': K, 'N': N, 'D': D, 'tolerance': tol}
    errors = []
    for name in constants:
        try:
            if name == 'lambda':
                row[name] = lambda_model(p, K, N, D, tol).lambda_
            elif name == 'closed_form':
                row[name] = lambda_closed_form(p, K, N, D)
            elif name == 'li_wang':
                row[name] = li_wang_bound(p, K, N)
            elif name == 'cheeger':
                row[name] = cheeger_model(K, N, D)
            elif name == 'logsob':
                row[name] = logsob_estimate(K, N, D, seed=seed, grid_nodes=grid_nodes, tol=tol).constant_estimate
            elif name == 'logsob_gap':
                row[name] = spectral_logsob_gap(K, N, D, seed=seed, grid_nodes=grid_nodes).gap
        except CdModelsError as e:
            row[name] = math.nan
            errors.append(f"{name}: {e}")
    row['error'] = '; '.join(errors)
    return row


def run_sweep(cfg: RunConfig) -> Tuple[List[Dict[str, Any]], bool]:
    ranges = [parse_range(v) for v in cfg.require('p', 'K', 'N', 'D')]
    if any(not r for r in ranges):
        raise DomainError("sweep range is empty")
    constants = tuple(cfg.get('constants') or ('lambda',))
    unknown = [c for c in constants if c not in SWEEP_CONSTANTS]
    if unknown:
        raise DomainError(f"unknown sweep constants {unknown}; choose from {SWEEP_CONSTANTS}")
    points = list(itertools.product(*ranges))
    args = (constants, cfg.tol, cfg.grid_nodes, cfg.get('seed', config.SEED))
    workers = cfg.get('workers', config.WORKERS)
    logger.info(f"Sweeping {len(points)} parameter tuples on {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, points, *[itertools.repeat(a, len(points)) for a in args]))
    else:
        rows = [sweep_row(point, *args) for point in points]
    # failed rows carry their error and do not fail the sweep
    return rows, True


HANDLERS: Dict[str, Callable[[RunConfig], Tuple[Any, bool]]] = {
    'lambda': run_lambda,
    'cheeger': run_cheeger,
    'logsob': run_logsob,
    'sobolev': run_sobolev,
    'bm': run_bm,
    'talagrand': run_talagrand,
    'validate': run_validate,
    'localize': run_localize,
    'sweep': run_sweep,
}
