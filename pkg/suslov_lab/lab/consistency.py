"""One-step consistency study of the DREPS schemes.

Each sample takes one step of size eps from (R0, w0) and compares it with the
reference flow. Errors in w and lam are formed from increments relative to w0
so that values near 1e-15 are still resolved; the fit then estimates the
order from log10(err) against log10(eps).
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from suslov_lab.errors import FitError, NonConvergence
from suslov_lab.models.reports import ConsistencyReport, ErrorSample, OffsetFit, SlopeFit
from suslov_lab.models.state import InertiaTensor, NewtonConfig
from suslov_lab.numerics.cayley import cay
from suslov_lab.numerics.continuous import (
    integrate_increments,
    multiplier_form,
    quadratic_increment,
    reconstruct_step,
    reference_increment,
    require_constrained,
)
from suslov_lab.numerics.dreps import DrepsScheme, get_scheme, inconsistency_offset, newton_solve
from suslov_lab.numerics.so3 import as_mat3, entrywise_norm, group_distance, hat_matrix

logger = logging.getLogger(__name__)

ERROR_FLOOR = 1e-17
MIN_SAMPLES = 5
GROUP_AGREEMENT = 1e-12
# Newton residual target relative to the residual at delta = 0
STUDY_RELATIVE_TOL = 1e-14

# Expected log-log slopes; None means the quantity does not vanish with eps
EXPECTED_SLOPES: dict[str, dict[str, float | None]] = {
    "midpoint": {"err_omega": 3.0, "err_lambda": 3.0, "err_group": 2.0, "err_velocity": 2.0},
    "variational": {"err_omega": 3.0, "err_lambda": None, "err_group": 2.0, "err_velocity": 2.0},
    "variational-consistent": {"err_omega": 3.0, "err_lambda": 1.0, "err_group": 2.0, "err_velocity": 2.0},
}

# Schemes whose multiplier error tends to |O0(w0)|
OFFSET_SCHEMES = frozenset({"variational"})


def _compose_attitude(R0: np.ndarray, w0: np.ndarray, midpoint_increments: np.ndarray, h: float) -> np.ndarray:
    R = R0
    for d in midpoint_increments:
        R = R @ cay(h * (w0 + d))
    return R


def reference_flow(
    inertia: InertiaTensor,
    w0: ArrayLike,
    R0: ArrayLike,
    eps: float,
    substeps: int = 1000,
    agreement: float = GROUP_AGREEMENT,
    max_substeps: int = 64000,
) -> tuple[np.ndarray, int]:
    """Attitude of the exact flow at t0 + eps.

    Composes Omega_{j+1} = Omega_j cay(h w(t_j + h/2)) over ``substeps`` pieces,
    with w sampled from a 2 * substeps RK4 run, and doubles the substep count
    until two compositions agree within ``agreement`` in group_distance.
    Returns the attitude and the substep count used; raises NonConvergence
    when the compositions still disagree at ``max_substeps``.
    """
    w0 = require_constrained(w0)
    R0 = as_mat3(R0)

    def compose(n: int) -> np.ndarray:
        h = eps / n
        half_grid = integrate_increments(inertia, w0, 0.5 * h, 2 * n)
        return _compose_attitude(R0, w0, half_grid[1::2], h)

    n = substeps
    refinements = 1
    coarse = compose(n)
    while True:
        fine = compose(2 * n)
        gap = group_distance(coarse, fine)
        if gap <= agreement:
            return fine, 2 * n
        if 2 * n >= max_substeps:
            raise NonConvergence(
                f"reference attitude did not settle: gap {gap:.3e} after {2 * n} substeps",
                iterations=refinements,
                residual_norm=gap,
            )
        refinements += 1
        logger.debug("reference attitude gap %.3e at %d substeps, refining", gap, 2 * n)
        n *= 2
        coarse = fine


def study_newton_config(scheme: DrepsScheme, inertia: InertiaTensor, w0: np.ndarray, eps: float) -> NewtonConfig:
    """Newton settings with the tolerance taken relative to the residual at delta = 0"""
    start = float(np.linalg.norm(scheme.residual_increment(inertia, w0[:2], np.zeros(2), eps)))
    return NewtonConfig(tol=max(STUDY_RELATIVE_TOL * start, np.finfo(float).tiny))


def one_step_errors(
    scheme: DrepsScheme | str,
    inertia: InertiaTensor,
    w0: ArrayLike,
    R0: ArrayLike,
    eps: float,
    cfg: NewtonConfig | None = None,
) -> ErrorSample:
    """Errors of one scheme step against the reference flow at t0 + eps"""
    if isinstance(scheme, str):
        scheme = get_scheme(scheme)
    w0 = require_constrained(w0)
    R0 = as_mat3(R0)
    cfg = cfg or study_newton_config(scheme, inertia, w0, eps)

    step = newton_solve(scheme, inertia, w0, eps, cfg)
    ref_delta, _ = reference_increment(inertia, w0, eps)
    ref_rotation, _ = reference_flow(inertia, w0, R0, eps)

    err_omega = float(np.linalg.norm(ref_delta - step.increment))
    ref_lambda_change = quadratic_increment(multiplier_form(inertia), w0, ref_delta)
    step_lambda_change = scheme.multiplier_increment(inertia, w0, step.increment, eps)
    err_lambda = abs(ref_lambda_change - step_lambda_change)

    rotation = reconstruct_step(R0, w0, eps)
    err_group = group_distance(ref_rotation, rotation)
    ref_velocity = ref_rotation @ hat_matrix(w0 + ref_delta)
    step_velocity = rotation @ hat_matrix(step.omega_next)
    err_velocity = entrywise_norm(ref_velocity - step_velocity)

    logger.debug(
        "%s eps=%.3e: omega %.3e lambda %.3e group %.3e velocity %.3e",
        scheme.name, eps, err_omega, err_lambda, err_group, err_velocity,
    )
    return ErrorSample(
        eps=eps,
        err_omega=err_omega,
        err_lambda=err_lambda,
        err_group=err_group,
        err_velocity=err_velocity,
    )


def _sample(scheme_name: str, inertia_rows: Sequence[float], w0: Sequence[float], R0: Sequence[Sequence[float]], eps: float) -> ErrorSample:
    # module-level so that worker processes can unpickle it
    inertia = InertiaTensor.from_rows(inertia_rows)
    return one_step_errors(scheme_name, inertia, np.asarray(w0), np.asarray(R0), eps)


def collect_samples(
    scheme: DrepsScheme | str,
    inertia: InertiaTensor,
    w0: ArrayLike,
    eps_grid: Iterable[float],
    R0: ArrayLike | None = None,
    workers: int = 1,
) -> list[ErrorSample]:
    """Error samples in grid order; ``workers`` > 1 spreads them over processes"""
    name = scheme if isinstance(scheme, str) else scheme.name
    grid = [float(e) for e in eps_grid]
    w0 = require_constrained(w0)
    R0 = np.eye(3) if R0 is None else as_mat3(R0)
    job = partial(_sample, name, inertia.rows(), w0.tolist(), R0.tolist())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, grid))
    return [job(eps) for eps in grid]


def fit_slope(eps: np.ndarray, err: np.ndarray, quantity: str, expected: float | None = None) -> SlopeFit:
    """Least-squares slope of log10(err) against log10(eps)"""
    x = np.log10(eps)
    y = np.log10(err)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(
        quantity=quantity,
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        n_samples=len(x),
        expected_slope=expected,
    )


def fit_offset(eps: np.ndarray, err: np.ndarray, quantity: str, reference: float | None = None) -> OffsetFit:
    """Least-squares fit of err = offset + rate * eps"""
    rate, offset = np.polyfit(eps, err, 1)
    residual = float(np.sqrt(np.mean((err - (offset + rate * eps)) ** 2)))
    return OffsetFit(quantity=quantity, offset=float(offset), rate=float(rate), residual=residual, reference=reference)


def build_report(
    scheme_name: str,
    inertia: InertiaTensor,
    w0: ArrayLike,
    samples: list[ErrorSample],
    error_floor: float = ERROR_FLOOR,
) -> ConsistencyReport:
    """Fit every quantity of ``samples``; raises FitError on too few or underflowing samples"""
    if len(samples) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples for a slope fit, got {len(samples)}")
    w0 = require_constrained(w0)
    expected = EXPECTED_SLOPES.get(scheme_name, {})
    eps = np.array([s.eps for s in samples])

    fits = {}
    for quantity in ErrorSample.QUANTITIES:
        err = np.array([s.value(quantity) for s in samples])
        if np.any(err < error_floor):
            smallest = float(err.min())
            raise FitError(f"{quantity} underflows the measurable floor {error_floor:.0e} (min {smallest:.3e})")
        fits[quantity] = fit_slope(eps, err, quantity, expected.get(quantity))

    offset = None
    if scheme_name in OFFSET_SCHEMES:
        err = np.array([s.err_lambda for s in samples])
        offset = fit_offset(eps, err, "err_lambda", reference=abs(inconsistency_offset(inertia, w0)))

    return ConsistencyReport(scheme=scheme_name, omega0=w0.tolist(), samples=samples, fits=fits, offset=offset)


def estimate_order(
    scheme: DrepsScheme | str,
    inertia: InertiaTensor,
    w0: ArrayLike,
    eps_grid: Iterable[float],
    R0: ArrayLike | None = None,
    workers: int = 1,
    error_floor: float = ERROR_FLOOR,
) -> ConsistencyReport:
    """Slopes of the one-step errors over ``eps_grid``.

    For the variational scheme the multiplier error is also fitted against
    offset + rate * eps and the offset is compared with |O0(w0)|.
    """
    name = scheme if isinstance(scheme, str) else scheme.name
    grid = [float(e) for e in eps_grid]
    if len(grid) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} step sizes, got {len(grid)}")
    logger.info("consistency study for %s over %d step sizes in [%.2e, %.2e]", name, len(grid), min(grid), max(grid))
    samples = collect_samples(name, inertia, w0, grid, R0=R0, workers=workers)
    report = build_report(name, inertia, w0, samples, error_floor)
    for fit in report.fits.values():
        logger.info("%s %s slope %.3f (residual %.2e)", name, fit.quantity, fit.slope, fit.residual)
    return report
