"""Trajectory runs and method comparisons"""
import logging
import time
from typing import Iterator

import numpy as np

from suslov_lab.errors import ConfigError, NonConvergence
from suslov_lab.models.reports import ComparisonSummary, RunSummary, TrajectoryRow
from suslov_lab.models.run_config import RunConfig
from suslov_lab.models.state import ConstraintCovector, StepResult, SuslovState
from suslov_lab.numerics.continuous import (
    reconstruct_step,
    reduced_energy,
    rk4_step,
    suslov_multiplier,
    unreduced_constraint_residual,
)
from suslov_lab.numerics.dreps import dreps_step, get_scheme
from suslov_lab.numerics.so3 import orthonormality_defect

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 10_000


class TrajectoryRunner:
    """Steps one configured method from (I, w0) and yields a row per time level"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.inertia = config.inertia_tensor
        self.covector = ConstraintCovector.canonical()
        self.summary = RunSummary(method=config.method, eps=config.eps, t_final=config.t_final)
        self._energy0 = reduced_energy(self.inertia, config.omega0_array)

    def _row(self, state: SuslovState, lam: float) -> TrajectoryRow:
        w = state.omega
        a = self.covector.a
        return TrajectoryRow(
            t=state.time,
            omega=(float(w[0]), float(w[1]), float(w[2])),
            lam=lam,
            energy=reduced_energy(self.inertia, w),
            reduced_residual=abs(float(a @ w)),
            unreduced_residual=abs(unreduced_constraint_residual(state.rotation, w, self.covector)),
            orthonormality_defect=orthonormality_defect(state.rotation),
            rotation=tuple(float(x) for x in state.rotation.reshape(-1)),
        )

    def _track(self, row: TrajectoryRow, result: StepResult | None = None):
        s = self.summary
        s.rows += 1
        s.max_energy_error = max(s.max_energy_error, abs(row.energy - self._energy0))
        s.max_reduced_residual = max(s.max_reduced_residual, row.reduced_residual)
        s.max_unreduced_residual = max(s.max_unreduced_residual, row.unreduced_residual)
        s.max_orthonormality_defect = max(s.max_orthonormality_defect, row.orthonormality_defect)
        discrepancy = abs(row.lam - suslov_multiplier(self.inertia, row.omega))
        s.max_lambda_discrepancy = max(s.max_lambda_discrepancy, discrepancy)
        if result is not None:
            s.max_newton_iters = max(s.max_newton_iters, result.newton_iters)
            s.max_jacobian_condition = max(s.max_jacobian_condition, result.jacobian_condition)

    def _advance(self, state: SuslovState, step_index: int) -> tuple[SuslovState, float, StepResult | None]:
        eps = self.config.eps
        # t_k = k eps keeps the time column free of accumulated rounding
        t_next = step_index * eps
        if self.config.method == "rk4":
            omega = rk4_step(self.inertia, state.omega, eps)
            rotation = reconstruct_step(state.rotation, state.omega, eps)
            next_state = SuslovState(omega=omega, rotation=rotation, time=t_next)
            return next_state, suslov_multiplier(self.inertia, omega), None
        scheme = get_scheme(self.config.method)
        try:
            next_state, result = dreps_step(scheme, self.inertia, state, eps, self.config.newton_config)
        except NonConvergence as e:
            raise e.at_step(step_index) from e
        next_state = next_state.model_copy(update={"time": t_next})
        return next_state, result.lambda_next, result

    def rows(self) -> Iterator[TrajectoryRow]:
        """Rows for t_k = k eps, k = 0..step_count"""
        config = self.config
        start = time.time()
        self.summary = RunSummary(method=config.method, eps=config.eps, t_final=config.t_final, energy0=self._energy0)
        state = SuslovState(omega=config.omega0_array)
        row = self._row(state, suslov_multiplier(self.inertia, state.omega))
        self._track(row)
        yield row

        n_steps = config.step_count
        logger.info("running %s: %d steps of %.3e", config.method, n_steps, config.eps)
        for k in range(1, n_steps + 1):
            state, lam, result = self._advance(state, k)
            row = self._row(state, lam)
            self._track(row, result)
            self.summary.steps = k
            if k % PROGRESS_EVERY == 0:
                logger.debug("%s: step %d of %d", config.method, k, n_steps)
            yield row
        # includes the time a streaming consumer spends between rows
        self.summary.execution_time_seconds = time.time() - start

    def run(self) -> tuple[list[TrajectoryRow], RunSummary]:
        rows = list(self.rows())
        return rows, self.summary


def run_trajectory(config: RunConfig) -> tuple[list[TrajectoryRow], RunSummary]:
    return TrajectoryRunner(config).run()


def compare_runs(
    first: RunConfig, second: RunConfig
) -> tuple[list[TrajectoryRow], list[TrajectoryRow], ComparisonSummary]:
    """Run two configurations on the same time grid and measure their disagreement"""
    if first.eps != second.eps or first.t_final != second.t_final:
        raise ConfigError("compared runs must share eps and t_final")
    if first.inertia != second.inertia or first.omega0 != second.omega0:
        logger.warning("compared runs start from different inertia or initial velocity")

    rows_a, summary_a = run_trajectory(first)
    rows_b, summary_b = run_trajectory(second)

    max_omega = 0.0
    max_lambda = 0.0
    for a, b in zip(rows_a, rows_b):
        max_omega = max(max_omega, float(np.linalg.norm(np.subtract(a.omega, b.omega))))
        max_lambda = max(max_lambda, abs(a.lam - b.lam))

    summary = ComparisonSummary(
        first=summary_a,
        second=summary_b,
        max_omega_difference=max_omega,
        max_lambda_difference=max_lambda,
    )
    logger.info("lower energy error: %s", summary.lower_energy_error())
    return rows_a, rows_b, summary
