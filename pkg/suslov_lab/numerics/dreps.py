"""Discrete reduced Euler-Poincare-Suslov (DREPS) one-step maps.

Every scheme here advances (w1, w2) on the constraint plane w3 = 0 through an
implicit two-component relation and then assigns the multiplier. The Newton
solver works on the increment delta = w_{k+1} - w_k; the third component is
structurally zero, so the reduced constraint holds exactly for every step.

Schemes:
    midpoint               implicit midpoint rule on the decoupled ODE, with
                           lam_{k+1} = lam(w_{k+1})
    variational            the Cayley variational scheme with the discrete
                           Lagrangian eps * l; its multiplier keeps an O(1)
                           offset as eps -> 0
    variational-consistent same w update; multiplier from the unit-corner
                           inverse tangent, which removes the offset
"""
import logging
from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np
from numpy.typing import ArrayLike

from suslov_lab.errors import DomainError, NonConvergence, SingularJacobian
from suslov_lab.models.state import InertiaTensor, NewtonConfig, StepResult, SuslovState
from suslov_lab.numerics.cayley import dcay_inv_scaled
from suslov_lab.numerics.continuous import (
    inertial_offset,
    multiplier_form,
    quadratic_increment,
    reconstruct_step,
    require_constrained,
    spin_coupling,
    spin_coupling_form,
    suslov_multiplier,
)

logger = logging.getLogger(__name__)

_ROUNDOFF = 4.0 * np.finfo(float).eps
_ROTATE = np.array([[0.0, -1.0], [1.0, 0.0]])
_E3 = np.array([0.0, 0.0, 1.0])


def _planar(w: ArrayLike) -> np.ndarray:
    return np.asarray(w, dtype=float)[:2]


def _coupling(inertia: InertiaTensor, x: np.ndarray) -> float:
    """c(x) = I31 x1 + I32 x2"""
    return float(inertia.third_row @ x)


def _gyroscopic(inertia: InertiaTensor, x: np.ndarray) -> np.ndarray:
    """c(x) (-x2, x1): the right-hand side of I_m dw/dt on the constraint plane"""
    return _coupling(inertia, x) * np.array([-x[1], x[0]])


def _gyroscopic_jacobian(inertia: InertiaTensor, x: np.ndarray) -> np.ndarray:
    return np.outer([-x[1], x[0]], inertia.third_row) + _coupling(inertia, x) * _ROTATE


def _cubic(inertia: InertiaTensor, x: np.ndarray) -> np.ndarray:
    """x x^T I_m x"""
    return x * float(x @ (inertia.block @ x))


def _cubic_jacobian(inertia: InertiaTensor, x: np.ndarray) -> np.ndarray:
    M = inertia.block
    return float(x @ (M @ x)) * np.eye(2) + np.outer(x, (M + M.T) @ x)


# -- midpoint ---------------------------------------------------------------

def _midpoint_increment_residual(inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
    if eps == 0.0:
        raise DomainError("midpoint residual is undefined at eps = 0")
    mid = w_k + 0.5 * delta
    return inertia.block @ delta / eps - _gyroscopic(inertia, mid)


def _midpoint_increment_jacobian(inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
    mid = w_k + 0.5 * delta
    return inertia.block / eps - 0.5 * _gyroscopic_jacobian(inertia, mid)


def midpoint_residual(inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike, eps: float) -> np.ndarray:
    """I_m (w_{k+1} - w_k) / eps - (l1, l2) at the midpoint"""
    w_k = _planar(require_constrained(w_k))
    w_next = _planar(require_constrained(w_next))
    return _midpoint_increment_residual(inertia, w_k, w_next - w_k, eps)


def midpoint_multiplier(inertia: InertiaTensor, w_next: ArrayLike) -> float:
    """lam_{k+1} = lam(w_{k+1})"""
    return suslov_multiplier(inertia, w_next)


# -- variational ------------------------------------------------------------

def _variational_increment_residual(inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
    w_next = w_k + delta
    # (l1, l2) enter with the opposite sign: I_m dw/dt = -(c w2, -c w1)
    trapezoid = -(_gyroscopic(inertia, w_next) + _gyroscopic(inertia, w_k))
    return (
        inertia.block @ delta
        + 0.5 * eps * trapezoid
        + 0.25 * eps * eps * (_cubic(inertia, w_next) - _cubic(inertia, w_k))
    )


def _variational_increment_jacobian(inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
    w_next = w_k + delta
    return (
        inertia.block
        - 0.5 * eps * _gyroscopic_jacobian(inertia, w_next)
        + 0.25 * eps * eps * _cubic_jacobian(inertia, w_next)
    )


def variational_residual(inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike, eps: float) -> np.ndarray:
    """Dynamical part of the Cayley variational scheme (two components)"""
    w_k = _planar(require_constrained(w_k))
    w_next = _planar(require_constrained(w_next))
    return _variational_increment_residual(inertia, w_k, w_next - w_k, eps)


def variational_multiplier(inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike) -> float:
    """Average of spin_coupling at both ends (already rescaled by the step)"""
    w_k = require_constrained(w_k)
    w_next = require_constrained(w_next)
    return 0.5 * (spin_coupling(inertia, w_next) + spin_coupling(inertia, w_k))


def consistent_multiplier(inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike, eps: float) -> float:
    """Multiplier from the unit-corner inverse tangent: (c_{k+1} - c_k) / eps + the averaged spin coupling"""
    w_k = require_constrained(w_k)
    w_next = require_constrained(w_next)
    rate = _coupling(inertia, _planar(w_next) - _planar(w_k)) / eps
    return rate + variational_multiplier(inertia, w_k, w_next)


def inconsistency_offset(inertia: InertiaTensor, w: ArrayLike) -> float:
    """O0(w): limit of lam(t_k + eps) - lam_{k+1} for the variational scheme as eps -> 0"""
    return inertial_offset(inertia, require_constrained(w))


def variational_algebra_residual(
    inertia: InertiaTensor,
    w_k: ArrayLike,
    w_next: ArrayLike,
    lam_raw: float,
    eps: float,
    unit_corner: bool = False,
) -> np.ndarray:
    """Algebra-level variational DREPS with discrete Lagrangian eps * l.

    eps [dcay^-1_{eps w_{k+1}}^T I w_{k+1} - dcay^-1_{-eps w_k}^T I w_k] - lam_raw e3.
    The first two components are eps times ``variational_residual``; the
    third vanishes for lam_raw = eps^2 * lam_{k+1} of the matching multiplier.
    """
    w_k = require_constrained(w_k)
    w_next = require_constrained(w_next)
    M = inertia.matrix
    forward = dcay_inv_scaled(w_next, eps, unit_corner).T @ (M @ w_next)
    backward = dcay_inv_scaled(w_k, -eps, unit_corner).T @ (M @ w_k)
    return eps * (forward - backward) - lam_raw * _E3


# -- scheme interface -------------------------------------------------------

class DrepsScheme(ABC):
    """Implicit one-step map on the constraint plane.

    ``residual`` and ``multiplier`` take full 3-vectors; the increment forms
    take the planar increment delta = (w_{k+1} - w_k)[:2] and are what the
    solver iterates on.
    """
    name: ClassVar[str]

    @abstractmethod
    def residual_increment(self, inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
        ...

    @abstractmethod
    def jacobian(self, inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
        ...

    @abstractmethod
    def multiplier(self, inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike, eps: float) -> float:
        ...

    @abstractmethod
    def multiplier_increment(self, inertia: InertiaTensor, w_k: ArrayLike, delta: ArrayLike, eps: float) -> float:
        """lam_{k+1} - lam(w_k), computed without cancellation against w_k"""

    @abstractmethod
    def leading_operator(self, inertia: InertiaTensor, eps: float) -> np.ndarray:
        """The part of the residual that is linear in delta, used to precondition fixed-point sweeps"""

    def residual(self, inertia: InertiaTensor, w_k: ArrayLike, w_next: ArrayLike, eps: float) -> np.ndarray:
        w_k = _planar(require_constrained(w_k))
        w_next = _planar(require_constrained(w_next))
        return self.residual_increment(inertia, w_k, w_next - w_k, eps)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class MidpointScheme(DrepsScheme):
    name = "midpoint"

    def residual_increment(self, inertia, w_k, delta, eps):
        return _midpoint_increment_residual(inertia, _planar(w_k), _planar(delta), eps)

    def jacobian(self, inertia, w_k, delta, eps):
        return _midpoint_increment_jacobian(inertia, _planar(w_k), _planar(delta), eps)

    def multiplier(self, inertia, w_k, w_next, eps):
        return midpoint_multiplier(inertia, w_next)

    def multiplier_increment(self, inertia, w_k, delta, eps):
        return quadratic_increment(multiplier_form(inertia), w_k, delta)

    def leading_operator(self, inertia, eps):
        return inertia.block / eps


class VariationalScheme(DrepsScheme):
    name = "variational"

    def residual_increment(self, inertia, w_k, delta, eps):
        return _variational_increment_residual(inertia, _planar(w_k), _planar(delta), eps)

    def jacobian(self, inertia, w_k, delta, eps):
        return _variational_increment_jacobian(inertia, _planar(w_k), _planar(delta), eps)

    def multiplier(self, inertia, w_k, w_next, eps):
        return variational_multiplier(inertia, w_k, w_next)

    def multiplier_increment(self, inertia, w_k, delta, eps):
        # 1/2 (g(w_k + delta) + g(w_k)) - lam(w_k) = 1/2 [g(w_k + delta) - g(w_k)] - O0(w_k)
        half_change = 0.5 * quadratic_increment(spin_coupling_form(inertia), w_k, delta)
        return half_change - inertial_offset(inertia, w_k)

    def leading_operator(self, inertia, eps):
        return np.array(inertia.block)


class ConsistentVariationalScheme(VariationalScheme):
    name = "variational-consistent"

    def multiplier(self, inertia, w_k, w_next, eps):
        return consistent_multiplier(inertia, w_k, w_next, eps)

    def multiplier_increment(self, inertia, w_k, delta, eps):
        rate = _coupling(inertia, _planar(delta)) / eps
        return rate + super().multiplier_increment(inertia, w_k, delta, eps)


SCHEMES: dict[str, DrepsScheme] = {
    scheme.name: scheme
    for scheme in (MidpointScheme(), VariationalScheme(), ConsistentVariationalScheme())
}


def get_scheme(name: str) -> DrepsScheme:
    try:
        return SCHEMES[name]
    except KeyError:
        raise DomainError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


# -- solvers ----------------------------------------------------------------

def finite_difference_jacobian(
    scheme: DrepsScheme, inertia: InertiaTensor, w_k: np.ndarray, delta: np.ndarray, eps: float, step: float = 1e-7
) -> np.ndarray:
    """Central-difference Jacobian of the increment residual"""
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        J[:, j] = (
            scheme.residual_increment(inertia, w_k, delta + e, eps)
            - scheme.residual_increment(inertia, w_k, delta - e, eps)
        ) / (2.0 * step)
    return J


def _finish(scheme, inertia, w_k, delta, eps, iterations, residual_norm, condition) -> StepResult:
    omega_next = np.array([w_k[0] + delta[0], w_k[1] + delta[1], 0.0])
    return StepResult(
        omega_next=omega_next,
        lambda_next=scheme.multiplier(inertia, w_k, omega_next, eps),
        newton_iters=iterations,
        jacobian_condition=condition,
        increment=np.array([delta[0], delta[1], 0.0]),
        residual_norm=residual_norm,
    )


def newton_solve(
    scheme: DrepsScheme,
    inertia: InertiaTensor,
    w_k: ArrayLike,
    eps: float,
    cfg: NewtonConfig | None = None,
) -> StepResult:
    """Solve scheme.residual(w_k, w_next, eps) = 0 for w_next, starting at w_next = w_k.

    Converges when the residual 2-norm drops to cfg.tol, or when the Newton
    correction can no longer change the increment in floating point.
    Raises SingularJacobian when the Jacobian condition number exceeds
    cfg.condition_limit and NonConvergence after cfg.max_iter iterations.
    """
    cfg = cfg or NewtonConfig()
    w_k = require_constrained(w_k)
    planar = w_k[:2].copy()
    delta = np.zeros(2)

    def jacobian_at(d: np.ndarray) -> np.ndarray:
        if cfg.fd_jacobian:
            return finite_difference_jacobian(scheme, inertia, planar, d, eps, cfg.fd_step)
        return scheme.jacobian(inertia, planar, d, eps)

    residual_norm = float("inf")
    for iteration in range(1, cfg.max_iter + 1):
        F = scheme.residual_increment(inertia, planar, delta, eps)
        residual_norm = float(np.linalg.norm(F))
        J = jacobian_at(delta)
        condition = float(np.linalg.cond(J))
        if residual_norm <= cfg.tol:
            return _finish(scheme, inertia, w_k, delta, eps, iteration, residual_norm, condition)
        if not np.isfinite(condition) or condition > cfg.condition_limit:
            raise SingularJacobian(
                f"{scheme.name}: Jacobian condition {condition:.3e} exceeds {cfg.condition_limit:.1e}",
                iterations=iteration,
                residual_norm=residual_norm,
                condition=condition,
            )
        correction = np.linalg.solve(J, F)
        delta = delta - correction
        if float(np.linalg.norm(correction)) <= _ROUNDOFF * float(np.linalg.norm(delta)):
            F = scheme.residual_increment(inertia, planar, delta, eps)
            logger.debug("%s: stopped at round-off, residual %.3e", scheme.name, np.linalg.norm(F))
            return _finish(scheme, inertia, w_k, delta, eps, iteration, float(np.linalg.norm(F)), condition)

    raise NonConvergence(
        f"{scheme.name}: Newton did not converge in {cfg.max_iter} iterations (residual {residual_norm:.3e})",
        iterations=cfg.max_iter,
        residual_norm=residual_norm,
    )


def fixed_point_solve(
    scheme: DrepsScheme,
    inertia: InertiaTensor,
    w_k: ArrayLike,
    eps: float,
    damping: float = 0.5,
    tol: float = 1e-16,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Damped Picard iteration delta <- delta - t P^-1 F(delta), P the linear part of the scheme.

    For the midpoint rule this is delta <- (1 - t) delta + t eps I_m^-1 l(w_k + delta / 2).
    It never touches the Jacobian, so it cross-checks ``newton_solve``.
    Returns w_{k+1}.
    """
    w_k = require_constrained(w_k)
    planar = w_k[:2]
    leading = scheme.leading_operator(inertia, eps)
    delta = np.zeros(2)
    change = float("inf")
    for _ in range(max_iter):
        F = scheme.residual_increment(inertia, planar, delta, eps)
        updated = delta - damping * np.linalg.solve(leading, F)
        change = float(np.linalg.norm(updated - delta))
        delta = updated
        if change <= tol * max(1.0, float(np.linalg.norm(delta))):
            break
    else:
        raise NonConvergence(
            f"{scheme.name}: fixed-point iteration did not settle",
            iterations=max_iter,
            residual_norm=change,
        )
    return np.array([planar[0] + delta[0], planar[1] + delta[1], 0.0])


def dreps_step(
    scheme: DrepsScheme,
    inertia: InertiaTensor,
    state: SuslovState,
    eps: float,
    cfg: NewtonConfig | None = None,
) -> tuple[SuslovState, StepResult]:
    """Advance (Omega_k, w_k) to (Omega_{k+1}, w_{k+1}).

    The attitude moves with the current velocity, Omega_{k+1} = Omega_k cay(eps w_k);
    the velocity comes from the implicit scheme. The attitude rate at either
    end is available as ``attitude_rate(state.rotation, state.omega)``.
    """
    w_k = require_constrained(state.omega)
    rotation = reconstruct_step(state.rotation, w_k, eps)
    result = newton_solve(scheme, inertia, w_k, eps, cfg)
    next_state = SuslovState(omega=result.omega_next, rotation=rotation, time=state.time + eps)
    return next_state, result
