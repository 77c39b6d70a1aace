"""Continuous Suslov dynamics on SO(3).

With a = e3 the Euler-Poincare-Suslov equations decouple into an ODE for
(w1, w2) and an algebraic expression for the multiplier. Both are written
out in closed form here; ``eliminate_multiplier`` derives the same pair from
the general projected form and serves as an independent oracle.

Indices follow the inertia tensor: ``i31`` is I[2, 0] and so on, and every
sum I_ki w_i runs over i in {1, 2} because w3 = 0.
"""
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from suslov_lab.errors import ConstraintError, DegenerateError, NonConvergence
from suslov_lab.models.state import ConstraintCovector, InertiaTensor
from suslov_lab.numerics.cayley import cay
from suslov_lab.numerics.so3 import Mat3, Rot3, Vec3, as_mat3, as_vec3, hat_matrix

CONSTRAINT_TOL = 1e-12
COMPLIANCE_TOL = 1e-14


class PlanarCoefficients(NamedTuple):
    """Inertia entries used on the constraint plane, as plain floats"""
    i11: float
    i12: float
    i21: float
    i22: float
    i31: float
    i32: float
    det: float


def planar_coefficients(inertia: InertiaTensor) -> PlanarCoefficients:
    M = inertia.matrix
    return PlanarCoefficients(
        float(M[0, 0]), float(M[0, 1]), float(M[1, 0]), float(M[1, 1]),
        float(M[2, 0]), float(M[2, 1]), inertia.block_det,
    )


def require_constrained(w: ArrayLike) -> Vec3:
    w = as_vec3(w)
    if abs(w[2]) > CONSTRAINT_TOL:
        raise ConstraintError(f"angular velocity violates w3 = 0 (w3 = {w[2]:.3e})")
    return w


def reduced_lagrangian(inertia: InertiaTensor, w: ArrayLike) -> float:
    """l(w) = 1/2 <I w, w>"""
    w = as_vec3(w)
    return 0.5 * float(w @ (inertia.matrix @ w))


def lagrangian_gradient(inertia: InertiaTensor, w: ArrayLike) -> Vec3:
    """dl/dw = 1/2 (I + I^T) w"""
    w = as_vec3(w)
    M = inertia.matrix
    return 0.5 * (M @ w + M.T @ w)


def reduced_energy(inertia: InertiaTensor, w: ArrayLike) -> float:
    """E_l = <dl/dw, w> - l, which is 1/2 <I w, w> for the quadratic Lagrangian"""
    w = as_vec3(w)
    return float(lagrangian_gradient(inertia, w) @ w) - reduced_lagrangian(inertia, w)


def _planar_rhs(k: PlanarCoefficients, w1: float, w2: float) -> tuple[float, float]:
    c = k.i31 * w1 + k.i32 * w2
    return (
        -(k.i22 * w2 + k.i12 * w1) * c / k.det,
        (k.i21 * w2 + k.i11 * w1) * c / k.det,
    )


def suslov_rhs(inertia: InertiaTensor, w: ArrayLike) -> Vec3:
    """(dw1/dt, dw2/dt, 0) of the decoupled Suslov ODE"""
    w = require_constrained(w)
    d1, d2 = _planar_rhs(planar_coefficients(inertia), w[0], w[1])
    return np.array([d1, d2, 0.0])


def spin_coupling(inertia: InertiaTensor, w: ArrayLike) -> float:
    """w1 (I_2i w_i) - w2 (I_1i w_i), the third component of w x I w on the constraint plane"""
    w = as_vec3(w)
    k = planar_coefficients(inertia)
    w1, w2 = w[0], w[1]
    return w1 * (k.i21 * w1 + k.i22 * w2) - w2 * (k.i11 * w1 + k.i12 * w2)


def inertial_offset(inertia: InertiaTensor, w: ArrayLike) -> float:
    """I_3i dw_i/dt along the flow: the part of the multiplier carried by the off-diagonal inertia"""
    w = as_vec3(w)
    k = planar_coefficients(inertia)
    w1, w2 = w[0], w[1]
    c = k.i31 * w1 + k.i32 * w2
    return c / k.det * (
        (k.i32 * k.i21 - k.i31 * k.i22) * w2 + (k.i32 * k.i11 - k.i31 * k.i12) * w1
    )


def suslov_multiplier(inertia: InertiaTensor, w: ArrayLike) -> float:
    """Lagrange multiplier enforcing w3 = 0 at the state w"""
    w = require_constrained(w)
    return spin_coupling(inertia, w) + inertial_offset(inertia, w)


def multiplier_form(inertia: InertiaTensor) -> np.ndarray:
    """Symmetric 2x2 matrix Q with suslov_multiplier(w) = (w1, w2) Q (w1, w2)^T"""
    k = planar_coefficients(inertia)
    p1 = k.i32 * k.i11 - k.i31 * k.i12
    p2 = k.i32 * k.i21 - k.i31 * k.i22
    q11 = k.i21 + k.i31 * p1 / k.det
    q22 = -k.i12 + k.i32 * p2 / k.det
    q12 = 0.5 * (k.i22 - k.i11 + (k.i31 * p2 + k.i32 * p1) / k.det)
    return np.array([[q11, q12], [q12, q22]])


def spin_coupling_form(inertia: InertiaTensor) -> np.ndarray:
    """Symmetric 2x2 matrix G with spin_coupling(w) = (w1, w2) G (w1, w2)^T"""
    k = planar_coefficients(inertia)
    g12 = 0.5 * (k.i22 - k.i11)
    return np.array([[k.i21, g12], [g12, -k.i12]])


def quadratic_increment(Q: np.ndarray, w: ArrayLike, delta: ArrayLike) -> float:
    """q(w + delta) - q(w) for q(x) = x^T Q x, evaluated as delta^T Q (2 w + delta)"""
    w2 = np.asarray(w, dtype=float)[:2]
    d2 = np.asarray(delta, dtype=float)[:2]
    return float(d2 @ (Q @ (2.0 * w2 + d2)))


def eliminate_multiplier(
    inertia: InertiaTensor,
    covector: ConstraintCovector,
    w: ArrayLike,
) -> tuple[Vec3, float]:
    """Projected Euler-Poincare-Suslov vector field for a general constraint a.

    Differentiating <a, w> = 0 along I dw/dt = I w x w + lam a gives
    lam = -<a, f> / <a, I^-1 a> with f = I^-1 (I w x w); the returned field
    f + lam I^-1 a is tangent to the constraint plane.
    """
    if not inertia.is_positive_definite():
        raise DegenerateError("inertia must be positive-definite to eliminate the multiplier")
    a = covector.a
    w = as_vec3(w)
    if abs(float(a @ w)) > CONSTRAINT_TOL:
        raise ConstraintError(f"<a, w> = {float(a @ w):.3e} is not zero")
    M = inertia.matrix
    f = np.linalg.solve(M, np.cross(M @ w, w))
    compliance_a = np.linalg.solve(M, a)
    C = float(a @ compliance_a)
    if C <= COMPLIANCE_TOL:
        raise DegenerateError(f"constraint compliance <a, I^-1 a> = {C:.3e} is degenerate")
    lam = -float(a @ f) / C
    return f + lam * compliance_a, lam


def rk4_step(inertia: InertiaTensor, w: ArrayLike, eps: float) -> Vec3:
    """One classical Runge-Kutta step of the Suslov ODE; w3 stays exactly 0"""
    w = require_constrained(w)
    d1, d2 = _rk4_planar(planar_coefficients(inertia), w[0], w[1], 0.0, 0.0, eps)
    return np.array([w[0] + d1, w[1] + d2, 0.0])


def _rk4_planar(
    k: PlanarCoefficients, w1: float, w2: float, d1: float, d2: float, h: float
) -> tuple[float, float]:
    """Advance the increment (d1, d2) of the state w + d by one RK4 step"""
    x1, x2 = w1 + d1, w2 + d2
    a1, a2 = _planar_rhs(k, x1, x2)
    b1, b2 = _planar_rhs(k, x1 + 0.5 * h * a1, x2 + 0.5 * h * a2)
    c1, c2 = _planar_rhs(k, x1 + 0.5 * h * b1, x2 + 0.5 * h * b2)
    e1, e2 = _planar_rhs(k, x1 + h * c1, x2 + h * c2)
    return (
        d1 + h / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + e1),
        d2 + h / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + e2),
    )


def integrate_increments(inertia: InertiaTensor, w0: ArrayLike, eps: float, n_steps: int) -> np.ndarray:
    """RK4 increments w(t_j) - w0 for j = 0..n_steps, accumulated apart from w0.

    Summing small increments onto a separate accumulator keeps the rounding
    error relative to the increment rather than to |w0|.
    """
    w0 = require_constrained(w0)
    k = planar_coefficients(inertia)
    out = np.zeros((n_steps + 1, 3))
    d1 = d2 = 0.0
    for j in range(1, n_steps + 1):
        d1, d2 = _rk4_planar(k, w0[0], w0[1], d1, d2, eps)
        out[j, 0] = d1
        out[j, 1] = d2
    return out


def integrate_reference(inertia: InertiaTensor, w0: ArrayLike, eps: float, n_steps: int) -> np.ndarray:
    """RK4 trajectory of shape (n_steps + 1, 3) starting at w0"""
    w0 = require_constrained(w0)
    return w0 + integrate_increments(inertia, w0, eps, n_steps)


def reference_increment(
    inertia: InertiaTensor,
    w0: ArrayLike,
    eps: float,
    substeps: int = 1000,
    agreement: float = 1e-13,
    max_substeps: int = 64000,
) -> tuple[Vec3, int]:
    """Increment w(t0 + eps) - w0 of the exact flow, by RK4 with substep refinement.

    Starts from eps / substeps and halves the substep until two successive
    results agree within ``agreement``. Returns the finer increment and the
    substep count that produced it. Raises NonConvergence when the results
    still disagree at ``max_substeps``.
    """
    n = substeps
    refinements = 1
    coarse = integrate_increments(inertia, w0, eps / n, n)[-1]
    while True:
        fine = integrate_increments(inertia, w0, eps / (2 * n), 2 * n)[-1]
        gap = float(np.linalg.norm(fine - coarse))
        if gap <= agreement:
            return fine, 2 * n
        if 2 * n >= max_substeps:
            raise NonConvergence(
                f"reference flow did not settle: gap {gap:.3e} after {2 * n} substeps",
                iterations=refinements,
                residual_norm=gap,
            )
        refinements += 1
        n *= 2
        coarse = fine


def reconstruct_step(R: ArrayLike, w: ArrayLike, eps: float) -> Rot3:
    """Omega_{k+1} = Omega_k cay(eps w_k)"""
    return as_mat3(R) @ cay(eps * as_vec3(w))


def unreduced_constraint_residual(R: ArrayLike, w: ArrayLike, a: ArrayLike | ConstraintCovector) -> float:
    """<a Omega^T, Omega hat(w)>, i.e. a . (Omega^T Omega) w"""
    if isinstance(a, ConstraintCovector):
        a = a.a
    R = as_mat3(R)
    return float(as_vec3(a) @ (R.T @ R) @ as_vec3(w))


def attitude_rate(R: ArrayLike, w: ArrayLike) -> Mat3:
    """Reconstructed attitude velocity Omega hat(w)"""
    return as_mat3(R) @ hat_matrix(as_vec3(w))
