"""Cayley retraction on SO(3) and its right-trivialized tangent maps."""
import numpy as np
from numpy.typing import ArrayLike

from suslov_lab.errors import ConstraintError, DomainError
from suslov_lab.numerics.so3 import Mat3, Rot3, Vec3, as_mat3, as_vec3, entrywise_norm, hat_matrix, vee

_IDENTITY = np.eye(3)

CHART_TOL = 1e-10
INVERSE_RESIDUAL_TOL = 1e-9
CONSTRAINT_TOL = 1e-12


def cay(w: ArrayLike) -> Rot3:
    """I + (hat(w) + hat(w)^2 / 2) / (1 + |w/2|^2)"""
    w = as_vec3(w)
    W = hat_matrix(w)
    scale = 1.0 / (1.0 + 0.25 * float(w @ w))
    return _IDENTITY + scale * (W + 0.5 * (W @ W))


def cay_inv(R: ArrayLike) -> Vec3:
    """Chart inverse of cay: vee of the skew part of 2 (R - I)(R + I)^-1.

    Rotations by pi (trace(R) = -1) lie on the chart boundary and raise
    DomainError, as does any R that cay of the result fails to reproduce.
    """
    R = as_mat3(R)
    if abs(np.trace(R) + 1.0) < CHART_TOL:
        raise DomainError("rotation angle is pi: outside the Cayley chart")
    S = 2.0 * (R - _IDENTITY) @ np.linalg.inv(R + _IDENTITY)
    w = vee(0.5 * (S - S.T))
    residual = entrywise_norm(cay(w) - R)
    if residual > INVERSE_RESIDUAL_TOL:
        raise DomainError(f"cay_inv residual {residual:.3e}: input is not a rotation")
    return w


def dcay(w: ArrayLike) -> Mat3:
    """Right-trivialized tangent of cay at w"""
    w = as_vec3(w)
    return (_IDENTITY + 0.5 * hat_matrix(w)) / (1.0 + 0.25 * float(w @ w))


def dcay_inv(w: ArrayLike) -> Mat3:
    """Inverse of dcay: I - hat(w)/2 + w w^T / 4"""
    w = as_vec3(w)
    return _IDENTITY - 0.5 * hat_matrix(w) + 0.25 * np.outer(w, w)


def dcay_inv_scaled(w: ArrayLike, eps: float, unit_corner: bool = False) -> Mat3:
    """dcay_inv(eps * w) restricted to the constrained subspace w3 = 0.

    The default reproduces the constrained matrix from which the variational
    scheme was derived, with a zero (3,3) entry. ``unit_corner=True`` puts the
    value 1 that the generic formula gives there.
    """
    w = as_vec3(w)
    if abs(w[2]) > CONSTRAINT_TOL:
        raise ConstraintError(f"dcay_inv_scaled needs w3 = 0, got {w[2]:.3e}")
    w1, w2 = w[0], w[1]
    h = 0.5 * eps
    q = 0.25 * eps * eps
    return np.array([
        [1.0 + q * w1 * w1, q * w1 * w2, -h * w2],
        [q * w1 * w2, 1.0 + q * w2 * w2, h * w1],
        [h * w2, -h * w1, 1.0 if unit_corner else 0.0],
    ])
