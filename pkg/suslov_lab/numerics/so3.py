"""Exact primitives on so(3) and SO(3).

Vectors are identified with skew matrices through the hat map, the algebra
carries the Killing inner product (the Euclidean dot product after the
identification) and the group is measured with the entrywise Euclidean norm
|I - A^T B|. Rotations are *checked* against an orthonormality tolerance but
never re-orthonormalized: drift away from SO(3) is what the integrators are
judged by.
"""
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, field_validator

from suslov_lab.errors import DomainError

Vec3 = NDArray[np.float64]
Rot3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]

TOL_ORTH = 1e-10
SKEW_TOL = 1e-12

_IDENTITY = np.eye(3)


def as_vec3(v: ArrayLike) -> Vec3:
    """Coerce to a finite float 3-vector"""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise DomainError(f"expected 3 components, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"non-finite vector {arr}")
    return arr


def as_mat3(m: ArrayLike) -> Mat3:
    """Coerce to a finite 3x3 float matrix"""
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise DomainError(f"expected a 3x3 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite matrix entries")
    return arr


def hat_matrix(v: Sequence[float]) -> Mat3:
    """Skew matrix of v as a plain array (hot-path form of hat)"""
    x1, x2, x3 = v[0], v[1], v[2]
    return np.array([
        [0.0, -x3, x2],
        [x3, 0.0, -x1],
        [-x2, x1, 0.0],
    ])


class Skew3(BaseModel):
    """Element of so(3), stored by its 3-vector so skewness holds by construction"""
    model_config = ConfigDict(frozen=True)

    vector: tuple[float, float, float]

    @field_validator("vector", mode="before")
    @classmethod
    def _finite(cls, value):
        return tuple(float(x) for x in as_vec3(value))

    @property
    def matrix(self) -> Mat3:
        return hat_matrix(self.vector)

    def as_array(self) -> Vec3:
        return np.array(self.vector)


def hat(v: ArrayLike) -> Skew3:
    return Skew3(vector=as_vec3(v))


def vee(S: Skew3 | ArrayLike) -> Vec3:
    """Inverse of hat; accepts a Skew3 or a 3x3 matrix that is skew to 1e-12"""
    if isinstance(S, Skew3):
        return S.as_array()
    M = as_mat3(S)
    asymmetry = np.max(np.abs(M + M.T))
    if asymmetry > SKEW_TOL:
        raise DomainError(f"matrix is not skew-symmetric (|S + S^T|_max = {asymmetry:.3e})")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def killing_inner(a: ArrayLike, b: ArrayLike) -> float:
    """-1/2 trace(hat(a) hat(b)), which equals a . b"""
    return float(-0.5 * np.trace(hat_matrix(as_vec3(a)) @ hat_matrix(as_vec3(b))))


def algebra_distance(a: ArrayLike, b: ArrayLike) -> float:
    d = as_vec3(a) - as_vec3(b)
    return float(np.sqrt(max(killing_inner(d, d), 0.0)))


def entrywise_norm(M: ArrayLike) -> float:
    """Square root of the sum of squared entries"""
    return float(np.sqrt(np.sum(np.square(M))))


def group_distance(A: ArrayLike, B: ArrayLike) -> float:
    """|I - A^T B|; B may be any 3x3 matrix"""
    return entrywise_norm(_IDENTITY - as_mat3(A).T @ as_mat3(B))


def orthonormality_defect(A: ArrayLike) -> float:
    """|I - A^T A|, the self-distance of A"""
    return group_distance(A, A)


def check_rotation(R: ArrayLike, tol: float = TOL_ORTH) -> Rot3:
    """Return R as an array if its orthonormality defect is within tol"""
    M = as_mat3(R)
    defect = orthonormality_defect(M)
    if defect > tol:
        raise DomainError(f"not a rotation: orthonormality defect {defect:.3e} > {tol:.1e}")
    return M
