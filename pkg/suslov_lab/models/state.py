"""Physical data and solver state for the Suslov problem"""
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from suslov_lab.errors import ConstraintError, DegenerateError, DomainError
from suslov_lab.numerics.so3 import TOL_ORTH, as_mat3, as_vec3, orthonormality_defect

STATE_CONSTRAINT_TOL = 1e-13
BLOCK_DET_TOL = 1e-14


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class InertiaTensor(BaseModel):
    """Inertia tensor with a non-degenerate upper-left 2x2 block"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _check(cls, value):
        M = as_mat3(value)
        det_m = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det_m) <= BLOCK_DET_TOL:
            raise DegenerateError(f"upper-left 2x2 inertia block is singular (det = {det_m:.3e})")
        return _frozen(M)

    @classmethod
    def from_rows(cls, values: Sequence[float]) -> "InertiaTensor":
        """Build from 9 numbers given row by row"""
        if len(values) != 9:
            raise DomainError(f"inertia needs 9 row-major entries, got {len(values)}")
        return cls(matrix=np.reshape(np.asarray(values, dtype=float), (3, 3)))

    @property
    def block(self) -> np.ndarray:
        """The 2x2 block I_m"""
        return self.matrix[:2, :2]

    @property
    def block_det(self) -> float:
        M = self.matrix
        return float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])

    @property
    def third_row(self) -> np.ndarray:
        """(I31, I32), the coupling c(w) = I31 w1 + I32 w2 on the constraint plane"""
        return self.matrix[2, :2]

    def is_positive_definite(self) -> bool:
        sym = 0.5 * (self.matrix + self.matrix.T)
        return bool(np.all(np.linalg.eigvalsh(sym) > 0.0))

    def rows(self) -> list[float]:
        return [float(x) for x in self.matrix.reshape(-1)]


class ConstraintCovector(BaseModel):
    """Body-fixed direction a of the vanishing angular-velocity component (unit length)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a: np.ndarray

    @field_validator("a", mode="before")
    @classmethod
    def _normalize(cls, value):
        a = as_vec3(value)
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            raise DegenerateError("constraint covector must be non-zero")
        return _frozen(a / norm)

    @classmethod
    def canonical(cls) -> "ConstraintCovector":
        """a = e3, the classical Suslov constraint w3 = 0"""
        return cls(a=(0.0, 0.0, 1.0))


class SuslovState(BaseModel):
    """Attitude, body angular velocity and time, with w3 = 0"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    omega: np.ndarray
    rotation: np.ndarray = Field(default_factory=lambda: np.eye(3))
    time: float = 0.0

    @field_validator("omega", mode="before")
    @classmethod
    def _constrained(cls, value):
        w = as_vec3(value)
        if abs(w[2]) > STATE_CONSTRAINT_TOL:
            raise ConstraintError(f"state violates w3 = 0 (w3 = {w[2]:.3e})")
        return _frozen(w)

    @field_validator("rotation", mode="before")
    @classmethod
    def _rotation(cls, value):
        R = as_mat3(value)
        defect = orthonormality_defect(R)
        if defect > TOL_ORTH:
            raise DomainError(f"rotation drifted off SO(3): defect {defect:.3e}")
        return _frozen(R)


class NewtonConfig(BaseModel):
    """Settings for the implicit-step Newton solver"""
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-13, gt=0)
    max_iter: int = Field(default=50, ge=1)
    fd_jacobian: bool = False
    fd_step: float = Field(default=1e-7, gt=0)
    condition_limit: float = Field(default=1e12, gt=1)


class StepResult(BaseModel):
    """Outcome of one implicit step"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    omega_next: np.ndarray
    lambda_next: float
    newton_iters: int
    jacobian_condition: float
    increment: np.ndarray
    residual_norm: float = 0.0
