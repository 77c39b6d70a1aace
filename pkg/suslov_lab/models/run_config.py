from math import floor
from typing import Any, Literal, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from suslov_lab.errors import ConfigError, SuslovError
from suslov_lab.models.state import InertiaTensor, NewtonConfig

Method = Literal["midpoint", "variational", "variational-consistent", "rk4"]

STEP_SLACK = 1e-9


class RunConfig(BaseModel):
    """Validated experiment configuration"""
    model_config = ConfigDict(frozen=True, extra="ignore")

    inertia: tuple[float, ...] = Field(min_length=9, max_length=9)
    omega0: tuple[float, float, float]
    eps: float = Field(gt=0.0)
    t_final: float = Field(gt=0.0)
    method: Method = "midpoint"
    output: str = "trajectory.csv"
    emit_plots: bool = False
    eps_min: float = -3.5
    eps_max: float = -1.5
    eps_count: int = Field(default=8, ge=5)
    newton_tol: float = Field(default=1e-13, gt=0.0)
    newton_max_iter: int = Field(default=50, ge=1)
    workers: int = Field(default=1, ge=1)
    log_level: str = "INFO"

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.t_final < self.eps:
            raise ValueError(f"t_final ({self.t_final}) must be at least eps ({self.eps})")
        if abs(self.omega0[2]) > 1e-13:
            raise ValueError(f"omega0 violates the constraint w3 = 0 (w3 = {self.omega0[2]})")
        if self.eps_min >= self.eps_max:
            raise ValueError("eps_min must be below eps_max")
        # raises DegenerateError for a singular block
        InertiaTensor.from_rows(self.inertia)
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        """Validate a raw mapping, reporting every failure as ConfigError"""
        try:
            return cls.model_validate(dict(values))
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        except SuslovError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_mapping(values)

    @property
    def inertia_tensor(self) -> InertiaTensor:
        return InertiaTensor.from_rows(self.inertia)

    @property
    def omega0_array(self) -> np.ndarray:
        return np.array(self.omega0, dtype=float)

    @property
    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(tol=self.newton_tol, max_iter=self.newton_max_iter)

    @property
    def step_count(self) -> int:
        """Number of steps; the trajectory has step_count + 1 rows at t_k = k * eps"""
        return floor(self.t_final / self.eps + STEP_SLACK)

    def eps_grid(self) -> np.ndarray:
        return np.logspace(self.eps_min, self.eps_max, self.eps_count)
