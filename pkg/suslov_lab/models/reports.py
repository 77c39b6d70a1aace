from datetime import datetime
from math import isfinite
from typing import ClassVar, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ErrorSample(BaseModel):
    """One-step errors of a scheme against the reference flow at a single step size"""
    model_config = ConfigDict(frozen=True)

    eps: float = Field(gt=0.0)
    err_omega: float = Field(ge=0.0)
    err_lambda: float = Field(ge=0.0)
    err_group: float = Field(ge=0.0)
    err_velocity: float = Field(ge=0.0)

    QUANTITIES: ClassVar[tuple[str, ...]] = ("err_omega", "err_lambda", "err_group", "err_velocity")

    @field_validator("eps", "err_omega", "err_lambda", "err_group", "err_velocity")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not isfinite(value):
            raise ValueError("error samples must be finite")
        return value

    def value(self, quantity: str) -> float:
        return getattr(self, quantity)


class SlopeFit(BaseModel):
    """Least-squares line through (log10 eps, log10 err)"""
    model_config = ConfigDict(frozen=True)

    quantity: str
    slope: float
    intercept: float
    residual: float
    n_samples: int
    expected_slope: Optional[float] = None

    def misses(self, tolerance: float) -> bool:
        if self.expected_slope is None:
            return False
        return abs(self.slope - self.expected_slope) > tolerance


class OffsetFit(BaseModel):
    """Fit of err = offset + rate * eps, used where the error does not vanish with eps"""
    model_config = ConfigDict(frozen=True)

    quantity: str
    offset: float
    rate: float
    residual: float
    reference: Optional[float] = None

    @property
    def relative_gap(self) -> Optional[float]:
        if self.reference is None or self.reference == 0.0:
            return None
        return abs(self.offset - self.reference) / abs(self.reference)


class ConsistencyReport(BaseModel):
    """Slopes and raw samples of a one-step consistency study"""
    scheme: str
    omega0: list[float]
    samples: list[ErrorSample] = Field(default_factory=list)
    fits: dict[str, SlopeFit] = Field(default_factory=dict)
    offset: Optional[OffsetFit] = None
    slope_tolerance: float = 0.15
    offset_tolerance: float = 0.05

    @property
    def eps_values(self) -> list[float]:
        return [s.eps for s in self.samples]

    def misses(self) -> list[str]:
        """Quantities whose fitted slope or offset falls outside tolerance"""
        missed = [name for name, fit in self.fits.items() if fit.misses(self.slope_tolerance)]
        if self.offset is not None:
            gap = self.offset.relative_gap
            if gap is not None and gap > self.offset_tolerance:
                missed.append(f"{self.offset.quantity}:offset")
        return missed


class TrajectoryRow(BaseModel):
    """One CSV row of a trajectory run"""
    model_config = ConfigDict(frozen=True)

    COLUMNS: ClassVar[tuple[str, ...]] = (
        "t", "omega1", "omega2", "omega3", "lambda", "energy",
        "reduced_residual", "unreduced_residual", "orthonormality_defect",
        "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33",
    )

    t: float
    omega: tuple[float, float, float]
    lam: float
    energy: float
    reduced_residual: float
    unreduced_residual: float
    orthonormality_defect: float
    rotation: tuple[float, ...] = Field(min_length=9, max_length=9)

    def values(self) -> list[float]:
        return [
            self.t, *self.omega, self.lam, self.energy,
            self.reduced_residual, self.unreduced_residual, self.orthonormality_defect,
            *self.rotation,
        ]


class RunSummary(BaseModel):
    """Aggregate diagnostics of one trajectory run"""
    method: str
    eps: float
    t_final: float
    steps: int = 0
    rows: int = 0
    energy0: float = 0.0
    max_energy_error: float = 0.0
    max_reduced_residual: float = 0.0
    max_unreduced_residual: float = 0.0
    max_orthonormality_defect: float = 0.0
    max_lambda_discrepancy: float = 0.0
    max_newton_iters: int = 0
    max_jacobian_condition: float = 0.0
    output: Optional[str] = None
    execution_time_seconds: float = 0.0


class ComparisonSummary(BaseModel):
    """Side-by-side diagnostics of two runs on the same time grid"""
    first: RunSummary
    second: RunSummary
    max_omega_difference: float = 0.0
    max_lambda_difference: float = 0.0
    output: Optional[str] = None

    def lower_energy_error(self) -> str:
        """Method name with the smaller max |E - E0|"""
        if self.first.max_energy_error <= self.second.max_energy_error:
            return self.first.method
        return self.second.method


class RunManifest(BaseModel):
    """Reproducibility record written next to every output file"""
    command: str
    config: dict
    outputs: list[str] = Field(default_factory=list)
    summary: dict = Field(default_factory=dict)
    timestamp: str = Field(default_factory=lambda: datetime.now().strftime("%Y%m%d_%H%M%S"))
    created_at: datetime = Field(default_factory=datetime.now)
