"""Exceptions raised by the Suslov integrators and the lab around them."""


class SuslovError(Exception):
    """Base class for every error raised by suslov_lab"""


class DomainError(SuslovError):
    """Input outside the domain of a map (Cayley chart boundary, non-skew or non-rotation matrix)"""


class ConstraintError(SuslovError):
    """Angular velocity violates the nonholonomic constraint <a, w> = 0"""


class DegenerateError(SuslovError):
    """Inertia data that cannot support the requested computation"""


class NonConvergence(SuslovError):
    """An iteration (Newton, reference refinement) hit its cap without meeting its tolerance"""

    def __init__(self, message: str, iterations: int, residual_norm: float, step_index: int | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm
        self.step_index = step_index

    def __reduce__(self):
        return type(self), (str(self), self.iterations, self.residual_norm, self.step_index)

    def at_step(self, step_index: int) -> "NonConvergence":
        """Copy of this error tagged with the trajectory step it happened at"""
        return type(self)(
            f"step {step_index}: {self}",
            iterations=self.iterations,
            residual_norm=self.residual_norm,
            step_index=step_index,
        )


class SingularJacobian(NonConvergence):
    """Newton Jacobian condition number above the regularity threshold"""

    def __init__(
        self,
        message: str,
        iterations: int,
        residual_norm: float,
        condition: float,
        step_index: int | None = None,
    ):
        super().__init__(message, iterations, residual_norm, step_index)
        self.condition = condition

    def __reduce__(self):
        return type(self), (str(self), self.iterations, self.residual_norm, self.condition, self.step_index)

    def at_step(self, step_index: int) -> "SingularJacobian":
        return SingularJacobian(
            f"step {step_index}: {self}",
            iterations=self.iterations,
            residual_norm=self.residual_norm,
            condition=self.condition,
            step_index=step_index,
        )


class FitError(SuslovError):
    """Error samples unusable for a log-log slope fit"""


class ConfigError(SuslovError):
    """Invalid run configuration"""


class ReportError(SuslovError):
    """Records that cannot be turned into the requested output"""
