from typing import Protocol

from hints_solver.core.models import FloatArray, LinearSystem, ProblemSpec


class ICorrectionOperator(Protocol):
    """Protocol for the non-relaxation step of a hybrid solve."""

    @property
    def name(self) -> str:
        """Short label used in logs and trace exports."""
        ...

    def validate(self, system: LinearSystem) -> None:
        """Raises when this operator cannot serve systems on ``system.grid``."""
        ...

    def correct(self, system: LinearSystem, residual: FloatArray) -> FloatArray:
        """Returns an approximate solution of ``A dv = residual`` over the interior nodes."""
        ...


class IAssembler(Protocol):
    """Builds the interior linear system of a problem, optionally on n subdivisions."""

    def __call__(self, problem: ProblemSpec, n: int | None = None) -> LinearSystem: ...
