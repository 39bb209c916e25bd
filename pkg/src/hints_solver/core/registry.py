from hints_solver.core.models import Domain, Equation, GridKind
from hints_solver.core.ports import IAssembler
from hints_solver.infrastructure.discretization.assembly import (
    assemble_helmholtz_fd,
    assemble_poisson_1d,
    assemble_poisson_2d_fem,
)


class ComponentRegistry:
    """Registry pattern mapping problem families to grid kinds and assemblers."""

    _grid_kinds: dict[tuple[Equation, Domain], GridKind] = {
        (Equation.POISSON, Domain.INTERVAL): GridKind.UNIFORM_INTERVAL,
        (Equation.POISSON, Domain.UNIT_SQUARE): GridKind.SQUARE_TRIANGULATION,
        (Equation.POISSON, Domain.L_SHAPE): GridKind.L_SHAPED_TRIANGULATION,
        (Equation.HELMHOLTZ, Domain.INTERVAL): GridKind.UNIFORM_INTERVAL,
        (Equation.HELMHOLTZ, Domain.UNIT_SQUARE): GridKind.UNIFORM_SQUARE,
    }

    _assemblers: dict[tuple[Equation, GridKind], IAssembler] = {
        (Equation.POISSON, GridKind.UNIFORM_INTERVAL): assemble_poisson_1d,
        (Equation.POISSON, GridKind.SQUARE_TRIANGULATION): assemble_poisson_2d_fem,
        (Equation.POISSON, GridKind.L_SHAPED_TRIANGULATION): assemble_poisson_2d_fem,
        (Equation.HELMHOLTZ, GridKind.UNIFORM_INTERVAL): assemble_helmholtz_fd,
        (Equation.HELMHOLTZ, GridKind.UNIFORM_SQUARE): assemble_helmholtz_fd,
    }

    @classmethod
    def get_grid_kind(cls, equation: Equation | str, domain: Domain | str) -> GridKind:
        key = (Equation(equation), Domain(domain))
        if key not in cls._grid_kinds:
            raise ValueError(f"Unsupported problem: '{key[0]}' on '{key[1]}'")
        return cls._grid_kinds[key]

    @classmethod
    def get_assembler(cls, equation: Equation | str, kind: GridKind | str) -> IAssembler:
        key = (Equation(equation), GridKind(kind))
        if key not in cls._assemblers:
            raise ValueError(f"No assembler for '{key[0]}' on a '{key[1]}' grid")
        return cls._assemblers[key]
