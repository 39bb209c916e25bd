"""Unit tests for ComponentRegistry."""

import pytest

from hints_solver.core.models import Domain, Equation, GridKind
from hints_solver.core.registry import ComponentRegistry
from hints_solver.infrastructure.discretization.assembly import (
    assemble_helmholtz_fd,
    assemble_poisson_1d,
    assemble_poisson_2d_fem,
)
from hints_solver.infrastructure.discretization.grids import build_grid


class TestGetGridKind:
    """Tests for the get_grid_kind method."""

    @pytest.mark.parametrize(
        ("equation", "domain", "kind"),
        [
            ("poisson", "interval", GridKind.UNIFORM_INTERVAL),
            ("poisson", "unit-square", GridKind.SQUARE_TRIANGULATION),
            ("poisson", "l-shape", GridKind.L_SHAPED_TRIANGULATION),
            ("helmholtz", "interval", GridKind.UNIFORM_INTERVAL),
            ("helmholtz", "unit-square", GridKind.UNIFORM_SQUARE),
        ],
    )
    def test_supported_families(self, equation, domain, kind):
        assert ComponentRegistry.get_grid_kind(equation, domain) is kind

    def test_helmholtz_on_l_shape_is_unsupported(self):
        with pytest.raises(ValueError, match="Unsupported problem: 'helmholtz' on 'l-shape'"):
            ComponentRegistry.get_grid_kind(Equation.HELMHOLTZ, Domain.L_SHAPE)

    def test_unknown_names_raise(self):
        with pytest.raises(ValueError):
            ComponentRegistry.get_grid_kind("heat", "interval")


class TestGetAssembler:
    """Tests for the get_assembler method."""

    def test_assemblers(self):
        assert ComponentRegistry.get_assembler("poisson", "uniform-interval") is assemble_poisson_1d
        assert (
            ComponentRegistry.get_assembler("poisson", "l-shaped-triangulation")
            is assemble_poisson_2d_fem
        )
        helmholtz = ComponentRegistry.get_assembler("helmholtz", "uniform-square")
        assert helmholtz is assemble_helmholtz_fd

    def test_poisson_needs_a_triangulation_in_2d(self):
        with pytest.raises(ValueError, match="No assembler"):
            ComponentRegistry.get_assembler(Equation.POISSON, GridKind.UNIFORM_SQUARE)


class TestRegistryUsage:
    """Tests for typical registry usage patterns."""

    @pytest.mark.parametrize(
        ("equation", "domain"),
        [
            (Equation.POISSON, Domain.INTERVAL),
            (Equation.POISSON, Domain.L_SHAPE),
            (Equation.HELMHOLTZ, Domain.UNIT_SQUARE),
        ],
    )
    def test_family_to_system(self, make_system, equation, domain):
        """Grid kind and assembler resolved from the registry agree with each other."""
        kind = ComponentRegistry.get_grid_kind(equation, domain)
        system = make_system(equation, build_grid(kind, 8), k=4.0)
        assert system.grid.kind is kind
        assert system.size == system.grid.interior.shape[0]
