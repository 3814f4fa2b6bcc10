"""Hamiltonian fields, Poisson brackets, and sphere quadrature."""

import math
import random

import numpy as np
import pytest

from warpsymp import expressions as ex
from warpsymp.exterior import KForm, exterior_derivative, interior_product
from warpsymp.expressions import ChartPoint
from warpsymp.hamiltonian import (
    BlockStructureError,
    QuadratureSpec,
    bracket_table,
    coordinate_bracket_references,
    coordinate_field_references,
    hamiltonian_at,
    hamiltonian_field,
    poisson_bracket,
    sphere_sum,
    surface_integral,
    verify_hamiltonian_fields,
)
from warpsymp.spacetime import schwarzschild

FOUR_PI = 4.0 * math.pi


def random_functions(count, seed):
    """Smooth polynomial/trig test functions on the chart."""
    rng = random.Random(seed)
    atoms = [
        ex.U,
        ex.V,
        ex.quotient(ex.R, ex.const(3.0)),
        ex.quotient(ex.T, ex.const(3.0)),
        ex.sin(ex.U),
        ex.cos(ex.V),
        ex.power(ex.quotient(ex.R, ex.const(5.0)), 2),
        ex.sin(ex.T),
    ]
    out = []
    for _ in range(count):
        a, b, c = (atoms[rng.randrange(len(atoms))] for _ in range(3))
        coefficient = ex.const(rng.uniform(-2.0, 2.0))
        out.append(ex.add(ex.mul(coefficient, a, b), c))
    return out


class TestHamiltonianField:
    def test_angular_closed_form(self, model, equator_point):
        """H_u = (4 pi / (m sin u)) d_v; coefficient 4 pi at the equator."""
        field = hamiltonian_field(ex.U, model).field
        values = field.evaluate_at(equator_point)
        assert values[1] == pytest.approx(FOUR_PI, rel=1e-14)
        assert values[0] == values[2] == values[3] == 0.0

    def test_time_closed_form(self, model):
        """H_t = -(4 pi r^2/m)(1-2m/r)^(1/2) d_r; value at (m=1, r=4)."""
        point = ChartPoint(u=1.0, v=1.0, r=4.0, t=0.0, m=1.0)
        field = hamiltonian_field(ex.T, model).field
        assert field.evaluate_at(point)[2] == pytest.approx(-142.17225402106772, rel=1e-13)

    def test_constant_gives_zero_field(self, model):
        field = hamiltonian_field(ex.const(4.25), model).field
        assert all(ex.is_zero(component) for component in field.components)

    def test_closed_form_attached_for_coordinates(self, model):
        assert hamiltonian_field(ex.U, model).closed_form is not None
        assert hamiltonian_field(ex.sin(ex.U), model).closed_form is None

    def test_defining_relation_for_random_functions(self, model, points):
        """i_H sympl + df = 0 pointwise below 1e-10 for 20 random functions."""
        worst = 0.0
        for f in random_functions(20, seed=303):
            field = hamiltonian_field(f, model).field
            residual = interior_product(field, model.symplectic_form) + exterior_derivative(
                KForm.scalar(f)
            )
            worst = max(worst, max(residual.max_abs_at(p) for p in points))
        assert worst < 1e-10

    def test_numeric_solve_matches_symbolic(self, model, points):
        for f in random_functions(5, seed=304):
            symbolic = hamiltonian_field(f, model).field
            for point in points[:6]:
                numeric = hamiltonian_at(f, model, point)
                expected = np.array(symbolic.evaluate_at(point))
                scale = max(1.0, float(np.max(np.abs(expected))))
                assert float(np.max(np.abs(numeric - expected))) < 1e-10 * scale

    def test_numeric_solve_matches_displays(self, model, points):
        results = verify_hamiltonian_fields(model, points, seed=901)
        assert [r.name for r in results] == [
            "hamiltonian_u",
            "hamiltonian_v",
            "hamiltonian_r",
            "hamiltonian_t",
        ]
        assert all(r.passed for r in results)

    def test_block_structure_guard(self, model):
        import dataclasses

        broken = dataclasses.replace(
            model, symplectic_form=KForm.from_terms(2, {(0, 2): ex.ONE})
        )
        with pytest.raises(BlockStructureError):
            hamiltonian_field(ex.U, broken)

    def test_singular_matrix_reports_the_point(self, model):
        """A 2-form degenerating at a point makes the numeric solve fail
        there, with the point named in the error."""
        import dataclasses

        from warpsymp.hamiltonian import SingularSymplecticError

        degenerate = dataclasses.replace(
            model,
            symplectic_form=KForm.from_terms(
                2, {(0, 1): ex.V - ex.const(math.pi), (2, 3): ex.ONE}
            ),
        )
        bad_point = ChartPoint(u=1.0, v=math.pi, r=4.0, t=0.0, m=1.0)
        with pytest.raises(SingularSymplecticError) as excinfo:
            hamiltonian_at(ex.U, degenerate, bad_point)
        assert "r=4.0" in str(excinfo.value)
        good_point = ChartPoint(u=1.0, v=1.0, r=4.0, t=0.0, m=1.0)
        assert hamiltonian_at(ex.U, degenerate, good_point) is not None


class TestPoissonBrackets:
    def test_angular_bracket_value(self, model, equator_point):
        bracket = poisson_bracket(ex.U, ex.V, model)
        assert bracket.evaluate(equator_point) == pytest.approx(FOUR_PI, rel=1e-13)

    def test_radial_time_bracket_value(self, model, equator_point):
        bracket = poisson_bracket(ex.R, ex.T, model)
        assert bracket.evaluate(equator_point) == pytest.approx(65.29677711243184, rel=1e-12)

    def test_cross_brackets_identically_zero(self, model):
        for pair in ((ex.U, ex.R), (ex.U, ex.T), (ex.V, ex.R), (ex.V, ex.T)):
            assert ex.is_zero(poisson_bracket(*pair, model))

    def test_antisymmetry_numerically(self, model, points):
        f, h = random_functions(2, seed=305)
        total = ex.add(poisson_bracket(f, h, model), poisson_bracket(h, f, model))
        scale_expr = poisson_bracket(f, h, model)
        for point in points[:8]:
            scale = max(1.0, abs(scale_expr.evaluate(point)))
            assert abs(total.evaluate(point)) < 1e-12 * scale

    def test_leibniz_in_second_argument(self, model, operator_points):
        """{f, g h} = g {f, h} + {f, g} h, evaluated pointwise."""
        f, g, h = random_functions(3, seed=306)
        lhs = poisson_bracket(f, ex.mul(g, h), model)
        rhs = ex.add(
            ex.mul(g, poisson_bracket(f, h, model)),
            ex.mul(poisson_bracket(f, g, model), h),
        )
        for point in operator_points:
            scale = max(1.0, abs(lhs.evaluate(point)))
            assert abs(lhs.evaluate(point) - rhs.evaluate(point)) < 1e-10 * scale

    def test_leibniz_in_first_argument(self, model, operator_points):
        """{f g, h} = f {g, h} + {f, h} g, evaluated pointwise."""
        f, g, h = random_functions(3, seed=307)
        lhs = poisson_bracket(ex.mul(f, g), h, model)
        rhs = ex.add(
            ex.mul(f, poisson_bracket(g, h, model)),
            ex.mul(poisson_bracket(f, h, model), g),
        )
        for point in operator_points:
            scale = max(1.0, abs(lhs.evaluate(point)))
            assert abs(lhs.evaluate(point) - rhs.evaluate(point)) < 1e-10 * scale

    def test_jacobi_for_noncoordinate_functions(self, model, operator_points):
        f = ex.add(ex.U, ex.quotient(ex.R, ex.const(5.0)))
        g = ex.V
        h = ex.quotient(ex.T, ex.const(5.0))
        cyclic = ex.add(
            poisson_bracket(f, poisson_bracket(g, h, model), model),
            poisson_bracket(g, poisson_bracket(h, f, model), model),
            poisson_bracket(h, poisson_bracket(f, g, model), model),
        )
        for point in operator_points:
            assert abs(cyclic.evaluate(point)) < 1e-9


class TestBracketTable:
    def test_checks_and_table(self, model, points, operator_points):
        checks, table = bracket_table(model, points, seed=901, jacobi_points=operator_points)
        by_name = {c.name: c for c in checks}
        assert by_name["bracket_uv"].passed
        assert by_name["bracket_rt"].passed
        assert by_name["bracket_cross_zeros"].passed
        assert by_name["bracket_antisymmetry"].passed
        assert by_name["jacobi_identity"].passed
        assert by_name["jacobi_identity"].worst_error < 1e-9
        assert table["u,v"] == poisson_bracket(ex.U, ex.V, model).to_prefix()
        assert table["v,r"] == "0.0"
        assert len(table) == 16

    def test_reference_closed_forms_match(self, model, points):
        references = coordinate_bracket_references(model)
        got = poisson_bracket(ex.U, ex.V, model)
        expected = references[("u", "v")]
        for point in points[:8]:
            assert got.evaluate(point) == pytest.approx(expected.evaluate(point), rel=1e-13)

    def test_field_references_satisfy_defining_relation(self, model, points):
        """The displayed closed-form fields themselves solve i_H sympl = -df."""
        for name, field in coordinate_field_references(model).items():
            residual = interior_product(field, model.symplectic_form) + exterior_derivative(
                KForm.scalar(ex.Coordinate(name))
            )
            for point in points[:8]:
                scale = max(1.0, 1.0 / model.symplectic_form.coefficient((0, 1)).evaluate(point))
                assert residual.max_abs_at(point) < 1e-12 * scale


class TestSurfaceIntegral:
    def test_mass_from_symplectic_form(self, model):
        spec = QuadratureSpec(n_u=32, n_v=64, r0=3.0)
        result = surface_integral(model.symplectic_form, spec, model)
        assert abs(result.value - 1.0) < 1e-10
        assert result.error_estimate < 1e-12

    def test_dual_flux_contributes_nothing(self, model):
        spec = QuadratureSpec(n_u=16, n_v=32, r0=5.0)
        result = surface_integral(model.dual_flux_form, spec, model)
        assert result.value == 0.0

    def test_rescaled_flux_heavier_mass(self):
        model = schwarzschild(2.5)
        spec = QuadratureSpec(n_u=32, n_v=64, r0=10.0)
        result = surface_integral(model.flux_form.scaled(model.lapse), spec, model)
        assert abs(result.value - 2.5) < 1e-10

    def test_radius_independence(self, model):
        """The sphere class is topological: r0 in {2.5m, 5m, 50m} agree."""
        values = []
        for r0 in (2.5, 5.0, 50.0):
            spec = QuadratureSpec(n_u=32, n_v=64, r0=r0)
            values.append(surface_integral(model.symplectic_form, spec, model).value)
        assert max(values) - min(values) < 1e-10

    def test_convergence_with_floor(self, model):
        """Error decays at least geometrically under doubling until the
        roundoff floor (10 ulp of the mass)."""
        floor = 10 * 2.220446049250313e-16 * model.mass
        errors = [
            abs(sphere_sum(model.symplectic_form, model, n, 2 * n, 3.0, 0.0) - model.mass)
            for n in (4, 8, 16, 32)
        ]
        for previous, current in zip(errors, errors[1:]):
            assert current <= max(0.5 * previous, floor)
        assert errors[-1] < 1e-10

    def test_spec_validation(self, model):
        with pytest.raises(ValueError):
            QuadratureSpec(n_u=1, n_v=64, r0=3.0)
        with pytest.raises(ValueError):
            QuadratureSpec(n_u=8, n_v=2, r0=3.0)
        with pytest.raises(ValueError):
            QuadratureSpec(n_u=8, n_v=16, r0=-1.0)
        with pytest.raises(ValueError):
            surface_integral(model.symplectic_form, QuadratureSpec(n_u=8, n_v=16, r0=1.5), model)
        with pytest.raises(ValueError):
            surface_integral(model.volume_form, QuadratureSpec(n_u=8, n_v=16, r0=3.0), model)

    def test_determinism(self, model):
        spec = QuadratureSpec(n_u=16, n_v=32, r0=4.0)
        first = surface_integral(model.symplectic_form, spec, model)
        second = surface_integral(model.symplectic_form, spec, model)
        assert first == second
