"""Hamiltonian vector fields, Poisson brackets, and sphere quadrature.

The Hamiltonian field of a function f is the unique solution of
i_H sympl = -df.  Two independent routes compute it:

* a symbolic solve that inverts the block structure of the symplectic form
  (a du^dv block and a dr^dt block), giving closed-form components for any
  smooth f, and
* a numeric pointwise LU solve of the 4x4 matrix of the symplectic form,
  used by the verification suite to cross-check the symbolic route against
  the displayed closed forms.

Sphere integrals of 2-forms use tensor-product Gauss-Legendre nodes in the
colatitude and a midpoint rule on the periodic azimuth (spectrally accurate
there), with an error estimate from node doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expressions as ex
from .expressions import ChartPoint, Expression
from .exterior import DIM, KForm, VectorField
from .reports import CheckResult
from .spacetime import FOUR_PI, SpacetimeModel, schwarzschild_factor

_COORD_AXES = {"u": 0, "v": 1, "r": 2, "t": 3}


class SingularSymplecticError(ValueError):
    """The symplectic matrix degenerated at a sample point."""


class BlockStructureError(ValueError):
    """The symplectic form lacks the du^dv + dr^dt block layout."""


@dataclass(frozen=True)
class HamiltonianField:
    """The Hamiltonian field of ``source``: symbolic solution plus, for the
    four coordinate functions, the displayed closed form used as an
    independent reference."""

    source: Expression
    field: VectorField
    closed_form: VectorField | None = None


def symplectic_matrix(model: SpacetimeModel):
    """Matrix P[i][j] = sympl(e_i, e_j) of coefficient expressions."""
    matrix = [[ex.ZERO for _ in range(DIM)] for _ in range(DIM)]
    for (i, j), coefficient in model.symplectic_form.terms:
        matrix[i][j] = coefficient
        matrix[j][i] = ex.mul(ex.NEG_ONE, coefficient)
    return matrix


def _block_coefficients(model: SpacetimeModel):
    allowed = {(0, 1), (2, 3)}
    indices = {index for index, _ in model.symplectic_form.terms}
    if not indices <= allowed:
        raise BlockStructureError(
            f"symplectic form has terms {sorted(indices - allowed)} outside the "
            "angular and radial-time blocks"
        )
    angular = model.symplectic_form.coefficient((0, 1))
    radial = model.symplectic_form.coefficient((2, 3))
    if ex.is_zero(angular) or ex.is_zero(radial):
        raise BlockStructureError("a symplectic block vanishes identically")
    return angular, radial


def hamiltonian_field(f: Expression, model: SpacetimeModel) -> HamiltonianField:
    """Solve i_H sympl = -df symbolically through the block structure.

    With sympl = a du^dv + b dr^dt the unique solution is
    H = (-f_v/a) d_u + (f_u/a) d_v + (-f_t/b) d_r + (f_r/b) d_t.
    """
    angular, radial = _block_coefficients(model)
    components = (
        ex.quotient(ex.mul(ex.NEG_ONE, f.diff("v")), angular),
        ex.quotient(f.diff("u"), angular),
        ex.quotient(ex.mul(ex.NEG_ONE, f.diff("t")), radial),
        ex.quotient(f.diff("r"), radial),
    )
    closed_form = None
    if isinstance(f, ex.Coordinate):
        closed_form = coordinate_field_references(model)[f.name]
    return HamiltonianField(f, VectorField(components), closed_form)


def hamiltonian_at(f: Expression, model: SpacetimeModel, point: ChartPoint) -> np.ndarray:
    """Numeric route: LU-solve the 4x4 system at one point."""
    matrix = symplectic_matrix(model)
    numeric = np.array(
        [[matrix[i][j].evaluate(point) for j in range(DIM)] for i in range(DIM)]
    )
    gradient = np.array([f.diff(name).evaluate(point) for name in ex.COORDINATE_NAMES])
    try:
        # components satisfy sum_i H^i P[i][j] = -df_j
        return np.linalg.solve(numeric.T, -gradient)
    except np.linalg.LinAlgError as err:
        raise SingularSymplecticError(f"symplectic matrix singular at {point}") from err


def poisson_bracket(f: Expression, h: Expression, model: SpacetimeModel) -> Expression:
    """The bracket sympl(H_f, H_h) as an expression, evaluable anywhere."""
    field_f = hamiltonian_field(f, model).field
    field_h = hamiltonian_field(h, model).field
    pieces = []
    for (i, j), coefficient in model.symplectic_form.terms:
        pieces.append(
            ex.mul(
                coefficient,
                ex.add(
                    ex.mul(field_f.components[i], field_h.components[j]),
                    ex.mul(ex.NEG_ONE, field_f.components[j], field_h.components[i]),
                ),
            )
        )
    return ex.add(*pieces)


def coordinate_field_references(model: SpacetimeModel) -> dict:
    """Displayed closed forms of the four coordinate Hamiltonian fields."""
    factor = schwarzschild_factor()
    angular = ex.quotient(ex.const(FOUR_PI), ex.mul(ex.M, ex.sin(ex.U)))
    radial = ex.mul(
        ex.quotient(ex.mul(ex.const(FOUR_PI), ex.power(ex.R, 2)), ex.M),
        ex.power(factor, Fraction(1, 2)),
    )
    return {
        "u": VectorField((ex.ZERO, angular, ex.ZERO, ex.ZERO)),
        "v": VectorField((ex.mul(ex.NEG_ONE, angular), ex.ZERO, ex.ZERO, ex.ZERO)),
        "r": VectorField((ex.ZERO, ex.ZERO, ex.ZERO, radial)),
        "t": VectorField((ex.ZERO, ex.ZERO, ex.mul(ex.NEG_ONE, radial), ex.ZERO)),
    }


def coordinate_bracket_references(model: SpacetimeModel) -> dict:
    """Displayed closed forms of the coordinate Poisson brackets."""
    factor = schwarzschild_factor()
    return {
        ("u", "v"): ex.quotient(ex.const(FOUR_PI), ex.mul(ex.M, ex.sin(ex.U))),
        ("r", "t"): ex.mul(
            ex.quotient(ex.mul(ex.const(FOUR_PI), ex.power(ex.R, 2)), ex.M),
            ex.power(factor, Fraction(1, 2)),
        ),
        ("u", "r"): ex.ZERO,
        ("u", "t"): ex.ZERO,
        ("v", "r"): ex.ZERO,
        ("v", "t"): ex.ZERO,
    }


# ---------------------------------------------------------------------------
# Verification helpers
# ---------------------------------------------------------------------------


def verify_hamiltonian_fields(model, points, threshold=1e-10, seed=None) -> list:
    """Numeric LU solve against the displayed closed forms, relative error."""
    references = coordinate_field_references(model)
    results = []
    for name, axis in _COORD_AXES.items():
        coordinate = ex.Coordinate(name)
        reference = references[name]
        worst = 0.0
        worst_point = None
        for point in points:
            numeric = hamiltonian_at(coordinate, model, point)
            expected = np.array(reference.evaluate_at(point))
            scale = max(np.max(np.abs(expected)), 1e-300)
            error = float(np.max(np.abs(numeric - expected)) / scale)
            if error > worst:
                worst, worst_point = error, point
        results.append(
            CheckResult(
                f"hamiltonian_{name}",
                worst < threshold,
                threshold,
                worst,
                worst_point.as_dict() if worst_point else None,
                seed,
            )
        )
    return results


def bracket_table(
    model,
    points,
    relative_threshold=1e-10,
    zero_threshold=1e-10,
    jacobi_threshold=1e-9,
    seed=None,
    jacobi_points=None,
):
    """The antisymmetric 4x4 table of coordinate brackets with its checks.

    Returns (checks, table) where table maps "f,h" to the bracket expression
    in prefix form, and checks compare the two nonzero entries relatively,
    the four cross entries absolutely, antisymmetry, and the Jacobi residual
    for all coordinate triples.  The Jacobi residual stacks two symbolic
    derivative layers, whose roundoff is amplified near the poles, so it may
    be sampled on its own (typically pole-avoiding) point set.
    """
    if jacobi_points is None:
        jacobi_points = points
    names = list(_COORD_AXES)
    coordinates = {name: ex.Coordinate(name) for name in names}
    references = coordinate_bracket_references(model)
    brackets = {}
    for a in names:
        for b in names:
            brackets[(a, b)] = poisson_bracket(coordinates[a], coordinates[b], model)
    table = {f"{a},{b}": brackets[(a, b)].to_prefix() for a in names for b in names}

    checks = []
    for pair in (("u", "v"), ("r", "t")):
        reference = references[pair]
        worst = 0.0
        worst_point = None
        for point in points:
            expected = reference.evaluate(point)
            got = brackets[pair].evaluate(point)
            error = abs(got - expected) / max(abs(expected), 1e-300)
            if error > worst:
                worst, worst_point = error, point
        checks.append(
            CheckResult(
                f"bracket_{pair[0]}{pair[1]}",
                worst < relative_threshold,
                relative_threshold,
                worst,
                worst_point.as_dict() if worst_point else None,
                seed,
            )
        )

    worst = 0.0
    worst_point = None
    for pair in (("u", "r"), ("u", "t"), ("v", "r"), ("v", "t")):
        for point in points:
            error = abs(brackets[pair].evaluate(point))
            if error > worst:
                worst, worst_point = error, point
    checks.append(
        CheckResult(
            "bracket_cross_zeros",
            worst < zero_threshold,
            zero_threshold,
            worst,
            worst_point.as_dict() if worst_point else None,
            seed,
        )
    )

    worst = 0.0
    worst_point = None
    for point in points:
        for pair in [(a, b) for a in names for b in names]:
            anti = brackets[pair].evaluate(point) + brackets[(pair[1], pair[0])].evaluate(point)
            if abs(anti) > worst:
                worst, worst_point = abs(anti), point
    checks.append(
        CheckResult(
            "bracket_antisymmetry",
            worst < zero_threshold,
            zero_threshold,
            worst,
            worst_point.as_dict() if worst_point else None,
            seed,
        )
    )

    worst = 0.0
    worst_point = None
    for triple in (("u", "v", "r"), ("u", "v", "t"), ("u", "r", "t"), ("v", "r", "t")):
        f, g, h = (coordinates[n] for n in triple)
        cyclic = ex.add(
            poisson_bracket(f, poisson_bracket(g, h, model), model),
            poisson_bracket(g, poisson_bracket(h, f, model), model),
            poisson_bracket(h, poisson_bracket(f, g, model), model),
        )
        for point in jacobi_points:
            error = abs(cyclic.evaluate(point))
            if error > worst:
                worst, worst_point = error, point
    checks.append(
        CheckResult(
            "jacobi_identity",
            worst < jacobi_threshold,
            jacobi_threshold,
            worst,
            worst_point.as_dict() if worst_point else None,
            seed,
        )
    )
    return checks, table


# ---------------------------------------------------------------------------
# Sphere quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and sphere location for surface integrals.

    ``n_u`` Gauss-Legendre nodes on the colatitude interval (0, pi) and
    ``n_v`` midpoint nodes on the periodic azimuth; the sphere sits at
    radius r0 and time slice t0.
    """

    n_u: int = 32
    n_v: int = 64
    r0: float = 3.0
    t0: float = 0.0

    def __post_init__(self):
        if self.n_u < 2:
            raise ValueError("need at least 2 colatitude nodes")
        if self.n_v < 4:
            raise ValueError("need at least 4 azimuth nodes")
        if not math.isfinite(self.r0) or self.r0 <= 0:
            raise ValueError("sphere radius must be positive and finite")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    n_u: int
    n_v: int


def sphere_sum(form: KForm, model: SpacetimeModel, n_u: int, n_v: int, r0: float, t0: float) -> float:
    """One quadrature pass over the sphere {r=r0, t=t0} at the given node counts."""
    coefficient = form.coefficient((0, 1))
    if ex.is_zero(coefficient):
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(n_u)
    colatitudes = 0.5 * math.pi * (nodes + 1.0)
    u_weights = 0.5 * math.pi * weights
    azimuths = (np.arange(n_v) + 0.5) * (2.0 * math.pi / n_v)
    v_weight = 2.0 * math.pi / n_v
    total = np.empty((n_u, n_v))
    for i, (colatitude, u_weight) in enumerate(zip(colatitudes, u_weights)):
        for j, azimuth in enumerate(azimuths):
            point = ChartPoint(u=float(colatitude), v=float(azimuth), r=r0, t=t0, m=model.mass)
            total[i, j] = u_weight * v_weight * coefficient.evaluate(point)
    return float(np.sum(total))


def surface_integral(form: KForm, spec: QuadratureSpec, model: SpacetimeModel) -> IntegralResult:
    """Integrate a 2-form over the sphere {r = r0, t = t0}.

    The pullback keeps only the du^dv coefficient (dr and dt vanish on the
    sphere).  The returned value uses doubled node counts; the error
    estimate is the difference against the requested counts.
    """
    if form.degree != 2:
        raise ValueError("surface integrals take 2-forms")
    if spec.r0 < 2.0 * model.mass * (1.0 + 1e-6):
        raise ValueError(
            f"sphere radius {spec.r0} is not outside the horizon of mass {model.mass}"
        )
    coarse = sphere_sum(form, model, spec.n_u, spec.n_v, spec.r0, spec.t0)
    fine = sphere_sum(form, model, 2 * spec.n_u, 2 * spec.n_v, spec.r0, spec.t0)
    return IntegralResult(value=fine, error_estimate=abs(fine - coarse), n_u=spec.n_u, n_v=spec.n_v)
