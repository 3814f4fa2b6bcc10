"""Prequantum connection, operator algebra, and the integrality report.

The line bundle is realised on the single cut chart (poles and azimuth cut
removed) through an explicit monopole-type potential theta with
d(theta) = sympl / m (or sympl / (2 pi m) in Weil scaling), so the
covariant derivative is

    nabla_X psi = X(psi) - i theta(X) psi,

whose curvature is -(i/m) sympl.  To a smooth function f one associates the
operator built from its Hamiltonian field; two variants are provided:

* hermitian (default):   f-hat = i m nabla_{H_f} - f
* nonhermitian variant:  f-hat =   m nabla_{H_f} - f

Only the hermitian variant turns Poisson brackets into commutators,
satisfying  bracket(f,h)-hat = -(i/m) [f-hat, h-hat]  identically; the
variant without the imaginary unit breaks that correspondence (by a term
proportional to the bracket plus a skewed derivative term) and is kept so
reports can quantify the difference.  For real f the hermitian operator is
symmetric on compactly supported sections with respect to the volume
induced by the symplectic form, because Hamiltonian fields are
divergence-free for it.

A global single-valued potential with these normalisations does not exist
(the sphere class of sympl/m integrates to 1, not 2 pi); the obstruction is
not hidden but quantified by ``integrality_report``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import expressions as ex
from .expressions import ChartPoint, Expression
from .exterior import (
    KForm,
    VectorField,
    basis_vector,
    exterior_derivative,
    pairing,
    wedge,
)
from .hamiltonian import (
    HamiltonianField,
    QuadratureSpec,
    hamiltonian_field,
    poisson_bracket,
    surface_integral,
)
from .reports import CheckResult
from .spacetime import FOUR_PI, SpacetimeModel


class CurvatureScale(str, Enum):
    """Normalisation of the connection: which multiple of the symplectic
    form the curvature potential must reproduce."""

    PLAIN = "plain"  # d(theta) = sympl / m
    WEIL = "weil"  # d(theta) = sympl / (2 pi m)

    def factor(self) -> Expression:
        if self is CurvatureScale.PLAIN:
            return ex.quotient(ex.ONE, ex.M)
        return ex.quotient(ex.ONE, ex.mul(ex.const(2.0 * math.pi), ex.M))


@dataclass(frozen=True)
class ConnectionPotential:
    """A real connection 1-form theta on the cut chart with its scaling."""

    theta: KForm
    scale: CurvatureScale = CurvatureScale.PLAIN

    def __post_init__(self):
        if self.theta.degree != 1:
            raise ValueError("the connection potential must be a 1-form")

    @staticmethod
    def monopole(model: SpacetimeModel, scale: CurvatureScale = CurvatureScale.PLAIN):
        """The north monopole gauge: (1/m)[(m/4pi)(1-cos u) dv + (lapse/4pi) dt],
        divided by 2 pi in Weil scaling."""
        angular = ex.quotient(
            ex.mul(ex.quotient(ex.M, ex.const(FOUR_PI)), ex.ONE - ex.cos(ex.U)), ex.M
        )
        temporal = ex.quotient(model.lapse, ex.mul(ex.const(FOUR_PI), ex.M))
        theta = KForm.from_terms(1, {(1,): angular, (3,): temporal})
        if scale is CurvatureScale.WEIL:
            theta = theta.scaled(ex.const(1.0 / (2.0 * math.pi)))
        return ConnectionPotential(theta, scale)

    def curvature_target(self, model: SpacetimeModel) -> KForm:
        return model.symplectic_form.scaled(self.scale.factor())

    def curvature_residual(self, model: SpacetimeModel) -> KForm:
        return exterior_derivative(self.theta) - self.curvature_target(model)

    def gauge_shifted(self, chi: Expression) -> "ConnectionPotential":
        """theta -> theta + d(chi); the curvature is unchanged."""
        return ConnectionPotential(
            self.theta + exterior_derivative(KForm.scalar(chi)), self.scale
        )


@dataclass(frozen=True)
class Section:
    """A complex-valued field on the cut chart, stored as (re, im).

    Sections are local objects: they are only required to be evaluable on
    the chart, not to extend continuously across the azimuth cut or the
    poles.
    """

    re: Expression
    im: Expression

    @staticmethod
    def constant(value: complex) -> "Section":
        return Section(ex.const(value.real), ex.const(value.imag))

    def __add__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return Section(ex.add(self.re, other.re), ex.add(self.im, other.im))

    def __sub__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return Section(
            ex.add(self.re, ex.mul(ex.NEG_ONE, other.re)),
            ex.add(self.im, ex.mul(ex.NEG_ONE, other.im)),
        )

    def __neg__(self):
        return Section(ex.mul(ex.NEG_ONE, self.re), ex.mul(ex.NEG_ONE, self.im))

    def scaled_real(self, factor) -> "Section":
        """Multiply by a real scalar field (or number)."""
        return Section(ex.mul(factor, self.re), ex.mul(factor, self.im))

    def times_i_scaled(self, factor) -> "Section":
        """Multiply by i times a real scalar field."""
        return Section(ex.mul(ex.NEG_ONE, factor, self.im), ex.mul(factor, self.re))

    def times_complex(self, re_factor, im_factor) -> "Section":
        return Section(
            ex.add(ex.mul(re_factor, self.re), ex.mul(ex.NEG_ONE, im_factor, self.im)),
            ex.add(ex.mul(re_factor, self.im), ex.mul(im_factor, self.re)),
        )

    def evaluate_at(self, point: ChartPoint) -> complex:
        return complex(self.re.evaluate(point), self.im.evaluate(point))

    def magnitude_at(self, point: ChartPoint) -> float:
        return abs(self.evaluate_at(point))


ZERO_SECTION = Section(ex.ZERO, ex.ZERO)
ONE_SECTION = Section(ex.ONE, ex.ZERO)


def covariant_derivative(
    x: VectorField, psi: Section, potential: ConnectionPotential
) -> Section:
    """nabla_X psi = X(psi) - i theta(X) psi, componentwise on (re, im)."""
    paired = pairing(potential.theta, x)
    return Section(
        ex.add(x.apply(psi.re), ex.mul(paired, psi.im)),
        ex.add(x.apply(psi.im), ex.mul(ex.NEG_ONE, paired, psi.re)),
    )


@dataclass(frozen=True)
class PrequantumOperator:
    """The operator assigned to a smooth function.

    ``hermitian=True`` gives  i m nabla_{H_f} - f, the assignment under
    which brackets become commutators; ``hermitian=False`` drops the
    imaginary unit (m nabla_{H_f} - f), breaking that correspondence, and
    exists so the reports can show the breakage explicitly.
    """

    source: Expression
    hamiltonian: HamiltonianField
    potential: ConnectionPotential
    mass: float
    hermitian: bool = True

    def derivative_part(self, psi: Section) -> Section:
        """The (i) m nabla_{H_f} piece of the operator alone."""
        gradient = covariant_derivative(self.hamiltonian.field, psi, self.potential)
        if self.hermitian:
            return gradient.times_i_scaled(ex.const(self.mass))
        return gradient.scaled_real(ex.const(self.mass))

    def apply(self, psi: Section) -> Section:
        return self.derivative_part(psi) - psi.scaled_real(self.source)


def prequantum_operator(
    f: Expression,
    model: SpacetimeModel,
    potential: ConnectionPotential,
    hermitian: bool = True,
) -> PrequantumOperator:
    return PrequantumOperator(
        f, hamiltonian_field(f, model), potential, model.mass, hermitian
    )


def apply_operator(
    f: Expression,
    psi: Section,
    model: SpacetimeModel,
    potential: ConnectionPotential,
    hermitian: bool = True,
) -> Section:
    return prequantum_operator(f, model, potential, hermitian).apply(psi)


# ---------------------------------------------------------------------------
# Section library for sampled operator checks
# ---------------------------------------------------------------------------


def random_sections(mass: float, count: int, seed: int) -> list:
    """Deterministic polynomial-times-phase test sections.

    Low-degree polynomials in rescaled coordinates multiplied by a phase
    exp(i (j v + kappa t)) with integer azimuthal winding; magnitudes stay
    of order one on the operator sampling window so stacked operator
    applications do not amplify roundoff.
    """
    rng = np.random.default_rng(seed)
    scale_r = ex.quotient(ex.R, ex.const(5.0 * mass))
    scale_t = ex.quotient(ex.T, ex.const(5.0 * mass))
    scale_u = ex.quotient(ex.U, ex.const(math.pi))
    scale_v = ex.quotient(ex.V, ex.const(2.0 * math.pi))
    sections = []
    for _ in range(count):
        c = rng.uniform(-1.0, 1.0, size=6)
        winding = int(rng.integers(-2, 3))
        kappa = rng.uniform(-0.3, 0.3) / mass
        poly = ex.add(
            ex.const(c[0]),
            ex.mul(ex.const(c[1]), scale_u),
            ex.mul(ex.const(c[2]), scale_v),
            ex.mul(ex.const(c[3]), scale_r),
            ex.mul(ex.const(c[4]), scale_t),
            ex.mul(ex.const(c[5]), ex.power(scale_r, 2)),
        )
        phase = ex.add(ex.mul(ex.const(float(winding)), ex.V), ex.mul(ex.const(kappa), ex.T))
        sections.append(Section(ex.mul(poly, ex.cos(phase)), ex.mul(poly, ex.sin(phase))))
    return sections


# ---------------------------------------------------------------------------
# Checks and reports
# ---------------------------------------------------------------------------


def verify_curvature_potential(
    model, potential, points, threshold=1e-11, seed=None
) -> CheckResult:
    """Check d(theta) equals the scaled symplectic form at sampled points."""
    residual = potential.curvature_residual(model)
    worst = 0.0
    worst_point = None
    for point in points:
        magnitude = residual.max_abs_at(point)
        if magnitude > worst:
            worst, worst_point = magnitude, point
    return CheckResult(
        "connection_curvature_potential",
        worst < threshold,
        threshold,
        worst,
        worst_point.as_dict() if worst_point else None,
        seed,
        details={"scale_mode": potential.scale.value},
    )


def curvature_section_check(
    model, potential, sections, points, threshold=1e-9, seed=None
) -> CheckResult:
    """Check ([nabla_a, nabla_b] + (i/m) sympl(a,b)) psi = 0 on sections.

    Coordinate fields commute, so the bracket term of the curvature drops
    out and the identity is a direct statement about second covariant
    derivatives.
    """
    worst = 0.0
    worst_point = None
    for a in range(4):
        for b in range(a + 1, 4):
            field_a, field_b = basis_vector(a), basis_vector(b)
            coefficient = model.symplectic_form.coefficient((a, b))
            factor = ex.quotient(coefficient, ex.M)
            for psi in sections:
                commutator = covariant_derivative(
                    field_a, covariant_derivative(field_b, psi, potential), potential
                ) - covariant_derivative(
                    field_b, covariant_derivative(field_a, psi, potential), potential
                )
                residual = commutator + psi.times_i_scaled(factor)
                for point in points:
                    magnitude = residual.magnitude_at(point)
                    if magnitude > worst:
                        worst, worst_point = magnitude, point
    return CheckResult(
        "connection_curvature_sections",
        worst < threshold,
        threshold,
        worst,
        worst_point.as_dict() if worst_point else None,
        seed,
    )


def _commutator_displays(model) -> dict:
    """Closed forms whose hats the two nonzero commutators must reproduce:
    [u-hat, v-hat] = 4 pi i (1/sin u)-hat and
    [r-hat, t-hat] = 4 pi i (r^2 lapse)-hat."""
    from .spacetime import schwarzschild_factor
    from fractions import Fraction

    return {
        ("u", "v"): ex.power(ex.sin(ex.U), -1),
        ("r", "t"): ex.mul(
            ex.power(ex.R, 2), ex.power(schwarzschild_factor(), Fraction(1, 2))
        ),
    }


def commutator_check(
    f: Expression,
    h: Expression,
    pair_name: str,
    model,
    potential,
    sections,
    points,
    relative_threshold=1e-9,
    absolute_threshold=1e-9,
    seed=None,
    display_reference: Expression | None = None,
) -> CheckResult:
    """Check bracket(f,h)-hat = -(i/m) [f-hat, h-hat] on test sections.

    Pairs whose bracket folds to zero are measured absolutely, the others
    relative to the largest left-hand magnitude over the sample.  The
    residual of the nonhermitian operator variant is recorded in the
    details; it does not satisfy the relation and is never asserted.
    """
    bracket = poisson_bracket(f, h, model)
    zero_bracket = ex.is_zero(bracket)
    measured = {}
    for hermitian in (True, False):
        op_f = prequantum_operator(f, model, potential, hermitian)
        op_h = prequantum_operator(h, model, potential, hermitian)
        op_bracket = prequantum_operator(bracket, model, potential, hermitian)
        worst = 0.0
        worst_point = None
        scale = 0.0
        for psi in sections:
            lhs = op_bracket.apply(psi)
            commutator = op_f.apply(op_h.apply(psi)) - op_h.apply(op_f.apply(psi))
            rhs = commutator.times_i_scaled(ex.const(-1.0 / model.mass))
            residual = lhs - rhs
            for point in points:
                magnitude = residual.magnitude_at(point)
                scale = max(scale, lhs.magnitude_at(point), rhs.magnitude_at(point))
                if magnitude > worst:
                    worst, worst_point = magnitude, point
        measured[hermitian] = (worst, worst_point, scale)

    worst, worst_point, scale = measured[True]
    if zero_bracket:
        error = worst
        threshold = absolute_threshold
        mode = "absolute"
    else:
        error = worst / max(scale, 1e-300)
        threshold = relative_threshold
        mode = "relative"
    plain_worst, _, plain_scale = measured[False]
    details = {
        "mode": mode,
        "scale": scale,
        "nonhermitian_residual": plain_worst
        if zero_bracket
        else plain_worst / max(plain_scale, 1e-300),
    }

    if display_reference is not None:
        op_f = prequantum_operator(f, model, potential, True)
        op_h = prequantum_operator(h, model, potential, True)
        op_display = prequantum_operator(display_reference, model, potential, True)
        display_worst = 0.0
        display_scale = 0.0
        for psi in sections:
            commutator = op_f.apply(op_h.apply(psi)) - op_h.apply(op_f.apply(psi))
            display = op_display.apply(psi).times_i_scaled(ex.const(FOUR_PI))
            residual = commutator - display
            for point in points:
                display_worst = max(display_worst, residual.magnitude_at(point))
                display_scale = max(display_scale, display.magnitude_at(point))
        details["display_residual"] = display_worst / max(display_scale, 1e-300)

    return CheckResult(
        f"commutator_{pair_name}",
        error < threshold,
        threshold,
        error,
        worst_point.as_dict() if worst_point else None,
        seed,
        details=details,
    )


def commutator_suite(
    model, potential, sections, points, relative_threshold=1e-9, absolute_threshold=1e-9, seed=None
) -> list:
    """All six coordinate-pair commutator checks, in a fixed order."""
    coordinates = {name: ex.Coordinate(name) for name in ("u", "v", "r", "t")}
    displays = _commutator_displays(model)
    results = []
    for a, b in (("u", "v"), ("u", "r"), ("u", "t"), ("v", "r"), ("v", "t"), ("r", "t")):
        results.append(
            commutator_check(
                coordinates[a],
                coordinates[b],
                f"{a}{b}",
                model,
                potential,
                sections,
                points,
                relative_threshold,
                absolute_threshold,
                seed,
                display_reference=displays.get((a, b)),
            )
        )
    return results


def geometric_operator_report(
    model, potential, sections, points, chain_threshold=1e-9, seed=None, hermitian=True
) -> list:
    """Operator identities for the radius, sphere-area and ball-volume functions.

    The chain rule  (g(r))-hat = g'(r) D_r - g(r)  with D_r the derivative
    part of the radius operator follows from the defining relation of
    Hamiltonian fields and must hold; it is asserted.  The alternative
    relations

        (4 pi r^2)-hat   = 4 pi r      r-hat +   D_r
        (4 pi r^3/3)-hat = (4 pi/3) r^2 r-hat + 2 D_r

    do not follow from it (they differ by derivative terms); their
    residuals are emitted for inspection and never asserted.
    """
    radius_op = prequantum_operator(ex.R, model, potential, hermitian)
    area = ex.mul(ex.const(FOUR_PI), ex.power(ex.R, 2))
    volume = ex.mul(ex.const(FOUR_PI / 3.0), ex.power(ex.R, 3))
    area_slope = ex.mul(ex.const(2.0 * FOUR_PI), ex.R)
    volume_slope = ex.mul(ex.const(FOUR_PI), ex.power(ex.R, 2))

    worst = 0.0
    worst_point = None
    scale = 0.0
    for g, slope in ((ex.R, ex.ONE), (area, area_slope), (volume, volume_slope)):
        op_g = prequantum_operator(g, model, potential, hermitian)
        for psi in sections:
            lhs = op_g.apply(psi)
            rhs = radius_op.derivative_part(psi).scaled_real(slope) - psi.scaled_real(g)
            residual = lhs - rhs
            for point in points:
                magnitude = residual.magnitude_at(point)
                scale = max(scale, lhs.magnitude_at(point))
                if magnitude > worst:
                    worst, worst_point = magnitude, point
    chain = CheckResult(
        "operator_chain_rule",
        worst / max(scale, 1e-300) < chain_threshold,
        chain_threshold,
        worst / max(scale, 1e-300),
        worst_point.as_dict() if worst_point else None,
        seed,
        details={"scale": scale},
    )

    reports = [chain]
    for name, g, prefactor, multiplier in (
        ("operator_printed_area_relation", area, ex.mul(ex.const(FOUR_PI), ex.R), 1.0),
        (
            "operator_printed_volume_relation",
            volume,
            ex.mul(ex.const(FOUR_PI / 3.0), ex.power(ex.R, 2)),
            2.0,
        ),
    ):
        op_g = prequantum_operator(g, model, potential, hermitian)
        worst = 0.0
        scale = 0.0
        for psi in sections:
            lhs = op_g.apply(psi)
            rhs = radius_op.apply(psi).scaled_real(prefactor) + radius_op.derivative_part(
                psi
            ).scaled_real(ex.const(multiplier))
            residual = lhs - rhs
            for point in points:
                worst = max(worst, residual.magnitude_at(point))
                scale = max(scale, lhs.magnitude_at(point))
        reports.append(
            CheckResult(
                name,
                True,
                chain_threshold,
                worst / max(scale, 1e-300),
                None,
                seed,
                assertable=False,
                details={"expected_nonzero": True, "scale": scale},
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Radial eigen-equation residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """A coordinate box inside the chart, for bounded L2 norms."""

    u: tuple
    v: tuple
    r: tuple
    t: tuple

    def intervals(self):
        return (self.u, self.v, self.r, self.t)

    @staticmethod
    def default(mass: float) -> "Box":
        return Box(u=(0.6, 2.5), v=(0.5, 5.5), r=(2.5 * mass, 8.0 * mass), t=(-mass, mass))


def box_l2_norm(section: Section, model, box: Box, nodes: int = 6) -> float:
    """L2 norm of a section over the box with the sympl^2/2 volume."""
    density = wedge(model.symplectic_form, model.symplectic_form).coefficient((0, 1, 2, 3))
    grids = []
    weights = []
    for low, high in box.intervals():
        if not low < high:
            raise ValueError("box intervals must be increasing")
        x, w = np.polynomial.legendre.leggauss(nodes)
        grids.append(0.5 * (high - low) * (x + 1.0) + low)
        weights.append(0.5 * (high - low) * w)
    total = 0.0
    for iu, uu in enumerate(grids[0]):
        for iv, vv in enumerate(grids[1]):
            for ir, rr in enumerate(grids[2]):
                for it, tt in enumerate(grids[3]):
                    point = ChartPoint(u=float(uu), v=float(vv), r=float(rr), t=float(tt), m=model.mass)
                    weight = (
                        weights[0][iu] * weights[1][iv] * weights[2][ir] * weights[3][it]
                    )
                    total += (
                        weight
                        * 0.5
                        * density.evaluate(point)
                        * abs(section.evaluate_at(point)) ** 2
                    )
    return math.sqrt(max(total, 0.0))


def radial_eigen_residual(
    psi: Section, eigenvalue: float, model, potential, box: Box, nodes: int = 6, hermitian: bool = True
):
    """Residual section (r-hat - eigenvalue) psi and its L2 norm over the box."""
    radius_op = prequantum_operator(ex.R, model, potential, hermitian)
    residual = radius_op.apply(psi) - psi.scaled_real(ex.const(eigenvalue))
    return residual, box_l2_norm(residual, model, box, nodes)


def separable_radial_residual(
    kappa: float, chi: Expression, eigenvalue: float, model, potential, hermitian: bool = True
):
    """Algebraic residual factor for the ansatz psi = exp(i kappa t) chi(r).

    The radius operator acts on the ansatz by multiplication, so the
    residual is factor * psi with factor returned as an (re, im) expression
    pair:

        hermitian:     (-m h kappa + m theta(H_r) - r - eigenvalue,  0)
        nonhermitian:  (-r - eigenvalue,  m h kappa - m theta(H_r))

    where h is the single component of H_r.
    """
    for name in ("u", "v", "t"):
        if not ex.is_zero(chi.diff(name)):
            raise ValueError("the radial profile chi must depend on r only")
    radial = hamiltonian_field(ex.R, model)
    h = radial.field.components[3]
    paired = pairing(potential.theta, radial.field)
    if hermitian:
        re = ex.add(
            ex.mul(ex.const(-kappa), ex.M, h),
            ex.mul(ex.M, paired),
            ex.mul(ex.NEG_ONE, ex.R),
            ex.const(-eigenvalue),
        )
        return re, ex.ZERO
    re = ex.add(ex.mul(ex.NEG_ONE, ex.R), ex.const(-eigenvalue))
    im = ex.add(ex.mul(ex.const(kappa), ex.M, h), ex.mul(ex.NEG_ONE, ex.M, paired))
    return re, im


def phase_section(kappa: float, chi: Expression = ex.ONE) -> Section:
    """The separable section exp(i kappa t) chi(r)."""
    phase = ex.mul(ex.const(kappa), ex.T)
    return Section(ex.mul(chi, ex.cos(phase)), ex.mul(chi, ex.sin(phase)))


# ---------------------------------------------------------------------------
# Integrality
# ---------------------------------------------------------------------------


def integrality_report(model, spec: QuadratureSpec | None = None, seed=None) -> CheckResult:
    """Sphere classes of the symplectic form under the candidate curvature
    normalisations, with integrality flags.

    The class of sympl itself equals the mass; dividing by the mass always
    gives 1 (integral, but mass-specific); dividing additionally by 2 pi,
    as the classical integrality condition for line bundles would, gives
    1/(2 pi), which is never an integer.  Choosing sympl as the curvature
    instead demands the mass itself be an integer multiple of a fundamental
    unit.  All three numbers are reported; nothing here is asserted.
    """
    if spec is None:
        spec = QuadratureSpec(n_u=32, n_v=64, r0=3.0 * model.mass)
    integral = surface_integral(model.symplectic_form, spec, model).value
    unit_scaled = integral / model.mass
    weil_scaled = integral / (2.0 * math.pi * model.mass)

    def is_integer(value):
        return bool(abs(value - round(value)) < 1e-8)

    details = {
        "surface_class": integral,
        "options": {
            "curvature_sympl_over_m": {
                "class": unit_scaled,
                "integer": is_integer(unit_scaled),
            },
            "curvature_sympl": {
                "class": integral,
                "integer": is_integer(integral),
                "mass_quantized": is_integer(integral),
            },
        },
        "weil_normalized_class": {
            "class": weil_scaled,
            "integer": is_integer(weil_scaled),
        },
    }
    return CheckResult(
        "integrality_class",
        True,
        1e-10,
        abs(integral - model.mass),
        None,
        seed,
        assertable=False,
        details=details,
    )
