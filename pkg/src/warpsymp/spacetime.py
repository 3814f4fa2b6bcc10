"""Static spherically symmetric models and their structural identity checks.

Builds the exterior-region Schwarzschild model (or a generalised static
model from an arbitrary r-dependent warp and leaf area form), derives the
flux 2-form, its Hodge dual, and the symplectic 2-form through the
exterior-calculus pipeline, and provides sampled verification reports for
the identities these objects satisfy:

* the gradient relation  i_R g = -d(warp),
* unit norm and orthogonality of the observer field,
* flux ^ flux = 0  and  d(flux) = -d(warp) ^ flux,
* closedness of lapse * flux, exactness of the dual flux, and the
  top-degree identity for the square of the symplectic form.

The symplectic form is always produced by the construction pipeline
(lapse * flux + dual flux); its coordinate expression is only ever used as
a derived assertion, never entered by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import expressions as ex
from .expressions import ChartPoint, Expression
from .exterior import (
    KForm,
    MetricTensor,
    VectorField,
    exterior_derivative,
    flat,
    hodge_star,
    interior_product,
    metric_inner,
    sharp,
    wedge,
)
from .reports import CheckResult, worst_expression_error, worst_form_error
from .sampling import sample_points

FOUR_PI = 4.0 * math.pi


def schwarzschild_factor() -> Expression:
    """The lapse squared, 1 - 2m/r."""
    return ex.ONE - ex.const(2.0) * ex.M / ex.R


@dataclass(frozen=True)
class SpacetimeModel:
    """A static exterior model together with its derived structure.

    ``flux_form`` is the angular 2-form -(1/4pi) i_R i_X vol whose sphere
    integral measures the mass; ``dual_flux_form`` is its Hodge dual; their
    combination ``symplectic_form`` = lapse * flux + dual is the closed
    nondegenerate 2-form the rest of the package works with.  Instances are
    immutable and safe to share across threads.
    """

    mass: float
    warp: Expression
    metric: MetricTensor
    gravitational_field: VectorField
    observer_field: VectorField
    lapse: Expression
    volume_form: KForm
    flux_form: KForm
    dual_flux_form: KForm
    symplectic_form: KForm
    closure_check: CheckResult | None = None


def _derive_structure(metric, warp, gravitational_field, observer_field):
    volume_form = hodge_star(KForm.scalar(ex.ONE), metric)
    flux_form = interior_product(
        gravitational_field, interior_product(observer_field, volume_form)
    ).scaled(ex.const(-1.0 / FOUR_PI))
    dual_flux_form = hodge_star(flux_form, metric)
    lapse = ex.exp(warp)
    symplectic_form = flux_form.scaled(lapse) + dual_flux_form
    return lapse, volume_form, flux_form, dual_flux_form, symplectic_form


def schwarzschild(mass: float) -> SpacetimeModel:
    """Exterior Schwarzschild model of the given mass (geometric units).

    The metric, warp, gravitational field and observer field are entered in
    their standard closed forms; everything else is derived.
    """
    if not (isinstance(mass, (int, float)) and math.isfinite(mass) and mass > 0):
        raise ValueError(f"mass must be a positive finite number, got {mass!r}")
    mass = float(mass)
    factor = schwarzschild_factor()
    metric = MetricTensor.from_entries(
        {
            (0, 0): ex.power(ex.R, 2),
            (1, 1): ex.mul(ex.power(ex.R, 2), ex.power(ex.sin(ex.U), 2)),
            (2, 2): ex.power(factor, -1),
            (3, 3): ex.mul(ex.NEG_ONE, factor),
        }
    )
    warp = ex.log(ex.power(factor, Fraction(1, 2)))
    gravitational_field = VectorField(
        (ex.ZERO, ex.ZERO, ex.mul(ex.NEG_ONE, ex.quotient(ex.M, ex.power(ex.R, 2))), ex.ZERO)
    )
    observer_field = VectorField(
        (ex.ZERO, ex.ZERO, ex.ZERO, ex.mul(ex.NEG_ONE, ex.power(factor, Fraction(-1, 2))))
    )
    lapse, volume, flux, dual, symplectic = _derive_structure(
        metric, warp, gravitational_field, observer_field
    )
    return SpacetimeModel(
        mass=mass,
        warp=warp,
        metric=metric,
        gravitational_field=gravitational_field,
        observer_field=observer_field,
        lapse=lapse,
        volume_form=volume,
        flux_form=flux,
        dual_flux_form=dual,
        symplectic_form=symplectic,
    )


def generalized_static(
    warp: Expression,
    leaf_area_form: KForm,
    mass: float,
    check_samples: int = 32,
    check_seed: int = 97,
    closure_threshold: float = 1e-11,
) -> SpacetimeModel:
    """Static warped model from an r-dependent warp and a leaf area form.

    The metric is g0 - exp(2 warp) dt (x) dt with g0 block-diagonal: a leaf
    block whose area form is the given 2-form and a radial entry
    exp(-2 warp).  Only the leaf area enters the derived structure, so the
    leaf block is stored as the conformal representative rho * (du^2 + dv^2);
    the gravitational field is the upward gradient of -warp and the observer
    field the unit timelike direction.

    The closure hypothesis d(flux) = -d(warp) ^ flux is *checked* on a
    seeded sample, not assumed: the model is returned either way with the
    outcome attached as ``closure_check``.
    """
    if not (isinstance(mass, (int, float)) and math.isfinite(mass) and mass > 0):
        raise ValueError(f"mass must be a positive finite number, got {mass!r}")
    mass = float(mass)
    for name in ("u", "v", "t"):
        if not ex.is_zero(warp.diff(name)):
            raise ValueError("the warp must depend on the radius only")
    if leaf_area_form.degree != 2:
        raise ValueError("the leaf area form must be a 2-form")
    if any(index != (0, 1) for index, _ in leaf_area_form.terms):
        raise ValueError("the leaf area form must live in the du^dv plane")
    density = leaf_area_form.coefficient((0, 1))

    metric = MetricTensor.from_entries(
        {
            (0, 0): density,
            (1, 1): density,
            (2, 2): ex.exp(ex.mul(ex.const(-2.0), warp)),
            (3, 3): ex.mul(ex.NEG_ONE, ex.exp(ex.mul(ex.const(2.0), warp))),
        }
    )
    warp_differential = exterior_derivative(KForm.scalar(warp))
    gravitational_field = sharp(warp_differential.scaled(ex.NEG_ONE), metric)
    observer_field = VectorField(
        (ex.ZERO, ex.ZERO, ex.ZERO, ex.mul(ex.NEG_ONE, ex.exp(ex.mul(ex.NEG_ONE, warp))))
    )
    lapse, volume, flux, dual, symplectic = _derive_structure(
        metric, warp, gravitational_field, observer_field
    )

    residual = exterior_derivative(flux) + wedge(warp_differential, flux)
    points = sample_points(mass, check_samples, check_seed)
    worst, worst_point = worst_form_error(residual, points)
    square = wedge(symplectic, symplectic)
    square_magnitudes = [square.max_abs_at(p) for p in points]
    closure_check = CheckResult(
        name="flux_closure_hypothesis",
        passed=worst < closure_threshold,
        threshold=closure_threshold,
        worst_error=worst,
        worst_point=worst_point,
        seed=check_seed,
        assertable=False,
        details={"symplectic_square_min": min(square_magnitudes, default=0.0)},
    )
    return SpacetimeModel(
        mass=mass,
        warp=warp,
        metric=metric,
        gravitational_field=gravitational_field,
        observer_field=observer_field,
        lapse=lapse,
        volume_form=volume,
        flux_form=flux,
        dual_flux_form=dual,
        symplectic_form=symplectic,
        closure_check=closure_check,
    )


# ---------------------------------------------------------------------------
# Verification reports
# ---------------------------------------------------------------------------


def verify_gradient_relation(model, points, threshold=1e-11, seed=None) -> CheckResult:
    """Check i_R g + d(warp) = 0 at the sampled points."""
    residual = flat(model.gravitational_field, model.metric) + exterior_derivative(
        KForm.scalar(model.warp)
    )
    worst, worst_point = worst_form_error(residual, points)
    return CheckResult("gradient_relation", worst < threshold, threshold, worst, worst_point, seed)


def verify_observer(model, points, threshold=1e-12, seed=None) -> list:
    """Check g(X, X) = -1 and g(R, X) = 0 at the sampled points."""
    x = model.observer_field
    unit = metric_inner(x, x, model.metric) + ex.ONE
    orthogonal = metric_inner(model.gravitational_field, x, model.metric)
    results = []
    for name, expression in (("observer_unit_norm", unit), ("observer_orthogonality", orthogonal)):
        worst, worst_point = worst_expression_error(expression, points)
        results.append(CheckResult(name, worst < threshold, threshold, worst, worst_point, seed))
    return results


def _flux_volume_reference(model) -> KForm:
    """-(g(R,R) / (4 pi lapse)) r^2 sin(u) du^dv^dr, the 3-form d(flux) equals."""
    r_norm = metric_inner(model.gravitational_field, model.gravitational_field, model.metric)
    coefficient = ex.mul(
        ex.NEG_ONE,
        ex.quotient(r_norm, ex.mul(ex.const(FOUR_PI), model.lapse)),
        ex.power(ex.R, 2),
        ex.sin(ex.U),
    )
    return KForm.from_terms(3, {(0, 1, 2): coefficient})


def verify_omega_identities(
    model, points, threshold=1e-11, square_threshold=1e-12, seed=None
) -> list:
    """Check the three structural identities of the flux 2-form."""
    flux = model.flux_form
    warp_differential = exterior_derivative(KForm.scalar(model.warp))
    results = []

    square = wedge(flux, flux)
    worst, worst_point = worst_form_error(square, points)
    results.append(
        CheckResult(
            "flux_wedge_square", worst < square_threshold, square_threshold, worst, worst_point, seed
        )
    )

    closure = exterior_derivative(flux) + wedge(warp_differential, flux)
    worst, worst_point = worst_form_error(closure, points)
    results.append(
        CheckResult("flux_closure_relation", worst < threshold, threshold, worst, worst_point, seed)
    )

    volume_identity = exterior_derivative(flux) - _flux_volume_reference(model)
    worst, worst_point = worst_form_error(volume_identity, points)
    results.append(
        CheckResult("flux_volume_identity", worst < threshold, threshold, worst, worst_point, seed)
    )
    return results


def dual_flux_potential(model) -> KForm:
    """The 1-form lapse * dt / (4 pi), whose exterior derivative is the dual flux."""
    return KForm.from_terms(1, {(3,): ex.quotient(model.lapse, ex.const(FOUR_PI))})


def verify_symplectic(
    model, points, threshold=1e-11, potential_threshold=1e-12, seed=None
) -> list:
    """Check the identities behind nondegeneracy and closedness of the symplectic form."""
    results = []

    rescaled = exterior_derivative(model.flux_form.scaled(model.lapse))
    worst, worst_point = worst_form_error(rescaled, points)
    results.append(
        CheckResult("closed_rescaled_flux", worst < threshold, threshold, worst, worst_point, seed)
    )

    potential_residual = model.dual_flux_form - exterior_derivative(dual_flux_potential(model))
    worst, worst_point = worst_form_error(potential_residual, points)
    results.append(
        CheckResult(
            "dual_flux_potential",
            worst < potential_threshold,
            potential_threshold,
            worst,
            worst_point,
            seed,
        )
    )

    dual_square = wedge(model.dual_flux_form, model.dual_flux_form)
    worst, worst_point = worst_form_error(dual_square, points)
    results.append(
        CheckResult(
            "dual_flux_square", worst < potential_threshold, potential_threshold, worst, worst_point, seed
        )
    )

    r_norm = metric_inner(model.gravitational_field, model.gravitational_field, model.metric)
    scale = ex.mul(ex.const(2.0 / FOUR_PI**2), model.lapse, r_norm)
    square_identity = wedge(model.symplectic_form, model.symplectic_form) - model.volume_form.scaled(scale)
    worst, worst_point = worst_form_error(square_identity, points)
    results.append(
        CheckResult(
            "symplectic_square_identity", worst < threshold, threshold, worst, worst_point, seed
        )
    )

    square = wedge(model.symplectic_form, model.symplectic_form)
    values = [square.coefficient((0, 1, 2, 3)).evaluate(p) for p in points]
    minimum = min(abs(value) for value in values) if values else 0.0
    same_sign = all(value > 0 for value in values) or all(value < 0 for value in values)
    results.append(
        CheckResult(
            "symplectic_nondegeneracy",
            bool(values) and same_sign and minimum > 0.0,
            0.0,
            minimum,
            None,
            seed,
            details={"single_sign": same_sign, "min_magnitude": minimum},
        )
    )
    return results


@dataclass
class FoliationReport:
    """Sampled nondegeneracy data for the spatial foliation by spheres.

    The leaf Pfaffian is the du^dv coefficient of the flux form restricted
    to a sphere; the 3-form -d(warp)^flux is the induced volume on the
    spatial slice.  Restricted to the 2-dimensional leaves every 2-form is
    closed, so ``closed_on_leaves`` is recorded as structurally true.  The
    Pfaffian vanishes like sin(u) toward the poles; the report checks that
    this is a pure coordinate artifact (the ratio Pfaffian/sin(u) does not
    depend on u) and flags it as such.
    """

    leaf_nondegenerate: bool
    leaf_pfaffian_worst: float
    volume3_nonvanishing: bool
    volume3_worst: float
    closed_on_leaves: bool
    pole_degeneracy_is_coordinate_artifact: bool
    thresholds: dict
    seed: int | None
    sampled_points: list

    def to_dict(self) -> dict:
        return {
            "leaf_nondegenerate": self.leaf_nondegenerate,
            "leaf_pfaffian_worst": self.leaf_pfaffian_worst,
            "volume3_nonvanishing": self.volume3_nonvanishing,
            "volume3_worst": self.volume3_worst,
            "closed_on_leaves": self.closed_on_leaves,
            "pole_degeneracy_is_coordinate_artifact": self.pole_degeneracy_is_coordinate_artifact,
            "thresholds": self.thresholds,
            "seed": self.seed,
            "sampled_points": self.sampled_points,
        }


def foliation_report(
    model,
    points,
    pfaffian_threshold=1e-6,
    volume_threshold=1e-10,
    seed=None,
) -> FoliationReport:
    """Sample the leaf Pfaffian and the slice volume 3-form over chart points.

    ``pfaffian_threshold`` is compared against |Pfaffian|/m, which is
    dimensionless; ``volume_threshold`` against the (already dimensionless)
    coefficient of -d(warp)^flux.
    """
    pfaffian = model.flux_form.coefficient((0, 1))
    warp_differential = exterior_derivative(KForm.scalar(model.warp))
    volume3 = wedge(warp_differential.scaled(ex.NEG_ONE), model.flux_form)
    volume3_coefficient = volume3.coefficient((0, 1, 2))

    sampled = []
    pf_min = math.inf
    vol_min = math.inf
    for point in points:
        pf = pfaffian.evaluate(point)
        vol = volume3_coefficient.evaluate(point)
        sampled.append({"point": point.as_dict(), "pfaffian": pf, "volume3": vol})
        pf_min = min(pf_min, abs(pf) / model.mass)
        vol_min = min(vol_min, abs(vol))

    # Pfaffian / sin(u) must not depend on u if the pole degeneracy is a
    # pure coordinate effect; compare at two colatitudes, same radius.
    reference_radius = 3.0 * model.mass
    probe = []
    for colatitude in (1e-3, math.pi / 2):
        point = ChartPoint(u=colatitude, v=math.pi, r=reference_radius, t=0.0, m=model.mass)
        probe.append(pfaffian.evaluate(point) / math.sin(colatitude))
    artifact = abs(probe[0] - probe[1]) <= 1e-9 * max(abs(probe[0]), abs(probe[1]))

    thresholds = {
        "pfaffian_over_mass": pfaffian_threshold,
        "volume3": volume_threshold,
    }
    return FoliationReport(
        leaf_nondegenerate=pf_min > pfaffian_threshold,
        leaf_pfaffian_worst=pf_min if math.isfinite(pf_min) else 0.0,
        volume3_nonvanishing=vol_min > volume_threshold,
        volume3_worst=vol_min if math.isfinite(vol_min) else 0.0,
        closed_on_leaves=True,
        pole_degeneracy_is_coordinate_artifact=artifact,
        thresholds=thresholds,
        seed=seed,
        sampled_points=sampled,
    )
