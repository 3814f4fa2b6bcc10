"""Verification-suite orchestration: configuration, the check catalogue,
JSON report assembly, and CSV emission.

The catalogue runs, in order: the gradient relation, observer
normalisation, flux-form identities, foliation nondegeneracy, the
symplectic-structure checks, Hamiltonian closed-form comparisons, the
bracket table, the sphere integral, connection curvature, the six
commutator checks, the geometric-operator identities, and the integrality
report.  Checks marked non-assertable (the deliberately inconsistent
printed operator relations and the integrality numbers) never affect the
exit code.

Reports are deterministic: identical configuration gives a byte-identical
body; wall time lives outside the body.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import expressions as ex
from .expressions import ChartPoint
from .hamiltonian import (
    QuadratureSpec,
    bracket_table,
    poisson_bracket,
    sphere_sum,
    surface_integral,
    verify_hamiltonian_fields,
)
from .prequantum import (
    Box,
    ConnectionPotential,
    CurvatureScale,
    commutator_suite,
    curvature_section_check,
    geometric_operator_report,
    integrality_report,
    phase_section,
    random_sections,
    separable_radial_residual,
    verify_curvature_potential,
)
from .reports import CheckResult
from .sampling import OPERATOR_WINDOW, sample_points
from .spacetime import (
    foliation_report,
    schwarzschild,
    verify_gradient_relation,
    verify_observer,
    verify_omega_identities,
    verify_symplectic,
)


class ConfigError(ValueError):
    """Invalid run configuration (bad value, unknown key, unknown check)."""


DEFAULT_TOLERANCES = {
    "gradient_relation": 1e-11,
    "observer_unit_norm": 1e-12,
    "observer_orthogonality": 1e-12,
    "flux_wedge_square": 1e-12,
    "flux_closure_relation": 1e-11,
    "flux_volume_identity": 1e-11,
    "foliation_leaf_pfaffian": 1e-6,
    "foliation_volume_form": 1e-10,
    "foliation_leaf_closedness": 0.0,
    "closed_rescaled_flux": 1e-11,
    "dual_flux_potential": 1e-12,
    "dual_flux_square": 1e-12,
    "symplectic_square_identity": 1e-11,
    "symplectic_nondegeneracy": 0.0,
    "hamiltonian_u": 1e-10,
    "hamiltonian_v": 1e-10,
    "hamiltonian_r": 1e-10,
    "hamiltonian_t": 1e-10,
    "bracket_uv": 1e-10,
    "bracket_rt": 1e-10,
    "bracket_cross_zeros": 1e-10,
    "bracket_antisymmetry": 1e-10,
    "jacobi_identity": 1e-9,
    "sphere_integral_mass": 1e-10,
    "sphere_integral_dual_zero": 1e-12,
    "connection_curvature_potential": 1e-11,
    "connection_curvature_sections": 1e-9,
    "commutator_uv": 1e-9,
    "commutator_ur": 1e-9,
    "commutator_ut": 1e-9,
    "commutator_vr": 1e-9,
    "commutator_vt": 1e-9,
    "commutator_rt": 1e-9,
    "operator_chain_rule": 1e-9,
    "operator_printed_area_relation": 1e-9,
    "operator_printed_volume_relation": 1e-9,
    "integrality_class": 1e-10,
}

CHECK_CATALOGUE = (
    "gradient_relation",
    "observer_unit_norm",
    "observer_orthogonality",
    "flux_wedge_square",
    "flux_closure_relation",
    "flux_volume_identity",
    "foliation_leaf_pfaffian",
    "foliation_volume_form",
    "foliation_leaf_closedness",
    "closed_rescaled_flux",
    "dual_flux_potential",
    "dual_flux_square",
    "symplectic_square_identity",
    "symplectic_nondegeneracy",
    "hamiltonian_u",
    "hamiltonian_v",
    "hamiltonian_r",
    "hamiltonian_t",
    "bracket_uv",
    "bracket_rt",
    "bracket_cross_zeros",
    "bracket_antisymmetry",
    "jacobi_identity",
    "sphere_integral_mass",
    "sphere_integral_dual_zero",
    "connection_curvature_potential",
    "connection_curvature_sections",
    "commutator_uv",
    "commutator_ur",
    "commutator_ut",
    "commutator_vr",
    "commutator_vt",
    "commutator_rt",
    "operator_chain_rule",
    "operator_printed_area_relation",
    "operator_printed_volume_relation",
    "integrality_class",
)


@dataclass
class RunConfig:
    """Configuration of a verification run.

    ``r0`` and ``box`` default to mass-scaled values when left unset;
    ``tolerances`` overrides individual catalogue thresholds by name.
    """

    mass: float = 1.0
    seed: int = 1234
    n_samples: int = 100
    n_sections: int = 10
    tolerances: dict = field(default_factory=dict)
    n_u: int = 32
    n_v: int = 64
    r0: float | None = None
    t0: float = 0.0
    box: Box | None = None
    scale_mode: str = "plain"
    output_dir: str = "."

    def validate(self):
        if not (isinstance(self.mass, (int, float)) and math.isfinite(self.mass) and self.mass > 0):
            raise ConfigError(f"mass must be positive and finite, got {self.mass!r}")
        if self.n_samples < 10:
            raise ConfigError("n_samples must be at least 10")
        if self.n_sections < 1:
            raise ConfigError("n_sections must be at least 1")
        if self.n_u < 2 or self.n_v < 4:
            raise ConfigError("quadrature needs n_u >= 2 and n_v >= 4")
        for name, value in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown check name in tolerances: {name!r}")
            if not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError(f"tolerance for {name!r} must be positive")
        if self.scale_mode not in ("plain", "weil"):
            raise ConfigError(f"scale_mode must be 'plain' or 'weil', got {self.scale_mode!r}")
        horizon = 2.0 * self.mass * (1.0 + 1e-6)
        if self.r0 is not None and not self.r0 > horizon:
            raise ConfigError(f"sphere radius r0={self.r0} must exceed {horizon}")
        if self.box is not None:
            for name, (low, high) in zip("uvrt", self.box.intervals()):
                if not low < high:
                    raise ConfigError(f"box interval {name} must be increasing")
            if not (0.0 < self.box.u[0] and self.box.u[1] < math.pi):
                raise ConfigError("box colatitude interval must sit inside (0, pi)")
            if not (0.0 < self.box.v[0] and self.box.v[1] < 2.0 * math.pi):
                raise ConfigError("box azimuth interval must sit inside (0, 2 pi)")
            if not self.box.r[0] > horizon:
                raise ConfigError("box radial interval must sit outside the horizon")

    def resolved_r0(self) -> float:
        return 3.0 * self.mass if self.r0 is None else self.r0

    def resolved_box(self) -> Box:
        return Box.default(self.mass) if self.box is None else self.box

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def echo(self) -> dict:
        box = self.resolved_box()
        return {
            "mass": self.mass,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "n_sections": self.n_sections,
            "tolerances": dict(sorted(self.tolerances.items())),
            "n_u": self.n_u,
            "n_v": self.n_v,
            "r0": self.resolved_r0(),
            "t0": self.t0,
            "box": {"u": list(box.u), "v": list(box.v), "r": list(box.r), "t": list(box.t)},
            "scale_mode": self.scale_mode,
            "output_dir": self.output_dir,
        }


# ---------------------------------------------------------------------------
# Configuration files: flat "key = value" lines, '#' comments.
# ---------------------------------------------------------------------------

_CONFIG_KEYS = (
    "mass",
    "seed",
    "samples",
    "sections",
    "nu",
    "nv",
    "r0",
    "t0",
    "scale_mode",
    "out",
    "box_u",
    "box_v",
    "box_r",
    "box_t",
)


def load_config_file(path) -> dict:
    """Parse a flat key-value config file into raw string pairs."""
    raw = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not (key in _CONFIG_KEYS or key.startswith("tolerance.")):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def _parse_interval(text: str, key: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{key} must be 'low,high'")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as err:
        raise ConfigError(f"{key} must be numeric: {text!r}") from err


def config_from_sources(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from raw file values, then apply flag overrides."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    config = RunConfig()
    tolerances = {}
    box_parts = {}
    try:
        for key, value in merged.items():
            if key == "mass":
                config.mass = float(value)
            elif key == "seed":
                config.seed = int(value)
            elif key == "samples":
                config.n_samples = int(value)
            elif key == "sections":
                config.n_sections = int(value)
            elif key == "nu":
                config.n_u = int(value)
            elif key == "nv":
                config.n_v = int(value)
            elif key == "r0":
                config.r0 = float(value)
            elif key == "t0":
                config.t0 = float(value)
            elif key == "scale_mode":
                config.scale_mode = str(value)
            elif key == "out":
                config.output_dir = str(value)
            elif key.startswith("tolerance."):
                tolerances[key.split(".", 1)[1]] = float(value)
            elif key in ("box_u", "box_v", "box_r", "box_t"):
                box_parts[key[-1]] = _parse_interval(str(value), key)
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"bad configuration value: {err}") from err
    config.tolerances = tolerances
    if box_parts:
        default = Box.default(config.mass)
        config.box = Box(
            u=box_parts.get("u", default.u),
            v=box_parts.get("v", default.v),
            r=box_parts.get("r", default.r),
            t=box_parts.get("t", default.t),
        )
    config.validate()
    return config


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------


@dataclass
class SuiteReport:
    body: dict
    wall_time_seconds: float

    @property
    def checks(self) -> list:
        return self.body["checks"]

    @property
    def all_passed(self) -> bool:
        return all(check["pass"] for check in self.checks if check["assertable"])

    @property
    def exit_code(self) -> int:
        return 0 if self.all_passed else 1

    def body_json(self) -> str:
        return json.dumps(self.body, sort_keys=True, indent=2)

    def to_json(self) -> str:
        return json.dumps(
            {"body": self.body, "wall_time_seconds": self.wall_time_seconds},
            sort_keys=True,
            indent=2,
        )


def run_suite(config: RunConfig, only: str | None = None) -> SuiteReport:
    """Execute the check catalogue (or a single named check) and assemble
    the deterministic report."""
    config.validate()
    if only is not None and only not in CHECK_CATALOGUE:
        raise ConfigError(f"unknown check {only!r}")
    started = time.perf_counter()

    model = schwarzschild(config.mass)
    scale = CurvatureScale.PLAIN if config.scale_mode == "plain" else CurvatureScale.WEIL
    potential = ConnectionPotential.monopole(model, scale)
    identity_points = sample_points(config.mass, config.n_samples, config.seed)
    operator_points = sample_points(
        config.mass, max(10, config.n_samples // 5), config.seed + 1, OPERATOR_WINDOW
    )
    sections = random_sections(config.mass, config.n_sections, config.seed + 2)
    quadrature = QuadratureSpec(
        n_u=config.n_u, n_v=config.n_v, r0=config.resolved_r0(), t0=config.t0
    )
    tol = config.tolerance
    seed = config.seed

    results: dict[str, CheckResult] = {}

    def record(items):
        for item in items if isinstance(items, list) else [items]:
            results[item.name] = item

    def wanted(*names) -> bool:
        return only is None or only in names

    if wanted("gradient_relation"):
        record(
            verify_gradient_relation(
                model, identity_points, threshold=tol("gradient_relation"), seed=seed
            )
        )
    if wanted("observer_unit_norm", "observer_orthogonality"):
        record(
            verify_observer(
                model, identity_points, threshold=tol("observer_unit_norm"), seed=seed
            )
        )
    if wanted("flux_wedge_square", "flux_closure_relation", "flux_volume_identity"):
        record(
            verify_omega_identities(
                model,
                identity_points,
                threshold=tol("flux_closure_relation"),
                square_threshold=tol("flux_wedge_square"),
                seed=seed,
            )
        )
    if wanted("foliation_leaf_pfaffian", "foliation_volume_form", "foliation_leaf_closedness"):
        report = foliation_report(
            model,
            identity_points,
            pfaffian_threshold=tol("foliation_leaf_pfaffian"),
            volume_threshold=tol("foliation_volume_form"),
            seed=seed,
        )
        record(
            [
                CheckResult(
                    "foliation_leaf_pfaffian",
                    report.leaf_nondegenerate,
                    tol("foliation_leaf_pfaffian"),
                    report.leaf_pfaffian_worst,
                    None,
                    seed,
                    details={"bound": "minimum |pfaffian|/mass over samples"},
                ),
                CheckResult(
                    "foliation_volume_form",
                    report.volume3_nonvanishing,
                    tol("foliation_volume_form"),
                    report.volume3_worst,
                    None,
                    seed,
                    details={"bound": "minimum |volume3 coefficient| over samples"},
                ),
                CheckResult(
                    "foliation_leaf_closedness",
                    report.closed_on_leaves,
                    tol("foliation_leaf_closedness"),
                    0.0,
                    None,
                    seed,
                    details={
                        "structural": "2-forms on 2-dimensional leaves are closed",
                        "pole_degeneracy_is_coordinate_artifact": report.pole_degeneracy_is_coordinate_artifact,
                    },
                ),
            ]
        )
    if wanted(
        "closed_rescaled_flux",
        "dual_flux_potential",
        "dual_flux_square",
        "symplectic_square_identity",
        "symplectic_nondegeneracy",
    ):
        record(
            verify_symplectic(
                model,
                identity_points,
                threshold=tol("symplectic_square_identity"),
                potential_threshold=tol("dual_flux_potential"),
                seed=seed,
            )
        )
    if wanted("hamiltonian_u", "hamiltonian_v", "hamiltonian_r", "hamiltonian_t"):
        record(
            verify_hamiltonian_fields(
                model, identity_points, threshold=tol("hamiltonian_u"), seed=seed
            )
        )
    if wanted(
        "bracket_uv", "bracket_rt", "bracket_cross_zeros", "bracket_antisymmetry", "jacobi_identity"
    ):
        checks, _ = bracket_table(
            model,
            identity_points,
            relative_threshold=tol("bracket_uv"),
            zero_threshold=tol("bracket_cross_zeros"),
            jacobi_threshold=tol("jacobi_identity"),
            seed=seed,
            jacobi_points=operator_points,
        )
        record(checks)
    if wanted("sphere_integral_mass", "sphere_integral_dual_zero"):
        mass_integral = surface_integral(model.symplectic_form, quadrature, model)
        record(
            CheckResult(
                "sphere_integral_mass",
                abs(mass_integral.value - config.mass) < tol("sphere_integral_mass"),
                tol("sphere_integral_mass"),
                abs(mass_integral.value - config.mass),
                None,
                seed,
                details={
                    "value": mass_integral.value,
                    "error_estimate": mass_integral.error_estimate,
                    "r0": quadrature.r0,
                },
            )
        )
        dual_integral = surface_integral(model.dual_flux_form, quadrature, model)
        record(
            CheckResult(
                "sphere_integral_dual_zero",
                abs(dual_integral.value) < tol("sphere_integral_dual_zero"),
                tol("sphere_integral_dual_zero"),
                abs(dual_integral.value),
                None,
                seed,
                details={"value": dual_integral.value},
            )
        )
    if wanted("connection_curvature_potential"):
        record(
            verify_curvature_potential(
                model,
                potential,
                identity_points,
                threshold=tol("connection_curvature_potential"),
                seed=seed,
            )
        )
    if wanted("connection_curvature_sections"):
        record(
            curvature_section_check(
                model,
                potential,
                sections,
                operator_points,
                threshold=tol("connection_curvature_sections"),
                seed=seed,
            )
        )
    commutator_names = (
        "commutator_uv",
        "commutator_ur",
        "commutator_ut",
        "commutator_vr",
        "commutator_vt",
        "commutator_rt",
    )
    if wanted(*commutator_names):
        checks = commutator_suite(
            model,
            potential,
            sections,
            operator_points,
            relative_threshold=tol("commutator_uv"),
            absolute_threshold=tol("commutator_ur"),
            seed=seed,
        )
        record(checks)
    if wanted(
        "operator_chain_rule", "operator_printed_area_relation", "operator_printed_volume_relation"
    ):
        record(
            geometric_operator_report(
                model,
                potential,
                sections,
                operator_points,
                chain_threshold=tol("operator_chain_rule"),
                seed=seed,
            )
        )
    if wanted("integrality_class"):
        record(integrality_report(model, quadrature, seed=seed))

    ordered = [
        results[name].to_dict()
        for name in CHECK_CATALOGUE
        if name in results and (only is None or name == only)
    ]
    body = {
        "version": __version__,
        "seed": config.seed,
        "config": config.echo(),
        "checks": ordered,
    }
    return SuiteReport(body=body, wall_time_seconds=time.perf_counter() - started)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

CSV_KINDS = ("bracket_grid", "omega_coefficient", "eigen_residual", "integral_convergence")


def emit_csv(what: str, config: RunConfig, path=None) -> Path:
    """Write one of the plot-data CSVs and return its path."""
    if what not in CSV_KINDS:
        raise ConfigError(f"unknown CSV selector {what!r}; choose from {CSV_KINDS}")
    config.validate()
    model = schwarzschild(config.mass)
    mass = config.mass
    target = Path(path) if path is not None else Path(config.output_dir) / f"{what}.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    rows: list[str] = []

    if what == "integral_convergence":
        rows.append("n_u,abs_error")
        r0 = config.resolved_r0()
        for n_u in (4, 8, 16, 32, 64):
            value = sphere_sum(model.symplectic_form, model, n_u, 2 * n_u, r0, config.t0)
            rows.append(f"{n_u},{abs(value - mass)!r}")
    elif what == "bracket_grid":
        rows.append("u,r,bracket_uv,bracket_rt")
        bracket_uv = poisson_bracket(ex.U, ex.V, model)
        bracket_rt = poisson_bracket(ex.R, ex.T, model)
        for colatitude in np.linspace(0.3, math.pi - 0.3, 24):
            for radius in np.geomspace(2.2 * mass, 50.0 * mass, 24):
                point = ChartPoint(u=float(colatitude), v=1.0, r=float(radius), t=0.0, m=mass)
                rows.append(
                    f"{float(colatitude)!r},{float(radius)!r},"
                    f"{bracket_uv.evaluate(point)!r},{bracket_rt.evaluate(point)!r}"
                )
    elif what == "omega_coefficient":
        rows.append("u,r,coefficient")
        coefficient = model.flux_form.coefficient((0, 1))
        for colatitude in np.linspace(0.3, math.pi - 0.3, 24):
            for radius in np.geomspace(2.2 * mass, 50.0 * mass, 24):
                point = ChartPoint(u=float(colatitude), v=1.0, r=float(radius), t=0.0, m=mass)
                rows.append(
                    f"{float(colatitude)!r},{float(radius)!r},{coefficient.evaluate(point)!r}"
                )
    elif what == "eigen_residual":
        rows.append("r,residual_abs")
        scale = CurvatureScale.PLAIN if config.scale_mode == "plain" else CurvatureScale.WEIL
        potential = ConnectionPotential.monopole(model, scale)
        kappa = 0.1 / mass
        re_f, im_f = separable_radial_residual(kappa, ex.ONE, 0.0, model, potential)
        psi = phase_section(kappa)
        for radius in np.geomspace(2.2 * mass, 20.0 * mass, 60):
            point = ChartPoint(u=math.pi / 2, v=math.pi, r=float(radius), t=0.0, m=mass)
            factor = complex(re_f.evaluate(point), im_f.evaluate(point))
            rows.append(f"{float(radius)!r},{abs(factor * psi.evaluate_at(point))!r}")

    target.write_text("\n".join(rows) + "\n")
    return target
