"""Seeded random sampling of exterior-chart points for identity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import ChartPoint


@dataclass(frozen=True)
class SampleWindow:
    """Coordinate window for random sampling, in units tied to the mass.

    Radii are drawn log-uniformly from (2m(1 + r_margin), r_max_factor * m),
    angles uniformly inside the margins, time uniformly in a band of a few
    masses.  The default r and u margins are much wider than the chart's
    horizon guard: the identity checks subtract expressions whose terms grow
    like inverse powers of (1 - 2m/r) and of sin(u), so double precision
    loses roughly 1.5 digits per decade of that growth.  A margin of 1e-2
    keeps cancellation noise orders of magnitude below the 1e-11 .. 1e-12
    thresholds; near-horizon studies pass a smaller margin explicitly and
    read the conditioning data off the report.
    """

    r_margin: float = 1e-2
    r_max_factor: float = 100.0
    u_margin: float = 1e-2
    v_margin: float = 1e-2
    t_half_width_factor: float = 5.0

    def __post_init__(self):
        if self.r_margin <= 0 or self.r_max_factor <= 2.0:
            raise ValueError("radial window must sit strictly outside the horizon")
        if not 0 < self.u_margin < math.pi / 2:
            raise ValueError("u margin must lie in (0, pi/2)")
        if not 0 < self.v_margin < math.pi:
            raise ValueError("v margin must lie in (0, pi)")


# Sampling window for prequantum-operator checks.  Operator compositions
# stack one more derivative layer than the pointwise identities, so the
# magnitudes are kept small: moderate radii and angles well away from the
# poles, where the angular Hamiltonian fields grow like 1/sin(u).
OPERATOR_WINDOW = SampleWindow(
    r_margin=0.1, r_max_factor=8.0, u_margin=0.2, v_margin=0.2, t_half_width_factor=2.0
)


def sample_points(
    mass: float, count: int, seed: int, window: SampleWindow = SampleWindow()
) -> list:
    """Draw chart points reproducibly; identical arguments give identical points."""
    rng = np.random.default_rng(seed)
    r_low = 2.0 * mass * (1.0 + window.r_margin)
    r_high = window.r_max_factor * mass
    t_half = window.t_half_width_factor * mass
    points = []
    for _ in range(count):
        radius = math.exp(rng.uniform(math.log(r_low), math.log(r_high)))
        colatitude = rng.uniform(window.u_margin, math.pi - window.u_margin)
        azimuth = rng.uniform(window.v_margin, 2.0 * math.pi - window.v_margin)
        time = rng.uniform(-t_half, t_half)
        points.append(ChartPoint(u=colatitude, v=azimuth, r=radius, t=time, m=mass))
    return points
