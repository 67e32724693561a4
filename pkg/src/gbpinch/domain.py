"""Reference polycrystal: three matrix grains and a precipitate rod spanning
the middle grain, its ends fused into the two flat grain boundaries.

Phase indexing convention (n_phases = 4):

    0 -> grain_1 (z below the lower boundary plane)
    1 -> grain_2 (z above the upper boundary plane)
    2 -> grain_3 (the slab between the planes, hosting the rod)
    3 -> theta   (the precipitate rod, axis along z)

All interfaces are initialised with the sinusoidal equilibrium profile so the
built state is already near the discrete minimum.  The rod's diffuse shell
penetrates ``penetration_cells`` past each boundary plane, which interlocks
the terminations with the boundaries without placing bulk precipitate inside
the outer grains (audited by :func:`interlock_audit`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energetics import equilibrium_profile
from .fields import GridSpec, simplex_project

GRAIN_1, GRAIN_2, GRAIN_3, THETA = 0, 1, 2, 3
N_PHASES = 4


@dataclass(frozen=True)
class RodGeometry:
    """Rod and boundary-plane layout, lengths in meters."""

    diameter: float = 0.02e-6
    aspect_ratio: float = 10.0
    penetration_cells: int = 2
    corner_radius: float | None = None  # default Lambda/2, set at build time
    margin_axial: float = 0.05e-6       # free matrix beyond each rod end
    margin_lateral: float = 0.03e-6     # minimum rod-to-boundary clearance

    @property
    def length(self) -> float:
        return self.aspect_ratio * self.diameter


def profile_1d(signed_distance, epsilon: float):
    """Phase fraction across a flat interface at signed distance from its midplane.

    Positive distances are inside the phase; reaches exactly 0/1 at
    -/+ eps*pi^2/8 (half the diffuse width).
    """
    return equilibrium_profile(signed_distance, epsilon)


def grid_for_rod(rod: RodGeometry, dx: float, cross_section: float = 0.08e-6) -> GridSpec:
    """Grid sized from the rod: fixed cross-section, length fitted to the rod."""
    nx = int(round(cross_section / dx))
    ny = nx
    nz = int(round((rod.length + 2 * rod.margin_axial) / dx))
    if nz % 2:
        nz += 1  # keep the mirror plane on a cell face
    return GridSpec(nx=nx, ny=ny, nz=nz, dx=dx)


def _smooth_max(a, b, radius: float):
    """C^1 blend of max(a, b); fillets the cap/side corner of the rod surface."""
    if radius <= 0:
        return np.maximum(a, b)
    h = np.clip(0.5 + 0.5 * (a - b) / radius, 0.0, 1.0)
    return b + (a - b) * h + radius * h * (1.0 - h)


def rod_signed_distance(grid: GridSpec, rod: RodGeometry, corner_radius: float) -> np.ndarray:
    """Signed distance to the capped cylinder, positive inside, meters.

    Axis along z through the lateral center; corner between side wall and end
    caps smoothed with ``corner_radius``.
    """
    z = grid.cell_centers(0)[:, None, None]
    y = grid.cell_centers(1)[None, :, None]
    x = grid.cell_centers(2)[None, None, :]
    zc = 0.5 * grid.nz * grid.dx
    yc = 0.5 * grid.ny * grid.dx
    xc = 0.5 * grid.nx * grid.dx
    r = np.sqrt((x - xc) ** 2 + (y - yc) ** 2) + np.zeros_like(z)
    d_rad = r - 0.5 * rod.diameter          # >0 outside the side wall
    d_ax = np.abs(z - zc) - 0.5 * rod.length + np.zeros_like(r)
    outside = np.sqrt(np.maximum(d_rad, 0.0) ** 2 + np.maximum(d_ax, 0.0) ** 2)
    inside = _smooth_max(d_rad, d_ax, corner_radius)
    d = np.where((d_rad > 0) | (d_ax > 0), outside, inside)
    return -d


def gb_plane_cells(grid: GridSpec, rod: RodGeometry) -> tuple[float, float]:
    """Boundary-plane positions (cell-index units, cell-face aligned).

    Planes sit ``penetration_cells`` inside each rod end so the diffuse caps
    reach through them.
    """
    zc = 0.5 * grid.nz
    half = 0.5 * rod.length / grid.dx - rod.penetration_cells
    return zc - half, zc + half


def build_domain(grid: GridSpec, rod: RodGeometry, epsilon: float):
    """Initial (phi, mu) state: equilibrium profiles, mu = 0 everywhere.

    Raises if the lateral clearance or the interlock condition is violated.
    """
    width = epsilon * np.pi**2 / 4.0
    lateral_clear = 0.5 * (grid.nx * grid.dx - rod.diameter)
    if lateral_clear < rod.margin_lateral:
        raise ValueError(
            f"rod too close to lateral boundaries: clearance {lateral_clear:.3e} m "
            f"< required {rod.margin_lateral:.3e} m")
    axial_clear = 0.5 * (grid.nz * grid.dx - rod.length)
    if axial_clear < rod.margin_axial - 0.5 * grid.dx:
        raise ValueError("domain too short for the requested rod and margin")

    corner = rod.corner_radius if rod.corner_radius is not None else 0.5 * width
    d_rod = rod_signed_distance(grid, rod, corner)
    phi_theta = profile_1d(d_rod, epsilon)

    z = grid.cell_centers(0)[:, None, None]
    z_lo, z_hi = gb_plane_cells(grid, rod)
    # signed distances to the two boundary planes (positive inside each grain)
    d1 = z_lo * grid.dx - z
    d2 = z - z_hi * grid.dx
    w1 = profile_1d(d1, epsilon) + np.zeros(grid.shape)
    w2 = profile_1d(d2, epsilon) + np.zeros(grid.shape)

    matrix = 1.0 - phi_theta
    phi = np.zeros((N_PHASES,) + grid.shape)
    phi[GRAIN_1] = matrix * w1
    phi[GRAIN_2] = matrix * w2
    phi[GRAIN_3] = matrix * (1.0 - w1 - w2)
    phi[THETA] = phi_theta
    phi = simplex_project(phi)

    mu = np.zeros(grid.shape)
    audit = interlock_audit(phi)
    if audit != 0:
        raise ValueError(f"interlock violated: {audit} bulk precipitate cells inside outer grains")
    return phi, mu


def interlock_audit(phi: np.ndarray) -> int:
    """Cells where bulk precipitate (phi > 0.5) overlaps a bulk outer grain."""
    theta_bulk = phi[THETA] > 0.5
    outer_bulk = (phi[GRAIN_1] > 0.5) | (phi[GRAIN_2] > 0.5)
    return int(np.count_nonzero(theta_bulk & outer_bulk))


def describe(grid: GridSpec, rod: RodGeometry, epsilon: float) -> dict:
    """Resolved geometry summary for the `describe` CLI mode."""
    width = epsilon * np.pi**2 / 4.0
    z_lo, z_hi = gb_plane_cells(grid, rod)
    return {
        "grid_cells": (grid.nx, grid.ny, grid.nz),
        "dx_m": grid.dx,
        "domain_m": (grid.nx * grid.dx, grid.ny * grid.dx, grid.nz * grid.dx),
        "rod_diameter_m": rod.diameter,
        "rod_diameter_cells": rod.diameter / grid.dx,
        "rod_length_m": rod.length,
        "rod_length_cells": rod.length / grid.dx,
        "aspect_ratio": rod.aspect_ratio,
        "gb_planes_cells": (z_lo, z_hi),
        "penetration_cells": rod.penetration_cells,
        "interface_width_m": width,
        "interface_width_cells": width / grid.dx,
        "lateral_clearance_m": 0.5 * (grid.nx * grid.dx - rod.diameter),
        "axial_clearance_m": 0.5 * (grid.nz * grid.dx - rod.length),
        "analytic_rod_volume_m3": np.pi * (0.5 * rod.diameter) ** 2 * rod.length,
    }
