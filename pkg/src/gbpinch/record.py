"""Per-snapshot observable rows collected during a run.

A record hook maps the live stepper to a flat dict of floats/ints; rows are
appended to the run's CSV as they are produced so long runs can be monitored
and post-processed without field snapshots.
"""

from __future__ import annotations

import time as _time

import numpy as np

from . import analysis
from .evolution import Stepper, interfacial_energy_of, total_solute_of


def gb_plane_position(phi_grain: np.ndarray, rising: bool, iy: int = 0, ix: int = 0) -> float:
    """Half-level crossing (cell units) of a grain field along a far-field z column.

    ``rising=False`` for the lower grain (field falls 1 -> 0 with z),
    ``rising=True`` for the upper one.  Linear interpolation between cells.
    """
    col = phi_grain[:, iy, ix]
    f = col if rising else 1.0 - col
    # first index where f crosses 0.5 upward
    above = f >= 0.5
    idx = np.argmax(above)
    if idx == 0:
        return 0.0 if above[0] else float(len(col))
    f0, f1 = f[idx - 1], f[idx]
    frac = (0.5 - f0) / (f1 - f0) if f1 != f0 else 0.5
    return float(idx - 1 + frac)


def default_record_row(stepper: Stepper) -> dict:
    """Topology and conservation observables; geometry-agnostic."""
    grid = stepper.grid
    theta = stepper.model.theta
    theta_field = stepper.phi[theta]
    comps = analysis.components(theta_field, grid)
    row = {
        "n_components": len(comps),
        "total_theta_m3": float(theta_field.sum()) * grid.cell_volume,
        "comp_cells": "|".join(str(c["cells"]) for c in comps),
        "total_carbon": total_solute_of(stepper),
        "energy_J": interfacial_energy_of(stepper),
        "mu_min_J_mol": float(stepper.mu.min()),
        "mu_max_J_mol": float(stepper.mu.max()),
    }
    return row


def make_rod_record_hook(gb_lo: float, gb_hi: float, chi_s: float,
                         slab_halfwidth_cells: float,
                         grain_lo: int = 0, grain_hi: int = 1):
    """Record hook for the reference rod geometry.

    Adds normalized time, per-boundary termination slab volumes and aspect
    ratios, grain-boundary drift and the post-split termination radius.
    ``gb_lo``/``gb_hi`` are the as-built plane positions in cell units.
    """
    t0_wall = _time.monotonic()

    def hook(stepper: Stepper) -> dict:
        grid = stepper.grid
        theta = stepper.model.theta
        theta_field = stepper.phi[theta]
        row = default_record_row(stepper)
        row["t_norm"] = stepper.t / chi_s

        z = np.arange(grid.nz) + 0.5
        for name, gb in (("lo", gb_lo), ("hi", gb_hi)):
            slab = (z >= gb - slab_halfwidth_cells) & (z <= gb + slab_halfwidth_cells)
            row[f"term_{name}_m3"] = float(theta_field[slab].sum()) * grid.cell_volume
            tr = analysis.termination_ratio(theta_field, grid, gb)
            if tr is None:
                row[f"ratio_{name}"] = np.nan
                row[f"l_r_{name}_m"] = np.nan
                row[f"b_r_{name}_m"] = np.nan
            else:
                row[f"ratio_{name}"], row[f"l_r_{name}_m"], row[f"b_r_{name}_m"] = tr

        row["gb_lo_cell"] = gb_plane_position(stepper.phi[grain_lo], rising=False)
        row["gb_hi_cell"] = gb_plane_position(stepper.phi[grain_hi], rising=True)

        comps = analysis.components(theta_field, grid)
        r_lo = r_hi = np.nan
        vol_lo = vol_hi = np.nan
        if len(comps) >= 2:
            for c in comps:
                z0, z1 = c["bbox"][0]
                if z0 <= gb_lo + 2 and gb_lo - 2 <= z1:
                    r_lo = analysis.equivalent_radius(c["volume"])
                    vol_lo = c["volume"]
                if z0 <= gb_hi + 2 and gb_hi - 2 <= z1:
                    r_hi = analysis.equivalent_radius(c["volume"])
                    vol_hi = c["volume"]
        row["R_lo_m"] = r_lo
        row["R_hi_m"] = r_hi
        row["comp_lo_m3"] = vol_lo
        row["comp_hi_m3"] = vol_hi
        row["wall_s"] = _time.monotonic() - t0_wall
        return row

    return hook
