"""Run configuration: plain-text INI with sections mirroring the modules.

Unknown sections or keys are rejected (no silent defaults for misspellings);
every value is type-checked.  The resolved configuration has a stable hash
that is embedded in checkpoints so restarts can refuse mismatched setups.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .domain import RodGeometry, grid_for_rod, gb_plane_cells, THETA, N_PHASES
from .energetics import make_interface_params
from .evolution import Model, RunSchedule, build_tau
from .fields import GridSpec
from .thermo import calibrate
from .transport import make_diffusivities

# section -> key -> (type, default); physical defaults follow the reference
# alloy parameter set (973 K mild-steel matrix/carbide system)
SCHEMA = {
    "grid": {
        "dx": (float, 1e-9),
        "cross_section": (float, 0.08e-6),
        "nz_override": (int, 0),           # 0 = derive from rod + margins
    },
    "rod": {
        "diameter": (float, 0.02e-6),
        "aspect_ratio": (float, 10.0),
        "penetration_cells": (int, 2),
        "margin_axial": (float, 0.05e-6),
        "corner_radius_factor": (float, 0.5),   # times the interface width
    },
    "interface": {
        "gamma": (float, 0.49),
        "epsilon_factor": (float, 2.5),         # epsilon = factor * dx
        "gamma3_factor": (float, 10.0),
    },
    "thermo": {
        "temperature": (float, 973.0),
        "molar_volume": (float, 7e-6),
        "c_eq_alpha": (float, 0.00067),
        "c_eq_theta": (float, 0.25),
        "curvature_alpha": (float, 1e4),
        "curvature_theta": (float, 1e4),
    },
    "transport": {
        "d_vol": (float, 2e-9),
        "d_gb": (float, 2.5e-9),
        "d_intp": (float, 2.5e-9),
    },
    "evolution": {
        "tau_grain_factor": (float, 1e4),
        "tau_scale": (float, 1.0),
        "dt_factor": (float, 0.1),
        "active_threshold": (float, 1e-6),
        "max_steps": (int, 100000),
        "extra_steps_after_split": (int, 0),
        "band_mode": (bool, True),
        "band_rebuild_every": (int, 200),
        "band_dilation": (int, 3),
        "mu_source_applied": (bool, False),
        "chemistry": (bool, True),
    },
    "output": {
        "record_every": (int, 500),
        "snapshot_every": (int, 0),
        "checkpoint_every": (int, 0),
        "term_slab_halfwidth_factor": (float, 1.0),  # times the rod diameter
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Flat resolved configuration; attribute names are ``section_key``."""

    grid_dx: float
    grid_cross_section: float
    grid_nz_override: int
    rod_diameter: float
    rod_aspect_ratio: float
    rod_penetration_cells: int
    rod_margin_axial: float
    rod_corner_radius_factor: float
    interface_gamma: float
    interface_epsilon_factor: float
    interface_gamma3_factor: float
    thermo_temperature: float
    thermo_molar_volume: float
    thermo_c_eq_alpha: float
    thermo_c_eq_theta: float
    thermo_curvature_alpha: float
    thermo_curvature_theta: float
    transport_d_vol: float
    transport_d_gb: float
    transport_d_intp: float
    evolution_tau_grain_factor: float
    evolution_tau_scale: float
    evolution_dt_factor: float
    evolution_active_threshold: float
    evolution_max_steps: int
    evolution_extra_steps_after_split: int
    evolution_band_mode: bool
    evolution_band_rebuild_every: int
    evolution_band_dilation: int
    evolution_mu_source_applied: bool
    evolution_chemistry: bool
    output_record_every: int
    output_snapshot_every: int
    output_checkpoint_every: int
    output_term_slab_halfwidth_factor: float

    # ------------------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for section, keys in SCHEMA.items():
            cp[section] = {}
            for key in keys:
                val = getattr(self, f"{section}_{key}")
                cp[section][key] = repr(val) if isinstance(val, float) else str(val)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def hash(self) -> str:
        canonical = ";".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in dc_fields(self))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    # -- resolved objects ----------------------------------------------------

    @property
    def epsilon(self) -> float:
        return self.interface_epsilon_factor * self.grid_dx

    def rod(self) -> RodGeometry:
        width = self.epsilon * np.pi**2 / 4.0
        return RodGeometry(
            diameter=self.rod_diameter,
            aspect_ratio=self.rod_aspect_ratio,
            penetration_cells=self.rod_penetration_cells,
            corner_radius=self.rod_corner_radius_factor * width,
            margin_axial=self.rod_margin_axial,
        )

    def grid(self) -> GridSpec:
        g = grid_for_rod(self.rod(), self.grid_dx, self.grid_cross_section)
        if self.grid_nz_override:
            g = GridSpec(nx=g.nx, ny=g.ny, nz=self.grid_nz_override, dx=g.dx)
        return g

    def model(self) -> Model:
        thermo = calibrate(
            c_eq=[self.thermo_c_eq_alpha] * 3 + [self.thermo_c_eq_theta],
            curvature=[self.thermo_curvature_alpha] * 3 + [self.thermo_curvature_theta],
            molar_volume=self.thermo_molar_volume,
            temperature=self.thermo_temperature,
        )
        interface = make_interface_params(
            N_PHASES, self.epsilon, self.interface_gamma,
            gamma3_factor=self.interface_gamma3_factor)
        diff = make_diffusivities(N_PHASES, THETA, self.transport_d_vol,
                                  self.transport_d_gb, self.transport_d_intp)
        tau = build_tau(thermo, diff, interface, THETA,
                        tau_grain_factor=self.evolution_tau_grain_factor,
                        tau_scale=self.evolution_tau_scale)
        return Model(grid=self.grid(), interface=interface, thermo=thermo,
                     diff=diff, tau=tau, theta=THETA,
                     active_threshold=self.evolution_active_threshold,
                     dt_factor=self.evolution_dt_factor,
                     chemistry=self.evolution_chemistry,
                     mu_source_applied=self.evolution_mu_source_applied)

    def schedule(self, outdir=None) -> RunSchedule:
        return RunSchedule(
            max_steps=self.evolution_max_steps,
            record_every=self.output_record_every,
            snapshot_every=self.output_snapshot_every,
            checkpoint_every=self.output_checkpoint_every,
            extra_steps_after_split=self.evolution_extra_steps_after_split,
            outdir=str(outdir) if outdir else None,
        )

    def chi_seconds(self) -> float:
        from .analysis import chi_constant
        return chi_constant(self.rod_diameter, self.thermo_temperature,
                            self.transport_d_vol, self.interface_gamma,
                            self.thermo_molar_volume, self.thermo_c_eq_alpha)

    def gb_planes(self) -> tuple[float, float]:
        return gb_plane_cells(self.grid(), self.rod())


def default_config() -> RunConfig:
    values = {}
    for section, keys in SCHEMA.items():
        for key, (_typ, default) in keys.items():
            values[f"{section}_{key}"] = default
    return RunConfig(**values)


def _parse_value(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError(raw)
            return int(as_float)
        return typ(raw)
    except ValueError:
        raise ValueError(f"bad value for {where}: {raw!r} (expected {typ.__name__})")


def load_config(path=None, overrides: list[str] | None = None) -> RunConfig:
    """Read an INI file (optional) and apply ``section.key=value`` overrides."""
    values = {f"{s}_{k}": d for s, keys in SCHEMA.items() for k, (_t, d) in keys.items()}
    if path is not None:
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        for section in cp.sections():
            if section not in SCHEMA:
                raise ValueError(f"unknown config section [{section}]")
            for key, raw in cp[section].items():
                if key not in SCHEMA[section]:
                    raise ValueError(f"unknown config key {section}.{key}")
                typ = SCHEMA[section][key][0]
                values[f"{section}_{key}"] = _parse_value(raw, typ, f"{section}.{key}")
    for ov in overrides or []:
        if "=" not in ov:
            raise ValueError(f"override must be section.key=value, got {ov!r}")
        target, raw = ov.split("=", 1)
        target = target.strip()
        if "." not in target:
            raise ValueError(f"override must be section.key=value, got {ov!r}")
        section, key = target.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ValueError(f"unknown config key {section}.{key}")
        typ = SCHEMA[section][key][0]
        values[f"{section}_{key}"] = _parse_value(raw, typ, target)
    cfg = RunConfig(**values)
    _sanity_check(cfg)
    return cfg


def _sanity_check(cfg: RunConfig) -> None:
    if cfg.grid_dx <= 0 or cfg.rod_diameter <= 0:
        raise ValueError("lengths must be positive")
    if cfg.thermo_c_eq_theta <= cfg.thermo_c_eq_alpha:
        raise ValueError("precipitate equilibrium composition must exceed the matrix one")
    if cfg.evolution_dt_factor <= 0 or cfg.evolution_dt_factor > 1.0 / 6.0:
        raise ValueError("dt_factor must lie in (0, 1/6]")
    if cfg.interface_epsilon_factor < 1.5:
        raise ValueError("epsilon under 1.5 dx cannot resolve the diffuse interface")
    if min(cfg.thermo_curvature_alpha, cfg.thermo_curvature_theta) <= 0:
        raise ValueError("free-energy curvatures must be positive")
