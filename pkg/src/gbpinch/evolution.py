"""Coupled explicit stepper: pairwise phase updates + chemical-potential update.

Relaxation constants
--------------------
The phase/matrix relaxation constant is

    tau = 0.22 * eps * (c_eq_theta - c_eq_alpha)^2 / (D_c * chi_v)

with chi_v = V_m * dc/dmu the susceptibility in volumetric units (m^3/J) and
D_c the inter-phase diffusivity.  This is the standard thin-interface choice
that keeps interface attachment faster than long-range diffusion, so the
evolution stays diffusion-controlled; the units work out to J s / m^4, which
balances eps * tau * dphi/dt against the J/m^3 force terms.  Grain-grain
pairs get ``tau_grain_factor`` times that value, which immobilises the flat
boundaries while the precipitate evolves.

Time step
---------
One shared explicit Euler dt serves both equations:

    dt = dt_factor * dx^2 * min( tau_min / (2 gamma_max),  chi_min / M_max )

The two entries are the inverse effective diffusivities of the phase and
potential fields; dt_factor must stay below 1/6 (3D von Neumann limit of the
compact stencil), default 0.1.

Driving-force sign
------------------
The chemical term accumulated for the pair (a, b) into dphi_a/dt is
``-(8 sqrt(phi_a phi_b)/pi) * (c_eq_b - c_eq_a) * mu~ / V_m``: around a
convex precipitate the positive curvature shift mu~ then *supports* the
precipitate, balancing the interfacial shrinking force exactly at the
capillarity potential.  The sign is pinned by the Ostwald-direction test
(small particle shrinks, large grows).
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .energetics import InterfaceParams, interfacial_energy
from .fields import GridSpec, DEFAULT_ACTIVE_THRESHOLD
from .thermo import PhaseThermo
from .transport import DiffusivitySet, diffusion_dt_bound, total_solute

TAU_KINETIC_FACTOR = 0.22
VON_NEUMANN_LIMIT = 1.0 / 6.0  # dt * D / dx^2 ceiling for the 3D compact stencil


def tau_phase(thermo: PhaseThermo, diff: DiffusivitySet, params: InterfaceParams,
              alpha: int = 0, theta: int = -1) -> float:
    """Phase/matrix relaxation constant, J s / m^4 (see module docstring)."""
    theta = theta % thermo.n_phases
    delta_c = thermo.c_eq[theta] - thermo.c_eq[alpha]
    chi_v = thermo.molar_volume * thermo.susceptibility(alpha)
    d_c = diff.d_surf[alpha, theta]
    return TAU_KINETIC_FACTOR * params.epsilon * delta_c**2 / (d_c * chi_v)


def build_tau(thermo: PhaseThermo, diff: DiffusivitySet, params: InterfaceParams,
              theta: int, tau_grain_factor: float = 1e4,
              tau_scale: float = 1.0) -> np.ndarray:
    """Symmetric relaxation matrix: phase pairs at tau_phase, grain pairs far stiffer."""
    n = thermo.n_phases
    base = tau_phase(thermo, diff, params, alpha=0, theta=theta) * tau_scale
    tau = np.full((n, n), base * tau_grain_factor)
    tau[theta, :] = base
    tau[:, theta] = base
    np.fill_diagonal(tau, np.inf)  # diagonal pairs never occur
    return tau


@dataclass(frozen=True)
class Model:
    """Everything the stepper needs besides the state itself."""

    grid: GridSpec
    interface: InterfaceParams
    thermo: PhaseThermo
    diff: DiffusivitySet
    tau: np.ndarray
    theta: int
    active_threshold: float = DEFAULT_ACTIVE_THRESHOLD
    dt_factor: float = 0.1
    chemistry: bool = True          # False: pure interfacial relaxation, mu frozen
    mu_source_applied: bool = False  # feed post-projection rates into the mu update

    def phase_dt_limit(self) -> float:
        """Hard von Neumann ceiling of the phase update."""
        g_max = float(self.interface.gamma.max())
        tau_min = float(self.tau[np.isfinite(self.tau)].min())
        return VON_NEUMANN_LIMIT * self.grid.dx**2 * tau_min / (2.0 * g_max)

    def diffusion_dt_limit(self) -> float:
        return diffusion_dt_bound(self.grid, self.thermo, self.diff,
                                  safety=VON_NEUMANN_LIMIT)

    def stable_dt(self) -> float:
        scale = self.dt_factor / VON_NEUMANN_LIMIT
        dt = self.phase_dt_limit() * scale
        if self.chemistry:
            dt = min(dt, self.diffusion_dt_limit() * scale)
        return dt


class Stepper:
    """Owns padded working buffers and advances the coupled state.

    ``partitions`` z-slabs are processed as separate kernel invocations over
    a shared halo-exchanged state; results are bit-identical for any
    partition count by construction (pure per-cell maps over frozen inputs).
    ``band_mode`` restricts phase updates to a dilated interface envelope,
    rebuilt and audited every ``band_rebuild_every`` steps.
    """

    def __init__(self, phi: np.ndarray, mu: np.ndarray, model: Model,
                 partitions: int = 1, band_mode: bool = False,
                 band_rebuild_every: int = 200, band_dilation: int = 3):
        if phi.shape[0] != model.thermo.n_phases:
            raise ValueError("phase count mismatch between state and model")
        if model.dt_factor > VON_NEUMANN_LIMIT:
            raise ValueError(f"dt_factor {model.dt_factor} above the stability "
                             f"limit {VON_NEUMANN_LIMIT:.4f}")
        self.model = model
        self.grid = model.grid
        self.partitions = max(1, int(partitions))
        self.band_mode = band_mode
        self.band_rebuild_every = band_rebuild_every
        self.band_dilation = band_dilation

        self.phi_a = kernels.pad_field(np.ascontiguousarray(phi, dtype=np.float64))
        self.phi_b = self.phi_a.copy()
        self.mu_a = kernels.pad_field(np.ascontiguousarray(mu, dtype=np.float64))
        self.mu_b = self.mu_a.copy()
        shape = self.mu_a.shape
        self.rate = np.zeros_like(self.phi_a)
        self.src0 = np.zeros(shape)
        self.src1 = np.zeros(shape)
        self.mfield = np.zeros(shape)
        self.denom = np.zeros(shape)

        self.dt = model.stable_dt()
        self.t = 0.0
        self.step_count = 0

        self._full = kernels.full_band(self.grid.shape)
        self._chi = model.thermo.susceptibilities()
        self._ceq = np.asarray(model.thermo.c_eq, dtype=np.float64)
        self._rebuild_band(initial=True)
        kernels.refresh_halo(self.phi_a)
        kernels.refresh_halo(self.mu_a)
        self._mobility_full()

    # -- state accessors -----------------------------------------------------

    @property
    def phi(self) -> np.ndarray:
        return kernels.interior(self.phi_a)

    @property
    def mu(self) -> np.ndarray:
        return kernels.interior(self.mu_a)

    def set_state(self, phi: np.ndarray, mu: np.ndarray, t: float = 0.0,
                  step: int = 0) -> None:
        kernels.interior(self.phi_a)[:] = phi
        self.phi_b[:] = self.phi_a
        kernels.interior(self.mu_a)[:] = mu
        self.mu_b[:] = self.mu_a
        self.t = t
        self.step_count = step
        self.rate[:] = 0.0
        self.src0[:] = 0.0
        self.src1[:] = 0.0
        self._rebuild_band(initial=True)
        kernels.refresh_halo(self.phi_a)
        kernels.refresh_halo(self.mu_a)
        self._mobility_full()

    # -- internals -----------------------------------------------------------

    def _rebuild_band(self, initial: bool = False) -> None:
        if self.band_mode:
            if not initial and not kernels.band_covers(
                    self.phi_a, self.band, self.model.active_threshold):
                raise RuntimeError(
                    "interface escaped the active band between rebuilds; "
                    "decrease band_rebuild_every or increase band_dilation")
            self.band = kernels.interface_band(
                self.phi_a, self.model.active_threshold, self.band_dilation)
            if not initial:
                # buffers agree outside the band; wipe stale remnants of the old band
                self.phi_b[:] = self.phi_a
                self.rate[:] = 0.0
                self.src0[:] = 0.0
                self.src1[:] = 0.0
        else:
            self.band = self._full

    def _band_slices(self):
        """Contiguous band index ranges per z-slab partition."""
        bz = self.band[0]
        edges = np.linspace(1, self.grid.nz + 1, self.partitions + 1).astype(np.int64)
        bounds = np.searchsorted(bz, edges)
        return [(int(bounds[i]), int(bounds[i + 1])) for i in range(self.partitions)]

    def _z_slabs(self):
        edges = np.linspace(1, self.grid.nz + 1, self.partitions + 1).astype(np.int64)
        return [(int(edges[i]), int(edges[i + 1])) for i in range(self.partitions)]

    def _mobility_full(self) -> None:
        full = self._full
        kernels.mobility_sweep(self.phi_a, self.mfield, self.denom,
                               full[0], full[1], full[2], 0, len(full[0]),
                               self.model.diff.d_vol, self.model.diff.d_surf, self._chi)
        kernels.refresh_halo(self.mfield)

    def _sweep_phase(self) -> None:
        """phi_a, mu_a -> phi_b (projected), rate, src moments."""
        m = self.model
        bz, by, bx = self.band
        for lo, hi in self._band_slices():
            kernels.phase_sweep(
                self.phi_a, self.mu_a, self.phi_b, self.rate,
                self.src0, self.src1, bz, by, bx, lo, hi,
                m.interface.gamma, m.interface.gamma3, m.tau,
                self._ceq, self._chi,
                m.interface.epsilon, self.grid.dx, self.dt,
                m.active_threshold,
                (1.0 / m.thermo.molar_volume) if m.chemistry else 0.0,
                m.thermo.mu_eq)
        kernels.refresh_halo(self.phi_b)

    def _sweep_mu(self) -> None:
        """mu_a -> mu_b using phi_b, the source moments and band-updated mobility."""
        m = self.model
        bz, by, bx = self.band
        if m.mu_source_applied:
            dphi = (kernels.interior(self.phi_b) - kernels.interior(self.phi_a)) / self.dt
            kernels.interior(self.src0)[:] = np.tensordot(self._ceq, dphi, axes=(0, 0))
            kernels.interior(self.src1)[:] = np.tensordot(self._chi, dphi, axes=(0, 0))
        for lo, hi in self._band_slices():
            kernels.mobility_sweep(self.phi_b, self.mfield, self.denom,
                                   bz, by, bx, lo, hi,
                                   m.diff.d_vol, m.diff.d_surf, self._chi)
        kernels.refresh_halo(self.mfield)
        for z0, z1 in self._z_slabs():
            kernels.mu_sweep(self.mu_a, self.mu_b, self.mfield, self.denom,
                             self.src0, self.src1, z0, z1, self.grid.dx, self.dt)

    # -- stepping ------------------------------------------------------------

    def advance(self, n_steps: int = 1) -> None:
        for _ in range(n_steps):
            if (self.band_mode and self.step_count > 0
                    and self.step_count % self.band_rebuild_every == 0):
                self._rebuild_band()
            self._sweep_phase()
            if self.model.chemistry:
                self._sweep_mu()
                self.mu_a, self.mu_b = self.mu_b, self.mu_a
                kernels.refresh_halo(self.mu_a)
            self.phi_a, self.phi_b = self.phi_b, self.phi_a
            self.t += self.dt
            self.step_count += 1

    def check_health(self) -> None:
        if not np.isfinite(self.mu).all():
            raise FloatingPointError(f"non-finite mu at step {self.step_count}")
        dphi_max = float(np.abs(self.rate).max()) * self.dt
        if dphi_max > 0.5:
            raise FloatingPointError(
                f"phase update {dphi_max:.2f} per step at step {self.step_count}; diverging")


def phase_step(phi: np.ndarray, mu: np.ndarray, model: Model, dt: float):
    """One pairwise active-phase update on an unpadded state.

    Returns (phi_new, dphi_dt): the projected new state and the
    pre-projection rate, whose per-cell sum over phases is exactly zero.
    Raises on a dt above the phase-field stability bound.
    """
    if dt > model.phase_dt_limit() * (1.0 + 1e-12):
        raise ValueError("dt exceeds the phase-field stability bound")
    st = Stepper(phi, mu, model, partitions=1)
    st.dt = dt
    st._sweep_phase()
    return kernels.interior(st.phi_b).copy(), kernels.interior(st.rate).copy()


@dataclass
class RunSchedule:
    """Step budget and output cadences for :func:`run`."""

    max_steps: int
    record_every: int = 500
    snapshot_every: int = 0        # 0 = no field snapshots
    checkpoint_every: int = 0      # 0 = no checkpoints
    health_every: int = 200
    extra_steps_after_split: int = 0   # 0 = always run to max_steps
    outdir: str | None = None
    progress_every_s: float = 60.0


def run(phi: np.ndarray, mu: np.ndarray, model: Model, schedule: RunSchedule,
        partitions: int = 1, band_mode: bool = True,
        band_rebuild_every: int = 200, band_dilation: int = 3,
        record_hook=None, config_hash: str = "", quiet: bool = False,
        start_t: float = 0.0, start_step: int = 0):
    """Advance the state per the schedule, collecting an evolution record.

    ``record_hook(stepper) -> dict`` supplies observable columns per record
    row (see :mod:`gbpinch.record`); snapshots and checkpoints go to
    ``schedule.outdir``.  Returns (phi, mu, rows).
    """
    from . import fileio
    from .record import default_record_row

    stepper = Stepper(phi, mu, model, partitions=partitions, band_mode=band_mode,
                      band_rebuild_every=band_rebuild_every,
                      band_dilation=band_dilation)
    if start_step:
        stepper.t = start_t
        stepper.step_count = start_step
    hook = record_hook or default_record_row
    rows: list[dict] = []
    split_seen_at: int | None = None
    baseline_components: int | None = None
    t_wall = _time.monotonic()

    def emit_record():
        nonlocal split_seen_at, baseline_components
        row = hook(stepper)
        row["step"] = stepper.step_count
        row["t_s"] = stepper.t
        rows.append(row)
        n_comp = row.get("n_components")
        if n_comp is not None:
            if baseline_components is None:
                baseline_components = n_comp
            elif split_seen_at is None and n_comp > baseline_components:
                split_seen_at = stepper.step_count
        if schedule.outdir:
            fileio.append_record_row(schedule.outdir, row)

    emit_record()
    if schedule.outdir and schedule.snapshot_every:
        fileio.write_snapshot(schedule.outdir, stepper, config_hash)
    if schedule.outdir and schedule.checkpoint_every:
        fileio.write_checkpoint(schedule.outdir, stepper, config_hash)

    while stepper.step_count < schedule.max_steps:
        target = min(_next_stop(stepper.step_count, schedule), schedule.max_steps)
        stepper.advance(target - stepper.step_count)
        s = stepper.step_count
        if s % schedule.health_every == 0 or s == schedule.max_steps:
            stepper.check_health()
        if s % schedule.record_every == 0 or s == schedule.max_steps:
            emit_record()
        if schedule.snapshot_every and s % schedule.snapshot_every == 0 and schedule.outdir:
            fileio.write_snapshot(schedule.outdir, stepper, config_hash)
        if schedule.checkpoint_every and s % schedule.checkpoint_every == 0 and schedule.outdir:
            fileio.write_checkpoint(schedule.outdir, stepper, config_hash)
        if not quiet and _time.monotonic() - t_wall > schedule.progress_every_s:
            t_wall = _time.monotonic()
            print(f"[gbpinch] step {s}/{schedule.max_steps} t={stepper.t:.3e}s "
                  f"dt={stepper.dt:.2e}s", flush=True)
        if (schedule.extra_steps_after_split and split_seen_at is not None
                and s >= split_seen_at + schedule.extra_steps_after_split):
            break
    if schedule.outdir and schedule.checkpoint_every:
        fileio.write_checkpoint(schedule.outdir, stepper, config_hash, final=True)
    return stepper.phi.copy(), stepper.mu.copy(), rows


def _next_stop(step: int, schedule: RunSchedule) -> int:
    """Next step count at which any cadence fires."""
    cadences = [schedule.record_every, schedule.health_every]
    if schedule.snapshot_every:
        cadences.append(schedule.snapshot_every)
    if schedule.checkpoint_every:
        cadences.append(schedule.checkpoint_every)
    return min((step // c + 1) * c for c in cadences)


def interfacial_energy_of(stepper: Stepper) -> float:
    return interfacial_energy(stepper.phi, stepper.grid, stepper.model.interface)


def total_solute_of(stepper: Stepper) -> float:
    return total_solute(stepper.mu, stepper.phi, stepper.model.thermo, stepper.grid)
