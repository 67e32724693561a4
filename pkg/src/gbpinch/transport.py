"""Solute mobility with volume / grain-boundary / inter-phase diffusion,
and the explicit chemical-potential update.

The homogenised composition is c = sum_a c_a(mu) phi_a with the phases in
local chemical equilibrium at the shared potential mu.  Its balance equation,
rewritten for mu, reads

    dmu/dt = [ div(M grad mu) - sum_a c_a(mu) dphi_a/dt ] / sum_a phi_a dc_a/dmu

with the scalar concentration mobility

    M(phi) = sum_a D_vol_a (dc_a/dmu) phi_a
           + sum_{a<b} D_surf_ab [ (dc_a/dmu) phi_a + (dc_b/dmu) phi_b ] phi_a phi_b.

The interpolation weight is h_a(phi) = phi_a, which keeps the denominator a
convex combination of positive susceptibilities.  Units: mu in J/mol, M in
m^2 * (mole fraction) / (J/mol * s), so M grad mu is a mole-fraction flux.

The flux divergence uses face-centered mobilities by arithmetic averaging of
the two adjacent cells; the resulting update telescopes, so total solute is
conserved to round-off under full periodicity for a static phase state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridSpec, _shift
from .thermo import PhaseThermo


@dataclass(frozen=True)
class DiffusivitySet:
    """Scalar diffusivities: per-phase volume entries and symmetric pair surface entries.

    ``d_surf[a, b]`` covers both grain-boundary pairs (grain-grain) and
    inter-phase pairs (grain-precipitate); all entries in m^2/s, >= 0.
    """

    d_vol: np.ndarray
    d_surf: np.ndarray

    def __post_init__(self):
        dv = np.asarray(self.d_vol)
        ds = np.asarray(self.d_surf)
        if np.any(dv < 0) or np.any(ds < 0):
            raise ValueError("diffusivities must be nonnegative")
        if np.any(ds != ds.T):
            raise ValueError("surface diffusivities must be symmetric")


def make_diffusivities(n_phases: int, theta: int, d_vol: float, d_gb: float,
                       d_intp: float) -> DiffusivitySet:
    """Uniform volume diffusivity; grain-grain pairs get d_gb, grain-theta pairs d_intp."""
    dv = np.full(n_phases, float(d_vol))
    ds = np.full((n_phases, n_phases), float(d_gb))
    ds[theta, :] = d_intp
    ds[:, theta] = d_intp
    np.fill_diagonal(ds, 0.0)
    return DiffusivitySet(d_vol=dv, d_surf=ds)


def mobility(phi: np.ndarray, thermo: PhaseThermo, diff: DiffusivitySet) -> np.ndarray:
    """Scalar concentration mobility M(phi) >= 0, cell-wise.

    Accepts a single tuple (N,) or a stacked field (N, nz, ny, nx).
    """
    phi = np.asarray(phi, dtype=float)
    chi = thermo.susceptibilities()
    n = phi.shape[0]
    m = np.zeros(phi.shape[1:]) if phi.ndim > 1 else 0.0
    for a in range(n):
        m = m + diff.d_vol[a] * chi[a] * phi[a]
    for a in range(n):
        for b in range(a + 1, n):
            m = m + diff.d_surf[a, b] * (chi[a] * phi[a] + chi[b] * phi[b]) * phi[a] * phi[b]
    return m


def flux_divergence(mu: np.ndarray, m_field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """div(M grad mu) with face-averaged mobility, conservative form."""
    out = np.zeros_like(mu)
    inv_dx2 = 1.0 / grid.dx**2
    for ax in range(3):
        if mu.shape[ax] == 1:
            continue
        mu_p = _shift(mu, ax, +1, grid.periodic[ax])
        mu_m = _shift(mu, ax, -1, grid.periodic[ax])
        m_p = 0.5 * (m_field + _shift(m_field, ax, +1, grid.periodic[ax]))
        m_m = 0.5 * (m_field + _shift(m_field, ax, -1, grid.periodic[ax]))
        out += (m_p * (mu_p - mu) - m_m * (mu - mu_m)) * inv_dx2
    return out


def diffusion_dt_bound(grid: GridSpec, thermo: PhaseThermo, diff: DiffusivitySet,
                       safety: float = 0.1, ndim: int = 3) -> float:
    """Static stability bound for the explicit mu update.

    dt = safety * dx^2 * chi_min / M_bound where M_bound overestimates the
    cell mobility: max volume term plus the largest possible surface term
    (phi_a phi_b summed over pairs is at most (1 - 1/N)/2 on the simplex).
    ``safety`` must stay below 1/(2*ndim) for von Neumann stability of the
    compact stencil; 0.1 leaves margin for the phase coupling.
    """
    chi = thermo.susceptibilities()
    n = len(chi)
    m_vol = float(np.max(diff.d_vol * chi))
    pair_cap = (1.0 - 1.0 / n) / 2.0
    m_surf = float(np.max(diff.d_surf * (chi[:, None] + chi[None, :]))) * pair_cap
    return safety * grid.dx**2 * float(chi.min()) / (m_vol + m_surf)


def mu_step(mu: np.ndarray, phi: np.ndarray, dphi_dt: np.ndarray,
            thermo: PhaseThermo, diff: DiffusivitySet, grid: GridSpec,
            dt: float) -> np.ndarray:
    """One explicit Euler update of the chemical potential field.

    ``phi`` is the phase state after the concurrent phase update and
    ``dphi_dt`` the rate that produced it.  Raises on a dt above the
    diffusion stability bound.
    """
    if dt > diffusion_dt_bound(grid, thermo, diff, safety=1.0 / 6.0):
        raise ValueError("dt exceeds the explicit diffusion stability bound")
    chi = thermo.susceptibilities()
    m_field = mobility(phi, thermo, diff)
    rhs = flux_divergence(mu, m_field, grid)
    denom = np.zeros_like(mu)
    for a in range(phi.shape[0]):
        c_a = thermo.c_of_mu(a, mu)
        rhs -= c_a * dphi_dt[a]
        denom += phi[a] * chi[a]
    if np.any(denom <= 0):
        raise AssertionError("nonpositive susceptibility mix; state left the simplex?")
    return mu + dt * rhs / denom


def total_solute(mu: np.ndarray, phi: np.ndarray, thermo: PhaseThermo,
                 grid: GridSpec) -> float:
    """Integral of the homogenised composition over the domain (mole fraction * m^3)."""
    c = np.zeros_like(mu)
    for a in range(phi.shape[0]):
        c += phi[a] * thermo.c_of_mu(a, mu)
    return float(c.sum()) * grid.cell_volume
