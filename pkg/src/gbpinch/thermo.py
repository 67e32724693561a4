"""Parabolic per-phase free energies, grand potentials and driving forces.

Each phase carries a free-energy density (per mole of atoms)

    f_a(c) = A_a * (c - c_eq_a)^2 + B_a        [J/mol]

in the single independent composition c (mole fraction of the interstitial
solute in a binary system).  The chemical potential mu = df/dc is the dynamic
variable of the transport solver; everything here is a closed-form function
of mu.  Offsets B_a are calibrated so that all grand potentials coincide at
mu = 0, which places the flat-interface equilibrium exactly at mu_eq = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseThermo:
    """Calibrated parabolic thermodynamics for N phases.

    Attributes
    ----------
    c_eq : (N,) equilibrium solute mole fractions
    curvature : (N,) parabola curvatures A_a in J/mol (per mole-fraction^2)
    offset : (N,) energy offsets B_a in J/mol
    molar_volume : m^3/mol, shared by all phases
    temperature : K
    """

    c_eq: np.ndarray
    curvature: np.ndarray
    offset: np.ndarray
    molar_volume: float
    temperature: float

    @property
    def n_phases(self) -> int:
        return len(self.c_eq)

    # equilibrium chemical potential of the calibrated system (flat interface)
    mu_eq: float = 0.0

    def c_of_mu(self, phase: int, mu):
        """Composition of ``phase`` in equilibrium with chemical potential ``mu``.

        Exact inverse of df_a/dc: c = c_eq_a + mu / (2 A_a).
        """
        return self.c_eq[phase] + mu / (2.0 * self.curvature[phase])

    def free_energy(self, phase: int, c):
        return self.curvature[phase] * (c - self.c_eq[phase]) ** 2 + self.offset[phase]

    def dfdc(self, phase: int, c):
        return 2.0 * self.curvature[phase] * (c - self.c_eq[phase])

    def grand_potential(self, phase: int, mu):
        """Psi_a(mu) = f_a(c(mu)) - mu c(mu), J/mol.  dPsi/dmu = -c(mu)."""
        c = self.c_of_mu(phase, mu)
        return self.free_energy(phase, c) - mu * c

    def susceptibility(self, phase: int) -> float:
        """dc/dmu = 1/(2 A_a), constant per phase (mole fraction per J/mol)."""
        return 1.0 / (2.0 * self.curvature[phase])

    def susceptibilities(self) -> np.ndarray:
        return 1.0 / (2.0 * self.curvature)

    def driving_force(self, alpha: int, beta: int, mu):
        """Volumetric grand-potential difference [(c_eq_b - c_eq_a) mu~]/V_m, J/m^3.

        mu~ = mu - mu_eq = mu for the calibration used here.  With equal
        parabola curvatures this linear form equals the exact difference
        Psi_a - Psi_b; with unequal curvatures it is its leading term.
        Antisymmetric in (alpha, beta); zero at flat-interface equilibrium.
        """
        mu_t = mu - self.mu_eq
        return (self.c_eq[beta] - self.c_eq[alpha]) * mu_t / self.molar_volume


def calibrate(c_eq, curvature, molar_volume: float, temperature: float) -> PhaseThermo:
    """Build a :class:`PhaseThermo` whose phases share mu_eq = 0.

    Offsets are chosen so Psi_a(0) = 0 for every phase; since the grand
    potential of a parabola at its own equilibrium composition is just the
    offset, that means B_a = 0 identically.  Kept explicit so alternative
    calibrations (nonzero target potentials) remain a one-line change.
    """
    c_eq = np.asarray(c_eq, dtype=float)
    curvature = np.asarray(curvature, dtype=float)
    if np.any(curvature <= 0):
        raise ValueError("parabola curvatures must be positive (convexity)")
    if len(c_eq) != len(curvature):
        raise ValueError("c_eq and curvature must have equal length")
    # Psi_a(0) = B_a, so equal-potential calibration at mu=0 sets all offsets to 0.
    offset = np.zeros_like(c_eq)
    return PhaseThermo(c_eq=c_eq, curvature=curvature, offset=offset,
                       molar_volume=molar_volume, temperature=temperature)


def gibbs_thomson_mu(gamma: float, molar_volume: float, mean_curvature: float) -> float:
    """Textbook curvature shift gamma * V_m * K of the equilibrium potential.

    K is the mean of the principal curvatures.  Note the sharp-interface
    limit of this solver carries the composition-difference divisor; see
    :func:`capillarity_mu`.
    """
    return gamma * molar_volume * mean_curvature


def capillarity_mu(gamma: float, molar_volume: float, total_curvature: float,
                   delta_c: float) -> float:
    """Equilibrium mu~ next to a curved interface: gamma V_m kappa / (c_p - c_m).

    ``total_curvature`` is the sum of principal curvatures (2/R for a sphere,
    1/R for a circle in 2D); ``delta_c`` the precipitate-matrix equilibrium
    composition difference.  Follows from the energy balance
    mu~ (c_p - c_m)/V_m * dV = gamma dA for a volume-preserving displacement.
    """
    return gamma * molar_volume * total_curvature / delta_c
