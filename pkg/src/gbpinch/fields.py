"""Regular-grid scalar fields, simplex enforcement and difference stencils.

Conventions used throughout the package:

* Scalar fields are C-ordered ``float64`` arrays of shape ``(nz, ny, nx)``,
  i.e. the x index is fastest in memory.
* A phase-field state is a structure-of-arrays stack of shape
  ``(n_phases, nz, ny, nx)`` whose per-cell tuple lies on the Gibbs simplex
  (components sum to one, all nonnegative).
* All boundaries are periodic unless a ``GridSpec`` says otherwise.

The stencils here (``grad``, ``laplacian``, ``divergence``) are the plain
second-order central forms used by tests and analysis.  The time stepper in
:mod:`gbpinch.kernels` carries its own fused discretisation; the two are
cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Axis order of the storage layout: index 0 -> z, 1 -> y, 2 -> x.
AXES = ("z", "y", "x")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with cell size ``dx`` (isotropic) and per-axis periodicity."""

    nx: int
    ny: int
    nz: int
    dx: float
    periodic: tuple[bool, bool, bool] = (True, True, True)  # (z, y, x)

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("all cell counts must be >= 1")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nz, self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def cell_centers(self, axis: int) -> np.ndarray:
        """Physical coordinates of cell centers along ``axis`` (0=z,1=y,2=x)."""
        n = self.shape[axis]
        return (np.arange(n) + 0.5) * self.dx


def simplex_project(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of phase tuples onto the Gibbs simplex.

    Sort-based exact projection (O(N log N) per tuple).  Works on a single
    tuple of length N or on an array whose *first* axis enumerates phases.
    Idempotent; tuples already on the simplex pass through unchanged.
    """
    v = np.asarray(values, dtype=float)
    single = v.ndim == 1
    flat = v.reshape(v.shape[0], -1) if not single else v.reshape(-1, 1)
    n = flat.shape[0]
    u = np.sort(flat, axis=0)[::-1]
    css = np.cumsum(u, axis=0) - 1.0
    k = np.arange(1, n + 1)[:, None]
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[::-1], axis=0)  # largest k satisfying cond
    lam = -np.take_along_axis(css, rho[None, :], axis=0)[0] / (rho + 1)
    out = np.maximum(flat + lam[None, :], 0.0)
    return out[:, 0] if single else out.reshape(v.shape)


def _shift(f: np.ndarray, axis: int, step: int, periodic: bool) -> np.ndarray:
    """Neighbor values f(x + step*e_axis); non-periodic axes clamp (zero-gradient)."""
    if f.shape[axis] == 1:
        return f
    if periodic:
        return np.roll(f, -step, axis=axis)
    shifted = np.roll(f, -step, axis=axis)
    # clamp: repeat the boundary cell
    idx = [slice(None)] * f.ndim
    if step > 0:
        idx[axis] = slice(-step, None)
        src = [slice(None)] * f.ndim
        src[axis] = slice(-1, None)
    else:
        idx[axis] = slice(None, -step)
        src = [slice(None)] * f.ndim
        src[axis] = slice(None, 1)
    shifted[tuple(idx)] = f[tuple(src)]
    return shifted


def grad(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Central-difference gradient; shape (3, nz, ny, nx) ordered (z, y, x)."""
    out = np.empty((3,) + f.shape)
    for ax in range(3):
        p = _shift(f, ax, +1, grid.periodic[ax])
        m = _shift(f, ax, -1, grid.periodic[ax])
        out[ax] = (p - m) / (2.0 * grid.dx)
    return out


def laplacian(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Compact 7-point Laplacian, second-order on smooth fields."""
    out = np.zeros_like(f)
    for ax in range(3):
        if f.shape[ax] == 1:
            continue
        p = _shift(f, ax, +1, grid.periodic[ax])
        m = _shift(f, ax, -1, grid.periodic[ax])
        out += p - 2.0 * f + m
    return out / grid.dx**2


def divergence(flux: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Central divergence of a cell-centered vector field (3, nz, ny, nx).

    Discrete adjoint of :func:`grad`: under full periodicity the sum over
    all cells vanishes identically, giving discrete conservation.
    """
    out = np.zeros(flux.shape[1:])
    for ax in range(3):
        p = _shift(flux[ax], ax, +1, grid.periodic[ax])
        m = _shift(flux[ax], ax, -1, grid.periodic[ax])
        out += (p - m) / (2.0 * grid.dx)
    return out


DEFAULT_ACTIVE_THRESHOLD = 1e-6


def active_mask(phi: np.ndarray, grid: GridSpec,
                threshold: float = DEFAULT_ACTIVE_THRESHOLD) -> np.ndarray:
    """Boolean (n_phases, nz, ny, nx): phase present at the cell or any face neighbor.

    A phase is locally active if its field exceeds ``threshold`` at the cell
    or at one of the six face neighbors (equivalently, if the value or the
    central-difference gradient stencil sees it).  Bulk cells end up with
    exactly one active phase.
    """
    present = phi > threshold
    out = present.copy()
    for ax in range(3):
        out |= _shift(present, ax + 1, +1, grid.periodic[ax])
        out |= _shift(present, ax + 1, -1, grid.periodic[ax])
    return out


def active_set(phi_tuple, neighborhood=None,
               threshold: float = DEFAULT_ACTIVE_THRESHOLD) -> list[int]:
    """Indices of locally active phases for one cell.

    ``neighborhood`` optionally holds the six face-neighbor tuples
    (iterable of length-N sequences); phases visible only there still count.
    """
    phi_tuple = np.asarray(phi_tuple)
    on = phi_tuple > threshold
    if neighborhood is not None:
        for nb in neighborhood:
            on |= np.asarray(nb) > threshold
    return [int(i) for i in np.nonzero(on)[0]]


def check_simplex(phi: np.ndarray, tol: float = 1e-12) -> None:
    """Raise if any cell tuple leaves the Gibbs simplex by more than ``tol``."""
    s = phi.sum(axis=0)
    if np.any(np.abs(s - 1.0) > tol):
        raise ValueError(f"simplex sum violated: max |sum-1| = {np.abs(s - 1).max():.3e}")
    if phi.min() < -tol:
        raise ValueError(f"negative phase fraction: min = {phi.min():.3e}")
