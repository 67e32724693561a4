"""Fused numba kernels for the explicit co-stepped update.

Layout contract
---------------
All kernel arrays carry a one-cell halo on every axis: a field of interior
shape (nz, ny, nx) is stored as (nz+2, ny+2, nx+2) and indexed with padded
coordinates 1..n.  Halos are refreshed from the periodic images between
sweeps (:func:`refresh_halo`); size-1 axes see themselves as neighbors, so
the same kernels serve 1D/2D/3D grids.

Phase updates run over a *band*: an explicit, deterministically ordered list
of padded cell coordinates.  For small problems the band is simply every
interior cell; production runs restrict it to a dilated envelope of the
diffuse interfaces (cells outside have a single locally active phase and a
provably zero update).  Each band cell's output depends only on its frozen
inputs, so results are bit-identical for any partitioning of the band and
any thread count.

The per-cell mathematics follows :mod:`gbpinch.energetics` (link-based
discrete functional, exact derivative) and :mod:`gbpinch.transport`
(face-averaged mobility fluxes); equality with those reference
implementations is asserted in the tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# 16/pi^2 and 8/pi
_OBST = 16.0 / np.pi**2
_DRIVE = 8.0 / np.pi

_CHUNK = 512  # band cells per parallel work item; scratch is hoisted per chunk


def pad_field(interior: np.ndarray) -> np.ndarray:
    """Allocate a halo-padded copy of an interior field (any leading axes)."""
    shape = interior.shape[:-3] + tuple(s + 2 for s in interior.shape[-3:])
    out = np.zeros(shape, dtype=np.float64)
    out[..., 1:-1, 1:-1, 1:-1] = interior
    return out


def interior(padded: np.ndarray) -> np.ndarray:
    """View of the interior cells of a padded field."""
    return padded[..., 1:-1, 1:-1, 1:-1]


def refresh_halo(padded: np.ndarray) -> None:
    """Copy periodic images into the halo faces (edges/corners unused)."""
    for ax in range(padded.ndim - 3, padded.ndim):
        lo = [slice(None)] * padded.ndim
        hi = [slice(None)] * padded.ndim
        src_lo = [slice(None)] * padded.ndim
        src_hi = [slice(None)] * padded.ndim
        lo[ax] = 0
        src_lo[ax] = -2
        hi[ax] = -1
        src_hi[ax] = 1
        padded[tuple(lo)] = padded[tuple(src_lo)]
        padded[tuple(hi)] = padded[tuple(src_hi)]


def full_band(shape: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Padded coordinates of every interior cell, C-ordered (z, y, x)."""
    nz, ny, nx = shape
    iz, iy, ix = np.meshgrid(np.arange(1, nz + 1), np.arange(1, ny + 1),
                             np.arange(1, nx + 1), indexing="ij")
    return (iz.ravel().astype(np.int32), iy.ravel().astype(np.int32),
            ix.ravel().astype(np.int32))


def interface_band(phi_padded: np.ndarray, threshold: float,
                   dilation: int = 3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Band = cells with any fractional phase value, dilated ``dilation`` cells.

    Dilation uses periodic wrap so bands cross domain boundaries correctly.
    """
    phi = interior(phi_padded)
    frac = np.any((phi > threshold) & (phi < 1.0 - threshold), axis=0)
    for _ in range(dilation):
        grown = frac.copy()
        for ax in range(3):
            if frac.shape[ax] == 1:
                continue
            grown |= np.roll(frac, 1, axis=ax)
            grown |= np.roll(frac, -1, axis=ax)
        frac = grown
    iz, iy, ix = np.nonzero(frac)
    return (iz.astype(np.int32) + 1, iy.astype(np.int32) + 1, ix.astype(np.int32) + 1)


def band_covers(phi_padded: np.ndarray, band, threshold: float) -> bool:
    """True if every fractional cell lies inside the band (safety audit)."""
    phi = interior(phi_padded)
    frac = np.any((phi > threshold) & (phi < 1.0 - threshold), axis=0)
    mask = np.zeros(frac.shape, dtype=bool)
    mask[band[0] - 1, band[1] - 1, band[2] - 1] = True
    return bool(np.all(mask | ~frac))


@njit(inline="always")
def _project_simplex(v, u, n):
    """In-place Euclidean projection of v[:n] onto the Gibbs simplex (u: scratch)."""
    for i in range(n):
        u[i] = v[i]
    # insertion sort, descending (n is tiny)
    for i in range(1, n):
        key = u[i]
        j = i - 1
        while j >= 0 and u[j] < key:
            u[j + 1] = u[j]
            j -= 1
        u[j + 1] = key
    css = 0.0
    rho = 0
    lam = 0.0
    for k in range(n):
        css += u[k]
        t = (1.0 - css) / (k + 1)
        if u[k] + t > 0.0:
            rho = k
            lam = t
    for i in range(n):
        w = v[i] + lam
        v[i] = w if w > 0.0 else 0.0


@njit(parallel=True, fastmath=False)
def phase_sweep(phi, mu, phi_out, rate, src0, src1,
                bz, by, bx, start, stop,
                gamma, gamma3, tau, ceq, chi,
                eps, dx, dt, thr, inv_vm, mu_eq):
    """Pairwise active-phase update over band cells [start, stop).

    Writes per cell: projected new phases (phi_out), the pre-projection rate,
    and the solute source moments src0 = sum_a c_eq_a rate_a and
    src1 = sum_a chi_a rate_a used by the mu sweep.
    """
    n = phi.shape[0]
    invdx = 1.0 / dx
    count = stop - start
    nchunk = (count + _CHUNK - 1) // _CHUNK
    for ch in prange(nchunk):
        act = np.empty(n, np.int64)
        dfor = np.empty((n, 3), np.float64)
        dbak = np.empty((n, 3), np.float64)
        mfor = np.empty((n, 3), np.float64)
        mbak = np.empty((n, 3), np.float64)
        qfor = np.empty((n, n, 3), np.float64)
        qbak = np.empty((n, n, 3), np.float64)
        gw = np.empty(n, np.float64)
        r = np.empty(n, np.float64)
        v = np.empty(n, np.float64)
        u = np.empty(n, np.float64)
        lo = start + ch * _CHUNK
        hi = min(lo + _CHUNK, stop)
        for idx in range(lo, hi):
            iz = bz[idx]
            iy = by[idx]
            ix = bx[idx]
            # --- locally active phases: present at the cell or a face neighbor
            na = 0
            for a in range(n):
                on = phi[a, iz, iy, ix] > thr
                if not on:
                    on = (phi[a, iz + 1, iy, ix] > thr) or (phi[a, iz - 1, iy, ix] > thr) or \
                         (phi[a, iz, iy + 1, ix] > thr) or (phi[a, iz, iy - 1, ix] > thr) or \
                         (phi[a, iz, iy, ix + 1] > thr) or (phi[a, iz, iy, ix - 1] > thr)
                if on:
                    act[na] = a
                    na += 1
            if na <= 1:
                for a in range(n):
                    rate[a, iz, iy, ix] = 0.0
                    phi_out[a, iz, iy, ix] = phi[a, iz, iy, ix]
                src0[iz, iy, ix] = 0.0
                src1[iz, iy, ix] = 0.0
                continue
            # --- link midpoints and forward/backward differences per active phase
            for k in range(na):
                a = act[k]
                c0 = phi[a, iz, iy, ix]
                zp = phi[a, iz + 1, iy, ix]
                zm = phi[a, iz - 1, iy, ix]
                yp = phi[a, iz, iy + 1, ix]
                ym = phi[a, iz, iy - 1, ix]
                xp = phi[a, iz, iy, ix + 1]
                xm = phi[a, iz, iy, ix - 1]
                dfor[a, 0] = (zp - c0) * invdx
                dbak[a, 0] = (c0 - zm) * invdx
                dfor[a, 1] = (yp - c0) * invdx
                dbak[a, 1] = (c0 - ym) * invdx
                dfor[a, 2] = (xp - c0) * invdx
                dbak[a, 2] = (c0 - xm) * invdx
                mfor[a, 0] = 0.5 * (zp + c0)
                mbak[a, 0] = 0.5 * (c0 + zm)
                mfor[a, 1] = 0.5 * (yp + c0)
                mbak[a, 1] = 0.5 * (c0 + ym)
                mfor[a, 2] = 0.5 * (xp + c0)
                mbak[a, 2] = 0.5 * (c0 + xm)
            # --- pair link gradients q_ab on the six adjacent links
            for k in range(na):
                a = act[k]
                for k2 in range(k + 1, na):
                    b = act[k2]
                    for d in range(3):
                        qf = mfor[a, d] * dfor[b, d] - mfor[b, d] * dfor[a, d]
                        qb = mbak[a, d] * dbak[b, d] - mbak[b, d] * dbak[a, d]
                        qfor[a, b, d] = qf
                        qfor[b, a, d] = -qf
                        qbak[a, b, d] = qb
                        qbak[b, a, d] = -qb
            # --- exact discrete functional derivative per active phase
            for k in range(na):
                a = act[k]
                g = 0.0
                w = 0.0
                for k2 in range(na):
                    s = act[k2]
                    if s == a:
                        continue
                    gam = gamma[a, s]
                    acc = 0.0
                    for d in range(3):
                        acc += qfor[a, s, d] * (0.5 * dfor[s, d] + mfor[s, d] * invdx)
                        acc += qbak[a, s, d] * (0.5 * dbak[s, d] - mbak[s, d] * invdx)
                    g += 2.0 * gam * acc
                    w += _OBST * gam * phi[s, iz, iy, ix]
                for k2 in range(na):
                    s = act[k2]
                    if s == a:
                        continue
                    for k3 in range(k2 + 1, na):
                        p = act[k3]
                        if p == a:
                            continue
                        w += gamma3[a, s, p] * phi[s, iz, iy, ix] * phi[p, iz, iy, ix]
                gw[a] = eps * g + w / eps
            # --- pairwise accumulation
            for a in range(n):
                r[a] = 0.0
            mu_t = mu[iz, iy, ix] - mu_eq
            for k in range(na):
                a = act[k]
                for k2 in range(k + 1, na):
                    b = act[k2]
                    pair = -(gw[a] - gw[b])
                    drive = (ceq[b] - ceq[a]) * mu_t * inv_vm
                    pp = phi[a, iz, iy, ix] * phi[b, iz, iy, ix]
                    if pp > 0.0:
                        pair -= _DRIVE * np.sqrt(pp) * drive
                    f = pair / (eps * na * tau[a, b])
                    r[a] += f
                    r[b] -= f
            s0 = 0.0
            s1 = 0.0
            for a in range(n):
                rate[a, iz, iy, ix] = r[a]
                s0 += ceq[a] * r[a]
                s1 += chi[a] * r[a]
                v[a] = phi[a, iz, iy, ix] + dt * r[a]
            src0[iz, iy, ix] = s0
            src1[iz, iy, ix] = s1
            _project_simplex(v, u, n)
            for a in range(n):
                phi_out[a, iz, iy, ix] = v[a]


@njit(parallel=True, fastmath=False)
def mobility_sweep(phi, mfield, denom, bz, by, bx, start, stop, dvol, dsurf, chi):
    """Cell mobility M(phi) and susceptibility mix sum_a phi_a chi_a over band cells."""
    n = phi.shape[0]
    for idx in prange(start, stop):
        iz = bz[idx]
        iy = by[idx]
        ix = bx[idx]
        m = 0.0
        dn = 0.0
        for a in range(n):
            pa = phi[a, iz, iy, ix]
            m += dvol[a] * chi[a] * pa
            dn += chi[a] * pa
        for a in range(n):
            pa = phi[a, iz, iy, ix]
            if pa <= 0.0:
                continue
            for b in range(a + 1, n):
                pb = phi[b, iz, iy, ix]
                if pb <= 0.0:
                    continue
                m += dsurf[a, b] * (chi[a] * pa + chi[b] * pb) * pa * pb
        mfield[iz, iy, ix] = m
        denom[iz, iy, ix] = dn


@njit(parallel=True, fastmath=False)
def mu_sweep(mu, mu_out, mfield, denom, src0, src1, z0, z1, dx, dt):
    """Explicit mu update over interior z-slabs [z0, z1) (padded coordinates).

    mu_out = mu + dt * (div(M grad mu) - [src0 + mu * src1]) / denom with
    face-averaged mobilities.
    """
    ny = mu.shape[1] - 2
    nx = mu.shape[2] - 2
    inv_dx2 = 1.0 / (dx * dx)
    for iz in prange(z0, z1):
        for iy in range(1, ny + 1):
            for ix in range(1, nx + 1):
                m0 = mfield[iz, iy, ix]
                u0 = mu[iz, iy, ix]
                flux = (
                    0.5 * (m0 + mfield[iz + 1, iy, ix]) * (mu[iz + 1, iy, ix] - u0)
                    - 0.5 * (m0 + mfield[iz - 1, iy, ix]) * (u0 - mu[iz - 1, iy, ix])
                    + 0.5 * (m0 + mfield[iz, iy + 1, ix]) * (mu[iz, iy + 1, ix] - u0)
                    - 0.5 * (m0 + mfield[iz, iy - 1, ix]) * (u0 - mu[iz, iy - 1, ix])
                    + 0.5 * (m0 + mfield[iz, iy, ix + 1]) * (mu[iz, iy, ix + 1] - u0)
                    - 0.5 * (m0 + mfield[iz, iy, ix - 1]) * (u0 - mu[iz, iy, ix - 1])
                ) * inv_dx2
                source = src0[iz, iy, ix] + u0 * src1[iz, iy, ix]
                mu_out[iz, iy, ix] = u0 + dt * (flux - source) / denom[iz, iy, ix]
