"""Observables: topology, contours, termination geometry, coarsening kinetics.

Everything here is offline post-processing over snapshots or the in-run
record stream; nothing feeds back into the solver.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from skimage import measure

from .fields import GridSpec

GAS_CONSTANT = 8.314462618  # J/(mol K)


def chi_constant(b: float, temperature: float, d_alpha: float, gamma: float,
                 molar_volume: float, c_eq_alpha: float) -> float:
    """Normalisation time b^3 R T / (D_a gamma V_m^2 c_eq_a), in seconds.

    ``b`` is the rod diameter; times are reported as t / chi.
    """
    return (b**3 * GAS_CONSTANT * temperature) / (
        d_alpha * gamma * molar_volume**2 * c_eq_alpha)


# ---------------------------------------------------------------------------
# connected components (26-connectivity, periodic aware)
# ---------------------------------------------------------------------------

def label_components(theta: np.ndarray, threshold: float = 0.5,
                     periodic: tuple[bool, bool, bool] = (True, True, True)):
    """Label cells with theta > threshold using 26-connectivity.

    Labels are merged across periodic faces.  Returns (labels, n) with labels
    renumbered 1..n in order of first appearance (deterministic).
    """
    mask = theta > threshold
    structure = np.ones((3, 3, 3), dtype=int)
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return labels, 0
    # union-find merge across periodic boundaries
    parent = list(range(n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for ax in range(3):
        if not periodic[ax] or labels.shape[ax] == 1:
            continue
        lo = np.take(labels, 0, axis=ax)
        hi = np.take(labels, -1, axis=ax)
        # 26-connectivity across the seam: the lo plane touches the hi plane
        # at offsets -1..1 in the remaining axes
        for s0 in (-1, 0, 1):
            for s1 in (-1, 0, 1):
                hs = np.roll(np.roll(hi, s0, axis=0), s1, axis=1)
                both = (lo > 0) & (hs > 0)
                for a, b in {(int(a), int(b)) for a, b in
                             zip(lo[both].ravel(), hs[both].ravel())}:
                    union(a, b)
    remap = np.zeros(n + 1, dtype=labels.dtype)
    nxt = 0
    for i in range(1, n + 1):
        r = find(i)
        if remap[r] == 0:
            nxt += 1
            remap[r] = nxt
        remap[i] = remap[r]
    return remap[labels], nxt


def components(theta: np.ndarray, grid: GridSpec, threshold: float = 0.5):
    """List of labeled components with voxel volumes and bounding boxes.

    Each entry: dict(id, cells, volume, bbox) where bbox is
    ((z0, z1), (y0, y1), (x0, x1)) inclusive cell indices of the component's
    extent (unwrapped naively; fine for interior components).
    """
    labels, n = label_components(theta, threshold, grid.periodic)
    out = []
    for i in range(1, n + 1):
        where = np.nonzero(labels == i)
        cells = where[0].size
        bbox = tuple((int(w.min()), int(w.max())) for w in where)
        out.append({
            "id": i,
            "cells": cells,
            "volume": cells * grid.cell_volume,
            "bbox": bbox,
            "centroid": tuple(float(w.mean()) for w in where),
        })
    return out


# ---------------------------------------------------------------------------
# isocontours / isosurfaces
# ---------------------------------------------------------------------------

def extract_contour(field: np.ndarray, level: float = 0.5, dx: float = 1.0):
    """Linear-interpolation isocontour of a 2D field or isosurface of a 3D field.

    2D: list of (k, 2) polylines in physical units (row, col) -> (z, x) order
    matching the array axes.  3D: (verts, faces) triangle mesh.  Cell-center
    coordinates: index i maps to (i + 0.5) * dx.
    """
    f = np.asarray(field, dtype=float)
    if f.ndim == 2:
        cs = measure.find_contours(f, level)
        return [(c + 0.5) * dx for c in cs]
    if f.ndim == 3:
        if f.min() > level or f.max() < level:
            return np.zeros((0, 3)), np.zeros((0, 3), dtype=int)
        verts, faces, _, _ = measure.marching_cubes(f, level)
        return (verts + 0.5) * dx, faces
    raise ValueError("field must be 2D or 3D")


def contour_extents(polylines) -> tuple[tuple[float, float], tuple[float, float]]:
    """((min0, max0), (min1, max1)) over a list of polylines."""
    pts = np.vstack(polylines)
    return ((float(pts[:, 0].min()), float(pts[:, 0].max())),
            (float(pts[:, 1].min()), float(pts[:, 1].max())))


def polygon_area_centroid(poly: np.ndarray) -> tuple[float, np.ndarray]:
    """Shoelace area (positive) and centroid of a closed polyline (k, 2)."""
    p = np.asarray(poly)
    if not np.allclose(p[0], p[-1]):
        p = np.vstack([p, p[0]])
    x, y = p[:-1, 0], p[:-1, 1]
    xn, yn = p[1:, 0], p[1:, 1]
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    if abs(a) < 1e-300:
        return 0.0, p[:-1].mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6 * a)
    cy = ((y + yn) * cross).sum() / (6 * a)
    return abs(a), np.array([cx, cy])


def _point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from an array of points (k, 2) to segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def point_to_curve_distance(points: np.ndarray, curve: np.ndarray) -> np.ndarray:
    """Min distance from each point to a polyline (vectorised over segments)."""
    best = np.full(len(points), np.inf)
    for i in range(len(curve) - 1):
        d = _point_segment_distance(points, curve[i], curve[i + 1])
        np.minimum(best, d, out=best)
    return best


def shape_self_similarity(contour_a: np.ndarray, contour_b: np.ndarray) -> float:
    """Max normalized deviation between two contours after scale/translation removal.

    Both closed contours are shifted to their area centroids and scaled to
    unit equivalent radius sqrt(area/pi); the result is the symmetric maximum
    point-to-curve distance in those units (0 for congruent-up-to-scale
    shapes).
    """
    normed = []
    for c in (contour_a, contour_b):
        area, cen = polygon_area_centroid(c)
        if area <= 0:
            raise ValueError("degenerate contour")
        r_eq = np.sqrt(area / np.pi)
        p = (np.asarray(c) - cen) / r_eq
        if not np.allclose(p[0], p[-1]):
            p = np.vstack([p, p[0]])
        normed.append(p)
    a, b = normed
    d_ab = point_to_curve_distance(a, b).max()
    d_ba = point_to_curve_distance(b, a).max()
    return float(max(d_ab, d_ba))


# ---------------------------------------------------------------------------
# termination geometry
# ---------------------------------------------------------------------------

def termination_ratio(theta: np.ndarray, grid: GridSpec, gb_z_cell: float,
                      axis_iy: int | None = None, level: float = 0.5,
                      reach: float | None = None):
    """Aspect ratio l_r / b_r of the termination structure at one boundary.

    Measured on the axial midplane cross-section (the (z, x) plane through
    the rod axis): the theta = ``level`` contour lobe nearest the
    grain-boundary plane is isolated, l_r is its axial (z) extent and b_r its
    maximal transverse (x) extent.  Returns (ratio, l_r, b_r) in meters, or
    None while no contour crosses the boundary plane (termination not yet
    formed / already detached beyond ``reach``).
    """
    iy = theta.shape[1] // 2 if axis_iy is None else axis_iy
    section = theta[:, iy, :]
    polys = extract_contour(section, level, grid.dx)
    if not polys:
        return None
    z_gb = (gb_z_cell + 0.5) * grid.dx
    if reach is None:
        reach = 0.35 * theta.shape[0] * grid.dx
    best = None
    for p in polys:
        zmin, zmax = p[:, 0].min(), p[:, 0].max()
        if zmin - 2 * grid.dx <= z_gb <= zmax + 2 * grid.dx:
            dist = abs(0.5 * (zmin + zmax) - z_gb)
            if dist <= reach and (best is None or dist < best[0]):
                best = (dist, p)
    if best is None:
        return None
    p = best[1]
    l_r = float(p[:, 0].max() - p[:, 0].min())
    b_r = float(p[:, 1].max() - p[:, 1].min())
    return l_r / b_r, l_r, b_r


def equivalent_radius(volume: float) -> float:
    """Sphere-equivalent radius (3V / 4pi)^(1/3) of a component volume."""
    return (3.0 * volume / (4.0 * np.pi)) ** (1.0 / 3.0)


# ---------------------------------------------------------------------------
# kinetics fits
# ---------------------------------------------------------------------------

def coarsening_fit(times, radii, r0: float | None = None):
    """Least-squares fit of R^3 - R0^3 against t.

    Returns (slope [m^3/s], intercept [m^3], r_squared).  R0 defaults to the
    first sample.  Requires at least 3 points.
    """
    t = np.asarray(times, dtype=float)
    r = np.asarray(radii, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 samples for a coarsening fit")
    if r0 is None:
        r0 = r[0]
    y = r**3 - r0**3
    slope, intercept = np.polyfit(t, y, 1)
    fit = slope * t + intercept
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def ovulation_index(component_counts) -> int | None:
    """Index of the first record row where the component count increases."""
    c = np.asarray(component_counts)
    for i in range(1, len(c)):
        if c[i] > c[i - 1]:
            return i
    return None


def piecewise_slopes(times, values, breaks) -> list[float]:
    """Mean slope of ``values`` over each (t0, t1) window in ``breaks``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    out = []
    for t0, t1 in breaks:
        m = (t >= t0) & (t <= t1)
        if m.sum() < 2:
            raise ValueError(f"window ({t0}, {t1}) holds fewer than 2 samples")
        s, _ = np.polyfit(t[m], v[m], 1)
        out.append(float(s))
    return out
