"""Persistence: raw field dumps, VTK export, checkpoints, record CSV.

Raw field dump layout (documented contract, version ``PFD1``):

    line 1: b"PFD1\\n"
    line 2: one JSON object + b"\\n" with keys
            nx, ny, nz, dx, fields (list of names), dtype ("<f8")
    body  : for each field in order, nz*ny*nx little-endian float64 values,
            row-major with x fastest (C order of the (nz, ny, nx) array).

Checkpoints are numpy ``.npz`` archives carrying the full double-precision
state plus step, time and the resolved-config hash; restarting from one
reproduces the run bit-exactly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .fields import GridSpec

MAGIC = b"PFD1"


def write_fields(path, fields: dict[str, np.ndarray], grid: GridSpec) -> None:
    path = Path(path)
    header = {
        "nx": grid.nx, "ny": grid.ny, "nz": grid.nz, "dx": grid.dx,
        "fields": list(fields.keys()), "dtype": "<f8",
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(json.dumps(header).encode() + b"\n")
        for name, arr in fields.items():
            a = np.ascontiguousarray(arr, dtype="<f8")
            if a.shape != grid.shape:
                raise ValueError(f"field {name} has shape {a.shape}, expected {grid.shape}")
            fh.write(a.tobytes())


def read_fields(path):
    """Returns (fields dict, GridSpec)."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != MAGIC:
            raise ValueError(f"{path}: not a field dump")
        header = json.loads(fh.readline().decode())
        shape = (header["nz"], header["ny"], header["nx"])
        count = shape[0] * shape[1] * shape[2]
        out = {}
        for name in header["fields"]:
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated field {name}")
            out[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    grid = GridSpec(nx=header["nx"], ny=header["ny"], nz=header["nz"], dx=header["dx"])
    return out, grid


def write_vtk(path, fields: dict[str, np.ndarray], grid: GridSpec) -> None:
    """Legacy ASCII STRUCTURED_POINTS export for standard visualization tools."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("gbpinch fields\nASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx} {grid.ny} {grid.nz}\n")
        fh.write(f"ORIGIN 0 0 0\nSPACING {grid.dx} {grid.dx} {grid.dx}\n")
        fh.write(f"POINT_DATA {grid.n_cells}\n")
        for name, arr in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            # VTK expects x fastest; the (nz, ny, nx) C order already is
            np.savetxt(fh, arr.reshape(-1, 1), fmt="%.9e")


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:09d}.pfd"


def write_snapshot(outdir, stepper, config_hash: str = "") -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fields = {f"phi_{i}": stepper.phi[i] for i in range(stepper.phi.shape[0])}
    fields["mu"] = stepper.mu
    path = outdir / snapshot_name(stepper.step_count)
    write_fields(path, fields, stepper.grid)
    index = outdir / "snapshots.index"
    with open(index, "a") as fh:
        fh.write(f"{stepper.step_count}\t{stepper.t:.17g}\t{path.name}\t{config_hash}\n")
    return path


def read_snapshot(path):
    """Returns (phi, mu, grid) from a field dump written by write_snapshot."""
    fields, grid = read_fields(path)
    phase_names = sorted((k for k in fields if k.startswith("phi_")),
                         key=lambda s: int(s.split("_")[1]))
    phi = np.stack([fields[k] for k in phase_names])
    return phi, fields["mu"], grid


def write_checkpoint(outdir, stepper, config_hash: str = "", final: bool = False) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = "checkpoint_final.npz" if final else f"checkpoint_{stepper.step_count:09d}.npz"
    path = outdir / name
    np.savez(path, phi=stepper.phi, mu=stepper.mu,
             t=np.float64(stepper.t), step=np.int64(stepper.step_count),
             dt=np.float64(stepper.dt),
             config_hash=np.bytes_(config_hash.encode()))
    return path


def read_checkpoint(path):
    """Returns dict(phi, mu, t, step, dt, config_hash)."""
    with np.load(path) as z:
        return {
            "phi": z["phi"].copy(), "mu": z["mu"].copy(),
            "t": float(z["t"]), "step": int(z["step"]), "dt": float(z["dt"]),
            "config_hash": bytes(z["config_hash"]).decode(),
        }


RECORD_NAME = "record.csv"


def append_record_row(outdir, row: dict) -> None:
    """Append a record row, writing the header on first use.

    Column set is frozen by the first row of the file; later rows must agree.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / RECORD_NAME
    keys = sorted(row.keys())
    if not path.exists():
        with open(path, "w") as fh:
            fh.write(",".join(keys) + "\n")
    else:
        with open(path) as fh:
            existing = fh.readline().strip().split(",")
        if existing != keys:
            raise ValueError(f"record columns changed: {existing} vs {keys}")
    with open(path, "a") as fh:
        fh.write(",".join(_fmt(row[k]) for k in keys) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def read_record(path_or_dir):
    """Record CSV as a dict of numpy arrays (strings preserved for list columns)."""
    path = Path(path_or_dir)
    if path.is_dir():
        path = path / RECORD_NAME
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty record")
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return cols
