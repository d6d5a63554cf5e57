"""Field output on uniform sampling grids: legacy VTK and plain CSV."""

from __future__ import annotations

import numpy as np

from .dg import DGField


def sample_grid(u: DGField, samples_per_cell: int = 4):
    """Sample ``u`` at ``samples_per_cell`` equispaced interior points per cell and axis.

    Returns ``(axes, values)`` where ``axes`` lists the 1D coordinate arrays
    and ``values`` has shape ``tuple(len(ax) for ax in axes)``.
    """
    space = u.space
    mesh = space.mesh
    r = (np.arange(samples_per_cell) + 0.5) / samples_per_cell * 2 - 1
    if mesh.dim == 1:
        pts = r[:, None]
    else:
        gx, gy = np.meshgrid(r, r, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    vals = u.coeffs @ space.basis_at(pts).T  # (n_cells, S**dim)
    S = samples_per_cell
    axes = [a + (np.arange(n * S) + 0.5) * (b - a) / (n * S)
            for (a, b), n in zip(mesh.bounds, mesh.counts)]
    if mesh.dim == 1:
        return axes, vals.reshape(-1)
    nx, ny = mesh.counts
    grid = vals.reshape(nx, ny, S, S).transpose(0, 2, 1, 3).reshape(nx * S, ny * S)
    return axes, grid


def write_vtk(path, u: DGField, samples_per_cell: int = 4, name: str = "u", time: float | None = None):
    """Legacy ASCII VTK rectilinear grid with point data ``name``."""
    axes, vals = sample_grid(u, samples_per_cell)
    if len(axes) == 1:
        axes = axes + [np.zeros(1)]
        vals = vals[:, None]
    xs, ys = axes
    title = f"{name}" + (f" t={time!r}" if time is not None else "")
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\nASCII\nDATASET RECTILINEAR_GRID\n")
        fh.write(f"DIMENSIONS {len(xs)} {len(ys)} 1\n")
        fh.write(f"X_COORDINATES {len(xs)} double\n" + " ".join(f"{x:.17g}" for x in xs) + "\n")
        fh.write(f"Y_COORDINATES {len(ys)} double\n" + " ".join(f"{y:.17g}" for y in ys) + "\n")
        fh.write("Z_COORDINATES 1 double\n0\n")
        fh.write(f"POINT_DATA {vals.size}\nSCALARS {name} double 1\nLOOKUP_TABLE default\n")
        # VTK orders points with x fastest
        np.savetxt(fh, vals.T.reshape(-1), fmt="%.17g")


def write_grid_csv(path, u: DGField, samples_per_cell: int = 4):
    """``x[,y],u`` rows at 17 significant digits."""
    axes, vals = sample_grid(u, samples_per_cell)
    grids = np.meshgrid(*axes, indexing="ij")
    cols = [g.ravel() for g in grids] + [vals.ravel()]
    header = ",".join(["x", "y"][: len(axes)] + ["u"])
    np.savetxt(path, np.column_stack(cols), fmt="%.17g", delimiter=",", header=header, comments="")


def read_grid_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1)
