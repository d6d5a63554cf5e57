"""Structured tensor-product meshes on rectangles (1D and 2D)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

BC_KINDS = ("periodic", "natural")

INTERIOR = "interior"
PERIODIC = "periodic-wrap"
BOUNDARY = "boundary"


class Face(NamedTuple):
    """A face normal to ``axis``, oriented from cell ``left`` to cell ``right``.

    On a natural boundary one of the two cells is ``-1``.
    """

    index: int
    axis: int
    left: int
    right: int
    kind: str

    @property
    def cells(self) -> tuple[int, ...]:
        return tuple(c for c in (self.left, self.right) if c >= 0)


@dataclass(frozen=True)
class Mesh:
    """Uniform axis-aligned mesh of ``prod(counts)`` cells.

    Cells are numbered in C order over the per-axis cell indices, so in 2D
    cell ``ix * ny + iy`` sits in column ``ix`` and row ``iy``.
    """

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    bc: str
    faces: tuple[Face, ...] = field(repr=False)
    # per-axis face index arrays: (left_cells, right_cells, kinds)
    _axis_faces: tuple = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / n for (a, b), n in zip(self.bounds, self.counts)])

    @property
    def h(self) -> float:
        """Largest cell edge length."""
        return float(self.spacing.max())

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.bounds]))

    def cell_multi_index(self, cell: int) -> tuple[int, ...]:
        self._check_cell(cell)
        return tuple(int(i) for i in np.unravel_index(cell, self.counts))

    def cell_extents(self, cell: int) -> list[tuple[float, float]]:
        idx = self.cell_multi_index(cell)
        h = self.spacing
        return [(a + i * hd, a + (i + 1) * hd) for (a, _), i, hd in zip(self.bounds, idx, h)]

    def cell_centers(self) -> np.ndarray:
        """Array of shape ``(n_cells, dim)``."""
        axes = [a + (np.arange(n) + 0.5) * hd
                for (a, _), n, hd in zip(self.bounds, self.counts, self.spacing)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def axis_faces(self, axis: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised view of the faces normal to ``axis``: (left, right, kind)."""
        return self._axis_faces[axis]

    def faces_of(self, cell: int) -> list[tuple[Face, int]]:
        """Faces touching ``cell`` with orientation flag.

        The flag is ``+1`` when the face normal points out of the cell (the
        cell is ``left``) and ``-1`` when it points in.
        """
        self._check_cell(cell)
        out = []
        for f in self.faces:
            if f.left == cell:
                out.append((f, +1))
            if f.right == cell:
                out.append((f, -1))
        return out

    def neighbor(self, cell: int, axis: int, step: int = 1) -> int:
        """Cell reached by moving ``step`` cells along ``axis``; -1 if off-mesh."""
        idx = list(self.cell_multi_index(cell))
        j = idx[axis] + step
        n = self.counts[axis]
        if self.bc == "periodic":
            j %= n
        elif not 0 <= j < n:
            return -1
        idx[axis] = j
        return int(np.ravel_multi_index(idx, self.counts))

    def _check_cell(self, cell: int) -> None:
        if not 0 <= cell < self.n_cells:
            raise IndexError(f"cell index {cell} out of range [0, {self.n_cells})")


def build_mesh(bounds: Sequence[Sequence[float]], counts: Sequence[int] | int,
               bc: str = "periodic") -> Mesh:
    """Build a uniform 1D or 2D mesh.

    Parameters
    ----------
    bounds : sequence of (lo, hi) pairs, one per axis
    counts : cells per axis (an int is broadcast over all axes)
    bc : ``"periodic"`` or ``"natural"``
    """
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    dim = len(bounds)
    if dim not in (1, 2):
        raise ValueError(f"only 1D and 2D meshes are supported, got dim={dim}")
    if np.isscalar(counts):
        counts = (int(counts),) * dim
    counts = tuple(int(n) for n in counts)
    if len(counts) != dim:
        raise ValueError(f"{len(counts)} cell counts given for a {dim}D domain")
    for n in counts:
        if n < 2:
            raise ValueError(f"need at least 2 cells per axis, got {n}")
    for a, b in bounds:
        if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
            raise ValueError(f"degenerate interval [{a}, {b}]")
    if bc not in BC_KINDS:
        raise ValueError(f"unknown boundary condition {bc!r}; expected one of {BC_KINDS}")

    cell_ids = np.arange(int(np.prod(counts))).reshape(counts)
    faces: list[Face] = []
    axis_faces = []
    for axis in range(dim):
        n = counts[axis]
        ids = np.moveaxis(cell_ids, axis, 0)  # (n, rest...)
        rest = ids.shape[1:]
        left, right, kind = [], [], []
        if bc == "periodic":
            for j in range(n):
                left.append(ids[j].ravel())
                right.append(ids[(j + 1) % n].ravel())
                kind.append(np.full(ids[j].size, PERIODIC if j == n - 1 else INTERIOR))
        else:
            none = np.full(int(np.prod(rest, dtype=int)), -1)
            left.append(none)
            right.append(ids[0].ravel())
            kind.append(np.full(none.size, BOUNDARY))
            for j in range(n - 1):
                left.append(ids[j].ravel())
                right.append(ids[j + 1].ravel())
                kind.append(np.full(none.size, INTERIOR))
            left.append(ids[n - 1].ravel())
            right.append(none)
            kind.append(np.full(none.size, BOUNDARY))
        left = np.concatenate(left)
        right = np.concatenate(right)
        kind = np.concatenate(kind)
        axis_faces.append((left, right, kind))
        for lf, rt, kd in zip(left, right, kind):
            faces.append(Face(len(faces), axis, int(lf), int(rt), str(kd)))

    return Mesh(bounds, counts, bc, tuple(faces), tuple(axis_faces))
