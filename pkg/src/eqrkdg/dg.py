"""Modal DG space on a structured mesh.

Each cell carries coefficients with respect to the tensor product of
L2-orthonormal Legendre polynomials, so the mass matrix is the identity and
the L2 projection is a quadrature inner product.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

from .mesh import BOUNDARY, Mesh


def legendre_orthonormal(k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the orthonormal Legendre polynomials on [-1, 1].

    Returns two arrays of shape ``(k + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    vals = np.empty((k + 1, x.size))
    ders = np.empty((k + 1, x.size))
    for p in range(k + 1):
        e = np.zeros(p + 1)
        e[p] = np.sqrt((2 * p + 1) / 2)
        vals[p] = legendre.legval(x, e)
        ders[p] = legendre.legval(x, legendre.legder(e)) if p else 0.0
    return vals, ders


@dataclass(frozen=True)
class QuadRule:
    """Tensor Gauss-Legendre rule with ``m`` points per axis."""

    m: int
    dim: int

    @cached_property
    def ref_nodes(self) -> np.ndarray:
        return legendre.leggauss(self.m)[0]

    @cached_property
    def ref_weights(self) -> np.ndarray:
        return legendre.leggauss(self.m)[1]

    @property
    def n_points(self) -> int:
        return self.m ** self.dim

    def tensor_weights(self) -> np.ndarray:
        w = self.ref_weights
        return w if self.dim == 1 else np.outer(w, w).ravel()


class DGSpace:
    """Broken tensor polynomial space of degree ``k`` per axis on ``mesh``.

    Local basis index ``p * (k + 1) + q`` pairs the x-degree ``p`` with the
    y-degree ``q``; quadrature node index ``i * m + j`` likewise.
    """

    def __init__(self, mesh: Mesh, k: int, m: int | None = None):
        if k < 0:
            raise ValueError(f"polynomial degree must be >= 0, got {k}")
        self.mesh = mesh
        self.k = k
        self.quad = QuadRule(k + 2 if m is None else m, mesh.dim)
        if self.quad.m < k + 1:
            raise ValueError("quadrature too coarse for the basis")
        dim = mesh.dim
        self.n_basis = (k + 1) ** dim
        self.n_dofs = mesh.n_cells * self.n_basis

        hs = mesh.spacing
        v1, d1 = legendre_orthonormal(k, self.quad.ref_nodes)
        # 1D physical basis per axis at nodes: sqrt(2/h) * phat
        self._b1 = [np.sqrt(2 / h) * v1.T for h in hs]  # (m, k+1)
        self._db1 = [np.sqrt(2 / h) * (2 / h) * d1.T for h in hs]
        self.basis_at_nodes = _tensor(self._b1)  # (nq, nb)
        self.weights = self.quad.tensor_weights() * np.prod(hs / 2)  # (nq,)

    # ----------------------------------------------------------------- geometry
    @cached_property
    def nodes(self) -> np.ndarray:
        """Physical quadrature nodes, shape ``(n_cells, nq, dim)``."""
        centers = self.mesh.cell_centers()
        hs = self.mesh.spacing
        ref = self.quad.ref_nodes
        if self.mesh.dim == 1:
            offs = (ref * hs[0] / 2)[:, None]
        else:
            gx, gy = np.meshgrid(ref * hs[0] / 2, ref * hs[1] / 2, indexing="ij")
            offs = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        return centers[:, None, :] + offs[None, :, :]

    def basis_at(self, ref_points: np.ndarray) -> np.ndarray:
        """Physical basis values at reference points; ``ref_points`` is ``(n, dim)``."""
        ref_points = np.atleast_2d(ref_points)
        cols = []
        for d, h in enumerate(self.mesh.spacing):
            v, _ = legendre_orthonormal(self.k, ref_points[:, d])
            cols.append(np.sqrt(2 / h) * v.T)  # (n, k+1)
        out = cols[0]
        for c in cols[1:]:
            out = (out[:, :, None] * c[:, None, :]).reshape(len(ref_points), -1)
        return out

    # ------------------------------------------------------------------- fields
    def zeros(self) -> "DGField":
        return DGField(self, np.zeros((self.mesh.n_cells, self.n_basis)))

    def field(self, coeffs: np.ndarray) -> "DGField":
        return DGField(self, np.asarray(coeffs, dtype=float).reshape(self.mesh.n_cells, self.n_basis))

    def quad_field(self, values: np.ndarray) -> "QuadField":
        return QuadField(self, np.asarray(values, dtype=float).reshape(self.mesh.n_cells, self.quad.n_points))

    def eval_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal values of coefficient array(s) ``(..., n_cells, nb)``."""
        return coeffs @ self.basis_at_nodes.T

    def project_values(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of the L2 projection of nodal values ``(..., n_cells, nq)``."""
        return (values * self.weights) @ self.basis_at_nodes

    def project(self, f: Callable[[np.ndarray], np.ndarray]) -> "DGField":
        """L2 projection of a pointwise function ``f(x)`` with ``x`` of shape ``(..., dim)``."""
        vals = np.broadcast_to(np.asarray(f(self.nodes), dtype=float), self.nodes.shape[:2])
        return DGField(self, self.project_values(vals))

    def constant(self, c: float) -> "DGField":
        return self.project(lambda x: np.full(x.shape[:-1], float(c)))

    def interpolate_quad(self, f: Callable[[np.ndarray], np.ndarray]) -> "QuadField":
        return QuadField(self, np.broadcast_to(np.asarray(f(self.nodes), dtype=float),
                                               self.nodes.shape[:2]).copy())

    # ------------------------------------------------------------------- traces
    def trace_matrices(self, axis: int) -> dict[str, np.ndarray]:
        """Face trace matrices for faces normal to ``axis``.

        Returns value and normal-derivative matrices of shape ``(nfq, nb)`` on
        the low (``-1``) and high (``+1``) ends of a cell, together with the
        face quadrature weights.
        """
        k = self.k
        hs = self.mesh.spacing
        ends = np.array([-1.0, 1.0])
        ve, de = legendre_orthonormal(k, ends)  # (k+1, 2)
        ha = hs[axis]
        val_end = np.sqrt(2 / ha) * ve.T  # (2, k+1)
        der_end = np.sqrt(2 / ha) * (2 / ha) * de.T
        if self.mesh.dim == 1:
            return dict(val_lo=val_end[:1], val_hi=val_end[1:], der_lo=der_end[:1],
                        der_hi=der_end[1:], weights=np.ones(1))
        other = 1 - axis
        tang = self._b1[other]  # (m, k+1)
        fw = self.quad.ref_weights * hs[other] / 2

        def tens(end_row):
            # basis ordering p (x) * (k+1) + q (y)
            if axis == 0:
                return (end_row[None, :, None] * tang[:, None, :]).reshape(len(tang), -1)
            return (tang[:, :, None] * end_row[None, None, :]).reshape(len(tang), -1)

        return dict(val_lo=tens(val_end[0]), val_hi=tens(val_end[1]),
                    der_lo=tens(der_end[0]), der_hi=tens(der_end[1]), weights=fw)


def _tensor(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        r = out.shape[0] * m.shape[0]
        out = (out[:, None, :, None] * m[None, :, None, :]).reshape(r, -1)
    return out


class DGField:
    """Piecewise polynomial: coefficient block ``(n_cells, (k+1)**dim)``."""

    __array_priority__ = 100

    def __init__(self, space: DGSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    def __add__(self, other):
        return DGField(self.space, self.coeffs + _c(other))

    __radd__ = __add__

    def __sub__(self, other):
        return DGField(self.space, self.coeffs - _c(other))

    def __rsub__(self, other):
        return DGField(self.space, _c(other) - self.coeffs)

    def __mul__(self, s):
        return DGField(self.space, self.coeffs * s)

    __rmul__ = __mul__

    def __neg__(self):
        return DGField(self.space, -self.coeffs)

    def __repr__(self):
        return f"DGField(n_cells={self.coeffs.shape[0]}, k={self.space.k})"

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.ravel()

    def at_quad(self) -> "QuadField":
        return eval_at_quad(self)

    def copy(self) -> "DGField":
        return DGField(self.space, self.coeffs.copy())


def _c(x):
    return x.coeffs if isinstance(x, DGField) else x


class QuadField:
    """One value per quadrature node per cell, shape ``(n_cells, m**dim)``."""

    def __init__(self, space: DGSpace, values: np.ndarray):
        self.space = space
        self.values = values

    def __repr__(self):
        return f"QuadField(shape={self.values.shape})"

    def norm_L2(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2 * self.space.weights)))

    def copy(self) -> "QuadField":
        return QuadField(self.space, self.values.copy())


def project(f, space: DGSpace) -> DGField:
    """L2 projection of a callable or a :class:`QuadField` onto ``space``."""
    if isinstance(f, QuadField):
        return DGField(space, space.project_values(f.values))
    return space.project(f)


def eval_at_quad(u: DGField) -> QuadField:
    return QuadField(u.space, u.space.eval_coeffs(u.coeffs))


def trace_avg_jump(u: DGField, face) -> dict[str, np.ndarray]:
    """Average and jump of ``u`` and of its normal derivative at face nodes.

    The jump is ``u|K2 - u|K1`` with the normal pointing from K1 (``face.left``)
    to K2 (``face.right``).  On a natural boundary face the one-sided trace is
    returned as the average and the jumps are zero.
    """
    tr = u.space.trace_matrices(face.axis)
    c = u.coeffs
    sides = []
    if face.left >= 0:
        sides.append((tr["val_hi"] @ c[face.left], tr["der_hi"] @ c[face.left]))
    if face.right >= 0:
        sides.append((tr["val_lo"] @ c[face.right], tr["der_lo"] @ c[face.right]))
    if face.kind == BOUNDARY:
        (v, d), = sides
        z = np.zeros_like(v)
        return dict(avg=v, jump=z, avg_dn=d, jump_dn=z)
    (v1, d1), (v2, d2) = sides
    return dict(avg=0.5 * (v1 + v2), jump=v2 - v1, avg_dn=0.5 * (d1 + d2), jump_dn=d2 - d1)


# -------------------------------------------------------------------------- norms
def norm_L2(u: DGField) -> float:
    """L2 norm; with an orthonormal basis this is the coefficient 2-norm."""
    return float(np.linalg.norm(u.coeffs))


def _sample_points(space: DGSpace) -> tuple[np.ndarray, np.ndarray]:
    """Reference sample points (quad nodes + cell corners) and their basis values."""
    ref = space.quad.ref_nodes
    r1 = np.concatenate([ref, [-1.0, 1.0]])
    if space.mesh.dim == 1:
        pts = r1[:, None]
    else:
        gx, gy = np.meshgrid(r1, r1, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    return pts, space.basis_at(pts)


def norm_Linf(u: DGField) -> float:
    """Max of |u| over quadrature nodes and cell corners."""
    _, B = _sample_points(u.space)
    return float(np.abs(u.coeffs @ B.T).max())


def error_norms(u: DGField, exact: Callable[[np.ndarray], np.ndarray],
                extra_points: int = 1) -> tuple[float, float]:
    """(L2, Linf) errors of ``u`` against a pointwise exact field.

    The L2 error uses a Gauss rule with ``k + 2 + extra_points`` points per axis.
    """
    space = u.space
    fine = DGSpace(space.mesh, space.k, space.quad.m + extra_points)
    diff = fine.eval_coeffs(u.coeffs) - exact(fine.nodes)
    l2 = float(np.sqrt(np.sum(diff ** 2 * fine.weights)))

    pts, B = _sample_points(space)
    hs = space.mesh.spacing
    x = space.mesh.cell_centers()[:, None, :] + pts[None, :, :] * hs / 2
    linf = float(np.abs(u.coeffs @ B.T - exact(x)).max())
    return l2, linf
