"""Distributional Saint-Venant (curl^T curl) operator on edge metric fields.

Applied to a piecewise constant tangential-tangential continuous field, the
operator concentrates on edges:

    curl^T curl u = sum_e [[u]]_e  t_e t_e^T delta_e,
    [[u]]_e = sum_{f ~ e} m_ef^T (u_{T+} - u_{T-}) n_ef,

where for each face f containing e, T+ is the tet on the side n_ef points
into.  The induced bilinear form a(u, v) = <curl^T curl u, v> has matrix
A[e', e] = [[rho_e]]_{e'} / l_{e'}, symmetric and supported on edge pairs
that share a tet.  The mass matrix is the L2 Gram matrix of the edge basis,
computed exactly from per-tet constant products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import PeriodicMesh
from .spaces import EdgeMeasure, ReggeField, regge_to_tet_matrices

__all__ = [
    "skew",
    "jump_across_face",
    "edge_jump_scalar",
    "apply_ctc",
    "StiffnessMatrix",
    "MassMatrix",
    "assemble_stiffness",
    "assemble_mass",
    "write_coo",
    "read_coo",
]


def skew(v) -> np.ndarray:
    """Antisymmetric matrix with (skew v) w = v x w."""
    v = np.asarray(v, float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def jump_across_face(mesh: PeriodicMesh, u: ReggeField, f: int,
                     e: int) -> np.ndarray:
    """Jump u_{T+} - u_{T-} across face f, oriented by n_ef of edge e."""
    slots = list(mesh.face_edges[f])
    if e not in slots:
        raise ValueError(f"edge {e} is not an edge of face {f}")
    s = slots.index(e)
    t0, t1 = mesh.face_tets[f]
    coeffs = u.coeffs
    m0 = np.einsum("a,aij->ij", coeffs[mesh.tet_edges[t0]], mesh.tet_rho[t0])
    m1 = np.einsum("a,aij->ij", coeffs[mesh.tet_edges[t1]], mesh.tet_rho[t1])
    return m1 - m0 if mesh.face_side[f, s] == 1 else m0 - m1


def edge_jump_scalar(mesh: PeriodicMesh, u: ReggeField, e: int) -> float:
    """[[u]]_e = sum over faces containing e of m_ef^T [u]_ef n_ef."""
    if not 0 <= e < mesh.num_edges:
        raise ValueError(f"invalid edge id {e}")
    mats = regge_to_tet_matrices(mesh, u)
    total = 0.0
    for f, s in mesh.edge_face_loc[e]:
        t0, t1 = mesh.face_tets[f]
        d = mats[t1] - mats[t0]
        if mesh.face_side[f, s] == 0:
            d = -d
        total += float(mesh.face_m[f, s] @ d @ mesh.face_n[f, s])
    return total


def apply_ctc(mesh: PeriodicMesh, u: ReggeField) -> EdgeMeasure:
    """Saint-Venant operator: edge measure with coefficients [[u]]_e."""
    mats = regge_to_tet_matrices(mesh, u)
    diff = mats[mesh.face_tets[:, 1]] - mats[mesh.face_tets[:, 0]]  # (F,3,3)
    contrib = np.einsum("fsi,fij,fsj->fs", mesh.face_m, diff, mesh.face_n)
    sign = np.where(mesh.face_side == 1, 1.0, -1.0)
    out = np.zeros(mesh.num_edges)
    np.add.at(out, mesh.face_edges.ravel(), (sign * contrib).ravel())
    return EdgeMeasure(out)


@dataclass(frozen=True)
class StiffnessMatrix:
    """Sparse E x E matrix of the Saint-Venant bilinear form."""

    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def symmetry_residual(self) -> float:
        d = self.matrix - self.matrix.T
        denom = max(np.abs(self.matrix.data).max(), 1e-300)
        return float(np.abs(d.data).max() / denom) if d.nnz else 0.0


@dataclass(frozen=True)
class MassMatrix:
    """Sparse E x E L2 Gram matrix of the edge basis (SPD)."""

    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble_stiffness(mesh: PeriodicMesh) -> StiffnessMatrix:
    """Assemble A[e', e] = [[rho_e]]_{e'} / l_{e'} face by face.

    Row e' collects, from every face containing e', the frame-contracted
    difference of the basis matrices on the two adjacent tets; entries only
    couple edges sharing a tet.  Rows are independent, so assembly could
    run in parallel over faces.
    """
    F = mesh.num_faces
    rows = np.empty((F, 3, 2, 6), dtype=np.int64)
    cols = np.empty((F, 3, 2, 6), dtype=np.int64)
    vals = np.empty((F, 3, 2, 6))
    for f in range(F):
        t0, t1 = mesh.face_tets[f]
        for s in range(3):
            e_row = mesh.face_edges[f, s]
            m = mesh.face_m[f, s]
            nn = mesh.face_n[f, s]
            sgn = 1.0 if mesh.face_side[f, s] == 1 else -1.0
            inv_l = sgn / mesh.edge_length[e_row]
            rows[f, s] = e_row
            for half, (t, tsgn) in enumerate(((t1, 1.0), (t0, -1.0))):
                cols[f, s, half] = mesh.tet_edges[t]
                vals[f, s, half] = (inv_l * tsgn) * np.einsum(
                    "i,aij,j->a", m, mesh.tet_rho[t], nn)
    E = mesh.num_edges
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                      shape=(E, E)).tocsr()
    A.sum_duplicates()
    return StiffnessMatrix(A)


def assemble_mass(mesh: PeriodicMesh) -> MassMatrix:
    """Assemble M[e, e'] = sum_T |T| rho_e|_T : rho_e'|_T exactly."""
    local = np.einsum("t,taij,tbij->tab", mesh.tet_volume, mesh.tet_rho,
                      mesh.tet_rho)
    T = mesh.num_tets
    rows = np.repeat(mesh.tet_edges, 6, axis=1).ravel()
    cols = np.tile(mesh.tet_edges, (1, 6)).ravel()
    E = mesh.num_edges
    M = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(E, E)).tocsr()
    M.sum_duplicates()
    return MassMatrix(M)


def write_coo(matrix, path):
    """Write a sparse matrix in coordinate text format.

    Header line "rows cols nnz", then one "i j value" triple per line
    (0-based indices, 17 significant digits), sorted by (i, j).
    """
    m = matrix.matrix if hasattr(matrix, "matrix") else matrix
    coo = sp.coo_matrix(m)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    for i in order:
        lines.append(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def read_coo(path) -> sp.csr_matrix:
    """Read a matrix written by :func:`write_coo`."""
    if hasattr(path, "read"):
        lines = path.read().strip().splitlines()
    else:
        with open(path) as fh:
            lines = fh.read().strip().splitlines()
    nr, nc, nnz = (int(x) for x in lines[0].split())
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for i, line in enumerate(lines[1:nnz + 1]):
        r, c, v = line.split()
        rows[i], cols[i], vals[i] = int(r), int(c), float(v)
    return sp.coo_matrix((vals, (rows, cols)), shape=(nr, nc)).tocsr()
