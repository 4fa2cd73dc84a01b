"""Periodic tetrahedral meshes of a flat 3-torus.

The torus (R/l1 Z) x (R/l2 Z) x (R/l3 Z) is divided into an n1 x n2 x n3
grid of boxes and every box is cut into six tetrahedra sharing its main
diagonal (Kuhn subdivision).  The subdivision is translation invariant, so
it glues consistently under the periodic identification and all tets are
congruent under translation (quasi-uniform by construction).

Conventions
-----------
* Vertex (i, j, k) has id ``(i*n2 + j)*n3 + k``.
* Every edge is keyed by (tail vertex, direction); the seven directions are
  the nonzero 0/1 vectors, so edge ``v*7 + d`` runs from lattice point v to
  v + DIRECTIONS[d].  The unit tangent t_e points from tail to head, i.e.
  from the lexicographically lower lifted endpoint to the higher one.
* Simplices store *lifted* integer lattice points, normalized per axis to
  the window [0, n_i]; all geometry (tangents, normals, frames, gradients)
  is plain Euclidean geometry on the lift.  Periodicity lives only in the
  vertex identification, which matters at n_i = 2 where distinct edges can
  share the same unordered vertex pair through different wraps.
* For each incident (edge e, face f) pair, m_ef lies in the plane of f,
  is orthogonal to e and points into the triangle; n_ef = t_e x m_ef, so
  (m_ef, n_ef, t_e) is a right-handed orthonormal triple.

The mesh is immutable after construction and all queries are pure, so it is
safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeshError",
    "TorusGeometry",
    "PeriodicMesh",
    "build_torus_mesh",
    "edge_star",
    "mesh_summary",
    "DIRECTIONS",
    "LOCAL_EDGES",
]

# The seven lattice directions of the Kuhn complex, in lexicographic order.
DIRECTIONS = np.array(
    [
        [0, 0, 1],
        [0, 1, 0],
        [0, 1, 1],
        [1, 0, 0],
        [1, 0, 1],
        [1, 1, 0],
        [1, 1, 1],
    ],
    dtype=np.int64,
)
_DIR_INDEX = {tuple(d): i for i, d in enumerate(DIRECTIONS)}

# Vertex insertion orders of the six tets of a box (Kuhn subdivision).
_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
_PERM_RANK = {p: r for r, p in enumerate(_PERMS)}

# Local edge order within a tet: pairs of local vertex indices.
LOCAL_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


class MeshError(ValueError):
    """Invalid mesh construction input or inconsistent mesh topology."""


@dataclass(frozen=True)
class TorusGeometry:
    """Side lengths of the flat 3-torus."""

    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0 and self.l3 > 0):
            raise MeshError("torus side lengths must be positive")

    @property
    def lengths(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3], dtype=float)

    @property
    def volume(self) -> float:
        return float(self.l1 * self.l2 * self.l3)


class PeriodicMesh:
    """Combinatorics and lifted geometry of the Kuhn torus triangulation.

    Built by :func:`build_torus_mesh`; treat all attributes as read-only.
    Array attributes (sizes: V vertices, E edges, F faces, T tets):

    vertex_lattice (V,3) int, vertex_pos (V,3);
    tet_vids (T,4), tet_lattice (T,4,3) int, tet_coords (T,4,3),
    tet_volume (T,), tet_grad (T,4,3) barycentric gradients,
    tet_edges (T,6) global edge ids in LOCAL_EDGES order,
    tet_rho (T,6,3,3) edge basis matrices restricted to the tet;
    edge_tail/edge_head (E,), edge_tail_lattice (E,3) int,
    edge_vec (E,3), edge_tangent (E,3), edge_length (E,);
    face_vids (F,3), face_lattice (F,3,3) int, face_coords (F,3,3),
    face_normal (F,3), face_tets (F,2), face_edges (F,3),
    face_m/(face_n) (F,3,3) per-edge frames, face_side (F,3) index into
    face_tets of the tet the jump normal n_ef points into;
    edge_faces/edge_tets: per-edge index arrays,
    edge_face_loc: per-edge list of (face, local slot) pairs.
    """

    def __init__(self, geometry: TorusGeometry, grid):
        self.geometry = geometry
        self.grid = tuple(int(g) for g in grid)

    # counts ---------------------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return self.vertex_pos.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_tangent.shape[0]

    @property
    def num_faces(self) -> int:
        return self.face_normal.shape[0]

    @property
    def num_tets(self) -> int:
        return self.tet_vids.shape[0]

    def vertex_id(self, lattice_point) -> int:
        n1, n2, n3 = self.grid
        i, j, k = (int(lattice_point[0]) % n1, int(lattice_point[1]) % n2,
                   int(lattice_point[2]) % n3)
        return (i * n2 + j) * n3 + k

    def edge_id(self, tail_lattice_point, direction) -> int:
        d = _DIR_INDEX.get(tuple(int(x) for x in direction))
        if d is None:
            raise MeshError(f"not a lattice edge direction: {direction}")
        return self.vertex_id(tail_lattice_point) * 7 + d

    def tet_at(self, points: np.ndarray) -> np.ndarray:
        """Locate the tet containing each point (ties resolved deterministically)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = np.array(self.grid)
        x = np.mod(pts, self.geometry.lengths)
        c = np.minimum(np.floor(x / self.cell).astype(np.int64), n - 1)
        frac = x / self.cell - c
        order = np.argsort(-frac, axis=1, kind="stable")
        ranks = np.array([_PERM_RANK[tuple(row)] for row in order])
        cube = (c[:, 0] * n[1] + c[:, 1]) * n[2] + c[:, 2]
        tets = cube * 6 + ranks
        return tets if points.ndim > 1 else tets[0]


def _canonical_face(points: np.ndarray, n: np.ndarray):
    """Translation-canonical form of a lifted triangle.

    Normalizes so that the per-axis minimum lies in [0, n_i); returns the
    sorted point tuple (the dict key) and the lattice translation removed.
    """
    tau = points.min(axis=0) // n
    canon = points - tau * n
    key = tuple(sorted(tuple(int(v) for v in p) for p in canon))
    return key, tau


def build_torus_mesh(geometry: TorusGeometry, grid) -> PeriodicMesh:
    """Build the Kuhn triangulation of the torus with the given grid.

    Requires n_i >= 2 on every axis so that no edge closes onto its own
    tail through a wrap.  Simplex ordering is deterministic: vertices in
    lexicographic lattice order, tets box-major with a fixed permutation
    order, edges (tail id)*7 + direction, faces sorted by canonical key.
    """
    if len(grid) != 3 or any(int(g) != g for g in grid):
        raise MeshError("grid must be three integer subdivision counts")
    grid = tuple(int(g) for g in grid)
    if min(grid) < 2:
        raise MeshError("grid too coarse for periodic identification "
                        f"(need n_i >= 2, got {grid})")
    n = np.array(grid, dtype=np.int64)
    mesh = PeriodicMesh(geometry, grid)
    cell = geometry.lengths / n
    mesh.cell = cell
    n1, n2, n3 = grid
    nv = n1 * n2 * n3

    ii, jj, kk = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3),
                             indexing="ij")
    vertex_lattice = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    mesh.vertex_lattice = vertex_lattice
    mesh.vertex_pos = vertex_lattice * cell

    def vid(p):
        return ((p[0] % n1) * n2 + (p[1] % n2)) * n3 + (p[2] % n3)

    # tets: box-major, then the six permutations
    tet_lattice = np.empty((6 * nv, 4, 3), dtype=np.int64)
    t = 0
    unit = np.eye(3, dtype=np.int64)
    for base in vertex_lattice:
        for perm in _PERMS:
            p = base.copy()
            pts = [p.copy()]
            for axis in perm:
                p = p + unit[axis]
                pts.append(p.copy())
            tet_lattice[t] = np.array(pts)
            t += 1
    mesh.tet_lattice = tet_lattice
    mesh.tet_vids = np.array([[vid(p) for p in tet] for tet in tet_lattice])
    mesh.tet_coords = tet_lattice * cell

    # edges keyed by (tail vertex, direction)
    ne = 7 * nv
    tail = np.repeat(np.arange(nv), 7)
    dirs = np.tile(np.arange(7), nv)
    mesh.edge_tail = tail
    mesh.edge_dir = dirs
    mesh.edge_tail_lattice = vertex_lattice[tail]
    head_lattice = mesh.edge_tail_lattice + DIRECTIONS[dirs]
    mesh.edge_head = np.array([vid(p) for p in head_lattice])
    mesh.edge_vec = DIRECTIONS[dirs] * cell
    mesh.edge_length = np.linalg.norm(mesh.edge_vec, axis=1)
    mesh.edge_tangent = mesh.edge_vec / mesh.edge_length[:, None]

    # tet -> edge incidence via lifted instances (wrap-safe)
    tet_edges = np.empty((6 * nv, 6), dtype=np.int64)
    for t in range(6 * nv):
        for a, (i, j) in enumerate(LOCAL_EDGES):
            d = tet_lattice[t, j] - tet_lattice[t, i]
            td = _DIR_INDEX.get(tuple(d))
            if td is None:
                td = _DIR_INDEX[tuple(-d)]
                tail_pt = tet_lattice[t, j]
            else:
                tail_pt = tet_lattice[t, i]
            tet_edges[t, a] = vid(tail_pt) * 7 + td
    mesh.tet_edges = tet_edges

    # barycentric gradients, volumes, restricted edge basis matrices
    B = np.stack([mesh.tet_coords[:, i] - mesh.tet_coords[:, 0]
                  for i in (1, 2, 3)], axis=-1)
    Binv = np.linalg.inv(B)
    grad = np.empty((6 * nv, 4, 3))
    grad[:, 1:] = Binv
    grad[:, 0] = -Binv.sum(axis=1)
    mesh.tet_grad = grad
    mesh.tet_volume = np.abs(np.linalg.det(B)) / 6.0
    rho = np.empty((6 * nv, 6, 3, 3))
    for a, (i, j) in enumerate(LOCAL_EDGES):
        gi, gj = grad[:, i], grad[:, j]
        # -1/2 normalization makes the edge DOFs dual to this basis
        rho[:, a] = -0.5 * (gi[:, :, None] * gj[:, None, :] +
                            gj[:, :, None] * gi[:, None, :])
    mesh.tet_rho = rho

    # faces: canonical lifted triangles, each shared by exactly two tets
    records: dict = {}
    for t in range(6 * nv):
        for opp in range(4):
            pts = tet_lattice[t, [m for m in range(4) if m != opp]]
            key, tau = _canonical_face(pts, n)
            records.setdefault(key, []).append((t, opp, tau))
    keys = sorted(records)
    nf = len(keys)
    face_lattice = np.array([k for k in keys], dtype=np.int64)
    face_coords = face_lattice * cell
    face_vids = np.array([[vid(p) for p in k] for k in keys])
    face_tets = np.empty((nf, 2), dtype=np.int64)
    face_normal = np.empty((nf, 3))
    for f, key in enumerate(keys):
        recs = records[key]
        if len(recs) != 2:
            raise MeshError(f"face shared by {len(recs)} tets (expected 2)")
        recs = sorted(recs, key=lambda r: (r[0], tuple(r[2])))
        (t0, o0, tau0), (t1, o1, tau1) = recs
        if t0 == t1:
            raise MeshError("face glued to a single tet; grid too coarse")
        pts = face_coords[f]
        nr = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        nr /= np.linalg.norm(nr)
        centroid = pts.mean(axis=0)
        q1 = (tet_lattice[t1, o1] - tau1 * n) * cell
        s1 = float(nr @ (q1 - centroid))
        q0 = (tet_lattice[t0, o0] - tau0 * n) * cell
        s0 = float(nr @ (q0 - centroid))
        if not (s0 * s1 < 0):
            raise MeshError("adjacent tets on the same side of a face")
        if s1 < 0:
            nr = -nr
        face_normal[f] = nr
        face_tets[f] = (t0, t1)
    mesh.face_lattice = face_lattice
    mesh.face_coords = face_coords
    mesh.face_vids = face_vids
    mesh.face_tets = face_tets
    mesh.face_normal = face_normal

    # per-face edges and (m_ef, n_ef) frames
    face_edges = np.empty((nf, 3), dtype=np.int64)
    face_m = np.empty((nf, 3, 3))
    face_n = np.empty((nf, 3, 3))
    face_side = np.empty((nf, 3), dtype=np.int64)
    local_pairs = [(0, 1), (0, 2), (1, 2)]
    for f in range(nf):
        pts_i = face_lattice[f]
        pts_x = face_coords[f]
        for s, (a, b) in enumerate(local_pairs):
            d = pts_i[b] - pts_i[a]
            td = _DIR_INDEX.get(tuple(d))
            tail_pt = pts_i[a] if td is not None else pts_i[b]
            if td is None:
                td = _DIR_INDEX[tuple(-d)]
            e = vid(tail_pt) * 7 + td
            face_edges[f, s] = e
            c = pts_x[3 - a - b]
            u = pts_x[b] - pts_x[a]
            u /= np.linalg.norm(u)
            w = c - pts_x[a]
            m = w - (w @ u) * u
            m /= np.linalg.norm(m)
            te = mesh.edge_tangent[e]
            nef = np.cross(te, m)
            face_m[f, s] = m
            face_n[f, s] = nef
            face_side[f, s] = 1 if nef @ face_normal[f] > 0 else 0
    mesh.face_edges = face_edges
    mesh.face_m = face_m
    mesh.face_n = face_n
    mesh.face_side = face_side

    # edge incidence
    edge_faces = [[] for _ in range(ne)]
    edge_face_loc = [[] for _ in range(ne)]
    for f in range(nf):
        for s in range(3):
            e = face_edges[f, s]
            edge_faces[e].append(f)
            edge_face_loc[e].append((f, s))
    edge_tets = [[] for _ in range(ne)]
    for t in range(6 * nv):
        for e in tet_edges[t]:
            edge_tets[e].append(t)
    mesh.edge_faces = [np.array(v, dtype=np.int64) for v in edge_faces]
    mesh.edge_face_loc = edge_face_loc
    mesh.edge_tets = [np.array(v, dtype=np.int64) for v in edge_tets]

    mesh._stars = [_build_star(mesh, e, False) for e in range(ne)]

    for name in ("vertex_lattice", "vertex_pos", "tet_lattice", "tet_vids",
                 "tet_coords", "tet_edges", "tet_grad", "tet_volume",
                 "tet_rho", "edge_tail", "edge_head", "edge_tail_lattice",
                 "edge_vec", "edge_tangent", "edge_length", "face_lattice",
                 "face_coords", "face_vids", "face_tets", "face_normal",
                 "face_edges", "face_m", "face_n", "face_side"):
        getattr(mesh, name).setflags(write=False)
    return mesh


def _build_star(mesh: PeriodicMesh, e: int, flip: bool):
    """Cyclic (face, tet) list around edge e, counter-clockwise w.r.t. t_e.

    Entry i pairs face_i with the tet of the sector between face_i and
    face_{i+1}.  With ``flip`` the orientation reference is -t_e and the
    cycle reverses.
    """
    faces = mesh.edge_faces[e]
    te = -mesh.edge_tangent[e] if flip else mesh.edge_tangent[e]
    f0 = int(faces.min())
    ms = {}
    for f, s in mesh.edge_face_loc[e]:
        ms[f] = mesh.face_m[f, s]
    r1 = ms[f0]
    r2 = np.cross(te, r1)
    ang = {}
    for f in faces:
        a = float(np.arctan2(ms[f] @ r2, ms[f] @ r1))
        ang[f] = a + 2.0 * np.pi if a < -1e-12 else a
    order = sorted(faces, key=lambda f: ang[f])
    in_star = set(int(t) for t in mesh.edge_tets[e])
    star = []
    for i, f in enumerate(order):
        g = order[(i + 1) % len(order)]
        common = (set(int(t) for t in mesh.face_tets[f])
                  & set(int(t) for t in mesh.face_tets[g]) & in_star)
        if len(common) != 1:
            raise MeshError(f"ambiguous sector between faces {f} and {g} "
                            f"around edge {e}")
        star.append((int(f), common.pop()))
    return star


def edge_star(mesh: PeriodicMesh, e: int, flip_orientation: bool = False):
    """Faces and sector tets around edge e in counter-clockwise cyclic order."""
    if not 0 <= e < mesh.num_edges:
        raise MeshError(f"invalid edge id {e}")
    if flip_orientation:
        return _build_star(mesh, e, True)
    return list(mesh._stars[e])


def mesh_summary(mesh: PeriodicMesh, include_incidence: bool = False) -> dict:
    """JSON-ready summary: counts, geometry and optional incidence tables."""
    out = {
        "geometry": {"l1": mesh.geometry.l1, "l2": mesh.geometry.l2,
                     "l3": mesh.geometry.l3},
        "grid": list(mesh.grid),
        "counts": {
            "vertices": mesh.num_vertices,
            "edges": mesh.num_edges,
            "faces": mesh.num_faces,
            "tets": mesh.num_tets,
        },
        "euler_characteristic": mesh.num_vertices - mesh.num_edges
        + mesh.num_faces - mesh.num_tets,
        "mesh_width": float(np.max(
            [np.linalg.norm(mesh.tet_coords[0, i] - mesh.tet_coords[0, j])
             for i in range(4) for j in range(i)])),
    }
    if include_incidence:
        out["incidence"] = {
            "tet_edges": mesh.tet_edges.tolist(),
            "face_tets": mesh.face_tets.tolist(),
            "face_edges": mesh.face_edges.tolist(),
            "edge_tets": [v.tolist() for v in mesh.edge_tets],
            "edge_faces": [v.tolist() for v in mesh.edge_faces],
        }
    return out
