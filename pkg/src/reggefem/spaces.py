"""Discrete spaces on the torus mesh: fields, measures, interpolators.

Four spaces form the discrete elasticity sequence

    vertex vector fields --def--> edge metric fields --curl^T curl-->
    edge measures --div--> vertex vector measures

* ``VertexVectorField``: continuous piecewise affine vector fields, one
  3-vector coefficient per vertex (hat function basis).
* ``ReggeField``: piecewise constant symmetric matrix fields with
  tangential-tangential continuity, one coefficient per edge in the basis
  dual to the edge line-integral degrees of freedom ``dof_mu_e``.
* ``EdgeMeasure``: matrix line measures u_e t_e t_e^T delta_e.
* ``VertexVectorMeasure``: vector point measures u_x delta_x.

Symmetric 3x3 matrices are plain ndarrays kept exactly symmetric by
construction.  All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import PeriodicMesh
from .quadrature import segment_rule, tet_points_weights

__all__ = [
    "SmoothField",
    "VertexVectorField",
    "ReggeField",
    "EdgeMeasure",
    "VertexVectorMeasure",
    "matrix_mode",
    "vector_mode",
    "constant_matrix_field",
    "constant_vector_field",
    "piecewise_constant_field",
    "dof_mu_e",
    "interpolate_0",
    "interpolate_1",
    "interpolate_2",
    "interpolate_3",
    "deformation",
    "deformation_matrix",
    "divergence_x2",
    "regge_to_tet_matrices",
    "metric_from_edge_lengths",
    "pair_x2_x1",
    "pair_x3_x0",
    "l2_norm_x1",
]


# ---------------------------------------------------------------------------
# coefficient containers


@dataclass(frozen=True)
class VertexVectorField:
    """Element of the vertex space: one 3-vector per vertex."""

    values: np.ndarray  # (V, 3)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, float))
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise ValueError("vertex field values must have shape (V, 3)")


@dataclass(frozen=True)
class ReggeField:
    """Element of the edge metric space: one coefficient per edge."""

    coeffs: np.ndarray  # (E,)

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           np.asarray(self.coeffs, float).ravel())


@dataclass(frozen=True)
class EdgeMeasure:
    """Matrix-valued edge measure: one coefficient per edge."""

    coeffs: np.ndarray  # (E,)

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           np.asarray(self.coeffs, float).ravel())


@dataclass(frozen=True)
class VertexVectorMeasure:
    """Vector-valued vertex measure: one 3-vector per vertex."""

    values: np.ndarray  # (V, 3)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, float))
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise ValueError("vertex measure values must have shape (V, 3)")


# ---------------------------------------------------------------------------
# analytic inputs


class SmoothField:
    """Analytic matrix- or vector-valued function of position.

    ``fn`` must accept points of shape (..., 3) and return (..., 3, 3) for
    ``kind='matrix'`` or (..., 3) for ``kind='vector'``.  Periodicity is the
    caller's responsibility.  ``quad_points`` is the smoothness tag: the
    number of Gauss points per direction used when the field is integrated
    (edge rules are exact to degree 2*quad_points - 1, tet rules likewise).
    """

    def __init__(self, fn, kind="matrix", quad_points=8):
        if kind not in ("matrix", "vector"):
            raise ValueError("kind must be 'matrix' or 'vector'")
        self.fn = fn
        self.kind = kind
        self.quad_points = int(quad_points)

    def __call__(self, pts):
        return self.fn(np.asarray(pts, float))


def constant_matrix_field(a, quad_points=2) -> SmoothField:
    a = 0.5 * (np.asarray(a, float) + np.asarray(a, float).T)
    return SmoothField(lambda x: np.broadcast_to(a, x.shape[:-1] + (3, 3)),
                       "matrix", quad_points)


def constant_vector_field(b, quad_points=2) -> SmoothField:
    b = np.asarray(b, float)
    return SmoothField(lambda x: np.broadcast_to(b, x.shape[:-1] + (3,)),
                       "vector", quad_points)


def _skew(v):
    v = np.asarray(v, float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


class TrigMatrixField(SmoothField):
    """u(x) = a * trig(k.x + phase) with symmetric a and lattice frequency k.

    Carries its image under the Saint-Venant operator and the divergence in
    closed form, which is what the commuting-diagram tests integrate.
    """

    def __init__(self, a, k, trig="sin", phase=0.0, quad_points=12):
        self.a = 0.5 * (np.asarray(a, float) + np.asarray(a, float).T)
        self.k = np.asarray(k, float)
        self.trig = trig
        self.phase = float(phase)
        osc = np.sin if trig == "sin" else np.cos
        super().__init__(
            lambda x: self.a * osc(x @ self.k + self.phase)[..., None, None],
            "matrix", quad_points)

    def curl_t_curl(self) -> "TrigMatrixField":
        # symbol of the edge-jump operator; the overall sign matches the
        # jump orientation used in the assembly (n_ef into the + side)
        S = _skew(self.k)
        return TrigMatrixField(-S @ self.a @ S, self.k, self.trig,
                               self.phase, self.quad_points)

    def divergence(self) -> "TrigVectorField":
        # sign matches the discrete divergence orientation (+ at edge
        # heads, - at tails; see divergence_x2)
        b = self.a @ self.k
        if self.trig == "sin":
            return TrigVectorField(-b, self.k, "cos", self.phase,
                                   self.quad_points)
        return TrigVectorField(b, self.k, "sin", self.phase,
                               self.quad_points)


class TrigVectorField(SmoothField):
    """v(x) = b * trig(k.x + phase) with its symmetrized gradient in closed form."""

    def __init__(self, b, k, trig="sin", phase=0.0, quad_points=12):
        self.b = np.asarray(b, float)
        self.k = np.asarray(k, float)
        self.trig = trig
        self.phase = float(phase)
        osc = np.sin if trig == "sin" else np.cos
        super().__init__(
            lambda x: self.b * osc(x @ self.k + self.phase)[..., None],
            "vector", quad_points)

    def deformation(self) -> TrigMatrixField:
        sym = 0.5 * (np.outer(self.b, self.k) + np.outer(self.k, self.b))
        if self.trig == "sin":
            return TrigMatrixField(sym, self.k, "cos", self.phase,
                                   self.quad_points)
        return TrigMatrixField(-sym, self.k, "sin", self.phase,
                               self.quad_points)


def _lattice_frequency(geometry, integer_freq):
    m = np.asarray(integer_freq)
    if not np.all(m == np.round(m)):
        raise ValueError("frequency must be integer multiples of the "
                         "fundamental torus frequencies")
    return 2.0 * np.pi * np.asarray(m, float) / geometry.lengths


def matrix_mode(geometry, a, integer_freq, trig="sin", phase=0.0,
                quad_points=12) -> TrigMatrixField:
    """Periodic symmetric-matrix mode a * trig(k.x), k = 2*pi*m/l."""
    return TrigMatrixField(a, _lattice_frequency(geometry, integer_freq),
                           trig, phase, quad_points)


def vector_mode(geometry, b, integer_freq, trig="sin", phase=0.0,
                quad_points=12) -> TrigVectorField:
    """Periodic vector mode b * trig(k.x), k = 2*pi*m/l."""
    return TrigVectorField(b, _lattice_frequency(geometry, integer_freq),
                           trig, phase, quad_points)


def piecewise_constant_field(mesh: PeriodicMesh, u: ReggeField,
                             quad_points=8) -> SmoothField:
    """Wrap a ReggeField as a point-evaluable SmoothField (tet lookup)."""
    mats = regge_to_tet_matrices(mesh, u)

    def fn(x):
        flat = x.reshape(-1, 3)
        vals = mats[mesh.tet_at(flat)]
        return vals.reshape(x.shape[:-1] + (3, 3))

    return SmoothField(fn, "matrix", quad_points)


# ---------------------------------------------------------------------------
# degrees of freedom and interpolators


def _edge_quad_values(mesh, u: SmoothField, edges=None):
    """Evaluate u at Gauss points of the lifted edge segments: (E, Q, ...)."""
    s, w = segment_rule(u.quad_points)
    idx = np.arange(mesh.num_edges) if edges is None else np.atleast_1d(edges)
    x0 = mesh.vertex_pos[mesh.edge_tail[idx]]
    d = mesh.edge_vec[idx]
    pts = x0[:, None, :] + s[None, :, None] * d[:, None, :]
    return u(pts), d, w


def dof_mu_e(mesh: PeriodicMesh, e: int, u) -> float:
    """Edge degree of freedom: the line integral of the metric along e.

    mu_e(u) = int_0^1 (y-x)^T u(x + s(y-x)) (y-x) ds with x, y the lifted
    endpoints.  For a ReggeField the value is exact (the field is constant
    on any incident tet and single-valued along the edge by
    tangential-tangential continuity); for a SmoothField it is computed by
    Gauss quadrature at the field's declared order.
    """
    if not 0 <= e < mesh.num_edges:
        raise ValueError(f"invalid edge id {e}")
    if isinstance(u, ReggeField):
        t = mesh.edge_tets[e][0]
        mat = np.einsum("a,aij->ij", u.coeffs[mesh.tet_edges[t]],
                        mesh.tet_rho[t])
        d = mesh.edge_vec[e]
        return float(d @ mat @ d)
    vals, d, w = _edge_quad_values(mesh, u, e)
    return float(np.einsum("q,eqij,ei,ej->", w, vals, d, d))


def interpolate_0(mesh: PeriodicMesh, v: SmoothField) -> VertexVectorField:
    """Nodal interpolation: coefficient at vertex x is v(x)."""
    return VertexVectorField(v(mesh.vertex_pos))


def interpolate_1(mesh: PeriodicMesh, u: SmoothField) -> ReggeField:
    """Projection onto the edge metric space: coefficients mu_e(u)."""
    vals, d, w = _edge_quad_values(mesh, u)
    return ReggeField(np.einsum("q,eqij,ei,ej->e", w, vals, d, d))


def interpolate_2(mesh: PeriodicMesh, u: SmoothField) -> EdgeMeasure:
    """L2-dual projection onto edge measures: c_e = l_e * int_S u : rho_e."""
    pts, w = tet_points_weights(mesh.tet_coords, u.quad_points)
    vals = u(pts)  # (T, Q, 3, 3)
    per_tet = np.einsum("tq,tqij,taij->ta", w, vals, mesh.tet_rho)
    out = np.zeros(mesh.num_edges)
    np.add.at(out, mesh.tet_edges.ravel(), per_tet.ravel())
    return EdgeMeasure(out * mesh.edge_length)


def interpolate_3(mesh: PeriodicMesh, u: SmoothField) -> VertexVectorMeasure:
    """L2-dual projection onto vertex measures: u_x = int_S u * lambda_x."""
    pts, w = tet_points_weights(mesh.tet_coords, u.quad_points)
    vals = u(pts)  # (T, Q, 3)
    # barycentric values of the four local hats at the quadrature points
    p0 = mesh.tet_coords[:, 0]
    rel = pts - p0[:, None, :]
    lam = np.einsum("tai,tqi->tqa", mesh.tet_grad[:, 1:], rel)  # (T,Q,3)
    lam = np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam],
                         axis=-1)  # (T, Q, 4)
    per_vertex = np.einsum("tq,tqa,tqi->tai", w, lam, vals)  # (T,4,3)
    out = np.zeros((mesh.num_vertices, 3))
    np.add.at(out, mesh.tet_vids.ravel(),
              per_vertex.reshape(-1, 3))
    return VertexVectorMeasure(out)


# ---------------------------------------------------------------------------
# complex maps


def deformation(mesh: PeriodicMesh, v: VertexVectorField) -> ReggeField:
    """Discrete symmetrized gradient of a vertex field.

    c_e = (y - x)^T (v_head - v_tail) on the lifted edge, which equals
    mu_e(def v) for piecewise affine v.
    """
    if v.values.shape[0] != mesh.num_vertices:
        raise ValueError("vertex count mismatch")
    dv = v.values[mesh.edge_head] - v.values[mesh.edge_tail]
    return ReggeField(np.einsum("ei,ei->e", mesh.edge_vec, dv))


def deformation_matrix(mesh: PeriodicMesh) -> np.ndarray:
    """Dense (E, 3V) matrix of the deformation map on stacked coefficients."""
    E, V = mesh.num_edges, mesh.num_vertices
    D = np.zeros((E, 3 * V))
    for e in range(E):
        d = mesh.edge_vec[e]
        h, t = mesh.edge_head[e], mesh.edge_tail[e]
        D[e, 3 * h:3 * h + 3] += d
        D[e, 3 * t:3 * t + 3] -= d
    return D


def divergence_x2(mesh: PeriodicMesh, u: EdgeMeasure) -> VertexVectorMeasure:
    """Distributional divergence of an edge measure.

    div(t_e t_e^T delta_e) = t_e (delta_head - delta_tail); coefficients
    accumulate +- u_e t_e at the edge endpoints.
    """
    out = np.zeros((mesh.num_vertices, 3))
    flow = u.coeffs[:, None] * mesh.edge_tangent
    np.add.at(out, mesh.edge_head, flow)
    np.add.at(out, mesh.edge_tail, -flow)
    return VertexVectorMeasure(out)


def regge_to_tet_matrices(mesh: PeriodicMesh, u: ReggeField) -> np.ndarray:
    """Per-tet constant matrices (T, 3, 3) of an edge metric field."""
    if u.coeffs.shape[0] != mesh.num_edges:
        raise ValueError("edge count mismatch")
    return np.einsum("ta,taij->tij", u.coeffs[mesh.tet_edges], mesh.tet_rho)


def metric_from_edge_lengths(tet_coords: np.ndarray,
                             squared_lengths) -> np.ndarray:
    """Unique constant metric with prescribed squared edge lengths on a tet.

    ``tet_coords``: (4, 3) lifted vertices; ``squared_lengths``: six values
    in LOCAL_EDGES order, interpreted as the edge DOFs mu_e(u).  No
    positivity is required of the result.
    """
    s = np.asarray(squared_lengths, float)
    if s.shape != (6,):
        raise ValueError("expected six squared lengths")
    p = np.asarray(tet_coords, float)
    B = np.stack([p[i] - p[0] for i in (1, 2, 3)], axis=-1)
    det = np.linalg.det(B)
    if abs(det) < 1e-14 * max(np.abs(B).max(), 1.0) ** 3:
        raise ValueError("malformed tet: degenerate vertex configuration")
    # Gram matrix of the spanning edge vectors in the sought metric
    G = np.empty((3, 3))
    G[0, 0], G[1, 1], G[2, 2] = s[0], s[1], s[2]
    G[0, 1] = G[1, 0] = 0.5 * (s[0] + s[1] - s[3])
    G[0, 2] = G[2, 0] = 0.5 * (s[0] + s[2] - s[4])
    G[1, 2] = G[2, 1] = 0.5 * (s[1] + s[2] - s[5])
    Binv = np.linalg.inv(B)
    u = Binv.T @ G @ Binv
    return 0.5 * (u + u.T)


# ---------------------------------------------------------------------------
# pairings and norms


def pair_x2_x1(mesh: PeriodicMesh, em: EdgeMeasure, rf: ReggeField) -> float:
    """Duality pairing of an edge measure with an edge metric field.

    <t_e t_e^T delta_e, rho_e'> = delta_ee' / l_e, so the pairing is
    sum_e em_e c_e / l_e.
    """
    return float(np.sum(em.coeffs * rf.coeffs / mesh.edge_length))


def pair_x3_x0(mesh: PeriodicMesh, vm: VertexVectorMeasure,
               vf: VertexVectorField) -> float:
    """Duality pairing of a vertex measure with a vertex field."""
    return float(np.sum(vm.values * vf.values))


def l2_norm_x1(mesh: PeriodicMesh, u: ReggeField) -> float:
    """L2 norm via per-tet Frobenius norms of the constant matrices."""
    mats = regge_to_tet_matrices(mesh, u)
    return float(np.sqrt(np.sum(mesh.tet_volume
                                * np.einsum("tij,tij->t", mats, mats))))


# ---------------------------------------------------------------------------
# serialization


def coeffs_to_json(obj) -> dict:
    """JSON payload for any of the four coefficient containers."""
    if isinstance(obj, (ReggeField, EdgeMeasure)):
        return {"space": type(obj).__name__, "coeffs": obj.coeffs.tolist()}
    return {"space": type(obj).__name__, "values": obj.values.tolist()}


def coeffs_from_json(payload: dict):
    kinds = {
        "ReggeField": (ReggeField, "coeffs"),
        "EdgeMeasure": (EdgeMeasure, "coeffs"),
        "VertexVectorField": (VertexVectorField, "values"),
        "VertexVectorMeasure": (VertexVectorMeasure, "values"),
    }
    cls, key = kinds[payload["space"]]
    return cls(np.asarray(payload[key], float))


def coeffs_to_csv(obj, path):
    """CSV export of a coefficient vector in canonical simplex order.

    Edge-indexed objects write ``edge,coefficient`` rows; vertex-indexed
    ones write ``vertex,v1,v2,v3``.  17 significant digits.
    """
    if isinstance(obj, (ReggeField, EdgeMeasure)):
        lines = ["edge,coefficient"]
        lines += [f"{i},{c:.17g}" for i, c in enumerate(obj.coeffs)]
    else:
        lines = ["vertex,v1,v2,v3"]
        lines += [f"{i},{v[0]:.17g},{v[1]:.17g},{v[2]:.17g}"
                  for i, v in enumerate(obj.values)]
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
