"""Nonlinear Regge action: deficit angles, holonomy, and Taylor checks.

A metric configuration is one positive squared length per edge.  On each
tet the six squared lengths determine a unique constant metric (the edge
DOFs are unisolvent on constants); the resulting piecewise constant field
is tangential-tangential continuous because the three edge lengths of a
face pin the induced 2d metric from both sides.

Two independent routes to the deficit angle of an edge:

* dihedral: theta_e = 2*pi - sum over incident tets of the dihedral angle
  at e measured in the tet's metric (positive when the cone angle falls
  short of 2*pi);
* holonomy: parallel-transport a frame once around the edge through the
  cyclic star of sectors and read off the rotation angle in the plane
  metric-orthogonal to the edge.

The action is R = sum_e theta_e * l_e.  Near the flat background,
R(l(eps)) = eps^2/8 * c' A c + O(eps^3) where c is the coefficient vector
of the metric perturbation and A the assembled stiffness matrix; the
linearized deficit equals half the assembled edge jump.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .mesh import LOCAL_EDGES, PeriodicMesh, edge_star
from .spaces import ReggeField, regge_to_tet_matrices

__all__ = [
    "RealizabilityError",
    "EdgeLengthConfig",
    "EdgeSector",
    "euclidean_lengths",
    "perturbed_lengths",
    "tet_metrics_from_lengths",
    "cayley_menger_determinant",
    "metric_dihedral_angles",
    "deficit_angles",
    "deficit_angle_dihedral",
    "build_edge_sector",
    "deficit_angle_holonomy",
    "linearized_deficit",
    "regge_action",
    "schlafli_check",
    "second_variation_check",
    "SecondVariationReport",
    "max_realizable_epsilon",
    "random_realizable_config",
]

# Realizability guard on the Cayley-Menger determinant, relative to the
# sixth power of the longest edge of the tet.
CM_DET_RTOL = 1e-14


class RealizabilityError(ValueError):
    """Edge lengths do not embed a tet as a nondegenerate Euclidean simplex."""


@dataclass(frozen=True)
class EdgeLengthConfig:
    """One positive squared length per edge (length^2 units)."""

    squared_lengths: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.squared_lengths, float).ravel()
        object.__setattr__(self, "squared_lengths", s)
        if np.any(s <= 0):
            raise RealizabilityError("squared lengths must be positive")

    @property
    def lengths(self) -> np.ndarray:
        return np.sqrt(self.squared_lengths)

    def to_json(self) -> dict:
        return {"squared_lengths": self.squared_lengths.tolist()}

    @staticmethod
    def from_json(payload: dict) -> "EdgeLengthConfig":
        return EdgeLengthConfig(np.asarray(payload["squared_lengths"], float))


def euclidean_lengths(mesh: PeriodicMesh) -> EdgeLengthConfig:
    """Background configuration: squared Euclidean edge lengths."""
    return EdgeLengthConfig(mesh.edge_length**2)


def perturbed_lengths(mesh: PeriodicMesh, u_prime: ReggeField,
                      eps: float) -> EdgeLengthConfig:
    """Squared lengths of the metric I + eps*u': l_e^2 + eps*c_e exactly."""
    return EdgeLengthConfig(mesh.edge_length**2 + eps * u_prime.coeffs)


def cayley_menger_determinant(s6) -> float:
    """Cayley-Menger determinant of a tet from six squared lengths
    (LOCAL_EDGES order); equals 288 V^2 for a realizable tet."""
    s = np.asarray(s6, float)
    M = np.ones((5, 5))
    M[0, 0] = 0.0
    d = np.zeros((4, 4))
    d[0, 1] = d[1, 0] = s[0]
    d[0, 2] = d[2, 0] = s[1]
    d[0, 3] = d[3, 0] = s[2]
    d[1, 2] = d[2, 1] = s[3]
    d[1, 3] = d[3, 1] = s[4]
    d[2, 3] = d[3, 2] = s[5]
    M[1:, 1:] = d
    return float(np.linalg.det(M))


def tet_metrics_from_lengths(mesh: PeriodicMesh, config: EdgeLengthConfig,
                             tets=None) -> np.ndarray:
    """Constant metric per tet from the squared edge lengths.

    Raises RealizabilityError (tagged with the first offending tet) when a
    tet is not realizable: Cayley-Menger determinant below the relative
    guard, or reconstructed metric not positive definite.
    """
    if config.squared_lengths.shape[0] != mesh.num_edges:
        raise ValueError("edge count mismatch")
    idx = np.arange(mesh.num_tets) if tets is None else np.atleast_1d(tets)
    s = config.squared_lengths[mesh.tet_edges[idx]]  # (T,6)
    G = np.empty((len(idx), 3, 3))
    G[:, 0, 0], G[:, 1, 1], G[:, 2, 2] = s[:, 0], s[:, 1], s[:, 2]
    G[:, 0, 1] = G[:, 1, 0] = 0.5 * (s[:, 0] + s[:, 1] - s[:, 3])
    G[:, 0, 2] = G[:, 2, 0] = 0.5 * (s[:, 0] + s[:, 2] - s[:, 4])
    G[:, 1, 2] = G[:, 2, 1] = 0.5 * (s[:, 1] + s[:, 2] - s[:, 5])
    scale6 = np.max(s, axis=1) ** 3
    for row, t in enumerate(idx):
        cm = cayley_menger_determinant(s[row])
        if not cm > CM_DET_RTOL * scale6[row]:
            raise RealizabilityError(
                f"tet {int(t)}: degenerate edge lengths "
                f"(Cayley-Menger determinant {cm:.3e})")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        for row, t in enumerate(idx):
            try:
                np.linalg.cholesky(G[row])
            except np.linalg.LinAlgError:
                raise RealizabilityError(
                    f"tet {int(t)}: metric not positive definite") from None
    Gr = mesh.tet_grad[idx][:, 1:]  # rows of B^{-1}
    u = np.einsum("tai,tab,tbj->tij", Gr, G, Gr)
    return 0.5 * (u + np.swapaxes(u, 1, 2))


def metric_dihedral_angles(mesh: PeriodicMesh, metrics: np.ndarray,
                           tets=None) -> np.ndarray:
    """Dihedral angle of every tet at each of its six edges, in its metric.

    Returns (T, 6) angles in (0, pi): the angle between the two faces at
    the edge, i.e. between the metric-orthogonal complements of the edge
    direction inside the two face planes.
    """
    idx = np.arange(mesh.num_tets) if tets is None else np.atleast_1d(tets)
    p = mesh.tet_coords[idx]
    u = metrics
    out = np.empty((len(idx), 6))
    for a, (i, j) in enumerate(LOCAL_EDGES):
        others = [x for x in range(4) if x not in (i, j)]
        t = p[:, j] - p[:, i]
        wc = p[:, others[0]] - p[:, i]
        wd = p[:, others[1]] - p[:, i]
        ut = np.einsum("tij,tj->ti", u, t)
        tt = np.einsum("ti,ti->t", t, ut)
        vc = wc - (np.einsum("ti,ti->t", wc, ut) / tt)[:, None] * t
        vd = wd - (np.einsum("ti,ti->t", wd, ut) / tt)[:, None] * t
        cc = np.einsum("ti,tij,tj->t", vc, u, vc)
        dd = np.einsum("ti,tij,tj->t", vd, u, vd)
        cd = np.einsum("ti,tij,tj->t", vc, u, vd)
        cosang = np.clip(cd / np.sqrt(cc * dd), -1.0, 1.0)
        out[:, a] = np.arccos(cosang)
    return out


def deficit_angles(mesh: PeriodicMesh, config: EdgeLengthConfig) -> np.ndarray:
    """theta_e = 2*pi - sum of incident dihedral angles, for every edge."""
    metrics = tet_metrics_from_lengths(mesh, config)
    ang = metric_dihedral_angles(mesh, metrics)
    total = np.zeros(mesh.num_edges)
    np.add.at(total, mesh.tet_edges.ravel(), ang.ravel())
    return 2.0 * np.pi - total


def deficit_angle_dihedral(mesh: PeriodicMesh, e: int,
                           config: EdgeLengthConfig) -> float:
    """Deficit angle of one edge via embedded dihedral angles (star-local)."""
    if not 0 <= e < mesh.num_edges:
        raise ValueError(f"invalid edge id {e}")
    tets = mesh.edge_tets[e]
    metrics = tet_metrics_from_lengths(mesh, config, tets)
    ang = metric_dihedral_angles(mesh, metrics, tets)
    total = 0.0
    for row, t in enumerate(tets):
        slot = list(mesh.tet_edges[t]).index(e)
        total += ang[row, slot]
    return float(2.0 * np.pi - total)


@dataclass(frozen=True)
class EdgeSector:
    """Cyclic sector data around one edge.

    ``metrics[i]`` is the constant metric of the sector between faces i and
    i+1 (cyclically); ``ms[i]``/``ns[i]`` are the in-face and normal frame
    vectors of face i, right-handed with the tangent.  Consecutive sector
    metrics agree tangentially on the shared face.
    """

    tangent: np.ndarray      # (3,)
    ms: np.ndarray           # (s, 3)
    ns: np.ndarray           # (s, 3)
    metrics: np.ndarray      # (s, 3, 3)
    edge: int = -1
    faces: tuple = ()
    tets: tuple = ()

    def __post_init__(self):
        mats = np.asarray(self.metrics, float)
        for i in range(len(mats)):
            try:
                np.linalg.cholesky(mats[i])
            except np.linalg.LinAlgError:
                raise RealizabilityError(
                    f"sector {i}: metric not positive definite") from None


def build_edge_sector(mesh: PeriodicMesh, e: int,
                      tet_metrics: np.ndarray,
                      check_continuity: bool = True) -> EdgeSector:
    """Assemble the sector data of edge e from per-tet constant metrics."""
    star = edge_star(mesh, e)
    ms, ns, mats = [], [], []
    for f, t in star:
        slot = list(mesh.face_edges[f]).index(e)
        ms.append(mesh.face_m[f, slot])
        ns.append(mesh.face_n[f, slot])
        mats.append(tet_metrics[t])
    ms, ns, mats = np.array(ms), np.array(ns), np.array(mats)
    te = mesh.edge_tangent[e]
    if check_continuity:
        scale = max(float(np.abs(mats).max()), 1.0)
        for i in range(len(star)):
            jump = mats[i] - mats[i - 1]  # across face i
            for a in (te, ms[i]):
                for b in (te, ms[i]):
                    if abs(a @ jump @ b) > 1e-9 * scale:
                        raise RealizabilityError(
                            f"sector metrics of edge {e} are not "
                            "tangentially continuous across face "
                            f"{star[i][0]}")
    return EdgeSector(te, ms, ns, mats, e,
                      tuple(f for f, _ in star), tuple(t for _, t in star))


def _metric_unit_normal(u: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Unit normal to the plane with Euclidean normal n, w.r.t. metric u,
    oriented to the same side as n."""
    x = np.linalg.solve(u, n)
    return x / np.sqrt(n @ x)


def deficit_angle_holonomy(sector: EdgeSector) -> float:
    """Deficit angle as the rotation angle of the holonomy around the edge.

    Crossing face i maps the metric-unit normal of the before-sector to the
    after-sector's; composing all crossings (with the basis changes between
    the face frames) yields an isometry of the start sector metric fixing
    the edge direction.  Expressed in a metric-orthonormal frame of the
    orthogonal plane it is a rotation; the angle is positive when the cone
    angle is less than 2*pi.  A rotation angle is only defined modulo
    2*pi; the principal branch (-pi, pi] is returned, so agreement with the
    dihedral route holds for |deficit| < pi.
    """
    ms, ns, mats, t = sector.ms, sector.ns, sector.metrics, sector.tangent
    s = len(ms)
    E = np.eye(3)
    for i in range(s):
        u_before = mats[i - 1]
        u_after = mats[i]
        km = _metric_unit_normal(u_before, ns[i])
        kp = _metric_unit_normal(u_after, ns[i])
        Bi = np.stack([ms[i], ns[i], t], axis=1)
        kmc = Bi.T @ km
        kpc = Bi.T @ kp
        Mp = np.array([[1.0, kpc[0], 0.0],
                       [0.0, kpc[1], 0.0],
                       [0.0, kpc[2], 1.0]])
        beta = kmc[1]
        Mm_inv = np.array([[1.0, -kmc[0] / beta, 0.0],
                           [0.0, 1.0 / beta, 0.0],
                           [0.0, -kmc[2] / beta, 1.0]])
        Ti = Mp @ Mm_inv
        Bnext = np.stack([ms[(i + 1) % s], ns[(i + 1) % s], t], axis=1)
        E = (Bnext.T @ Bi) @ Ti @ E
    # E acts on coordinates in the frame of face 0; start metric there:
    B0 = np.stack([ms[0], ns[0], t], axis=1)
    U = B0.T @ mats[s - 1] @ B0
    # metric-orthonormal frame (w1, w2, t_hat), Gram-Schmidt keeps orientation
    ez = np.array([0.0, 0.0, 1.0])
    that = ez / np.sqrt(U[2, 2])
    w1 = np.array([1.0, 0.0, 0.0])
    w1 = w1 - (w1 @ U @ that) * that
    w1 /= np.sqrt(w1 @ U @ w1)
    w2 = np.array([0.0, 1.0, 0.0])
    w2 = w2 - (w2 @ U @ that) * that - (w2 @ U @ w1) * w1
    w2 /= np.sqrt(w2 @ U @ w2)
    W = np.stack([w1, w2, that], axis=1)
    Ep = np.linalg.solve(W, E @ W)
    return float(np.arctan2(Ep[1, 0] - Ep[0, 1], Ep[0, 0] + Ep[1, 1]))


def linearized_deficit(mesh: PeriodicMesh, e: int,
                       u_prime: ReggeField) -> float:
    """Derivative of the deficit angle at the flat background.

    theta'_e = 1/2 * sum over the star faces of m_f^T (u'_after - u'_before)
    n_f, the after/before sectors taken in counter-clockwise order; equals
    half the assembled edge jump of u'.
    """
    if not 0 <= e < mesh.num_edges:
        raise ValueError(f"invalid edge id {e}")
    star = edge_star(mesh, e)
    mats = regge_to_tet_matrices(mesh, u_prime)
    total = 0.0
    for i, (f, t_after) in enumerate(star):
        t_before = star[i - 1][1]
        slot = list(mesh.face_edges[f]).index(e)
        jump = mats[t_after] - mats[t_before]
        total += float(mesh.face_m[f, slot] @ jump @ mesh.face_n[f, slot])
    return 0.5 * total


def regge_action(mesh: PeriodicMesh, config: EdgeLengthConfig) -> float:
    """R = sum_e theta_e * l_e (deficits via the dihedral route)."""
    theta = deficit_angles(mesh, config)
    return float(np.sum(theta * config.lengths))


def schlafli_check(mesh: PeriodicMesh, config: EdgeLengthConfig,
                   direction, step: float = 1e-4) -> float:
    """Residual of dR/deps against sum_e theta_e * dl_e.

    ``direction`` is a per-edge perturbation of the (unsquared) lengths.
    The derivative is a central difference at the given step, so the
    residual is O(step^2) for realizable configurations.
    """
    direction = np.asarray(direction, float).ravel()
    if direction.shape[0] != mesh.num_edges:
        raise ValueError("direction must have one entry per edge")
    l0 = config.lengths

    def action_at(eps):
        return regge_action(mesh,
                            EdgeLengthConfig((l0 + eps * direction) ** 2))

    dR = (action_at(step) - action_at(-step)) / (2.0 * step)
    theta = deficit_angles(mesh, config)
    rhs = float(np.sum(theta * direction))
    return abs(dR - rhs)


def max_realizable_epsilon(mesh: PeriodicMesh, u_prime: ReggeField,
                           hi: float = 1.0, iters: int = 60) -> float:
    """Largest eps <= hi with I + eps*u' realizable, by bisection."""

    def ok(eps):
        try:
            tet_metrics_from_lengths(mesh, perturbed_lengths(mesh, u_prime,
                                                             eps))
            return True
        except RealizabilityError:
            return False

    if ok(hi):
        return hi
    lo, up = 0.0, hi
    for _ in range(iters):
        mid = 0.5 * (lo + up)
        if ok(mid):
            lo = mid
        else:
            up = mid
    return lo


def _neville(xs, ys, x0=0.0) -> float:
    xs = np.asarray(xs, float)
    p = np.asarray(ys, float).copy()
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = ((x0 - xs[i + level]) * p[i]
                    + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + level])
    return float(p[0])


@dataclass
class SecondVariationReport:
    """Comparison of the nonlinear action against its quadratic model."""

    epsilons: np.ndarray
    actions: np.ndarray
    ratios: np.ndarray           # R(eps)/eps^2
    extrapolated: float          # Richardson limit of the ratios at 0
    target: float                # c' A c / 8 from the assembled matrix
    remainder_slope: float       # log-log slope of |R - eps^2 * target|
    pruned: list = field(default_factory=list)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.target), 1e-300)
        return abs(self.extrapolated - self.target) / scale

    def to_dict(self) -> dict:
        return {
            "epsilons": self.epsilons.tolist(),
            "actions": self.actions.tolist(),
            "ratios": self.ratios.tolist(),
            "extrapolated": self.extrapolated,
            "target": self.target,
            "rel_error": self.rel_error,
            "remainder_slope": self.remainder_slope,
            "pruned_epsilons": list(self.pruned),
        }


def second_variation_check(mesh: PeriodicMesh, u_prime: ReggeField,
                           epsilons, stiffness=None) -> SecondVariationReport:
    """Probe R(I + eps*u') over an eps schedule against eps^2/8 * c'Ac.

    Unrealizable eps values are pruned with a warning.  The report carries
    the per-eps ratios R/eps^2, their Richardson extrapolation at eps = 0,
    the assembled quadratic coefficient, and the log-log slope of the
    remainder (cubic or better when the expansion holds).  Keep the
    schedule above ~1e-3: the action is O(eps^2), so smaller eps loses the
    remainder to floating-point cancellation and degrades the slope fit.
    """
    if stiffness is None:
        from .saint_venant import assemble_stiffness
        stiffness = assemble_stiffness(mesh)
    c = u_prime.coeffs
    target = float(c @ (stiffness.matrix @ c)) / 8.0
    eps_ok, actions, pruned = [], [], []
    for eps in sorted(float(e) for e in epsilons):
        try:
            cfg = perturbed_lengths(mesh, u_prime, eps)
            actions.append(regge_action(mesh, cfg))
            eps_ok.append(eps)
        except RealizabilityError:
            pruned.append(eps)
    if pruned:
        warnings.warn(f"pruned unrealizable epsilons: {pruned}")
    if len(eps_ok) < 2:
        raise RealizabilityError("not enough realizable epsilon values")
    eps_arr = np.array(eps_ok)
    act = np.array(actions)
    ratios = act / eps_arr**2
    extrap = _neville(eps_arr, ratios, 0.0)
    rem = np.abs(act - eps_arr**2 * target)
    mask = rem > 0
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(eps_arr[mask]),
                                 np.log(rem[mask]), 1)[0])
    else:
        slope = float("inf")
    return SecondVariationReport(eps_arr, act, ratios, extrap, target,
                                 slope, pruned)


def random_realizable_config(mesh: PeriodicMesh, rng, scale: float = 0.2,
                             max_deficit: float | None = None
                             ) -> EdgeLengthConfig:
    """Seeded random non-flat configuration, shrunk until realizable.

    With ``max_deficit`` the amplitude also shrinks until every deficit
    angle stays below the bound (keeps rotation angles on the principal
    branch for holonomy comparisons).
    """
    r = rng.uniform(-1.0, 1.0, mesh.num_edges)
    s0 = mesh.edge_length**2
    factor = scale
    for _ in range(40):
        try:
            cfg = EdgeLengthConfig(s0 * (1.0 + factor * r))
            theta = deficit_angles(mesh, cfg)
            if max_deficit is None or np.abs(theta).max() <= max_deficit:
                return cfg
        except RealizabilityError:
            pass
        factor *= 0.5
    raise RealizabilityError("could not find a realizable configuration")
