"""Named verification suites: the invariants the CLI gate runs.

Each suite returns CheckResult entries with a pass flag and a one-line
detail; ``run_verification`` bundles them for a mesh/seed.  Tolerances are
the acceptance tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import build_edge_sector, deficit_angle_dihedral, \
    deficit_angle_holonomy, linearized_deficit, perturbed_lengths, \
    random_realizable_config, schlafli_check, second_variation_check, \
    deficit_angles, tet_metrics_from_lengths
from .mesh import PeriodicMesh, build_torus_mesh
from .saint_venant import apply_ctc, assemble_stiffness, \
    edge_jump_scalar
from .spaces import ReggeField, VertexVectorField, deformation, \
    divergence_x2, interpolate_0, interpolate_1, interpolate_2, \
    interpolate_3, matrix_mode, vector_mode

__all__ = ["CheckResult", "run_verification",
           "check_complex_identities", "check_commuting_diagram",
           "check_dual_path_deficits", "check_second_variation",
           "check_schlafli"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: float = float("nan")
    tolerance: float = float("nan")

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "detail": self.detail, "value": self.value,
                "tolerance": self.tolerance}


def _result(name, value, tol, detail=""):
    msg = f"{detail + '; ' if detail else ''}max={value:.3e} tol={tol:.1e}"
    return CheckResult(name, bool(value <= tol), msg, float(value),
                       float(tol))


def check_complex_identities(mesh: PeriodicMesh, seed: int = 0,
                             n_random: int = 10) -> list:
    """def -> edge jump -> divergence composes to zero, A symmetric."""
    rng = np.random.default_rng(seed)
    A = assemble_stiffness(mesh)
    Ad = A.toarray()
    scale_A = np.abs(Ad).max()
    out = [_result("stiffness_symmetry", A.symmetry_residual(), 1e-10)]

    worst = 0.0
    for _ in range(n_random):
        gmat = rng.uniform(-1.0, 1.0, (3, 3))
        gmat = 0.5 * (gmat + gmat.T)
        c = np.einsum("ei,ij,ej->e", mesh.edge_vec, gmat, mesh.edge_vec)
        worst = max(worst, np.abs(Ad @ c).max()
                    / (scale_A * max(np.abs(c).max(), 1e-300)))
    out.append(_result("constant_metrics_in_kernel", worst, 1e-12,
                       f"{n_random} random constants"))

    worst = 0.0
    for _ in range(n_random):
        v = VertexVectorField(rng.uniform(-1, 1, (mesh.num_vertices, 3)))
        c = deformation(mesh, v).coeffs
        worst = max(worst, np.abs(Ad @ c).max()
                    / (scale_A * max(np.abs(c).max(), 1e-300)))
    out.append(_result("deformations_in_kernel", worst, 1e-10,
                       f"{n_random} random vertex fields"))

    worst = 0.0
    for e in range(mesh.num_edges):
        basis = np.zeros(mesh.num_edges)
        basis[e] = 1.0
        dv = divergence_x2(mesh, apply_ctc(mesh, ReggeField(basis)))
        worst = max(worst, np.abs(dv.values).max())
    out.append(_result("divergence_of_jumps_zero", worst, 1e-12,
                       "all basis fields"))
    return out


def check_commuting_diagram(mesh: PeriodicMesh, tol: float = 1e-9) -> list:
    """The four interpolation/operator squares on unit-frequency modes."""
    g = mesh.geometry
    gen = np.array([[1.0, 0.5, 0.2], [0.5, -0.3, 0.7], [0.2, 0.7, 0.4]])
    e2, e3 = np.eye(3)[1], np.eye(3)[2]
    sigmas = [np.outer(e2, e2) + np.outer(e3, e3),
              np.outer(e2, e3) + np.outer(e3, e2),
              np.outer(e2, e2) - np.outer(e3, e3)]
    out = []

    worst = 0.0
    for trig in ("sin", "cos"):
        for b in (np.array([0.0, 1.0, 0.0]), np.array([1.0, 2.0, -1.0])):
            v = vector_mode(g, b, (1, 0, 0), trig)
            lhs = interpolate_1(mesh, v.deformation()).coeffs
            rhs = deformation(mesh, interpolate_0(mesh, v)).coeffs
            worst = max(worst, np.abs(lhs - rhs).max())
    out.append(_result("square_deformation", worst, tol))

    worst = 0.0
    for a in sigmas + [gen]:
        u = matrix_mode(g, a, (1, 0, 0), "sin")
        lhs = interpolate_2(mesh, u.curl_t_curl()).coeffs
        rhs = apply_ctc(mesh, interpolate_1(mesh, u)).coeffs
        worst = max(worst, np.abs(lhs - rhs).max())
    out.append(_result("square_saint_venant", worst, tol))

    worst = 0.0
    for a in [gen] + sigmas[:1]:
        for trig in ("sin", "cos"):
            u = matrix_mode(g, a, (1, 0, 0), trig)
            lhs = interpolate_3(mesh, u.divergence()).values
            rhs = divergence_x2(mesh, interpolate_2(mesh, u)).values
            worst = max(worst, np.abs(lhs - rhs).max())
    out.append(_result("square_divergence", worst, tol))

    # fourth square: the interpolators adjoint to each other
    from .spaces import pair_x2_x1, piecewise_constant_field, \
        regge_to_tet_matrices
    rng = np.random.default_rng(2)
    rf = ReggeField(rng.uniform(-1, 1, mesh.num_edges))
    upc = piecewise_constant_field(mesh, rf, quad_points=12)
    worst = 0.0
    for a in (gen, sigmas[0]):
        w = matrix_mode(g, a, (1, 0, 0), "sin")
        lhs = pair_x2_x1(mesh, interpolate_2(mesh, upc),
                         interpolate_1(mesh, w))
        mats_u = regge_to_tet_matrices(mesh, rf)
        mats_w = regge_to_tet_matrices(mesh, interpolate_1(mesh, w))
        rhs = float(np.sum(mesh.tet_volume
                           * np.einsum("tij,tij->t", mats_u, mats_w)))
        worst = max(worst, abs(lhs - rhs))
    out.append(_result("square_adjoint_pairing", worst, tol))
    return out


def check_dual_path_deficits(mesh: PeriodicMesh, seed: int = 0,
                             n_random: int = 5) -> list:
    """Holonomy vs dihedral deficits; linearized deficit vs half the jump."""
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for _ in range(n_random):
        # stay on the principal branch of the holonomy rotation angle
        cfg = random_realizable_config(mesh, rng, max_deficit=2.5)
        mats = tet_metrics_from_lengths(mesh, cfg)
        for e in range(mesh.num_edges):
            th_d = deficit_angle_dihedral(mesh, e, cfg)
            th_h = deficit_angle_holonomy(build_edge_sector(mesh, e, mats))
            worst = max(worst, abs(th_d - th_h))
    out.append(_result("holonomy_vs_dihedral", worst, 1e-9,
                       f"{n_random} random configurations"))

    worst = 0.0
    for _ in range(n_random):
        up = ReggeField(rng.uniform(-1, 1, mesh.num_edges))
        for e in range(mesh.num_edges):
            a = linearized_deficit(mesh, e, up)
            b = 0.5 * edge_jump_scalar(mesh, up, e)
            worst = max(worst, abs(a - b))
    out.append(_result("linearized_deficit_vs_half_jump", worst, 1e-12,
                       f"{n_random} random fields, all edges"))

    # finite differences of the nonlinear deficit against the linearization
    up = ReggeField(rng.uniform(-1, 1, mesh.num_edges))
    worst = 0.0
    h = 1e-2
    for e in range(mesh.num_edges):
        lin = linearized_deficit(mesh, e, up)

        def th(eps):
            return deficit_angle_dihedral(mesh, e,
                                          perturbed_lengths(mesh, up, eps))

        d1 = (th(h) - th(-h)) / (2 * h)
        d2 = (th(h / 2) - th(-h / 2)) / h
        worst = max(worst, abs((4 * d2 - d1) / 3 - lin))
    out.append(_result("deficit_fd_vs_linearized", worst, 1e-7,
                       "Richardson central differences"))
    return out


def check_second_variation(mesh: PeriodicMesh, seed: int = 0,
                           n_random: int = 5) -> list:
    """R(eps)/eps^2 -> c'Ac/8 with cubic remainder."""
    rng = np.random.default_rng(seed)
    A = assemble_stiffness(mesh)
    eps = np.geomspace(1e-2, 1e-1, 7)
    worst_err, worst_slope = 0.0, np.inf
    for _ in range(n_random):
        up = ReggeField(rng.uniform(-1, 1, mesh.num_edges))
        rep = second_variation_check(mesh, up, eps, A)
        worst_err = max(worst_err, rep.rel_error)
        worst_slope = min(worst_slope, rep.remainder_slope)
    out = [_result("second_variation_coefficient", worst_err, 1e-2,
                   f"{n_random} random directions")]
    slope_ok = worst_slope >= 2.7
    out.append(CheckResult(
        "second_variation_remainder_slope", slope_ok,
        f"min log-log slope {worst_slope:.3f} (need >= 2.7)",
        float(worst_slope), 2.7))
    return out


def check_schlafli(mesh: PeriodicMesh, seed: int = 0,
                   n_random: int = 5) -> list:
    """Length-derivative identity of the action at non-flat configs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        cfg = random_realizable_config(mesh, rng, scale=0.15)
        direction = rng.uniform(-1.0, 1.0, mesh.num_edges)
        res = schlafli_check(mesh, cfg, direction, step=1e-4)
        theta = deficit_angles(mesh, cfg)
        tol = 1e-6 * abs(float(np.sum(theta * direction))) + 1e-10
        worst = max(worst, res / tol)
    return [_result("schlafli_identity", worst, 1.0,
                    f"{n_random} random non-flat configurations; "
                    "residual/tolerance ratio")]


def run_verification(geometry, grid, seed: int = 0) -> list:
    """All suites on one mesh; returns the flat list of CheckResults."""
    mesh = build_torus_mesh(geometry, grid)
    results = []
    results += check_complex_identities(mesh, seed)
    results += check_commuting_diagram(mesh)
    results += check_dual_path_deficits(mesh, seed, n_random=3)
    results += check_second_variation(mesh, seed, n_random=3)
    results += check_schlafli(mesh, seed, n_random=3)
    return results
