import numpy as np
import pytest

from reggefem import (TorusGeometry, assign_clusters,
                      convergence_study, fourier_oracle, sigma_modes,
                      solve_pencil)
from reggefem.saint_venant import MassMatrix
from reggefem.spaces import deformation_matrix
from reggefem.spectrum import mode_symbol

TAU = 2.0 * np.pi


class TestOracle:
    def test_unit_torus_lowest_modes(self, geometry):
        sp = fourier_oracle(geometry, 1.5)
        assert sp.entries == ((-1.0, 12), (1.0, 6))
        assert sp.kernel

    def test_cutoff_below_first_mode(self, geometry):
        sp = fourier_oracle(geometry, 0.5)
        assert sp.entries == ()
        assert sp.kernel  # the kernel marker is still reported

    def test_anisotropic_torus(self):
        g = TorusGeometry(TAU, TAU / 2, TAU / 3)
        sp = fourier_oracle(g, 20.0)
        pos = [lam for lam, _ in sp.entries if lam > 0]
        assert abs(pos[0] - 1.0) < 1e-12
        assert abs(pos[1] - 4.0) < 1e-12

    def test_multiplicities_positive_even(self, geometry):
        sp = fourier_oracle(geometry, 6.5)
        for lam, mult in sp.entries:
            assert mult > 0 and mult % 2 == 0
        # sign pattern: -|k|^2 carries twice the weight of +|k|^2
        d = dict(sp.entries)
        for lam, mult in sp.entries:
            if lam > 0:
                assert d[-lam] == 2 * mult

    def test_bad_cutoff(self, geometry):
        with pytest.raises(ValueError):
            fourier_oracle(geometry, 0.0)

    def test_mode_symbol_matches_oracle_values(self, geometry):
        # every sigma mode's analytic Rayleigh quotient is an oracle value
        sp = fourier_oracle(geometry, 4.5)
        values = {lam for lam, _ in sp.entries}
        for k in ([1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 1, 1], [2, 0, 0]):
            sym = mode_symbol(np.array(k, float))
            for mat, lam in sigma_modes(np.array(k, float)):
                got = float(np.sum(sym(mat) * mat) / np.sum(mat * mat))
                assert abs(got - lam) < 1e-12
                assert any(abs(got - v) < 1e-12 for v in values)
                assert np.abs(sym(mat) - lam * mat).max() < 1e-12

    def test_sigma_modes_orthogonal(self):
        k = np.array([1.0, 2.0, -1.0])
        mats = [m for m, _ in sigma_modes(k)]
        for i in range(3):
            for j in range(i):
                assert abs(np.sum(mats[i] * mats[j])) < 1e-12
            assert np.abs(mats[i] @ k).max() < 1e-12


class TestPencil:
    def test_kernel_dimension(self, mesh2, mesh3, pencil2, pencil3):
        for mesh, (A, M) in ((mesh2, pencil2), (mesh3, pencil3)):
            res = solve_pencil(A, M)
            v = mesh.num_vertices
            assert res.eigenvalues.size == mesh.num_edges
            assert res.kernel_dim >= 3 * v - 3
            # measured value frozen as a regression: deformations plus the
            # six constant metrics
            assert res.kernel_dim == 3 * v + 3

    def test_kernel_never_below_deformation_rank(self, mesh2, pencil2):
        A, M = pencil2
        sv = np.linalg.svd(deformation_matrix(mesh2), compute_uv=False)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        assert solve_pencil(A, M).kernel_dim >= rank

    def test_residuals_small(self, pencil3):
        res = solve_pencil(*pencil3)
        assert res.max_residual <= 1e-8

    def test_threshold_stability(self, pencil2, pencil3):
        for A, M in (pencil2, pencil3):
            res = solve_pencil(A, M)
            w = res.eigenvalues
            counts = {int(np.sum(np.abs(w) < f * np.abs(w).max()))
                      for f in (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)}
            assert counts == {res.kernel_dim}

    def test_indefinite(self, pencil2):
        res = solve_pencil(*pencil2)
        nz = res.nonzero
        assert (nz > 0).any() and (nz < 0).any()

    def test_translation_relabeling_invariance(self, geometry, mesh2,
                                               pencil2):
        # permute edges by a unit-box translation; spectra must agree
        A, M = pencil2
        n = np.array(mesh2.grid)
        perm = np.empty(mesh2.num_edges, dtype=int)
        for e in range(mesh2.num_edges):
            moved = mesh2.edge_tail_lattice[e] + np.array([1, 0, 0])
            perm[e] = mesh2.vertex_id(moved) * 7 + mesh2.edge_dir[e]
        assert np.array_equal(np.sort(perm), np.arange(mesh2.num_edges))
        P = np.zeros((mesh2.num_edges, mesh2.num_edges))
        P[perm, np.arange(mesh2.num_edges)] = 1.0
        Ad, Md = A.toarray(), M.toarray()
        w1 = solve_pencil(A, M).eigenvalues
        import scipy.linalg as sla
        w2 = sla.eigh(P @ Ad @ P.T, P @ Md @ P.T, eigvals_only=True)
        assert np.abs(np.sort(w1) - np.sort(w2)).max() < 1e-10 * max(
            1.0, np.abs(w1).max())

    def test_non_spd_mass_rejected(self, pencil2):
        A, M = pencil2
        bad = MassMatrix(matrix=-M.matrix)
        with pytest.raises(np.linalg.LinAlgError, match="not SPD"):
            solve_pencil(A, bad)


class TestClusters:
    def test_grid4_cluster_structure(self, geometry, pencil4):
        res = solve_pencil(*pencil4)
        oracle = fourier_oracle(geometry, 4.5)
        clusters = assign_clusters(res, oracle, 2)
        by_target = {c.target: c for c in clusters}
        pos, neg = by_target[1.0], by_target[-1.0]
        assert pos.multiplicity == 6 and len(pos.eigenvalues) == 6
        assert neg.multiplicity == 12 and len(neg.eigenvalues) == 12
        assert np.all(pos.eigenvalues > 0) and np.all(neg.eigenvalues < 0)
        # tight physical clusters at this resolution
        assert np.ptp(pos.eigenvalues) < 0.05
        assert np.ptp(neg.eigenvalues) < 0.05
        assert pos.rel_error < 0.4 and neg.rel_error < 0.4

    def test_study_monotone_decay(self, geometry):
        study = convergence_study(geometry, [2, 3, 4], n_eigs=2)
        assert set(study["monotone"]) == {1.0, -1.0}
        assert all(study["monotone"].values())
        assert len(study["rows"]) == 6
        # frozen regression baseline of the cluster means
        expect = {
            (2, -1.0): -0.362083498811, (2, 1.0): 0.368549509935,
            (3, -1.0): -0.520703827126, (3, 1.0): 0.506279782243,
            (4, -1.0): -0.664815210820, (4, 1.0): 0.654546740619,
        }
        for row in study["rows"]:
            key = (row["grid"][0], row["target"])
            assert abs(row["cluster_mean"] - expect[key]) < 1e-6

    def test_study_single_grid(self, geometry):
        study = convergence_study(geometry, [2], n_eigs=2)
        assert study["monotone"] == {}
        assert len(study["rows"]) == 2

    def test_study_input_validation(self, geometry):
        with pytest.raises(ValueError, match="empty"):
            convergence_study(geometry, [])
        with pytest.raises(ValueError, match="increasing"):
            convergence_study(geometry, [3, 2])
