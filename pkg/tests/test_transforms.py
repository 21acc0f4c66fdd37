"""Forward/inverse transformations, spectral maps, chains."""

import numpy as np
import pytest

from spectral_bvp import (
    ChainReduction,
    DomainError,
    Potential,
    Problem,
    RationalBC,
    SpectralData,
    eigenvalues,
    gamma0_from_hat,
    kappa,
    norming_constant,
    pole_count,
    oscillation_count,
    project_zero_mean,
    reduce_chain,
    spectral_data,
    spectral_map_forward,
    spectral_map_inverse,
    t_hat,
    t_tilde,
)
from spectral_bvp.potential import PI
from spectral_bvp.transforms import TRANSFORM_CELLS, transformed_eigenfunction
from spectral_bvp.spectrum import _interior_sign_changes
from conftest import potential_l2, random_potential, random_problem

S0 = Potential.zero()
D = RationalBC.dirichlet()
N0 = RationalBC.constant(0.0)


def tight_pair(p):
    lam0 = float(eigenvalues(p, 1, n_cells=TRANSFORM_CELLS)[0])
    return lam0, norming_constant(p, lam0, TRANSFORM_CELLS)


class TestForward:
    def test_double_neumann_becomes_double_dirichlet(self):
        p = Problem(S0, N0, N0)
        q, rec = t_hat(p)
        assert q.f.is_dirichlet and q.F.is_dirichlet
        assert rec.Lambda == pytest.approx(0.0, abs=1e-9)
        assert (rec.I, rec.J) == (1, 1)
        assert potential_l2(q.s) < 1e-9

    def test_dirichlet_left_gets_shifted_parameter(self):
        p = Problem(S0, D, N0)
        q, rec = t_hat(p)
        assert rec.Lambda == pytest.approx(0.25 - 2.0, abs=1e-9)
        assert (rec.I, rec.J) == (-1, 0)
        assert q.f.d == 0 and not q.f.is_dirichlet  # Dirichlet side turns constant
        assert q.F.is_dirichlet

    def test_index_bookkeeping_random(self, rng):
        for _ in range(4):
            p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
            q, rec = t_hat(p)
            assert q.ind_f == p.ind_f - rec.I
            assert q.ind_F == p.ind_F - (2 * rec.J - rec.I)

    def test_double_dirichlet_rejected(self):
        with pytest.raises(DomainError):
            t_hat(Problem(S0, D, D))


class TestSpectralMaps:
    def test_neumann_to_dirichlet_data(self):
        p = Problem(S0, N0, N0)
        data = spectral_data(p, 8)
        q, rec = t_hat(p)
        mapped = spectral_map_forward(data, rec)
        want_l = (np.arange(1, 8)) ** 2
        want_g = PI / (2 * np.arange(1, 8) ** 2)
        assert np.max(np.abs(mapped.eigenvalues - want_l)) < 1e-8
        assert np.max(np.abs(mapped.norming_constants / want_g - 1)) < 1e-8
        assert (mapped.ind_f, mapped.ind_F) == (-1, -1)

    def test_dirichlet_side_doubles_first_norming_constant(self):
        p = Problem(S0, D, N0)
        data = spectral_data(p, 5)
        q, rec = t_hat(p)
        mapped = spectral_map_forward(data, rec)
        factor = data.eigenvalues[0] - rec.Lambda  # equals 2 by construction
        assert factor == pytest.approx(2.0, abs=1e-9)
        assert mapped.norming_constants[0] == pytest.approx(2 * data.norming_constants[0], rel=1e-9)

    def test_forward_inverse_compose_to_identity(self, rng):
        p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
        data = spectral_data(p, 7)
        q, rec = t_hat(p)
        mapped = spectral_map_forward(data, rec)
        back = spectral_map_inverse(mapped, float(data.eigenvalues[0]),
                                    float(data.norming_constants[0]), rec)
        keep = len(back)
        assert np.allclose(back.eigenvalues, data.eigenvalues[:keep])
        assert np.allclose(back.norming_constants, data.norming_constants[:keep])
        assert (back.ind_f, back.ind_F) == (p.ind_f, p.ind_F)

    def test_mapped_data_matches_direct_solve(self, rng):
        p = random_problem(rng, max_ind=1, allow_double_dirichlet=False)
        data = spectral_data(p, 8, n_cells=TRANSFORM_CELLS)
        q, rec = t_hat(p)
        mapped = spectral_map_forward(data, rec)
        direct = spectral_data(q, len(mapped), n_cells=TRANSFORM_CELLS)
        assert np.max(np.abs(mapped.eigenvalues - direct.eigenvalues)
                      / np.maximum(1.0, np.abs(direct.eigenvalues))) < 1e-6
        assert np.max(np.abs(mapped.norming_constants / direct.norming_constants - 1)) < 1e-6


class TestKappa:
    def test_hyperbolic_closed_forms(self):
        # free equation at mu = -1: C = cosh x, S = sinh x
        assert kappa(Problem(S0, N0, D), -1.0) == pytest.approx(np.cosh(PI) / np.sinh(PI), rel=1e-10)
        assert kappa(Problem(S0, N0, N0), -1.0) == pytest.approx(np.tanh(PI), rel=1e-10)

    def test_exceeds_left_coefficient(self, rng):
        for _ in range(3):
            p = random_problem(rng, max_ind=1, allow_double_dirichlet=False)
            lam0 = float(eigenvalues(p, 1)[0])
            mu = lam0 - 1.3
            k = kappa(p, mu)
            if not p.f.is_dirichlet:
                assert k > p.f.eval(mu)

    def test_denominator_guard(self):
        # mu at an eigenvalue of the Dirichlet-left problem blows the ratio up
        lam_dirichlet_left = float(eigenvalues(Problem(S0, D, N0), 1)[0])
        with pytest.raises(DomainError):
            kappa(Problem(S0, N0, N0), lam_dirichlet_left)


class TestInverseTransform:
    def test_round_trip_constant_conditions(self):
        s = project_zero_mean(Potential.fourier([0.0, 0.3], []))
        p = Problem(s, RationalBC.constant(1.0), RationalBC.constant(-1.0))
        lam0, gam0 = tight_pair(p)
        q, _ = t_hat(p, lam0=lam0)
        back = t_tilde(lam0, gam0, q)
        assert potential_l2(back.s, p.s) < 1e-6
        assert abs(back.f.h - 1.0) < 1e-8 and abs(back.F.h + 1.0) < 1e-8

    def test_tilde_gains_prescribed_eigenvalue(self):
        p = Problem(S0, D, D)
        out = t_tilde(0.5, 1.0, p)
        assert (out.ind_f, out.ind_F) == (0, 0)
        lams = eigenvalues(out, 3, n_cells=TRANSFORM_CELLS)
        assert lams[0] == pytest.approx(0.5, abs=1e-7)
        assert np.allclose(lams[1:], [1.0, 4.0], atol=1e-7)
        assert norming_constant(out, lams[0], TRANSFORM_CELLS) == pytest.approx(1.0, abs=1e-6)

    def test_class2_preserves_spectrum(self):
        p = Problem(S0, N0, D)
        lam0, gam0 = tight_pair(p)
        out = t_tilde(lam0, gam0 / 2, p)
        assert out.f.is_dirichlet and out.ind_F == 0
        lams = eigenvalues(out, 3, n_cells=TRANSFORM_CELLS)
        assert np.allclose(lams, eigenvalues(p, 3), atol=1e-7)

    def test_class3_preserves_spectrum(self):
        p = Problem(S0, D, N0)
        lam0, gam0 = tight_pair(p)
        out = t_tilde(lam0, 2 * gam0, p)
        assert out.F.is_dirichlet and out.ind_f == 0
        lams = eigenvalues(out, 3, n_cells=TRANSFORM_CELLS)
        assert np.allclose(lams, eigenvalues(p, 3), atol=1e-7)

    def test_membership_errors(self):
        p = Problem(S0, N0, N0)
        lam0, gam0 = tight_pair(p)
        with pytest.raises(DomainError):
            t_tilde(lam0 + 1.0, 1.0, p)  # mu above the smallest eigenvalue
        with pytest.raises(DomainError):
            t_tilde(lam0 - 1.0, -2.0, p)  # class 1 needs positive nu
        with pytest.raises(DomainError):
            t_tilde(lam0, gam0, p)  # at the eigenvalue nu must be gamma/2 or 2*gamma

    def test_hat_of_tilde_is_identity(self, rng):
        s = random_potential(rng)
        p = Problem(s, RationalBC.affine(0.8, 0.2), RationalBC.constant(-0.3))
        lam0 = float(eigenvalues(p, 1, n_cells=TRANSFORM_CELLS)[0])
        out = t_tilde(lam0 - 2.5, 0.7, p)
        back, _ = t_hat(out)
        assert potential_l2(back.s, p.s) < 1e-6
        assert abs(back.f.h0 - 0.8) < 1e-8 and abs(back.f.h - 0.2) < 1e-8
        assert abs(back.F.h + 0.3) < 1e-8


class TestGamma0:
    def test_neumann_value(self):
        p = Problem(S0, N0, N0)
        lam0, gam0 = tight_pair(p)
        q, rec = t_hat(p, lam0=lam0)
        v0, v_pi, qd0, qd_pi = rec.v_endpoints
        rho = -qd0 / v0 + (2.0 / PI) * np.log(v_pi / v0)
        assert gamma0_from_hat(q, lam0, rho) == pytest.approx(PI, rel=1e-8)
        assert gam0 == pytest.approx(PI, rel=1e-10)

    def test_matches_direct_first_norming_constant(self, rng):
        s = random_potential(rng)
        p = Problem(s, RationalBC.affine(1.0, 0.1), RationalBC.affine(0.7, -0.2))
        lam0, gam0 = tight_pair(p)
        q, rec = t_hat(p, lam0=lam0)
        v0, v_pi, qd0, qd_pi = rec.v_endpoints
        rho = -qd0 / v0 + (2.0 / PI) * np.log(v_pi / v0)
        assert gamma0_from_hat(q, lam0, rho) == pytest.approx(gam0, rel=1e-6)

    def test_degenerate_rho_rejected(self):
        p = Problem(S0, N0, N0)
        lam0, _ = tight_pair(p)
        q, _ = t_hat(p, lam0=lam0)
        k = kappa(q, lam0)
        with pytest.raises(DomainError):
            gamma0_from_hat(q, lam0, k)


class TestChain:
    def test_trivial_chain(self):
        p = Problem(S0, N0, N0)
        ch = reduce_chain(p)
        assert len(ch.problems) == 1 and not ch.records

    def test_single_step_structure(self):
        p = Problem(S0, RationalBC.affine(1.0, 0.0), N0)
        ch = reduce_chain(p)
        assert len(ch.records) == 1
        last = ch.problems[-1]
        assert last.ind_f <= 0 and last.ind_F <= 0
        assert len(ch.removed_pairs) == 1

    def test_eigenvalue_bookkeeping(self):
        f = RationalBC.rational(0.0, 0.3, [(6.0, 1.0)])
        p = Problem(S0, f, N0)  # indices (2, 0): two steps, J' = sum of J
        ch = reduce_chain(p)
        j_total = sum(rec.J for rec in ch.records)
        lams_orig = eigenvalues(p, 6, n_cells=TRANSFORM_CELLS)
        lams_final = eigenvalues(ch.problems[-1], 6 - j_total, n_cells=TRANSFORM_CELLS)
        assert np.max(np.abs(lams_orig[j_total:] - lams_final) /
                      np.maximum(1.0, np.abs(lams_final))) < 1e-6

    def test_every_chain_potential_is_zero_mean(self, rng):
        p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
        ch = reduce_chain(p)
        for q in ch.problems:
            assert abs(q.s.mean) < 1e-10

    def test_invariant_validation(self):
        p = Problem(S0, RationalBC.affine(1.0, 0.0), N0)
        with pytest.raises(Exception):
            ChainReduction((p,), (), ())  # final indices not both <= 0


class TestOscillationBookkeeping:
    def test_zero_counts_across_one_step(self, rng):
        # eigenfunction zero counts drop by J + pole-count difference
        p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
        q, rec = t_hat(p)
        lams = eigenvalues(p, 6, n_cells=TRANSFORM_CELLS)
        for n in range(rec.J, 6):
            lam = lams[n]
            zeros_orig = oscillation_count(p, lam, n_cells=TRANSFORM_CELLS)
            zeros_hat = oscillation_count(q, lam, n_cells=TRANSFORM_CELLS)
            expected = (zeros_hat + rec.J
                        + pole_count(q.f, lam) + pole_count(q.F, lam)
                        - pole_count(p.f, lam) - pole_count(p.F, lam))
            assert zeros_orig == expected

    def test_quotient_formula_matches_hat_eigenfunction(self):
        p = Problem(S0, RationalBC.constant(0.4), RationalBC.constant(-0.2))
        lams = eigenvalues(p, 4, n_cells=TRANSFORM_CELLS)
        q, rec = t_hat(p)
        from spectral_bvp import phi

        for n in (1, 2, 3):
            quot = transformed_eigenfunction(p, float(lams[n]), rec.Lambda)
            direct = phi(q, float(lams[n]), TRANSFORM_CELLS)
            i = np.argmax(np.abs(direct.y))
            ratio = quot.y[i] / direct.y[i]
            assert np.max(np.abs(quot.y - ratio * direct.y)) < 1e-6 * np.max(np.abs(quot.y))
            changes_q, _ = _interior_sign_changes(quot)
            changes_d, _ = _interior_sign_changes(direct)
            assert changes_q == changes_d
