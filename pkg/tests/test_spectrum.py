"""Characteristic function, eigenvalues, norming constants, products."""

import numpy as np
import pytest

from spectral_bvp import (
    DomainError,
    Potential,
    Problem,
    RationalBC,
    SpectralData,
    ValidationError,
    asymptotic_residuals,
    beta,
    char_deriv,
    char_function,
    eigenvalues,
    hadamard_calibration,
    hadamard_product,
    norming_constant,
    oscillation_count,
    pole_count,
    precedes,
    smallest_pole,
    spectral_data,
)
from spectral_bvp.potential import PI
from conftest import random_potential, random_problem

S0 = Potential.zero()
D = RationalBC.dirichlet()
N0 = RationalBC.constant(0.0)


class TestCharFunction:
    def test_double_dirichlet_closed_form(self):
        p = Problem(S0, D, D)
        for lam in (2.0, 7.5, 0.3):
            want = -np.sin(PI * np.sqrt(lam)) / np.sqrt(lam)
            assert char_function(p, lam) == pytest.approx(want, abs=1e-11)
        assert abs(char_function(p, 4.0)) < 1e-11

    def test_double_neumann_closed_form(self):
        p = Problem(S0, N0, N0)
        for lam in (2.0, 5.5):
            want = np.sqrt(lam) * np.sin(PI * np.sqrt(lam))
            assert char_function(p, lam) == pytest.approx(want, abs=1e-10)
        assert abs(char_function(p, 1.0)) < 1e-10

    def test_mixed_closed_form(self):
        p = Problem(S0, D, N0)
        for lam in (1.0, 3.7):
            want = -np.cos(PI * np.sqrt(lam))
            assert char_function(p, lam) == pytest.approx(want, abs=1e-11)
        assert abs(char_function(p, 0.25)) < 1e-11


class TestEigenvalues:
    def test_double_dirichlet(self):
        got = eigenvalues(Problem(S0, D, D), 5)
        assert np.allclose(got, [1, 4, 9, 16, 25], rtol=1e-10)

    def test_double_neumann(self):
        got = eigenvalues(Problem(S0, N0, N0), 4)
        assert np.allclose(got, [0, 1, 4, 9], rtol=1e-10, atol=1e-9)

    def test_dirichlet_neumann(self):
        got = eigenvalues(Problem(S0, D, N0), 3)
        assert np.allclose(got, [0.25, 2.25, 6.25], rtol=1e-10)

    def test_count_cap(self):
        with pytest.raises(DomainError):
            eigenvalues(Problem(S0, D, D), 100)

    def test_low_ground_state_is_found(self):
        # large negative constants push the ground state far below zero
        p = Problem(S0, RationalBC.constant(-3.0), RationalBC.constant(3.0))
        lams = eigenvalues(p, 3)
        assert lams[0] < -5.0
        assert oscillation_count(p, lams[0]) == 0


class TestBetaAndNorming:
    def test_beta_alternates_for_symmetric_problem(self):
        p = Problem(S0, D, D)
        for n, lam in enumerate(eigenvalues(p, 4)):
            assert beta(p, lam) == pytest.approx((-1.0) ** n, rel=1e-9)

    def test_beta_endpoint_ratio(self):
        p = Problem(S0, N0, D)
        for lam in eigenvalues(p, 3):
            tr_phi = __import__("spectral_bvp").phi(p, lam)
            tr_psi = __import__("spectral_bvp").psi(p, lam)
            b = beta(p, lam)
            assert b == pytest.approx(tr_psi.y0 / tr_phi.y0, rel=1e-9)

    def test_beta_rejects_non_eigenvalue(self):
        with pytest.raises(DomainError):
            beta(Problem(S0, D, D), 2.0)

    def test_norming_double_dirichlet(self):
        p = Problem(S0, D, D)
        d = spectral_data(p, 6)
        want = PI / (2 * (np.arange(1, 7)) ** 2)
        assert np.max(np.abs(d.norming_constants / want - 1)) < 1e-10

    def test_norming_double_neumann(self):
        d = spectral_data(Problem(S0, N0, N0), 5)
        want = np.array([PI, PI / 2, PI / 2, PI / 2, PI / 2])
        assert np.max(np.abs(d.norming_constants / want - 1)) < 1e-10

    def test_norming_affine_left(self):
        # f = h0*lam with h0=1: boundary term f' * phi(0)^2 = 1 at every eigenvalue
        from spectral_bvp import phi
        from spectral_bvp.potential import composite_boole

        p = Problem(S0, RationalBC.affine(1.0, 0.0), D)
        lam = eigenvalues(p, 3)[1]
        tr = phi(p, lam)
        integral = composite_boole(tr.y**2, PI / (len(tr.grid) - 1))
        assert norming_constant(p, lam) == pytest.approx(integral + tr.y0**2, rel=1e-9)

    def test_derivative_identity(self, rng):
        for _ in range(3):
            p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
            d = spectral_data(p, 6)
            for n, lam in enumerate(d.eigenvalues):
                lhs = char_deriv(p, lam)
                rhs = beta(p, lam) * d.norming_constants[n]
                assert abs(lhs / rhs - 1) < 1e-6


class TestOscillation:
    def test_double_dirichlet(self):
        p = Problem(S0, D, D)
        assert oscillation_count(p, 9.0) == 2

    def test_double_neumann(self):
        p = Problem(S0, N0, N0)
        assert oscillation_count(p, 9.0) == 3

    def test_index_bookkeeping(self, rng):
        p = random_problem(rng, max_ind=3, allow_double_dirichlet=False)
        for n, lam in enumerate(eigenvalues(p, 10)):
            total = oscillation_count(p, lam) + pole_count(p.f, lam) + pole_count(p.F, lam)
            assert total == n


class TestSpectralDataType:
    def test_validation(self):
        with pytest.raises(ValidationError):
            SpectralData([1.0, 1.0], [1.0, 1.0], 0, 0)
        with pytest.raises(ValidationError):
            SpectralData([1.0, 2.0], [1.0, -1.0], 0, 0)
        with pytest.raises(ValidationError):
            SpectralData([1.0], [1.0], -2, 0)

    def test_json_round_trip(self):
        d = SpectralData([1.0, 4.0], [0.5, 0.25], -1, 0)
        back = SpectralData.from_json(d.to_json())
        assert np.allclose(back.eigenvalues, d.eigenvalues)
        assert back.ind_f == -1 and back.ind_F == 0


class TestHadamard:
    def test_cosine_product(self):
        eigs = (np.arange(0, 400) + 0.5) ** 2
        for lam in np.linspace(-5.0, 50.0, 23):
            got = hadamard_product(eigs, -0.5, lam, tail_count=10000)
            want = -np.cos(PI * np.sqrt(complex(lam))).real
            assert abs(got - want) < 1e-5 * max(1.0, abs(want))

    def test_sine_product(self):
        eigs = (np.arange(0, 400)) ** 2.0
        for lam in (3.3, 20.0, 41.5):
            got = hadamard_product(eigs, 0.0, lam, tail_count=10000)
            want = np.sqrt(lam) * np.sin(PI * np.sqrt(lam))
            assert abs(got - want) < 1e-5 * max(1.0, abs(want))

    def test_exact_zero_at_supplied_eigenvalue(self):
        eigs = (np.arange(0, 50) + 0.5) ** 2
        assert hadamard_product(eigs, -0.5, eigs[3]) == 0.0

    def test_calibration_constants(self):
        cal_dd = hadamard_calibration((np.arange(1, 301) ** 2).astype(float), -1.0)
        assert cal_dd["constant"] == pytest.approx(PI, abs=1e-9)
        assert cal_dd["spread"] < 1e-6
        cal_dn = hadamard_calibration((np.arange(0, 300) + 0.5) ** 2, -0.5)
        assert cal_dn["constant"] == pytest.approx(1.0, abs=1e-9)

    def test_eigenvalues_must_increase(self):
        with pytest.raises(ValidationError):
            hadamard_product(np.array([4.0, 1.0]), -1.0, 0.0)


class TestAsymptoticResiduals:
    def test_double_dirichlet_exact(self):
        d = spectral_data(Problem(S0, D, D), 8)
        a, b = asymptotic_residuals(d)
        assert np.nanmax(np.abs(a)) < 1e-9
        assert np.nanmax(np.abs(b)) < 1e-9

    def test_double_neumann_skips_zero_base(self):
        d = spectral_data(Problem(S0, N0, N0), 8)
        a, b = asymptotic_residuals(d)
        assert np.isnan(b[0])  # power base n - L vanishes at n = 0
        assert np.nanmax(np.abs(b[1:])) < 1e-9

    def test_partial_sums_settle_for_smooth_potential(self):
        s = __import__("spectral_bvp").project_zero_mean(Potential.fourier([0.0, 1.0], []))
        d = spectral_data(Problem(s, N0, N0), 30)
        a, _ = asymptotic_residuals(d)
        sq = np.nancumsum(a**2)
        assert sq[29] - sq[19] < 0.05 * sq[29]


class TestOrderingLemmas:
    def test_smallest_eigenvalue_monotonicity(self, rng):
        # growing the boundary functions can only lower the smallest eigenvalue
        for _ in range(4):
            s = random_potential(rng)
            h1, h2 = sorted(rng.uniform(-1.0, 1.0, 2))
            f_small, f_big = RationalBC.constant(h1), RationalBC.constant(h2)
            assert precedes(f_small, f_big)
            lam_small = eigenvalues(Problem(s, f_small, N0), 1)[0]
            lam_big = eigenvalues(Problem(s, f_big, N0), 1)[0]
            assert lam_small >= lam_big - 1e-10
            lam_dirichlet = eigenvalues(Problem(s, D, N0), 1)[0]
            assert lam_dirichlet >= lam_big - 1e-10

    def test_ground_state_below_poles(self, rng):
        for _ in range(4):
            p = random_problem(rng, max_ind=3, allow_double_dirichlet=False)
            lam0 = eigenvalues(p, 1)[0]
            assert lam0 < min(smallest_pole(p.f), smallest_pole(p.F))

    def test_dirichlet_interlacing(self, rng):
        # eigenvalues with a Dirichlet right end separate those of any other F
        s = random_potential(rng)
        f = RationalBC.constant(0.3)
        lam_d = eigenvalues(Problem(s, f, D), 6)
        lam_c = eigenvalues(Problem(s, f, RationalBC.constant(-0.4)), 6)
        for k in range(5):
            assert lam_c[k] < lam_d[k] < lam_c[k + 1]

    def test_simple_zeros(self, rng):
        p = random_problem(rng, max_ind=2, allow_double_dirichlet=False)
        lams = eigenvalues(p, 8)
        gaps = np.diff(lams)
        local = np.minimum(np.concatenate([[gaps[0]], gaps]), np.concatenate([gaps, [gaps[-1]]]))
        for lam, g in zip(lams, local):
            assert abs(char_deriv(p, lam)) * g > 1e-8 * abs(char_function(p, lam + 0.5 * g))
