"""Boundary-coefficient algebra: exact values, transform laws, sweeps."""

import numpy as np
import pytest
import sympy

from spectral_bvp import (
    BRANCH_EQUAL,
    BRANCH_GREATER,
    DomainError,
    RationalBC,
    ValidationError,
    index,
    pole_count,
    precedes,
    shift,
    smallest_pole,
    theta,
    up_down,
)
from spectral_bvp.hn_algebra import theta_up_down

D = RationalBC.dirichlet()


def random_rational(rng, allow_h0=True, max_d=3):
    d = int(rng.integers(0, max_d + 1))
    locs = np.sort(rng.uniform(1.0, 15.0, size=d))
    while d > 1 and np.min(np.diff(locs)) < 0.8:
        locs = np.sort(rng.uniform(1.0, 15.0, size=d))
    h0 = float(rng.uniform(0.2, 1.5)) if (allow_h0 and rng.uniform() < 0.5) else 0.0
    return RationalBC.rational(
        h0, float(rng.uniform(-2.0, 2.0)),
        [(float(a), float(rng.uniform(0.3, 2.0))) for a in locs],
    )


class TestIndex:
    def test_dirichlet(self):
        assert index(D) == -1

    def test_affine(self):
        assert index(RationalBC.affine(1.0, 0.0)) == 1

    def test_single_pole_without_slope(self):
        assert index(RationalBC.rational(0.0, 0.0, [(1.0, 1.0)])) == 2


class TestUpDown:
    def test_dirichlet_convention(self):
        up, down = up_down(D)
        assert up.coef.tolist() == [-1.0]
        assert down.coef.tolist() == [0.0]

    def test_constant(self):
        up, down = up_down(RationalBC.constant(2.5))
        assert up.coef.tolist() == [2.5]
        assert down.coef.tolist() == [1.0]

    def test_single_pole_symbolic(self):
        # oracle: expand h0' * prod(h_k - lam) and f * f_down with sympy
        lam = sympy.symbols("lam")
        f_expr = 1 / (1 - lam)
        down_expr = sympy.expand(1 - lam)
        up_expr = sympy.expand(sympy.simplify(f_expr * down_expr))
        up, down = up_down(RationalBC.rational(0.0, 0.0, [(1.0, 1.0)]))
        assert np.allclose(up.coef, [float(up_expr)])
        assert np.allclose(down.coef, [float(down_expr.coeff(lam, 0)), float(down_expr.coeff(lam, 1))])

    def test_consistency_at_random_points(self, rng):
        for _ in range(20):
            f = random_rational(rng)
            up, down = up_down(f)
            lams = rng.uniform(-30.0, 30.0, size=40)
            locs = f.pole_locations
            if len(locs):
                lams = lams[np.min(np.abs(lams[:, None] - locs[None, :]), axis=1) > 0.2]
            resid = up(lams) - f.eval(lams) * down(lams)
            scale = np.maximum(1.0, np.abs(up(lams)))
            assert np.max(np.abs(resid) / scale) < 1e-10


class TestEval:
    def test_affine(self):
        assert RationalBC.affine(1.0, 0.0).eval(2.0) == pytest.approx(2.0)

    def test_single_pole(self):
        f = RationalBC.rational(0.0, 0.0, [(1.0, 1.0)])
        assert f.eval(0.0) == pytest.approx(1.0)

    def test_derivative_hand_oracle(self):
        # d/dlam of delta/(h - lam) is delta/(h - lam)^2: at 0 with h=1, delta=1 -> 1
        f = RationalBC.rational(0.0, 0.0, [(1.0, 1.0)])
        assert f.eval_deriv(0.0) == pytest.approx(1.0)

    def test_dirichlet_rejected(self):
        with pytest.raises(DomainError):
            D.eval(0.0)
        with pytest.raises(DomainError):
            D.eval_deriv(0.0)

    def test_derivative_positive_sweep(self, rng):
        # strict monotonicity holds for every nonconstant coefficient
        total = 0
        while total < 10_000:
            f = random_rational(rng)
            if index(f) == 0:
                continue
            lams = rng.uniform(-50.0, 50.0, size=500)
            locs = f.pole_locations
            if len(locs):
                lams = lams[np.min(np.abs(lams[:, None] - locs[None, :]), axis=1) > 1e-3]
            assert np.all(f.eval_deriv(lams) > 0.0)
            total += len(lams)


class TestSmallestPoleAndCount:
    def test_smallest_pole(self):
        assert smallest_pole(D) == np.inf
        assert smallest_pole(RationalBC.affine(1.0, 0.0)) == np.inf
        assert smallest_pole(RationalBC.rational(0.0, 0.0, [(3.0, 2.0), (5.0, 1.0)])) == 3.0

    def test_pole_count(self):
        g = RationalBC.rational(0.0, 0.0, [(1.0, 1.0), (4.0, 1.0)])
        assert pole_count(D, 100.0) == 0
        assert pole_count(g, 2.0) == 1
        assert pole_count(g, 4.0) == 2  # inclusive at the pole itself


class TestPrecedes:
    def test_dirichlet_precedes_everything(self):
        assert precedes(D, RationalBC.constant(-5.0))
        assert precedes(D, D)

    def test_constants(self):
        assert precedes(RationalBC.constant(0.0), RationalBC.constant(1.0))
        assert not precedes(RationalBC.constant(1.0), RationalBC.constant(0.0))

    def test_slope_beats_constant_at_minus_infinity(self):
        assert not precedes(RationalBC.affine(1.0, 0.0), RationalBC.constant(0.0))

    def test_nothing_precedes_dirichlet(self):
        assert not precedes(RationalBC.constant(0.0), D)


class TestShift:
    def test_basic(self):
        assert shift(RationalBC.constant(0.0), 1.0).h == pytest.approx(1.0)

    def test_preserves_other_fields(self):
        f = RationalBC.rational(1.0, 2.0, [(3.0, 1.0)])
        g = shift(f, -2.0)
        assert g.h0 == f.h0 and g.poles == f.poles and g.h == pytest.approx(0.0)

    def test_round_trip_identity(self):
        f = RationalBC.rational(0.5, -1.0, [(2.0, 0.7)])
        assert shift(shift(f, 0.3), -0.3) == f

    def test_dirichlet_rejected(self):
        with pytest.raises(DomainError):
            shift(D, 1.0)


class TestTheta:
    def test_dirichlet_maps_to_constant(self):
        out = theta(0.0, 0.0, 5.0, D)
        assert out == RationalBC.constant(5.0)

    def test_affine_drops_to_constant(self):
        # (0 - lam)/(lam - 0) + 1 simplifies to the constant 0
        f = RationalBC.affine(1.0, 0.0)
        out = theta(0.0, f.eval(0.0), 1.0, f)
        assert index(out) == 0
        assert out.h == pytest.approx(0.0, abs=1e-14)

    def test_pole_drops_to_affine(self):
        # symbolic oracle: (-lam)/(1/(1-lam) - 1) simplifies to lam - 1
        lam = sympy.symbols("lam")
        expr = sympy.simplify((0 - lam) / (1 / (1 - lam) - 1) + 0)
        assert sympy.expand(expr) == lam - 1
        f = RationalBC.rational(0.0, 0.0, [(1.0, 1.0)])
        out = theta(0.0, f.eval(0.0), 0.0, f)
        assert index(out) == 1
        assert out.h0 == pytest.approx(1.0, abs=1e-12)
        assert out.h == pytest.approx(-1.0, abs=1e-12)

    def test_constant_raises_to_affine(self):
        # (-lam)/(0 - 1) = lam
        out = theta(0.0, 1.0, 0.0, RationalBC.constant(0.0))
        assert index(out) == 1
        assert out.h0 == pytest.approx(1.0) and out.h == pytest.approx(0.0)

    def test_constant_equal_tau_gives_dirichlet(self):
        assert theta(0.0, 0.5, 1.0, RationalBC.constant(0.5)).is_dirichlet

    def test_domain_violations(self):
        f = RationalBC.rational(0.0, 0.0, [(1.0, 1.0)])
        with pytest.raises(DomainError):
            theta(2.0, 5.0, 0.0, f)  # mu beyond the smallest pole
        with pytest.raises(DomainError):
            theta(0.0, f.eval(0.0) - 1.0, 0.0, f)  # tau below f(mu)

    def test_involution_sweep(self, rng):
        for _ in range(200):
            f = random_rational(rng)
            top = smallest_pole(f)
            mu = float(rng.uniform(-4.0, min(top, 6.0) - 1.0))
            rho = float(rng.uniform(-2.0, 2.0))
            greater = rng.uniform() < 0.5
            tau = f.eval(mu) + (float(rng.uniform(0.2, 2.0)) if greater else 0.0)
            branch = BRANCH_GREATER if greater else BRANCH_EQUAL
            fh = theta(mu, tau, rho, f, branch=branch)
            fb = theta(mu, rho, tau, fh)
            assert abs(fb.h0 - f.h0) < 1e-12 * (1 + abs(f.h0))
            assert abs(fb.h - f.h) < 1e-12 * (1 + abs(f.h))
            if f.poles:
                assert np.max(np.abs(np.array(fb.poles) - np.array(f.poles))) < 1e-10

    def test_index_shift_sweep(self, rng):
        for _ in range(100):
            f = random_rational(rng)
            mu = float(rng.uniform(-4.0, min(smallest_pole(f), 6.0) - 1.0))
            rho = float(rng.uniform(-2.0, 2.0))
            if rng.uniform() < 0.5 and index(f) > 0:
                fh = theta(mu, f.eval(mu), rho, f, branch=BRANCH_EQUAL)
                assert index(fh) == index(f) - 1
            else:
                tau = f.eval(mu) + float(rng.uniform(0.2, 2.0))
                fh = theta(mu, tau, rho, f, branch=BRANCH_GREATER)
                assert index(fh) == index(f) + 1

    def test_pole_interlacing_and_smallest_pole(self, rng):
        for _ in range(100):
            f = random_rational(rng, max_d=4)
            if f.d < 2:
                continue
            mu = float(rng.uniform(-4.0, smallest_pole(f) - 1.0))
            rho = 0.0
            greater = rng.uniform() < 0.5
            tau = f.eval(mu) + (1.0 if greater else 0.0)
            fh = theta(mu, tau, rho, f, branch=BRANCH_GREATER if greater else BRANCH_EQUAL)
            if fh.d == 0:
                continue
            merged = np.sort(np.concatenate([f.pole_locations, fh.pole_locations]))
            who = np.argsort(np.concatenate([f.pole_locations, fh.pole_locations]))
            sides = who < f.d
            assert np.all(sides[:-1] != sides[1:]), "pole sets must interlace"
            if greater:
                assert smallest_pole(fh) < smallest_pole(f)
            else:
                assert smallest_pole(fh) > smallest_pole(f)

    def test_value_at_mu_bounded_by_rho(self, rng):
        for _ in range(60):
            f = random_rational(rng)
            mu = float(rng.uniform(-4.0, min(smallest_pole(f), 6.0) - 1.0))
            rho = float(rng.uniform(-2.0, 2.0))
            greater = rng.uniform() < 0.5
            if not greater and index(f) == 0:
                continue  # constant equal branch produces the Dirichlet marker
            tau = f.eval(mu) + (0.7 if greater else 0.0)
            fh = theta(mu, tau, rho, f, branch=BRANCH_GREATER if greater else BRANCH_EQUAL)
            val = fh.eval(mu)
            if greater:
                assert val == pytest.approx(rho, abs=1e-9)
            else:
                assert val < rho - 1e-12

    def test_polynomial_identities_cross_check(self, rng):
        for _ in range(60):
            f = random_rational(rng)
            mu = float(rng.uniform(-4.0, min(smallest_pole(f), 6.0) - 1.0))
            rho = float(rng.uniform(-2.0, 2.0))
            greater = rng.uniform() < 0.5
            if not greater and index(f) == 0:
                continue
            tau = f.eval(mu) + (1.3 if greater else 0.0)
            branch = BRANCH_GREATER if greater else BRANCH_EQUAL
            fh = theta(mu, tau, rho, f, branch=branch)
            up, down = theta_up_down(mu, tau, rho, f, branch)
            lams = rng.uniform(-20.0, 20.0, size=30)
            if fh.d:
                lams = lams[np.min(np.abs(lams[:, None] - fh.pole_locations[None, :]), axis=1) > 0.3]
            got = up(lams) / down(lams)
            want = fh.eval(lams)
            assert np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))) < 1e-8


class TestValidationAndJson:
    def test_invariants_enforced(self):
        with pytest.raises(ValidationError):
            RationalBC.rational(-1.0, 0.0, [])
        with pytest.raises(ValidationError):
            RationalBC.rational(0.0, 0.0, [(1.0, -1.0)])
        with pytest.raises(ValidationError):
            RationalBC.rational(0.0, 0.0, [(2.0, 1.0), (1.0, 1.0)])

    def test_json_round_trip(self):
        for f in (D, RationalBC.constant(1.5), RationalBC.rational(0.5, -1.0, [(2.0, 0.3)])):
            assert RationalBC.from_json(f.to_json()) == f

    def test_json_rejects_garbage(self):
        with pytest.raises(ValidationError):
            RationalBC.from_json({"type": "imaginary"})
        with pytest.raises(ValidationError):
            RationalBC.from_json({"type": "rational", "h0": 1.0})
