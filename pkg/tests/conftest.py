"""Shared helpers for the test suite: distances and seeded random problems."""

import numpy as np
import pytest

from spectral_bvp import Potential, Problem, RationalBC, project_zero_mean
from spectral_bvp.potential import PI, composite_boole


def potential_l2(s1, s2=None, n=4096):
    """L2 distance of two potentials (or the norm of one) by Boole quadrature."""
    x = np.linspace(0.0, PI, n + 1)
    v = s1.eval(x) - (s2.eval(x) if s2 is not None else 0.0)
    return float(np.sqrt(composite_boole(v**2, PI / n)))


def random_potential(rng, amp=0.3, n_cos=3, n_sin=2):
    return project_zero_mean(
        Potential.fourier(rng.uniform(-amp, amp, n_cos), rng.uniform(-amp, amp, n_sin))
    )


def random_bc(rng, ind):
    """Boundary coefficient of the requested index with tame pole data."""
    if ind == -1:
        return RationalBC.dirichlet()
    h = float(rng.uniform(-1.0, 1.0))
    if ind == 0:
        return RationalBC.constant(h)
    if ind == 1:
        return RationalBC.affine(float(rng.uniform(0.3, 1.5)), h)
    d, odd = divmod(ind, 2)
    locs = np.sort(rng.uniform(2.0, 14.0, size=d))
    while d > 1 and np.min(np.diff(locs)) < 2.0:
        locs = np.sort(rng.uniform(2.0, 14.0, size=d))
    poles = [(float(a), float(rng.uniform(0.5, 2.0))) for a in locs]
    return RationalBC.rational(float(rng.uniform(0.3, 1.5)) if odd else 0.0, h, poles)


def random_problem(rng, max_ind=3, allow_double_dirichlet=True):
    inds = rng.integers(-1, max_ind + 1, size=2)
    if not allow_double_dirichlet and inds[0] == -1 and inds[1] == -1:
        inds[1] = 0
    return Problem(random_potential(rng), random_bc(rng, int(inds[0])), random_bc(rng, int(inds[1])))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
