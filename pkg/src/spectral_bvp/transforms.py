"""Darboux-type transformations between boundary value problems.

`t_hat` lowers the index of each non-Dirichlet boundary coefficient by one
(raising Dirichlet sides to constants) by dividing out a zero-free solution
at a shifted copy of the smallest eigenvalue; `t_tilde` undoes it, given the
removed eigenvalue/norming-constant pair (or the bookkeeping data for the
half-Dirichlet cases).  Chaining `t_hat` reduces any problem to constant or
Dirichlet boundary conditions, which is how both the asymptotic analysis and
the inverse reconstruction walk between index levels.

All potentials produced here are piecewise linear on the transform grid;
`TRANSFORM_CELLS` is chosen so that the interpolation error stays well below
the round-trip tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError, ValidationError
from .hn_algebra import (
    BRANCH_EQUAL,
    BRANCH_GREATER,
    RationalBC,
    index,
    smallest_pole,
    theta,
    up_down,
)
from .potential import PI, Potential, SolutionTrace, darboux_potential
from .quasi_ode import phi, psi, solution_C, solution_S
from .spectrum import Problem, SpectralData, eigenvalues, norming_constant

__all__ = [
    "TRANSFORM_CELLS",
    "TransformRecord",
    "ChainReduction",
    "t_hat",
    "t_tilde",
    "spectral_map_forward",
    "spectral_map_inverse",
    "kappa",
    "gamma0_from_hat",
    "reduce_chain",
]

#: Grid used inside transformations; finer than the default so that the
#: piecewise-linear carrier of transformed potentials does not limit the
#: round-trip accuracy.
TRANSFORM_CELLS = 16384

#: Relative tolerance for deciding membership in the boundary cases of the
#: inverse transform (mu = smallest eigenvalue, nu = gamma/2 or 2*gamma).
MEMBERSHIP_RTOL = 1e-8


@dataclass(frozen=True)
class TransformRecord:
    """Bookkeeping of one transformation step.

    `Lambda` is the spectral shift parameter, `I` the index drop of the left
    coefficient (+1, or -1 across a Dirichlet side), `J` is 1 exactly when
    the step removes (forward) or inserts (inverse) the lowest spectral pair,
    and `v_endpoints` stores (v(0), v(pi), v1(0), v1(pi)) of the factor
    solution.
    """

    Lambda: float
    I: int
    J: int
    v_endpoints: tuple
    direction: str = "forward"

    def __post_init__(self):
        if self.I not in (-1, 1):
            raise ValidationError(f"I must be +-1, got {self.I}")
        if self.J not in (0, 1):
            raise ValidationError(f"J must be 0 or 1, got {self.J}")
        if self.direction not in ("forward", "inverse"):
            raise ValidationError(f"unknown direction {self.direction!r}")

    def to_json(self) -> dict:
        v0, v_pi, qd0, qd_pi = self.v_endpoints
        return {
            "Lambda": self.Lambda,
            "I": self.I,
            "J": self.J,
            "v_endpoints": {"y0": v0, "y_pi": v_pi, "qd0": qd0, "qd_pi": qd_pi},
            "direction": self.direction,
        }


@dataclass(frozen=True, eq=False)
class ChainReduction:
    """Full reduction of a problem to constant/Dirichlet boundary conditions."""

    problems: tuple
    records: tuple
    removed_pairs: tuple

    def __post_init__(self):
        if len(self.problems) != len(self.records) + 1:
            raise ValidationError("a chain holds one more problem than records")
        last = self.problems[-1]
        if last.ind_f > 0 or last.ind_F > 0:
            raise ValidationError("chain did not reach constant boundary conditions")

    def to_json(self) -> dict:
        return {
            "problems": [p.to_json() for p in self.problems],
            "records": [r.to_json() for r in self.records],
            "removed_pairs": [[mu, nu] for mu, nu in self.removed_pairs],
        }


def _log_ratio(v: SolutionTrace) -> float:
    if v.y0 * v.y_pi <= 0.0:
        raise SingularityError("factor solution vanishes at an endpoint")
    return float(np.log(v.y_pi / v.y0))


def _check_positive(v: SolutionTrace, context: str) -> None:
    y = v.y
    if np.any(y == 0.0) or np.any(y[:-1] * y[1:] < 0.0):
        raise SingularityError(
            f"{context}: factor solution crosses zero, upstream eigenvalue "
            "or classification data must be wrong"
        )


def t_hat(p: Problem, n_cells: int = TRANSFORM_CELLS, lam0: float | None = None):
    """Forward transformation; returns the new problem and its record.

    Defined for every problem except the doubly Dirichlet one.  The factor
    solution is the left solution at the smallest eigenvalue (shifted down by
    two across a Dirichlet side); both boundary coefficients pass through the
    index-shifting transform with the branch fixed by construction.
    """
    ind_f, ind_F = p.ind_f, p.ind_F
    if ind_f + ind_F < -1:
        raise DomainError("the doubly Dirichlet problem is outside the forward transform domain")
    if lam0 is None:
        lam0 = float(eigenvalues(p, 1, n_cells=n_cells)[0])
    both = not p.f.is_dirichlet and not p.F.is_dirichlet
    Lam = lam0 if both else lam0 - 2.0
    v = phi(p, Lam, n_cells) if not p.f.is_dirichlet else psi(p, Lam, n_cells)
    _check_positive(v, "forward transform")
    lr = _log_ratio(v)

    s_hat = darboux_potential(p.s, v)
    tau_f = -v.qd0 / v.y0
    f_hat = theta(Lam, tau_f, tau_f + (2.0 / PI) * lr, p.f,
                  branch=None if p.f.is_dirichlet else BRANCH_EQUAL)
    tau_F = v.qd_pi / v.y_pi
    F_hat = theta(Lam, tau_F, tau_F - (2.0 / PI) * lr, p.F,
                  branch=None if p.F.is_dirichlet else BRANCH_EQUAL)

    I = 1 if ind_f >= 0 else -1
    J = 1 if both else 0
    if index(f_hat) != ind_f - I or index(F_hat) != ind_F - (2 * J - I):
        raise SingularityError(
            f"transformed indices ({index(f_hat)}, {index(F_hat)}) disagree with "
            f"the bookkeeping ({ind_f - I}, {ind_F - 2 * J + I})"
        )
    rec = TransformRecord(Lam, I, J, (v.y0, v.y_pi, v.qd0, v.qd_pi), "forward")
    return Problem(s_hat, f_hat, F_hat), rec


def spectral_map_forward(data: SpectralData, rec: TransformRecord) -> SpectralData:
    """Spectral data of the transformed problem: drop J pairs, scale by (lam-Lambda)^I."""
    if rec.direction != "forward":
        raise DomainError("record does not describe a forward step")
    lams = data.eigenvalues[rec.J:]
    if np.any(np.abs(lams - rec.Lambda) <= 0.0):
        raise DomainError("an eigenvalue coincides with the shift parameter")
    gammas = data.norming_constants[rec.J:] / (lams - rec.Lambda) ** rec.I
    return SpectralData(lams, gammas, data.ind_f - rec.I, data.ind_F - (2 * rec.J - rec.I))


def spectral_map_inverse(data: SpectralData, mu: float, nu: float, rec: TransformRecord) -> SpectralData:
    """Spectral data across the inverse step; prepends (mu, nu) when J = 1."""
    lams = data.eigenvalues
    gammas = data.norming_constants * (lams - rec.Lambda) ** rec.I
    if rec.J == 1:
        if mu >= lams[0]:
            raise DomainError(f"inserted eigenvalue {mu} must precede {lams[0]}")
        lams = np.concatenate([[mu], lams])
        gammas = np.concatenate([[nu], gammas])
    return SpectralData(lams, gammas, data.ind_f + rec.I, data.ind_F + (2 * rec.J - rec.I))


def kappa(p: Problem, mu: float, n_cells: int = TRANSFORM_CELLS) -> float:
    """Endpoint ratio (C1(pi) - C(pi) F(mu)) / (S1(pi) - S(pi) F(mu)).

    For Dirichlet F the limit C(pi)/S(pi) is used.  The denominator vanishes
    exactly at eigenvalues of the problem with a Dirichlet left end, so mu
    must stay below the smallest of those.
    """
    C = solution_C(p.s, mu, n_cells)
    S = solution_S(p.s, mu, n_cells)
    if p.F.is_dirichlet:
        num, den = C.y_pi, S.y_pi
    else:
        Fmu = p.F.eval(mu)
        num = C.qd_pi - C.y_pi * Fmu
        den = S.qd_pi - S.y_pi * Fmu
    scale = max(abs(num), 1.0)
    if abs(den) <= 1e-12 * scale:
        raise DomainError(
            f"kappa denominator vanishes at mu = {mu}: mu is not below the "
            "smallest Dirichlet-left eigenvalue"
        )
    return float(num / den)


def _tilde_rho(p: Problem, mu: float, nu: float, kap: float) -> float:
    fu, fd = up_down(p.f)
    fum, fdm = float(fu(mu)), float(fd(mu))
    den = nu + fdm * (kap * fdm - fum)
    if den <= 0.0:
        raise SingularityError(
            f"denominator of the factor slope is {den}; it must be positive "
            "for admissible inverse-transform data"
        )
    return (nu * kap + fum * (kap * fdm - fum)) / den


def classify_tilde_branch(mu: float, nu: float, p: Problem,
                          n_cells: int = TRANSFORM_CELLS,
                          lam0_gamma0: tuple | None = None) -> int:
    """Which of the three admissible input classes (1, 2, 3) the data falls in.

    Class 1: mu strictly below the smallest eigenvalue, any positive nu.
    Class 2: constant f, mu equal to the smallest eigenvalue, nu half the
    first norming constant.  Class 3: constant F, mu equal to the smallest
    eigenvalue, nu twice the first norming constant.  Equality is decided
    with relative tolerance 1e-8.
    """
    if lam0_gamma0 is None:
        lam0 = float(eigenvalues(p, 1, n_cells=n_cells)[0])
        gam0 = norming_constant(p, lam0, n_cells)
    else:
        lam0, gam0 = lam0_gamma0
    scale = 1.0 + abs(lam0)
    if mu < lam0 - MEMBERSHIP_RTOL * scale:
        if nu <= 0.0:
            raise DomainError(f"class-1 inverse data needs nu > 0, got {nu}")
        return 1
    if abs(mu - lam0) <= MEMBERSHIP_RTOL * scale:
        if index(p.f) == 0 and abs(nu - 0.5 * gam0) <= MEMBERSHIP_RTOL * gam0:
            return 2
        if index(p.F) == 0 and abs(nu - 2.0 * gam0) <= MEMBERSHIP_RTOL * gam0:
            return 3
        raise DomainError(
            f"mu matches the smallest eigenvalue {lam0} but nu = {nu} is "
            f"neither gamma0/2 = {0.5 * gam0} (constant f required) nor "
            f"2*gamma0 = {2.0 * gam0} (constant F required)"
        )
    raise DomainError(
        f"mu = {mu} exceeds the smallest eigenvalue {lam0}; nearest admissible "
        "class is 1, which needs mu below it"
    )


def t_tilde(
    mu: float,
    nu: float,
    p: Problem,
    n_cells: int = TRANSFORM_CELLS,
    branch: int | None = None,
    with_record: bool = False,
):
    """Inverse transformation; raises both boundary indices by one.

    In class 1 the new problem gains (mu, nu) as its lowest spectral pair;
    in classes 2 and 3 one boundary coefficient returns to Dirichlet and the
    spectrum is unchanged.  `branch` skips the tolerance-based membership
    classification when the caller already knows the class.
    """
    if branch is None:
        branch = classify_tilde_branch(mu, nu, p, n_cells)
    if branch not in (1, 2, 3):
        raise DomainError(f"branch must be 1, 2 or 3, got {branch}")
    if branch == 1:
        kap = kappa(p, mu, n_cells)
        rho = _tilde_rho(p, mu, nu, kap)
        if not p.f.is_dirichlet and rho <= p.f.eval(mu):
            raise SingularityError(
                f"factor slope {rho} does not exceed f(mu) = {p.f.eval(mu)}"
            )
        C = solution_C(p.s, mu, n_cells)
        S = solution_S(p.s, mu, n_cells)
        u = C.combined(S, 1.0, -rho)
        Lam = mu
    elif branch == 2:
        if index(p.f) != 0:
            raise DomainError("class-2 inverse data needs a constant left coefficient")
        u = phi(p, mu - 2.0, n_cells)
        Lam = mu - 2.0
    else:
        if index(p.F) != 0:
            raise DomainError("class-3 inverse data needs a constant right coefficient")
        u = psi(p, mu - 2.0, n_cells)
        Lam = mu - 2.0
    _check_positive(u, "inverse transform")
    lr = _log_ratio(u)

    s_new = darboux_potential(p.s, u)
    tau_f = -u.qd0 / u.y0
    tau_F = u.qd_pi / u.y_pi
    f_branch = None if p.f.is_dirichlet else (BRANCH_EQUAL if branch == 2 else BRANCH_GREATER)
    F_branch = None if p.F.is_dirichlet else (BRANCH_EQUAL if branch == 3 else BRANCH_GREATER)
    f_new = theta(Lam, tau_f, tau_f + (2.0 / PI) * lr, p.f, branch=f_branch)
    F_new = theta(Lam, tau_F, tau_F - (2.0 / PI) * lr, p.F, branch=F_branch)

    out = Problem(s_new, f_new, F_new)
    if not with_record:
        return out
    I = index(f_new) - index(p.f)
    J = (index(f_new) + index(F_new) - index(p.f) - index(p.F)) // 2
    rec = TransformRecord(Lam, I, J, (u.y0, u.y_pi, u.qd0, u.qd_pi), "inverse")
    return out, rec


def transformed_eigenfunction(p: Problem, lam_n: float, Lam: float,
                              n_cells: int = TRANSFORM_CELLS) -> SolutionTrace:
    """Eigenfunction of the transformed problem built from the original one.

    For a non-Dirichlet left coefficient this is the quotient formula
    (phi1 - (v1/v) phi) / (Lam - lam_n) with v the factor solution at Lam;
    without the prefactor when the left condition is Dirichlet.  Only the
    y-component is meaningful here (the quasi-derivative slot carries its
    classical x-derivative on the grid), which is all the oscillation
    cross-checks need.
    """
    v = phi(p, Lam, n_cells) if not p.f.is_dirichlet else psi(p, Lam, n_cells)
    _check_positive(v, "eigenfunction quotient")
    tr = phi(p, lam_n, n_cells) if not p.f.is_dirichlet else psi(p, lam_n, n_cells)
    vals = tr.quasi_deriv - (v.quasi_deriv / v.y) * tr.y
    if not p.f.is_dirichlet:
        vals = vals / (Lam - lam_n)
    dx = np.gradient(vals, v.grid)
    return SolutionTrace(v.grid, vals, dx, lam_n)


def gamma0_from_hat(p_hat: Problem, lam0: float, rho: float,
                    n_cells: int = TRANSFORM_CELLS) -> float:
    """First norming constant of the pre-image problem from its transform.

    Evaluates (f_up(lam0) - k*f_down(lam0)) * (rho*f_down(lam0) - f_up(lam0))
    / (rho - k) on the transformed problem, where k is the `kappa` ratio of
    the transformed problem at lam0 (with the Dirichlet fallback).
    """
    kap = kappa(p_hat, lam0, n_cells)
    if abs(rho - kap) <= 1e-12 * (1.0 + abs(kap)):
        raise DomainError(f"degenerate input: rho = {rho} coincides with kappa = {kap}")
    fu, fd = up_down(p_hat.f)
    fu0, fd0 = float(fu(lam0)), float(fd(lam0))
    val = (fu0 - kap * fd0) * (rho * fd0 - fu0) / (rho - kap)
    if val <= 0.0:
        raise SingularityError(
            f"derived first norming constant {val} is not positive; lam0 or "
            "rho are inconsistent with the transformed problem"
        )
    return float(val)


def reduce_chain(p: Problem, n_cells: int = TRANSFORM_CELLS) -> ChainReduction:
    """Apply the forward transform until both boundary indices are <= 0.

    The removed (smallest eigenvalue, first norming constant) pairs are
    recorded at every index-lowering step that drops a spectral pair (J = 1).
    """
    problems = [p]
    records = []
    removed = []
    steps = max(p.ind_f, p.ind_F, 0)
    current = p
    for _ in range(steps):
        lam0 = float(eigenvalues(current, 1, n_cells=n_cells)[0])
        both = not current.f.is_dirichlet and not current.F.is_dirichlet
        if both:
            gam0 = norming_constant(current, lam0, n_cells)
            removed.append((lam0, gam0))
        current, rec = t_hat(current, n_cells, lam0=lam0)
        problems.append(current)
        records.append(rec)
    return ChainReduction(tuple(problems), tuple(records), tuple(removed))
