"""Integration of the quasi-derivative system and the named solutions.

All propagation happens on a uniform grid through the Magnus cell maps of
`_propagate`; the per-potential coefficient tables are cached keyed by the
cell count.  `phi` starts from the left endpoint with the data
(f_down(lam), -f_up(lam)) of the left boundary coefficient, `psi` from the
right endpoint with (F_down(lam), F_up(lam)); the classical fundamental pair
C, S starts from (1, 0) and (0, 1) at x = 0.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from . import _propagate
from .errors import DomainError, IntegrationError, ValidationError
from .hn_algebra import up_down
from .potential import PI, Potential, SolutionTrace

__all__ = [
    "DEFAULT_CELLS",
    "InitialData",
    "integrate",
    "phi",
    "psi",
    "solution_C",
    "solution_S",
    "solution_S_pi",
    "wronskian",
]

#: Default number of grid cells (kept a multiple of 4 for Boole quadrature).
DEFAULT_CELLS = 2048

_coef_cache: "weakref.WeakKeyDictionary[Potential, dict]" = weakref.WeakKeyDictionary()


def cell_table(s: Potential, n_cells: int) -> np.ndarray:
    """Cached Magnus coefficient table of the potential on an n-cell grid."""
    per_potential = _coef_cache.setdefault(s, {})
    table = per_potential.get(n_cells)
    if table is None:
        h = PI / n_cells
        left = np.arange(n_cells) * h
        lo = s.eval(left + _propagate.GAUSS_FRACTIONS[0] * h)
        hi = s.eval(left + _propagate.GAUSS_FRACTIONS[1] * h)
        table = _propagate.cell_coefficients(np.asarray(lo), np.asarray(hi), h)
        per_potential[n_cells] = table
    return table


@dataclass(frozen=True)
class InitialData:
    """Initial values (y, quasi_deriv) posed at x = 0 or x = pi."""

    at: float
    y: float
    quasi_deriv: float

    def __post_init__(self):
        if abs(self.at) > 1e-12 and abs(self.at - PI) > 1e-12:
            raise ValidationError("initial data must sit at 0 or pi")
        if self.y == 0.0 and self.quasi_deriv == 0.0:
            raise ValidationError("initial data (0, 0) generates the zero solution")

    @property
    def backward(self) -> bool:
        return abs(self.at - PI) <= 1e-12


def integrate(s: Potential, lam: float, init: InitialData, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Solution trace on the uniform grid, integrated from the given endpoint."""
    coef = cell_table(s, n_cells)
    ys, dys = _propagate.trace_single(coef, float(lam), float(init.y), float(init.quasi_deriv), init.backward)
    if not (np.all(np.isfinite(ys)) and np.all(np.isfinite(dys))):
        bad = ~(np.isfinite(ys) & np.isfinite(dys))
        idx = np.nonzero(~bad)[0]
        last = float(idx[-1] if not init.backward else idx[0]) * PI / n_cells if len(idx) else None
        raise IntegrationError(
            f"propagation overflowed at lam = {lam}", last_good_x=last
        )
    grid = np.linspace(0.0, PI, n_cells + 1)
    return SolutionTrace(grid, ys, dys, float(lam))


def _endpoint_batch(s: Potential, lams: np.ndarray, y0: np.ndarray, dy0: np.ndarray, backward: bool, n_cells: int):
    coef = cell_table(s, n_cells)
    return _propagate.endpoints_many(
        coef,
        np.ascontiguousarray(lams, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        np.ascontiguousarray(dy0, dtype=float),
        backward,
    )


def phi(problem, lam: float, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Left solution with phi(0) = f_down(lam), phi1(0) = -f_up(lam)."""
    fu, fd = up_down(problem.f)
    init = InitialData(at=0.0, y=float(fd(lam)), quasi_deriv=float(-fu(lam)))
    return integrate(problem.s, lam, init, n_cells)


def psi(problem, lam: float, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Right solution with psi(pi) = F_down(lam), psi1(pi) = F_up(lam)."""
    Fu, Fd = up_down(problem.F)
    init = InitialData(at=PI, y=float(Fd(lam)), quasi_deriv=float(Fu(lam)))
    return integrate(problem.s, lam, init, n_cells)


def phi_endpoints(s: Potential, f, lams: np.ndarray, n_cells: int = DEFAULT_CELLS):
    """(phi(pi, lam), phi1(pi, lam)) for a batch of lam values."""
    fu, fd = up_down(f)
    lams = np.asarray(lams, dtype=float)
    return _endpoint_batch(s, lams, fd(lams), -fu(lams), False, n_cells)


def psi_endpoints(s: Potential, F, lams: np.ndarray, n_cells: int = DEFAULT_CELLS):
    """(psi(0, lam), psi1(0, lam)) for a batch of lam values."""
    Fu, Fd = up_down(F)
    lams = np.asarray(lams, dtype=float)
    return _endpoint_batch(s, lams, Fd(lams), Fu(lams), True, n_cells)


def endpoints(s: Potential, lams, y0, dy0, backward: bool = False, n_cells: int = DEFAULT_CELLS):
    """Far-endpoint values (y, y1) for a batch of lam with per-lam initial data."""
    lams = np.asarray(lams, dtype=float)
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), lams.shape)
    dy0 = np.broadcast_to(np.asarray(dy0, dtype=float), lams.shape)
    return _endpoint_batch(s, lams, y0, dy0, backward, n_cells)


def solution_C(s: Potential, lam: float, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Fundamental solution with C(0) = 1, C1(0) = 0."""
    return integrate(s, lam, InitialData(0.0, 1.0, 0.0), n_cells)


def solution_S(s: Potential, lam: float, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Fundamental solution with S(0) = 0, S1(0) = 1."""
    return integrate(s, lam, InitialData(0.0, 0.0, 1.0), n_cells)


def solution_S_pi(s: Potential, lam: float, n_cells: int = DEFAULT_CELLS) -> SolutionTrace:
    """Right-normalized solution with S_pi(pi) = 0, (S_pi)1(pi) = 1."""
    return integrate(s, lam, InitialData(PI, 0.0, 1.0), n_cells)


def wronskian(u: SolutionTrace, w: SolutionTrace) -> float:
    """u*w1 - u1*w evaluated at x = 0; constant along the grid for equal lam."""
    if u.lam != w.lam:
        raise DomainError(f"Wronskian needs equal spectral parameters, got {u.lam} and {w.lam}")
    if len(u.grid) != len(w.grid):
        raise DomainError("Wronskian needs traces on the same grid")
    return float(u.y[0] * w.quasi_deriv[0] - u.quasi_deriv[0] * w.y[0])
