"""Characteristic function, eigenvalues, norming constants, oscillation counts.

The characteristic function is evaluated on the pole-free side: with phi the
left solution carrying the boundary data of f, the function

    chi(lam) = F_up(lam) * phi(pi, lam) - F_down(lam) * phi1(pi, lam)

is entire in lam and vanishes exactly at the eigenvalues.  Root searches scan
the signed-sqrt axis z (lam = z*|z|), where the asymptotic eigenvalue spacing
is uniform, refine sign changes with Brent's method, and then verify
completeness by Sturm oscillation bookkeeping: the eigenfunction of the n-th
eigenvalue must show n - (poles of f at or below it) - (poles of F ...)
interior sign changes.  Any mismatch triggers a finer rescan, so missed
ground states and near-pole eigenvalue pairs are caught instead of silently
shifting the index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import polygamma

from .errors import (
    DomainError,
    IntegrationError,
    ResolutionError,
    SearchError,
    ValidationError,
)
from .hn_algebra import RationalBC, index, pole_count, smallest_pole, up_down
from .potential import MEAN_TOL, PI, Potential, SolutionTrace, composite_boole
from . import quasi_ode
from .quasi_ode import DEFAULT_CELLS, phi, phi_endpoints, psi, psi_endpoints

__all__ = [
    "Problem",
    "SpectralData",
    "char_function",
    "char_deriv",
    "eigenvalues",
    "eigenvalues_near",
    "beta",
    "norming_constant",
    "spectral_data",
    "oscillation_count",
    "hadamard_product",
    "hadamard_calibration",
    "asymptotic_residuals",
    "EIG_COUNT_CAP",
]

#: Desk-scale cap on how many eigenvalues a single call may request.
EIG_COUNT_CAP = 64


@dataclass(frozen=True, eq=False)
class Problem:
    """Boundary value problem (s, f, F): potential plus two boundary coefficients."""

    s: Potential
    f: RationalBC
    F: RationalBC

    def __post_init__(self):
        if not isinstance(self.s, Potential) or not isinstance(self.f, RationalBC) \
                or not isinstance(self.F, RationalBC):
            raise ValidationError("Problem needs (Potential, RationalBC, RationalBC)")
        if abs(self.s.mean) > MEAN_TOL:
            raise ValidationError(
                f"potential mean {self.s.mean} exceeds the zero-mean tolerance; "
                "apply project_zero_mean first"
            )

    @property
    def ind_f(self) -> int:
        return index(self.f)

    @property
    def ind_F(self) -> int:
        return index(self.F)

    @property
    def L(self) -> float:
        return 0.5 * (self.ind_f + self.ind_F)

    def to_json(self) -> dict:
        return {"s": self.s.to_json(), "f": self.f.to_json(), "F": self.F.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Problem":
        try:
            return cls(
                Potential.from_json(obj["s"]),
                RationalBC.from_json(obj["f"]),
                RationalBC.from_json(obj["F"]),
            )
        except KeyError as exc:
            raise ValidationError(f"problem record is missing {exc}") from exc


@dataclass(eq=False)
class SpectralData:
    """Paired eigenvalues and norming constants with the boundary indices."""

    eigenvalues: np.ndarray
    norming_constants: np.ndarray
    ind_f: int
    ind_F: int

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.norming_constants = np.asarray(self.norming_constants, dtype=float)
        if len(self.eigenvalues) != len(self.norming_constants):
            raise ValidationError("eigenvalues and norming constants must pair up")
        if len(self.eigenvalues) < 1:
            raise ValidationError("spectral data needs at least one pair")
        if np.any(np.diff(self.eigenvalues) <= 0):
            raise ValidationError("eigenvalues must strictly increase")
        if np.any(self.norming_constants <= 0):
            raise ValidationError("norming constants must be positive")
        if self.ind_f < -1 or self.ind_F < -1:
            raise ValidationError("boundary indices must be >= -1")

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def L(self) -> float:
        return 0.5 * (self.ind_f + self.ind_F)

    def head(self, n: int) -> "SpectralData":
        return SpectralData(self.eigenvalues[:n], self.norming_constants[:n], self.ind_f, self.ind_F)

    def to_json(self) -> dict:
        return {
            "ind_f": self.ind_f,
            "ind_F": self.ind_F,
            "eigenvalues": list(map(float, self.eigenvalues)),
            "norming_constants": list(map(float, self.norming_constants)),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SpectralData":
        try:
            return cls(obj["eigenvalues"], obj["norming_constants"], obj["ind_f"], obj["ind_F"])
        except KeyError as exc:
            raise ValidationError(f"spectral data record is missing {exc}") from exc


# ---------------------------------------------------------------------------
# characteristic function


def _char_many(p: Problem, lams: np.ndarray, n_cells: int) -> np.ndarray:
    Fu, Fd = up_down(p.F)
    yp, dyp = phi_endpoints(p.s, p.f, lams, n_cells)
    return Fu(lams) * yp - Fd(lams) * dyp


def _char_one(p: Problem, lam: float, n_cells: int) -> float:
    return float(_char_many(p, np.array([lam]), n_cells)[0])


def char_function(p: Problem, lam: float, n_cells: int = DEFAULT_CELLS, check_tol: float = 1e-7) -> float:
    """Characteristic value at lam, cross-checked between the two boundary sides.

    The value from the left solution (F_up*phi(pi) - F_down*phi1(pi)) is
    returned; the right-solution form f_down*psi1(0) + f_up*psi(0) must agree
    with it to `check_tol` relative to the size of the constituent terms.
    """
    lam = float(lam)
    Fu, Fd = up_down(p.F)
    yp, dyp = phi_endpoints(p.s, p.f, np.array([lam]), n_cells)
    t1, t2 = Fu(lam) * yp[0], Fd(lam) * dyp[0]
    phi_side = t1 - t2
    fu, fd = up_down(p.f)
    y0, dy0 = psi_endpoints(p.s, p.F, np.array([lam]), n_cells)
    t3, t4 = fd(lam) * dy0[0], fu(lam) * y0[0]
    psi_side = t3 + t4
    scale = max(abs(t1), abs(t2), abs(t3), abs(t4), 1e-300)
    if abs(phi_side - psi_side) > check_tol * scale:
        raise IntegrationError(
            f"characteristic-function cross-check failed at lam = {lam}: "
            f"{phi_side} vs {psi_side} at scale {scale}"
        )
    return phi_side


def char_deriv(p: Problem, lam: float, n_cells: int = DEFAULT_CELLS, rel_step: float = 3e-4) -> float:
    """d(chi)/d(lam) by Richardson-extrapolated central differences."""
    h = rel_step * (1.0 + abs(lam))
    lams = np.array([lam - h, lam + h, lam - 0.5 * h, lam + 0.5 * h])
    v = _char_many(p, lams, n_cells)
    d1 = (v[1] - v[0]) / (2.0 * h)
    d2 = (v[3] - v[2]) / h
    return float((4.0 * d2 - d1) / 3.0)


# ---------------------------------------------------------------------------
# eigenvalues


def _interior_sign_changes(trace: SolutionTrace, rel_tol: float = 1e-11,
                           endpoint_rel_tol: float = 1e-6):
    """Count/locate sign changes of a trace strictly inside (0, pi).

    Endpoint nodes whose magnitude falls below `endpoint_rel_tol` of the
    trace maximum are treated as boundary zeros: a Dirichlet-type endpoint
    evaluated a hair off its eigenvalue otherwise leaks a spurious crossing
    into the last grid cell, below the resolution the count is trusted at.
    """
    y = trace.y.copy()
    peak = np.max(np.abs(y))
    if abs(y[0]) <= endpoint_rel_tol * peak:
        y[0] = 0.0
    if abs(y[-1]) <= endpoint_rel_tol * peak:
        y[-1] = 0.0
    thresh = rel_tol * peak
    sgn = np.where(np.abs(y) <= thresh, 0, np.sign(y))
    nz = np.nonzero(sgn)[0]
    if len(nz) < 2:
        return 0, np.array([])
    ss = sgn[nz]
    flip = np.nonzero(ss[:-1] * ss[1:] < 0)[0]
    lo, hi = nz[flip], nz[flip + 1]
    ylo, yhi = y[lo], y[hi]
    xs = trace.grid[lo] + (trace.grid[hi] - trace.grid[lo]) * ylo / (ylo - yhi)
    return len(flip), xs


def _scan_zeros(p: Problem, z_grid: np.ndarray, n_cells: int):
    """Brent-refined zeros of chi over a z-grid (lam = z*|z|), sorted."""
    lams = z_grid * np.abs(z_grid)
    vals = _char_many(p, lams, n_cells)
    if not np.all(np.isfinite(vals)):
        raise IntegrationError("characteristic scan produced non-finite values")
    zeros = list(lams[vals == 0.0])
    flips = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    for i in flips:
        zeros.append(brentq(lambda t: _char_one(p, t, n_cells),
                            lams[i], lams[i + 1], xtol=1e-13, rtol=8.9e-16, maxiter=200))
    zeros.sort()
    dedup = []
    for z in zeros:
        if not dedup or z - dedup[-1] > 1e-10 * (1.0 + abs(z)):
            dedup.append(z)
    return dedup


def _pole_windows(p: Problem, lam_lo: float, lam_hi: float):
    """Fine z-windows around boundary poles, where eigenvalues may cluster."""
    windows = []
    for bc in (p.f, p.F):
        if bc.is_dirichlet:
            continue
        for loc, _ in bc.poles:
            if lam_lo < loc < lam_hi:
                zq = np.sign(loc) * np.sqrt(abs(loc))
                windows.append(np.arange(zq - 0.2, zq + 0.2, 0.002))
    return windows


def eigenvalues(
    p: Problem,
    count: int,
    n_cells: int = DEFAULT_CELLS,
    verify: bool = True,
    z_step: float = 0.05,
) -> np.ndarray:
    """First `count` eigenvalues, verified complete via oscillation counts."""
    if count < 1:
        raise DomainError("count must be positive")
    if count > EIG_COUNT_CAP:
        raise DomainError(f"count {count} exceeds the cap {EIG_COUNT_CAP}")
    L = p.L
    z_hi = count - 1 - L + 1.6
    lam_floor = L * L - 50.0
    z_lo = -np.sqrt(-lam_floor) if lam_floor < 0 else np.sqrt(lam_floor) - 2.0

    step = z_step
    for attempt in range(6):
        z = np.arange(z_lo, z_hi + step, step)
        for w in _pole_windows(p, z_lo * abs(z_lo), z_hi * z_hi):
            z = np.concatenate([z, w])
        z = np.unique(z)
        zeros = _scan_zeros(p, z, n_cells)
        if len(zeros) < count:
            z_hi += 2.0
            continue
        if not verify:
            return np.array(zeros[:count])
        problem_index = _verify_indexing(p, zeros[:count], n_cells)
        if problem_index is None:
            return np.array(zeros[:count])
        if problem_index == 0:
            # ground state suspicious: widen the bottom of the scan
            lam_floor -= 100.0
            z_lo = -np.sqrt(-lam_floor) if lam_floor < 0 else z_lo
        else:
            step /= 4.0
    raise SearchError(
        f"eigenvalue search did not stabilize for count={count}",
        scan={"z_lo": z_lo, "z_hi": z_hi, "step": step, "found": zeros[:count]},
    )


def _verify_indexing(p: Problem, zeros, n_cells: int):
    """Oscillation bookkeeping check; returns the first bad index or None."""
    for n, lam in enumerate(zeros):
        tr = phi(p, lam, n_cells)
        changes, _ = _interior_sign_changes(tr)
        if changes + pole_count(p.f, lam) + pole_count(p.F, lam) != n:
            return n
    return None


def eigenvalues_near(p: Problem, guesses: np.ndarray, n_cells: int = DEFAULT_CELLS) -> np.ndarray:
    """Refine eigenvalues from good per-index guesses (no completeness scan).

    Used by inverse fits where the spectrum moves smoothly with parameters;
    falls back to the full scan when the refined values collide or disorder.
    """
    guesses = np.asarray(guesses, dtype=float)
    out = np.empty_like(guesses)
    ok = True
    for i, g in enumerate(guesses):
        try:
            out[i] = _bracketed_root(p, g, n_cells)
        except SearchError:
            ok = False
            break
    if ok and np.all(np.diff(out) > 0):
        return out
    return eigenvalues(p, len(guesses), n_cells)


def _bracketed_root(p: Problem, guess: float, n_cells: int) -> float:
    delta = 0.05 * (1.0 + np.sqrt(abs(guess)))
    a, b = guess - delta, guess + delta
    fa, fb = _char_one(p, a, n_cells), _char_one(p, b, n_cells)
    for _ in range(30):
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb < 0.0:
            return brentq(lambda t: _char_one(p, t, n_cells), a, b,
                          xtol=1e-13, rtol=8.9e-16, maxiter=200)
        delta *= 1.7
        a, b = guess - delta, guess + delta
        fa, fb = _char_one(p, a, n_cells), _char_one(p, b, n_cells)
    raise SearchError(f"no sign change around guess {guess}")


# ---------------------------------------------------------------------------
# norming constants


def beta(p: Problem, lam_n: float, n_cells: int = DEFAULT_CELLS, rel_tol: float = 1e-6) -> float:
    """Proportionality constant with psi(., lam_n) = beta * phi(., lam_n)."""
    tr_phi = phi(p, lam_n, n_cells)
    tr_psi = psi(p, lam_n, n_cells)
    i = int(np.argmax(np.abs(tr_phi.y)))
    if tr_phi.y[i] == 0.0:
        raise DomainError(f"left solution vanishes identically at lam = {lam_n}")
    b = float(tr_psi.y[i] / tr_phi.y[i])
    resid = float(np.max(np.abs(tr_psi.y - b * tr_phi.y)))
    scale = float(np.max(np.abs(tr_psi.y)))
    if scale == 0.0 or resid > rel_tol * scale:
        raise DomainError(
            f"lam = {lam_n} is not an eigenvalue: proportionality residual "
            f"{resid} at scale {scale}"
        )
    return b


def _poly_pair_term(bc: RationalBC, lam: float) -> float:
    """(g_up' g_down - g_up g_down')(lam): the boundary term f'(lam)*f_down^2(lam)
    in polynomial form, finite at poles of the coefficient."""
    gu, gd = up_down(bc)
    return float(gu.deriv()(lam) * gd(lam) - gu(lam) * gd.deriv()(lam))


def norming_constant(
    p: Problem,
    lam_n: float,
    n_cells: int = DEFAULT_CELLS,
    cross_check_tol: float = 1e-6,
    beta_n: float | None = None,
) -> float:
    """Squared norm of the canonical eigenvector at the eigenvalue lam_n.

    Computed as integral(phi^2) plus the two boundary terms in their
    polynomial (pole-safe) form; the raw derivative form of the right-hand
    term is cross-checked against it away from poles of F.
    """
    tr = phi(p, lam_n, n_cells)
    h = PI / n_cells
    integral = composite_boole(tr.y**2, h)
    term_f = _poly_pair_term(p.f, lam_n)
    b = beta(p, lam_n, n_cells) if beta_n is None else beta_n
    term_F = _poly_pair_term(p.F, lam_n) / b**2
    gamma = integral + term_f + term_F
    if not p.F.is_dirichlet:
        dist = np.min(np.abs(p.F.pole_locations - lam_n)) if p.F.poles else np.inf
        if dist > 1e-6 * (1.0 + abs(lam_n)):
            direct = p.F.eval_deriv(lam_n) * tr.y_pi**2
            scale = max(abs(gamma), abs(integral), 1e-300)
            if abs(direct - term_F) > cross_check_tol * scale:
                raise IntegrationError(
                    f"norming-constant cross-check failed at lam = {lam_n}: "
                    f"{direct} vs {term_F}"
                )
    if gamma <= 0.0:
        raise IntegrationError(f"non-positive norming constant {gamma} at lam = {lam_n}")
    return float(gamma)


def spectral_data(p: Problem, count: int, n_cells: int = DEFAULT_CELLS, verify: bool = True) -> SpectralData:
    """Bundle the first `count` eigenvalue / norming-constant pairs."""
    lams = eigenvalues(p, count, n_cells, verify=verify)
    gammas = np.array([norming_constant(p, lam, n_cells) for lam in lams])
    return SpectralData(lams, gammas, p.ind_f, p.ind_F)


def oscillation_count(p: Problem, lam_n: float, n_cells: int = DEFAULT_CELLS) -> int:
    """Number of interior sign changes of the eigenfunction at lam_n.

    Raises when two detected zeros are closer than two grid steps, since the
    count is then untrustworthy at this resolution.
    """
    tr = phi(p, lam_n, n_cells)
    changes, xs = _interior_sign_changes(tr)
    if len(xs) > 1:
        min_gap = float(np.min(np.diff(xs)))
        if min_gap < 2.0 * PI / n_cells:
            raise ResolutionError(
                f"eigenfunction zeros separated by {min_gap}, below two grid steps; "
                "increase n_cells"
            )
    return changes


# ---------------------------------------------------------------------------
# infinite product and asymptotics


def _check_half_integer(L: float) -> None:
    if abs(2 * L - round(2 * L)) > 1e-12 or L < -1.0 - 1e-12:
        raise ValidationError(f"L must be a half-integer >= -1, got {L}")


def hadamard_product(eigs: np.ndarray, L: float, lam: float, tail_count: int = 10000) -> float:
    """Product representation of the characteristic function from its zeros.

    Evaluates -prod_{n<L}(lam_n - lam) * [pi*(lam_L - lam)] * prod_{n>L}
    (lam_n - lam)/(n-L)^2 with the supplied eigenvalues, extending the
    product by `tail_count` asymptotic factors (1 - lam/(n-L)^2) and a
    closed-form remainder.  The overall normalization follows the product
    formula literally; `hadamard_calibration` reports the constant relating
    it to the large-lam growth of the characteristic function.
    """
    eigs = np.asarray(eigs, dtype=float)
    _check_half_integer(L)
    if np.any(np.diff(eigs) <= 0):
        raise ValidationError("eigenvalues must strictly increase")
    n_sup = len(eigs)
    is_int = abs(L - round(L)) < 1e-12
    if is_int and L >= 0 and n_sup <= int(round(L)):
        raise ValidationError(f"need eigenvalues through index {int(round(L))} for L = {L}")
    if lam in eigs:
        return 0.0
    base = n_sup - L
    if lam >= 0.81 * base * base:
        raise DomainError(
            f"lam = {lam} too large for the supplied {n_sup} eigenvalues; "
            "the asymptotic tail would start inside the oscillatory range"
        )
    n = np.arange(n_sup)
    factors = eigs - lam
    neg = int(np.sum(factors < 0))
    logmag = float(np.sum(np.log(np.abs(factors))))
    over = n - L > 1e-12
    logmag -= 2.0 * float(np.sum(np.log(n[over] - L)))
    if is_int and L >= 0:
        logmag += np.log(PI)
    m = np.arange(n_sup, n_sup + tail_count) - L
    logmag += float(np.sum(np.log1p(-lam / m**2)))
    x = n_sup + tail_count - L
    logmag += float(-lam * polygamma(1, x) - lam * lam * polygamma(3, x) / 12.0)
    sign = -1.0 if neg % 2 == 0 else 1.0
    return sign * np.exp(logmag)


def hadamard_calibration(eigs: np.ndarray, L: float, tail_count: int = 10000, probes=(3.0, 4.0, 5.0, 6.0)):
    """Normalization constant of the product formula against the growth estimate.

    On the negative half-line the characteristic function behaves like
    -t^(2L+1) * sinh(pi t) (integer L) or -t^(2L+1) * cosh(pi t)
    (half-integer L) for lam = -t^2; the returned dict reports the ratio of
    that model to the raw product at each probe together with their mean and
    spread.  The constant comes out as pi when L = -1 and 1 otherwise, making
    the product formula's normalization explicit instead of guessed.
    """
    _check_half_integer(L)
    is_int = abs(L - round(L)) < 1e-12
    ratios = {}
    for t in probes:
        lam = -t * t
        grow = np.sinh(PI * t) if is_int else np.cosh(PI * t)
        model = -(t ** (2 * L + 1)) * grow
        ratios[t] = float(model / hadamard_product(eigs, L, lam, tail_count))
    vals = np.array(list(ratios.values()))
    return {
        "constant": float(np.mean(vals)),
        "spread": float(np.max(vals) - np.min(vals)),
        "probes": ratios,
    }


def asymptotic_residuals(data: SpectralData):
    """Residual sequences of the eigenvalue and norming-constant asymptotics.

    Returns (a, b) with a_n = sqrt(lam_n) - (n - L) and
    b_n = gamma_n / ((pi/2) (n - L)^(2 ind_f)) - 1; entries are NaN where the
    formulas degenerate (negative eigenvalue, power base zero).
    """
    L = data.L
    n = np.arange(len(data))
    a = np.where(data.eigenvalues >= 0,
                 np.sqrt(np.maximum(data.eigenvalues, 0.0)) - (n - L), np.nan)
    base = n - L
    with np.errstate(divide="ignore", invalid="ignore"):
        model = 0.5 * PI * np.abs(base) ** (2 * data.ind_f) * np.where(base != 0, 1.0, np.nan)
        b = data.norming_constants / model - 1.0
    b = np.where(np.abs(base) < 1e-12, np.nan, b)
    return a, b
