"""Rational Herglotz-Nevanlinna boundary coefficients.

A boundary coefficient is either the Dirichlet marker or a function

    f(lam) = h0*lam + h + sum_k  delta_k / (h_k - lam)

with h0 >= 0, real h, positive residues delta_k and strictly increasing pole
locations h_1 < ... < h_d.  Such functions are strictly increasing between
consecutive poles, which is what every root-finding step below relies on.

The index of a coefficient is 2*d + 1 when h0 > 0, 2*d when h0 = 0, and -1
for the Dirichlet marker.  `theta` implements the fractional-linear transform
that shifts the index by exactly one in either direction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import DomainError, SingularityError, ValidationError

__all__ = [
    "RationalBC",
    "index",
    "up_down",
    "smallest_pole",
    "pole_count",
    "precedes",
    "theta",
    "shift",
    "BRANCH_EQUAL",
    "BRANCH_GREATER",
]

#: Branch markers for `theta`: is tau equal to f(mu) or strictly greater?
BRANCH_EQUAL = "equal"
BRANCH_GREATER = "greater"

#: Absolute tolerance separating the two theta branches when no explicit
#: branch flag is supplied.
BRANCH_TOL = 1e-10


@dataclass(frozen=True)
class RationalBC:
    """Rational Herglotz-Nevanlinna function, or the Dirichlet marker.

    Use the factory methods; positional construction is reserved for internal
    code.  `poles` is a tuple of (location, residue) pairs sorted by location.
    """

    h0: float = 0.0
    h: float = 0.0
    poles: tuple = ()
    is_dirichlet: bool = False

    def __post_init__(self):
        if self.is_dirichlet:
            if self.h0 != 0.0 or self.h != 0.0 or self.poles:
                raise ValidationError("Dirichlet marker carries no coefficients")
            return
        if not np.isfinite(self.h0) or self.h0 < 0.0:
            raise ValidationError(f"h0 must be finite and >= 0, got {self.h0}")
        if not np.isfinite(self.h):
            raise ValidationError("h must be finite")
        locs = [p[0] for p in self.poles]
        for loc, res in self.poles:
            if not (np.isfinite(loc) and np.isfinite(res)):
                raise ValidationError("pole data must be finite")
            if res <= 0.0:
                raise ValidationError(f"residues must be positive, got {res}")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ValidationError(f"pole locations must strictly increase, got {locs}")

    # -- factories ---------------------------------------------------------

    @classmethod
    def dirichlet(cls) -> "RationalBC":
        return cls(is_dirichlet=True)

    @classmethod
    def constant(cls, value: float) -> "RationalBC":
        return cls(h0=0.0, h=float(value))

    @classmethod
    def affine(cls, h0: float, h: float) -> "RationalBC":
        return cls(h0=float(h0), h=float(h))

    @classmethod
    def rational(cls, h0: float, h: float, poles) -> "RationalBC":
        return cls(h0=float(h0), h=float(h), poles=tuple((float(a), float(b)) for a, b in poles))

    # -- basic queries ------------------------------------------------------

    @property
    def d(self) -> int:
        """Number of poles."""
        return len(self.poles)

    @property
    def index(self) -> int:
        return index(self)

    @property
    def pole_locations(self) -> np.ndarray:
        return np.array([p[0] for p in self.poles])

    @property
    def residues(self) -> np.ndarray:
        return np.array([p[1] for p in self.poles])

    @property
    def h0_prime(self) -> float:
        """Normalization constant of the denominator polynomial: 1/h0 or 1."""
        if self.is_dirichlet:
            raise DomainError("Dirichlet marker has no h0'")
        return 1.0 / self.h0 if self.h0 > 0.0 else 1.0

    def eval(self, lam):
        """Value f(lam); +-inf at poles, error on the Dirichlet marker."""
        if self.is_dirichlet:
            raise DomainError("cannot evaluate the Dirichlet marker")
        lam = np.asarray(lam, dtype=float)
        out = self.h0 * lam + self.h
        for loc, res in self.poles:
            with np.errstate(divide="ignore"):
                out = out + res / (loc - lam)
        return float(out) if out.ndim == 0 else out

    def eval_deriv(self, lam):
        """Derivative h0 + sum delta_k/(h_k - lam)^2; positive off poles."""
        if self.is_dirichlet:
            raise DomainError("cannot differentiate the Dirichlet marker")
        lam = np.asarray(lam, dtype=float)
        out = np.full_like(lam, self.h0, dtype=float)
        for loc, res in self.poles:
            with np.errstate(divide="ignore"):
                out = out + res / (loc - lam) ** 2
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def shifted(self, alpha: float) -> "RationalBC":
        return shift(self, alpha)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        if self.is_dirichlet:
            return {"type": "dirichlet"}
        return {
            "type": "rational",
            "h0": self.h0,
            "h": self.h,
            "poles": [{"location": a, "residue": b} for a, b in self.poles],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RationalBC":
        if not isinstance(obj, dict) or "type" not in obj:
            raise ValidationError("boundary coefficient record needs a 'type' tag")
        if obj["type"] == "dirichlet":
            return cls.dirichlet()
        if obj["type"] != "rational":
            raise ValidationError(f"unknown boundary coefficient type {obj['type']!r}")
        try:
            poles = [(p["location"], p["residue"]) for p in obj.get("poles", [])]
            return cls.rational(obj["h0"], obj["h"], poles)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed rational boundary record: {exc}") from exc


def index(f: RationalBC) -> int:
    """Index of the coefficient: -1, 2d, or 2d+1 depending on the variant."""
    if f.is_dirichlet:
        return -1
    return 2 * f.d + (1 if f.h0 > 0.0 else 0)


@functools.lru_cache(maxsize=4096)
def up_down(f: RationalBC):
    """Numerator/denominator polynomials (f_up, f_down) with f = f_up/f_down.

    The denominator is normalized as h0' * prod(h_k - lam) with h0' = 1/h0
    when h0 > 0 and 1 otherwise; the Dirichlet marker maps to (-1, 0).
    The result is cached per coefficient (treat it as read-only).
    """
    if f.is_dirichlet:
        return Polynomial([-1.0]), Polynomial([0.0])
    h0p = f.h0_prime
    down = Polynomial([h0p])
    for loc, _ in f.poles:
        down = down * Polynomial([loc, -1.0])
    up = Polynomial([f.h, f.h0]) * down
    for k, (_, res) in enumerate(f.poles):
        part = Polynomial([h0p * res])
        for j, (loc, _) in enumerate(f.poles):
            if j != k:
                part = part * Polynomial([loc, -1.0])
        up = up + part
    return up.trim(tol=1e-14 * max(1.0, np.max(np.abs(up.coef)))), down


def smallest_pole(f: RationalBC) -> float:
    """First pole location, or +inf when the coefficient has no poles."""
    if f.is_dirichlet or not f.poles:
        return np.inf
    return f.poles[0][0]


def pole_count(f: RationalBC, lam: float) -> int:
    """Number of poles located at or below lam."""
    if f.is_dirichlet:
        return 0
    return int(sum(1 for loc, _ in f.poles if loc <= lam))


def precedes(f: RationalBC, g: RationalBC, samples: int = 256) -> bool:
    """Partial order: f precedes g when f is Dirichlet or f <= g below both pole sets.

    Decided from the limits at -inf (h0 comparison, then h) plus a dense
    sample of the common pole-free half line; both functions are monotone
    there, so sampling at this density is reliable at the scales handled here.
    """
    if f.is_dirichlet:
        return True
    if g.is_dirichlet:
        return False
    if f.h0 < g.h0:
        return False  # f - g -> +inf as lam -> -inf
    if f.h0 == g.h0 and f.h > g.h:
        return False  # equal slopes: the limit of f - g at -inf is h_f - h_g
    top = min(smallest_pole(f), smallest_pole(g))
    hi = top - max(1e-9, 1e-9 * abs(top)) if np.isfinite(top) else 1e6
    lo = min(-1e6, hi - 1.0)
    grid = np.concatenate(
        [np.linspace(lo, hi, samples - 56), hi - np.geomspace(1e-9, max(1.0, hi - lo), 56)]
    )
    fv, gv = f.eval(grid), g.eval(grid)
    tol = 1e-12 * np.maximum(1.0, np.abs(fv) + np.abs(gv))
    return bool(np.all(fv - gv <= tol))


def shift(f: RationalBC, alpha: float) -> RationalBC:
    """Add a constant to the coefficient (same h0, poles, residues)."""
    if f.is_dirichlet:
        raise DomainError("cannot shift the Dirichlet marker")
    return RationalBC(h0=f.h0, h=f.h + float(alpha), poles=f.poles)


def _root_of_f_equals(f: RationalBC, tau: float, lo: float, hi: float, lo_valid: bool = False) -> float:
    """Root of f = tau on (lo, hi) where f is strictly increasing.

    `lo`/`hi` may be pole locations (where f diverges) or -inf/+inf; a finite
    bracket with a sign change is grown/shrunk before Brent's method runs.
    With `lo_valid` the left endpoint is an ordinary point already known to
    satisfy f(lo) < tau.
    """

    def val(x):
        return f.eval(x) - tau

    if lo_valid:
        a = lo
        b = hi - max(1e-9, 1e-9 * abs(hi)) if np.isfinite(hi) else lo + 1.0
        if np.isfinite(hi):
            width = hi - lo
            t = 1e-3
            while val(b) <= 0.0 and t > 1e-15:
                t *= 0.5
                b = hi - t * width
            if val(b) <= 0.0:
                raise SingularityError(f"f never exceeds {tau} on ({lo}, {hi})")
        else:
            step = 1.0
            for _ in range(80):
                if val(b) > 0.0:
                    break
                step *= 2.0
                b += step
            else:
                raise SingularityError(f"f never exceeds {tau} above {lo}")
    elif np.isfinite(lo) and np.isfinite(hi):
        width = hi - lo
        t = 1e-3
        a, b = lo + t * width, hi - t * width
        for _ in range(60):
            if val(a) < 0.0 and val(b) > 0.0:
                break
            t *= 0.5
            a, b = lo + t * width, hi - t * width
        else:
            raise SingularityError(f"could not bracket f = {tau} in ({lo}, {hi})")
    else:  # (pole, +inf); f increases from -inf and h0 > 0 guarantees a root
        step = max(1.0, 1e-6 * abs(lo))
        a = lo + step
        for _ in range(60):
            if val(a) < 0.0:
                break
            step *= 0.5
            a = lo + step
        else:
            raise SingularityError(f"could not approach the pole at {lo}")
        b = a + 1.0
        for _ in range(80):
            if val(b) > 0.0:
                break
            b += 2.0 * (b - lo)
        else:
            raise SingularityError(f"f never exceeds {tau} above {lo}")
    return brentq(val, a, b, xtol=1e-14, rtol=8.9e-16, maxiter=200)


def theta(mu: float, tau: float, rho: float, f: RationalBC, branch: str | None = None) -> RationalBC:
    """Index-shifting transform f -> (mu - lam)/(f(lam) - tau) + rho.

    Requires mu below the smallest pole of f and tau >= f(mu) for
    non-Dirichlet f.  The result is assembled in pole-residue form: the new
    poles are the solutions of f = tau on the intervals between consecutive
    poles of f (bisection is safe there because f increases strictly), the
    residues follow from the local expansion (h_hat_k - mu)/f'(h_hat_k), and
    the affine part comes from the closed-form limits at +inf.  This is
    considerably stabler than polynomial division of the numerator and
    denominator identities, which the test-suite keeps as a cross-check.

    `branch` forces the tau == f(mu) ("equal", index drops by one) or
    tau > f(mu) ("greater", index grows by one) classification; by default
    the two cases are separated with absolute tolerance 1e-10.
    """
    if f.is_dirichlet:
        return RationalBC.constant(rho)
    if not np.isfinite(mu) or not np.isfinite(tau) or not np.isfinite(rho):
        raise DomainError("theta arguments must be finite")
    if mu >= smallest_pole(f):
        raise DomainError(
            f"mu = {mu} is not below the smallest pole {smallest_pole(f)} of f"
        )
    fmu = f.eval(mu)
    if branch is None:
        if abs(tau - fmu) <= BRANCH_TOL:
            branch = BRANCH_EQUAL
        elif tau > fmu:
            branch = BRANCH_GREATER
        else:
            raise DomainError(f"tau = {tau} < f(mu) = {fmu}: outside the transform domain")
    if branch not in (BRANCH_EQUAL, BRANCH_GREATER):
        raise DomainError(f"unknown branch flag {branch!r}")
    if branch == BRANCH_GREATER and tau <= fmu:
        raise DomainError(f"branch 'greater' requires tau > f(mu) = {fmu}, got {tau}")

    if branch == BRANCH_EQUAL and f.d == 0 and f.h0 == 0.0:
        return RationalBC.dirichlet()  # constant f identically equal to tau

    locs = [p[0] for p in f.poles]
    roots = []
    if branch == BRANCH_GREATER:
        # one root below the first pole; mu is a guaranteed sub-tau point
        hi = locs[0] if locs else np.inf
        if f.h0 > 0.0 or locs:
            roots.append(_root_of_f_equals(f, tau, mu, hi, lo_valid=True))
        # a pole-free constant f has no root at all; nothing to add
    for a, b in zip(locs, locs[1:]):
        roots.append(_root_of_f_equals(f, tau, a, b))
    if locs and f.h0 > 0.0:
        roots.append(_root_of_f_equals(f, tau, locs[-1], np.inf))

    scale = max(1.0, abs(mu))
    for r in roots:
        if r - mu <= 1e-12 * scale:
            raise SingularityError(
                "theta input sits on the branch boundary: a transformed pole "
                f"collides with mu = {mu}"
            )
    new_poles = tuple((r, (r - mu) / f.eval_deriv(r)) for r in roots)

    if f.h0 > 0.0:
        new_h0 = 0.0
        new_h = rho - 1.0 / f.h0
    else:
        gap = tau - f.h
        if gap <= 0.0:
            raise SingularityError(
                f"degenerate theta data: tau - h = {gap} should be positive"
            )
        new_h0 = 1.0 / gap
        new_h = rho - mu / gap - float(np.sum(f.residues)) / gap**2

    result = RationalBC(h0=new_h0, h=new_h, poles=new_poles)
    expected = index(f) + (1 if branch == BRANCH_GREATER else -1)
    if index(result) != expected:
        raise SingularityError(
            f"theta produced index {index(result)}, expected {expected}; "
            "the input is too close to the branch boundary"
        )
    return result


def theta_up_down(mu: float, tau: float, rho: float, f: RationalBC, branch: str):
    """Numerator/denominator of theta(...) from the explicit polynomial identities.

    Exposed for cross-checking the pole-residue assembly in `theta`; the
    "equal" branch performs the exact division by (lam - mu).
    """
    fu, fd = up_down(f)
    lam_mu = Polynomial([-mu, 1.0])
    if branch == BRANCH_EQUAL:
        up_raw = rho * fu - (lam_mu + Polynomial([tau * rho])) * fd
        down_raw = fu - tau * fd
        up, up_rem = divmod(up_raw, lam_mu)
        down, down_rem = divmod(down_raw, lam_mu)
        return up, down
    up = -rho * fu + (lam_mu + Polynomial([tau * rho])) * fd
    down = -fu + tau * fd
    return up, down
