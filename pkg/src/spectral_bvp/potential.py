"""Zero-mean potential coefficients on [0, pi] and sampled solutions.

Two bases are supported: a truncated Fourier series (frequencies 1, 2, ...
plus an internal constant that restores the zero mean when odd sine terms are
present) and piecewise-linear interpolation of node values.  The rough end of
the class the solver targets is represented through piecewise-linear
coefficients; transformed potentials produced by `darboux_potential` land in
that basis on the grid of the supplied solution trace.

Raw (non-zero-mean) potentials may be constructed and evaluated; problems
reject them until `project_zero_mean` has been applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError, ValidationError

__all__ = [
    "Potential",
    "SolutionTrace",
    "project_zero_mean",
    "darboux_potential",
    "symmetry_defect",
    "composite_boole",
]

PI = np.pi

#: |mean| below this is treated as exactly zero-mean.
MEAN_TOL = 1e-10


def composite_boole(values: np.ndarray, h: float) -> float:
    """Composite Boole quadrature; len(values) - 1 must be divisible by 4."""
    n = len(values) - 1
    if n % 4 != 0:
        raise ValueError(f"Boole rule needs a multiple of 4 intervals, got {n}")
    w = np.empty(n + 1)
    w[0::4] = 14.0  # panel junctions carry 7 from each side
    w[1::2] = 32.0
    w[2::4] = 12.0
    w[0] = w[-1] = 7.0
    return float((2.0 * h / 45.0) * np.dot(w, values))


@dataclass(frozen=True, eq=False)
class Potential:
    """Coefficient s on [0, pi].

    Two serializable bases are supported: truncated Fourier and piecewise
    linear.  A third, internal, variant ("darboux") represents a transformed
    potential -base - 2*v1/v + offset exactly through cubic Hermite
    interpolation of the factor solution v; a sampled representation cannot
    carry the boundary layers these develop without losing the accuracy the
    transform laws are verified at, because the equation squares the
    coefficient.  Closures serialize as a graded piecewise-linear sample.
    """

    kind: str
    cos_coeffs: np.ndarray = field(default=None, repr=False)
    sin_coeffs: np.ndarray = field(default=None, repr=False)
    poly_coeffs: tuple = ()
    offset: float = 0.0
    breakpoints: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)
    base: "Potential" = field(default=None, repr=False)
    v_grid: np.ndarray = field(default=None, repr=False)
    v_y: np.ndarray = field(default=None, repr=False)
    v_qd: np.ndarray = field(default=None, repr=False)
    v_y_slope: np.ndarray = field(default=None, repr=False)
    v_qd_slope: np.ndarray = field(default=None, repr=False)
    mean_value: float = None

    def __post_init__(self):
        if self.kind == "fourier":
            for arr in (self.cos_coeffs, self.sin_coeffs):
                if arr is None or not np.all(np.isfinite(arr)):
                    raise ValidationError("Fourier coefficients must be finite arrays")
        elif self.kind == "piecewise_linear":
            x, v = self.breakpoints, self.values
            if x is None or v is None or len(x) != len(v) or len(x) < 2:
                raise ValidationError("piecewise-linear data needs matching x/v arrays")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
                raise ValidationError("piecewise-linear samples must be finite")
            if abs(x[0]) > 1e-12 or abs(x[-1] - PI) > 1e-12:
                raise ValidationError("breakpoints must start at 0 and end at pi")
            if np.any(np.diff(x) <= 0):
                raise ValidationError("breakpoints must strictly increase")
        elif self.kind == "darboux":
            if self.base is None or self.v_grid is None:
                raise ValidationError("transform closure needs its base and trace data")
        else:
            raise ValidationError(f"unknown potential kind {self.kind!r}")

    # -- factories ---------------------------------------------------------

    @classmethod
    def zero(cls) -> "Potential":
        return cls.fourier([], [])

    @classmethod
    def fourier(cls, cos_coeffs, sin_coeffs, offset: float = 0.0, poly=()) -> "Potential":
        """offset + a_k cos(kx) + b_k sin(kx) (k from 1), plus an optional
        zero-mean polynomial part p1*(x - pi/2) + p2*((x - pi/2)^2 - pi^2/12)
        that captures the non-periodic component of smooth coefficients."""
        poly = tuple(float(c) for c in poly)
        if len(poly) > 2:
            raise ValidationError("at most two polynomial coefficients are supported")
        return cls(
            kind="fourier",
            cos_coeffs=np.asarray(cos_coeffs, dtype=float),
            sin_coeffs=np.asarray(sin_coeffs, dtype=float),
            poly_coeffs=poly,
            offset=float(offset),
        )

    @classmethod
    def piecewise_linear(cls, breakpoints, values) -> "Potential":
        return cls(
            kind="piecewise_linear",
            breakpoints=np.asarray(breakpoints, dtype=float),
            values=np.asarray(values, dtype=float),
        )

    # -- evaluation ---------------------------------------------------------

    def eval(self, x):
        """Pointwise value; x must lie in [0, pi] (tiny roundoff slack allowed)."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < -1e-12) or np.any(x_arr > PI + 1e-12):
            raise DomainError("potential evaluated outside [0, pi]")
        x_arr = np.clip(x_arr, 0.0, PI)
        if self.kind == "fourier":
            out = np.full_like(x_arr, self.offset)
            for k, a in enumerate(self.cos_coeffs, start=1):
                if a != 0.0:
                    out = out + a * np.cos(k * x_arr)
            for k, b in enumerate(self.sin_coeffs, start=1):
                if b != 0.0:
                    out = out + b * np.sin(k * x_arr)
            if self.poly_coeffs:
                u = x_arr - PI / 2
                out = out + self.poly_coeffs[0] * u
                if len(self.poly_coeffs) > 1:
                    out = out + self.poly_coeffs[1] * (u * u - PI * PI / 12.0)
        elif self.kind == "piecewise_linear":
            out = np.interp(x_arr, self.breakpoints, self.values)
        else:
            v = _hermite_eval(self.v_grid, self.v_y, self.v_y_slope, x_arr)
            qd = _hermite_eval(self.v_grid, self.v_qd, self.v_qd_slope, x_arr)
            out = self.offset - self.base.eval(x_arr) - 2.0 * qd / v
        return float(out) if np.ndim(x) == 0 else out

    __call__ = eval

    @property
    def mean(self) -> float:
        """Mean value over [0, pi].

        Exact for the Fourier and piecewise-linear bases; transform closures
        carry the value cached at construction (their additive constant is
        adjusted there so it vanishes).
        """
        if self.kind == "fourier":
            acc = self.offset * PI
            for k, b in enumerate(self.sin_coeffs, start=1):
                acc += b * (1.0 - (-1.0) ** k) / k
            return acc / PI
        if self.kind == "piecewise_linear":
            return float(np.trapezoid(self.values, self.breakpoints)) / PI
        return self.mean_value if self.mean_value is not None else self._quadrature_mean()

    def _quadrature_mean(self) -> float:
        n = len(self.v_grid) - 1
        n -= n % 4
        x = np.linspace(0.0, PI, n + 1)
        return composite_boole(self.eval(x), PI / n) / PI

    @property
    def is_zero_mean(self) -> bool:
        return abs(self.mean) <= MEAN_TOL

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "fourier":
            rec = {
                "type": "fourier",
                "cos": list(map(float, self.cos_coeffs)),
                "sin": list(map(float, self.sin_coeffs)),
            }
            if self.offset != 0.0:
                rec["offset"] = self.offset
            if self.poly_coeffs:
                rec["poly"] = list(self.poly_coeffs)
            return rec
        if self.kind == "darboux":
            # closures export as a graded piecewise-linear sample; the extra
            # endpoint points keep the boundary layers representable
            h = float(np.min(np.diff(self.v_grid)))
            zone = np.geomspace(h / 16.0, 0.4, 400)
            xs = np.unique(np.concatenate([self.v_grid, zone, PI - zone]))
            xs = xs[(xs >= 0.0) & (xs <= PI)]
            return {"type": "piecewise_linear",
                    "x": list(map(float, xs)), "v": list(map(float, self.eval(xs)))}
        return {
            "type": "piecewise_linear",
            "x": list(map(float, self.breakpoints)),
            "v": list(map(float, self.values)),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Potential":
        if not isinstance(obj, dict) or "type" not in obj:
            raise ValidationError("potential record needs a 'type' tag")
        if obj["type"] == "fourier":
            return cls.fourier(obj.get("cos", []), obj.get("sin", []),
                               obj.get("offset", 0.0), obj.get("poly", ()))
        if obj["type"] == "piecewise_linear":
            return cls.piecewise_linear(obj["x"], obj["v"])
        raise ValidationError(f"unknown potential type {obj['type']!r}")


def project_zero_mean(raw: Potential) -> Potential:
    """Subtract the mean value, leaving |mean| below 1e-10."""
    import dataclasses

    if raw.kind == "darboux":
        m = raw._quadrature_mean()
        if not np.isfinite(m):
            raise ValidationError("transform closure has non-finite values")
        return dataclasses.replace(raw, offset=raw.offset - m, mean_value=0.0)
    m = raw.mean
    if not np.isfinite(m):
        raise ValidationError("potential has non-finite samples")
    if m == 0.0:
        return raw
    if raw.kind == "fourier":
        return Potential.fourier(raw.cos_coeffs, raw.sin_coeffs, raw.offset - m, raw.poly_coeffs)
    return Potential.piecewise_linear(raw.breakpoints, raw.values - m)


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    """Sampled solution: y and its quasi-derivative y' - s*y on a grid over [0, pi]."""

    grid: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    quasi_deriv: np.ndarray = field(repr=False)
    lam: float = 0.0

    def __post_init__(self):
        g = self.grid
        if abs(g[0]) > 1e-12 or abs(g[-1] - PI) > 1e-12 or np.any(np.diff(g) <= 0):
            raise ValidationError("trace grid must increase from 0 to pi")
        if len(self.y) != len(g) or len(self.quasi_deriv) != len(g):
            raise ValidationError("trace arrays must match the grid length")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.quasi_deriv))):
            raise ValidationError("trace values must be finite")

    @property
    def y0(self) -> float:
        return float(self.y[0])

    @property
    def y_pi(self) -> float:
        return float(self.y[-1])

    @property
    def qd0(self) -> float:
        return float(self.quasi_deriv[0])

    @property
    def qd_pi(self) -> float:
        return float(self.quasi_deriv[-1])

    def scaled(self, factor: float) -> "SolutionTrace":
        return SolutionTrace(self.grid, factor * self.y, factor * self.quasi_deriv, self.lam)

    def combined(self, other: "SolutionTrace", alpha: float, beta: float) -> "SolutionTrace":
        """alpha*self + beta*other; both traces must share grid and lam."""
        if self.lam != other.lam or len(self.grid) != len(other.grid):
            raise DomainError("can only combine traces at the same lam on the same grid")
        return SolutionTrace(
            self.grid,
            alpha * self.y + beta * other.y,
            alpha * self.quasi_deriv + beta * other.quasi_deriv,
            self.lam,
        )


def _hermite_eval(grid, vals, slopes, x):
    """Cubic Hermite interpolation with supplied derivative data."""
    idx = np.clip(np.searchsorted(grid, x) - 1, 0, len(grid) - 2)
    h = grid[idx + 1] - grid[idx]
    t = (x - grid[idx]) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return (h00 * vals[idx] + h * h10 * slopes[idx]
            + h01 * vals[idx + 1] + h * h11 * slopes[idx + 1])


def darboux_potential(s: Potential, v: SolutionTrace) -> Potential:
    """Transformed potential -s - 2*v1/v + (2/pi)*log(v(pi)/v(0)).

    `v` must be a zero-free solution trace.  The result is a closure over the
    trace: the ratio is re-evaluated at arbitrary points through cubic
    Hermite interpolation of v and its quasi-derivative, whose slopes come
    from the differential system itself.  The trace stays smooth on the grid
    scale even where the ratio develops an endpoint boundary layer, so the
    closure keeps full accuracy there; any sampled carrier would lose it,
    and the equation amplifies such errors by the local size of the
    coefficient.  The additive constant is adjusted so the mean vanishes.
    """
    y = v.y
    floor = 1e-12 * np.max(np.abs(y))
    if abs(v.y0) <= floor or abs(v.y_pi) <= floor or v.y0 * v.y_pi < 0.0:
        raise SingularityError("trace endpoints vanish or have opposite signs")
    if np.any(np.abs(y) <= floor) or np.any(y[:-1] * y[1:] < 0.0):
        raise SingularityError("trace crosses zero inside (0, pi)")
    const = (2.0 / PI) * np.log(v.y_pi / v.y0)

    grid = v.grid
    s_nodes = s.eval(grid)
    y_slope = v.quasi_deriv + s_nodes * y
    qd_slope = -s_nodes * v.quasi_deriv - (s_nodes**2 + v.lam) * y
    mids = 0.5 * (grid[:-1] + grid[1:])
    if np.any(_hermite_eval(grid, y, y_slope, mids) * np.sign(v.y0) <= 0.0):
        raise SingularityError("trace crosses zero between grid nodes")
    out = Potential(
        kind="darboux",
        offset=float(const),
        base=s,
        v_grid=grid,
        v_y=y,
        v_qd=v.quasi_deriv,
        v_y_slope=y_slope,
        v_qd_slope=qd_slope,
    )
    return project_zero_mean(out)


def symmetry_defect(s: Potential, n_points: int = 4096) -> float:
    """L2 norm of x -> s(x) + s(pi - x); zero exactly for symmetric coefficients."""
    x = np.linspace(0.0, PI, n_points + 1)
    g = s.eval(x) + s.eval(PI - x)
    return float(np.sqrt(composite_boole(g**2, PI / n_points)))
