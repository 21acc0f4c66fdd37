"""Cell propagator for the first-order quasi-derivative system.

The second-order equation is integrated as

    y'  = y1 + s*y
    y1' = -s*y1 - (s^2 + lam)*y

whose coefficient matrix A(x) is traceless with det A = lam independent of s.
On each grid cell A is replaced by the fourth-order Magnus approximant built
from the potential at the two Gauss points of the cell; the cell map is then
the exact exponential of a traceless 2x2 matrix, evaluated with cos/cosh of
the local frequency.  Consequences that the rest of the package relies on:

* exact propagation (up to roundoff) whenever s vanishes, at every lam;
* no error growth switching between the oscillatory and exponential regimes,
  so no change of variables is needed for large positive lam;
* s is only ever sampled, never differentiated;
* the lam dependence of the cell data is affine, so one precomputed
  coefficient table serves every spectral parameter.

The backward map over a cell is the exact inverse of the forward exponential
(det = 1), so integrating from the right endpoint needs no re-derivation.
"""

import numpy as np
from numba import njit

__all__ = [
    "GAUSS_FRACTIONS",
    "cell_coefficients",
    "endpoints_many",
    "trace_single",
]

_SQRT3 = np.sqrt(3.0)

#: Offsets of the two Gauss points inside a cell, as fractions of the width.
GAUSS_FRACTIONS = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)


def cell_coefficients(s_lo: np.ndarray, s_hi: np.ndarray, h: float) -> np.ndarray:
    """Per-cell Magnus data (a, b, c0, c1); the lower-left entry is c0 + lam*c1.

    `s_lo`/`s_hi` hold the potential at the first/second Gauss point of each
    cell and `h` is the (uniform) cell width.
    """
    k = _SQRT3 * h * h / 12.0
    sigma = s_lo + s_hi
    w = s_hi - s_lo
    out = np.empty((s_lo.shape[0], 4))
    out[:, 0] = (0.5 * h + k * w) * sigma
    out[:, 1] = h + 2.0 * k * w
    out[:, 2] = -0.5 * h * (s_lo**2 + s_hi**2) - 2.0 * k * w * s_lo * s_hi
    out[:, 3] = -h + 2.0 * k * w
    return out


@njit(cache=True, nogil=True, inline="always")
def _cosh_sinhc(delta):
    """cosh(w) and sinh(w)/w for w = sqrt(delta), valid for either sign of delta."""
    if delta > 1e-12:
        w = np.sqrt(delta)
        return np.cosh(w), np.sinh(w) / w
    if delta < -1e-12:
        t = np.sqrt(-delta)
        return np.cos(t), np.sin(t) / t
    return 1.0 + delta * (0.5 + delta / 24.0), 1.0 + delta * (1.0 / 6.0 + delta / 120.0)


@njit(cache=True, nogil=True)
def endpoints_many(coef, lams, y0, dy0, backward):
    """Propagate (y, y1) across all cells for a batch of lam values.

    Forward runs map data at x=0 to x=pi; with `backward` the inverse cell
    maps are applied in reverse order, mapping data at x=pi to x=0.
    Returns the pair of endpoint arrays.
    """
    n_lam = lams.shape[0]
    n_cells = coef.shape[0]
    y_out = np.empty(n_lam)
    dy_out = np.empty(n_lam)
    for j in range(n_lam):
        lam = lams[j]
        y = y0[j]
        dy = dy0[j]
        if backward:
            for i in range(n_cells - 1, -1, -1):
                a = coef[i, 0]
                b = coef[i, 1]
                c = coef[i, 2] + lam * coef[i, 3]
                ch, sh = _cosh_sinhc(a * a + b * c)
                y_new = (ch - sh * a) * y - sh * b * dy
                dy = -sh * c * y + (ch + sh * a) * dy
                y = y_new
        else:
            for i in range(n_cells):
                a = coef[i, 0]
                b = coef[i, 1]
                c = coef[i, 2] + lam * coef[i, 3]
                ch, sh = _cosh_sinhc(a * a + b * c)
                y_new = (ch + sh * a) * y + sh * b * dy
                dy = sh * c * y + (ch - sh * a) * dy
                y = y_new
        y_out[j] = y
        dy_out[j] = dy
    return y_out, dy_out


@njit(cache=True, nogil=True)
def trace_single(coef, lam, y0, dy0, backward):
    """Node values of (y, y1) for one lam; node 0 is x=0, node n is x=pi."""
    n_cells = coef.shape[0]
    ys = np.empty(n_cells + 1)
    dys = np.empty(n_cells + 1)
    if backward:
        ys[n_cells] = y0
        dys[n_cells] = dy0
        y = y0
        dy = dy0
        for i in range(n_cells - 1, -1, -1):
            a = coef[i, 0]
            b = coef[i, 1]
            c = coef[i, 2] + lam * coef[i, 3]
            ch, sh = _cosh_sinhc(a * a + b * c)
            y_new = (ch - sh * a) * y - sh * b * dy
            dy = -sh * c * y + (ch + sh * a) * dy
            y = y_new
            ys[i] = y
            dys[i] = dy
    else:
        ys[0] = y0
        dys[0] = dy0
        y = y0
        dy = dy0
        for i in range(n_cells):
            a = coef[i, 0]
            b = coef[i, 1]
            c = coef[i, 2] + lam * coef[i, 3]
            ch, sh = _cosh_sinhc(a * a + b * c)
            y_new = (ch + sh * a) * y + sh * b * dy
            dy = sh * c * y + (ch - sh * a) * dy
            y = y_new
            ys[i + 1] = y
            dys[i + 1] = dy
    return ys, dys
