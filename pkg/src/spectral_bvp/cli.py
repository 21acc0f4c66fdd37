"""Command-line interface: file-driven solvers and the verification harness.

All file formats are JSON (problems, spectral data, reports) and CSV (plot
data); numbers are serialized with 17 significant digits so that outputs are
byte-identical across runs with the same seed and round-trip exactly.

Exit codes: 0 success, 1 verification failure, 2 input/schema violation,
3 numerical failure inside a solver.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError, SpectralError, ValidationError
from .hn_algebra import RationalBC, pole_count, theta
from .potential import PI, Potential, composite_boole, project_zero_mean
from .quasi_ode import phi, solution_C, solution_S, wronskian
from .spectrum import (
    Problem,
    SpectralData,
    beta,
    char_deriv,
    char_function,
    eigenvalues,
    hadamard_calibration,
    hadamard_product,
    norming_constant,
    oscillation_count,
    spectral_data,
)
from .transforms import reduce_chain, spectral_map_forward, t_hat, t_tilde
from .inverse import (
    TwoSpectraInput,
    inverse_spectral_data,
    symmetric_inverse,
    two_problem_diagnostics,
    two_spectra_inverse,
)

__all__ = ["main", "worker_count"]


def worker_count() -> int:
    """Worker cap for the verification pool, from SPECTRAL_BVP_THREADS."""
    env = os.environ.get("SPECTRAL_BVP_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"SPECTRAL_BVP_THREADS must be an integer, got {env!r}")
    return min(4, os.cpu_count() or 1)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


class _Float17Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # route every float through the 17-significant-digit formatter
        for chunk in super().iterencode(_round_floats(o), _one_shot=_one_shot):
            yield chunk


def _round_floats(o):
    if isinstance(o, float):
        return float(_fmt(o))
    if isinstance(o, dict):
        return {k: _round_floats(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_round_floats(v) for v in o]
    if isinstance(o, (np.floating, np.integer)):
        return _round_floats(float(o))
    if isinstance(o, np.ndarray):
        return _round_floats(o.tolist())
    return o


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_round_floats(obj), fh, indent=2, default=_json_default)
        fh.write("\n")


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read JSON input: {exc}") from exc


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, (str, int)) else _fmt(c) for c in row])


# ---------------------------------------------------------------------------
# commands


def _cmd_spectrum(args) -> int:
    p = Problem.from_json(_load_json(args.input))
    data = spectral_data(p, args.count)
    L = p.L
    rows = []
    for n, (lam, gam) in enumerate(zip(data.eigenvalues, data.norming_constants)):
        resid = np.sqrt(lam) - (n - L) if lam >= 0 else float("nan")
        rows.append((n, lam, gam, resid))
    _write_csv(args.out, ["n", "eigenvalue", "norming_constant", "sqrt_residual"], rows)
    if args.chi_out:
        lo = min(-5.0, data.eigenvalues[0] - 5.0)
        grid = np.linspace(lo, data.eigenvalues[-1] + 5.0, args.chi_points)
        _write_csv(args.chi_out, ["lambda", "chi"],
                   [(lam, char_function(p, lam)) for lam in grid])
    if args.trace_out:
        rows = []
        for n, lam in enumerate(data.eigenvalues):
            tr = phi(p, lam)
            stride = max(1, len(tr.grid) // 512)
            for x, y, dy in zip(tr.grid[::stride], tr.y[::stride], tr.quasi_deriv[::stride]):
                rows.append((n, x, y, dy))
        _write_csv(args.trace_out, ["n", "x", "y", "quasi_derivative"], rows)
    return 0


def _cmd_oscillation(args) -> int:
    p = Problem.from_json(_load_json(args.input))
    lams = eigenvalues(p, args.count)
    rows = []
    for n, lam in enumerate(lams):
        c = oscillation_count(p, lam)
        rows.append((n, lam, c, pole_count(p.f, lam), pole_count(p.F, lam)))
    _write_csv(args.out, ["n", "eigenvalue", "zeros", "poles_f", "poles_F"], rows)
    return 0


def _cmd_transform_hat(args) -> int:
    p = Problem.from_json(_load_json(args.input))
    q, rec = t_hat(p)
    _write_json(args.out, {"problem": q.to_json(), "record": rec.to_json()})
    return 0


def _cmd_transform_tilde(args) -> int:
    obj = _load_json(args.input)
    try:
        mu, nu = float(obj["mu"]), float(obj["nu"])
        p = Problem.from_json(obj["problem"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{args.input}: expected {{mu, nu, problem}}: {exc}") from exc
    q = t_tilde(mu, nu, p)
    _write_json(args.out, {"problem": q.to_json()})
    return 0


def _cmd_chain(args) -> int:
    p = Problem.from_json(_load_json(args.input))
    _write_json(args.out, reduce_chain(p).to_json())
    return 0


def _cmd_inverse_data(args) -> int:
    data = SpectralData.from_json(_load_json(args.input))
    p = inverse_spectral_data(data, tol_eig=args.tol_eig, tol_gamma=args.tol_fit, seed=args.seed)
    _write_json(args.out, p.to_json())
    return 0


def _cmd_inverse_two_spectra(args) -> int:
    inp = TwoSpectraInput.from_json(_load_json(args.input))
    p, alpha = two_spectra_inverse(inp, tol_eig=args.tol_eig, tol_gamma=args.tol_fit, seed=args.seed)
    _write_json(args.out, {"problem": p.to_json(), "alpha": alpha})
    return 0


def _cmd_inverse_symmetric(args) -> int:
    obj = _load_json(args.input)
    try:
        lams, L = obj["lambdas"], int(obj["L"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{args.input}: expected {{lambdas, L}}: {exc}") from exc
    p = symmetric_inverse(lams, L, tol_eig=args.tol_eig, tol_gamma=args.tol_fit, seed=args.seed)
    _write_json(args.out, p.to_json())
    return 0


def _cmd_diagnose(args) -> int:
    obj = _load_json(args.input)
    try:
        p = Problem.from_json(obj["problem"])
        alpha = float(obj["alpha"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{args.input}: expected {{problem, alpha}}: {exc}") from exc
    _write_json(args.out, two_problem_diagnostics(p, alpha, count=args.count))
    return 0


# ---------------------------------------------------------------------------
# verification suite


def _random_problem(rng: np.random.Generator, max_ind: int = 2) -> Problem:
    cos = rng.uniform(-0.3, 0.3, size=3)
    sin = rng.uniform(-0.3, 0.3, size=2)
    s = project_zero_mean(Potential.fourier(cos, sin))

    def random_bc() -> RationalBC:
        ind = int(rng.integers(-1, max_ind + 1))
        if ind == -1:
            return RationalBC.dirichlet()
        h = float(rng.uniform(-1.0, 1.0))
        if ind == 0:
            return RationalBC.constant(h)
        if ind == 1:
            return RationalBC.affine(rng.uniform(0.3, 1.5), h)
        loc = float(rng.uniform(2.0, 12.0))
        res = float(rng.uniform(0.5, 2.0))
        h0 = float(rng.uniform(0.3, 1.5)) if ind == 3 else 0.0
        return RationalBC.rational(h0, h, [(loc, res)])

    return Problem(s, random_bc(), random_bc())


def _check_closed_form_spectra() -> str | None:
    s0 = Potential.zero()
    D, N0 = RationalBC.dirichlet(), RationalBC.constant(0.0)
    cases = [
        (Problem(s0, D, D), (np.arange(1, 9) ** 2).astype(float)),
        (Problem(s0, N0, N0), (np.arange(0, 8) ** 2).astype(float)),
        (Problem(s0, D, N0), (np.arange(0, 8) + 0.5) ** 2),
    ]
    for p, expect in cases:
        got = eigenvalues(p, 8)
        if np.max(np.abs(got - expect) / np.maximum(1.0, expect)) > 1e-8:
            return f"spectrum of ({p.ind_f}, {p.ind_F}) off: {got} vs {expect}"
    return None


def _check_theta_involution(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    for _ in range(25):
        d = int(rng.integers(0, 3))
        locs = np.sort(rng.uniform(1.0, 12.0, size=d))
        while d > 1 and np.min(np.diff(locs)) < 0.5:
            locs = np.sort(rng.uniform(1.0, 12.0, size=d))
        f = RationalBC.rational(
            float(rng.uniform(0, 1.2)) if rng.uniform() < 0.5 else 0.0,
            float(rng.uniform(-1, 1)),
            [(float(a), float(rng.uniform(0.3, 2.0))) for a in locs],
        )
        mu = float(rng.uniform(-3.0, min([p for p, _ in f.poles], default=5.0) - 1.0))
        tau = f.eval(mu) + float(rng.uniform(0.1, 2.0))
        rho = float(rng.uniform(-2.0, 2.0))
        fh = theta(mu, tau, rho, f)
        fb = theta(mu, rho, tau, fh)
        if abs(fb.h0 - f.h0) > 1e-9 or abs(fb.h - f.h) > 1e-9:
            return f"involution broke affine data of {f}"
        if f.poles and np.max(np.abs(np.array(fb.poles) - np.array(f.poles))) > 1e-9:
            return f"involution broke poles of {f}"
    return None


def _check_wronskian(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    s = project_zero_mean(Potential.fourier(rng.uniform(-0.4, 0.4, 3), []))
    for lam in (-2.0, 3.0, 17.0):
        C, S = solution_C(s, lam), solution_S(s, lam)
        w = C.y * S.quasi_deriv - C.quasi_deriv * S.y
        if np.max(np.abs(w - 1.0)) > 1e-8:
            return f"Wronskian drift {np.max(np.abs(w - 1.0))} at lam={lam}"
        if abs(wronskian(C, S) - 1.0) > 1e-12:
            return "endpoint Wronskian wrong"
    return None


def _check_identity_chain(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    for _ in range(2):
        p = _random_problem(rng)
        data = spectral_data(p, 6)
        for n, lam in enumerate(data.eigenvalues):
            lhs = char_deriv(p, lam)
            rhs = beta(p, lam) * data.norming_constants[n]
            if abs(lhs / rhs - 1.0) > 1e-6:
                return f"derivative identity off by {lhs / rhs - 1.0} at n={n}"
    return None


def _check_oscillation(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    p = _random_problem(rng)
    lams = eigenvalues(p, 8)
    for n, lam in enumerate(lams):
        total = oscillation_count(p, lam) + pole_count(p.f, lam) + pole_count(p.F, lam)
        if total != n:
            return f"oscillation count {total} != {n}"
    return None


def _check_hadamard() -> str | None:
    eigs = (np.arange(0, 200) + 0.5) ** 2
    for lam in (-5.0, 3.3, 42.0):
        got = hadamard_product(eigs, -0.5, lam)
        want = -np.cos(PI * np.sqrt(complex(lam))).real
        if abs(got - want) > 1e-5 * max(1.0, abs(want)):
            return f"half-integer product off at lam={lam}"
    cal = hadamard_calibration((np.arange(1, 201) ** 2).astype(float), -1.0)
    if abs(cal["constant"] - PI) > 1e-6 or cal["spread"] > 1e-6:
        return f"product calibration {cal['constant']} not pi"
    return None


def _check_transform_map(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    p = _random_problem(rng, max_ind=1)
    if p.ind_f + p.ind_F < -1:
        p = Problem(p.s, RationalBC.constant(0.0), p.F)
    data = spectral_data(p, 8)
    q, rec = t_hat(p)
    mapped = spectral_map_forward(data, rec)
    direct = spectral_data(q, len(mapped))
    if np.max(np.abs(mapped.eigenvalues - direct.eigenvalues)
              / np.maximum(1.0, np.abs(direct.eigenvalues))) > 1e-6:
        return "mapped eigenvalues disagree with the transformed problem"
    if np.max(np.abs(mapped.norming_constants / direct.norming_constants - 1.0)) > 1e-6:
        return "mapped norming constants disagree"
    return None


def _check_round_trip(seed: int) -> str | None:
    rng = np.random.default_rng(seed)
    p = _random_problem(rng, max_ind=1)
    if p.ind_f + p.ind_F < -1:
        p = Problem(p.s, RationalBC.constant(0.0), p.F)
    from .transforms import TRANSFORM_CELLS

    lam0 = float(eigenvalues(p, 1, n_cells=TRANSFORM_CELLS)[0])
    gam0 = norming_constant(p, lam0, TRANSFORM_CELLS)
    q, _ = t_hat(p, lam0=lam0)
    branch = 1 if not (p.f.is_dirichlet or p.F.is_dirichlet) else (2 if p.f.is_dirichlet else 3)
    back = t_tilde(lam0, gam0, q, branch=branch)
    xs = np.linspace(0.0, PI, 4097)
    err = np.sqrt(composite_boole((back.s.eval(xs) - p.s.eval(xs)) ** 2, PI / 4096))
    if err > 1e-6:
        return f"round-trip potential error {err}"
    return None


_FAST_CHECKS = [
    ("closed_form_spectra", lambda seed: _check_closed_form_spectra()),
    ("theta_involution", _check_theta_involution),
    ("wronskian_constancy", _check_wronskian),
    ("derivative_identity", _check_identity_chain),
    ("oscillation_bookkeeping", _check_oscillation),
    ("infinite_product", lambda seed: _check_hadamard()),
]

_ALL_CHECKS = _FAST_CHECKS + [
    ("transform_spectral_map", _check_transform_map),
    ("transform_round_trip", _check_round_trip),
]


def _cmd_verify(args) -> int:
    checks = _ALL_CHECKS if args.suite == "all" else _FAST_CHECKS
    results = {}
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = {
            name: pool.submit(fn, args.seed + i)
            for i, (name, fn) in enumerate(checks)
        }
        for name, fut in futures.items():
            try:
                results[name] = fut.result()
            except Exception as exc:  # a crash is a failure with its message
                results[name] = f"{type(exc).__name__}: {exc}"
    width = max(len(n) for n in results)
    failing = []
    for name, failure in results.items():
        status = "PASS" if failure is None else "FAIL"
        print(f"{name:<{width}}  {status}" + (f"  ({failure})" if failure else ""))
        if failure is not None:
            failing.append(name)
    if failing:
        print("failing properties: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spectral-bvp",
        description="Direct and inverse spectral computations for "
                    "eigenvalue-dependent boundary conditions",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_input=True, **extra):
        sp = sub.add_parser(name)
        if needs_input:
            sp.add_argument("input", help="input JSON file")
        sp.add_argument("--out", required=needs_input, default=None, help="output file")
        sp.add_argument("--count", type=int, default=15)
        sp.add_argument("--tol-eig", type=float, default=1e-6, dest="tol_eig")
        sp.add_argument("--tol-fit", type=float, default=1e-5, dest="tol_fit")
        sp.add_argument("--seed", type=int, default=0)
        for flag, kw in extra.items():
            sp.add_argument(flag, **kw)
        sp.set_defaults(fn=fn)
        return sp

    add("spectrum", _cmd_spectrum,
        **{"--chi-out": dict(dest="chi_out", default=None),
           "--chi-points": dict(dest="chi_points", type=int, default=200),
           "--trace-out": dict(dest="trace_out", default=None)})
    add("oscillation", _cmd_oscillation)
    add("transform-hat", _cmd_transform_hat)
    add("transform-tilde", _cmd_transform_tilde)
    add("chain", _cmd_chain)
    add("inverse-data", _cmd_inverse_data)
    add("inverse-two-spectra", _cmd_inverse_two_spectra)
    add("inverse-symmetric", _cmd_inverse_symmetric)
    add("diagnose-two-problems", _cmd_diagnose)
    sp = add("verify", _cmd_verify, needs_input=False)
    sp.add_argument("--suite", choices=("fast", "all"), default="fast")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValidationError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except SpectralError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
