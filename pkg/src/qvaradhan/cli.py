"""Command-line interface.

Observables and Hamiltonians are read from matrix JSON files. Functions
``f`` are polynomials given by ascending coefficients, ``-f 0,0,1`` meaning
``u^2``. Grids are ``lo:hi:count``; write ``--t=-2:2:5`` when ``lo`` is
negative. Output is CSV (JSON for ``decompose``) on stdout or, atomically, to
``--out``.

Exit status: 0 success, 2 usage or input error, 3 resource cap, 4 solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from . import config
from .config import ResourceError, SolverError
from .io import MatrixFormatError, csv_text, load_matrix, write_output

EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_SOLVER = 4


class UsageError(Exception):
    pass


# -- argument parsing helpers --------------------------------------------------

def _poly(text: str):
    try:
        coef = [float(c) for c in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}")
    if not coef or not all(math.isfinite(c) for c in coef):
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}")
    return coef


def _as_function(coef):
    c = np.array(coef)
    return lambda u: P.polyval(u, c)


def _grid(text: str) -> np.ndarray:
    """``lo:hi:count`` or a comma list."""
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return np.linspace(float(lo), float(hi), int(count))
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def _ints(text: str) -> list[int]:
    """``a:b`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")


def _floats(text: str) -> list[float]:
    return [float(x) for x in _grid(text)]


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _matrices(args):
    Xs = [load_matrix(p) for p in args.X]
    H = load_matrix(args.H) if args.H else None
    return Xs, H


def _product(axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# -- commands ------------------------------------------------------------------

def cmd_cgf(args) -> str:
    from .cumulant import CumulantGF, moments

    Xs, H = _matrices(args)
    t = args.t
    if t.size == 0:
        raise UsageError("empty t-grid")
    c = CumulantGF(tuple(Xs), base=H, normalized=args.normalized)
    T = _product([t] * c.q)
    C, G, _ = moments(c, T, order=1)
    header = [f"t{j + 1}" for j in range(c.q)] + ["C"] + [f"grad{j + 1}" for j in range(c.q)]
    return csv_text(header, (list(T[i]) + [C[i]] + list(G[i]) for i in range(len(T))))


def cmd_rate(args) -> str:
    from .cumulant import CumulantGF
    from .rate import rate_values

    Xs, H = _matrices(args)
    if args.u.size == 0:
        raise UsageError("empty u-grid")
    c = CumulantGF(tuple(Xs), base=H, normalized=args.normalized)
    U = _product([args.u] * c.q)
    I, _, status = rate_values(c, U)
    header = [f"u{j + 1}" for j in range(c.q)] + ["I", "status"]
    return csv_text(header, (list(U[i]) + [I[i], status[i]] for i in range(len(U))))


def _functions(args, q):
    if not args.f:
        raise UsageError("missing -f")
    if len(args.f) != q:
        raise UsageError(f"need one -f per observable ({q}), got {len(args.f)}")
    return [_as_function(c) for c in args.f]


def cmd_varsolve(args) -> str:
    from .varsolve import multi_observable_value, prv_value

    Xs, H = _matrices(args)
    fs = _functions(args, len(Xs))
    if H is not None:
        if len(Xs) != 1:
            raise UsageError("--H is supported with a single observable")
        res = prv_value(Xs[0], H, fs[0], grid_points=args.grid or 2001)
    else:
        res = multi_observable_value(Xs, fs, grid_points=args.grid or 41)
    q = len(res.optimizer)
    header = ["value"] + [f"u{j + 1}" for j in range(q)] + ["grid_points", "refinement_radius"]
    return csv_text(header, [[res.value] + list(res.optimizer) + [res.grid_points, res.refinement_radius]])


def cmd_verify_prv(args) -> str:
    from .finite_n import convergence_rows, rows_to_csv
    from .varsolve import prv_value

    Xs, H = _matrices(args)
    if len(Xs) != 1:
        raise UsageError("verify-prv takes exactly one -X")
    if H is None:
        raise UsageError("verify-prv needs --H")
    (f,) = _functions(args, 1)
    ref = prv_value(Xs[0], H, f).value
    rows = convergence_rows(Xs[0], H, f, args.n, ref, args.trotter)
    return rows_to_csv(rows)


def cmd_qsp(args) -> str:
    from .linalg import apply_function, log_trace_exp
    from .qsp import path_estimates

    Xs, H = _matrices(args)
    if len(Xs) != 1:
        raise UsageError("qsp-mc takes exactly one -X")
    X = Xs[0]
    if H is None:
        H = np.zeros_like(X)
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    (f,) = _functions(args, 1) if args.f else (lambda u: 0.0 * u,)
    w = path_estimates(H, X, f, args.samples, args.seed, workers=args.threads)
    est = complex(w.mean())
    stderr = float(w.real.std(ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0
    exact = dist = None
    if X.shape[0] <= 16:
        exact = math.exp(log_trace_exp(apply_function(X, f) - H))
        diff = abs(est.real - exact)
        # rounding-level differences count as exact agreement
        dist = 0.0 if diff <= 1e-12 * max(1.0, exact) else (diff / stderr if stderr > 0 else math.inf)
    header = ["estimate_re", "estimate_im", "stderr", "samples", "exact", "sigma_distance"]
    return csv_text(header, [[est.real, est.imag, stderr, args.samples, exact, dist]])


def _parse_term(text: str):
    try:
        exps, coef = text.split(":")
        exps = [int(a) for a in exps.split(",")]
        return exps, Fraction(coef)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad term {text!r}; expected e.g. 3,3:1 or 2,0:-1/2")


def cmd_decompose(args) -> str:
    from .sympoly import decompose_symmetric

    poly = list(args.term or [])
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            for t in obj["monomials"]:
                coef = t["coef"]
                poly.append((t["exponents"], Fraction(*coef) if isinstance(coef, list) else Fraction(coef)))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed polynomial JSON: {exc!r}")
    if not poly:
        raise UsageError("no monomials given (use --term or --input)")
    for exps, _ in poly:
        if sum(exps) == 0:
            raise UsageError("degree-0 monomials have no power decomposition")
    dec = decompose_symmetric(poly)
    return json.dumps(dec.to_json(), sort_keys=True) + "\n"


ISING_HEADER = ["beta", "h", "f_value", "x", "z", "route_agreement"]
HEISENBERG_HEADER = ["beta", "J", "Delta", "f_value", "rho", "z"]


def cmd_model(args) -> str:
    from . import models

    if any(not b > 0 for b in args.beta):
        raise UsageError("beta must be positive")
    rows = []
    if args.kind == "ising":
        for b in args.beta:
            for h in args.h:
                sols = {r: models.ising_solve(b, h, r) for r in models.ROUTES}
                vals = [s.value for s in sols.values()]
                x, z = sols["two_var"].optimizer
                rows.append([b, h, sols["polar"].value, x, z, max(vals) - min(vals)])
        return csv_text(ISING_HEADER, rows)
    for b in args.beta:
        for J in args.J:
            for D in args.Delta:
                sol = models.heisenberg_solve(b, J, D)
                rows.append([b, J, D, sol.value, sol.optimizer[0], sol.optimizer[1]])
    return csv_text(HEISENBERG_HEADER, rows)


COMMANDS = {
    "cgf": cmd_cgf,
    "rate": cmd_rate,
    "varsolve": cmd_varsolve,
    "verify-prv": cmd_verify_prv,
    "qsp-mc": cmd_qsp,
    "decompose": cmd_decompose,
    "model": cmd_model,
}


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help="Newton convergence tolerance")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path (default stdout)")
    common.add_argument("--threads", type=_positive_int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="qvaradhan", description=__doc__.splitlines()[0],
                                     parents=[common], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], allow_abbrev=False, **kw)

    def matrices(p, need_x=True):
        p.add_argument("-X", action="append", required=need_x, default=None, metavar="FILE",
                       help="observable matrix JSON (repeat for several)")
        p.add_argument("--H", metavar="FILE", help="base Hamiltonian matrix JSON")

    p = add("cgf", help="tabulate the cumulant generating function")
    matrices(p)
    p.add_argument("--t", type=_grid, required=True, help="lo:hi:count, shared by every axis")
    p.add_argument("--normalized", action="store_true")

    p = add("rate", help="tabulate the rate function")
    matrices(p)
    p.add_argument("--u", type=_grid, required=True, help="lo:hi:count, shared by every axis")
    p.add_argument("--normalized", action="store_true")

    p = add("varsolve", help="variational supremum of f(u) - I(u)")
    matrices(p)
    p.add_argument("-f", type=_poly, action="append", help="ascending polynomial coefficients")
    p.add_argument("--grid", type=_positive_int)

    p = add("verify-prv", help="finite-n traces against the variational value")
    matrices(p)
    p.add_argument("-f", type=_poly, action="append", help="ascending polynomial coefficients")
    p.add_argument("--n", type=_ints, default=[2, 4, 6, 8], help="a:b or comma list")
    p.add_argument("--trotter", type=_ints, default=None, help="Trotter step counts")

    p = add("qsp-mc", help="jump-path Monte Carlo for Tr e^{f(X)-H}")
    matrices(p)
    p.add_argument("-f", type=_poly, action="append", help="ascending polynomial coefficients")
    p.add_argument("--samples", type=int, default=100000)

    p = add("decompose", help="powers-of-linear-forms decomposition")
    p.add_argument("--term", type=_parse_term, action="append",
                   help="exponents:coefficient, e.g. 3,3:1")
    p.add_argument("--input", metavar="FILE",
                   help='JSON {"monomials": [{"exponents": [...], "coef": [num, den]}]}')

    p = add("model", help="free-energy tables of the worked models")
    p.add_argument("kind", choices=["ising", "heisenberg"])
    p.add_argument("--beta", type=_floats, default=[1.0])
    p.add_argument("--h", type=_floats, default=[0.0])
    p.add_argument("--J", type=_floats, default=[1.0])
    p.add_argument("--Delta", type=_floats, default=[1.0])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("tol", None), ("out", None), ("threads", 1)):
        if not hasattr(args, name):
            setattr(args, name, default)
    saved = config.TOL
    try:
        if args.tol is not None:
            if not args.tol > 0:
                raise UsageError("--tol must be positive")
            config.configure(newton=args.tol)
        text = COMMANDS[args.command](args)
        write_output(text, args.out)
        return 0
    except (UsageError, MatrixFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        config.TOL = saved


if __name__ == "__main__":
    sys.exit(main())
