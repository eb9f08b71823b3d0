"""Command-line front end.

Every subcommand prints one JSON document on standard output and writes only
the files named by its flags.  Exit status: 0 on success, 1 for usage errors
(bad flags, unwritable outputs, unreadable inputs, unsupported requests), 2
for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .closed_forms import H_field, h_field
from .contour import export_contour
from .domains import DOMAINS, get_domain, get_polytope
from .errors import (ASLError, BracketError, ConvexityError, FitError, NearBoundaryError,
                     PathError, ProbeError, SingularityError, SolverError)
from .fubini_pick import profile_boundary
from .soliton import solve_alpha
from .solver import SolverConfig, solve_phi, solve_psi
from .transforms import SampledField, composite_psi, legendre_transform_grid
from .verification import CASES, residual_suite

NUMERICAL_ERRORS = (SolverError, ConvexityError, FitError, SingularityError, NearBoundaryError,
                    PathError, ProbeError, BracketError)
DOMAIN_CHOICES = tuple(d.name for d in DOMAINS.values())
# (x, y) half-width sampled for the transform of h
HSTAR_EXTENT = 4.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _threads_default():
    raw = os.environ.get("ASL_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ASL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"ASL_THREADS must be a positive integer, got {raw!r}")
    return n


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def build_parser():
    p = _Parser(prog="asl", description="Dual Monge-Ampere potentials on toric domains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $ASL_THREADS or 1); never changes outputs")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("domains", help="summarise the domains and polygons")
    d.add_argument("--domain", choices=DOMAIN_CHOICES)
    d.add_argument("--samples", type=_positive_int, default=200)
    d.add_argument("--out", help="boundary sample CSV (s,t,piece,nx,ny); needs --domain")

    v = sub.add_parser("verify", help="closed-form residual suite")
    v.add_argument("--case", choices=tuple(CASES), required=True)
    v.add_argument("--grid", type=_positive_int, default=50)

    t = sub.add_parser("transform", help="grid Legendre transform of a closed form")
    t.add_argument("--case", choices=tuple(CASES), required=True)
    t.add_argument("--grid", type=_positive_int, default=128)
    t.add_argument("--emit", choices=("psi", "hstar"), required=True)
    t.add_argument("--out", required=True, help="CSV s,t,value")

    s = sub.add_parser("solve", help="solve the Dirichlet problem on a domain")
    s.add_argument("--domain", choices=DOMAIN_CHOICES, required=True)
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--k", type=float, default=0.5)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out", help="CSV s,t,psi (s,t,phi when k != 0.5)")
    s.add_argument("--report", help="JSON report")

    f = sub.add_parser("fubini-pick", help="boundary profile of the second-order coefficient")
    f.add_argument("--domain", choices=DOMAIN_CHOICES, required=True)
    f.add_argument("--source", choices=("exact", "solve"), required=True)
    f.add_argument("--grid", type=int, default=128)
    f.add_argument("--points", type=_positive_int, default=64)
    f.add_argument("--out", required=True, help="CSV s,t,piece,a1,f,fit_residual")

    a = sub.add_parser("soliton-alpha", help="nonzero root of the soliton compatibility equation")
    a.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))

    c = sub.add_parser("export-contour", help="SVG contour plot of an s,t,value CSV")
    c.add_argument("--field", required=True)
    c.add_argument("--levels", type=float, nargs="*", default=[])
    c.add_argument("--out", required=True)
    return p


# -- helpers --------------------------------------------------------------------

def _check_writable(*paths):
    for path in paths:
        if path is None:
            continue
        parent = os.path.dirname(os.path.abspath(path))
        if os.path.isdir(path):
            raise UsageError(f"{path} is a directory")
        if not os.path.isdir(parent):
            raise UsageError(f"directory {parent} does not exist")
        if os.path.exists(path) and not os.access(path, os.W_OK):
            raise UsageError(f"{path} is not writable")
        if not os.access(parent, os.W_OK):
            raise UsageError(f"directory {parent} is not writable")


def _check_readable(path):
    if not os.path.isfile(path) or not os.access(path, os.R_OK):
        raise UsageError(f"cannot read {path}")


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(obj):
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _domain_index(name):
    return get_domain(name).index


# -- subcommands ----------------------------------------------------------------

def cmd_domains(args, threads):
    _check_writable(args.out)
    if args.out and not args.domain:
        raise UsageError("--out needs --domain")
    keys = [args.domain] if args.domain else list(DOMAIN_CHOICES)
    out = {"domains": []}
    for key in keys:
        dom = get_domain(key)
        P = get_polytope(dom.index)
        out["domains"].append({
            "name": dom.name,
            "polygon": P.name,
            "pieces": len(dom.pieces),
            "corners": [{"s": str(p[0]), "t": str(p[1]), "pieces": [int(a), int(b)]}
                        for p, a, b in dom.exact_corners()],
            "bounding_box": [float(x) for x in dom.bounding_box],
            "diameter": float(dom.diameter),
            "centrally_symmetric": bool(dom.is_centrally_symmetric()),
            "polygon_vertices": [[int(u), int(v)] for u, v in P.vertices],
        })
    if args.out:
        pts, pieces, normals = get_domain(args.domain).boundary_sample(args.samples)
        write_csv(args.out, ["s", "t", "piece", "nx", "ny"],
                  ((p[0], p[1], int(k), n[0], n[1]) for p, k, n in zip(pts, pieces, normals)))
        out["out"] = args.out
        out["samples"] = args.samples
    return out


def cmd_verify(args, threads):
    res = residual_suite(args.case, args.grid)
    return {"case": args.case, "grid": args.grid, **res}


def _polygon_sample(j, N, f):
    P = get_polytope(j)
    vs = np.array([[float(a), float(b)] for a, b in P.vertices])
    lo, hi = vs.min(axis=0), vs.max(axis=0)
    return SampledField.from_function(f, np.linspace(lo[0], hi[0], N + 1),
                                      np.linspace(lo[1], hi[1], N + 1), inside=P.contains)


def cmd_transform(args, threads):
    _check_writable(args.out)
    j = CASES[args.case]
    if args.grid < 8:
        raise UsageError("--grid must be at least 8")
    if args.emit == "psi":
        # psi = u H_u + v H_v - H, placed at (s, t) = grad H
        src = _polygon_sample(j, args.grid, H_field(j).value)
    else:
        xs = np.linspace(-HSTAR_EXTENT, HSTAR_EXTENT, args.grid + 1)
        src = SampledField.from_function(h_field(j).value, xs, xs)
    dual = legendre_transform_grid(src)
    rows = dual.points()
    write_csv(args.out, ["s", "t", "value"], rows)
    out = {"case": args.case, "grid": args.grid, "emit": args.emit, "out": args.out,
           "rows": int(len(rows)), "value_min": float(rows[:, 2].min()),
           "value_max": float(rows[:, 2].max())}
    if args.emit == "psi":
        exact = composite_psi(j).value(rows[:, 0], rows[:, 1])
        out["max_error_vs_closed_form"] = float(np.abs(rows[:, 2] - exact).max())
    return out


def cmd_solve(args, threads):
    _check_writable(args.out, args.report)
    if args.grid < 16:
        raise UsageError("--grid must be at least 16")
    if not args.k > 0:
        raise UsageError("--k must be positive")
    config = SolverConfig(N=args.grid, tol=args.tol)
    if args.k == 0.5:
        rep = solve_psi(args.domain, config)
        name = "psi"
    else:
        rep = solve_phi(args.domain, args.k, config)
        name = "phi"
    out = rep.to_json()
    if args.out:
        write_csv(args.out, ["s", "t", name], rep.field.rows())
        out["out"] = args.out
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(dumps(out))
    return out


def cmd_fubini_pick(args, threads):
    _check_writable(args.out)
    j = _domain_index(args.domain)
    if args.source == "exact":
        if j not in (1, 2):
            raise UsageError(f"no closed form on {args.domain}; use --source solve")
        field = composite_psi(j)
    else:
        if args.grid < 16:
            raise UsageError("--grid must be at least 16")
        field = solve_psi(args.domain, SolverConfig(N=args.grid)).field
    coeffs = profile_boundary(field, args.domain, args.points, threads=threads)
    write_csv(args.out, ["s", "t", "piece", "a1", "f", "fit_residual"], (c.row() for c in coeffs))
    good = [c for c in coeffs if c.ok]
    return {
        "domain": args.domain, "source": args.source,
        "grid": args.grid if args.source == "solve" else None,
        "points": args.points, "fitted": len(good), "failed": len(coeffs) - len(good),
        "f_min": min((c.f for c in good), default=None),
        "f_max": max((c.f for c in good), default=None),
        "out": args.out,
    }


def cmd_soliton_alpha(args, threads):
    return solve_alpha(tuple(args.bracket) if args.bracket else None).to_json()


def cmd_export_contour(args, threads):
    _check_readable(args.field)
    _check_writable(args.out)
    counts = export_contour(args.field, args.levels, args.out)
    return {"field": args.field, "out": args.out,
            "levels": [{"level": lv, "curves": n} for lv, n in counts.items()]}


COMMANDS = {
    "domains": cmd_domains,
    "verify": cmd_verify,
    "transform": cmd_transform,
    "solve": cmd_solve,
    "fubini-pick": cmd_fubini_pick,
    "soliton-alpha": cmd_soliton_alpha,
    "export-contour": cmd_export_contour,
}


def run(argv=None, stdout=None):
    """Parse ``argv``, run the subcommand and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        threads = args.threads if args.threads is not None else _threads_default()
        result = COMMANDS[args.command](args, threads)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"asl {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        trace = getattr(exc, "trace", None)
        extra = f" (residual trace: {', '.join(f'{r:.3e}' for r in trace)})" if trace else ""
        print(f"asl {args.command}: numerical failure: {exc}{extra}", file=sys.stderr)
        return 2
    except (ASLError, ValueError, KeyError, OSError) as exc:
        print(f"asl {args.command}: error: {exc}", file=sys.stderr)
        return 1
    stdout.write(dumps(result))
    stdout.flush()
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
