"""Command-line front end.

Usage:
    hartreetrap ground   --d 7 --b 0.1 [--out DIR]
    hartreetrap excited  --d 7 --b 1 --n 2
    hartreetrap singular --d 7..20 [--format csv|json] [--jobs N]
    hartreetrap sweep    --d 7 --b-lo 0.1 --b-hi 1000 --points 120 [--log] [--jobs N]
    hartreetrap verify   result.json
    hartreetrap fit      --model bifurcation|largeb|omegainf --input table.csv [--d 7]

Every output file embeds the tool version, the full run configuration, and
the problem definition used.  Files are written to a temporary name and
atomically renamed, so failures never leave partial files.

Exit codes: 0 success, 1 solver failure, 2 identity violation,
3 I/O error, 64 usage error, 65 data format error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .analysis import (
    IDENTITY_TOL,
    SweepRecord,
    count_level_crossings,
    find_curve_extrema,
    fit_bifurcation,
    fit_large_b,
    identity_report_from_samples,
    mass_energy,
    newton_check_from_samples,
    newton_potential_check,
    omega_range_check,
    pohozaev_report,
    sweep_omega_b,
)
from .errors import FitDomainError, HartreeTrapError, ModelNotApplicableError
from .ode import Mode, ProblemSpec
from .shooting import find_excited_state, find_ground_state
from .singular import (
    default_singular_spec,
    find_singular_state,
    fit_omega_inf_law,
    omega_drift,
)

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_IDENTITY = 2
EXIT_IO = 3
EXIT_USAGE = 64
EXIT_DATA = 65

MAX_PROFILE_POINTS = 4096
NEWTON_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


class UsageError(Exception):
    pass


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, doc: dict) -> None:
    _write_atomic(path, json.dumps(doc, indent=1) + "\n")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    import io as _io

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue())


def _spec_doc(spec: ProblemSpec) -> dict:
    return {
        "d": spec.d,
        "mode": spec.mode.value,
        "rtol": spec.rtol,
        "atol": spec.atol,
        "r_start": spec.r_start,
        "f_blowup": spec.f_blowup,
        "r_max": spec.r_max,
    }


def _config_doc(args, subcommand: str) -> dict:
    cfg = {"subcommand": subcommand, "format": getattr(args, "format", "json")}
    for key in ("d", "b", "n", "b_lo", "b_hi", "points", "log",
                "rtol", "atol", "c_tol", "jobs"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _downsample_profile(res, max_points: int = MAX_PROFILE_POINTS) -> dict:
    traj = res.profile
    n = len(traj.r)
    keep = np.unique(np.linspace(0, n - 1, min(n, max_points)).astype(int))
    r = traj.r[keep]
    y = traj.y[keep]
    # Event points (nodes, the reliable-tail anchor) are retained exactly.
    extra = list(traj.nodes) + [res.r_reliable]
    extra = [x for x in extra if traj.r[0] <= x <= traj.r_end
             and traj.dense is not None]
    if extra:
        xe = np.array(sorted(set(extra)))
        ye = np.asarray(traj.dense(xe)).T
        r = np.concatenate([r, xe])
        y = np.vstack([y, ye])
        order = np.argsort(r)
        r, y = r[order], y[order]
        r, uniq = np.unique(r, return_index=True)
        y = y[uniq]
    return {
        "r": r.tolist(),
        "f": y[:, 0].tolist(),
        "fp": y[:, 1].tolist(),
        "h": y[:, 2].tolist(),
        "hp": y[:, 3].tolist(),
    }


def _result_document(args, subcommand: str, spec: ProblemSpec, res) -> tuple[dict, bool]:
    identities = pohozaev_report(res)
    newton_dev = newton_potential_check(res)
    mass, energy = mass_energy(res)
    range_check = omega_range_check(res)
    range_applies = res.n == 0  # the frequency bounds are ground-state facts
    ok = (identities.max_residual < IDENTITY_TOL
          and newton_dev < NEWTON_TOL
          and (range_check.passed or not range_applies))
    doc = {
        "tool": {"name": "hartreetrap", "version": __version__},
        "config": _config_doc(args, subcommand),
        "spec": _spec_doc(spec),
        "result": {
            "b": res.b,
            "c_star": res.c_star,
            "n": res.n,
            "omega": res.omega,
            "bracket_width": res.bracket_width,
            "r_reliable": res.r_reliable,
            "termination": res.profile.termination.value,
            "nodes": list(res.profile.nodes),
            "profile": _downsample_profile(res),
        },
        "identities": {
            "residuals": identities.residuals,
            "norms": identities.norms,
        },
        "newton_deviation": newton_dev,
        "mass": mass,
        "energy": energy,
        "range_check": {
            "applicable": range_applies,
            "lower": range_check.lower,
            "upper": range_check.upper,
            "margin_lower": range_check.margin_lower,
            "margin_upper": range_check.margin_upper,
            "passed": range_check.passed,
        },
        "thresholds": {"identity": IDENTITY_TOL, "newton": NEWTON_TOL},
    }
    return doc, ok


def _regular_spec(args) -> ProblemSpec:
    if args.d < 6:
        raise UsageError(f"regular states require --d >= 6 (got {args.d})")
    return ProblemSpec(d=args.d, rtol=args.rtol, atol=args.atol)


def cmd_ground(args) -> int:
    return cmd_excited(args, n=0, subcommand="ground")


def cmd_excited(args, n=None, subcommand="excited") -> int:
    n = args.n if n is None else n
    if n < 0:
        raise UsageError(f"--n must be nonnegative (got {n})")
    if args.b <= 0.0:
        raise UsageError(f"--b must be positive (got {args.b})")
    spec = _regular_spec(args)
    res = find_excited_state(args.b, n, spec, args.c_tol)
    doc, ok = _result_document(args, subcommand, spec, res)
    path = os.path.join(args.out, f"{subcommand}_d{args.d}_b{args.b:g}"
                        + (f"_n{n}" if subcommand == "excited" else "") + ".json")
    _write_json(path, doc)
    print(f"omega = {res.omega!r}  (c* = {res.c_star!r}, n = {res.n})")
    print(f"wrote {path}")
    return EXIT_OK if ok else EXIT_IDENTITY


def _parse_d_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",")]


def _singular_row(d: int, rtol: float, atol: float, c_tol: float | None) -> dict:
    spec = default_singular_spec(d)
    spec = ProblemSpec(d=d, mode=Mode.SINGULAR, rtol=rtol, atol=atol,
                       r_start=spec.r_start)
    res = find_singular_state(d, 0, spec, c_tol)
    return {
        "d": d,
        "omega_inf": res.omega_inf,
        "c_star": res.c_star,
        "n": res.n,
        "bracket_width": res.bracket_width,
        "residual_omega": omega_drift(res),
    }


def cmd_singular(args) -> int:
    dims = _parse_d_range(args.d)
    if any(d < 7 for d in dims):
        raise UsageError("singular states require d >= 7")
    if args.jobs > 1:
        import multiprocessing as mp

        with mp.Pool(processes=args.jobs) as pool:
            rows = pool.starmap(
                _singular_row,
                [(d, args.rtol, args.atol, args.c_tol) for d in dims])
    else:
        rows = [_singular_row(d, args.rtol, args.atol, args.c_tol) for d in dims]
    rows.sort(key=lambda row: row["d"])

    fit = None
    if len(rows) >= 3:
        fit = fit_omega_inf_law([(row["d"], row["omega_inf"]) for row in rows])

    path = os.path.join(args.out, "singular_table." + args.format)
    if args.format == "json":
        doc = {
            "tool": {"name": "hartreetrap", "version": __version__},
            "config": _config_doc(args, "singular"),
            "rows": rows,
            "fit": None if fit is None else
            {"model": fit.model, "params": fit.params,
             "residual": fit.residual, "window": list(fit.window)},
        }
        _write_json(path, doc)
    else:
        header = ["d", "omega_inf", "c_star", "n", "bracket_width",
                  "residual_omega"]
        out_rows = [[row[key] for key in header] for row in rows]
        if fit is not None:
            out_rows.append(["fit", fit.params["A"], fit.params["gamma"],
                             "", "", fit.residual])
        _write_csv(path, header, out_rows)
    for row in rows:
        print(f"d={row['d']:2d}  omega_inf={row['omega_inf']:.6f}")
    if fit is not None:
        print(f"law fit: A={fit.params['A']:.4f} gamma={fit.params['gamma']:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.b_lo <= 0 or args.b_hi <= args.b_lo:
        raise UsageError("need 0 < --b-lo < --b-hi")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    spec = _regular_spec(args)
    if args.log:
        grid = np.geomspace(args.b_lo, args.b_hi, args.points)
    else:
        grid = np.linspace(args.b_lo, args.b_hi, args.points)
    records = sweep_omega_b(args.d, grid, spec=spec, c_tol=args.c_tol,
                            jobs=args.jobs)

    base = os.path.join(args.out, f"sweep_d{args.d}")
    header = ["b", "omega", "c_star", "n", "bracket_width",
              "identity_max_residual", "error"]
    rows = [[rec.b, rec.omega, rec.c_star, rec.n, rec.bracket_width,
             rec.identity_max_residual, rec.error or ""] for rec in records]
    _write_csv(base + ".csv", header, rows)
    good = [rec for rec in records if rec.error is None]
    _write_atomic(base + "_curve.dat",
                  "".join(f"{rec.b!r} {rec.omega!r}\n" for rec in good))
    written = [base + ".csv", base + "_curve.dat"]
    if 7 <= args.d <= 15:
        extrema = find_curve_extrema(records)
        _write_atomic(base + "_extrema.dat",
                      "".join(f"{b!r} {om!r}\n" for b, om, _ in extrema))
        written.append(base + "_extrema.dat")
    failures = [rec for rec in records if rec.error is not None]
    print(f"{len(good)} points, {len(failures)} failures")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK if not failures else EXIT_SOLVER


def cmd_verify(args) -> int:
    try:
        with open(args.result_file) as handle:
            doc = json.load(handle)
    except OSError:
        raise
    except Exception as exc:
        print(f"unreadable result document: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        spec = doc["spec"]
        result = doc["result"]
        profile = result["profile"]
        thresholds = doc["thresholds"]
        d = int(spec["d"])
        omega = float(result["omega"])
        r_reliable = float(result["r_reliable"])
        arrays = [np.asarray(profile[key], dtype=float)
                  for key in ("r", "f", "fp", "h", "hp")]
        if not all(arr.shape == arrays[0].shape for arr in arrays) \
                or arrays[0].size < 4:
            raise KeyError("profile arrays malformed")
    except (KeyError, TypeError, ValueError) as exc:
        print(f"malformed result document: {exc}", file=sys.stderr)
        return EXIT_DATA

    report = identity_report_from_samples(*arrays, omega=omega, d=d,
                                          r_reliable=r_reliable)
    newton_dev = newton_check_from_samples(*arrays, omega=omega, d=d,
                                           r_reliable=r_reliable)
    ok = (report.max_residual < thresholds["identity"]
          and newton_dev < thresholds["newton"])
    print(f"identity max residual: {report.max_residual:.3e} "
          f"(threshold {thresholds['identity']:g})")
    print(f"newton deviation:      {newton_dev:.3e} "
          f"(threshold {thresholds['newton']:g})")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_IDENTITY


def _read_sweep_csv(path: str) -> list[SweepRecord]:
    with open(path) as handle:
        reader = csv.DictReader(handle)
        records = []
        for row in reader:
            if row.get("b") in (None, "", "fit"):
                continue
            records.append(SweepRecord(
                b=float(row["b"]),
                omega=float(row["omega"]),
                c_star=float(row.get("c_star") or "nan"),
                n=int(float(row.get("n") or 0)),
                bracket_width=float(row.get("bracket_width") or "nan"),
                identity_max_residual=float(row.get("identity_max_residual")
                                            or "nan"),
                error=(row.get("error") or None),
            ))
    return records


def cmd_fit(args) -> int:
    try:
        if args.model == "omegainf":
            with open(args.input) as handle:
                reader = csv.DictReader(handle)
                table = [(float(row["d"]), float(row["omega_inf"]))
                         for row in reader if row.get("d") not in ("fit", None)]
            fit = fit_omega_inf_law(table)
        elif args.model == "bifurcation":
            if args.d is None:
                raise UsageError("--model bifurcation requires --d")
            fit = fit_bifurcation(_read_sweep_csv(args.input), args.d)
        else:
            if args.d is None or args.omega_inf is None:
                raise UsageError("--model largeb requires --d and --omega-inf")
            fit = fit_large_b(_read_sweep_csv(args.input), args.d,
                              args.omega_inf)
    except (KeyError, ValueError) as exc:
        print(f"malformed input table: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitDomainError, ModelNotApplicableError) as exc:
        print(f"fit not applicable: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {
        "tool": {"name": "hartreetrap", "version": __version__},
        "config": _config_doc(args, "fit") | {"model": args.model,
                                              "input": args.input},
        "fit": {"model": fit.model, "params": fit.params,
                "residual": fit.residual, "window": list(fit.window)},
    }
    path = os.path.join(args.out, f"fit_{args.model}.json")
    _write_json(path, doc)
    print(json.dumps(doc["fit"], indent=1))
    print(f"wrote {path}")
    return EXIT_OK


def _add_common(sub, tolerances=True):
    sub.add_argument("--out", default=".", help="output directory")
    if tolerances:
        sub.add_argument("--rtol", type=float, default=1e-10)
        sub.add_argument("--atol", type=float, default=1e-12)
        sub.add_argument("--c-tol", dest="c_tol", type=float, default=None,
                         help="bracket tolerance (default: 1e-13 * scale)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hartreetrap",
                     description="stationary states of the trapped "
                                 "Schrodinger-Poisson system")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ground", help="converge a ground state")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ground)

    p = subs.add_parser("excited", help="converge an n-node excited state")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_excited)

    p = subs.add_parser("singular", help="singular frequency table over d")
    p.add_argument("--d", type=str, required=True,
                   help="dimension, list, or range: 7 | 7,9,12 | 7..20")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_singular)

    p = subs.add_parser("sweep", help="omega(b) curve for one dimension")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--b-lo", dest="b_lo", type=float, required=True)
    p.add_argument("--b-hi", dest="b_hi", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--log", action=argparse.BooleanOptionalAction, default=True,
                   help="log-spaced b grid (default)")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("verify", help="recheck identities of a stored result")
    p.add_argument("result_file")
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("fit", help="asymptotic fits on stored tables")
    p.add_argument("--model", choices=("bifurcation", "largeb", "omegainf"),
                   required=True)
    p.add_argument("--input", required=True, help="sweep or singular CSV")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--omega-inf", dest="omega_inf", type=float, default=None)
    _add_common(p, tolerances=False)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HartreeTrapError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
