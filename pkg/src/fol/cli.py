"""Command-line front end.

Commands: spectrum, epi check, epi calibrate, gap, solve, classify,
verify-all.  Reports are JSON (records) and CSV (radial profiles);
report-producing commands also render matplotlib figures next to the
delimited outputs unless --no-figures is given.  Identical configuration
and seed give byte-identical JSON/CSV.

Exit codes: 0 success; 2 parameter/usage error; 3 calibration failure;
4 check or criterion failure; 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .epiperimetric import (CalibrationError, EpiContext, calibrate_epsilons,
                            check_epi_log, check_epi_negative_2m,
                            check_epi_negative_regular, check_epi_regular,
                            random_admissible_trace, reports_to_jsonl)
from .gap import gap_2m, gap_regular
from .params import ParameterError, Params
from .profiles import (PowerCuspObstacle, RegularProfile, reduce_obstacle,
                       unit_equator_polynomial)
from .spectrum import build_basis

EXIT_OK = 0
EXIT_PARAM = 2
EXIT_CALIBRATION = 3
EXIT_CHECK = 4
EXIT_IO = 5


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("FOL_THREADS", "1")))
    except ValueError:
        return 1


def map_ordered(fn, items):
    """Apply fn over items, optionally threaded; output order fixed by index."""
    cap = thread_cap()
    if cap <= 1 or len(items) < 4:
        return [fn(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))


def load_config_defaults(path: str) -> dict:
    """Flat key=value config file; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOError(f"cannot read config {path}: {exc}") from exc
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"bad config line: {line!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def params_from_args(args) -> Params:
    if getattr(args, "s", None) is not None and getattr(args, "a", None) is not None:
        raise ParameterError("give exactly one of --a and --s")
    if getattr(args, "s", None) is not None:
        return Params.from_s(args.n, args.s)
    if getattr(args, "a", None) is not None:
        return Params.from_a(args.n, args.a)
    raise ParameterError("one of --a or --s is required")


def _write(path: str | None, text: str, default_stream=None) -> None:
    if path is None:
        (default_stream or sys.stdout).write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    p = params_from_args(args)
    basis = build_basis(p, args.K)
    print(f"# eigenbasis n={p.n} a={p.a:.6g} s={p.s:.6g} K={args.K}")
    print(f"{'idx':>4} {'degree':>6} {'eigenvalue':>14} {'norm-check':>11}")
    for i, m in enumerate(basis.modes):
        print(f"{i:>4} {m.degree:>6} {m.eigenvalue:>14.8f} {1.0:>11.1e}")
    if args.out:
        _write(args.out, basis.to_json())
        print(f"# wrote {args.out}")
    return EXIT_OK


def cmd_epi_check(args) -> int:
    p = params_from_args(args)
    ctx = EpiContext.for_params(p)
    rng = np.random.default_rng(args.seed)
    traces = [random_admissible_trace(
        ctx, rng, norm=1.0 if args.theorem == "negative-2m" else 1.0)
        for _ in range(args.corpus)]

    def one(tr):
        if args.theorem == "regular":
            return check_epi_regular(ctx, tr)
        if args.theorem == "negative-regular":
            return check_epi_negative_regular(ctx, tr)
        if args.theorem == "log":
            theta = args.theta if args.theta is not None else _auto_theta(ctx, tr, args.m)
            return check_epi_log(ctx, tr, args.m, theta, args.eps)
        if args.theorem == "negative-2m":
            return check_epi_negative_2m(ctx, tr, args.m, args.eps)
        raise ParameterError(f"unknown theorem {args.theorem}")

    if args.theorem in ("log", "negative-2m") and args.eps is None:
        raise ParameterError("--eps is required for the 2m-type checks "
                             "(see `fol epi calibrate`)")
    reports = map_ordered(one, traces)
    text = reports_to_jsonl(reports)
    _write(args.out, text)
    if args.out and args.figures:
        from .figures import save_margin_histogram
        save_margin_histogram(reports, str(Path(args.out).with_suffix(".png")))
    n_fail = sum(not r.passed for r in reports)
    print(f"# {args.theorem}: {len(reports) - n_fail}/{len(reports)} pass",
          file=sys.stderr)
    return EXIT_OK if n_fail == 0 else EXIT_CHECK


def _auto_theta(ctx, tr, m):
    p = ctx.p
    w = float(np.sum((ctx.basis.eigenvalues - p.eigenvalue(2.0 * m))
                     * tr.coefficients**2)) / (p.n + p.a + 4.0 * m - 1.0)
    return max(tr.norm_sq, abs(w)) * 1.000001


def cmd_epi_calibrate(args) -> int:
    p = params_from_args(args)
    cal = calibrate_epsilons(p, args.m, args.corpus, args.seed)
    text = json.dumps(cal, sort_keys=True, indent=1) + "\n"
    _write(args.out, text)
    if args.out:
        print(f"# wrote {args.out}")
    return EXIT_OK


def cmd_gap(args) -> int:
    p = params_from_args(args)
    results = [gap_regular(p)]
    labels = ["1+s"]
    if args.m is not None:
        if args.eps_pos is None or args.eps_neg is None:
            raise ParameterError("--m needs --eps-pos and --eps-neg "
                                 "(from `fol epi calibrate`)")
        results.append(gap_2m(p, args.m, args.eps_pos, args.eps_neg))
        labels.append(f"2m={2 * args.m}")
    doc = [r.to_json_dict() for r in results]
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    _write(args.out, text)
    if args.out and args.figures:
        from .figures import save_gap_diagram
        save_gap_diagram(results, labels, str(Path(args.out).with_suffix(".png")))
    return EXIT_OK


DATA = {
    "halfspace": lambda p: RegularProfile(tuple([1.0] + [0.0] * (p.n - 1)), p.s).values,
    "parabola": lambda p: unit_equator_polynomial(p, 1).to_float().evaluate,
}


def cmd_solve(args) -> int:
    from .solver import solve_nested
    p = params_from_args(args)
    if args.datum not in DATA:
        raise ParameterError(f"datum must be one of {sorted(DATA)}")
    datum = DATA[args.datum](p)
    source = None
    if args.source == "cusp":
        red = reduce_obstacle(PowerCuspObstacle(2.5, center=[0.0] * p.n),
                              [0.0] * p.n, k=2, p=p)
        source = lambda x: red.h_values(x)
    obstacle = (lambda x: np.zeros(x.shape[0])) if args.obstacle == "zero" \
        else (lambda x: np.full(x.shape[0], -1.0))
    sol = solve_nested(p, datum, obstacle=obstacle, source=source, nx=args.nx,
                       tol=args.tol, enable_n2=(p.n == 2),
                       datum_name=args.datum)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(str(prefix) + ".ckpt").write_bytes(sol.checkpoint_bytes())
    _write(str(prefix) + "_slice.csv", sol.slice_csv())
    from .solver import decay_monitors
    mon = decay_monitors(sol, [0.0] * p.n, args.lam if args.lam else 1.0 + p.s,
                         h_fn=source)
    _write(str(prefix) + "_profile.csv", mon["profile"].to_csv())
    if args.figures:
        from .figures import save_frequency_profile, save_solution
        save_solution(sol, str(prefix) + "_solution.png")
        save_frequency_profile(mon["profile"], str(prefix) + "_profile.png")
    print(f"# solve: converged={sol.converged} iters={sol.iterations} "
          f"nodes={sol.values.size}")
    return EXIT_OK if sol.converged else EXIT_CHECK


def cmd_classify(args) -> int:
    from .solver import GridSolution, classify_point
    try:
        blob = Path(args.checkpoint).read_bytes()
    except OSError as exc:
        raise IOError(f"cannot read checkpoint {args.checkpoint}: {exc}") from exc
    sol = GridSolution.from_checkpoint(blob)
    p = sol.params
    basis = build_basis(p, 8)
    res = classify_point(sol, [args.x0] * p.n if np.isscalar(args.x0) else args.x0,
                         basis)
    doc = {
        "x0": list(np.atleast_1d(res.x0)),
        "lambda_hat": res.lam_hat,
        "kind": res.kind,
        "m": res.m,
        "C": res.C,
        "e": None if res.e is None else list(res.e),
        "d_2m": res.d_2m,
        "H0": res.H0,
        "fit_error": res.fit_error,
        "polynomial": None if res.polynomial is None else sorted(
            [list(k) + [float(v)] for k, v in res.polynomial.coeffs.items()]),
    }
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    _write(args.out, text)
    if args.out:
        _write(str(Path(args.out).with_suffix(".csv")), res.profile.to_csv())
        if args.figures:
            from .figures import save_frequency_profile
            save_frequency_profile(res.profile, str(Path(args.out).with_suffix(".png")))
    return EXIT_OK


def cmd_verify_all(args) -> int:
    from .acceptance import run_all
    results = run_all(quick=args.quick, seed=args.seed)
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    all_pass = all(r.passed for r in results)
    summary = {
        "quick": args.quick,
        "seed": args.seed,
        "all_pass": all_pass,
        "criteria": [
            {"id": r.cid, "name": r.name, "pass": r.passed, "details": r.details}
            for r in results
        ],
    }
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify_summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(f"# verify-all: {'ALL PASS' if all_pass else 'FAILURES PRESENT'}")
    return EXIT_OK if all_pass else EXIT_CHECK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="fol",
        description="Desk-scale laboratory for the thin/fractional obstacle "
                    "problem: spectra, Weiss monitors, competitor inequalities, "
                    "frequency gaps, and a variational-inequality solver.")
    top.add_argument("--config", help="flat key=value file with flag defaults")
    sub = top.add_subparsers(dest="command", required=True)

    def add_params(sp):
        sp.add_argument("--n", type=int, required=True, choices=(1, 2))
        sp.add_argument("--a", type=float, default=None,
                        help="weight exponent in (-1,1)")
        sp.add_argument("--s", type=float, default=None,
                        help="fractional order in (0,1); a = 1-2s")

    sp = sub.add_parser("spectrum", help="build and print an eigenbasis")
    add_params(sp)
    sp.add_argument("--K", type=int, default=8)
    sp.add_argument("--out", default=None, help="write basis JSON here")
    sp.set_defaults(fn=cmd_spectrum)

    epi = sub.add_parser("epi", help="competitor inequality corpora")
    episub = epi.add_subparsers(dest="epicommand", required=True)
    spc = episub.add_parser("check", help="run one checker over a random corpus")
    add_params(spc)
    spc.add_argument("--theorem", required=True,
                     choices=("regular", "negative-regular", "log", "negative-2m"))
    spc.add_argument("--corpus", type=int, default=200)
    spc.add_argument("--seed", type=int, default=7)
    spc.add_argument("--m", type=int, default=1)
    spc.add_argument("--eps", type=float, default=None)
    spc.add_argument("--theta", type=float, default=None)
    spc.add_argument("--out", default=None, help="JSONL records path (default stdout)")
    spc.add_argument("--figures", action="store_true")
    spc.set_defaults(fn=cmd_epi_check)
    spl = episub.add_parser("calibrate", help="calibrate the free 2m constants")
    add_params(spl)
    spl.add_argument("--m", type=int, default=1)
    spl.add_argument("--corpus", type=int, default=500)
    spl.add_argument("--seed", type=int, default=7)
    spl.add_argument("--out", default=None)
    spl.set_defaults(fn=cmd_epi_calibrate)

    sp = sub.add_parser("gap", help="forbidden homogeneity intervals")
    add_params(sp)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--eps-pos", type=float, default=None)
    sp.add_argument("--eps-neg", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--figures", action="store_true")
    sp.set_defaults(fn=cmd_gap)

    sp = sub.add_parser("solve", help="run the thin-obstacle grid solver")
    add_params(sp)
    sp.add_argument("--datum", default="halfspace", choices=sorted(DATA))
    sp.add_argument("--obstacle", default="zero", choices=("zero", "low"))
    sp.add_argument("--source", default="none", choices=("none", "cusp"))
    sp.add_argument("--nx", type=int, default=128)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--lam", type=float, default=None,
                    help="Weiss index for the profile export")
    sp.add_argument("--out-prefix", default="fol_solve")
    sp.add_argument("--figures", action="store_true")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("classify", help="classify a free-boundary point")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--figures", action="store_true")
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("verify-all", help="run the acceptance-criteria suite")
    sp.add_argument("--quick", action="store_true",
                    help="reduced corpora and grids (smoke/determinism run)")
    sp.add_argument("--seed", type=int, default=2026)
    sp.add_argument("--out-dir", default=None)
    sp.set_defaults(fn=cmd_verify_all)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # config file provides defaults for the chosen subcommand
    if "--config" in argv:
        i = argv.index("--config")
        cfg = load_config_defaults(argv[i + 1])
        del argv[i:i + 2]
        extra = []
        for key, val in sorted(cfg.items()):
            flag = "--" + key.replace("_", "-")
            if flag not in argv and not _has_flag(argv, flag):
                extra.extend([flag, val])
        argv = argv + extra
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except CalibrationError as exc:
        print(f"calibration failure: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def _has_flag(argv, flag):
    return any(tok == flag or tok.startswith(flag + "=") for tok in argv)


if __name__ == "__main__":
    sys.exit(main())
