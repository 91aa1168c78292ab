"""Command-line entry point: ``ngbound <command> [options]``.

Every command writes a manifest next to its output (or to
``ngbound_<command>.manifest.json`` in the working directory when no
output path is given) holding the full configuration and library version.

Exit codes: 0 success, 2 unwritable output path, 3 state below the bound
(``check``), 4 invalid state or malformed JSON, 5 verification failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _parallel, oracle
from .exceptions import CutoffTooSmallError, InvalidInputError, InvalidStateError, NGBoundError
from .fock import DEFAULT_DIM, load_state, validate
from .metrics import summarize
from .region1 import purity_bound_curve
from .region2 import bound_overlap, pure_min_overlap, quartic_root, total_bound
from .wigner import CartesianGrid, auto_grid, min_wigner, wigner_on_grid

log = logging.getLogger("ngbound")

EXIT_OK = 0
EXIT_UNWRITABLE = 2
EXIT_VIOLATION = 3
EXIT_INVALID = 4
EXIT_VERIFY = 5

DEFAULT_GRID = 201
DEFAULT_SEED = 0
CHECK_TOL = 1e-6


class _Unwritable(Exception):
    pass


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    parent = Path(path).expanduser().resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise _Unwritable(f"cannot write to {path}")
    if Path(path).is_dir():
        raise _Unwritable(f"{path} is a directory")


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _Unwritable(str(exc)) from exc


def _manifest_path(args) -> str:
    out = getattr(args, "out", None)
    return f"{out}.manifest.json" if out else f"ngbound_{args.command}.manifest.json"


def _write_manifest(args, extra: dict | None = None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    payload = {"version": __version__, "command": args.command, "config": config,
               "threads": _parallel.max_workers()}
    if extra:
        payload["result"] = extra
    _write(_manifest_path(args), json.dumps(payload, indent=2, default=str) + "\n")


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _rows_to_json(header, rows) -> str:
    return json.dumps([dict(zip(header, row)) for row in rows], indent=1) + "\n"


def _emit(args, header, rows) -> None:
    text = _rows_to_csv(header, rows) if args.format == "csv" else _rows_to_json(header, rows)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------------------

def cmd_purity_bound(args) -> int:
    ys = np.geomspace(1.0, args.y_max, args.samples)
    rows = []
    for y in ys:
        mu, mu_g = purity_bound_curve(float(y))
        rows.append((float(y), mu, mu_g))
    _emit(args, ("y", "mu", "mu_g"), rows)
    _write_manifest(args, {"rows": len(rows)})
    return EXIT_OK


def cmd_surface(args) -> int:
    mgs = np.linspace(args.mug_min, args.mug_max, args.mug_steps)
    mus = np.linspace(args.mu_min, args.mu_max, args.mu_steps)
    surf = total_bound(mgs, mus, workers=args.workers)
    text = surf.to_csv() if args.format == "csv" else json.dumps(surf.to_json(), indent=1) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    counts = surf.counts()
    print("cells={cells} points={points} skipped={skipped} region_I={region_I} region_II={region_II}"
          .format(**counts), file=sys.stderr)
    _write_manifest(args, counts)
    return EXIT_OK


def cmd_pure(args) -> int:
    n_max = int(math.floor((1 / args.mug_min - 1) / 2))
    grid = set(np.linspace(args.mug_min, 1.0, args.samples).tolist())
    grid |= {1 / (2 * n + 1) for n in range(n_max + 1)}
    switches = {}
    for n in range(n_max + 1):
        try:
            r = quartic_root(n)
        except NGBoundError:
            continue
        if r >= args.mug_min:
            switches[n] = r
            log.info("segment %d: switch at r_%d = %.12f", n, n, r)
    rows, prev = [], None
    for mg in sorted(grid):
        T, desc = pure_min_overlap(mg)
        s = 1 / mg
        n_state = abs((s - 1) / 2 - round((s - 1) / 2)) < 1e-9
        switched = prev is not None and prev != desc.family
        prev = desc.family
        rows.append((mg, T, desc.family, desc.indices.get("k", desc.indices.get("n")),
                     int(n_state), int(switched)))
    _emit(args, ("mu_g", "overlap", "family", "index", "number_state", "switch"), rows)
    _write_manifest(args, {"rows": len(rows), "switch_points": {f"r_{k}": v for k, v in switches.items()}})
    return EXIT_OK


def _load_checked(path: str, cutoff: int):
    rho = load_state(path)
    if rho.dim > cutoff:
        raise CutoffTooSmallError(f"state dimension {rho.dim} exceeds cutoff {cutoff}")
    rep = validate(rho)
    if not rep.ok:
        raise InvalidStateError("not a density matrix: " + ", ".join(f"not {f}" for f in rep.failures()))
    return rho


def _grid_for(rho, steps: int) -> CartesianGrid:
    box = auto_grid(rho)
    return CartesianGrid(box.x_min, box.x_max, box.p_min, box.p_max, steps)


def cmd_check(args) -> int:
    try:
        rho = _load_checked(args.state, args.cutoff)
        spec = _grid_for(rho, args.grid)
        s = summarize(rho)
    except (InvalidInputError, CutoffTooSmallError, OSError, ValueError) as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_INVALID
    res = bound_overlap(s.mu_g, s.mu)
    bound, family = (None, None) if res is None else (res[0], res[1].family)
    margin = None if bound is None else s.overlap - bound
    w_min, w_loc = min_wigner(rho, spec)
    positive = w_min >= -1e-9
    report = {"summary": s.to_dict(), "bound": bound, "bound_family": family, "margin": margin,
              "min_wigner": w_min, "min_wigner_location": list(w_loc), "wigner_positive": positive}
    for key in ("mu", "mu_g", "overlap", "delta"):
        print(f"{key:>8} = {getattr(s, key):.12g}")
    print(f"{'method':>8} = {s.method}")
    if margin is None:
        print("   bound = unreachable at this (mu_g, mu)")
    else:
        print(f"   bound = {bound:.12g} ({family})")
        print(f"  margin = {margin:+.3e}")
    print(f"  W_min  = {w_min:.6g} at ({w_loc[0]:.4f}, {w_loc[1]:.4f}) -> "
          + ("nonnegative" if positive else "negative"))
    if args.out:
        _write(args.out, json.dumps(report, indent=2, default=float) + "\n")
    _write_manifest(args, report)
    if margin is not None and margin < -CHECK_TOL:
        print("state lies below the bound", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _suite(name: str, seed: int, quick: bool) -> list[oracle.OracleReport]:
    scale = 10 if quick else 1
    if name == "region1":
        steps = 6 if quick else 20
        return [oracle.qp_grid_check(steps, steps)]
    if name == "region2":
        out = [oracle.sample_and_check(10_000 // scale, 24, seed, "diagonal"),
               oracle.sample_and_check(1_000 // scale, 8, seed + 1, "low_rank"),
               oracle.rank3_spot_check(count=200 // scale, seed=seed + 2)]
        mgs = np.linspace(0.08, 0.98, 50 // scale)
        worst, off = math.inf, None
        for mg in mgs:
            ref = pure_min_overlap(float(mg))[0]
            found = oracle.pure_min_overlap_search(float(mg), three_term=not quick)["min"]
            if found - ref < worst:
                worst, off = found - ref, {"mu_g": float(mg), "closed_form": ref, "search": found}
        viol = int(worst < -1e-7)
        out.append(oracle.OracleReport("pure_search", len(mgs), float(worst), seed, viol,
                                       off if viol else None))
        return out
    if name == "lemma":
        return [oracle.lemma_check(100 // scale, 24, seed)]
    if name == "positivity":
        return [oracle.positivity_suite(refine=not quick)]
    raise InvalidInputError(f"unknown suite {name!r}")


def cmd_verify(args) -> int:
    names = ["region1", "region2", "lemma", "positivity"] if args.suite == "all" else [args.suite]
    reports = []
    for name in names:
        for rep in _suite(name, args.seed, args.quick):
            status = "ok" if rep.ok else f"{rep.violations} violation(s)"
            print(f"{rep.scenario:<16} trials={rep.trials:<6} worst_margin={rep.worst_margin:+.3e}  {status}")
            reports.append(rep)
    payload = {"seed": args.seed, "reports": [r.to_dict() for r in reports]}
    out = args.out or "ngbound_verify.json"
    _write(out, json.dumps(payload, indent=1, default=float) + "\n")
    _write_manifest(args, {"report": out, "violations": sum(r.violations for r in reports)})
    return EXIT_OK if all(r.ok for r in reports) else EXIT_VERIFY


def cmd_wigner(args) -> int:
    try:
        rho = _load_checked(args.state, args.cutoff)
        grid = wigner_on_grid(rho, _grid_for(rho, args.grid))
    except (InvalidInputError, CutoffTooSmallError, OSError, ValueError) as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = grid.to_csv() if args.format == "csv" else grid.to_json() + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    _write_manifest(args, {"min_value": grid.min_value, "integral": grid.integral()})
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ngbound", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress and switch points")
    sub = ap.add_subparsers(dest="command", required=True)

    def out_opts(p, fmt=True):
        p.add_argument("--out", default=None, help="output file (stdout when omitted)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("purity-bound", parents=[common], help="sample the purity-bounded uncertainty curve")
    p.add_argument("--samples", type=_positive_int, default=1000)
    p.add_argument("--y-max", type=float, default=1000.0)
    out_opts(p)
    p.set_defaults(func=cmd_purity_bound)

    p = sub.add_parser("surface", parents=[common], help="tabulate the bound on a (mu_G, mu) grid")
    p.add_argument("--mug-steps", type=_positive_int, default=40)
    p.add_argument("--mu-steps", type=_positive_int, default=40)
    p.add_argument("--mug-min", type=float, default=0.05)
    p.add_argument("--mug-max", type=float, default=1.0)
    p.add_argument("--mu-min", type=float, default=0.05)
    p.add_argument("--mu-max", type=float, default=1.0)
    p.add_argument("--workers", type=_positive_int, default=None)
    out_opts(p)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("pure", parents=[common], help="pure-state bound with number states and family switches")
    p.add_argument("--samples", type=_positive_int, default=500)
    p.add_argument("--mug-min", type=float, default=0.05)
    out_opts(p)
    p.set_defaults(func=cmd_pure)

    p = sub.add_parser("check", parents=[common], help="place a state relative to the bound")
    p.add_argument("--state", required=True)
    p.add_argument("--cutoff", type=_positive_int, default=DEFAULT_DIM)
    p.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID)
    out_opts(p, fmt=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", parents=[common], help="run the brute-force oracle suites")
    p.add_argument("--suite", choices=("all", "region1", "region2", "lemma", "positivity"), default="all")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--quick", action="store_true", help="smaller sample counts")
    out_opts(p, fmt=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("wigner", parents=[common], help="Wigner function of a state on a grid")
    p.add_argument("--state", required=True)
    p.add_argument("--cutoff", type=_positive_int, default=DEFAULT_DIM)
    p.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID)
    out_opts(p)
    p.set_defaults(func=cmd_wigner)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_writable(getattr(args, "out", None))
        _check_writable(_manifest_path(args))
        return args.func(args)
    except _Unwritable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
