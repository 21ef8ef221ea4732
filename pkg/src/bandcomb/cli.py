"""Command-line front end.

Three subcommands drive the pipeline on a potential file:

    bandcomb bands      POTENTIAL.json  --window A B  [--grid N] [--out DIR]
    bandcomb resonances POTENTIAL.json  --window A B  [--out DIR]
    bandcomb verify     POTENTIAL.json  [--window A B] [--out DIR] [--fast]

Outputs are machine-readable (bands.csv, gaps.json, resonances.json,
report.json, comb.json) with sorted keys and 17-significant-digit floats,
so reruns with the same inputs are byte-identical.  Exit codes: 0 success,
1 verification failure, 2 input error, 3 numerical failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import potential
from .config import DEFAULT, Tolerances
from .errors import BandcombError, PermanentDegeneracy, ValidationError
from .numerics import ContourRegion
from .quasimomentum import build_map, verify_identities
from .resonance import find_resonances, resonance_seeds
from .spectrum import scan_bands

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL = 3


def _fmt(x):
    """Repr-roundtrip float formatting used in every emitted file."""
    if isinstance(x, float):
        return float(format(x, ".17g"))
    return x


class _Formatter(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, cls=_Formatter)
        fh.write("\n")


def _parse_tols(pairs):
    tol = DEFAULT
    if not pairs:
        return tol
    kw = {}
    for item in pairs:
        name, _, value = item.partition("=")
        if name not in Tolerances.names():
            raise ValidationError(f"unknown tolerance {name!r}")
        value = float(value)
        if value < np.finfo(float).eps * 100:
            raise ValidationError(f"tolerance {name} = {value:g} below 100 eps")
        kw[name] = value
    return tol.override(**kw)


def _load_spec(path):
    if not os.path.exists(path):
        raise ValidationError(f"potential file not found: {path}")
    return potential.load(path)


def cmd_bands(args):
    spec = _load_spec(args.potential)
    tol = _parse_tols(args.tol)
    window = tuple(args.window) if args.window else (-4 * np.pi, 4 * np.pi)
    band = scan_bands(spec, window, grid_n=args.grid, tol=tol)
    os.makedirs(args.out, exist_ok=True)

    with open(os.path.join(args.out, "bands.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "multiplicity"])
        for x, m in zip(band.xs, band.mult):
            wr.writerow([format(float(x), ".17g"), int(m)])

    gaps = []
    for g in band.gaps:
        gaps.append({
            "lo": _fmt(float(g.lo)), "hi": _fmt(float(g.hi)),
            "length": _fmt(float(g.length)),
            "class_lo": list(g.labels_lo), "class_hi": list(g.labels_hi),
            "residuals_lo": {k: _fmt(v) for k, v in g.residuals_lo.items()},
            "residuals_hi": {k: _fmt(v) for k, v in g.residuals_hi.items()},
            "truncated": bool(g.truncated),
        })
    payload = {
        "window": [_fmt(float(window[0])), _fmt(float(window[1]))],
        "dim": band.dim,
        "gaps": gaps,
        "sigma_full": [[_fmt(a), _fmt(b)] for a, b in band.sigma_full],
        "sigma_partial": [[_fmt(a), _fmt(b)] for a, b in band.sigma_partial],
        "lambda_gaps": [[_fmt(a), _fmt(b)] for a, b in band.lambda_gaps],
        "gamma0": _fmt(band.gamma0) if band.gamma0 is not None else None,
        "flags": band.flags,
    }
    _dump_json(payload, os.path.join(args.out, "gaps.json"))
    return EXIT_OK


def cmd_resonances(args):
    spec = _load_spec(args.potential)
    tol = _parse_tols(args.tol)
    window = tuple(args.window) if args.window else (0.5, 4 * np.pi)
    height = args.height
    region = ContourRegion.rectangle(complex(window[0], -height),
                                     complex(window[1], height))
    os.makedirs(args.out, exist_ok=True)
    out = {"window": [_fmt(float(window[0])), _fmt(float(window[1]))],
           "degenerate": False, "records": []}
    try:
        try:
            seeds = resonance_seeds(spec, range(1, max(2, int(window[1] / np.pi) + 1)),
                                    tol) if spec.family == potential.SCHRODINGER else None
        except PermanentDegeneracy:
            seeds = None
        records = find_resonances(spec, region, tol=tol, classify=args.classify,
                                  seeds=seeds)
        for r in sorted(records, key=lambda r: (r.z0.real, r.z0.imag)):
            rec = {"z0": [_fmt(r.z0.real), _fmt(r.z0.imag)],
                   "multiplicity": int(r.multiplicity)}
            if r.branch_record is not None:
                rec["kappa"] = int(r.branch_record.kappa)
                rec["m"] = int(r.branch_record.m)
                rec["inside_band"] = bool(r.branch_record.inside_band)
            elif r.branch_note:
                rec["classification_note"] = r.branch_note
            if r.seed is not None:
                rec["seed"] = [_fmt(r.seed.real), _fmt(r.seed.imag)]
                rec["family_index"] = {"n": r.family_index[0],
                                       "pair": list(r.family_index[1])}
            out["records"].append(rec)
    except PermanentDegeneracy as exc:
        out["degenerate"] = True
        out["note"] = str(exc)
    _dump_json(out, os.path.join(args.out, "resonances.json"))
    return EXIT_OK


def cmd_verify(args):
    spec = _load_spec(args.potential)
    tol = _parse_tols(args.tol)
    window = tuple(args.window) if args.window else None
    qmap = build_map(spec, window=window, grid_n=args.grid, tol=tol)
    report = verify_identities(spec, tol=tol, include_dirichlet=not args.fast,
                               qmap=qmap)
    os.makedirs(args.out, exist_ok=True)
    _dump_json(report.to_dict(), os.path.join(args.out, "report.json"))
    _dump_json(qmap.comb_dict(), os.path.join(args.out, "comb.json"))
    print(report)
    if report.passed:
        return EXIT_OK
    failures = [r.name for r in report.rows if r.status == "fail"]
    print(f"verification failed: {', '.join(failures)}", file=sys.stderr)
    return EXIT_VERIFY_FAILED


def build_parser():
    ap = argparse.ArgumentParser(prog="bandcomb",
                                 description="band-gap structure, resonances and "
                                             "quasimomentum identities for "
                                             "1-periodic systems")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("potential", help="potential JSON file")
        p.add_argument("--window", type=float, nargs=2, metavar=("A", "B"))
        p.add_argument("--grid", type=int, default=256,
                       help="samples per unit length (default 256)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint for grid sweeps")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                       help="tolerance override, repeatable")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", default="json,csv",
                       help="output formats (informational; both are written)")

    p_bands = sub.add_parser("bands", help="band multiplicity, gaps, endpoint classes")
    common(p_bands)
    p_bands.set_defaults(func=cmd_bands)

    p_res = sub.add_parser("resonances", help="zeros of the reduced discriminant")
    common(p_res)
    p_res.add_argument("--height", type=float, default=0.8,
                       help="half-height of the search rectangle")
    p_res.add_argument("--classify", action="store_true",
                       help="attach branch-point classification to each record")
    p_res.set_defaults(func=cmd_resonances)

    p_ver = sub.add_parser("verify", help="run the identity and estimate sheet")
    common(p_ver)
    p_ver.add_argument("--fast", action="store_true",
                       help="skip the half-plane Dirichlet integrals")
    p_ver.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code = args.func(args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT_ERROR
    except BandcombError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
