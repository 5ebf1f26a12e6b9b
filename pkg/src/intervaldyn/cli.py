"""``intervaldyn`` command-line interface.

Every command that is given ``--out`` also writes ``<out>.manifest.json``
recording the parsed parameters and SHA-256 digests of inputs and outputs;
``intervaldyn rerun MANIFEST`` repeats the run from it.

Exit codes: 0 success, 2 domain error or validation failure, 3 I/O or parse
failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__, kernels
from .errors import MapError, SpecFormatError

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 2, 3
PATH_KEYS = ("spec", "out", "sidecar")


class CommandFailed(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load(args):
    from .maps import PiecewiseMap

    return PiecewiseMap.load(args.spec)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, {path or "-": text})


def cmd_validate(args):
    from .maps import validate

    f = _load(args)
    rep = validate(f, args.grid)
    ok = rep.structure_ok and (rep.schwarzian_negative or args.allow_nonnegative_schwarzian)
    body = rep.to_dict()
    body["accepted"] = ok
    code = EXIT_OK if ok else EXIT_DOMAIN
    if not ok:
        for line in rep.tiling:
            print(f"violation: {line}", file=sys.stderr)
        if rep.range:
            print(f"violation: {len(rep.range)} grid values outside [0,1]", file=sys.stderr)
        if rep.orientation:
            print(f"violation: {len(rep.orientation)} grid points with the wrong derivative sign", file=sys.stderr)
        if rep.schwarzian_nonnegative and not args.allow_nonnegative_schwarzian:
            print(f"violation: Schwarzian not negative at {len(rep.schwarzian_nonnegative)} grid points",
                  file=sys.stderr)
    return code, {args.out or "-": _dump_json(body)}


def cmd_orbit(args):
    from .lateral import LateralState, lateral_orbit

    f = _load(args)
    if (args.x is None) == (args.lateral is None):
        raise CommandFailed(EXIT_DOMAIN, "give exactly one of --x and --lateral")
    if args.lateral is not None:
        orb = lateral_orbit(f, LateralState.parse(args.lateral), args.n)
        rows = list(orb.to_csv_rows())
        if orb.truncated:
            print(f"orbit truncated after {orb.length - 1} steps: {orb.truncated}", file=sys.stderr)
    else:
        traj, st = kernels.trajectories(f.table(), [args.x], args.n)
        xs = traj[0]
        xs = xs[np.isfinite(xs)]
        los = np.array([b.lo for b in f.branches])
        idx = np.maximum(np.searchsorted(los, xs, side="left") - 1, 0)
        rows = [(k, repr(float(x)), "", int(i)) for k, (x, i) in enumerate(zip(xs, idx))]
        if st[0] != kernels.OK:
            print(f"orbit stopped after {len(xs) - 1} steps: {kernels.STATUS_NAMES[int(st[0])]}",
                  file=sys.stderr)
    return EXIT_OK, {args.out or "-": _csv_text(("step", "coord", "side", "branch_index"), rows)}


def cmd_omega(args):
    from .lateral import omega_estimate

    f = _load(args)
    cov = omega_estimate(f, args.x0, args.burn_in, args.tail, args.resolution)
    body = {"map": f.name, "cover": cov.to_dict(),
            "params": {"x0": args.x0, "burn_in": args.burn_in, "tail": args.tail,
                       "resolution": args.resolution}}
    return EXIT_OK, {args.out or "-": _dump_json(body)}


def cmd_returnmap(args):
    from .returns import CSV_HEADER, accelerated_induced_map, first_return_map

    f = _load(args)
    if args.accelerated:
        frm = accelerated_induced_map(f, tuple(args.interval), args.depth_cap, args.max_time,
                                      args.tol_onto)
        if frm.depth_exhausted:
            print(f"depth cap reached after {frm.depth} steps; coverage {frm.coverage_measure:.6g}",
                  file=sys.stderr)
    else:
        frm = first_return_map(f, tuple(args.interval), args.max_time, args.tol_onto)
    rows = [br.to_row() for br in frm.branches]
    return EXIT_OK, {args.out or "-": _csv_text(CSV_HEADER, rows)}


def cmd_surgery(args):
    from .surgery import flatten_unimodal, lorenz_rescale, pit_surgery

    f = _load(args)
    if args.kind == "pit":
        if args.interval is None or args.q is None:
            raise CommandFailed(EXIT_DOMAIN, "pit needs --interval and --q")
        rec = pit_surgery(f, tuple(args.interval), args.q)
    elif args.kind == "flatten_unimodal":
        if args.p is None:
            raise CommandFailed(EXIT_DOMAIN, "flatten_unimodal needs --p")
        rec = flatten_unimodal(f, args.p)
    else:
        if args.interval is None:
            raise CommandFailed(EXIT_DOMAIN, "lorenz_rescale needs --interval A B")
        rec = lorenz_rescale(f, *args.interval)
    out = args.out or "-"
    sidecar = args.sidecar or (f"{args.out}.provenance.json" if args.out else None)
    files = {out: rec.result.dumps()}
    if sidecar:
        files[sidecar] = _dump_json(rec.sidecar())
    return EXIT_OK, files


def cmd_classify(args):
    from .classify import ClassifyParams, classification_report

    f = _load(args)
    params = ClassifyParams(seed=args.seed, samples=args.samples, burn_in=args.burn_in,
                            tail=args.tail, resolution=args.resolution,
                            hausdorff_tol=args.hausdorff_tol, lateral_steps=args.lateral_steps,
                            threads=args.threads)
    rep = classification_report(f, params)
    body = rep.to_dict()
    body["params"]["hausdorff_tol"] = args.hausdorff_tol
    body["params"]["lateral_steps"] = args.lateral_steps
    code = EXIT_OK if rep.bound_respected else EXIT_DOMAIN
    return code, {args.out or "-": _dump_json(body)}


def cmd_rotation(args):
    from .lateral import rotation_number

    f = _load(args)
    c = args.c
    if c is None:
        if len(f.exceptional_set) != 1:
            raise CommandFailed(EXIT_DOMAIN, "map has several exceptional points; give --c")
        c = f.exceptional_set[0]
    rho = rotation_number(f, c, args.n)
    files = {"-": f"{rho!r}\n"}
    if args.out:
        files[args.out] = _dump_json({"map": f.name, "c": c, "n": args.n, "rotation_number": rho})
    return EXIT_OK, files


def cmd_zoo(args):
    from . import zoo

    if args.family == "logistic":
        f = zoo.make_logistic(args.lam)
    elif args.family == "rotation":
        f = zoo.make_rotation(args.alpha)
    elif args.family == "lorenz":
        f = zoo.make_lorenz(args.c, args.rho_l, args.rho_r, args.u, args.v)
    elif args.family == "gap":
        g = zoo.extract_gap_map(zoo.make_lorenz(args.c, args.rho_l, args.rho_r, args.u, args.v))
        body = g.map.to_dict()
        body["gap"] = {"c": g.c, "interval": list(g.interval), "image_measure": g.image_measure}
        return EXIT_OK, {args.out or "-": _dump_json(body)}
    else:
        f = zoo.construct_ewi(args.c, args.rho_l, args.rho_r, args.u, args.v,
                              rotation_target=args.rotation_target,
                              search_budget=args.search_budget)
    return EXIT_OK, {args.out or "-": f.dumps()}


# ---------------------------------------------------------------------------
# parser


def _add_common(p, spec=True):
    if spec:
        p.add_argument("spec", help="map specification (JSON)")
    p.add_argument("--out", help="output file; also writes <out>.manifest.json")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $INTERVALDYN_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intervaldyn", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"intervaldyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check tiling, range, orientation and Schwarzian sign")
    _add_common(p)
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--allow-nonnegative-schwarzian", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("orbit", help="real or lateral orbit as CSV")
    _add_common(p)
    p.add_argument("--x", type=float)
    p.add_argument("--lateral", help="lateral start such as 0.5- or 0.5+")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("omega", help="omega-limit cover of one point")
    _add_common(p)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--tail", type=int, default=100_000)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("returnmap", help="first-return (or accelerated induced) branches as CSV")
    _add_common(p)
    p.add_argument("--interval", type=float, nargs=2, required=True, metavar=("A", "B"))
    p.add_argument("--max-time", type=int, default=15)
    p.add_argument("--tol-onto", type=float, default=1e-9)
    p.add_argument("--accelerated", action="store_true")
    p.add_argument("--depth-cap", type=int, default=3)
    p.set_defaults(func=cmd_returnmap)

    p = sub.add_parser("surgery", help="derive a modified map")
    _add_common(p)
    p.add_argument("--kind", choices=("pit", "flatten_unimodal", "lorenz_rescale"), required=True)
    p.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--q", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--sidecar", help="provenance JSON (default <out>.provenance.json)")
    p.set_defaults(func=cmd_surgery)

    p = sub.add_parser("classify", help="Monte Carlo attractor classification")
    _add_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--tail", type=int, default=100_000)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--hausdorff-tol", type=float, default=5e-3)
    p.add_argument("--lateral-steps", type=int, default=100_000)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("rotation", help="rotation number of a gap map")
    _add_common(p)
    p.add_argument("--c", type=float)
    p.add_argument("--n", type=int, default=100_000)
    p.set_defaults(func=cmd_rotation)

    p = sub.add_parser("zoo", help="write a built-in map")
    zsub = p.add_subparsers(dest="family", required=True)
    z = zsub.add_parser("logistic")
    _add_common(z, spec=False)
    z.add_argument("--lambda", dest="lam", type=float, required=True)
    z.set_defaults(func=cmd_zoo)
    z = zsub.add_parser("rotation")
    _add_common(z, spec=False)
    z.add_argument("--alpha", type=float, required=True)
    z.set_defaults(func=cmd_zoo)
    for name in ("lorenz", "gap", "ewi"):
        z = zsub.add_parser(name)
        _add_common(z, spec=False)
        z.add_argument("--c", type=float, required=True)
        z.add_argument("--rho-l", type=float, required=True)
        z.add_argument("--rho-r", type=float, required=True)
        z.add_argument("--u", type=float, required=True)
        z.add_argument("--v", type=float, required=True)
        if name == "ewi":
            z.add_argument("--rotation-target", type=float, default=(3 - 5 ** 0.5) / 2)
            z.add_argument("--search-budget", type=int, default=60)
        z.set_defaults(func=cmd_zoo)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--threads", type=int, default=None, help="override the recorded thread count")
    p.add_argument("--check", action="store_true",
                   help="run in a scratch directory and compare digests instead of overwriting")
    p.set_defaults(func=None)
    return ap


# ---------------------------------------------------------------------------
# manifests


def _params(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k != "func"}
    for k in PATH_KEYS:
        if d.get(k):
            d[k] = os.path.abspath(d[k])
    return d


def _write_outputs(files):
    for path, text in files.items():
        if path == "-":
            sys.stdout.write(text)
        else:
            with open(path, "w", newline="") as fh:
                fh.write(text)


def _manifest(params, files) -> dict:
    inputs = {}
    if params.get("spec"):
        inputs[params["spec"]] = _sha256(params["spec"])
    return {
        "tool": "intervaldyn",
        "version": __version__,
        "command": params["command"],
        "params": params,
        "inputs": inputs,
        "outputs": {os.path.abspath(p): _sha256(p) for p in files if p != "-"},
    }


def _execute(args):
    if args.threads is not None:
        os.environ["INTERVALDYN_THREADS"] = str(args.threads)
    code, files = args.func(args)
    _write_outputs(files)
    if getattr(args, "out", None):
        params = _params(args)
        path = os.path.abspath(args.out) + ".manifest.json"
        with open(path, "w") as fh:
            fh.write(_dump_json(_manifest(params, files)))
    return code


HANDLERS = {
    "validate": cmd_validate, "orbit": cmd_orbit, "omega": cmd_omega,
    "returnmap": cmd_returnmap, "surgery": cmd_surgery, "classify": cmd_classify,
    "rotation": cmd_rotation, "zoo": cmd_zoo,
}


def _namespace(params):
    if params.get("command") not in HANDLERS:
        raise CommandFailed(EXIT_IO, f"manifest names an unknown command {params.get('command')!r}")
    ns = argparse.Namespace(**params)
    ns.func = HANDLERS[params["command"]]
    return ns


def cmd_rerun(args):
    try:
        with open(args.manifest) as fh:
            man = json.load(fh)
        params = dict(man["params"])
    except (OSError, ValueError, KeyError) as exc:
        raise CommandFailed(EXIT_IO, f"cannot read manifest: {exc}")
    if args.threads is not None:
        params["threads"] = args.threads
    if not args.check:
        return _execute(_namespace(params))
    recorded = man.get("outputs", {})
    with tempfile.TemporaryDirectory() as tmp:
        moved = {}
        for key in ("out", "sidecar"):
            if params.get(key):
                new = os.path.join(tmp, os.path.basename(params[key]))
                moved[new] = params[key]
                params[key] = new
        if params.get("command") == "surgery" and params.get("out") and not params.get("sidecar"):
            # default sidecar follows the output path
            for old_path in recorded:
                if old_path.endswith(".provenance.json"):
                    moved[params["out"] + ".provenance.json"] = old_path
        code = _execute(_namespace(params))
        same = True
        for new, old in moved.items():
            if old not in recorded:
                continue
            digest = _sha256(new)
            match = digest == recorded[old]
            same &= match
            print(f"{'same' if match else 'DIFFERENT'} {old}")
        return code if same else EXIT_DOMAIN


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            return cmd_rerun(args)
        return _execute(args)
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SpecFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MapError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
