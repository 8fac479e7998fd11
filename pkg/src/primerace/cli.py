"""Command-line interface: ``primerace chars | zeros | race | classify``.

Exit codes: 0 success, 2 usage, 3 data error, 4 envelope exceeded.
Structured reports are JSON on stdout (or ``--output``); series are CSV.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .characters import RaceSpec, characters, race_vectors
from .distributions import (ESTIMATORS, CharFnSpec, SamplerModel, charfn_eval, sample,
                            two_way_density)
from .errors import (ConvergenceError, DataError, EnvelopeError, InfeasibleError,
                     PrecisionError)
from .explicit_formula import oscillatory_terms, truncated_error_series, write_series_csv
from .relations import classify
from .zeros import compute_zeros, count_check, ingest_zeros, zero_table_for

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ENVELOPE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _versions() -> dict:
    out = {"primerace": __version__}
    for pkg in ("numpy", "scipy", "mpmath"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:  # pragma: no cover
            out[pkg] = None
    return out


def _config(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(obj, args):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if getattr(args, "output", None):
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _report(args, body: dict) -> dict:
    return {"config": _config(args), "versions": _versions(), "assumptions": ["GRH"], **body}


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of numbers") from None


# --------------------------------------------------------------------------
# commands


def cmd_chars(args):
    rows = []
    for chi in characters(args.q):
        rows.append({
            "label": chi.label, "order": chi.order, "conductor": chi.conductor,
            "parity": "odd" if chi.parity else "even", "primitive": chi.is_primitive,
            "real": chi.is_real,
        })
    if args.json:
        _emit(_report(args, {"modulus": args.q, "characters": rows}), args)
    else:
        print(f"{'label':>8} {'order':>5} {'cond':>5} {'parity':>6} {'prim':>5} {'real':>5}")
        for r in rows:
            print(f"{r['label']:>8} {r['order']:>5} {r['conductor']:>5} {r['parity']:>6} "
                  f"{str(r['primitive']):>5} {str(r['real']):>5}")
    return EXIT_OK


def cmd_zeros_ingest(args):
    table = ingest_zeros(args.path)
    body = {"path": str(args.path), "labels": {
        lab: {"count": len(table.records(lab)), "complete_to": table.height(lab)}
        for lab in table.labels}}
    _emit(_report(args, body), args)
    return EXIT_OK


def cmd_zeros_compute(args):
    out = {}
    for chi in characters(args.q):
        if chi.is_principal and args.q != 1 and not args.include_principal:
            continue
        recs = compute_zeros(chi, args.T, cache_dir=args.cache_dir, use_cache=not args.no_cache)
        out[chi.label] = [r.text for r in recs]
    body = {"q": args.q, "T": args.T, "counts": {k: len(v) for k, v in out.items()},
            "ordinates": out}
    _emit(_report(args, body), args)
    return EXIT_OK


def cmd_zeros_check(args):
    table = zero_table_for(args.q, args.T, args.zeros, cache_dir=args.cache_dir,
                           use_cache=not args.no_cache)
    cc = count_check(table, args.T, args.q)
    body = dict(cc.as_dict(), deviation=cc.deviation, refined_deviation=cc.refined_deviation,
                slack=cc.slack, within_slack=abs(cc.deviation) <= cc.slack,
                refined_within_slack=abs(cc.refined_deviation) <= cc.slack)
    _emit(_report(args, body), args)
    return EXIT_OK


def _race_table(args, T):
    return zero_table_for(args.q, T, args.zeros, cache_dir=args.cache_dir,
                          use_cache=not args.no_cache)


def _sufficiency(args, table, T):
    if args.selection in ("sturdy", "robust"):
        return classify(table, T, args.H, args.p, q=args.q)
    return None


def cmd_race_density(args):
    if args.a == args.b:
        raise UsageError("--a and --b must differ")
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    bad = [e for e in estimators if e not in ESTIMATORS]
    if bad or not estimators:
        raise UsageError(f"estimators must be drawn from {','.join(ESTIMATORS)}")
    T = args.T
    table = _race_table(args, T)
    report = _sufficiency(args, table, T)
    results = []
    for est in estimators:
        r = two_way_density(args.q, args.a, args.b, table, report, selection=args.selection,
                            estimator=est, T=T, k=args.k, W=args.W, n=args.n, seed=args.seed,
                            t_max=args.t_max, dt=args.dt)
        results.append(r.to_dict())
    agreement = {a["estimator"]: {b["estimator"]: abs(a["estimate"] - b["estimate"])
                                  for b in results} for a in results}
    _emit(_report(args, {"estimates": results, "agreement": agreement}), args)
    return EXIT_OK


def cmd_race_sample(args):
    spec = RaceSpec(args.q, tuple(args.r))
    vectors = race_vectors(spec)
    table = _race_table(args, args.T)
    report = _sufficiency(args, table, args.T)
    model = SamplerModel("li", args.selection, args.T, k=args.k, W=args.W,
                         include_shift=not args.no_shift)
    m = sample(model, vectors, report, table, args.n, args.seed)
    digest = hashlib.sha256(np.ascontiguousarray(m.points).tobytes()).hexdigest()
    if args.samples:
        path = Path(args.samples)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".npy":
            np.save(path, m.points)
        else:
            np.savetxt(path, m.points, delimiter=",", fmt="%.17g",
                       header=",".join(f"X{j + 1}" for j in range(spec.size)), comments="")
    body = {"race": {"q": args.q, "residues": list(spec.residues)}, "n": m.n,
            "seed": args.seed, "model": m.provenance, "mean": m.mean(), "sigma": m.sigma(),
            "sha256": digest, "samples": args.samples}
    _emit(_report(args, body), args)
    return EXIT_OK


def cmd_race_charfn(args):
    spec = RaceSpec(args.q, tuple(args.r))
    vectors = race_vectors(spec)
    table = _race_table(args, args.T)
    zs = oscillatory_terms(vectors, table, args.T)
    cf = CharFnSpec.from_zero_sum(zs)
    t = np.array(args.t, dtype=float)
    if len(t) != spec.size:
        raise UsageError(f"--t needs {spec.size} components")
    val = charfn_eval(cf, t)
    _emit(_report(args, {"t": t, "value": [val.real, val.imag], "zeros": len(zs)}), args)
    return EXIT_OK


def cmd_race_series(args):
    spec = RaceSpec(args.q, tuple(args.r))
    vectors = race_vectors(spec)
    table = _race_table(args, args.T)
    n = int(round((args.t_end - args.t_start) / args.dt)) + 1
    t = args.t_start + args.dt * np.arange(n)
    vals = truncated_error_series(vectors, table, t, args.T, args.weighting)
    if not args.csv:
        raise UsageError("race series needs --csv PATH")
    write_series_csv(args.csv, t, vals)
    _emit(_report(args, {"rows": n, "csv": args.csv}), args)
    return EXIT_OK


def cmd_classify(args):
    table = _race_table(args, args.T) if not args.zeros else ingest_all(args.zeros)
    labels = None if args.labels is None else args.labels.split(",")
    rep = classify(table, args.T, args.H, args.p, labels=labels,
                   q=None if labels else args.q)
    _emit(_report(args, rep.to_dict()), args)
    return EXIT_OK


def ingest_all(paths):
    table = None
    for p in paths:
        t = ingest_zeros(p)
        table = t if table is None else table.merged(t)
    return table


# --------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--cache-dir", default=None, help="cache root (default: $PRIMERACE_CACHE)")
    p.add_argument("--no-cache", action="store_true", help="do not read or write the cache")
    p.add_argument("--output", default=None, help="write the JSON report here")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker cap; results do not depend on it")
    p.add_argument("--config", default=None, help="JSON file of defaults; flags win")


def _zero_sources(p):
    p.add_argument("--zeros", action="append", default=[], metavar="FILE",
                   help="zero file to ingest (repeatable)")


def _selection(p):
    p.add_argument("--selection", choices=("all", "sturdy", "robust"), default="all")
    p.add_argument("--k", type=_positive_int, default=None)
    p.add_argument("--W", type=float, default=None)
    p.add_argument("--H", type=_positive_int, default=100)
    p.add_argument("--p", type=_positive_int, default=40)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="primerace", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"primerace {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    leaves = {}

    p = sub.add_parser("chars", help="list the Dirichlet characters mod q")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--json", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_chars)
    leaves["chars"] = p

    z = sub.add_parser("zeros", help="zero tables").add_subparsers(dest="zeros_command", required=True)
    p = z.add_parser("ingest", help="validate a zero file")
    p.add_argument("path")
    _common(p)
    p.set_defaults(func=cmd_zeros_ingest)
    leaves["zeros ingest"] = p
    p = z.add_parser("compute", help="compute and cache zeros (q <= 20, T <= 200)")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--include-principal", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_zeros_compute)
    leaves["zeros compute"] = p
    p = z.add_parser("check", help="count zeros against the counting formula")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--T", type=float, required=True)
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_zeros_check)
    leaves["zeros check"] = p

    r = sub.add_parser("race", help="race distributions").add_subparsers(dest="race_command", required=True)
    p = r.add_parser("density", help="two-way race density")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--estimators", default="mc")
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--n", type=_positive_int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=float, default=5000.0)
    p.add_argument("--dt", type=float, default=1e-3)
    _selection(p)
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_race_density)
    leaves["race density"] = p

    p = r.add_parser("sample", help="Monte Carlo draws of the limiting vector")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--r", type=_int_list, required=True, help="residues, e.g. 1,3")
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--n", type=_positive_int, default=10**5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--no-shift", action="store_true")
    p.add_argument("--samples", default=None, help="write draws to .npy or CSV")
    _selection(p)
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_race_sample)
    leaves["race sample"] = p

    p = r.add_parser("charfn", help="evaluate the characteristic function")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--r", type=_int_list, required=True)
    p.add_argument("--t", type=_float_list, required=True)
    p.add_argument("--T", type=float, default=200.0)
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_race_charfn)
    leaves["race charfn"] = p

    p = r.add_parser("series", help="write E_T(e^t) on a t-grid as CSV")
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--r", type=_int_list, required=True)
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--weighting", choices=("pi", "theta", "psi"), default="pi")
    p.add_argument("--csv", default=None)
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_race_series)
    leaves["race series"] = p

    p = sub.add_parser("classify", help="self-sufficiency report for zero ordinates")
    p.add_argument("--q", type=_positive_int, default=None)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--H", type=_positive_int, default=100)
    p.add_argument("--p", type=_positive_int, default=40)
    p.add_argument("--labels", default=None, help="comma-separated character labels")
    _zero_sources(p)
    _common(p)
    p.set_defaults(func=cmd_classify)
    leaves["classify"] = p
    ap.leaves = leaves
    return ap


ROUTING_KEYS = ("command", "zeros_command", "race_command")


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _leaf_key(parser, argv):
    words = [tok for tok in argv if not tok.startswith("-")]
    for n in (2, 1):
        key = " ".join(words[:n])
        if key in parser.leaves:
            return key
    return None


def _apply_config(parser, argv):
    """Parse with the config file's values as defaults, so explicit flags win.

    A report's embedded ``config`` block is itself a valid config file: the
    routing keys are checked against the chosen subcommand and options it
    supplies no longer need to be given on the command line.
    """
    path = _config_path(argv)
    key = _leaf_key(parser, argv)
    if path is None or key is None:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise DataError("config file must hold a JSON object")
    routed = " ".join(str(cfg.pop(k)) for k in ROUTING_KEYS if cfg.get(k) is not None)
    if routed and routed != key:
        raise UsageError(f"config is for '{routed}', not '{key}'")
    leaf = parser.leaves[key]
    known = {a.dest for a in leaf._actions}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for action in leaf._actions:
        if action.dest in cfg:
            action.required = False
    leaf.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else argv)
        if getattr(args, "q", None) is None and args.command == "classify" and not args.zeros:
            raise UsageError("classify needs --q or --zeros")
        return args.func(args)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"primerace: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EnvelopeError, ConvergenceError) as exc:
        print(f"primerace: outside supported envelope: {exc}", file=sys.stderr)
        return EXIT_ENVELOPE
    except (DataError, PrecisionError, InfeasibleError) as exc:
        print(f"primerace: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
