"""``targeted`` command line: synth, discover, complete, targeted, sweep.

Exit status: 0 on success, 1 on usage errors (bad flags, missing input
files), 2 when a computation fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from .completion import CompletionConfig, complete
from .errors import TargetedError
from .evaluation import METHODS, SWEPT_VARS, SweepSpec, run_sweep, write_sweep_csv
from .incsvd import IncSvdConfig
from .linalg import write_dense_csv
from .observed import mask_uniform, read_triplets, write_descriptor, write_triplets
from .pipeline import SEPARATION_MODES, TargetedConfig, component_report, targeted_complete
from .svp import ESTIMATORS, SvpConfig, discover_all
from .synthgen import PlantSpec, generate

log = logging.getLogger("targeted")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _rank(text):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("rank must be positive")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return value


def _plant(text):
    try:
        rows, cols, rank, pi = text.split(":")
        return PlantSpec(int(rows), int(cols), int(rank), float(pi))
    except (ValueError, TargetedError) as exc:
        raise argparse.ArgumentTypeError(f"bad plant {text!r} (want rows:cols:rank:pi): {exc}")


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _svp_flags(p):
    g = p.add_argument_group("discovery")
    g.add_argument("--vectors", type=int, default=3,
                   help="singular vectors projected onto (default: 3)")
    g.add_argument("--threshold", type=float, default=0.2,
                   help="projection-gap threshold for accepting a submatrix (default: 0.2)")
    g.add_argument("--max-submatrices", type=int, default=None,
                   help="stop after this many submatrices (default: unbounded)")
    g.add_argument("--estimator", choices=ESTIMATORS, default="auto",
                   help="singular-vector estimator; auto = exact when fully observed, "
                        "else incremental (default: auto)")
    g.add_argument("--inc-lr", type=float, default=0.01,
                   help="incremental SVD learning rate (default: 0.01)")
    g.add_argument("--inc-reg", type=float, default=0.02,
                   help="incremental SVD regularization (default: 0.02)")
    g.add_argument("--inc-epochs", type=int, default=200,
                   help="incremental SVD max epochs per feature (default: 200)")


def _completion_flags(p):
    g = p.add_argument_group("completion")
    g.add_argument("--rank", type=_rank, default="auto",
                   help="completion rank or 'auto' (default: auto)")
    g.add_argument("--max-rank", type=int, default=50,
                   help="upper bound for automatic rank (default: 50)")
    g.add_argument("--tol", type=float, default=1e-5,
                   help="relative residual-change tolerance (default: 1e-5)")
    g.add_argument("--max-iter", type=int, default=500,
                   help="maximum ALS sweeps (default: 500)")


def _svp_config(args):
    return SvpConfig(n_vectors=args.vectors, delta_threshold=args.threshold,
                     max_submatrices=args.max_submatrices, estimator=args.estimator,
                     incremental=IncSvdConfig(learning_rate=args.inc_lr,
                                              regularization=args.inc_reg,
                                              max_epochs=args.inc_epochs))


def _completion_config(args):
    return CompletionConfig(rank=args.rank, max_rank=args.max_rank, tol=args.tol,
                            max_iter=args.max_iter)


def _load(path):
    if not os.path.isfile(path):
        raise UsageError(f"input file not found: {path}")
    try:
        return read_triplets(path)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed (default: 42)")
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS threads (default: all cores)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = _Parser(prog="targeted", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a planted benchmark instance")
    p.add_argument("--n", type=int, required=True, help="rows")
    p.add_argument("--m", type=int, required=True, help="columns")
    p.add_argument("--rank", type=int, required=True, help="background rank")
    p.add_argument("--plant", type=_plant, action="append", default=[],
                   help="rows:cols:rank:pi, repeatable (default: none)")
    p.add_argument("--density", type=_fraction, default=1.0,
                   help="fraction of entries kept in the triplet file (default: 1.0)")
    p.add_argument("--out-prefix", required=True,
                   help="writes PREFIX.csv, PREFIX.triplet, PREFIX.desc<k>.txt")

    p = sub.add_parser("discover", parents=[common], help="find low-rank submatrices")
    p.add_argument("--in", dest="input", required=True, help="triplet file")
    p.add_argument("--out-prefix", required=True,
                   help="writes PREFIX.desc<k>.txt and PREFIX.report.csv")
    _svp_flags(p)

    p = sub.add_parser("complete", parents=[common], help="plain low-rank completion")
    p.add_argument("--in", dest="input", required=True, help="triplet file")
    p.add_argument("--out", required=True, help="dense CSV estimate")
    p.add_argument("--meta", default=None,
                   help="JSON metadata path (default: OUT with .json suffix)")
    _completion_flags(p)

    p = sub.add_parser("targeted", parents=[common], help="targeted completion")
    p.add_argument("--in", dest="input", required=True, help="triplet file")
    p.add_argument("--out", required=True, help="dense CSV estimate")
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--separation", choices=SEPARATION_MODES, default="zero-fill",
                   help="how submatrices are removed from the remainder (default: zero-fill)")
    p.add_argument("--no-timings", action="store_true",
                   help="omit wall times so the report is reproducible byte for byte")
    _svp_flags(p)
    _completion_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="run an experiment sweep")
    p.add_argument("--swept", choices=SWEPT_VARS, required=True, help="variable to sweep")
    p.add_argument("--values", required=True, help="comma-separated grid")
    p.add_argument("--n", type=int, default=400, help="rows (default: 400)")
    p.add_argument("--m", type=int, default=400, help="columns (default: 400)")
    p.add_argument("--background-rank", type=int, default=30,
                   help="background rank (default: 30)")
    p.add_argument("--plant", type=_plant, action="append", default=None,
                   help="rows:cols:rank:pi, repeatable (default: 40:40:2:1.2)")
    p.add_argument("--density", type=_fraction, default=1.0,
                   help="observed fraction when not swept (default: 1.0)")
    p.add_argument("--seeds", type=int, default=1, help="instances per point (default: 1)")
    p.add_argument("--methods", default="plain,targeted",
                   help=f"comma-separated subset of {','.join(METHODS)} (default: plain,targeted)")
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--no-timings", action="store_true",
                   help="leave the time columns empty so output is reproducible")
    _svp_flags(p)
    _completion_flags(p)
    return parser


def _cmd_synth(args):
    inst = generate(args.n, args.m, args.rank, args.plant, args.seed)
    write_dense_csv(f"{args.out_prefix}.csv", inst.matrix)
    M_obs = mask_uniform(inst.matrix, args.density, args.seed)
    write_triplets(f"{args.out_prefix}.triplet", M_obs)
    for k, d in enumerate(inst.truth):
        write_descriptor(f"{args.out_prefix}.desc{k}.txt", d)
    pis = ",".join(f"{p:.6g}" for p in inst.achieved_pi)
    return (f"synth: {args.n}x{args.m} rank {args.rank}, {len(inst.truth)} plant(s) "
            f"[pi {pis}], {M_obs.n_observed} observed entries -> {args.out_prefix}.*")


def _cmd_discover(args):
    M_obs = _load(args.input)
    found, reports = discover_all(M_obs, _svp_config(args), args.seed, return_reports=True)
    for k, d in enumerate(found):
        write_descriptor(f"{args.out_prefix}.desc{k}.txt", d)
    with open(f"{args.out_prefix}.report.csv", "w", encoding="utf-8") as fh:
        fh.write("pi,gamma,delta_rows,delta_cols\n")
        for r in reports:
            fh.write(r.csv_line() + "\n")
    if not found:
        return "discover: no submatrix found"
    shapes = ", ".join(f"{len(d.rows)}x{len(d.cols)}" for d in found)
    return f"discover: {len(found)} submatrix(es) found ({shapes})"


def _cmd_complete(args):
    M_obs = _load(args.input)
    out = complete(M_obs, _completion_config(args), args.seed)
    write_dense_csv(args.out, out.estimate)
    meta = args.meta or os.path.splitext(args.out)[0] + ".json"
    with open(meta, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_json_safe(out.summary()), sort_keys=True) + "\n")
    return (f"complete: rank {out.used_rank}, {out.iterations} sweeps, "
            f"residual {out.final_residual:.3g}")


def _cmd_targeted(args):
    M_obs = _load(args.input)
    cfg = TargetedConfig(_svp_config(args), _completion_config(args), args.separation)
    res = targeted_complete(M_obs, cfg, args.seed)
    write_dense_csv(args.out, res.estimate)
    _write_json(args.report, component_report(res, include_timings=not args.no_timings))
    return f"targeted: {len(res.descriptors)} submatrix(es), {len(res.per_component)} components"


def _cmd_sweep(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    kind = float if args.swept in ("density", "pi") else int
    try:
        values = tuple(kind(v) for v in args.values.split(","))
    except ValueError:
        raise UsageError(f"--values: cannot parse {args.values!r}") from None
    plants = tuple(args.plant) if args.plant else (PlantSpec(40, 40, 2, 1.2),)
    try:
        spec = SweepSpec(swept=args.swept, values=values, n=args.n, m=args.m,
                         background_rank=args.background_rank, plants=plants,
                         density=args.density, seeds=args.seeds, methods=methods,
                         svp=_svp_config(args), completion=_completion_config(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_sweep(spec, args.seed, timings=not args.no_timings)
    write_sweep_csv(args.out, rows)
    failed = sum("error" in r for r in rows)
    return f"sweep: {len(rows)} rows ({failed} failed) -> {args.out}"


COMMANDS = {"synth": _cmd_synth, "discover": _cmd_discover, "complete": _cmd_complete,
            "targeted": _cmd_targeted, "sweep": _cmd_sweep}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                summary = COMMANDS[args.command](args)
        else:
            summary = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"targeted {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (TargetedError, ValueError, ArithmeticError) as exc:
        print(f"targeted {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"targeted {args.command}: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main():
    sys.exit(dispatch())
