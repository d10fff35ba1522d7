"""Command-line interface: ``kuhnnet <subcommand> ...``.

Data goes to stdout or the named files, diagnostics to stderr.  Exit codes:
0 success, 1 failed verification, 2 invalid arguments or input,
3 resource cap exceeded, 4 file or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import analysis
from .baseline import build_sota
from .builder import build_approximator, build_approximator_shaped, build_global, encode
from .errors import CapacityError, DomainError, InputError, ParseError, ResourceError
from .gadgets import build_memorizer_deep, build_memorizer_sqrt, deep_capacity, load_samples, sqrt_shape
from .kuhn import load_grid
from .net import count_nonzero_params, depth, evaluate, load_net, serialize, width, widthvec
from .report import Check, VerificationReport
from .targets import TARGET_NAMES, get_target

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE, EXIT_IO = 0, 1, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return vals


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_bytes(path, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _load_grid_or_target(args):
    """The grid from ``--grid`` or by sampling ``--target``; also the target if any."""
    if args.grid:
        if args.target:
            raise InputError("use either --grid or --target, not both")
        grid = load_grid(args.grid)
        return grid, None
    if not args.target:
        raise InputError("one of --grid or --target is required")
    if args.d is None or args.n is None:
        raise InputError("--target needs --d and --n")
    target = get_target(args.target, args.d)
    return encode(target, args.d, args.n, vectorized=True), target


# subcommands

def cmd_build(args) -> int:
    grid, _ = _load_grid_or_target(args)
    if args.shape and args.global_:
        raise InputError("--shape and --global are mutually exclusive")
    if args.shape:
        rep = build_approximator_shaped(grid, args.shape)
    elif args.global_:
        rep = build_global(grid)
    else:
        rep = build_approximator(grid)
    _write_bytes(args.out, serialize(rep.net))
    doc = _json(rep.to_dict())
    if args.report:
        _write(args.report, doc)
    elif args.out not in (None, "-"):
        sys.stdout.write(doc)
    return EXIT_OK


def _read_points(args, dim: int) -> np.ndarray:
    if args.points and args.points != "-":
        with open(args.points, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    rows = []
    for line, r in enumerate(csv.reader(io.StringIO(text)), 1):
        if not r or not any(c.strip() for c in r):
            continue
        try:
            rows.append([float(c) for c in r])
        except ValueError:
            if not rows and line == 1:
                continue  # header
            raise ParseError(f"points line {line}: malformed number") from None
        if len(rows[-1]) != dim:
            raise InputError(f"points line {line}: expected {dim} coordinates")
    return np.array(rows, dtype=np.float64).reshape(-1, dim)


def cmd_eval(args) -> int:
    net = load_net(args.net)
    pts = _read_points(args, net.input_dim)
    if not np.isfinite(pts).all():
        raise InputError("points must be finite")
    out = evaluate(net, pts) if len(pts) else np.zeros((0, net.output_dim))
    buf = io.StringIO()
    for row in out:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    net = load_net(args.net)
    grid, target = _load_grid_or_target(args)
    kind = "global" if args.global_ else args.kind
    modulus = target.modulus(grid.d) if target is not None else None
    opts = analysis.VerifyOptions(seed=args.seed, scan_points=args.scan_points, pairs=args.pairs, kind=kind)
    rep = analysis.verify_all(net, grid, modulus, target, opts)
    _write(args.report, rep.to_json())
    sys.stderr.write(rep.table())
    if not rep.passed:
        sys.stderr.write("failed checks: " + ", ".join(rep.failures()) + "\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_compare(args) -> int:
    if not args.target or args.d is None or args.n is None:
        raise InputError("compare needs --target, --d and --n")
    target = get_target(args.target, args.d)
    grid = encode(target, args.d, args.n, vectorized=True)
    kuhn = build_approximator(grid)
    sota = build_sota(target.fn, target.lipschitz, 1.0, args.d, args.n, vectorized=True)
    rows = [("method", "sup_error", "empirical_lipschitz", "width", "depth", "nonzero_params")]
    for name, rep in (("kuhn", kuhn), ("baseline", sota)):
        err = analysis.sup_error_scan(rep.net, target.fn, args.d, args.scan_points, args.seed, n=args.n)
        lip = analysis.empirical_lipschitz(rep.net, args.pairs, args.seed, n=args.n)
        rows.append((name, repr(err), repr(lip), str(rep.width), str(rep.depth), str(rep.nonzero_params)))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_memorize(args) -> int:
    samples = load_samples(args.samples)
    k = len(samples)
    rep = VerificationReport()
    if args.shape:
        if len(args.shape) < 3 or any(w <= 11 for w in args.shape):
            raise InputError("--shape needs at least three widths, each greater than 11")
        cap = deep_capacity(args.shape)
        if k > cap:
            raise CapacityError(f"{k} samples exceed the capacity {cap} of widths {tuple(args.shape)}", cap)
        net = build_memorizer_deep(samples, args.shape)
        bounds = list(args.shape) + [8]
        wv = widthvec(net)
        rep.add(Check("widthvec", float(max(a - b for a, b in zip(wv, bounds))), 0.0,
                      detail="largest excess of a hidden width over its budget"))
        rep.add(Check("nonzero_params", count_nonzero_params(net),
                      2 * k + 23 * sum(args.shape) - 121 * len(args.shape)))
        tol = analysis.DEEP_TOL
    else:
        net = build_memorizer_sqrt(samples)
        c = sqrt_shape(k)[0] // 2
        rep.add(Check("width", width(net), 2 * c))
        rep.add(Check("depth", depth(net), 2))
        rep.add(Check("nonzero_params", count_nonzero_params(net), 2 * k + 8 * c))
        tol = analysis.EXACT_TOL
    err = float(np.abs(evaluate(net, samples.xs[:, None])[:, 0] - samples.ys).max())
    rep.add(Check("interpolation", err, 0.0, tol, samples=k))
    _write_bytes(args.out, serialize(net))
    doc = rep.to_json()
    if args.report:
        _write(args.report, doc)
    elif args.out not in (None, "-"):
        sys.stdout.write(doc)
    return EXIT_OK


def cmd_bound(args) -> int:
    def row(N):
        t = analysis.bound_terms(args.Delta, args.W, args.L, args.L_loss, args.d, N, args.delta, args.C, args.C_dX)
        return [str(N), repr(t.confidence), repr(t.parameter_space), repr(t.function_space), repr(t.total), t.active]

    header = ["N", "confidence", "parameter_space", "function_space", "bound", "active"]
    if args.sweep:
        lo, hi = args.sweep
        if lo < 0 or hi < lo:
            raise InputError("--sweep takes exponents LO,HI with 0 <= LO <= HI")
        rows = [row(2 ** e) for e in range(lo, hi + 1)]
    else:
        if args.N is None:
            raise InputError("--N is required without --sweep")
        rows = [row(args.N)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())
    sys.stderr.write("C and C_dX are caller-supplied constants "
                     f"(C={args.C}, C_dX={args.C_dX}); C_d={analysis.c_d(args.d)!r}\n")
    return EXIT_OK


def _sweep(text: str):
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--sweep takes two exponents LO,HI")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kuhnnet", description="Build and check Kuhn-triangulation ReLU networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_flags(sp):
        sp.add_argument("--target", choices=TARGET_NAMES)
        sp.add_argument("--grid", help="grid file (kuhnnet-grid/1 JSON or CSV)")
        sp.add_argument("--d", type=_positive)
        sp.add_argument("--n", type=_positive)
        sp.add_argument("--seed", type=int, default=analysis.DEFAULT_SEED)

    b = sub.add_parser("build", help="build an approximator net")
    grid_flags(b)
    b.add_argument("--shape", type=_int_list, help="batch sizes m_1,...,m_L summing to (n+1)^d")
    b.add_argument("--global", dest="global_", action="store_true", help="prepend the cube clamp")
    b.add_argument("--out", default="-")
    b.add_argument("--report")
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eval", help="evaluate a net at points")
    e.add_argument("net")
    e.add_argument("points", nargs="?", help="CSV of points, one per line (default: stdin)")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run the verification checks on a net")
    v.add_argument("--net", required=True)
    grid_flags(v)
    v.add_argument("--kind", choices=("flat", "global", "shaped"), default="flat")
    v.add_argument("--global", dest="global_", action="store_true")
    v.add_argument("--scan-points", type=_positive, default=10_000)
    v.add_argument("--pairs", type=_positive, default=10_000)
    v.add_argument("--report", default="-")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="compare the Kuhn net with the banded baseline")
    grid_flags(c)
    c.add_argument("--scan-points", type=_positive, default=10_000)
    c.add_argument("--pairs", type=_positive, default=10_000)
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_compare)

    m = sub.add_parser("memorize", help="build a 1-D memorizer from samples")
    m.add_argument("samples", help="CSV (x,y) or JSON list of pairs")
    m.add_argument("--shape", type=_int_list, help="hidden widths n_1,...,n_L for the deep memorizer")
    m.add_argument("--out", default="-")
    m.add_argument("--report")
    m.add_argument("--seed", type=int, default=analysis.DEFAULT_SEED)
    m.set_defaults(func=cmd_memorize)

    g = sub.add_parser("bound", help="evaluate the generalization bound")
    g.add_argument("--Delta", type=_positive, required=True, help="depth")
    g.add_argument("--W", type=_positive, required=True, help="width")
    g.add_argument("--L", type=float, required=True, help="Lipschitz constant of the hypotheses")
    g.add_argument("--L-loss", dest="L_loss", type=float, default=1.0)
    g.add_argument("--d", type=_positive, required=True)
    g.add_argument("--N", type=_positive)
    g.add_argument("--delta", type=float, default=0.05)
    g.add_argument("--C", type=float, default=1.0)
    g.add_argument("--C-dX", dest="C_dX", type=float, default=1.0)
    g.add_argument("--sweep", type=_sweep, help="LO,HI: tabulate N = 2^LO ... 2^HI")
    g.set_defaults(func=cmd_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as e:
        sys.stderr.write(f"kuhnnet: {e} (capacity {e.capacity})\n")
        return EXIT_INPUT
    except ResourceError as e:
        sys.stderr.write(f"kuhnnet: {e}\n")
        return EXIT_RESOURCE
    except ParseError as e:
        sys.stderr.write(f"kuhnnet: {e}\n")
        return EXIT_IO
    except (InputError, DomainError) as e:
        sys.stderr.write(f"kuhnnet: {e}\n")
        return EXIT_INPUT
    except OSError as e:
        sys.stderr.write(f"kuhnnet: {e}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
