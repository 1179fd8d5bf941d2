"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error. Files are only written
under ``--output``; without it results go to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import model as mdl
from .complex import build_complex, load_graph
from .pooling import cluster_nodes, downsample
from .projection import project_chain
from .spectral import FilterBank, eigensystem, filter_poly, hodge_laplacian, load_filterbank
from .sparse import write_coo


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", required=True, help="graph JSON file")
    p.add_argument("--output", help="directory for result files")
    p.add_argument("--k", type=int, default=0, help="simplex dimension")
    p.add_argument("--max-dim", type=int, default=2, help="highest simplex dimension (at most 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplexnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common()]

    sub.add_parser("complex", parents=common, help="simplex lists and boundary operators")
    sub.add_parser("spectrum", parents=common, help="Hodge Laplacian eigenvalues")

    p = sub.add_parser("filter", parents=common, help="apply a Laguerre filter")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--theta", help="comma-separated coefficients, e.g. 1,0.5,-0.2")
    src.add_argument("--filterbank", help="filter bank JSON file")
    p.add_argument("--delta", type=int, help="filter a unit pulse at this simplex instead of the input signal")
    p.add_argument("--normalize", action="store_true", help="scale the Laplacian spectrum into [0, 1]")

    p = sub.add_parser("project", parents=common, help="project a signal to another dimension")
    p.add_argument("--to", type=int, required=True, dest="to_dim")
    p.add_argument("--delta", type=int)

    p = sub.add_parser("coarsen", parents=common, help="cluster nodes and downsample the complex")
    p.add_argument("--levels", type=int, default=1)

    p = sub.add_parser("forward", parents=common, help="run inference with stored parameters")
    p.add_argument("--params", required=True)
    p.add_argument("--config", required=True)

    p = sub.add_parser("demo", parents=common, help="seeded random-parameter full-model pass")
    p.add_argument("--ablation", choices=("M1", "M2", "M3", "M4"), default="M4")
    return parser


def _load(args):
    if args.max_dim < 0 or args.max_dim > 2:
        raise UsageError("--max-dim must be 0, 1 or 2")
    path = Path(args.input)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    try:
        g, signals = load_graph(path)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from None
    return g, build_complex(g, args.max_dim), signals


class _Sink:
    """Collects named outputs and writes them under --output or to stdout."""

    def __init__(self, out_dir, stdout):
        self.out_dir = Path(out_dir) if out_dir else None
        self.stdout = stdout
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, text: str) -> None:
        if self.out_dir is None:
            self.stdout.write(f"# {name}\n{text}")
        else:
            with open(self.out_dir / name, "w", newline="") as fh:
                fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _table(fmt, name, header, rows) -> tuple[str, str]:
    if fmt == "csv":
        return f"{name}.csv", _csv(header, rows)
    records = [dict(zip(header, r)) for r in rows]
    return f"{name}.json", mdl.dumps_json(records) + "\n"


def _label(s) -> str:
    return "-".join(str(v) for v in s)


def _coo_text(m) -> str:
    buf = io.StringIO()
    write_coo(m, buf)
    return buf.getvalue()


def _check_k(c, k, low=0):
    if not low <= k <= c.max_dim:
        raise DataError(f"--k {k} outside {low}..{c.max_dim} for this complex")


def _signal(c, signals, k, delta):
    n = c.num(k)
    if delta is not None:
        if not 0 <= delta < n:
            raise DataError(f"--delta {delta} outside 0..{n - 1}")
        x = np.zeros((n, 1))
        x[delta, 0] = 1.0
        return x
    key = {0: "node_signals", 1: "edge_signals"}.get(k)
    if key in signals:
        return signals[key]
    return np.ones((n, 1))


def _signal_rows(c, k, x):
    return [[_label(s)] + [float(v) for v in row] for s, row in zip(c.simplices[k], x)]


def cmd_complex(args, sink):
    _, c, _ = _load(args)
    counts = c.counts
    for k in range(c.max_dim + 1):
        header = ["index"] + [f"v{i}" for i in range(k + 1)]
        rows = [[i, *s] for i, s in enumerate(c.simplices[k])]
        sink.emit(*_table(args.format, f"simplices_{k}", header, rows))
        if k >= 1:
            sink.emit(f"boundary_{k}.coo", _coo_text(c.boundary[k]))
    sink.emit("counts.json", mdl.dumps_json({str(k): n for k, n in enumerate(counts)}) + "\n")
    sink.stdout.write("counts: " + "/".join(str(n) for n in counts) + "\n")


def cmd_spectrum(args, sink):
    _, c, _ = _load(args)
    _check_k(c, args.k)
    es = eigensystem(hodge_laplacian(c, args.k))
    rows = [[i, float(v)] for i, v in enumerate(es.eigenvalues)]
    sink.emit(*_table(args.format, f"spectrum_{args.k}", ["index", "eigenvalue"], rows))


def cmd_filter(args, sink):
    _, c, signals = _load(args)
    _check_k(c, args.k)
    x = _signal(c, signals, args.k, args.delta)
    if args.theta is not None:
        try:
            coeffs = [float(v) for v in args.theta.split(",")]
        except ValueError:
            raise UsageError(f"--theta must be comma-separated numbers, got {args.theta!r}") from None
        fb = FilterBank.scalar(args.k, coeffs, x.shape[1])
    else:
        try:
            fb = load_filterbank(args.filterbank)
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"{args.filterbank}: {exc}") from None
    try:
        y = filter_poly(hodge_laplacian(c, args.k, args.normalize), fb, x)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    header = ["simplex"] + [f"ch{i}" for i in range(y.shape[1])]
    sink.emit(*_table(args.format, f"filtered_{args.k}", header, _signal_rows(c, args.k, y)))


def cmd_project(args, sink):
    _, c, signals = _load(args)
    _check_k(c, args.k)
    _check_k(c, args.to_dim)
    if args.k == args.to_dim:
        raise UsageError("--k and --to must differ")
    x = _signal(c, signals, args.k, args.delta)
    y = project_chain(c, args.k, args.to_dim)(x)
    header = ["simplex"] + [f"ch{i}" for i in range(y.shape[1])]
    sink.emit(*_table(args.format, f"projected_{args.k}_to_{args.to_dim}", header, _signal_rows(c, args.to_dim, y)))


def cmd_coarsen(args, sink):
    _, c, _ = _load(args)
    if args.levels < 1:
        raise UsageError("--levels must be at least 1")
    nc = cluster_nodes(c, args.levels)
    res = downsample(c, nc)
    sink.emit("clusters.txt", "".join(f"{v} {int(cl)}\n" for v, cl in enumerate(nc.cluster_of)))
    for k, s in enumerate(res.assignment):
        sink.emit(f"assignment_{k}.coo", _coo_text(s))
    cc = res.coarse_complex
    for k in range(1, cc.max_dim + 1):
        sink.emit(f"coarse_boundary_{k}.coo", _coo_text(cc.boundary[k]))
    for k in range(cc.max_dim + 1):
        header = ["index"] + [f"v{i}" for i in range(k + 1)]
        rows = [[i, *s] for i, s in enumerate(cc.simplices[k])]
        sink.emit(*_table(args.format, f"coarse_simplices_{k}", header, rows))
    sink.stdout.write("coarse counts: " + "/".join(str(n) for n in cc.counts) + "\n")


def _inputs(c, signals):
    x0 = signals.get("node_signals", np.ones((c.num(0), 1)))
    x1 = signals.get("edge_signals", np.ones((c.num(1), 1)))
    return x0, x1


def _prediction(args, sink, y):
    if sink.out_dir is not None and args.format == "csv":
        sink.emit("prediction.csv", _csv(["output", "value"], [[i, float(v)] for i, v in enumerate(y)]))
    elif sink.out_dir is not None:
        sink.emit("prediction.json", mdl.dumps_json({"prediction": [float(v) for v in y]}) + "\n")
    sink.stdout.write("prediction: " + " ".join(f"{v:.17g}" for v in y) + "\n")


def cmd_forward(args, sink):
    _, c, signals = _load(args)
    try:
        cfg = mdl.load_config(args.config)
        params = mdl.load_params(args.params, cfg)
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(str(exc)) from None
    x0, x1 = _inputs(c, signals)
    try:
        y = mdl.forward(c, x0, x1, params, cfg)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _prediction(args, sink, y)


def cmd_demo(args, sink):
    _, c, signals = _load(args)
    x0, x1 = _inputs(c, signals)
    cfg = mdl.ablation_config(
        args.ablation,
        num_blocks=2,
        conv_layers_per_block=[2, 2],
        filters_per_layer=[8, 16],
        poly_order=3,
        qk_dim=8,
        fc_layers=[16, 1],
        pe_dims=(2, 4),
        max_dim=args.max_dim,
        node_in=x0.shape[1],
        edge_in=x1.shape[1],
    )
    params = mdl.init_params(cfg, args.seed)
    y = mdl.forward(c, x0, x1, params, cfg)
    if sink.out_dir is not None:
        sink.emit("config.json", mdl.dumps_json(cfg.to_dict()) + "\n")
        sink.emit("params.json", mdl.dumps_json(mdl.params_to_dict(params)) + "\n")
    _prediction(args, sink, y)


COMMANDS = {
    "complex": cmd_complex,
    "spectrum": cmd_spectrum,
    "filter": cmd_filter,
    "project": cmd_project,
    "coarsen": cmd_coarsen,
    "forward": cmd_forward,
    "demo": cmd_demo,
}


def _thread_limit():
    raw = os.environ.get("SIMPLEX_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SIMPLEX_THREADS must be an integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(n, 1))


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:
            return 0 if exc.code in (0, None) else 1
        limiter = _thread_limit()
        try:
            COMMANDS[args.command](args, _Sink(args.output, stdout))
        finally:
            if limiter is not None:
                limiter.unregister()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
