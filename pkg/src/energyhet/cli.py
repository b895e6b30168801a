"""Command-line front end: ``energyhet <subcommand> ...``.

Output is JSON by default (``--format csv`` for tables). Failures print
``{"error": "..."}`` and exit with status 1.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .approx import energy_from_summaries
from .empirical import METHODS, energy_statistic
from .moments import MomentSummary, read_csv, summarize
from .proto import (
    CoordinatorServer,
    NodeClient,
    TcpTransport,
    collect,
    file_digest,
    h_matrix,
    NodeSummaryMessage,
    penalty_weights,
)
from .synth import parse_spec, sample
from .testing import permutation_test


def _address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _flat_csv(obj: dict) -> str:
    buf = io.StringIO()
    flat = {k: v for k, v in obj.items() if not isinstance(v, (dict, list))}
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(flat)
    writer.writerow(flat.values())
    return buf.getvalue()


def _emit(args, obj, table: str | None = None):
    if args.format == "csv":
        sys.stdout.write(table if table is not None else _flat_csv(obj))
    else:
        sys.stdout.write(json.dumps(obj) + "\n")


def _load_summary(path: str, order: int) -> MomentSummary:
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return MomentSummary.from_dict(obj.get("summary", obj))
    return summarize(read_csv(path), order)


def cmd_summarize(args):
    s = summarize(read_csv(args.file), args.order)
    table = io.StringIO()
    writer = csv.writer(table, lineterminator="\n")
    writer.writerow(["dim", "mean"] + [f"s{k}" for k in range(2, s.order + 1)])
    for i in range(s.d):
        writer.writerow([i, repr(float(s.mean[i]))] + [repr(float(v)) for v in s.sums[:, i]])
    _emit(args, s.to_dict(), table.getvalue())


def cmd_distance(args):
    if args.summaries:
        sx, sy = (_load_summary(p, args.order) for p in (args.x, args.y))
        if args.method == "empirical":
            raise ValueError("empirical method needs raw CSV data, not summaries")
        est = energy_from_summaries(sx, sy, args.method)
    else:
        x, y = read_csv(args.x), read_csv(args.y)
        if x.shape[1] != y.shape[1]:
            raise ValueError(f"dimension mismatch: {x.shape[1]} != {y.shape[1]}")
        if args.method == "empirical":
            est = energy_statistic(x, y, threads=args.threads)
        else:
            est = energy_from_summaries(summarize(x, args.order), summarize(y, args.order),
                                        args.method)
    _emit(args, est.to_dict())


def cmd_hmatrix(args):
    ids = args.ids.split(",") if args.ids else [Path(p).stem for p in args.inputs]
    if len(ids) != len(args.inputs):
        raise ValueError("--ids must name every input")
    messages = [NodeSummaryMessage(i, _load_summary(p, args.order))
                for i, p in zip(ids, args.inputs)]
    registry = collect(messages)
    if registry.rejections:
        raise ValueError("; ".join(err for _, err in registry.rejections))
    h = h_matrix(registry, args.method)
    out = h.to_dict()
    out["weights"] = penalty_weights(h, args.base_weight).tolist()
    table = io.StringIO()
    writer = csv.writer(table, lineterminator="\n")
    writer.writerow([""] + list(h.ids))
    for i, row in zip(h.ids, h.values):
        writer.writerow([i] + [repr(float(v)) for v in row])
    _emit(args, out, table.getvalue())


def cmd_permtest(args):
    x, y = read_csv(args.x), read_csv(args.y)
    result = permutation_test(x, y, args.permutations, seed=args.seed)
    _emit(args, result.to_dict())


def cmd_synth(args):
    data = sample(parse_spec(args.dist), args.n, args.d, seed=args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{j}" for j in range(args.d)])
    writer.writerows([repr(float(v)) for v in row] for row in data)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
        _emit(args, {"out": args.out, "dist": args.dist, "n": args.n, "d": args.d,
                     "seed": args.seed})
    else:
        sys.stdout.write(buf.getvalue())


def cmd_bench(args):
    obj = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
    if args.seed is not None:
        obj["seed"] = args.seed
    config = bench_mod.BenchConfig.from_dict(obj)

    def progress(row):
        print(f"{row.dist_a} vs {row.dist_b} n={row.n} {row.method}: H={row.H:.5f}",
              file=sys.stderr)

    report = bench_mod.run_bench(config, progress if args.verbose else None)
    text = report.to_csv() if args.format == "csv" else report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_coordinator(args):
    server = CoordinatorServer(args.listen)
    server.start()
    print(json.dumps({"listening": "%s:%d" % server.server_address[:2]}), file=sys.stderr)
    try:
        if not server.coordinator.wait_for(args.min_nodes, args.timeout):
            raise TimeoutError(f"fewer than {args.min_nodes} nodes before timeout")
    finally:
        server.shutdown()
        server.server_close()
    registry = server.coordinator.snapshot()
    h = h_matrix(registry, args.method)
    out = h.to_dict()
    out["rejections"] = [{"node_id": n, "error": e} for n, e in registry.rejections]
    if args.out:
        Path(args.out).write_text(json.dumps(out) + "\n", encoding="utf-8")
    _emit(args, out)


def cmd_node(args):
    summary = summarize(read_csv(args.data), args.order)
    client = NodeClient(args.id, TcpTransport(args.connect))
    reply = client.publish(summary, digest=file_digest(args.data))
    _emit(args, reply)
    if not reply.get("ok"):
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="energyhet",
        description="Energy distance and energy coefficient between datasets.",
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="moment summary of a CSV file")
    p.add_argument("file")
    p.add_argument("--order", type=int, choices=(4, 6), default=4)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("distance", help="energy distance and H between two datasets")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--method", choices=METHODS, default="empirical")
    p.add_argument("--order", type=int, choices=(4, 6), default=4)
    p.add_argument("--summaries", action="store_true",
                   help="inputs are summary JSON files from `summarize`")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("hmatrix", help="pairwise H across datasets or summaries")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--ids")
    p.add_argument("--method", choices=METHODS[1:], default="taylor")
    p.add_argument("--order", type=int, choices=(4, 6), default=4)
    p.add_argument("--base-weight", type=float, default=1.0)
    p.set_defaults(func=cmd_hmatrix)

    p = sub.add_parser("permtest", help="permutation energy test")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--permutations", type=int, default=999)
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("synth", help="write a synthetic CSV dataset")
    p.add_argument("--dist", required=True, help='e.g. "normal(0,1)", "exponential(1)"')
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="H and timing across distributions and sizes")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("coordinator", help="collect node summaries over TCP")
    p.add_argument("--listen", type=_address, required=True)
    p.add_argument("--min-nodes", type=int, required=True)
    p.add_argument("--method", choices=METHODS[1:], default="taylor")
    p.add_argument("--out")
    p.add_argument("--timeout", type=float, default=None)
    p.set_defaults(func=cmd_coordinator)

    p = sub.add_parser("node", help="publish a CSV file's summary to a coordinator")
    p.add_argument("--connect", type=_address, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--order", type=int, choices=(4, 6), default=4)
    p.set_defaults(func=cmd_node)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (ValueError, OSError, TimeoutError) as exc:
        sys.stdout.write(json.dumps({"error": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
