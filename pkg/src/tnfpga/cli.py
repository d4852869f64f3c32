"""Command-line driver: ``tnfpga <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .circuit import Circuit, build_test_circuit, ghz_circuit
from .fixed import read_raw, write_raw
from .network import BACKENDS, circuit_to_network, contract_network, dump_network, load_network
from .paths import ContractionPath, PathError, SearchBudget, greedy_search, path_cost, stochastic_search
from .systolic import ArrayConfig, gemm_naive, gemm_systolic


def _write(text: str, dest: str | None) -> None:
    if dest in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(dest).write_text(text)


def _budget(args) -> SearchBudget:
    return SearchBudget(
        wall_clock_limit=args.budget_seconds,
        max_samples=args.budget_samples,
        seed=args.seed,
    )


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=bench.STRATEGIES, default="greedy")
    p.add_argument("--budget-seconds", type=float, default=600.0)
    p.add_argument("--budget-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=BACKENDS, default="float")
    p.add_argument("--array-rows", type=int, default=4)
    p.add_argument("--array-cols", type=int, default=4)


def cmd_gen_circuit(args) -> int:
    c = ghz_circuit(args.n) if args.ghz else build_test_circuit(args.n, args.k, args.seed)
    _write(c.dumps(), args.output)
    return 0


def _network_from_args(args):
    if args.network:
        return None, load_network(Path(args.network).read_text())
    c = Circuit.loads(Path(args.circuit).read_text())
    return c, circuit_to_network(c, args.out_bits or "0" * c.n, args.in_bits)


def cmd_dump_network(args) -> int:
    _, tn = _network_from_args(args)
    _write(dump_network(tn), args.output)
    return 0


def cmd_find_path(args) -> int:
    _, tn = _network_from_args(args)
    if args.strategy == "greedy":
        path = greedy_search(tn)
        samples = 1
    else:
        path, _, samples, _ = stochastic_search(tn, _budget(args))
    cost = path_cost(tn, path)
    _write(path.dumps(), args.output)
    print(
        f"strategy={args.strategy} samples={samples} peak_order={cost.peak_order} "
        f"peak_elems={cost.peak_elems} total_flops={cost.total_flops} steps={cost.steps}",
        file=sys.stderr,
    )
    return 0


def cmd_contract(args) -> int:
    _, tn = _network_from_args(args)
    path = ContractionPath.loads(Path(args.path).read_text()) if args.path else greedy_search(tn)
    try:
        res = contract_network(
            tn, path, args.backend, ArrayConfig(args.array_rows, args.array_cols),
            common_size=args.common_size, precontract=args.precontract,
        )
    except PathError as exc:
        print(f"path error: {exc}", file=sys.stderr)
        return 2
    if args.trace:
        Path(args.trace).write_text(res.trace.to_csv())
    out = {
        "backend": args.backend,
        "amplitude": [res.value.real, res.value.imag],
        "saturated": res.saturated,
    }
    if res.raw is not None:
        out.update(
            raw=[int(res.raw.re), int(res.raw.im)],
            model_cycles=res.trace.total_cycles,
            macs=res.trace.total_macs,
            common_size=res.trace.common_size,
        )
    print(json.dumps(out))
    return 0


def cmd_verify(args) -> int:
    c = Circuit.loads(Path(args.circuit).read_text())
    try:
        path = ContractionPath.loads(Path(args.path).read_text())
    except (PathError, ValueError, KeyError, TypeError) as exc:
        print(f"FAIL could not parse path: {exc}")
        return 1
    report = bench.verify(
        c, path, args.backend, args.out_bits, args.tol, ArrayConfig(args.array_rows, args.array_cols)
    )
    print(report.summary())
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    if args.spec:
        spec = bench.load_spec(args.spec)
    else:
        spec = bench.SweepSpec(
            n_values=args.n, k_values=args.k, seeds=args.seeds,
            strategies=args.strategies, backends=args.backends,
            budget=_budget(args),
            array=ArrayConfig(args.array_rows, args.array_cols),
            max_fixed_size=args.max_fixed_size,
        )
    rows = bench.run_sweep(spec, jobs=args.jobs)
    try:
        _write(bench.rows_to_csv(rows), args.output)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_gemm(args) -> int:
    a, b = read_raw(args.a), read_raw(args.b)
    if args.backend == "fixed-naive":
        res = gemm_naive(a, b)
    else:
        res = gemm_systolic(a, b, ArrayConfig(args.array_rows, args.array_cols))
    write_raw(args.output, res.c)
    print(json.dumps({"cycles": res.cycles, "macs": res.macs, "saturated": res.saturated}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tnfpga", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-circuit", help="write a test (or GHZ) circuit as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ghz", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_circuit)

    def network_source(p):
        p.add_argument("circuit", nargs="?")
        p.add_argument("--network", help="tensor network JSON instead of a circuit")
        p.add_argument("--out-bits")
        p.add_argument("--in-bits")

    p = sub.add_parser("dump-network", help="write the amplitude network as tensor JSON")
    network_source(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dump_network)

    p = sub.add_parser("find-path", help="search for a contraction path")
    network_source(p)
    _add_search_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_find_path)

    p = sub.add_parser("contract", help="contract a network along a path")
    network_source(p)
    p.add_argument("--path", help="path JSON (default: greedy)")
    _add_backend_flags(p)
    p.add_argument("--common-size", type=int)
    p.add_argument("--precontract", type=int, default=0)
    p.add_argument("--trace", help="write the per-step trace CSV here")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("verify", help="check a path against the statevector oracle")
    p.add_argument("circuit")
    p.add_argument("path")
    _add_backend_flags(p)
    p.add_argument("--out-bits")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run the (n, k) benchmark grid and emit CSV")
    p.add_argument("--spec", help="sweep spec JSON; overrides the grid flags")
    p.add_argument("--n", type=int, nargs="+", default=[2, 4])
    p.add_argument("--k", type=int, nargs="+", default=[1, 2])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--strategies", nargs="+", choices=bench.STRATEGIES, default=list(bench.STRATEGIES))
    p.add_argument("--backends", nargs="+", choices=BACKENDS, default=list(BACKENDS))
    _add_search_flags(p)
    p.add_argument("--array-rows", type=int, default=4)
    p.add_argument("--array-cols", type=int, default=4)
    p.add_argument("--max-fixed-size", type=int, default=256)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gemm", help="multiply two raw fixed-point matrix dumps")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--backend", choices=("fixed-naive", "fixed-systolic"), default="fixed-systolic")
    p.add_argument("--array-rows", type=int, default=4)
    p.add_argument("--array-cols", type=int, default=4)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gemm)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if getattr(args, "circuit", "x") is None and not getattr(args, "network", None):
        parser.error("give a circuit file or --network")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
