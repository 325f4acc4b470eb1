"""Command-line interface.

Subcommands::

    generate wsbm    --blocks 10x5 --p-diag 0.2 --p-off 0.05
                     --w-diag norm:0,0.2 --w-off norm:0,0.05 --seed 7 -o out.json
    generate maxcut  --from-edges graph.txt -o out.json
    solve            --algo qimf --nb 40 --ne 3000 --ns auto-simple --seed 1 inst.json
    bench            --algos qimf,quamf,sa --seeds 1..10 --budget-queries 6000000 inst.json
    ingest           --prices p.csv --sectors s.csv --lambda 0.5 -o po.json
    preprocess       inst.json -o reduced.json --fixed-out fixed.json

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All randomness
derives from ``--seed``; sub-streams are derived by hashing (seed, role), so
repeated invocations with equal flags produce byte-identical output files.

Trace CSVs have the exact header ``epoch,queries,mean_cost,best_cost``.
The queries column is the raw training ledger; the epoch column rescales it
by one qimf epoch's worth of queries (``n_s * n_b`` as resolved for the
run), which puts runs of different algorithms on a directly comparable axis.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import instance as inst_mod
from .estimator import EstimatorMode, shot_count_block, shot_count_simple
from .hamiltonian import (IsingHamiltonian, ising_to_qubo, preprocess_dominant,
                          qubo_to_ising)
from .instance import QuboInstance, generate_wsbm, make_wsbm_spec, parse_weight_dist
from .problems import (build_maxcut, build_portfolio, load_price_table,
                       portfolio_inputs, read_edge_list)
from .rng import rng_for
from .solver import Algorithm, RunTrace, SolverConfig, solve

TRACE_HEADER = "epoch,queries,mean_cost,best_cost"


class CliError(RuntimeError):
    """Fatal CLI failure (exit code 1)."""


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _parse_blocks(text: str) -> list[int]:
    """'10x5' -> five blocks of 10; '4' -> one block of 4; comma-separable."""
    sizes: list[int] = []
    for item in text.split(","):
        size, _, count = item.partition("x")
        try:
            s = int(size)
            c = int(count) if count else 1
        except ValueError:
            raise CliError(f"bad --blocks item {item!r}") from None
        if s < 1 or c < 1:
            raise CliError(f"bad --blocks item {item!r}")
        sizes.extend([s] * c)
    return sizes


def _load_instance(path) -> QuboInstance:
    try:
        return inst_mod.load(path)
    except (OSError, inst_mod.InstanceFormatError) as exc:
        raise CliError(str(exc)) from None


def _resolve_lambda(inst: QuboInstance, flag: float | None) -> float:
    if flag is not None:
        return flag
    if "lambda" in inst.metadata:
        return float(inst.metadata["lambda"])
    return 1.0


def _instance_hamiltonian(inst: QuboInstance, lam: float) -> IsingHamiltonian:
    h = qubo_to_ising(inst, linear=inst.linear_array(), risk_weight=lam)
    extra = float(inst.metadata.get("offset", "0"))
    if extra != 0.0:
        h = IsingHamiltonian(num_qubits=h.num_qubits, terms=h.terms,
                             offset=h.offset + extra)
    return h


def _resolve_ns(spec: str, inst: QuboInstance, h: IsingHamiltonian) -> int:
    if spec == "auto-simple":
        return shot_count_simple(max(h.num_terms, 1), inst.num_blocks())
    if spec == "auto-block":
        try:
            p = float(inst.metadata["p_off"])
            q = float(inst.metadata["p_diag"])
        except KeyError:
            raise CliError("auto-block needs p_diag/p_off metadata "
                           "(produced by 'generate wsbm')") from None
        return shot_count_block(max(h.num_terms, 1), inst.num_blocks(), p, q)
    try:
        n_s = int(spec)
    except ValueError:
        raise CliError(f"--ns must be an integer, 'auto-simple' or "
                       f"'auto-block', got {spec!r}") from None
    if n_s < 1:
        raise CliError(f"--ns must be >= 1, got {n_s}")
    return n_s


def write_trace(path, trace: RunTrace, epoch_unit: int) -> None:
    """Dump per-epoch records; epoch = queries / epoch_unit."""
    lines = [TRACE_HEADER]
    for rec in trace.records:
        epoch = rec.queries / epoch_unit if epoch_unit > 0 else float(rec.epoch)
        lines.append(f"{epoch!r},{rec.queries},{rec.mean_cost!r},{rec.best_cost!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _build_config(algo: Algorithm, args, n_s: int | None) -> SolverConfig:
    return SolverConfig(
        algorithm=algo,
        n_b=args.nb,
        n_s=n_s,
        n_e=args.ne,
        estimator_mode=EstimatorMode(args.mode),
        learning_rate=args.lr,
        seed=args.seed,
        preprocess=getattr(args, "preprocess", False),
        budget_queries=getattr(args, "budget_queries", None),
    )


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.family == "wsbm":
        inst = _generate_wsbm(args)
    else:
        graph = read_edge_list(args.from_edges)
        inst = build_maxcut(graph)
        inst.metadata["source"] = str(args.from_edges)
    inst_mod.save(inst, args.output)

    h = qubo_to_ising(inst, linear=inst.linear_array(),
                      risk_weight=_resolve_lambda(inst, None))
    n_w = h.num_terms
    n_blocks = inst.num_blocks()
    parts = [f"wrote {args.output}: {inst.num_vars} variables, n_w={n_w}"]
    if n_w:
        parts.append(f"suggested n_s (simple, N={n_blocks})="
                     f"{shot_count_simple(n_w, n_blocks)}")
        p = float(inst.metadata.get("p_off", "0") or "0")
        q = float(inst.metadata.get("p_diag", "0") or "0")
        if 0 < p <= q and p / q < 0.8:
            parts.append(f"suggested n_s (block, p={p}, q={q})="
                         f"{shot_count_block(n_w, n_blocks, p, q)}")
    print("; ".join(parts))
    return 0


def _generate_wsbm(args) -> QuboInstance:
    sizes = _parse_blocks(args.blocks)
    n_blocks = len(sizes)
    try:
        w_diag = parse_weight_dist(args.w_diag)
        w_off = parse_weight_dist(args.w_off)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    conn = [[args.p_diag if a == b else args.p_off for b in range(n_blocks)]
            for a in range(n_blocks)]
    weights = [[w_diag if a == b else w_off for b in range(n_blocks)]
               for a in range(n_blocks)]
    try:
        spec = make_wsbm_spec(sizes, conn, weights)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    inst = generate_wsbm(spec, args.seed)
    inst.metadata.update({
        "blocks": args.blocks,
        "p_diag": repr(float(args.p_diag)),
        "p_off": repr(float(args.p_off)),
        "w_diag": args.w_diag,
        "w_off": args.w_off,
    })
    if args.returns is not None:
        try:
            dist = parse_weight_dist(args.returns)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        rng = rng_for(args.seed, "returns")
        inst.linear = tuple(dist.sample(rng) for _ in range(inst.num_vars))
        inst.metadata["returns"] = args.returns
    if args.risk_weight is not None:
        inst.metadata["lambda"] = repr(float(args.risk_weight))
    return inst


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    lam = _resolve_lambda(inst, args.risk_weight)
    h = _instance_hamiltonian(inst, lam)
    algo = Algorithm(args.algo)
    n_s = _resolve_ns(args.ns, inst, h)
    cfg = _build_config(algo, args, n_s)
    try:
        trace = solve(h, cfg)
    except ValueError as exc:
        raise CliError(str(exc)) from None

    trace_path = args.trace
    if trace_path is None:
        stem = str(args.instance)
        stem = stem[:-5] if stem.endswith(".json") else stem
        trace_path = f"{stem}.{algo.value}.s{args.seed}.trace.csv"
    epoch_unit = (n_s if n_s else max(h.num_terms, 1)) * args.nb
    write_trace(trace_path, trace, epoch_unit)

    line = (f"algo={algo.value} seed={args.seed} final={trace.final_cost!r} "
            f"best={trace.best_cost!r} queries={trace.ledger.training_total} "
            f"trace={trace_path}")
    if inst.metadata.get("problem") == "maxcut":
        line += f" cut={-trace.best_cost!r}"
    print(line)
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for item in text.split(","):
        if ".." in item:
            lo, _, hi = item.partition("..")
            try:
                seeds.extend(range(int(lo), int(hi) + 1))
            except ValueError:
                raise CliError(f"bad --seeds range {item!r}") from None
        else:
            try:
                seeds.append(int(item))
            except ValueError:
                raise CliError(f"bad --seeds item {item!r}") from None
    if not seeds:
        raise CliError("--seeds selected nothing")
    return seeds


def _bench_epochs(algo: Algorithm, budget: int, n_b: int, n_s: int,
                  n_w: int) -> int:
    per = {Algorithm.QIMF: n_s * n_b, Algorithm.QUAMF: n_w * n_b}.get(algo)
    if per is None:
        return 1  # budget-driven algorithms ignore n_e
    n_e = budget // per
    if n_e < 1:
        raise CliError(f"budget {budget} is below one {algo.value} epoch "
                       f"({per} queries)")
    return n_e


def _bench_worker(payload: tuple) -> dict:
    (path, algo_value, seed, n_b, n_s, n_e, mode, budget, lam, trace_dir) = payload
    try:
        inst = inst_mod.load(path)
        h = _instance_hamiltonian(inst, lam)
        algo = Algorithm(algo_value)
        cfg = SolverConfig(algorithm=algo, n_b=n_b, n_s=n_s, n_e=n_e,
                           estimator_mode=EstimatorMode(mode), seed=seed,
                           budget_queries=(budget if algo in (
                               Algorithm.SA, Algorithm.GREEDY,
                               Algorithm.ONE_PLUS_ONE) else None))
        trace = solve(h, cfg)
        if trace_dir is not None:
            write_trace(f"{trace_dir}/{algo.value}_seed{seed}.trace.csv", trace,
                        n_s * n_b)
        return {
            "algo": algo.value,
            "seed": seed,
            "final_cost": trace.final_cost,
            "best_cost": trace.best_cost,
            "queries": trace.ledger.training_total,
            "seconds": round(trace.seconds, 6),
        }
    except Exception as exc:  # mark the failure, keep the cell
        return {"algo": algo_value, "seed": seed, "final_cost": None,
                "best_cost": None, "queries": None, "seconds": None,
                "error": str(exc)}


def cmd_bench(args) -> int:
    inst = _load_instance(args.instance)
    lam = _resolve_lambda(inst, args.risk_weight)
    h = _instance_hamiltonian(inst, lam)
    n_w = h.num_terms
    if n_w == 0:
        raise CliError("instance maps to an empty Hamiltonian")
    algos = [Algorithm(a) for a in args.algos.split(",") if a]
    if not algos:
        raise CliError("--algos selected nothing")
    seeds = _parse_seeds(args.seeds)
    n_s = _resolve_ns(args.ns, inst, h)

    jobs = []
    for algo in algos:
        n_e = _bench_epochs(algo, args.budget_queries, args.nb, n_s, n_w)
        for seed in seeds:
            jobs.append((str(args.instance), algo.value, seed, args.nb, n_s,
                         n_e, args.mode, args.budget_queries, lam,
                         args.trace_dir))

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            runs = list(pool.map(_bench_worker, jobs))
    else:
        runs = [_bench_worker(job) for job in jobs]
    runs.sort(key=lambda r: (r["algo"], r["seed"]))
    failures = sum(1 for r in runs if "error" in r)

    aggregates = []
    for algo in algos:
        vals = [r["best_cost"] for r in runs
                if r["algo"] == algo.value and r.get("best_cost") is not None]
        if vals:
            mean = float(np.mean(vals))
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            aggregates.append({"algo": algo.value, "mean": mean, "std": std,
                               "n": len(vals)})
        else:
            aggregates.append({"algo": algo.value, "mean": None, "std": None,
                               "n": 0})
    for name, value in args.extern or []:
        aggregates.append({"algo": name, "mean": value, "std": None, "n": 0})

    report = {"runs": runs, "aggregates": aggregates}
    json_path = args.json
    if json_path is None:
        stem = str(args.instance)
        stem = stem[:-5] if stem.endswith(".json") else stem
        json_path = f"{stem}.bench.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")

    print(_format_table(aggregates))
    print(f"report: {json_path}")
    if failures:
        print(f"{failures} run(s) failed; see the JSON report", file=sys.stderr)
        return 1
    return 0


def _format_table(aggregates: list[dict]) -> str:
    def fmt(x, width):
        return ("-" if x is None else f"{x:.6g}").rjust(width)

    name_w = max(4, max(len(a["algo"]) for a in aggregates))
    lines = [f"{'algo'.ljust(name_w)}  {'best(mean)'.rjust(12)}  "
             f"{'std'.rjust(12)}  {'n'.rjust(3)}"]
    for a in aggregates:
        lines.append(f"{a['algo'].ljust(name_w)}  {fmt(a['mean'], 12)}  "
                     f"{fmt(a['std'], 12)}  {str(a['n']).rjust(3)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    try:
        table = load_price_table(args.prices, args.sectors)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc)) from None
    cov, returns, labels, tickers = portfolio_inputs(table)
    if args.return_scale != 1.0:
        returns = returns * args.return_scale
    inst = build_portfolio(cov, returns, args.risk_weight)
    inst.block_labels = labels
    inst.metadata.update({
        "tickers": ",".join(tickers),
        "num_sectors": str(len(set(labels))),
        "return_scale": repr(float(args.return_scale)),
    })
    inst_mod.save(inst, args.output)
    n_w = qubo_to_ising(inst, risk_weight=1.0).num_terms
    n_blocks = len(set(labels))
    suggestion = shot_count_simple(n_w, n_blocks) if n_w else 0
    print(f"wrote {args.output}: {inst.num_vars} assets across {n_blocks} "
          f"sectors, n_w={n_w}, suggested n_s={suggestion}")
    return 0


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    inst = _load_instance(args.instance)
    lam = _resolve_lambda(inst, args.risk_weight)
    h = _instance_hamiltonian(inst, lam)
    fixed, reduced_h = preprocess_dominant(h)

    if not fixed:
        # Nothing to substitute, so the reduced instance is the input.
        inst_mod.save(inst, args.output)
        with open(args.fixed_out, "w", encoding="utf-8") as fh:
            json.dump({}, fh)
            fh.write("\n")
        print(f"fixed 0 of {inst.num_vars} variables; wrote {args.output} "
              f"and {args.fixed_out}")
        return 0

    with open(args.fixed_out, "w", encoding="utf-8") as fh:
        json.dump({str(i): b for i, b in sorted(fixed.items())}, fh,
                  indent=1, sort_keys=True)
        fh.write("\n")
    if reduced_h.num_qubits == 0:
        # Dominance determined every variable; there is no residual problem.
        print(f"fixed {len(fixed)} of {inst.num_vars} variables (all of "
              f"them); optimal cost {reduced_h.offset!r}; wrote "
              f"{args.fixed_out}; no reduced instance to write")
        return 0

    reduced_inst, constant = ising_to_qubo(reduced_h)
    meta = {k: v for k, v in inst.metadata.items()
            if k not in ("lambda", "offset")}
    meta["preprocessed"] = "true"
    meta["offset"] = repr(float(constant))
    reduced_inst.metadata = meta
    if inst.block_labels is not None:
        kept = [i for i in range(inst.num_vars) if i not in fixed]
        reduced_inst.block_labels = tuple(inst.block_labels[i] for i in kept)
    inst_mod.save(reduced_inst, args.output)
    print(f"fixed {len(fixed)} of {inst.num_vars} variables; wrote "
          f"{args.output} and {args.fixed_out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _parse_extern(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"--extern expects name=value, "
                                         f"got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--extern value must be numeric, "
                                         f"got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qimf",
                                     description="QUBO solver and benchmark "
                                                 "harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="create instance files")
    gen_sub = gen.add_subparsers(dest="family", required=True)
    wsbm = gen_sub.add_parser("wsbm", help="weighted stochastic block model")
    wsbm.add_argument("--blocks", required=True,
                      help="block sizes, e.g. 10x5 or 10,20,30")
    wsbm.add_argument("--p-diag", type=float, required=True,
                      help="intra-block edge probability")
    wsbm.add_argument("--p-off", type=float, default=0.0,
                      help="inter-block edge probability")
    wsbm.add_argument("--w-diag", required=True,
                      help="intra-block weight distribution (norm:M,S | "
                           "exp:R | unif:L,H | const:V)")
    wsbm.add_argument("--w-off", default="const:0",
                      help="inter-block weight distribution")
    wsbm.add_argument("--returns", default=None,
                      help="draw a linear return vector from this distribution")
    wsbm.add_argument("--lambda", dest="risk_weight", type=float, default=None,
                      help="stamp a risk/return weight into metadata")
    wsbm.add_argument("--seed", type=int, default=0)
    wsbm.add_argument("-o", "--output", required=True)
    wsbm.set_defaults(func=cmd_generate)
    mc = gen_sub.add_parser("maxcut", help="weighted max-cut from an edge list")
    mc.add_argument("--from-edges", required=True,
                    help="file of 'u v w' lines")
    mc.add_argument("-o", "--output", required=True)
    mc.set_defaults(func=cmd_generate)

    slv = sub.add_parser("solve", help="run one algorithm on an instance")
    slv.add_argument("instance")
    slv.add_argument("--algo", required=True,
                     choices=[a.value for a in Algorithm])
    slv.add_argument("--nb", type=int, default=40, help="batch size")
    slv.add_argument("--ne", type=int, default=1000,
                     help="epochs (proposals/iterations for sa/oneplusone)")
    slv.add_argument("--ns", default="auto-simple",
                     help="shot count: integer, auto-simple or auto-block")
    slv.add_argument("--mode", default=EstimatorMode.PARTIAL_SUM.value,
                     choices=[m.value for m in EstimatorMode])
    slv.add_argument("--lambda", dest="risk_weight", type=float, default=None)
    slv.add_argument("--lr", type=float, default=0.01)
    slv.add_argument("--seed", type=int, default=0)
    slv.add_argument("--preprocess", action="store_true",
                     help="fix dominant variables before solving")
    slv.add_argument("--trace", default=None, help="trace CSV path")
    slv.set_defaults(func=cmd_solve)

    ben = sub.add_parser("bench", help="compare algorithms at a shared "
                                       "query budget")
    ben.add_argument("instance")
    ben.add_argument("--algos", required=True,
                     help="comma-separated algorithm names")
    ben.add_argument("--seeds", required=True, help="e.g. 1..10 or 1,2,5")
    ben.add_argument("--budget-queries", type=int, required=True)
    ben.add_argument("--nb", type=int, default=40)
    ben.add_argument("--ns", default="auto-simple")
    ben.add_argument("--mode", default=EstimatorMode.PARTIAL_SUM.value,
                     choices=[m.value for m in EstimatorMode])
    ben.add_argument("--lambda", dest="risk_weight", type=float, default=None)
    ben.add_argument("--extern", type=_parse_extern, action="append",
                     help="merge an external reference row, name=value")
    ben.add_argument("--json", default=None, help="report JSON path")
    ben.add_argument("--trace-dir", default=None,
                     help="also write one trace CSV per run")
    ben.add_argument("--workers", type=int, default=1)
    ben.set_defaults(func=cmd_bench)

    ing = sub.add_parser("ingest", help="build a portfolio instance from "
                                        "price CSVs")
    ing.add_argument("--prices", required=True, help="CSV date,ticker,close")
    ing.add_argument("--sectors", required=True, help="CSV ticker,sector")
    ing.add_argument("--lambda", dest="risk_weight", type=float, default=0.5)
    ing.add_argument("--return-scale", type=float, default=1.0,
                     help="multiply mean daily returns (e.g. 252 to "
                          "annualize)")
    ing.add_argument("-o", "--output", required=True)
    ing.set_defaults(func=cmd_ingest)

    pre = sub.add_parser("preprocess", help="fix dominant variables and emit "
                                            "a reduced instance")
    pre.add_argument("instance")
    pre.add_argument("--lambda", dest="risk_weight", type=float, default=None)
    pre.add_argument("-o", "--output", required=True)
    pre.add_argument("--fixed-out", required=True,
                     help="JSON map of fixed variable -> bit")
    pre.set_defaults(func=cmd_preprocess)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # unexpected runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
