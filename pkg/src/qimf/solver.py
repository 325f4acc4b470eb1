"""Optimization loops over Ising Hamiltonians, with query accounting.

Algorithms
----------
* ``qimf``: mean-field model trained on the shot-subsampled cost; each of
  the ``n_b`` batch samples is charged ``n_s`` term queries per epoch, so a
  full run costs ``n_s * n_b * n_e`` training queries.
* ``quamf``: the same loop with the exact cost, charged ``n_w`` per
  evaluation (``n_w * n_b * n_e`` total).
* ``sa`` / ``greedy`` / ``oneplusone``: classical baselines; every exact
  evaluation is charged ``n_w`` queries.
* ``brute``: exhaustive oracle for up to 24 variables.

Exact-cost bookkeeping for qimf happens at checkpoints (every
``checkpoint_every`` epochs): all batch samples seen since the previous
checkpoint are re-scored with the exact cost so shot noise never corrupts
the reported best.  These oracle calls are ledgered separately from the
training queries and excluded from budget comparisons.

All randomness derives from ``config.seed`` via named streams, so each
solver is a pure function of (Hamiltonian, config).  The model-sampling and
shot-sampling streams are independent: a partial-sum run at ``n_s = n_w``
visits exactly the same batches as the quamf run with the same seed and
therefore reproduces its per-epoch mean costs bit for bit.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from . import meanfield as mf
from .estimator import EstimatorMode, ShotAllocator, build_allocator, cost_batch
from .hamiltonian import (IsingHamiltonian, evaluate_batch, inflate_assignment,
                          preprocess_dominant)
from .rng import rng_for


class Algorithm(enum.Enum):
    QIMF = "qimf"
    QUAMF = "quamf"
    SA = "sa"
    GREEDY = "greedy"
    ONE_PLUS_ONE = "oneplusone"
    BRUTE_FORCE = "brute"


@dataclass
class SolverConfig:
    algorithm: Algorithm = Algorithm.QIMF
    n_b: int = 40
    n_s: int | None = None
    n_e: int = 1000
    estimator_mode: EstimatorMode = EstimatorMode.PARTIAL_SUM
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    preprocess: bool = False
    checkpoint_every: int = 10
    subtract_baseline: bool = False
    init_jitter: float = 0.0
    readout: str = "best"  # "best" = best exactly-scored assignment, "sample"
    budget_queries: int | None = None
    sa_t0: float | None = None
    sa_t_final_ratio: float = 1e-3
    sa_warmup: int = 32

    def validate(self) -> None:
        if self.n_b < 1:
            raise ValueError(f"n_b must be >= 1, got {self.n_b}")
        if self.n_e < 1:
            raise ValueError(f"n_e must be >= 1, got {self.n_e}")
        if self.algorithm is Algorithm.QIMF and (self.n_s is None or self.n_s < 1):
            raise ValueError("qimf requires n_s >= 1")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.readout not in ("best", "sample"):
            raise ValueError(f"unknown readout {self.readout!r}")
        if self.sa_warmup < 1:
            raise ValueError("sa_warmup must be >= 1")


@dataclass
class QueryLedger:
    """Training-query accounting plus separately-ledgered oracle calls.

    ``queries_per_epoch`` is the charge per trace record: ``n_s * n_b`` for
    qimf, ``n_w * n_b`` for quamf, ``n_w`` (one exact evaluation) for the
    single-state baselines.
    """

    queries_per_epoch: int
    training_total: int = 0
    oracle_total: int = 0


@dataclass
class EpochRecord:
    epoch: int
    queries: int
    mean_cost: float
    best_cost: float
    best_bits: np.ndarray


@dataclass
class RunTrace:
    algorithm: Algorithm
    records: list[EpochRecord]
    final_bits: np.ndarray
    final_cost: float
    best_bits: np.ndarray
    best_cost: float
    ledger: QueryLedger
    seconds: float
    estimator_mode: EstimatorMode | None = None
    n_s: int | None = None


class _BestTracker:
    """Keeps the lowest exactly-scored assignment seen so far."""

    def __init__(self, h: IsingHamiltonian):
        self.h = h
        self.cost = np.inf
        self.bits: np.ndarray | None = None

    def offer(self, bits: np.ndarray, costs: np.ndarray) -> None:
        i = int(np.argmin(costs))
        if costs[i] < self.cost:
            self.cost = float(costs[i])
            self.bits = bits[i].copy()


def _mean_field_solve(h: IsingHamiltonian, cfg: SolverConfig,
                      exact_cost: bool) -> RunTrace:
    t_start = time.perf_counter()
    cfg.validate()
    n = h.num_qubits
    n_w = h.num_terms
    if n == 0:
        raise ValueError("Hamiltonian has no variables")

    rng_model = rng_for(cfg.seed, "model")
    rng_shots = rng_for(cfg.seed, "shots")
    if cfg.init_jitter > 0:
        model = mf.MeanFieldModel.jittered(n, cfg.init_jitter, rng_for(cfg.seed, "init"))
    else:
        model = mf.MeanFieldModel.uniform(n)
    adam = mf.AdamState.fresh(model.alpha.shape, cfg.learning_rate,
                              cfg.beta1, cfg.beta2, cfg.epsilon)

    alloc: ShotAllocator | None = None
    if not exact_cost and any(t.coefficient != 0.0 for t in h.terms):
        alloc = build_allocator(h)

    per_epoch = (n_w if exact_cost else cfg.n_s) * cfg.n_b
    ledger = QueryLedger(queries_per_epoch=per_epoch)
    best = _BestTracker(h)
    pending: list[np.ndarray] = []
    records: list[EpochRecord] = []

    def flush_pending() -> None:
        if not pending:
            return
        stack = np.vstack(pending)
        pending.clear()
        exact = evaluate_batch(h, stack)
        ledger.oracle_total += stack.shape[0] * n_w
        best.offer(stack, exact)

    for epoch in range(cfg.n_e):
        batch = mf.sample_batch(model, cfg.n_b, rng_model)
        if exact_cost:
            costs = evaluate_batch(h, batch.bits)
        elif alloc is None:
            costs = np.full(cfg.n_b, h.offset)
        else:
            costs = cost_batch(alloc, batch.bits, cfg.n_s, cfg.estimator_mode,
                               rng_shots)
        if not np.isfinite(costs).all():
            raise RuntimeError(f"non-finite cost at epoch {epoch}")
        batch.costs = costs
        objective, grad = mf.objective_and_grad(model, batch,
                                                cfg.subtract_baseline)
        model, adam = mf.adam_step(model, adam, grad)

        ledger.training_total += per_epoch
        if exact_cost:
            best.offer(batch.bits, costs)
        else:
            pending.append(batch.bits)
            if epoch % cfg.checkpoint_every == 0 or epoch == cfg.n_e - 1:
                flush_pending()
        records.append(EpochRecord(epoch=epoch, queries=ledger.training_total,
                                   mean_cost=objective, best_cost=best.cost,
                                   best_bits=best.bits))

    # Final readout: the converged model's mode joins the candidate pool.
    mode_bits = mf.mode_assignment(model)
    mode_cost = float(evaluate_batch(h, mode_bits[None, :])[0])
    ledger.oracle_total += n_w
    if cfg.readout == "sample":
        fresh = mf.sample_batch(model, cfg.n_b, rng_model)
        fresh_costs = evaluate_batch(h, fresh.bits)
        ledger.oracle_total += cfg.n_b * n_w
        i = int(np.argmin(fresh_costs))
        final_bits, final_cost = fresh.bits[i].copy(), float(fresh_costs[i])
        best.offer(fresh.bits, fresh_costs)
    else:
        if mode_cost < best.cost:
            final_bits, final_cost = mode_bits, mode_cost
        else:
            final_bits, final_cost = best.bits, best.cost
    if mode_cost < best.cost:
        best.cost, best.bits = mode_cost, mode_bits

    return RunTrace(
        algorithm=Algorithm.QUAMF if exact_cost else Algorithm.QIMF,
        records=records, final_bits=final_bits, final_cost=final_cost,
        best_bits=best.bits, best_cost=best.cost, ledger=ledger,
        seconds=time.perf_counter() - t_start,
        estimator_mode=None if exact_cost else cfg.estimator_mode,
        n_s=None if exact_cost else cfg.n_s)


def solve_qimf(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Mean-field training on the shot-subsampled cost."""
    return _mean_field_solve(h, cfg, exact_cost=False)


def solve_quamf(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Mean-field training on the exact cost (the full-cost twin)."""
    return _mean_field_solve(h, cfg, exact_cost=True)


def _random_bits(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape, dtype=np.uint8)


def simulated_annealing(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Single-bit-flip Metropolis search with a geometric temperature schedule.

    ``sa_warmup`` random assignments are scored first; their standard
    deviation sets the initial temperature (unless ``sa_t0`` overrides it)
    and the best of them becomes the start state.  ``n_e`` counts proposals;
    when ``budget_queries`` is set it takes precedence.
    """
    t_start = time.perf_counter()
    cfg.validate()
    n, n_w = h.num_qubits, h.num_terms
    rng = rng_for(cfg.seed, "sa")

    if cfg.budget_queries is not None:
        proposals = cfg.budget_queries // max(n_w, 1) - cfg.sa_warmup
        if proposals < 1:
            raise ValueError(f"budget {cfg.budget_queries} leaves no proposals "
                             f"after {cfg.sa_warmup} warmup evaluations")
    else:
        proposals = cfg.n_e

    warm = _random_bits(rng, (cfg.sa_warmup, n))
    warm_costs = evaluate_batch(h, warm)
    evals = cfg.sa_warmup
    i0 = int(np.argmin(warm_costs))
    x, cost = warm[i0].copy(), float(warm_costs[i0])

    t0 = float(np.std(warm_costs)) if cfg.sa_t0 is None else cfg.sa_t0
    if proposals > 1 and t0 > 0:
        ratio = cfg.sa_t_final_ratio ** (1.0 / (proposals - 1))
        temps = t0 * ratio ** np.arange(proposals)
    else:
        temps = np.full(proposals, t0)

    ledger = QueryLedger(queries_per_epoch=n_w, training_total=evals * n_w)
    best = _BestTracker(h)
    best.offer(warm, warm_costs)
    records: list[EpochRecord] = []

    for k in range(proposals):
        j = int(rng.integers(n))
        cand = x.copy()
        cand[j] ^= 1
        cand_cost = float(evaluate_batch(h, cand[None, :])[0])
        evals += 1
        ledger.training_total += n_w
        delta = cand_cost - cost
        if delta <= 0 or (temps[k] > 0 and rng.random() < np.exp(-delta / temps[k])):
            x, cost = cand, cand_cost
            if cost < best.cost:
                best.cost, best.bits = cost, x.copy()
        records.append(EpochRecord(epoch=k, queries=ledger.training_total,
                                   mean_cost=cost, best_cost=best.cost,
                                   best_bits=best.bits))

    return RunTrace(algorithm=Algorithm.SA, records=records,
                    final_bits=best.bits, final_cost=best.cost,
                    best_bits=best.bits, best_cost=best.cost, ledger=ledger,
                    seconds=time.perf_counter() - t_start)


def _baseline_eval_budget(h: IsingHamiltonian, cfg: SolverConfig) -> int:
    """Exact-evaluation budget: explicit queries, else the training ledger
    of the configured mean-field run divided by the term count."""
    n_w = max(h.num_terms, 1)
    if cfg.budget_queries is not None:
        return cfg.budget_queries // n_w
    per_eval = cfg.n_s if cfg.n_s is not None else n_w
    return (per_eval * cfg.n_b * cfg.n_e) // n_w


def greedy_local_search(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Steepest single-bit-flip descent with random restarts.

    Each descent step scores all ``n`` neighbors; restarts continue until
    the evaluation budget is spent.  Completed descents end in 1-flip-local
    optima.
    """
    t_start = time.perf_counter()
    cfg.validate()
    n, n_w = h.num_qubits, h.num_terms
    rng = rng_for(cfg.seed, "greedy")
    budget = _baseline_eval_budget(h, cfg)
    if budget < 1:
        raise ValueError("greedy budget must allow at least one evaluation")

    ledger = QueryLedger(queries_per_epoch=n_w)
    best = _BestTracker(h)
    records: list[EpochRecord] = []
    evals = 0
    epoch = 0

    def record(cur_cost: float) -> None:
        nonlocal epoch
        records.append(EpochRecord(epoch=epoch, queries=ledger.training_total,
                                   mean_cost=cur_cost, best_cost=best.cost,
                                   best_bits=best.bits))
        epoch += 1

    while evals < budget:
        x = _random_bits(rng, n)
        cost = float(evaluate_batch(h, x[None, :])[0])
        evals += 1
        ledger.training_total += n_w
        best.offer(x[None, :], np.array([cost]))
        record(cost)
        while evals + n <= budget:
            neighbors = np.tile(x, (n, 1))
            neighbors[np.arange(n), np.arange(n)] ^= 1
            nc = evaluate_batch(h, neighbors)
            evals += n
            ledger.training_total += n * n_w
            i = int(np.argmin(nc))
            if nc[i] >= cost:
                break  # 1-flip-local optimum
            x, cost = neighbors[i].copy(), float(nc[i])
            best.offer(x[None, :], np.array([cost]))
            record(cost)
        if evals + 1 > budget:
            break

    return RunTrace(algorithm=Algorithm.GREEDY, records=records,
                    final_bits=best.bits, final_cost=best.cost,
                    best_bits=best.bits, best_cost=best.cost, ledger=ledger,
                    seconds=time.perf_counter() - t_start)


def one_plus_one(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Elitist (1+1) evolution: flip each bit with probability 1/n (at least
    one bit forced), accept the child iff it is not worse."""
    t_start = time.perf_counter()
    cfg.validate()
    n, n_w = h.num_qubits, h.num_terms
    rng = rng_for(cfg.seed, "oneplusone")
    if cfg.budget_queries is not None:
        iterations = cfg.budget_queries // max(n_w, 1) - 1
        if iterations < 1:
            raise ValueError("budget leaves no iterations after the initial "
                             "evaluation")
    else:
        iterations = cfg.n_e

    x = _random_bits(rng, n)
    cost = float(evaluate_batch(h, x[None, :])[0])
    ledger = QueryLedger(queries_per_epoch=n_w, training_total=n_w)
    best = _BestTracker(h)
    best.offer(x[None, :], np.array([cost]))
    records = [EpochRecord(epoch=0, queries=ledger.training_total,
                           mean_cost=cost, best_cost=best.cost,
                           best_bits=best.bits)]

    for k in range(1, iterations + 1):
        mask = rng.random(n) < 1.0 / n
        if not mask.any():
            mask[int(rng.integers(n))] = True
        child = x ^ mask.astype(np.uint8)
        child_cost = float(evaluate_batch(h, child[None, :])[0])
        ledger.training_total += n_w
        if child_cost <= cost:
            x, cost = child, child_cost
            best.offer(x[None, :], np.array([cost]))
        records.append(EpochRecord(epoch=k, queries=ledger.training_total,
                                   mean_cost=cost, best_cost=best.cost,
                                   best_bits=best.bits))

    return RunTrace(algorithm=Algorithm.ONE_PLUS_ONE, records=records,
                    final_bits=best.bits, final_cost=best.cost,
                    best_bits=best.bits, best_cost=best.cost, ledger=ledger,
                    seconds=time.perf_counter() - t_start)


_BRUTE_FORCE_CAP = 24


def brute_force(h: IsingHamiltonian) -> tuple[np.ndarray, float]:
    """Exact global minimum by enumeration; ties go to the lexicographically
    smallest assignment (bit 0 is the most significant position)."""
    n = h.num_qubits
    if n > _BRUTE_FORCE_CAP:
        raise ValueError(f"brute force refuses n = {n} > {_BRUTE_FORCE_CAP} variables")
    if n == 0:
        return np.zeros(0, dtype=np.uint8), h.offset
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    chunk = 1 << min(n, 16)
    best_cost = np.inf
    best_k = 0
    for start in range(0, 1 << n, chunk):
        ks = np.arange(start, start + chunk, dtype=np.int64)
        bits = ((ks[:, None] >> shifts) & 1).astype(np.uint8)
        costs = evaluate_batch(h, bits)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best_k = start + i
    bits = ((best_k >> shifts) & 1).astype(np.uint8)
    return bits, best_cost


_DISPATCH = {
    Algorithm.QIMF: solve_qimf,
    Algorithm.QUAMF: solve_quamf,
    Algorithm.SA: simulated_annealing,
    Algorithm.GREEDY: greedy_local_search,
    Algorithm.ONE_PLUS_ONE: one_plus_one,
}


def solve(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    """Run the configured algorithm, with optional dominance preprocessing.

    With ``preprocess`` enabled, dominant variables are fixed up front, the
    reduced Hamiltonian is solved, and all reported assignments are inflated
    back to full length.  Reduced costs equal original costs on consistent
    assignments, so traces remain comparable.
    """
    cfg.validate()
    if not cfg.preprocess:
        return _solve_raw(h, cfg)

    fixed, h_red = preprocess_dominant(h)
    if not fixed:
        return _solve_raw(h, cfg)
    if h_red.num_qubits == 0:
        bits = inflate_assignment(np.zeros(0, dtype=np.uint8), fixed, h.num_qubits)
        ledger = QueryLedger(queries_per_epoch=0, oracle_total=h.num_terms)
        rec = EpochRecord(epoch=0, queries=0, mean_cost=h_red.offset,
                          best_cost=h_red.offset, best_bits=bits)
        return RunTrace(algorithm=cfg.algorithm, records=[rec], final_bits=bits,
                        final_cost=h_red.offset, best_bits=bits,
                        best_cost=h_red.offset, ledger=ledger, seconds=0.0)
    trace = _solve_raw(h_red, cfg)
    trace.final_bits = inflate_assignment(trace.final_bits, fixed, h.num_qubits)
    trace.best_bits = inflate_assignment(trace.best_bits, fixed, h.num_qubits)
    seen: dict[int, np.ndarray] = {}
    for rec in trace.records:
        key = id(rec.best_bits)
        if key not in seen:
            seen[key] = inflate_assignment(rec.best_bits, fixed, h.num_qubits)
        rec.best_bits = seen[key]
    return trace


def _solve_raw(h: IsingHamiltonian, cfg: SolverConfig) -> RunTrace:
    if cfg.algorithm is Algorithm.BRUTE_FORCE:
        t0 = time.perf_counter()
        bits, cost = brute_force(h)
        n_w = h.num_terms
        ledger = QueryLedger(queries_per_epoch=0,
                             oracle_total=(1 << h.num_qubits) * n_w)
        rec = EpochRecord(epoch=0, queries=0, mean_cost=cost, best_cost=cost,
                          best_bits=bits)
        return RunTrace(algorithm=cfg.algorithm, records=[rec], final_bits=bits,
                        final_cost=cost, best_bits=bits, best_cost=cost,
                        ledger=ledger, seconds=time.perf_counter() - t0)
    return _DISPATCH[cfg.algorithm](h, cfg)
