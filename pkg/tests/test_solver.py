"""Solver loops, baselines, the brute-force oracle, and query ledgers."""

import numpy as np
import pytest

from qimf.estimator import EstimatorMode
from qimf.hamiltonian import (IsingHamiltonian, PauliTerm, evaluate_full,
                              qubo_to_ising)
from qimf.instance import Normal, QuboInstance, generate_wsbm, make_wsbm_spec
from qimf.solver import (Algorithm, SolverConfig, brute_force,
                         greedy_local_search, one_plus_one,
                         simulated_annealing, solve, solve_qimf, solve_quamf)


def diag_toy():
    return qubo_to_ising(QuboInstance(num_vars=2,
                                      matrix={(0, 0): -1.0, (1, 1): 2.0}))


def random_wsbm_h(seed, n=10, p=0.6):
    spec = make_wsbm_spec([n], [[p]], [[Normal(0.0, 0.5)]])
    return qubo_to_ising(generate_wsbm(spec, seed))


class TestBruteForce:
    def test_diag_toy(self):
        bits, cost = brute_force(diag_toy())
        assert list(bits) == [1, 0] and cost == -1.0

    def test_zero_hamiltonian_lexicographic_tie(self):
        h = IsingHamiltonian(num_qubits=3, terms=[], offset=0.75)
        bits, cost = brute_force(h)
        assert list(bits) == [0, 0, 0] and cost == 0.75

    def test_single_positive_field(self):
        h = IsingHamiltonian(num_qubits=1, terms=[PauliTerm(2.0, (0,))],
                             offset=0.5)
        bits, cost = brute_force(h)
        assert list(bits) == [1] and cost == -1.5

    def test_refuses_large_instances(self):
        h = IsingHamiltonian(num_qubits=25, terms=[], offset=0.0)
        with pytest.raises(ValueError, match="refuses"):
            brute_force(h)


class TestQimf:
    def test_diag_toy_converges(self):
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=20, n_e=200, n_s=1,
                           estimator_mode=EstimatorMode.UNBIASED, seed=0)
        trace = solve_qimf(diag_toy(), cfg)
        assert list(trace.final_bits) == [1, 0]
        assert trace.final_cost == -1.0

    def test_zero_hamiltonian(self):
        h = IsingHamiltonian(num_qubits=4, terms=[], offset=0.0)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=8, n_e=30, n_s=1, seed=1)
        trace = solve_qimf(h, cfg)
        assert trace.final_cost == 0.0
        assert all(r.mean_cost == 0.0 for r in trace.records)

    def test_ledger_exact(self):
        h = random_wsbm_h(1)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=7, n_e=13, n_s=3, seed=2)
        trace = solve_qimf(h, cfg)
        assert trace.ledger.training_total == 3 * 7 * 13
        assert [r.queries for r in trace.records] == [
            3 * 7 * (k + 1) for k in range(13)]

    def test_deterministic(self):
        h = random_wsbm_h(2)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=10, n_e=50,
                           n_s=4, seed=3)
        a, b = solve_qimf(h, cfg), solve_qimf(h, cfg)
        assert [r.mean_cost for r in a.records] == [r.mean_cost for r in b.records]
        assert np.array_equal(a.final_bits, b.final_bits)
        assert a.final_cost == b.final_cost

    def test_best_cost_monotone(self):
        h = random_wsbm_h(3)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=10, n_e=80, n_s=4, seed=4)
        best = [r.best_cost for r in solve_qimf(h, cfg).records]
        assert all(b <= a for a, b in zip(best, best[1:]))

    def test_abort_on_invalid_config(self):
        with pytest.raises(ValueError, match="n_s"):
            solve_qimf(diag_toy(), SolverConfig(algorithm=Algorithm.QIMF,
                                                n_s=None))


class TestQuamf:
    def test_diag_toy(self):
        cfg = SolverConfig(algorithm=Algorithm.QUAMF, n_b=20, n_e=100, seed=0)
        trace = solve_quamf(diag_toy(), cfg)
        assert list(trace.final_bits) == [1, 0] and trace.final_cost == -1.0

    def test_ns_ignored_in_ledger(self):
        h = random_wsbm_h(4)
        for n_s in (1, 5):
            cfg = SolverConfig(algorithm=Algorithm.QUAMF, n_b=6, n_e=9,
                               n_s=n_s, seed=5)
            trace = solve_quamf(h, cfg)
            assert trace.ledger.training_total == h.num_terms * 6 * 9

    def test_partial_sum_exhaustion_identity(self):
        # Shared seeds and independent model/shot streams make the n_s = n_w
        # partial-sum run reproduce quamf exactly, epoch by epoch.
        h = random_wsbm_h(5)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=12, n_e=60,
                           n_s=h.num_terms,
                           estimator_mode=EstimatorMode.PARTIAL_SUM, seed=6)
        a = solve_qimf(h, cfg)
        b = solve_quamf(h, cfg)
        assert [r.mean_cost for r in a.records] == [r.mean_cost for r in b.records]


class TestSimulatedAnnealing:
    def test_single_edge(self):
        h = qubo_to_ising(QuboInstance(num_vars=2, matrix={(0, 1): -1.0}))
        cfg = SolverConfig(algorithm=Algorithm.SA, n_e=400, seed=0)
        trace = simulated_annealing(h, cfg)
        assert list(trace.final_bits) == [1, 1] and trace.final_cost == -2.0

    def test_zero_temperature_descends(self):
        h = random_wsbm_h(6)
        cfg = SolverConfig(algorithm=Algorithm.SA, n_e=300, seed=1, sa_t0=0.0)
        trace = simulated_annealing(h, cfg)
        costs = [r.mean_cost for r in trace.records]
        assert all(b <= a for a, b in zip(costs, costs[1:]))
        assert trace.final_cost <= costs[0]

    def test_finds_optimum_on_small_instances(self):
        hits = 0
        for seed in range(10):
            h = random_wsbm_h(seed + 100, n=8)
            _, opt = brute_force(h)
            cfg = SolverConfig(algorithm=Algorithm.SA, n_e=10_000, seed=seed)
            if simulated_annealing(h, cfg).best_cost == opt:
                hits += 1
        assert hits >= 8

    def test_ledger_counts_warmup(self):
        h = random_wsbm_h(7)
        cfg = SolverConfig(algorithm=Algorithm.SA, n_e=20, seed=2, sa_warmup=32)
        trace = simulated_annealing(h, cfg)
        n_w = h.num_terms
        assert [r.queries for r in trace.records] == [
            n_w * (32 + k + 1) for k in range(20)]


class TestGreedy:
    def test_separable_descent(self):
        h = qubo_to_ising(QuboInstance(num_vars=2,
                                       matrix={(0, 0): -1.0, (1, 1): -1.0}))
        cfg = SolverConfig(algorithm=Algorithm.GREEDY, seed=0,
                           budget_queries=h.num_terms * 50)
        trace = greedy_local_search(h, cfg)
        assert list(trace.final_bits) == [1, 1] and trace.final_cost == -2.0

    def test_frustrated_triangle(self):
        inst = QuboInstance(num_vars=3, matrix={(0, 1): 1.0, (0, 2): 1.0,
                                                (1, 2): 1.0})
        h = qubo_to_ising(inst)
        _, opt = brute_force(h)
        cfg = SolverConfig(algorithm=Algorithm.GREEDY, seed=1,
                           budget_queries=h.num_terms * 40)
        trace = greedy_local_search(h, cfg)
        assert trace.final_cost == opt
        # 1-flip optimality of the returned assignment.
        for i in range(3):
            flipped = trace.final_bits.copy()
            flipped[i] ^= 1
            assert evaluate_full(h, flipped) >= trace.final_cost

    def test_budget_of_one_evaluation(self):
        h = random_wsbm_h(8)
        cfg = SolverConfig(algorithm=Algorithm.GREEDY, seed=2,
                           budget_queries=h.num_terms)
        trace = greedy_local_search(h, cfg)
        assert len(trace.records) == 1
        assert trace.ledger.training_total == h.num_terms


class TestOnePlusOne:
    def test_best_cost_monotone(self):
        h = random_wsbm_h(9)
        cfg = SolverConfig(algorithm=Algorithm.ONE_PLUS_ONE, n_e=500, seed=0)
        best = [r.best_cost for r in one_plus_one(h, cfg).records]
        assert all(b <= a for a, b in zip(best, best[1:]))

    def test_single_variable_reached_quickly(self):
        h = qubo_to_ising(QuboInstance(num_vars=1, matrix={(0, 0): -1.0}))
        cfg = SolverConfig(algorithm=Algorithm.ONE_PLUS_ONE, n_e=100, seed=1)
        trace = one_plus_one(h, cfg)
        assert list(trace.final_bits) == [1] and trace.final_cost == -1.0

    def test_finds_optimum_on_small_instances(self):
        hits = 0
        for seed in range(10):
            h = random_wsbm_h(seed + 200, n=8)
            _, opt = brute_force(h)
            cfg = SolverConfig(algorithm=Algorithm.ONE_PLUS_ONE, n_e=10_000,
                               seed=seed)
            if one_plus_one(h, cfg).best_cost == opt:
                hits += 1
        assert hits >= 7


class TestPreprocessingIntegration:
    def test_solve_with_preprocessing_matches_brute(self):
        terms = [PauliTerm(-6.0, (0,)), PauliTerm(1.0, (0, 1)),
                 PauliTerm(1.5, (0, 2)), PauliTerm(-0.5, (1, 2)),
                 PauliTerm(0.75, (1,))]
        h = IsingHamiltonian(num_qubits=3, terms=terms)
        _, opt = brute_force(h)
        cfg = SolverConfig(algorithm=Algorithm.QUAMF, n_b=16, n_e=150, seed=3,
                           preprocess=True)
        trace = solve(h, cfg)
        assert trace.final_cost == opt
        assert evaluate_full(h, trace.final_bits) == trace.final_cost

    def test_all_fixed_short_circuits(self):
        h = IsingHamiltonian(num_qubits=2,
                             terms=[PauliTerm(4.0, (0,)), PauliTerm(-3.0, (1,))],
                             offset=0.5)
        cfg = SolverConfig(algorithm=Algorithm.QIMF, n_b=4, n_e=10, n_s=1,
                           seed=4, preprocess=True)
        trace = solve(h, cfg)
        assert list(trace.final_bits) == [1, 0]
        assert trace.final_cost == 0.5 - 4.0 - 3.0


class TestOracleAgreementLight:
    # Scaled-down version of the acceptance run: two thirds of seeds must
    # reach the optimum for each algorithm on tiny instances.
    def test_three_way_agreement(self):
        wins = {"qimf": 0, "quamf": 0, "sa": 0}
        trials = 6
        for seed in range(trials):
            h = random_wsbm_h(seed + 300, n=9)
            _, opt = brute_force(h)
            n_s = max(1, h.num_terms // 2)
            q = solve_qimf(h, SolverConfig(
                algorithm=Algorithm.QIMF, n_b=40, n_e=400, n_s=n_s,
                estimator_mode=EstimatorMode.UNBIASED, seed=seed))
            if q.best_cost == opt:
                wins["qimf"] += 1
            u = solve_quamf(h, SolverConfig(algorithm=Algorithm.QUAMF,
                                            n_b=40, n_e=400, seed=seed))
            if u.best_cost == opt:
                wins["quamf"] += 1
            s = simulated_annealing(h, SolverConfig(algorithm=Algorithm.SA,
                                                    n_e=4000, seed=seed))
            if s.best_cost == opt:
                wins["sa"] += 1
        assert all(v >= 4 for v in wins.values()), wins
