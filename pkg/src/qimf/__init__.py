"""QUBO solving with a mean-field probabilistic model and shot-subsampled
cost estimation, plus instance generators, classical baselines, and a
benchmark harness."""

from .estimator import (EstimatorMode, ShotAllocator, build_allocator, cost_s,
                        sample_terms, shot_count_block, shot_count_simple,
                        uniform_allocator)
from .hamiltonian import (IsingHamiltonian, PauliTerm, evaluate_batch,
                          evaluate_full, evaluate_term, group_qwc,
                          inflate_assignment, ising_to_qubo,
                          preprocess_dominant, qubo_to_ising, qwc_check)
from .instance import (Constant, Exponential, InstanceFormatError, Normal,
                       QuboInstance, Uniform, WeightDistribution, WsbmSpec,
                       generate_wsbm, load, make_wsbm_spec, save, validate)
from .meanfield import (AdamState, MeanFieldModel, SampleBatch, adam_step,
                        log_prob_grad, mode_assignment, objective_and_grad,
                        probs, sample_batch)
from .problems import (Graph, PriceTable, build_ising, build_maxcut,
                       build_portfolio, cut_value, ingest_prices,
                       load_price_table, read_edge_list)
from .solver import (Algorithm, QueryLedger, RunTrace, SolverConfig,
                     brute_force, greedy_local_search, one_plus_one,
                     simulated_annealing, solve, solve_qimf, solve_quamf)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
