"""Amplitude-based shot allocation and the shot-subsampled cost estimator.

Terms are sampled with probability ``p_m = |a_m|^2 / sum |a_m|^2``.  Two
estimator modes are provided:

* ``PARTIAL_SUM``: draw ``n_s`` distinct terms without replacement and
  return the raw partial sum (plus the exact offset).  This is the published
  algorithm's estimator; it is biased toward the offset for ``n_s < n_w``
  and coincides exactly with the full cost at ``n_s = n_w``.
* ``UNBIASED``: draw ``n_s`` terms i.i.d. with replacement and return the
  importance-weighted mean ``offset + (1/n_s) * sum a_m(x) / p_m``, an
  unbiased estimator of the exact cost.

The without-replacement draw is realized with exponential-race (Gumbel
top-k) keys, which has exactly the distribution of successive renormalized
categorical draws while staying vectorizable over a whole sample batch.

The scalar offset is always added exactly, never sampled: it carries no
variance and sampling it would only add noise.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import IsingHamiltonian, _check_bits, spin_columns


class EstimatorMode(enum.Enum):
    PARTIAL_SUM = "partial-sum"
    UNBIASED = "unbiased"


@dataclass
class ShotAllocator:
    """Categorical distribution over Hamiltonian terms.

    ``term_probs`` sums to one; zero-coefficient terms get probability
    exactly zero and are never drawn.
    """

    hamiltonian: IsingHamiltonian
    term_probs: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)
    _log_probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.term_probs, dtype=float)
        if p.shape != (self.hamiltonian.num_terms,):
            raise ValueError(f"term_probs has shape {p.shape}, expected "
                             f"({self.hamiltonian.num_terms},)")
        if (p < 0).any() or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("term_probs must be non-negative and sum to 1")
        self.term_probs = p
        self._cum = np.cumsum(p)
        self._cum[-1] = 1.0
        with np.errstate(divide="ignore"):
            self._log_probs = np.log(p)

    @property
    def num_support(self) -> int:
        """Count of terms with nonzero draw probability."""
        return int((self.term_probs > 0).sum())


def build_allocator(h: IsingHamiltonian) -> ShotAllocator:
    """Amplitude-squared sampling distribution over the terms of ``h``."""
    a = h.coefficients()
    if a.size == 0 or not (a != 0).any():
        raise ValueError("cannot build a shot allocator for an all-zero Hamiltonian")
    w = a * a
    return ShotAllocator(hamiltonian=h, term_probs=w / w.sum())


def uniform_allocator(h: IsingHamiltonian) -> ShotAllocator:
    """Uniform proposal over all stored terms (baseline for comparisons)."""
    n_w = h.num_terms
    if n_w == 0:
        raise ValueError("Hamiltonian has no terms")
    return ShotAllocator(hamiltonian=h, term_probs=np.full(n_w, 1.0 / n_w))


def sample_terms(alloc: ShotAllocator, n_s: int, rng: np.random.Generator,
                 mode: EstimatorMode = EstimatorMode.PARTIAL_SUM) -> np.ndarray:
    """Draw term indices for one cost evaluation.

    PARTIAL_SUM draws ``n_s`` distinct indices without replacement in
    proportion to ``term_probs`` (returned in draw order); UNBIASED draws
    ``n_s`` i.i.d. indices with replacement.
    """
    if n_s < 1:
        raise ValueError(f"n_s must be >= 1, got {n_s}")
    if mode is EstimatorMode.PARTIAL_SUM:
        return _sample_distinct(alloc, n_s, rng, batch=1)[0]
    return _sample_iid(alloc, n_s, rng, batch=1)[0]


def _sample_distinct(alloc: ShotAllocator, n_s: int, rng: np.random.Generator,
                     batch: int) -> np.ndarray:
    if n_s > alloc.num_support:
        raise ValueError(f"cannot draw {n_s} distinct terms from a support of "
                         f"{alloc.num_support}")
    n_w = alloc.term_probs.size
    u = rng.random((batch, n_w))
    with np.errstate(divide="ignore", invalid="ignore"):
        keys = alloc._log_probs - np.log(-np.log1p(-u))
    keys[:, alloc.term_probs == 0.0] = -np.inf  # kill 0 * inf artifacts
    top = np.argpartition(-keys, n_s - 1, axis=1)[:, :n_s]
    # Draw order = descending key order within the selection.
    order = np.argsort(np.take_along_axis(-keys, top, axis=1), axis=1)
    return np.take_along_axis(top, order, axis=1)


def _sample_iid(alloc: ShotAllocator, n_s: int, rng: np.random.Generator,
                batch: int) -> np.ndarray:
    u = rng.random((batch, n_s))
    return np.searchsorted(alloc._cum, u, side="right").astype(np.intp)


def cost_batch(alloc: ShotAllocator, bits: np.ndarray, n_s: int,
               mode: EstimatorMode, rng: np.random.Generator) -> np.ndarray:
    """Shot-subsampled costs for a (batch, num_qubits) bit matrix.

    Each row gets its own independent term draw; only the sampled term
    values are computed.
    """
    h = alloc.hamiltonian
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != h.num_qubits:
        raise ValueError(f"bit matrix has shape {bits.shape}, "
                         f"expected (*, {h.num_qubits})")
    if not h._packed:
        raise ValueError("shot estimation requires an all-Z Hamiltonian "
                         "with supports of size <= 2")
    batch = bits.shape[0]
    spins = spin_columns(bits)
    rows = np.arange(batch)[:, None]
    if mode is EstimatorMode.PARTIAL_SUM:
        sel = _sample_distinct(alloc, n_s, rng, batch)
        sel = np.sort(sel, axis=1)  # stored-order summation
        vals = alloc.hamiltonian._coeffs[sel] \
            * spins[rows, h._idx1[sel]] * spins[rows, h._idx2[sel]]
        return h.offset + vals.sum(axis=1)
    sel = _sample_iid(alloc, n_s, rng, batch)
    vals = alloc.hamiltonian._coeffs[sel] \
        * spins[rows, h._idx1[sel]] * spins[rows, h._idx2[sel]]
    vals /= alloc.term_probs[sel]
    return h.offset + vals.mean(axis=1)


def cost_s(alloc: ShotAllocator, x, n_s: int, mode: EstimatorMode,
           rng: np.random.Generator) -> float:
    """Shot-subsampled cost of a single assignment."""
    if n_s < 1:
        raise ValueError(f"n_s must be >= 1, got {n_s}")
    bits = _check_bits(x, alloc.hamiltonian.num_qubits)
    return float(cost_batch(alloc, bits[None, :], n_s, mode, rng)[0])


# ---------------------------------------------------------------------------
# Shot-count heuristics
# ---------------------------------------------------------------------------

_NEAR_UNIFORM_RATIO = 0.8


def shot_count_block(n_w: int, num_blocks: int, p: float, q: float) -> int:
    """Shots needed to cover the dense diagonal blocks of a block model.

    With intra-block edge probability q and inter-block probability p the
    diagonal blocks hold a fraction ``1 / (1 + (N-1) p/q)`` of all terms.
    When p/q is close to 1 the blocks are indistinguishable and subsampling
    buys nothing, so the full term count is returned with a warning.
    """
    if num_blocks < 1:
        raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")
    if n_w < 1:
        raise ValueError(f"n_w must be >= 1, got {n_w}")
    if not 0 < p <= q:
        raise ValueError(f"requires 0 < p <= q, got p={p}, q={q}")
    if p / q >= _NEAR_UNIFORM_RATIO:
        warnings.warn(
            f"p/q = {p / q:.3f} is near-uniform; no subsampling speedup, "
            f"using n_s = n_w = {n_w}", stacklevel=2)
        return n_w
    return math.ceil(n_w / (1.0 + (num_blocks - 1) * p / q))


def shot_count_simple(n_w: int, num_blocks: int) -> int:
    """Block-count heuristic: ``ceil(n_w / N)``."""
    if num_blocks < 1:
        raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")
    if n_w < 1:
        raise ValueError(f"n_w must be >= 1, got {n_w}")
    return math.ceil(n_w / num_blocks)
