"""Diagonal Ising Hamiltonians for QUBO costs.

A QUBO objective ``lam * x^T V x - (1 - lam) * r^T x`` over bits
``x in {0,1}^n`` is rewritten as a weighted sum of Pauli-Z products plus a
scalar offset.  Evaluation replaces each bit by the spin eigenvalue
``s_i = (-1)^{x_i}`` (bit 0 -> +1), so a term with coefficient ``a`` and
support ``{i, j}`` contributes ``a * s_i * s_j``.  The rewrite is exact:
``evaluate_full(qubo_to_ising(...), x)`` reproduces the quadratic form for
every assignment, which the test suite checks by exhaustive enumeration.

Only the qubit-wise-commutativity checker handles X/Y letters; everything
else requires all-Z terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import QuboInstance

_VALID_LETTERS = frozenset("XYZ")


@dataclass(frozen=True)
class PauliTerm:
    """One product of single-qubit Paulis with a real coefficient.

    ``support`` lists the qubits the term acts on (empty = identity);
    ``letters`` gives the Pauli letter per support index and defaults to Z.
    """

    coefficient: float
    support: tuple[int, ...] = ()
    letters: tuple[str, ...] | None = None

    def __post_init__(self):
        pairs = sorted(zip(self.support, self.letters or "Z" * len(self.support)))
        idx = tuple(i for i, _ in pairs)
        let = tuple(l for _, l in pairs)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate qubit index in support {self.support}")
        if any(i < 0 for i in idx):
            raise ValueError(f"negative qubit index in support {self.support}")
        if self.letters is not None and len(self.letters) != len(self.support):
            raise ValueError("letters must match support length")
        if any(l not in _VALID_LETTERS for l in let):
            raise ValueError(f"letters must be X, Y or Z, got {let}")
        object.__setattr__(self, "support", idx)
        object.__setattr__(self, "letters", let if self.letters is not None else None)

    def letter_at(self, qubit: int) -> str:
        """Pauli letter at one qubit ('I' when outside the support)."""
        if qubit not in self.support:
            return "I"
        if self.letters is None:
            return "Z"
        return self.letters[self.support.index(qubit)]

    @property
    def is_all_z(self) -> bool:
        return self.letters is None or all(l == "Z" for l in self.letters)

    def key(self) -> tuple:
        return (self.support, self.letters or ("Z",) * len(self.support))


@dataclass
class IsingHamiltonian:
    """Sum of Pauli terms plus a scalar offset; immutable after construction."""

    num_qubits: int
    terms: list[PauliTerm]
    offset: float = 0.0

    # Packed columns for vectorized all-Z evaluation (index num_qubits is a
    # padding column of spin +1 for one-body terms).
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)
    _idx1: np.ndarray = field(init=False, repr=False, compare=False)
    _idx2: np.ndarray = field(init=False, repr=False, compare=False)
    _packed: bool = field(init=False, repr=False, compare=False, default=False)

    def __post_init__(self):
        # num_qubits == 0 (a bare constant) only arises when preprocessing
        # fixes every variable.
        if self.num_qubits < 0:
            raise ValueError(f"num_qubits must be non-negative, got {self.num_qubits}")
        if self.num_qubits == 0 and self.terms:
            raise ValueError("a 0-qubit Hamiltonian cannot carry terms")
        seen = set()
        for t in self.terms:
            if t.support and t.support[-1] >= self.num_qubits:
                raise ValueError(
                    f"term support {t.support} exceeds {self.num_qubits} qubits")
            if t.key() in seen:
                raise ValueError(f"duplicate term on support {t.support}")
            seen.add(t.key())
        self._pack()

    def _pack(self) -> None:
        packable = all(t.is_all_z and len(t.support) <= 2 for t in self.terms)
        self._packed = packable
        if not packable:
            self._coeffs = np.empty(0)
            self._idx1 = np.empty(0, dtype=np.intp)
            self._idx2 = np.empty(0, dtype=np.intp)
            return
        pad = self.num_qubits
        self._coeffs = np.array([t.coefficient for t in self.terms], dtype=float)
        self._idx1 = np.array(
            [t.support[0] if t.support else pad for t in self.terms], dtype=np.intp)
        self._idx2 = np.array(
            [t.support[1] if len(t.support) == 2 else pad for t in self.terms],
            dtype=np.intp)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)


def _check_bits(x, num_qubits: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (num_qubits,):
        raise ValueError(f"assignment has shape {x.shape}, expected ({num_qubits},)")
    if not np.isin(x, (0, 1)).all():
        raise ValueError("assignment entries must be 0 or 1")
    return x.astype(np.uint8)


def evaluate_term(term: PauliTerm, x) -> float:
    """coefficient * (-1)^(sum of assigned bits on the support)."""
    if not term.is_all_z:
        raise ValueError(f"cannot evaluate non-Z term with letters {term.letters}")
    x = np.asarray(x)
    parity = int(sum(int(x[i]) for i in term.support)) & 1
    return -term.coefficient if parity else term.coefficient


def evaluate_full(h: IsingHamiltonian, x) -> float:
    """Exact cost of one assignment (offset plus all term values)."""
    x = _check_bits(x, h.num_qubits)
    return float(evaluate_batch(h, x[None, :])[0])


def evaluate_batch(h: IsingHamiltonian, bits: np.ndarray) -> np.ndarray:
    """Exact costs for a (batch, num_qubits) bit matrix."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != h.num_qubits:
        raise ValueError(f"bit matrix has shape {bits.shape}, "
                         f"expected (*, {h.num_qubits})")
    if not h.terms:
        return np.full(bits.shape[0], h.offset, dtype=float)
    spins = spin_columns(bits)
    if h._packed:
        # np.take keeps C order so the pairwise summation tree matches the
        # estimator's gather path bit for bit at n_s = n_w.
        vals = h._coeffs * np.take(spins, h._idx1, axis=1) \
            * np.take(spins, h._idx2, axis=1)
        return h.offset + vals.sum(axis=1)
    total = np.full(bits.shape[0], h.offset, dtype=float)
    for t in h.terms:
        if not t.is_all_z:
            raise ValueError("cannot evaluate Hamiltonian with non-Z terms")
        parity = bits[:, list(t.support)].sum(axis=1) & 1
        total += t.coefficient * (1.0 - 2.0 * parity)
    return total


def spin_columns(bits: np.ndarray) -> np.ndarray:
    """Spin matrix (-1)^bit with a trailing +1 padding column."""
    spins = 1.0 - 2.0 * np.asarray(bits, dtype=float)
    return np.hstack([spins, np.ones((spins.shape[0], 1))])


# ---------------------------------------------------------------------------
# QUBO <-> Ising mapping
# ---------------------------------------------------------------------------


def qubo_to_ising(instance: QuboInstance, linear=None,
                  risk_weight: float = 1.0) -> IsingHamiltonian:
    """Exact Ising form of ``risk_weight * x'Vx - (1-risk_weight) * linear'x``.

    Substituting ``x_i = (1 - s_i) / 2`` into the binary quadratic form and
    collecting by spin monomial yields one-body terms, two-body terms over
    ``i < j``, and a scalar offset absorbing all identity contributions.
    Terms whose coefficient lands on exactly zero are dropped.
    """
    n = instance.num_vars
    if not 0.0 <= risk_weight <= 1.0:
        raise ValueError(f"risk_weight must lie in [0, 1], got {risk_weight}")
    if linear is not None:
        linear = np.asarray(linear, dtype=float)
        if linear.shape != (n,):
            raise ValueError(f"linear has shape {linear.shape}, expected ({n},)")

    # Per-variable coefficient of x_i in the binary objective.
    diag = np.zeros(n)
    for (i, j), val in instance.matrix.items():
        if i == j:
            diag[i] += risk_weight * val
    if linear is not None:
        diag -= (1.0 - risk_weight) * linear

    offset = 0.0
    one_body = np.zeros(n)
    two_body: dict[tuple[int, int], float] = {}
    for i in range(n):
        offset += diag[i] / 2.0
        one_body[i] -= diag[i] / 2.0
    for (i, j), val in sorted(instance.matrix.items()):
        if i == j:
            continue
        w = 2.0 * risk_weight * val  # symmetric pair counted twice in x'Vx
        offset += w / 4.0
        one_body[i] -= w / 4.0
        one_body[j] -= w / 4.0
        two_body[(i, j)] = two_body.get((i, j), 0.0) + w / 4.0

    terms = [PauliTerm(one_body[i], (i,)) for i in range(n) if one_body[i] != 0.0]
    terms.extend(PauliTerm(c, pair) for pair, c in sorted(two_body.items()) if c != 0.0)
    return IsingHamiltonian(num_qubits=n, terms=terms, offset=offset)


def ising_to_qubo(h: IsingHamiltonian) -> tuple[QuboInstance, float]:
    """Inverse mapping for all-Z Hamiltonians with supports of size <= 2.

    Returns the instance plus the constant left over after the substitution
    ``s_i = 1 - 2 x_i`` (the instance format has no constant slot, so callers
    must carry it, e.g. in metadata).
    """
    n = h.num_qubits
    one_body = np.zeros(n)
    pair: dict[tuple[int, int], float] = {}
    for t in h.terms:
        if not t.is_all_z or len(t.support) > 2:
            raise ValueError(f"cannot convert term with support {t.support} "
                             f"and letters {t.letters}")
        if len(t.support) == 0:
            raise ValueError("identity terms belong in the offset")
        if len(t.support) == 1:
            one_body[t.support[0]] += t.coefficient
        else:
            pair[t.support] = pair.get(t.support, 0.0) + t.coefficient

    constant = h.offset
    matrix: dict[tuple[int, int], float] = {}
    row_pair_sum = np.zeros(n)
    for (i, j), c in sorted(pair.items()):
        constant += c
        row_pair_sum[i] += c
        row_pair_sum[j] += c
        stored = 2.0 * c  # doubles to 4c under the symmetric quadratic form
        if stored != 0.0:
            matrix[(i, j)] = stored
    for i in range(n):
        constant += one_body[i]
        d = -2.0 * one_body[i] - 2.0 * row_pair_sum[i]
        if d != 0.0:
            matrix[(i, i)] = d
    return QuboInstance(num_vars=n, matrix=matrix), constant


# ---------------------------------------------------------------------------
# Qubit-wise commutativity
# ---------------------------------------------------------------------------


def qwc_check(t1: PauliTerm, t2: PauliTerm) -> bool:
    """True when at every qubit the letters agree or one is identity."""
    for q in set(t1.support) & set(t2.support):
        if t1.letter_at(q) != t2.letter_at(q):
            return False
    return True


def group_qwc(h: IsingHamiltonian) -> list[list[int]]:
    """Greedy first-fit partition of term indices into QWC groups.

    Terms are visited in stored order; each goes to the first existing group
    it commutes qubit-wise with, else opens a new one.  All-Z Hamiltonians
    collapse to a single group.
    """
    groups: list[list[int]] = []
    for m, term in enumerate(h.terms):
        for group in groups:
            if all(qwc_check(term, h.terms[k]) for k in group):
                group.append(m)
                break
        else:
            groups.append([m])
    return groups


# ---------------------------------------------------------------------------
# Diagonal-dominance preprocessing
# ---------------------------------------------------------------------------


def preprocess_dominant(h: IsingHamiltonian) -> tuple[dict[int, int], IsingHamiltonian]:
    """Fix variables whose one-body coefficient dominates all couplings.

    A qubit i is fixed when the magnitude of its single-Z coefficient c_i
    strictly exceeds the summed magnitudes of every other term touching i;
    the dominant term then dictates the optimal spin regardless of the rest.
    Under the (-1)^x convention, c_i > 0 forces spin -1, i.e. bit 1.

    Single pass: dominance is decided on the input Hamiltonian, then all
    fixed spins are substituted at once.  Returns the fixed bits and the
    reduced Hamiltonian over the remaining qubits (reindexed in ascending
    original order).
    """
    n = h.num_qubits
    single = np.zeros(n)
    competing = np.zeros(n)
    for t in h.terms:
        if not t.is_all_z:
            raise ValueError("preprocessing requires an all-Z Hamiltonian")
        if len(t.support) == 1:
            single[t.support[0]] += t.coefficient
        else:
            for q in t.support:
                competing[q] += abs(t.coefficient)

    fixed: dict[int, int] = {}
    for i in range(n):
        if abs(single[i]) > competing[i] and single[i] != 0.0:
            fixed[i] = 1 if single[i] > 0 else 0
    if not fixed:
        return {}, h

    kept = [i for i in range(n) if i not in fixed]
    new_index = {q: k for k, q in enumerate(kept)}
    spin = {q: 1.0 - 2.0 * b for q, b in fixed.items()}

    offset = h.offset
    merged: dict[tuple[int, ...], float] = {}
    for t in h.terms:
        coeff = t.coefficient
        free: list[int] = []
        for q in t.support:
            if q in fixed:
                coeff *= spin[q]
            else:
                free.append(new_index[q])
        if not free:
            offset += coeff
        else:
            key = tuple(free)
            merged[key] = merged.get(key, 0.0) + coeff

    terms = [PauliTerm(c, sup) for sup, c in sorted(merged.items(),
                                                    key=lambda kv: (len(kv[0]), kv[0]))
             if c != 0.0]
    return fixed, IsingHamiltonian(num_qubits=len(kept), terms=terms, offset=offset)


def inflate_assignment(bits_reduced: np.ndarray, fixed: dict[int, int],
                       num_vars: int) -> np.ndarray:
    """Merge a reduced-space assignment with fixed bits into full length."""
    out = np.zeros(num_vars, dtype=np.uint8)
    kept = [i for i in range(num_vars) if i not in fixed]
    if len(kept) != len(bits_reduced):
        raise ValueError(f"reduced assignment has {len(bits_reduced)} bits, "
                         f"expected {len(kept)}")
    for k, i in enumerate(kept):
        out[i] = bits_reduced[k]
    for i, b in fixed.items():
        out[i] = b
    return out
