"""Ising mapping exactness, QWC grouping, and dominance preprocessing."""

import itertools

import numpy as np
import pytest

from qimf.hamiltonian import (IsingHamiltonian, PauliTerm, evaluate_batch,
                              evaluate_full, evaluate_term, group_qwc,
                              inflate_assignment, ising_to_qubo,
                              preprocess_dominant, qubo_to_ising, qwc_check)
from qimf.instance import QuboInstance


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)


def quadratic_form(inst, x, linear=None, lam=1.0):
    """Direct oracle: lam * x'Vx - (1-lam) * r'x with dense matrices."""
    v = inst.to_dense()
    x = np.asarray(x, dtype=float)
    val = lam * (x @ v @ x)
    if linear is not None:
        val -= (1.0 - lam) * np.dot(linear, x)
    return val


def random_instance(rng, n, density=0.5, with_linear=False):
    matrix = {}
    for i in range(n):
        for j in range(i, n):
            if rng.random() < density:
                val = rng.normal()
                if val != 0.0:
                    matrix[(i, j)] = val
    linear = rng.normal(size=n) if with_linear else None
    return QuboInstance(num_vars=n, matrix=matrix), linear


class TestQuboToIsing:
    def test_single_diagonal_entry(self):
        # Solving H(0)=0, H(1)=1 under the (-1)^x convention gives
        # offset 1/2 and a Z_0 coefficient of -1/2.
        h = qubo_to_ising(QuboInstance(num_vars=1, matrix={(0, 0): 1.0}))
        assert h.offset == 0.5
        assert len(h.terms) == 1
        assert h.terms[0].support == (0,) and h.terms[0].coefficient == -0.5
        assert evaluate_full(h, [0]) == 0.0
        assert evaluate_full(h, [1]) == 1.0

    def test_zero_matrix(self):
        h = qubo_to_ising(QuboInstance(num_vars=3, matrix={}))
        assert h.terms == [] and h.offset == 0.0

    def test_pair_term_exhaustive(self):
        inst = QuboInstance(num_vars=2, matrix={(0, 1): 1.0})
        h = qubo_to_ising(inst)
        for x in all_assignments(2):
            assert evaluate_full(h, x) == pytest.approx(quadratic_form(inst, x),
                                                        abs=1e-12)

    def test_exactness_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(25):
            n = int(rng.integers(2, 13))
            inst, linear = random_instance(rng, n, with_linear=True)
            lam = float(rng.random())
            h = qubo_to_ising(inst, linear=linear, risk_weight=lam)
            bits = all_assignments(n)
            got = evaluate_batch(h, bits)
            want = np.array([quadratic_form(inst, x, linear, lam) for x in bits])
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_linear_length_mismatch(self):
        inst = QuboInstance(num_vars=2, matrix={})
        with pytest.raises(ValueError, match="linear"):
            qubo_to_ising(inst, linear=[1.0, 2.0, 3.0])


class TestEvaluate:
    def test_two_body_even_parity(self):
        term = PauliTerm(0.5, (1, 3))
        assert evaluate_term(term, [0, 1, 0, 1]) == 0.5

    def test_one_body_odd_parity(self):
        assert evaluate_term(PauliTerm(2.0, (0,)), [1, 0]) == -2.0

    def test_identity_term(self):
        assert evaluate_term(PauliTerm(3.0, ()), [0, 1, 1]) == 3.0

    def test_non_z_rejected(self):
        with pytest.raises(ValueError, match="non-Z"):
            evaluate_term(PauliTerm(1.0, (0,), ("X",)), [0])

    def test_full_empty_hamiltonian(self):
        h = IsingHamiltonian(num_qubits=2, terms=[], offset=1.25)
        assert evaluate_full(h, [0, 1]) == 1.25

    def test_full_single_z(self):
        h = IsingHamiltonian(num_qubits=1, terms=[PauliTerm(1.0, (0,))],
                             offset=0.25)
        assert evaluate_full(h, [0]) == 1.25
        assert evaluate_full(h, [1]) == -0.75

    def test_length_mismatch(self):
        h = IsingHamiltonian(num_qubits=2, terms=[], offset=0.0)
        with pytest.raises(ValueError, match="shape"):
            evaluate_full(h, [0, 1, 1])


class TestQwc:
    def test_all_z_strings_commute(self):
        assert qwc_check(PauliTerm(1.0, (0, 2)), PauliTerm(1.0, (0, 1)))

    def test_x_vs_z_on_shared_qubit(self):
        assert not qwc_check(PauliTerm(1.0, (0,), ("X",)),
                             PauliTerm(1.0, (0,), ("Z",)))

    def test_term_against_itself(self):
        t = PauliTerm(1.0, (0, 1), ("X", "Y"))
        assert qwc_check(t, t)

    def test_grouping_all_z_single_group(self):
        inst = QuboInstance(num_vars=4, matrix={(0, 0): 1.0, (0, 1): 2.0,
                                                (2, 3): -1.0})
        h = qubo_to_ising(inst)
        groups = group_qwc(h)
        assert groups == [list(range(h.num_terms))]
        for g in groups:
            for a, b in itertools.combinations(g, 2):
                assert qwc_check(h.terms[a], h.terms[b])

    def test_grouping_first_fit_with_x(self):
        terms = [PauliTerm(1.0, (0,), ("X",)), PauliTerm(1.0, (0,)),
                 PauliTerm(1.0, (1,))]
        h = IsingHamiltonian(num_qubits=2, terms=terms)
        assert group_qwc(h) == [[0, 2], [1]]

    def test_grouping_empty(self):
        h = IsingHamiltonian(num_qubits=1, terms=[])
        assert group_qwc(h) == []


def _dyadic(rng, scale=16):
    """Random dyadic rational; sums of these are exact in float64."""
    return float(rng.integers(-64, 65)) / scale


def _random_all_z(rng, n, extra_terms=None):
    terms = []
    seen = set()
    count = extra_terms if extra_terms is not None else 2 * n
    for i in range(n):
        c = _dyadic(rng)
        if c:
            terms.append(PauliTerm(c, (i,)))
            seen.add((i,))
    for _ in range(count):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        if (i, j) in seen:
            continue
        seen.add((i, j))
        c = _dyadic(rng)
        if c:
            terms.append(PauliTerm(c, (int(i), int(j))))
    return IsingHamiltonian(num_qubits=n, terms=terms, offset=_dyadic(rng))


class TestPreprocess:
    def test_dominant_negative_coefficient(self):
        terms = [PauliTerm(-5.0, (0,)), PauliTerm(1.0, (0, 1)),
                 PauliTerm(1.0, (0, 2)), PauliTerm(1.0, (0, 3))]
        h = IsingHamiltonian(num_qubits=4, terms=terms)
        fixed, reduced = preprocess_dominant(h)
        assert fixed == {0: 0}
        assert reduced.num_qubits == 3
        assert reduced.offset == -5.0
        assert sorted((t.support, t.coefficient) for t in reduced.terms) == [
            ((0,), 1.0), ((1,), 1.0), ((2,), 1.0)]
        # Safety: exhaustive minimization of the original admits x_0 = 0.
        bits = all_assignments(4)
        costs = evaluate_batch(h, bits)
        optima = bits[costs == costs.min()]
        assert any(x[0] == 0 for x in optima)

    def test_no_dominance_no_change(self):
        terms = [PauliTerm(1.0, (0,)), PauliTerm(2.0, (0, 1))]
        h = IsingHamiltonian(num_qubits=2, terms=terms)
        fixed, reduced = preprocess_dominant(h)
        assert fixed == {} and reduced is h

    def test_lone_positive_field_fixes_bit_one(self):
        h = IsingHamiltonian(num_qubits=1, terms=[PauliTerm(3.0, (0,))],
                             offset=1.0)
        fixed, reduced = preprocess_dominant(h)
        assert fixed == {0: 1}
        assert reduced.num_qubits == 0 and reduced.offset == -2.0

    def test_planted_dominance_safety_and_conservation(self):
        rng = np.random.default_rng(99)
        for _ in range(15):
            n = int(rng.integers(4, 13))
            h = _random_all_z(rng, n)
            # Plant dominance on one variable: 1.5x the competing mass
            # (dyadic coefficients keep every partial sum exact in float64).
            target = int(rng.integers(n))
            competing = sum(abs(t.coefficient) for t in h.terms
                            if len(t.support) > 1 and target in t.support)
            planted = 1.5 * competing + 1.0
            if rng.random() < 0.5:
                planted = -planted
            terms = [t for t in h.terms if t.support != (target,)]
            terms.append(PauliTerm(planted, (target,)))
            h = IsingHamiltonian(num_qubits=n, terms=terms, offset=h.offset)

            fixed, reduced = preprocess_dominant(h)
            assert target in fixed
            assert fixed[target] == (1 if planted > 0 else 0)

            bits = all_assignments(n)
            costs = evaluate_batch(h, bits)
            optima = bits[costs == costs.min()]
            assert any(all(x[i] == b for i, b in fixed.items()) for x in optima)

            # Conservation, exact: restrict enumeration to consistent bits.
            kept = [i for i in range(n) if i not in fixed]
            for sub in all_assignments(len(kept)):
                full = inflate_assignment(sub, fixed, n)
                assert evaluate_full(h, full) == evaluate_full(reduced, sub)

    def test_rejects_non_z(self):
        h = IsingHamiltonian(num_qubits=1,
                             terms=[PauliTerm(1.0, (0,), ("X",))])
        with pytest.raises(ValueError, match="all-Z"):
            preprocess_dominant(h)


class TestIsingQuboRoundTrip:
    def test_costs_preserved(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(2, 9))
            h = _random_all_z(rng, n)
            inst, constant = ising_to_qubo(h)
            h2 = qubo_to_ising(inst)
            bits = all_assignments(n)
            np.testing.assert_allclose(evaluate_batch(h, bits),
                                       evaluate_batch(h2, bits) + constant,
                                       atol=1e-12)

    def test_rejects_three_body(self):
        h = IsingHamiltonian(num_qubits=3, terms=[PauliTerm(1.0, (0, 1, 2))])
        with pytest.raises(ValueError, match="support"):
            ising_to_qubo(h)


class TestPauliTerm:
    def test_support_canonicalized(self):
        t = PauliTerm(1.0, (3, 1), ("X", "Z"))
        assert t.support == (1, 3) and t.letters == ("Z", "X")

    def test_duplicate_support_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            PauliTerm(1.0, (1, 1))

    def test_duplicate_terms_rejected(self):
        with pytest.raises(ValueError, match="duplicate term"):
            IsingHamiltonian(num_qubits=2,
                             terms=[PauliTerm(1.0, (0,)), PauliTerm(2.0, (0,))])
