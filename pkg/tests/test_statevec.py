import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_state
from entconc import statevec as sv
from entconc.errors import ContractViolation
from entconc.statevec import BitString, StateVector


def test_basis_state_examples():
    assert sv.make_basis_state(2, "00").amps[0] == 1
    s = sv.make_basis_state(3, "101")
    assert s.amps[5] == 1 and np.count_nonzero(s.amps) == 1
    with pytest.raises(ContractViolation):
        sv.make_basis_state(1, "0110")


def test_bitstring_roundtrip():
    b = BitString.from_str("0110")
    assert b.value == 6 and b.width == 4 and str(b) == "0110"
    assert BitString.from_int(6, 4) == b
    assert b[1] == 1  # position 0 is the most significant bit
    with pytest.raises(ContractViolation):
        BitString.from_int(8, 3)


@pytest.mark.parametrize("amps", [[1, 1], [np.nan, 0], [1, 0, 0]])
def test_statevector_rejects_bad_arrays(amps):
    with pytest.raises(ContractViolation):
        StateVector(np.asarray(amps, dtype=complex), ["a"])


def test_tensor_examples():
    s = sv.tensor(sv.make_basis_state(1, "0", ["a"]), sv.make_basis_state(1, "1", ["b"]))
    assert s.amplitude("01") == 1
    a, b = 0.6, 0.8
    pair = StateVector([a, 0, 0, b], ["a1", "b1"])
    two = sv.tensor(pair, pair.__class__(pair.amps, ["a2", "b2"]))
    expect = {"0000": a * a, "0011": a * b, "1100": a * b, "1111": b * b}
    for i, amp in enumerate(two.amps):
        assert amp == pytest.approx(expect.get(format(i, "04b"), 0.0), abs=1e-12)
    assert two.norm() == pytest.approx(1.0, abs=1e-12)


def test_not_examples():
    s = sv.apply_not(sv.make_basis_state(2, "10"), "q1", [("q0", 1)])
    assert s.amplitude("11") == 1
    s = sv.apply_not(sv.make_basis_state(3, "100"), "q2", [("q0", 1), ("q1", 0)])
    assert s.amplitude("101") == 1
    with pytest.raises(ContractViolation):
        sv.apply_not(s, "q0", [("q0", 1)])


def test_add_constant_examples():
    s = sv.make_basis_state(4, "1011")
    assert sv.apply_add_constant(s, ["q1", "q2", "q3"], 1, [("q0", 1)]).amplitude("1100") == 1
    s = sv.make_basis_state(3, "100")
    assert sv.apply_add_constant(s, ["q1", "q2"], -1, [("q0", 1)]).amplitude("111") == 1
    s = sv.make_basis_state(3, "000")
    assert sv.apply_add_constant(s, ["q1", "q2"], -1, [("q0", 1)]).amplitude("000") == 1


def _reference_index_map(n, kind, target, controls, register=None, c=0):
    """Destination of every basis index computed with plain integer bit twiddling."""
    dest = []
    for idx in range(1 << n):
        bit = lambda q: (idx >> (n - 1 - q)) & 1
        if not all(bit(q) == pol for q, pol in controls):
            dest.append(idx)
            continue
        if kind == "not":
            dest.append(idx ^ (1 << (n - 1 - target)))
            continue
        v = 0
        for q in register:
            v = (v << 1) | bit(q)
        v = (v + c) % (1 << len(register))
        out = idx
        for pos, q in enumerate(reversed(register)):
            out &= ~(1 << (n - 1 - q))
            out |= ((v >> pos) & 1) << (n - 1 - q)
        dest.append(out)
    return np.array(dest)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 10])
def test_gates_match_index_arithmetic(n):
    rng = np.random.default_rng(n)
    labels = sv.default_labels(n)
    s = StateVector(np.arange(1, (1 << n) + 1) / np.linalg.norm(np.arange(1, (1 << n) + 1)), labels)
    for _ in range(4):
        order = rng.permutation(n)
        target, ctrl = int(order[0]), [(int(q), int(rng.integers(2))) for q in order[1:min(n, 3)]]
        dest = _reference_index_map(n, "not", target, ctrl)
        out = sv.apply_not(s, labels[target], [(labels[q], p) for q, p in ctrl])
        expect = np.zeros_like(s.amps)
        expect[dest] = s.amps
        assert np.array_equal(out.amps, expect)

        width = int(rng.integers(1, n + 1))
        reg = [int(q) for q in order[:width]]
        ctrl = [(int(q), int(rng.integers(2))) for q in order[width:width + 2]]
        c = int(rng.integers(-5, 6))
        dest = _reference_index_map(n, "add", None, ctrl, reg, c)
        out = sv.apply_add_constant(s, [labels[q] for q in reg], c, [(labels[q], p) for q, p in ctrl])
        expect = np.zeros_like(s.amps)
        expect[dest] = s.amps
        assert np.array_equal(out.amps, expect)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_operations_preserve_norm_and_reverse(n, seed):
    rng = np.random.default_rng(seed)
    s = random_state(n, rng)
    labels = s.labels
    target = labels[int(rng.integers(n))]
    ctrls = [(q, int(rng.integers(2))) for q in labels if q != target][:2]
    once = sv.apply_not(s, target, ctrls)
    assert abs(once.norm() ** 2 - 1) <= 1e-10
    assert np.allclose(sv.apply_not(once, target, ctrls).amps, s.amps, atol=1e-12, rtol=0)

    c = int(rng.integers(-9, 10))
    added = sv.apply_add_constant(s, labels, c)
    assert abs(added.norm() ** 2 - 1) <= 1e-10
    assert np.allclose(sv.apply_add_constant(added, labels, -c).amps, s.amps, atol=1e-12, rtol=0)

    perm = rng.permutation(1 << n)
    moved = sv.apply_classical_permutation(s, labels, perm)
    assert abs(moved.norm() ** 2 - 1) <= 1e-10
    back = sv.apply_classical_permutation(moved, labels, np.argsort(perm))
    assert np.allclose(back.amps, s.amps, atol=1e-12, rtol=0)


def test_permutation_preflight():
    s = sv.make_basis_state(2, "01")
    assert np.array_equal(sv.apply_classical_permutation(s, s.labels, [0, 1, 2, 3]).amps, s.amps)
    with pytest.raises(ContractViolation):
        sv.apply_classical_permutation(s, s.labels, [0, 0, 2, 3])
    with pytest.raises(ContractViolation):
        sv.apply_classical_permutation(s, s.labels, [0, 1, 2])


def test_epr_measurement_statistics():
    epr = StateVector([1, 0, 0, 1] / np.sqrt(2), ["a", "b"])
    assert np.allclose(sv.probabilities(epr, ["a", "b"]), [0.5, 0, 0, 0.5])
    rec, post = sv.measure(epr, ["a", "b"], np.random.default_rng(3))
    assert str(rec.outcome) in ("00", "11") and rec.probability == pytest.approx(0.5)
    assert post.amplitude(str(rec.outcome)) == pytest.approx(1.0)

    basis = sv.make_basis_state(3, "110")
    rec, _ = sv.measure(basis, basis.labels, np.random.default_rng(0))
    assert str(rec.outcome) == "110" and rec.probability == pytest.approx(1.0)


def test_born_consistency_over_many_seeds():
    s = StateVector(np.sqrt([0.1, 0.2, 0.3, 0.4]), ["a", "b"])
    p = sv.probabilities(s, ["a", "b"])
    counts = np.zeros(4)
    for seed in range(10_000):
        rec, _ = sv.measure(s, ["a", "b"], np.random.default_rng(seed))
        counts[rec.outcome.value] += 1
        assert rec.probability == pytest.approx(p[rec.outcome.value], abs=1e-10)
    freq = counts / 10_000
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / 10_000))


def test_measurement_is_deterministic_given_seed(rng):
    s = random_state(4, rng)
    a = sv.measure(s, ["q1", "q3"], np.random.default_rng(99))
    b = sv.measure(s, ["q1", "q3"], np.random.default_rng(99))
    assert a[0] == b[0] and np.array_equal(a[1].amps, b[1].amps)


def test_marginal_probabilities_match_bruteforce(rng):
    s = random_state(5, rng)
    qs = ["q3", "q0"]
    brute = np.zeros(4)
    for idx, amp in enumerate(s.amps):
        bits = format(idx, "05b")
        brute[int(bits[3] + bits[0], 2)] += abs(amp) ** 2
    assert np.allclose(sv.probabilities(s, qs), brute, atol=1e-14)


def test_postselect_renormalises(rng):
    s = random_state(3, rng)
    prob, post = sv.postselect(s, ["q0"], 1)
    assert prob == pytest.approx(sv.probabilities(s, ["q0"])[1])
    assert post.norm() == pytest.approx(1.0)
    assert sv.probabilities(post, ["q0"])[1] == pytest.approx(1.0)


def test_discard_fixed_qubits(rng):
    psi = random_state(2, rng, ["b", "c"])
    s = sv.tensor(sv.make_basis_state(1, "0", ["a"]), psi)
    out = sv.discard_fixed_qubits(s, ["a"])
    assert out.labels == ("b", "c") and np.allclose(out.amps, psi.amps)
    epr = StateVector([1, 0, 0, 1] / np.sqrt(2), ["a", "b"])
    with pytest.raises(ContractViolation):
        sv.discard_fixed_qubits(epr, ["a"])


def test_fidelity():
    psi = StateVector([0.6, 0.8j], ["a"])
    assert sv.fidelity(psi, psi) == pytest.approx(1.0)
    assert sv.fidelity(sv.make_basis_state(2, "00"), sv.make_basis_state(2, "11")) == 0
    with pytest.raises(ContractViolation):
        sv.fidelity(sv.make_basis_state(1, "0"), sv.make_basis_state(2, "00"))


def test_reorder_moves_amplitudes():
    s = sv.make_basis_state(3, "100", ["a", "b", "c"])
    r = sv.reorder(s, ["c", "a", "b"])
    assert r.amplitude("010") == 1 and r.labels == ("c", "a", "b")


@pytest.mark.parametrize("n", [1, 3])
def test_operations_leave_input_untouched(n, rng):
    s = random_state(n, rng)
    before = s.amps.copy()
    sv.apply_not(s, s.labels[-1])
    sv.apply_add_constant(s, s.labels, 1)
    sv.apply_classical_permutation(s, s.labels, np.roll(np.arange(1 << n), 1))
    assert np.array_equal(s.amps, before)
