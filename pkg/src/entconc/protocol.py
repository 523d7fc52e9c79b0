"""End-to-end entanglement concentration on simulated registers.

Two engines run the same local operations:

``full``
    The joint 2n-qubit state (Alice's n qubits, then Bob's) plus every
    ancilla.  Alice and Bob each run their own networks and measurements,
    and their results are checked to agree.
``mirrored``
    States of the form sum_x c_x |x>_A |x>_B stay in that form under the
    protocol because both parties apply identical operations.  One register
    holding c_x stands for both halves, so a run costs 2^n amplitudes
    instead of 4^n.

In the measured-j path the binary expansion of C(n, j) is known classically,
so the cascade network is partially evaluated against it (and against the
control qubits that can never be cleared) before simulation.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from . import statevec as sv
from .analysis import YieldTable
from .circuits import (
    apply_circuit, build_cascade_network, build_hamming_network,
    build_perm_network, FORWARD,
)
from .combinat import binomial_expansion
from .errors import ContractViolation, EngineSizeError
from .oracle import ideal_epr_state
from .statevec import StateVector

FULL = "full"
MIRRORED = "mirrored"
ENGINES = (FULL, MIRRORED)

FULL_PREPARE_MAX_N = 10
FULL_RUN_MAX_N = 6
MIRRORED_RUN_MAX_N = 12
MIRRORED_PREPARE_MAX_N = 24
COHERENT_MAX_N = 4

FIDELITY_TOL = 1e-9


@dataclass(frozen=True)
class PairParams:
    """n copies of alpha|00> + beta|11> with beta = sqrt(1 - alpha^2)."""

    alpha: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and 0.0 <= self.alpha <= 1.0):
            raise ContractViolation(f"alpha = {self.alpha!r} must lie in [0, 1]")
        if int(self.n) != self.n or self.n < 1:
            raise ContractViolation(f"n = {self.n!r} must be a positive integer")

    @property
    def beta(self) -> float:
        return math.sqrt(1.0 - self.alpha * self.alpha)


@dataclass(frozen=True)
class MirroredState:
    """Coefficients c_x of sum_x c_x |x>_A |x>_B, stored as one register."""

    side: StateVector

    @property
    def n(self) -> int:
        return self.side.num_qubits

    @property
    def amps(self) -> np.ndarray:
        return self.side.amps


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    key: str
    value: int


@dataclass(frozen=True)
class ProtocolOutcome:
    j: int
    k: int
    l: int
    pairs: int
    final_state: Union[StateVector, MirroredState]
    fidelity_vs_ideal: float
    seed: int
    stream: int = 0
    engine: str = MIRRORED
    transcript: tuple[Message, ...] = field(default=())


def _sides(engine: str) -> tuple[str, ...]:
    if engine == FULL:
        return ("A", "B")
    if engine == MIRRORED:
        return ("M",)
    raise ContractViolation(f"engine must be one of {ENGINES}, got {engine!r}")


def data_labels(side: str, n: int) -> tuple[str, ...]:
    return tuple(f"{side}{i}" for i in range(1, n + 1))


# -- step 1: preparation ------------------------------------------------------

def prepare_state(p: PairParams, engine: str = MIRRORED) -> StateVector | MirroredState:
    n, a, b = p.n, p.alpha, p.beta
    if engine == FULL:
        if n > FULL_PREPARE_MAX_N:
            raise EngineSizeError(f"full engine holds at most n = {FULL_PREPARE_MAX_N} pairs")
        s = StateVector([a, 0.0, 0.0, b], ["A1", "B1"])
        for i in range(2, n + 1):
            s = sv.tensor(s, StateVector([a, 0.0, 0.0, b], [f"A{i}", f"B{i}"]))
        return sv.reorder(s, data_labels("A", n) + data_labels("B", n))
    _sides(engine)
    if n > MIRRORED_PREPARE_MAX_N:
        raise EngineSizeError(f"mirrored engine holds at most n = {MIRRORED_PREPARE_MAX_N}")
    weights = np.array([bin(x).count("1") for x in range(1 << n)])
    amps = a ** (n - weights) * b ** weights
    return MirroredState(StateVector(amps, data_labels("M", n)))


def _as_vector(state) -> StateVector:
    return state.side if isinstance(state, MirroredState) else state


# -- networks attached to a party's qubits -----------------------------------

def _hamming_for(side: str, n: int):
    def name(q):
        return f"{side}{q[1:]}" if q.startswith("x") else f"{side}.{q}"
    return build_hamming_network(n).relabel(name)


def _cascade_for(side: str, n: int, k: int):
    def name(q):
        if q.startswith("y"):
            return f"{side}{n - int(q[1:])}"
        return f"{side}.{q}"
    return build_cascade_network(k).relabel(name)


def _with_ancilla(s: StateVector, labels, value: int = 0) -> StateVector:
    labels = tuple(labels)
    anc = sv.make_basis_state(len(labels), sv.BitString.from_int(value, len(labels)), labels)
    return sv.tensor(s, anc)


@lru_cache(maxsize=None)
def rank_table(n: int, j: int) -> np.ndarray:
    """Bijection on n-bit strings sending each weight-j string to its rank.

    Ranks come from running the T/S network backwards on every input; the
    strings of other weights fill the remaining values in increasing order.
    """
    net = build_perm_network(n, j, FORWARD)
    xs = np.arange(1 << n, dtype=np.int64)
    out = net.run_registers({"out": xs})
    hit = out["j"] == j
    table = np.empty(1 << n, dtype=np.int64)
    table[hit] = out["y"][hit]
    table[~hit] = np.setdiff1d(xs, out["y"][hit])
    table.setflags(write=False)
    return sv.check_bijection(table, 1 << n)


# -- deterministic stages, memoised -------------------------------------------
#
# Randomness enters only through the two measurements.  Everything between
# them is a deterministic function of the outcome so far, so each branch is
# simulated once per process and reused by later trials.  After the weight
# outcome j the state no longer depends on alpha (alpha, beta > 0 real).

_CACHE: dict = {}


def clear_caches():
    """Forget memoised states and rank tables (for cold-start timing)."""
    _CACHE.clear()
    rank_table.cache_clear()


def _memo(key, build):
    if key not in _CACHE:
        _CACHE[key] = build()
    return _CACHE[key]


def _weighed_state(p: PairParams, engine: str):
    """Prepared state with Alice's Hamming network applied.

    Returns (state, weight-register labels, Born probabilities of the weight).
    """
    def build():
        net = _hamming_for(_sides(engine)[0], p.n)
        weight = net.registers["weight"]
        s = _with_ancilla(_as_vector(prepare_state(p, engine)), weight)
        s = apply_circuit(s, net)
        return s, weight, sv.probabilities(s, weight)
    return _memo(("weighed", engine, p.alpha, p.n), build)


def _after_weight(p: PairParams, engine: str, j: int) -> StateVector:
    """State once every party has measured weight j and dropped its counter."""
    def build():
        s, weight, _ = _weighed_state(p, engine)
        _, s = sv.postselect(s, weight, j)
        s = sv.discard_fixed_qubits(s, weight)
        for side in _sides(engine)[1:]:
            net = _hamming_for(side, p.n)
            s = apply_circuit(_with_ancilla(s, net.registers["weight"]), net)
            probs = sv.probabilities(s, net.registers["weight"])
            if abs(probs[j] - 1.0) > sv.NORM_TOL:
                raise AssertionError(f"party {side} would not measure weight {j}")
            s = sv.discard_fixed_qubits(s, net.registers["weight"])
        return s
    return _memo(("weight", engine, p.alpha, p.n, j), build)


@dataclass(frozen=True)
class CascadeState:
    """Joint state just before the pair-count readout.

    ``y`` maps each party to its k ranked qubits (MSB first) and ``m`` to its
    measurement-ancilla qubits.  Control qubits and the expansion register
    are already restored and removed.
    """

    state: StateVector
    n: int
    j: int
    k: int
    y: dict
    m: dict


def _rank_and_cascade(s: StateVector, n: int, j: int, engine: str) -> CascadeState:
    sides = _sides(engine)
    exp = binomial_expansion(n, j)
    k = exp.k
    table = rank_table(n, j)
    for side in sides:
        s = sv.apply_classical_permutation(s, data_labels(side, n), table)
    for side in sides:
        s = sv.discard_fixed_qubits(s, data_labels(side, n)[: n - k])
    ys, ms = {}, {}
    for side in sides:
        net = _cascade_for(side, n, k)
        regs = net.registers
        constants = {q: exp.bit(k - 1 - i) for i, q in enumerate(regs["x"])}
        constants.update({q: 1 for q in regs["t"]})
        m_bits = sv.BitString.from_int(k - 1, len(regs["m"]))
        constants.update(zip(regs["m"], m_bits.bits))
        folded = net.fold_constants(constants)
        for q, v in folded.eliminated.items():
            if v != constants[q]:
                raise AssertionError(f"classical qubit {q} not restored by the cascade")
        start = dict(folded.initial)
        # m may be untouched (k = 1) and folded away; it is still read out
        start.update({q: folded.eliminated[q] for q in regs["m"] if q not in start})
        anc = tuple(start)
        bits = sv.BitString(tuple(start[q] for q in anc))
        s = sv.tensor(s, sv.make_basis_state(len(anc), bits, anc))
        s = apply_circuit(s, folded.circuit)
        active_t = [q for q in regs["t"] if q in folded.initial]
        if active_t:
            probs = sv.probabilities(s, active_t)
            if abs(probs[-1] - 1.0) > sv.NORM_TOL:
                raise AssertionError("control ancilla not reset to all ones")
            s = sv.discard_fixed_qubits(s, active_t)
        ys[side] = regs["y"]
        ms[side] = regs["m"]
    return CascadeState(s, n, j, k, ys, ms)


def _cascaded(p: PairParams, engine: str, j: int):
    """(CascadeState, Born probabilities of Alice's pair-count register)."""
    def build():
        cs = _rank_and_cascade(_after_weight(p, engine, j), p.n, j, engine)
        return cs, sv.probabilities(cs.state, cs.m[_sides(engine)[0]])
    return _memo(("cascade", engine, p.n, j), build)


def pre_measurement_state(p: PairParams, j: int, engine: str = MIRRORED) -> CascadeState:
    """Deterministic state after weight outcome j, ranking and cascade."""
    _check_run_size(p, engine)
    return _cascaded(p, engine, j)[0]


# -- readout -------------------------------------------------------------------

def _readout(s: StateVector, cs: CascadeState, engine: str, pairs: int):
    """Remove the ancillas and the l+1 leading qubits after reading ``pairs``."""
    sides = _sides(engine)
    for side in sides:
        s = sv.discard_fixed_qubits(s, cs.m[side])
    drop = cs.k - pairs
    for side in sides:
        s = sv.discard_fixed_qubits(s, cs.y[side][:drop])
    if engine == FULL:
        ideal = ideal_epr_state(pairs)
        return s, sv.fidelity(s, ideal)
    dim = 1 << pairs
    ideal = StateVector(np.full(dim, 1.0 / math.sqrt(dim)), s.labels)
    return MirroredState(s), sv.fidelity(s, ideal)


def _branch(p: PairParams, engine: str, j: int, pairs: int):
    """(final state, fidelity) once Alice reads ``pairs``; Bob must agree."""
    def build():
        cs, _ = _cascaded(p, engine, j)
        sides = _sides(engine)
        _, post = sv.postselect(cs.state, cs.m[sides[0]], pairs)
        for side in sides[1:]:
            probs = sv.probabilities(post, cs.m[side])
            if abs(probs[pairs] - 1.0) > sv.NORM_TOL:
                raise AssertionError(f"party {side} would not read {pairs} pairs")
        return _readout(post, cs, engine, pairs)
    return _memo(("branch", engine, p.n, j, pairs), build)


def _check_run_size(p: PairParams, engine: str):
    limit = FULL_RUN_MAX_N if engine == FULL else MIRRORED_RUN_MAX_N
    _sides(engine)
    if p.n > limit:
        raise EngineSizeError(f"{engine} engine runs the protocol for n <= {limit}, got n = {p.n}")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def run_protocol(p: PairParams, seed: int, engine: str = MIRRORED, stream: int = 0,
                 coherent_j: bool = False) -> ProtocolOutcome:
    """One seeded run: weight measurement, ranking, cascade, readout.

    ``stream`` selects an independent random stream for the same seed; trial
    i of :func:`run_trials` is ``stream=i``.  ``coherent_j`` defers the
    weight measurement to the very end (mirrored engine, n <= 4 only).
    """
    if coherent_j:
        return _run_coherent(p, seed, engine, stream)
    _check_run_size(p, engine)
    rng = _rng(seed, stream)
    j = sv.sample_outcome(_weighed_state(p, engine)[2], rng)
    cs, probs = _cascaded(p, engine, j)
    pairs = sv.sample_outcome(probs, rng)
    final, fid = _branch(p, engine, j, pairs)
    transcript = (Message("alice", "bob", "weight", j), Message("alice", "bob", "pairs", pairs))
    return ProtocolOutcome(j=j, k=cs.k, l=cs.k - 1 - pairs, pairs=pairs, final_state=final,
                           fidelity_vs_ideal=fid, seed=seed, stream=stream, engine=engine,
                           transcript=transcript)


def outcome_distribution(p: PairParams, engine: str = MIRRORED,
                         coherent_j: bool = False) -> dict[tuple[int, int], float]:
    """Exact probability of every (j, pairs) outcome, from Born marginals."""
    if coherent_j:
        cs, h, x = _coherent_cascade(p, engine)
        joint = sv.probabilities(cs.state, cs.m["M"] + h)
        w = len(h)
        return {(v & ((1 << w) - 1), v >> w): float(q)
                for v, q in enumerate(joint) if q > 0.0}
    _check_run_size(p, engine)
    dist = {}
    for j, pj in enumerate(_weighed_state(p, engine)[2]):
        if pj <= 0.0:
            continue
        for pairs, q in enumerate(_cascaded(p, engine, j)[1]):
            if q > 0.0:
                dist[(j, pairs)] = float(pj * q)
    return dist


# -- deferred weight measurement ------------------------------------------------

def _coherent_cascade(p: PairParams, engine: str):
    if engine != MIRRORED:
        raise ContractViolation("the coherent-j variant runs on the mirrored engine")
    n = p.n
    if n > COHERENT_MAX_N:
        raise EngineSizeError(f"coherent-j variant limited to n <= {COHERENT_MAX_N}")
    s, h, _ = _weighed_state(p, engine)
    w = len(h)
    exps = [binomial_expansion(n, j) for j in range(n + 1)]
    kmax = max(e.k for e in exps)
    data = data_labels("M", n)

    # rank every data string within the weight held in h
    vals = np.arange(1 << (n + w), dtype=np.int64)
    x, hv = vals >> w, vals & ((1 << w) - 1)
    ranked = x.copy()
    for j in range(n + 1):
        sel = hv == j
        ranked[sel] = rank_table(n, j)[x[sel]]
    s = sv.apply_classical_permutation(s, data + h, (ranked << w) | hv)
    s = sv.discard_fixed_qubits(s, data[: n - kmax])

    net = _cascade_for("M", n, kmax)
    regs = net.registers
    s = _with_ancilla(s, regs["x"])
    load = np.arange(1 << (w + kmax), dtype=np.int64)
    hv, xv = load >> kmax, load & ((1 << kmax) - 1)
    expansion = np.array([e.value for e in exps] + [0] * ((1 << w) - n - 1))
    s = sv.apply_classical_permutation(s, h + regs["x"], (hv << kmax) | (xv ^ expansion[hv]))
    s = _with_ancilla(s, regs["t"], (1 << kmax) - 1)
    s = _with_ancilla(s, regs["m"], kmax - 1)
    s = apply_circuit(s, net)
    s = sv.discard_fixed_qubits(s, regs["t"])
    return CascadeState(s, n, -1, kmax, {"M": regs["y"]}, {"M": regs["m"]}), h, regs["x"]


def _run_coherent(p: PairParams, seed: int, engine: str, stream: int) -> ProtocolOutcome:
    rng = _rng(seed, stream)
    cs, h, x = _coherent_cascade(p, engine)
    record, s = sv.measure(cs.state, cs.m["M"], rng)
    pairs = record.outcome.value
    record, s = sv.measure(s, h, rng)
    j = record.outcome.value
    s = sv.discard_fixed_qubits(s, h + x)
    final, fid = _readout(s, cs, engine, pairs)
    k = binomial_expansion(p.n, j).k
    return ProtocolOutcome(j=j, k=k, l=k - 1 - pairs, pairs=pairs, final_state=final,
                           fidelity_vs_ideal=fid, seed=seed, stream=stream, engine=engine,
                           transcript=(Message("alice", "bob", "pairs", pairs),))


# -- Monte-Carlo trials ----------------------------------------------------------

def _trial_chunk(args):
    p, base_seed, engine, start, stop = args
    out = []
    for i in range(start, stop):
        o = run_protocol(p, base_seed, engine, stream=i)
        out.append((o.j, o.pairs, o.fidelity_vs_ideal))
    return out


def run_trials(p: PairParams, trials: int, base_seed: int, engine: str = MIRRORED,
               workers: int = 1) -> YieldTable:
    """Run ``trials`` independent seeded protocols and tabulate the yields.

    Trial i uses random stream i of ``base_seed``, so results do not depend
    on ``workers``.
    """
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    _check_run_size(p, engine)
    if workers <= 1:
        results = _trial_chunk((p, base_seed, engine, 0, trials))
    else:
        size = -(-trials // workers)
        chunks = [(p, base_seed, engine, a, min(a + size, trials))
                  for a in range(0, trials, size)]
        with ProcessPoolExecutor(workers) as pool:
            results = [r for part in pool.map(_trial_chunk, chunks) for r in part]
    return YieldTable.from_trials(p.alpha, p.n, engine, base_seed,
                                  [(j, pairs) for j, pairs, _ in results],
                                  min(f for _, _, f in results))
