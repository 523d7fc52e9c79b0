"""Dense state-vector engine over labelled qubits.

Basis indices are MSB-first: the qubit at position 0 of ``labels`` is the most
significant bit of the amplitude index.  Every ``apply_*`` operation is a
permutation of basis states, so amplitudes are moved and never recombined.
All operations return a new :class:`StateVector`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation

NORM_TOL = 1e-10
DEFINITE_TOL = 1e-10

Control = tuple[str, int]


@dataclass(frozen=True, order=True)
class BitString:
    """Fixed-width binary word; ``bits[0]`` is the most significant bit."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ContractViolation(f"bits must be 0/1, got {self.bits}")

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        if not text or set(text) - {"0", "1"}:
            raise ContractViolation(f"not a bit string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_int(cls, value: int, width: int) -> "BitString":
        if width < 0 or value < 0 or value >= (1 << width):
            raise ContractViolation(f"{value} does not fit in {width} bits")
        return cls(tuple((value >> (width - 1 - i)) & 1 for i in range(width)))

    @property
    def width(self) -> int:
        return len(self.bits)

    @property
    def value(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]


@dataclass(frozen=True)
class MeasurementRecord:
    qubits: tuple[str, ...]
    outcome: BitString
    probability: float


class StateVector:
    """Normalised complex amplitudes over an ordered list of qubit labels."""

    __slots__ = ("labels", "amps")

    def __init__(self, amps, labels: Sequence[str]):
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ContractViolation(f"duplicate qubit labels: {labels}")
        if amps.size != 1 << len(labels):
            raise ContractViolation(
                f"{amps.size} amplitudes for {len(labels)} qubits")
        if not np.all(np.isfinite(amps)):
            raise ContractViolation("non-finite amplitude")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"state not normalised (|psi|^2 = {norm!r})")
        self.amps = amps
        self.labels = labels

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ContractViolation(f"unknown qubit {label!r}") from None

    def amplitude(self, label: BitString | str) -> complex:
        if isinstance(label, str):
            label = BitString.from_str(label)
        if label.width != self.num_qubits:
            raise ContractViolation("label width does not match register")
        return complex(self.amps[label.value])

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, labels={list(self.labels)})"


def default_labels(num_qubits: int) -> tuple[str, ...]:
    return tuple(f"q{i}" for i in range(num_qubits))


def make_basis_state(num_qubits: int, label: BitString | str,
                     labels: Sequence[str] | None = None) -> StateVector:
    if isinstance(label, str):
        label = BitString.from_str(label)
    if label.width != num_qubits:
        raise ContractViolation(
            f"label {label} has width {label.width}, expected {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[label.value] = 1.0
    return StateVector(amps, labels if labels is not None else default_labels(num_qubits))


def make_register_state(values: dict[str, int], registers: dict[str, Sequence[str]]
                        ) -> StateVector:
    """Basis state with each named register holding an integer value."""
    labels: list[str] = []
    bits: list[int] = []
    for name, qubits in registers.items():
        word = BitString.from_int(values.get(name, 0), len(qubits))
        labels.extend(qubits)
        bits.extend(word.bits)
    return make_basis_state(len(labels), BitString(tuple(bits)), labels)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(np.kron(a.amps, b.amps), a.labels + b.labels)


def reorder(s: StateVector, labels: Sequence[str]) -> StateVector:
    """Same state with qubits listed in a different order."""
    labels = tuple(labels)
    if sorted(labels) != sorted(s.labels):
        raise ContractViolation("reorder must be a permutation of the labels")
    if s.num_qubits == 0:
        return s
    axes = [s.position(q) for q in labels]
    t = s.amps.reshape((2,) * s.num_qubits).transpose(axes)
    return StateVector(t.reshape(-1), labels)


# -- basis-index arithmetic ---------------------------------------------------

def _shifts(s: StateVector, qubits: Iterable[str]) -> list[int]:
    n = s.num_qubits
    return [n - 1 - s.position(q) for q in qubits]


def _read(idx: np.ndarray, shifts: Sequence[int]) -> np.ndarray:
    v = np.zeros_like(idx)
    for sh in shifts:
        v = (v << 1) | ((idx >> sh) & 1)
    return v


def _write(idx: np.ndarray, shifts: Sequence[int], value: np.ndarray) -> np.ndarray:
    m = len(shifts)
    out = idx.copy()
    for i, sh in enumerate(shifts):
        bit = (value >> (m - 1 - i)) & 1
        out = (out & ~np.int64(1 << sh)) | (bit << sh)
    return out


def _check_disjoint(acting: Sequence[str], controls: Sequence[Control]):
    names = list(acting) + [q for q, _ in controls]
    if len(set(names)) != len(names):
        raise ContractViolation(f"duplicate labels among targets/controls: {names}")
    for _, pol in controls:
        if pol not in (0, 1):
            raise ContractViolation(f"control polarity must be 0 or 1, got {pol!r}")


def _grouped(s: StateVector, register: Sequence[str]):
    """Tensor view with ``register`` fused into one trailing axis.

    Returns (array, order) where ``order`` lists the original axis of each
    leading dimension followed by the register axes.
    """
    n = s.num_qubits
    reg = [s.position(q) for q in register]
    other = [a for a in range(n) if a not in reg]
    order = other + reg
    t = s.amps.reshape((2,) * n).transpose(order)
    # always copy: a no-op transpose would otherwise alias the input amplitudes
    return np.array(t, order="C").reshape((2,) * len(other) + (1 << len(reg),)), order


def _ungrouped(t: np.ndarray, order: Sequence[int], labels) -> StateVector:
    n = len(order)
    back = t.reshape((2,) * n).transpose(np.argsort(order))
    return StateVector(back.reshape(-1), labels)


def _controlled_slice(s: StateVector, lead: Sequence[int], controls: Sequence[Control]):
    """Index selecting the slice of a grouped tensor where the controls hold."""
    idx: list = [slice(None)] * (len(lead) + 1)
    for q, pol in controls:
        idx[lead.index(s.position(q))] = pol
    return tuple(idx)


def _permuted(s: StateVector, dest: np.ndarray) -> StateVector:
    out = np.empty_like(s.amps)
    out[dest] = s.amps
    return StateVector(out, s.labels)


def apply_not(s: StateVector, target: str, controls: Sequence[Control] = ()) -> StateVector:
    """Flip ``target`` on basis states where every control has its polarity."""
    _check_disjoint([target], controls)
    t, order = _grouped(s, [target])
    sub = t[_controlled_slice(s, order[:-1], controls)]
    sub[...] = sub[..., ::-1].copy()
    return _ungrouped(t, order, s.labels)


def apply_add_constant(s: StateVector, register: Sequence[str], c: int,
                       controls: Sequence[Control] = ()) -> StateVector:
    """Register value v -> (v + c) mod 2^m where the controls are satisfied."""
    _check_disjoint(register, controls)
    t, order = _grouped(s, register)
    lead = order[: s.num_qubits - len(register)]
    sub = t[_controlled_slice(s, lead, controls)]
    sub[...] = np.roll(sub, c, axis=-1)
    return _ungrouped(t, order, s.labels)


def check_bijection(perm, size: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64).reshape(-1)
    if perm.size != size:
        raise ContractViolation(f"permutation table has {perm.size} entries, need {size}")
    if perm.size and (perm.min() < 0 or perm.max() >= size):
        raise ContractViolation("permutation table leaves the register range")
    if np.unique(perm).size != size:
        raise ContractViolation("permutation table is not a bijection")
    return perm


def apply_classical_permutation(s: StateVector, register: Sequence[str], perm
                                ) -> StateVector:
    """Register value v -> perm[v]; ``perm`` must be a bijection on 0..2^m-1."""
    _check_disjoint(register, ())
    sh = _shifts(s, register)
    perm = check_bijection(perm, 1 << len(sh))
    idx = np.arange(1 << s.num_qubits, dtype=np.int64)
    return _permuted(s, _write(idx, sh, perm[_read(idx, sh)]))


# -- measurement ---------------------------------------------------------------

def probabilities(s: StateVector, qubits: Sequence[str]) -> np.ndarray:
    """Born probabilities of every value of ``qubits`` (read MSB-first)."""
    _check_disjoint(qubits, ())
    n = s.num_qubits
    axes = [s.position(q) for q in qubits]
    other = [a for a in range(n) if a not in axes]
    p = (np.abs(s.amps) ** 2).reshape((2,) * n).transpose(other + axes)
    return p.reshape(-1, 1 << len(axes)).sum(axis=0)


def postselect(s: StateVector, qubits: Sequence[str], outcome: int
               ) -> tuple[float, StateVector]:
    """Project ``qubits`` onto ``outcome``; returns (probability, renormalised state)."""
    idx = np.arange(1 << s.num_qubits, dtype=np.int64)
    keep = _read(idx, _shifts(s, qubits)) == outcome
    amps = np.where(keep, s.amps, 0)
    prob = float(np.vdot(amps, amps).real)
    if prob <= 0.0:
        raise ContractViolation(f"outcome {outcome} has zero probability")
    return prob, StateVector(amps / np.sqrt(prob), s.labels)


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw one outcome index from a Born distribution."""
    return int(rng.choice(probs.size, p=probs / probs.sum()))


def measure(s: StateVector, qubits: Sequence[str], rng: np.random.Generator
            ) -> tuple[MeasurementRecord, StateVector]:
    outcome = sample_outcome(probabilities(s, qubits), rng)
    prob, post = postselect(s, qubits, outcome)
    record = MeasurementRecord(tuple(qubits), BitString.from_int(outcome, len(qubits)), prob)
    return record, post


def discard_fixed_qubits(s: StateVector, qubits: Sequence[str]) -> StateVector:
    """Remove qubits that sit in a definite basis value.

    Refuses superposed or entangled qubits rather than tracing them out.
    """
    state = s
    for q in qubits:
        pos = state.position(q)
        t = state.amps.reshape(2 ** pos, 2, -1)
        p1 = float(np.vdot(t[:, 1], t[:, 1]).real)
        if p1 <= DEFINITE_TOL:
            bit = 0
        elif p1 >= 1.0 - DEFINITE_TOL:
            bit = 1
        else:
            raise ContractViolation(
                f"qubit {q!r} is not in a definite basis state (P(1) = {p1:.3g})")
        kept = t[:, bit].reshape(-1)
        kept = kept / np.sqrt(np.vdot(kept, kept).real)
        state = StateVector(kept, state.labels[:pos] + state.labels[pos + 1:])
    return state


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise ContractViolation(
            f"fidelity between {a.num_qubits}- and {b.num_qubits}-qubit states")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)
