"""Reversible networks for entanglement concentration.

Three builders produce :class:`Circuit` values over named registers:

* ``build_hamming_network``  -- controlled increments that count the 1s of a
  data register into a weight register.
* ``build_perm_network``     -- the rank/unrank permutation as n alternating
  comparator (T) and conditional-subtract (S) steps.
* ``build_cascade_network``  -- the three-stage network that counts how many
  EPR pairs a ranked register holds.

Circuits are immutable.  They can be run on a :class:`StateVector`, evaluated
classically on basis labels (vectorised over numpy arrays), inverted,
relabelled, exported as a text netlist, and partially evaluated against
qubits whose values are known classically.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .combinat import binomial_or_zero
from .errors import ContractViolation
from . import statevec as sv
from .statevec import StateVector

Control = tuple[str, int]


@dataclass(frozen=True)
class NotStep:
    target: str
    controls: tuple[Control, ...] = ()

    @property
    def acting(self) -> tuple[str, ...]:
        return (self.target,)

    def inverse(self) -> "NotStep":
        return self


@dataclass(frozen=True)
class AddStep:
    register: tuple[str, ...]
    c: int
    controls: tuple[Control, ...] = ()

    @property
    def acting(self) -> tuple[str, ...]:
        return self.register

    def inverse(self) -> "AddStep":
        return replace(self, c=-self.c)


@lru_cache(maxsize=None)
def _thresholds(w: int) -> np.ndarray:
    """thr[nv, jv] = C(nv - 1, jv), zero outside the valid range."""
    size = 1 << w
    thr = np.zeros((size, size), dtype=np.int64)
    for nv in range(size):
        for jv in range(size):
            thr[nv, jv] = binomial_or_zero(nv - 1, jv)
    return thr


_INVERSE_KIND = {"T": "T", "S": "S^-1", "S^-1": "S"}


@dataclass(frozen=True)
class PermStep:
    """One T or S step of the rank/unrank network.

    The step register packs (y, n, j, b): the low ``n - index`` bits of the
    y register, the running-n and running-j counters (``w`` bits each) and the
    single output bit b_{index+1}.
    """

    kind: str
    index: int
    n: int
    register: tuple[str, ...]
    controls: tuple[Control, ...] = ()

    def __post_init__(self):
        if self.kind not in _INVERSE_KIND:
            raise ContractViolation(f"unknown permutation step kind {self.kind!r}")
        if len(self.register) != self.width + 2 * self.w + 1:
            raise ContractViolation("permutation step register has the wrong width")
        if self.controls:
            raise ContractViolation("T/S steps take no controls")

    @property
    def w(self) -> int:
        return self.n.bit_length()

    @property
    def width(self) -> int:
        """Number of y bits the step acts on."""
        return self.n - self.index

    @property
    def acting(self) -> tuple[str, ...]:
        return self.register

    @property
    def table_id(self) -> str:
        return f"{self.kind}:n{self.n}:i{self.index}"

    def inverse(self) -> "PermStep":
        return replace(self, kind=_INVERSE_KIND[self.kind])

    def mapping(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        w, yw = self.w, self.width
        wmask, ymod = (1 << w) - 1, 1 << yw
        b = v & 1
        jv = (v >> 1) & wmask
        nv = (v >> (w + 1)) & wmask
        y = v >> (2 * w + 1)
        thr = _thresholds(w)
        if self.kind == "T":
            b = b ^ (y >= thr[nv, jv]).astype(np.int64)
        elif self.kind == "S":
            y = np.where(b == 1, (y - thr[nv, jv]) % ymod, y)
            jv = (jv - b) & wmask
            nv = (nv - 1) & wmask
        else:
            nv = (nv + 1) & wmask
            jv = (jv + b) & wmask
            y = np.where(b == 1, (y + thr[nv, jv]) % ymod, y)
        return (y << (2 * w + 1)) | (nv << (w + 1)) | (jv << 1) | b

    def table(self) -> np.ndarray:
        return self.mapping(np.arange(1 << len(self.register), dtype=np.int64))


Step = Union[NotStep, AddStep, PermStep]


def _relabel_step(step: Step, f: Callable[[str], str]) -> Step:
    controls = tuple((f(q), p) for q, p in step.controls)
    if isinstance(step, NotStep):
        return NotStep(f(step.target), controls)
    if isinstance(step, AddStep):
        return AddStep(tuple(map(f, step.register)), step.c, controls)
    return replace(step, register=tuple(map(f, step.register)))


@dataclass(frozen=True)
class Circuit:
    name: str
    registers: Mapping[str, tuple[str, ...]]
    steps: tuple[Step, ...]
    presets: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise ContractViolation(f"circuit {self.name}: duplicate labels")
        known = set(labels)
        for step in self.steps:
            used = set(step.acting) | {q for q, _ in step.controls}
            missing = used - known
            if missing:
                raise ContractViolation(
                    f"circuit {self.name}: step {step} uses unknown labels {sorted(missing)}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(q for reg in self.registers.values() for q in reg)

    @property
    def width(self) -> int:
        return len(self.labels)

    def inverse(self) -> "Circuit":
        return Circuit(self.name + "^-1", self.registers,
                       tuple(s.inverse() for s in reversed(self.steps)), {})

    def relabel(self, mapping: Mapping[str, str] | Callable[[str], str]) -> "Circuit":
        f = mapping if callable(mapping) else (lambda q: mapping.get(q, q))
        regs = {role: tuple(map(f, qs)) for role, qs in self.registers.items()}
        return Circuit(self.name, regs, tuple(_relabel_step(s, f) for s in self.steps),
                       dict(self.presets))

    # -- classical evaluation on basis labels ------------------------------

    def run(self, bits: Mapping[str, np.ndarray | int]) -> dict[str, np.ndarray]:
        """Evaluate the circuit on basis labels given as per-qubit bit arrays.

        Missing qubits start at 0.  Arrays broadcast, so one call evaluates
        many basis states at once.
        """
        vals = {q: np.asarray(bits.get(q, 0), dtype=np.int64) for q in self.labels}
        shape = np.broadcast(*vals.values()).shape if vals else ()
        vals = {q: np.broadcast_to(v, shape).copy() for q, v in vals.items()}

        def fires(controls):
            mask = np.ones(shape, dtype=bool)
            for q, pol in controls:
                mask &= vals[q] == pol
            return mask

        for step in self.steps:
            if isinstance(step, NotStep):
                vals[step.target] = vals[step.target] ^ fires(step.controls)
                continue
            v = _pack([vals[q] for q in step.register])
            if isinstance(step, AddStep):
                new = np.where(fires(step.controls), (v + step.c) % (1 << len(step.register)), v)
            else:
                new = step.mapping(v)
            for q, b in zip(step.register, _unpack(new, len(step.register))):
                vals[q] = b
        return vals

    def run_registers(self, values: Mapping[str, np.ndarray | int]
                      ) -> dict[str, np.ndarray]:
        """Like :meth:`run` but with whole registers given as integers."""
        bits: dict[str, np.ndarray] = {}
        for role, v in {**self.presets, **values}.items():
            qs = self.registers[role]
            bits.update(zip(qs, _unpack(np.asarray(v, dtype=np.int64), len(qs))))
        out = self.run(bits)
        return {role: _pack([out[q] for q in qs]) for role, qs in self.registers.items()}

    def basis_permutation(self) -> np.ndarray:
        """Destination index of every basis state, over ``self.labels`` MSB-first."""
        n = self.width
        idx = np.arange(1 << n, dtype=np.int64)
        bits = {q: (idx >> (n - 1 - i)) & 1 for i, q in enumerate(self.labels)}
        out = self.run(bits)
        return _pack([out[q] for q in self.labels])

    # -- netlist ------------------------------------------------------------

    def netlist(self) -> str:
        lines = [f"# circuit {self.name}"]
        for role, qs in self.registers.items():
            lines.append(f"# register {role}=[{','.join(qs)}]")
        for role, v in self.presets.items():
            lines.append(f"# preset {role}={v}")
        for step in self.steps:
            ctl = ",".join(f"{q}:{p}" for q, p in step.controls)
            if isinstance(step, NotStep):
                lines.append(f"NOT {step.target} controls=[{ctl}]")
            elif isinstance(step, AddStep):
                lines.append(f"ADD register=[{','.join(step.register)}] c={step.c} controls=[{ctl}]")
            else:
                lines.append(f"PERM register=[{','.join(step.register)}] table={step.table_id}")
        return "\n".join(lines) + "\n"

    # -- partial evaluation ---------------------------------------------------

    def fold_constants(self, constants: Mapping[str, int]) -> "FoldedCircuit":
        """Specialise the circuit to qubits whose basis values are known.

        A known qubit stays classical as long as every step that could change
        it has only classical controls.  Such qubits are removed from the
        circuit; controls on them are resolved (dropping steps that can never
        fire).  Known qubits that do get coupled to quantum data remain in the
        circuit and are reported in ``initial`` so the caller can prepare them.
        """
        for q in constants:
            if q not in self.labels:
                raise ContractViolation(f"cannot fold unknown qubit {q!r}")
        dynamic = set(self.labels) - set(constants)
        while True:
            grown = False
            vals = dict(constants)
            for step in self.steps:
                status = _control_status(step.controls, dynamic, vals)
                if status is False:
                    continue
                if status is None or any(q in dynamic for q in step.acting):
                    new = set(step.acting) - dynamic
                    if new:
                        dynamic |= new
                        grown = True
                        break
                    continue
                _classical_step(step, vals)
            if not grown:
                break

        vals = dict(constants)
        steps: list[Step] = []
        for step in self.steps:
            status = _control_status(step.controls, dynamic, vals)
            if status is False:
                continue
            if not any(q in dynamic for q in step.acting):
                _classical_step(step, vals)
                continue
            kept = tuple((q, p) for q, p in step.controls if q in dynamic)
            steps.append(replace(step, controls=kept) if step.controls else step)
        regs = {role: tuple(q for q in qs if q in dynamic)
                for role, qs in self.registers.items()}
        regs = {role: qs for role, qs in regs.items() if qs}
        eliminated = {q: vals[q] for q in constants if q not in dynamic}
        initial = {q: v for q, v in constants.items() if q in dynamic}
        return FoldedCircuit(Circuit(self.name, regs, tuple(steps), {}), eliminated, initial)


@dataclass(frozen=True)
class FoldedCircuit:
    circuit: Circuit
    eliminated: dict[str, int]   # classical qubits removed, with final values
    initial: dict[str, int]      # known qubits still present, with start values


def _control_status(controls, dynamic, vals):
    """False if some classical control fails, None if quantum controls remain, else True."""
    undecided = False
    for q, pol in controls:
        if q in dynamic:
            undecided = True
        elif vals[q] != pol:
            return False
    return None if undecided else True


def _classical_step(step: Step, vals: dict[str, int]):
    if isinstance(step, NotStep):
        vals[step.target] ^= 1
        return
    v = int(_pack([np.int64(vals[q]) for q in step.register]))
    if isinstance(step, AddStep):
        v = (v + step.c) % (1 << len(step.register))
    else:
        v = int(step.mapping(np.array([v]))[0])
    for q, b in zip(step.register, _unpack(np.int64(v), len(step.register))):
        vals[q] = int(b)


def _pack(bits: Sequence[np.ndarray]) -> np.ndarray:
    v = np.zeros(np.shape(bits[0]) if bits else (), dtype=np.int64)
    for b in bits:
        v = (v << 1) | b
    return v


def _unpack(v: np.ndarray, width: int) -> list[np.ndarray]:
    return [(v >> (width - 1 - i)) & 1 for i in range(width)]


# -- running on a state vector ----------------------------------------------

def apply_circuit(s: StateVector, circuit: Circuit) -> StateVector:
    for step in circuit.steps:
        if isinstance(step, NotStep):
            s = sv.apply_not(s, step.target, step.controls)
        elif isinstance(step, AddStep):
            s = sv.apply_add_constant(s, step.register, step.c, step.controls)
        else:
            s = sv.apply_classical_permutation(s, step.register, step.table())
    return s


# -- builders -----------------------------------------------------------------

def register_width(max_value: int) -> int:
    """Qubits needed to hold 0..max_value."""
    return max(1, max_value.bit_length())


def build_hamming_network(n: int) -> Circuit:
    """|x_1..x_n>|0> -> |x_1..x_n>|H(x)> by one controlled increment per data qubit."""
    if n < 1:
        raise ContractViolation("Hamming network needs n >= 1")
    data = tuple(f"x{i}" for i in range(1, n + 1))
    w = register_width(n)
    weight = tuple(f"h{i}" for i in reversed(range(w)))
    steps = tuple(AddStep(weight, 1, ((q, 1),)) for q in data)
    return Circuit(f"hamming(n={n})", {"data": data, "weight": weight}, steps,
                   {"weight": 0})


FORWARD = "forward"
INVERSE = "inverse"


def build_perm_network(n: int, j: int, direction: str = INVERSE) -> Circuit:
    """T/S network for unrank (``inverse``) or rank (``forward``).

    ``inverse``:  |y>|n>|j>|0..0>  ->  |0>|0>|0>|[y]_{n,j}>
    ``forward`` runs the same steps backwards:
                  |0>|0>|0>|x>     ->  |rank(x)>|n>|H(x)>|0..0>
    """
    if n < 1 or not 0 <= j <= n:
        raise ContractViolation(f"perm network needs 0 <= j <= n, n >= 1 (got n={n}, j={j})")
    if direction not in (FORWARD, INVERSE):
        raise ContractViolation(f"direction must be {FORWARD!r} or {INVERSE!r}")
    w = register_width(n)
    y = tuple(f"y{i}" for i in reversed(range(n)))
    nreg = tuple(f"nr{i}" for i in reversed(range(w)))
    jreg = tuple(f"jr{i}" for i in reversed(range(w)))
    out = tuple(f"b{i}" for i in range(1, n + 1))
    steps: list[Step] = []
    for i in range(n):
        reg = y[i:] + nreg + jreg + (out[i],)
        steps.append(PermStep("T", i, n, reg))
        steps.append(PermStep("S", i, n, reg))
    regs = {"y": y, "n": nreg, "j": jreg, "out": out}
    inverse = Circuit(f"unrank(n={n},j={j})", regs, tuple(steps), {"n": n, "j": j, "y": 0, "out": 0})
    if direction == INVERSE:
        return inverse
    return Circuit(f"rank(n={n})", regs, inverse.inverse().steps, {"y": 0, "n": 0, "j": 0})


def cascade_ancilla_width(k: int) -> int:
    """ceil(log2 k) + 1 qubits for the measurement ancilla."""
    return (k - 1).bit_length() + 1


def build_cascade_network(k: int) -> Circuit:
    """Three-stage network reading the number of distilled pairs into ``m``.

    Stage 1 clears t_i where (x_i, y_i) = (1, 0).  Stage 2 decrements m, which
    starts at k-1, once for each position i = k-1..1 scanned before the first
    cleared t.  Stage 3 repeats stage 1, restoring t to all ones.
    """
    if k < 1:
        raise ContractViolation("cascade network needs k >= 1")
    bits = tuple(reversed(range(k)))
    y = tuple(f"y{i}" for i in bits)
    x = tuple(f"x{i}" for i in bits)
    t = tuple(f"t{i}" for i in bits)
    m = tuple(f"m{i}" for i in reversed(range(cascade_ancilla_width(k))))
    compare = [NotStep(f"t{i}", ((f"x{i}", 1), (f"y{i}", 0))) for i in bits]
    count = [AddStep(m, -1, tuple((f"t{p}", 1) for p in range(k - 1, i - 1, -1)))
             for i in range(k - 1, 0, -1)]
    return Circuit(f"cascade(k={k})", {"y": y, "x": x, "t": t, "m": m},
                   tuple(compare + count + compare),
                   {"t": (1 << k) - 1, "m": k - 1})


# -- netlist parsing ----------------------------------------------------------

_LIST = r"\[([^\]]*)\]"
_NOT_RE = re.compile(rf"^NOT (\S+) controls={_LIST}$")
_ADD_RE = re.compile(rf"^ADD register={_LIST} c=(-?\d+) controls={_LIST}$")
_PERM_RE = re.compile(rf"^PERM register={_LIST} table=(T|S|S\^-1):n(\d+):i(\d+)$")


def _split(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.split(",") if t)


def _controls(text: str) -> tuple[Control, ...]:
    out = []
    for item in _split(text):
        q, _, pol = item.rpartition(":")
        out.append((q, int(pol)))
    return tuple(out)


def parse_netlist(text: str) -> Circuit:
    name = "netlist"
    registers: dict[str, tuple[str, ...]] = {}
    presets: dict[str, int] = {}
    steps: list[Step] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("circuit "):
                name = body[len("circuit "):]
            elif body.startswith("register "):
                role, _, qs = body[len("register "):].partition("=")
                registers[role] = _split(qs.strip("[]"))
            elif body.startswith("preset "):
                role, _, v = body[len("preset "):].partition("=")
                presets[role] = int(v)
            continue
        if mt := _NOT_RE.match(line):
            steps.append(NotStep(mt[1], _controls(mt[2])))
        elif mt := _ADD_RE.match(line):
            steps.append(AddStep(_split(mt[1]), int(mt[2]), _controls(mt[3])))
        elif mt := _PERM_RE.match(line):
            steps.append(PermStep(mt[2], int(mt[4]), int(mt[3]), _split(mt[1])))
        else:
            raise ContractViolation(f"netlist line {lineno}: cannot parse {raw!r}")
    if not registers:
        labels: list[str] = []
        for step in steps:
            for q in list(step.acting) + [q for q, _ in step.controls]:
                if q not in labels:
                    labels.append(q)
        registers = {"all": tuple(labels)}
    return Circuit(name, registers, tuple(steps), presets)
