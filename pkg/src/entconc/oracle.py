"""Brute-force references that share no code path with the protocol.

The entanglement spectrum is computed from an explicitly formed reduced
density matrix, diagonalised by cyclic complex Jacobi rotations.  The
cascade yield is tallied string-by-string from the left-to-right stop rule.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ContractViolation, EngineSizeError
from .statevec import StateVector

MAX_EPR_PAIRS = 10


def reduced_density_matrix(s: StateVector, keep: Sequence[str]) -> np.ndarray:
    """rho_A = Tr_B |psi><psi| for A = ``keep`` (in the order given)."""
    keep = list(keep)
    rest = [q for q in s.labels if q not in keep]
    if not keep or not rest or len(set(keep)) != len(keep) or len(keep) + len(rest) != s.num_qubits:
        raise ContractViolation("cut must split the qubits into two nonempty sets")
    axes = [s.position(q) for q in keep + rest]
    psi = s.amps.reshape((2,) * s.num_qubits).transpose(axes)
    psi = psi.reshape(1 << len(keep), 1 << len(rest))
    return psi @ psi.conj().T


def jacobi_eigenvalues(h: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot a_pq with a diagonal
    unitary, then zeroes it with a real Givens rotation.
    """
    a = np.array(h, dtype=np.complex128)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ContractViolation("matrix must be square")
    if not np.allclose(a, a.conj().T, atol=1e-12):
        raise ContractViolation("matrix must be Hermitian")
    scale = max(float(np.abs(a).max()), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale * n:  # rounding floor grows with the dimension
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * scale * 1e-3:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2.0 * mag, aqq - app)
                c, s = math.cos(theta), math.sin(theta)
                # U = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                a[:, [p, q]] = a[:, [p, q]] @ u
                a[[p, q], :] = u.conj().T @ a[[p, q], :]
                a[p, q] = a[q, p] = 0.0
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(a).real)[::-1]


def schmidt_squares(s: StateVector, cut: Sequence[str]) -> list[float]:
    """Squared Schmidt coefficients across ``cut`` | rest, descending."""
    rho = reduced_density_matrix(s, cut)
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ContractViolation("reduced density matrix does not have unit trace")
    return [float(v) for v in jacobi_eigenvalues(rho)]


def von_neumann_entropy(squares: Sequence[float]) -> float:
    """-sum(lambda * log2(lambda)) in bits, with 0 log 0 = 0."""
    total = 0.0
    for lam in squares:
        if lam > 0.0:
            total -= lam * math.log2(lam)
    return total


def cascade_pairs(y: int, c: int) -> int:
    """Pairs left after scanning y against the expansion of c (stop rule).

    Positions i = k-1 .. 1 are inspected from the left; the scan stops at
    the first i with y_i = 0 and x_i = 1, leaving i pairs.  With no stop,
    no pairs remain.
    """
    k = c.bit_length()
    for i in range(k - 1, 0, -1):
        if not (y >> i) & 1 and (c >> i) & 1:
            return i
    return 0


def brute_force_cascade(c: int) -> dict[int, Fraction]:
    """Exact distribution of the pair count over uniform y in 0..c-1."""
    if c < 1:
        raise ContractViolation("cascade needs C >= 1")
    counts: dict[int, int] = {}
    for y in range(c):
        r = cascade_pairs(y, c)
        counts[r] = counts.get(r, 0) + 1
    return {r: Fraction(cnt, c) for r, cnt in sorted(counts.items())}


def distribution_mean(dist: dict[int, Fraction]) -> Fraction:
    return sum((Fraction(r) * p for r, p in dist.items()), Fraction(0))


def ideal_epr_state(r: int, alice: str = "A", bob: str = "B") -> StateVector:
    """2^(-r/2) sum_y |y>_A |y>_B with Alice's r qubits first."""
    if r < 0:
        raise ContractViolation("r must be >= 0")
    if r > MAX_EPR_PAIRS:
        raise EngineSizeError(f"{r} EPR pairs exceed the {MAX_EPR_PAIRS}-pair limit")
    dim = 1 << r
    amps = np.zeros(dim * dim, dtype=np.complex128)
    amps[np.arange(dim) * dim + np.arange(dim)] = 1.0 / math.sqrt(dim)
    labels = [f"{alice}{i}" for i in range(1, r + 1)] + [f"{bob}{i}" for i in range(1, r + 1)]
    return StateVector(amps, labels)
