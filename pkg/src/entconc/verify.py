"""Exhaustive and oracle-backed consistency checks, grouped by scope.

Each check returns ``(passed, detail)``; :func:`run_checks` yields one
result per check so callers can print a line as each one finishes.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Iterator

import numpy as np

from . import analysis, circuits, combinat, oracle, protocol
from .statevec import BitString

Check = Callable[[], tuple[bool, str]]


def _weight_strings(n: int, j: int) -> list[BitString]:
    return sorted(BitString(bits) for bits in itertools.product((0, 1), repeat=n)
                  if sum(bits) == j)


def check_rank_bijection(max_n: int = 12):
    for n in range(1, max_n + 1):
        for j in range(n + 1):
            strings = [combinat.unrank(y, n, j) for y in range(combinat.binomial(n, j))]
            if strings != _weight_strings(n, j):
                return False, f"unrank(., {n}, {j}) is not the ordered weight-{j} list"
            if any(combinat.rank(x, j) != y for y, x in enumerate(strings)):
                return False, f"rank does not invert unrank for n={n}, j={j}"
    return True, f"rank/unrank bijective and order-preserving for n <= {max_n}"


def check_pascal(max_n: int = 30):
    for n in range(2, max_n + 1):
        for j in range(1, n):
            if combinat.binomial(n, j) != combinat.binomial(n - 1, j) + combinat.binomial(n - 1, j - 1):
                return False, f"Pascal identity fails at ({n}, {j})"
    return True, f"Pascal identity for n <= {max_n}"


def check_hamming_network(max_n: int = 8):
    for n in range(1, max_n + 1):
        net = circuits.build_hamming_network(n)
        xs = np.arange(1 << n)
        out = net.run_registers({"data": xs})
        weights = np.array([combinat.hamming_weight(BitString.from_int(int(x), n)) for x in xs])
        if not (np.array_equal(out["data"], xs) and np.array_equal(out["weight"], weights)):
            return False, f"Hamming network wrong for n={n}"
    return True, f"Hamming network exact on all inputs, n <= {max_n}"


def check_perm_network(max_n: int = 8):
    for n in range(1, max_n + 1):
        for j in range(n + 1):
            c = combinat.binomial(n, j)
            ys = np.arange(c)
            out = circuits.build_perm_network(n, j).run_registers({"y": ys})
            expect = [combinat.unrank(int(y), n, j).value for y in ys]
            if not np.array_equal(out["out"], expect):
                return False, f"T/S unrank network differs from unrank at n={n}, j={j}"
            if np.any(out["y"]) or np.any(out["n"]) or np.any(out["j"]):
                return False, f"T/S network leaves work registers dirty at n={n}, j={j}"
            back = circuits.build_perm_network(n, j, circuits.FORWARD).run_registers(
                {"out": out["out"]})
            if not np.array_equal(back["y"], ys):
                return False, f"forward network does not invert unrank at n={n}, j={j}"
    return True, f"T/S network equals unrank and inverts for n <= {max_n}"


def check_cascade_reversible(max_k: int = 3):
    for k in range(1, max_k + 1):
        net = circuits.build_cascade_network(k)
        if net.width > 14:
            break
        perm = net.basis_permutation()
        inv = net.inverse().basis_permutation()
        if not np.array_equal(inv[perm], np.arange(perm.size)):
            return False, f"cascade k={k} not undone by its inverse"
    return True, "cascade networks are reversible bijections"


def check_cascade_form(max_n: int = 8):
    for n in range(1, max_n + 1):
        p = protocol.PairParams(math.sqrt(0.5), n)
        for j in range(n + 1):
            cs = protocol.pre_measurement_state(p, j, protocol.MIRRORED)
            if np.abs(cs.state.amps - displayed_cascade_sum(n, j)).max() > 1e-10:
                return False, f"pre-measurement state differs at n={n}, j={j}"
    return True, f"pre-measurement state matches the branch sum for n <= {max_n}"


def displayed_cascade_sum(n: int, j: int) -> np.ndarray:
    """Amplitudes of sum_i x_i sum_{y in branch i} |y>|i>, normalised.

    Branch i (for each set bit x_i) holds the y that share the bits of C(n, j)
    above position i and have y_i = 0; the ancilla reads i.  Layout is
    (y, m) with y on k qubits, matching the mirrored cascade state.
    """
    exp = combinat.binomial_expansion(n, j)
    k, c = exp.k, exp.value
    w = circuits.cascade_ancilla_width(k)
    amps = np.zeros(1 << (k + w))
    for i in range(k - 1, -1, -1):
        if not exp.bit(i):
            continue
        prefix = (c >> (i + 1)) << (i + 1)
        for y in range(prefix, prefix + (1 << i)):
            amps[(y << w) | i] = 1.0 / math.sqrt(c)
    return amps


def check_fidelity(seeds: int = 50):
    worst = 1.0
    for engine, max_n in ((protocol.FULL, 6), (protocol.MIRRORED, 8)):
        for a2 in (0.25, 0.5, 0.75):
            for n in range(1, max_n + 1):
                p = protocol.PairParams(math.sqrt(a2), n)
                for seed in range(seeds):
                    worst = min(worst, protocol.run_protocol(p, seed, engine).fidelity_vs_ideal)
    return worst >= 1 - 1e-9, f"minimum fidelity {worst:.15f} over the seed grid"


def check_engine_equivalence(max_n: int = 5):
    for n in range(1, max_n + 1):
        p = protocol.PairParams(math.sqrt(0.3), n)
        full = protocol.outcome_distribution(p, protocol.FULL)
        mirr = protocol.outcome_distribution(p, protocol.MIRRORED)
        keys = set(full) | set(mirr)
        if max(abs(full.get(o, 0.0) - mirr.get(o, 0.0)) for o in keys) > 1e-10:
            return False, f"engines disagree at n={n}"
    return True, f"full and mirrored outcome tables agree for n <= {max_n}"


def check_yield_formula(max_n: int = 16):
    for n in range(1, max_n + 1):
        for j in range(n + 1):
            c = combinat.binomial(n, j)
            exact = analysis.expected_pairs_given_j(n, j)
            if exact != oracle.distribution_mean(oracle.brute_force_cascade(c)):
                return False, f"formula differs from brute force at n={n}, j={j}"
            if c > 1 and exact < analysis.lower_bound_given_j(n, j):
                return False, f"yield below k-2 at n={n}, j={j}"
    return True, f"E[pairs|j] equals brute force and is >= k-2 for n <= {max_n}"


def check_entropy_bounds():
    for a2 in (0.1, 0.25, 0.5, 0.75, 0.9):
        alpha = math.sqrt(a2)
        for n in range(2, 21):
            ceiling = analysis.entropy_ceiling(alpha, n)
            conc = analysis.expected_concentrated_entropy(alpha, n)
            total = analysis.expected_pairs_total(alpha, n)
            if not (total <= conc + 1e-12 and conc <= ceiling + 1e-12):
                return False, f"ordering yield <= concentrated entropy <= nH fails at a^2={a2}, n={n}"
    return True, "expected pairs <= concentrated entropy <= nH(a^2)"


SCOPES: dict[str, list[tuple[str, Check]]] = {
    "combinat": [("rank/unrank bijection", check_rank_bijection),
                 ("Pascal identity", check_pascal)],
    "circuits": [("Hamming network", check_hamming_network),
                 ("T/S permutation network", check_perm_network),
                 ("cascade reversibility", check_cascade_reversible),
                 ("cascade pre-measurement form", check_cascade_form)],
    "protocol": [("perfect EPR output", check_fidelity),
                 ("engine equivalence", check_engine_equivalence)],
    "analysis": [("conditional yield vs brute force", check_yield_formula),
                 ("entropy ordering", check_entropy_bounds)],
}


def run_checks(scope: str = "all") -> Iterator[tuple[str, str, bool, str]]:
    scopes = list(SCOPES) if scope == "all" else [scope]
    for sc in scopes:
        for name, check in SCOPES[sc]:
            try:
                passed, detail = check()
            except Exception as exc:  # reported as a failed check
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            yield sc, name, passed, detail
