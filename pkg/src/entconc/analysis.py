"""Closed-form yields and entropy bounds for entanglement concentration."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from .combinat import binomial, binomial_expansion
from .errors import ContractViolation


def binary_entropy(p: float) -> float:
    """H(p) = p log2(1/p) + (1-p) log2(1/(1-p)), in bits."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation(f"probability {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    if p == 0.5:
        return 1.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha = {alpha} must lie in [0, 1]")


def prob_j(alpha: float, n: int, j: int) -> float:
    """Probability that the Hamming-weight measurement returns j."""
    _check_alpha(alpha)
    a2 = alpha * alpha
    return a2 ** (n - j) * (1.0 - a2) ** j * binomial(n, j)


def entropy_ceiling(alpha: float, n: int) -> float:
    """n H(alpha^2): entropy of entanglement of n copies."""
    _check_alpha(alpha)
    return n * binary_entropy(alpha * alpha)


def expected_concentrated_entropy(alpha: float, n: int) -> float:
    """Expected entropy of entanglement left after the weight measurement.

    sum_{j=1}^{n-1} P(j) log2 C(n, j); the j = 0 and j = n branches carry none.
    """
    if n < 2:
        raise ContractViolation("needs n >= 2")
    return sum(prob_j(alpha, n, j) * math.log2(binomial(n, j)) for j in range(1, n))


def concentration_loss(alpha: float, n: int) -> float:
    return entropy_ceiling(alpha, n) - expected_concentrated_entropy(alpha, n)


def expected_pairs_given_j(n: int, j: int) -> Fraction:
    """Exact mean number of pairs from the cascade once j is known.

    Each set bit x_i of C(n, j) owns 2^i of the C(n, j) ranked strings and
    those strings yield i pairs.
    """
    exp = binomial_expansion(n, j)
    return sum((Fraction(i << i, exp.value) for i in range(1, exp.k) if exp.bit(i)),
               Fraction(0))


def lower_bound_given_j(n: int, j: int) -> int:
    """floor(log2 C(n, j)) - 1 = k - 2."""
    return binomial_expansion(n, j).k - 2


def expected_pairs_total(alpha: float, n: int) -> float:
    """sum_j P(j) E[pairs | j]."""
    return sum(prob_j(alpha, n, j) * float(expected_pairs_given_j(n, j))
               for j in range(n + 1))


def lower_bound_total(alpha: float, n: int, clamp: bool = False) -> float:
    """sum_{j=0}^{n} P(j) (floor(log2 C(n, j)) - 1).

    The j = 0 and j = n terms are -1 times their probability; ``clamp``
    floors each term at zero since realised pair counts are nonnegative.
    """
    total = 0.0
    for j in range(n + 1):
        b = lower_bound_given_j(n, j)
        if clamp:
            b = max(b, 0)
        total += prob_j(alpha, n, j) * b
    return total


# -- yield tables ----------------------------------------------------------------

CSV_COLUMNS = ("j", "prob_j", "k", "expected_pairs_exact", "lower_bound_k_minus_2",
               "empirical_mean", "trials")


@dataclass(frozen=True)
class YieldRow:
    j: int
    prob_j: float
    k: int
    expected_pairs_exact: Fraction
    lower_bound_k_minus_2: int
    empirical_mean: Optional[float]
    trials: int


@dataclass(frozen=True)
class YieldTable:
    """Analytic and empirical pair yields per measured weight j.

    ``histogram`` counts trials by the number of pairs produced; totals are
    derived from the rows and the histogram, so a table parsed back from CSV
    or JSON compares equal to the one written.
    """

    alpha: float
    n: int
    rows: tuple[YieldRow, ...]
    histogram: dict = field(default_factory=dict)
    engine: str = ""
    base_seed: Optional[int] = None
    min_fidelity: Optional[float] = None

    @classmethod
    def analytic(cls, alpha: float, n: int) -> "YieldTable":
        return cls.from_trials(alpha, n, "", None, [], None)

    @classmethod
    def from_trials(cls, alpha, n, engine, base_seed, results, min_fidelity) -> "YieldTable":
        """Build from ``results``, a list of (j, pairs) per trial."""
        sums = [0] * (n + 1)
        counts = [0] * (n + 1)
        histogram: dict[int, int] = {}
        for j, pairs in results:
            sums[j] += pairs
            counts[j] += 1
            histogram[pairs] = histogram.get(pairs, 0) + 1
        rows = []
        for j in range(n + 1):
            exp = binomial_expansion(n, j)
            rows.append(YieldRow(
                j=j, prob_j=prob_j(alpha, n, j), k=exp.k,
                expected_pairs_exact=expected_pairs_given_j(n, j),
                lower_bound_k_minus_2=exp.k - 2,
                empirical_mean=sums[j] / counts[j] if counts[j] else None,
                trials=counts[j]))
        return cls(alpha, n, tuple(rows), dict(sorted(histogram.items())),
                   engine, base_seed, min_fidelity)

    # totals
    @property
    def trials(self) -> int:
        return sum(self.histogram.values())

    @property
    def prob_sum(self) -> float:
        return math.fsum(r.prob_j for r in self.rows)

    @property
    def analytic_expected_pairs(self) -> float:
        return math.fsum(r.prob_j * float(r.expected_pairs_exact) for r in self.rows)

    @property
    def empirical_mean(self) -> Optional[float]:
        if not self.trials:
            return None
        return sum(p * c for p, c in self.histogram.items()) / self.trials

    @property
    def empirical_variance(self) -> Optional[float]:
        if self.trials < 2:
            return None
        mean = self.empirical_mean
        ss = sum(c * (p - mean) ** 2 for p, c in self.histogram.items())
        return ss / (self.trials - 1)

    @property
    def entropy_ceiling(self) -> float:
        return entropy_ceiling(self.alpha, self.n)

    @property
    def concentrated_entropy(self) -> float:
        return expected_concentrated_entropy(self.alpha, self.n) if self.n >= 2 else 0.0

    @property
    def lower_bound(self) -> float:
        return lower_bound_total(self.alpha, self.n)

    @property
    def lower_bound_clamped(self) -> float:
        return lower_bound_total(self.alpha, self.n, clamp=True)

    # serialisation
    def _meta(self) -> dict:
        return {"alpha": self.alpha, "n": self.n, "engine": self.engine,
                "base_seed": self.base_seed, "min_fidelity": self.min_fidelity,
                "histogram": {str(p): c for p, c in self.histogram.items()}}

    @classmethod
    def _from_meta(cls, meta: dict, rows) -> "YieldTable":
        return cls(meta["alpha"], meta["n"], tuple(rows),
                   {int(p): c for p, c in meta["histogram"].items()},
                   meta["engine"], meta["base_seed"], meta["min_fidelity"])

    def to_csv(self) -> str:
        """CSV rows with one leading ``#`` line of JSON metadata."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self._meta(), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.j, repr(r.prob_j), r.k, str(r.expected_pairs_exact),
                        r.lower_bound_k_minus_2,
                        "" if r.empirical_mean is None else repr(r.empirical_mean),
                        r.trials])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "YieldTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ValueError("missing metadata line")
        meta = json.loads(lines[0][2:])
        reader = csv.DictReader(lines[1:])
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
        rows = [YieldRow(int(d["j"]), float(d["prob_j"]), int(d["k"]),
                         Fraction(d["expected_pairs_exact"]), int(d["lower_bound_k_minus_2"]),
                         float(d["empirical_mean"]) if d["empirical_mean"] else None,
                         int(d["trials"]))
                for d in reader]
        return cls._from_meta(meta, rows)

    def to_json(self) -> str:
        doc = self._meta()
        doc["rows"] = [{**asdict(r), "expected_pairs_exact": str(r.expected_pairs_exact)}
                       for r in self.rows]
        doc["totals"] = {
            "trials": self.trials,
            "analytic_expected_pairs": self.analytic_expected_pairs,
            "empirical_mean": self.empirical_mean,
            "empirical_variance": self.empirical_variance,
            "entropy_ceiling": self.entropy_ceiling,
            "concentrated_entropy": self.concentrated_entropy,
            "lower_bound": self.lower_bound,
            "lower_bound_clamped": self.lower_bound_clamped,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "YieldTable":
        doc = json.loads(text)
        rows = [YieldRow(**{**r, "expected_pairs_exact": Fraction(r["expected_pairs_exact"])})
                for r in doc["rows"]]
        return cls._from_meta(doc, rows)
