"""Exact combinatorics for fixed-weight binary strings.

Strings of length n and Hamming weight j are ordered as increasing binary
integers.  ``rank`` maps such a string to its position 0..C(n, j)-1 and
``unrank`` inverts it through the prefix recurrence

    [y]_{n,j} = 0 [y]_{n-1,j}                 if y < C(n-1, j)
              = 1 [y - C(n-1, j)]_{n-1,j-1}   otherwise
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import ContractViolation
from .statevec import BitString

MAX_N = 60
_INT64_MAX = (1 << 63) - 1


@lru_cache(maxsize=None)
def binomial(n: int, j: int) -> int:
    """Exact C(n, j) by the multiplicative formula with exact division."""
    if n < 0 or j < 0 or j > n:
        raise ContractViolation(f"binomial({n}, {j}) needs 0 <= j <= n")
    if n > MAX_N:
        raise OverflowError(f"binomial with n = {n} exceeds the supported n <= {MAX_N}")
    j = min(j, n - j)
    c = 1
    for i in range(1, j + 1):
        c = c * (n - j + i) // i
    if c > _INT64_MAX:
        raise OverflowError(f"C({n}, {j}) does not fit in 64 bits")
    return c


def binomial_or_zero(n: int, j: int) -> int:
    """C(n, j), extended by zero outside 0 <= j <= n."""
    if n < 0 or j < 0 or j > n:
        return 0
    return binomial(n, j)


def hamming_weight(x: BitString | str) -> int:
    if isinstance(x, str):
        x = BitString.from_str(x)
    return sum(x.bits)


def unrank(y: int, n: int, j: int) -> BitString:
    """The y-th smallest n-bit string of weight j."""
    total = binomial(n, j)
    if not 0 <= y < total:
        raise ContractViolation(f"rank {y} outside 0..{total - 1} for n={n}, j={j}")
    bits = []
    for m in range(n, 0, -1):
        zeros_first = binomial_or_zero(m - 1, j)
        if y < zeros_first:
            bits.append(0)
        else:
            bits.append(1)
            y -= zeros_first
            j -= 1
    return BitString(tuple(bits))


def rank(x: BitString | str, j: int) -> int:
    """Position of ``x`` among the weight-j strings of its length."""
    if isinstance(x, str):
        x = BitString.from_str(x)
    if hamming_weight(x) != j:
        raise ContractViolation(f"{x} has weight {hamming_weight(x)}, not {j}")
    r = 0
    remaining = j
    n = x.width
    for i, b in enumerate(x.bits):
        if b:
            r += binomial_or_zero(n - i - 1, remaining)
            remaining -= 1
    return r


@dataclass(frozen=True)
class BinomialExpansion:
    n: int
    j: int
    value: int
    k: int
    bits: BitString

    def bit(self, i: int) -> int:
        """Coefficient x_i of 2^i."""
        return self.bits[self.k - 1 - i]


def binomial_expansion(n: int, j: int) -> BinomialExpansion:
    c = binomial(n, j)
    k = c.bit_length()
    return BinomialExpansion(n, j, c, k, BitString.from_int(c, k))
