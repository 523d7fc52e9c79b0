import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import EPR_ALPHA
from entconc import analysis
from entconc.analysis import YieldTable
from entconc.errors import ContractViolation


def test_binary_entropy_values():
    assert analysis.binary_entropy(0.5) == 1.0
    assert analysis.binary_entropy(0.0) == 0.0 and analysis.binary_entropy(1.0) == 0.0
    assert analysis.binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-12)
    with pytest.raises(ContractViolation):
        analysis.binary_entropy(1.5)


@given(st.floats(0.0, 1.0))
def test_binary_entropy_symmetric_and_bounded(p):
    h = analysis.binary_entropy(p)
    assert 0.0 <= h <= 1.0
    assert h == pytest.approx(analysis.binary_entropy(1.0 - p), abs=1e-12)


def test_concentrated_entropy_example():
    expect = 2 * (1 / 8) * 3 * math.log2(3)
    assert analysis.expected_concentrated_entropy(EPR_ALPHA, 3) == pytest.approx(expect, abs=1e-12)
    assert expect == pytest.approx(1.188722, abs=1e-6)
    assert analysis.expected_concentrated_entropy(1.0, 6) == 0.0
    assert analysis.expected_concentrated_entropy(0.999999, 6) < 1e-4
    with pytest.raises(ContractViolation):
        analysis.expected_concentrated_entropy(0.5, 1)


def test_concentration_loss():
    loss = analysis.concentration_loss(EPR_ALPHA, 3)
    assert loss == pytest.approx(3 - 1.188722, abs=1e-6)


@pytest.mark.parametrize("n,j,value", [
    (3, 1, Fraction(2, 3)),
    (5, 2, Fraction(13, 5)),
    (4, 1, Fraction(2)),      # C = 4 exactly
    (8, 1, Fraction(3)),      # C = 8 exactly
    (6, 0, Fraction(0)),
])
def test_expected_pairs_given_j(n, j, value):
    assert analysis.expected_pairs_given_j(n, j) == value


def test_lower_bound_per_j():
    assert analysis.lower_bound_given_j(5, 2) == 2
    assert analysis.lower_bound_given_j(5, 0) == -1


def test_expected_pairs_total_example():
    assert analysis.expected_pairs_total(EPR_ALPHA, 3) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("a2", [0.05, 0.25, 0.5, 0.75, 0.95])
@pytest.mark.parametrize("n", [2, 3, 5, 8, 13, 20])
def test_total_sits_between_bounds(a2, n):
    alpha = math.sqrt(a2)
    total = analysis.expected_pairs_total(alpha, n)
    assert total >= analysis.lower_bound_total(alpha, n) - 1e-12
    assert total >= analysis.lower_bound_total(alpha, n, clamp=True) - 1e-12
    assert total <= analysis.expected_concentrated_entropy(alpha, n) + 1e-12
    assert analysis.expected_concentrated_entropy(alpha, n) <= analysis.entropy_ceiling(alpha, n) + 1e-12


def test_yield_per_pair_grows_toward_one():
    ratios = [analysis.expected_pairs_total(EPR_ALPHA, n) / n for n in (4, 8, 12, 16, 20)]
    assert all(a <= b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1


def _sample_table():
    results = [(1, 1), (2, 1), (1, 0), (0, 0), (2, 1), (3, 0)]
    return YieldTable.from_trials(0.6, 3, "mirrored", 42, results, 0.9999999999999998)


def test_table_totals():
    t = _sample_table()
    assert t.trials == 6
    assert t.empirical_mean == pytest.approx(0.5)
    assert t.rows[2].empirical_mean == 1.0 and t.rows[2].trials == 2
    assert t.prob_sum == pytest.approx(1.0, abs=1e-10)
    assert t.analytic_expected_pairs <= t.entropy_ceiling + 1e-9
    assert YieldTable.analytic(0.6, 3).trials == 0


def test_csv_roundtrip():
    t = _sample_table()
    text = t.to_csv()
    assert text.splitlines()[1] == ",".join(analysis.CSV_COLUMNS)
    assert YieldTable.from_csv(text) == t
    assert YieldTable.from_csv(text).to_csv() == text


def test_json_roundtrip():
    t = _sample_table()
    assert YieldTable.from_json(t.to_json()) == t
    analytic = YieldTable.analytic(EPR_ALPHA, 5)
    assert YieldTable.from_json(analytic.to_json()) == analytic
