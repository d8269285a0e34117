import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sensi.ages import AGE_GROUPS
from sensi.errors import DataValidationError
from sensi.ingestion import GroundTruthAgeTable
from sensi.ranking import (
    average_rank_over_deltas,
    infection_rates,
    rank_descending,
    rank_difference,
    rank_table,
    round_half,
    spearman,
)


def test_highest_value_gets_rank_one():
    assert rank_descending([1.0, 3.0, 2.0]).tolist() == [3, 1, 2]


def test_ties_share_mean_rank():
    assert rank_descending({"a": 5, "b": 2, "c": 2, "d": 1}) == {"a": 1, "b": 2.5, "c": 2.5, "d": 4}


def test_nan_rejected():
    with pytest.raises(DataValidationError):
        rank_descending([1.0, np.nan])


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=12))
def test_ranks_sum_to_triangular_number(values):
    r = rank_descending(values)
    n = len(values)
    assert r.sum() == pytest.approx(n * (n + 1) / 2)
    assert r.min() >= 1 and r.max() <= n


def test_average_rank_over_deltas():
    scaled = np.array([[3.0, 1.0], [2.0, 2.0], [1.0, 3.0]])
    assert average_rank_over_deltas(scaled, ("a", "b", "c")) == {"a": 2.0, "b": 2.0, "c": 2.0}
    with pytest.raises(DataValidationError):
        average_rank_over_deltas(np.array([[1.0, np.nan]]), ("a",))
    with pytest.raises(DataValidationError):
        average_rank_over_deltas(scaled, ("a", "b"))


def test_rank_difference_requires_same_groups():
    with pytest.raises(DataValidationError):
        rank_difference({"a": 1, "b": 2}, {"a": 1})


def test_identical_rankings_have_zero_difference():
    ranks = {g: float(i + 1) for i, g in enumerate(AGE_GROUPS)}
    assert set(rank_difference(ranks, ranks).values()) == {0.0}
    assert spearman(ranks, ranks) == pytest.approx(1.0)


def test_infection_rates_and_table():
    gt = GroundTruthAgeTable(("0-4", "5-17"), np.array([5.0, 30.0]), np.array([100.0, 200.0]))
    rates = infection_rates(gt)
    assert rates == {"0-4": 5.0, "5-17": 15.0}
    rows = rank_table(rates, {"0-4": 1.0, "5-17": 2.0})
    assert [(r.infection_rank, r.difference) for r in rows] == [(2.0, 1.0), (1.0, 1.0)]


def test_round_half():
    assert [round_half(x) for x in (3.2, 3.3, 3.76, 1.0)] == [3.0, 3.5, 4.0, 1.0]


def test_reversed_ranking_differences():
    ranks = {g: float(i + 1) for i, g in enumerate(AGE_GROUPS)}
    reversed_ = {g: float(8 - i) for i, g in enumerate(AGE_GROUPS)}
    diff = rank_difference(ranks, reversed_)
    assert [diff[g] for g in AGE_GROUPS] == [7, 5, 3, 1, 1, 3, 5, 7]
    assert diff == rank_difference(reversed_, ranks)


def test_constant_matrix_ties_everything():
    avg = average_rank_over_deltas(np.full((8, 20), 0.3), AGE_GROUPS)
    assert set(avg.values()) == {4.5}


@pytest.mark.parametrize("transform", [lambda x: 3 * x + 2, lambda x: x ** 3])
def test_increasing_transform_keeps_ranks(transform):
    values = np.array([0.4, -1.2, 2.5, 0.1, 3.3])
    assert rank_descending(transform(values)).tolist() == rank_descending(values).tolist()
