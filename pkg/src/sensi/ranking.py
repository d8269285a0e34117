"""Infection-rate ground truth, rank assignment and rank comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from sensi.errors import DataValidationError


def infection_rates(gt) -> dict[str, float]:
    """Percent of each group's population with a reported case (unrounded)."""
    out = {}
    for g, cases, pop in zip(gt.groups, gt.cases, gt.population):
        if not pop > 0:
            raise DataValidationError(f"population of {g} must be positive")
        out[g] = 100.0 * float(cases) / float(pop)
    return out


def rank_descending(values):
    """Rank 1 for the largest value; tied values share the mean of their positions.

    Accepts a mapping (returns a dict with the same keys) or a sequence
    (returns an array).
    """
    if hasattr(values, "items"):
        keys = list(values)
        ranks = rank_descending(np.array([values[k] for k in keys], dtype=float))
        return {k: float(r) for k, r in zip(keys, ranks)}
    x = np.asarray(values, dtype=float)
    if np.isnan(x).any():
        raise DataValidationError("cannot rank NaN values")
    return stats.rankdata(-x, method="average")


def average_rank_over_deltas(scaled, groups=None) -> dict[str, float]:
    """Rank groups within each delta column, then average over deltas.

    ``scaled`` is a [groups x deltas] array (with ``groups`` naming the rows)
    or a MorrisMatrix.
    """
    if groups is None:
        groups, scaled = scaled.groups, scaled.scaled
    m = np.asarray(scaled, dtype=float)
    if m.ndim != 2 or m.shape[0] != len(groups) or m.shape[1] == 0:
        raise DataValidationError(f"expected a [{len(groups)} x deltas] matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataValidationError("Morris matrix has missing or non-finite entries")
    per_delta = np.column_stack([rank_descending(m[:, j]) for j in range(m.shape[1])])
    return {g: float(r) for g, r in zip(groups, per_delta.mean(axis=1))}


def rank_difference(first: dict, second: dict) -> dict[str, float]:
    if set(first) != set(second):
        raise DataValidationError(
            f"rank tables cover different groups: {sorted(set(first) ^ set(second))}"
        )
    return {g: abs(float(first[g]) - float(second[g])) for g in first}


def spearman(first: dict, second: dict) -> float:
    keys = list(first)
    rho = stats.spearmanr([first[k] for k in keys], [second[k] for k in keys]).statistic
    return float(rho)


def round_half(x: float) -> float:
    return float(np.round(2.0 * x) / 2.0)


@dataclass(frozen=True)
class RankRow:
    age_group: str
    infection_rate: float
    infection_rank: float
    avg_morris_rank: float
    difference: float


def rank_table(rates: dict[str, float], morris_ranks: dict[str, float], groups=None) -> list[RankRow]:
    infection_ranks = rank_descending(rates)
    diff = rank_difference(infection_ranks, morris_ranks)
    groups = list(rates) if groups is None else list(groups)
    return [RankRow(g, rates[g], infection_ranks[g], morris_ranks[g], diff[g]) for g in groups]
