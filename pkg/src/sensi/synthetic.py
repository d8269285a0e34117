"""Synthetic panels and input files with known structure, for tests and demos.

Run ``python -m sensi.synthetic OUT_DIR`` to write a complete set of input
CSVs plus a config file for the CLI.
"""

from __future__ import annotations

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from sensi.ages import AGE_GROUPS
from sensi.dataset import sin_weekly_series
from sensi.outputs import atomic_write_text, write_csv
from sensi.panel import PanelDataset

# per-SD effect of each age share on the county case level, ordered like the
# shipped ground-truth infection rates (18-29 highest ... 0-4 lowest)
DEFAULT_EFFECTS = {
    "0-4": 1.0,
    "5-17": 3.0,
    "18-29": 8.0,
    "30-39": 7.0,
    "40-49": 6.0,
    "50-64": 5.0,
    "65-74": 2.0,
    "75+": 4.0,
}


def fips_codes(n: int) -> list[str]:
    return [f"{51000 + 2 * i + 1:05d}" for i in range(n)]


def vaccination_ramp(n_counties: int, dates, rng) -> np.ndarray:
    days = np.arange(len(dates))
    onset = rng.uniform(0.45, 0.6, n_counties)[:, None] * len(dates)
    ceiling = rng.uniform(0.4, 0.8, n_counties)[:, None]
    return ceiling / (1.0 + np.exp(-(days[None, :] - onset) / (0.05 * len(dates) + 1)))


def ar1_panel(n_counties=20, n_days=250, phi=0.6, static_effect=10.0, level=50.0, noise=4.0,
              weekly=3.0, start=dt.date(2021, 1, 4), seed=0) -> PanelDataset:
    """AR(1) around a county mean that depends linearly on one static share.

    ``y[c, t] = mu_c + phi * (y[c, t-1] - mu_c) + weekly * sin_weekly(t) + eps``
    with ``mu_c = level + static_effect * (s_c - mean(s)) / sd(s)``.
    """
    rng = np.random.default_rng(seed)
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + n_days)
    share = rng.uniform(0.08, 0.2, n_counties)
    z = (share - share.mean()) / share.std()
    mu = level + static_effect * z
    sinw = sin_weekly_series(dates)
    y = np.empty((n_counties, n_days))
    y[:, 0] = mu + rng.normal(0, noise / np.sqrt(1 - phi**2), n_counties)
    for t in range(1, n_days):
        y[:, t] = mu + phi * (y[:, t - 1] - mu) + rng.normal(0, noise, n_counties)
    y = y + weekly * sinw[None, :]
    vacc = vaccination_ramp(n_counties, dates, rng)
    return PanelDataset(
        counties=tuple(fips_codes(n_counties)),
        dates=dates,
        target=y,
        dynamic=np.stack([vacc, np.broadcast_to(sinw, vacc.shape)], axis=-1),
        static=share[:, None],
        static_names=("share",),
    )


def constant_panel(n_counties=5, n_days=80, value=10.0, start=dt.date(2021, 1, 4), seed=0) -> PanelDataset:
    rng = np.random.default_rng(seed)
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + n_days)
    vacc = vaccination_ramp(n_counties, dates, rng)
    sinw = np.broadcast_to(sin_weekly_series(dates), vacc.shape)
    return PanelDataset(
        counties=tuple(fips_codes(n_counties)),
        dates=dates,
        target=np.full((n_counties, n_days), value),
        dynamic=np.stack([vacc, sinw], axis=-1),
        static=rng.uniform(0.05, 0.2, (n_counties, 1)),
    )


def equicorrelated_shares(n_counties: int, n_groups: int, spread: float, rng) -> np.ndarray:
    """Shares around 1/n_groups whose sample correlations are all exactly -1/(n_groups - 1).

    Shares must sum to one, so some negative correlation is unavoidable; making
    it identical for every pair means a regression on any single share sees
    the same confounding, and marginal slopes keep the order of the effects.
    """
    x = rng.standard_normal((n_counties, n_groups))
    x -= x.mean(axis=0)
    x -= x.mean(axis=1, keepdims=True)
    vals, vecs = np.linalg.eigh(x.T @ x / n_counties)
    keep = vals > 1e-10 * vals.max()
    whiten = vecs[:, keep] @ np.diag(vals[keep] ** -0.5) @ vecs[:, keep].T
    x = x @ whiten
    shares = 1.0 / n_groups + spread * x
    if (shares <= 0).any():
        raise ValueError("spread too large: a generated share is not positive")
    return shares


def age_structured_inputs(n_counties=60, start=dt.date(2021, 1, 4), n_days=160, effects=None,
                          level=60.0, phi=0.5, noise=6.0, weekly=4.0, spread=0.015, seed=0):
    """County inputs whose daily case level depends on all eight age shares.

    Returns ``(cases_rows, population_rows, vaccination_rows, truth)`` where
    the rows match the CSV schemas and ``truth`` maps each age group to its
    realized per-SD effect on the county mean level.
    """
    effects = dict(DEFAULT_EFFECTS if effects is None else effects)
    rng = np.random.default_rng(seed)
    counties = fips_codes(n_counties)
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + n_days)
    shares = equicorrelated_shares(n_counties, len(AGE_GROUPS), spread, rng)
    z = (shares - shares.mean(axis=0)) / shares.std(axis=0)
    beta = np.array([effects[g] for g in AGE_GROUPS])
    mu = level + z @ beta
    sinw = sin_weekly_series(dates)
    y = np.empty((n_counties, n_days))
    y[:, 0] = mu + rng.normal(0, noise, n_counties)
    for t in range(1, n_days):
        y[:, t] = mu + phi * (y[:, t - 1] - mu) + rng.normal(0, noise, n_counties)
    daily = np.clip(np.round(y + weekly * sinw[None, :]), 0, None)
    cumulative = np.cumsum(daily, axis=1)

    totals = rng.integers(20_000, 400_000, n_counties)
    counts = np.round(shares * totals[:, None]).astype(np.int64)
    vacc = vaccination_ramp(n_counties, dates, rng)

    date_str = [str(d) for d in dates]
    cases_rows = [
        (fips, date_str[t], int(cumulative[c, t])) for c, fips in enumerate(counties) for t in range(n_days)
    ]
    population_rows = [
        (fips, g, int(counts[c, j])) for c, fips in enumerate(counties) for j, g in enumerate(AGE_GROUPS)
    ]
    # weekly vaccination reports starting once coverage passes 1%
    vaccination_rows = [
        (fips, date_str[t], round(float(vacc[c, t]), 6))
        for c, fips in enumerate(counties)
        for t in range(0, n_days, 7)
        if vacc[c, t] >= 0.01
    ]
    return cases_rows, population_rows, vaccination_rows, effects


def age_case_rows(cases_rows, effects=None):
    """Daily statewide cases split across age groups in proportion to their effects."""
    effects = dict(DEFAULT_EFFECTS if effects is None else effects)
    weights = np.array([effects[g] for g in AGE_GROUPS], dtype=float)
    weights = weights / weights.sum()
    totals: dict[str, int] = {}
    previous: dict[str, int] = {}
    for fips, date, cumulative in cases_rows:
        totals[date] = totals.get(date, 0) + cumulative - previous.get(fips, 0)
        previous[fips] = cumulative
    return [(date, g, int(round(total * w))) for date, total in totals.items() for g, w in zip(AGE_GROUPS, weights)]


def write_inputs(directory, n_counties=60, n_days=160, start=dt.date(2021, 1, 4), seed=0, effects=None,
                 val_days=15, test_days=15) -> Path:
    """Write cases/population/vaccination/age-case CSVs and a matching ``sensi.cfg``."""
    directory = Path(directory)
    cases, pop, vacc, effects = age_structured_inputs(n_counties, start, n_days, effects=effects, seed=seed)
    write_csv(directory / "cases.csv", ["fips", "date", "cumulative_cases"], cases)
    write_csv(directory / "population.csv", ["fips", "age_group", "population"], pop)
    write_csv(directory / "vaccination.csv", ["fips", "date", "fully_vaccinated_fraction"], vacc)
    write_csv(directory / "age_cases.csv", ["date", "age_group", "cases"], age_case_rows(cases, effects))
    end = start + dt.timedelta(days=n_days - 1)
    test_start = end - dt.timedelta(days=test_days - 1)
    val_end = test_start - dt.timedelta(days=1)
    val_start = val_end - dt.timedelta(days=val_days - 1)
    train_end = val_start - dt.timedelta(days=1)
    cfg = f"""\
# synthetic run
cases = cases.csv
population = population.csv
vaccination = vaccination.csv
age_cases = age_cases.csv
output_dir = out
train_start = {start}
train_end = {train_end}
val_start = {val_start}
val_end = {val_end}
test_start = {test_start}
test_end = {end}
seed = {seed}
"""
    atomic_write_text(directory / "sensi.cfg", cfg)
    return directory


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir")
    parser.add_argument("--counties", type=int, default=60)
    parser.add_argument("--days", type=int, default=160)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    path = write_inputs(args.out_dir, n_counties=args.counties, n_days=args.days, seed=args.seed)
    print(path / "sensi.cfg")


if __name__ == "__main__":
    main()
