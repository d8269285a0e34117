"""CSV loaders for county cases, age-band population, vaccination and age-level ground truth.

File schemas (UTF-8, header row required):

* cases.csv -- ``fips,date,cumulative_cases``
* population.csv -- ``fips,age_group,population``
* vaccination.csv -- ``fips,date,fully_vaccinated_fraction``
* ground_truth_age.csv -- ``age_group,cases,population``
* age_cases.csv -- ``date,age_group,cases`` (case reports by age band, any
  reporting cadence; only used for the weekly plot data)
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from sensi.ages import AGE_GROUPS, age_index, is_age_group
from sensi.dataset import sin_weekly_series
from sensi.errors import DataValidationError, MissingInputError, ParseError
from sensi.panel import PanelDataset

log = logging.getLogger(__name__)

CASES_HEADER = ["fips", "date", "cumulative_cases"]
POPULATION_HEADER = ["fips", "age_group", "population"]
VACCINATION_HEADER = ["fips", "date", "fully_vaccinated_fraction"]
GROUND_TRUTH_HEADER = ["age_group", "cases", "population"]
AGE_CASES_HEADER = ["date", "age_group", "cases"]

_FIPS = re.compile(r"^\d{5}$")


@dataclass
class Diagnostics:
    """Counters and notes collected while cleaning inputs."""

    clamped_corrections: int = 0
    notes: list[str] = field(default_factory=list)

    def note(self, message: str):
        log.info(message)
        self.notes.append(message)

    def render(self) -> str:
        lines = [f"clamped_corrections={self.clamped_corrections}"]
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class CaseTable:
    """Gap-filled cumulative counts, [C, T] over a contiguous date range."""

    counties: tuple[str, ...]
    dates: np.ndarray
    cumulative: np.ndarray


@dataclass(frozen=True, eq=False)
class StaticTable:
    """Population share of each age band, [C, 8] in canonical band order."""

    counties: tuple[str, ...]
    shares: np.ndarray
    groups: tuple[str, ...] = AGE_GROUPS

    def column(self, group: str) -> np.ndarray:
        return self.shares[:, self.groups.index(group)]


@dataclass(frozen=True, eq=False)
class DynamicTable:
    """Sparse vaccination reports; ``dense`` applies the fill rule over any date range."""

    records: dict

    @property
    def counties(self) -> tuple[str, ...]:
        return tuple(sorted(self.records))

    def dense(self, counties, dates) -> np.ndarray:
        dates = np.asarray(dates, dtype="datetime64[D]")
        out = np.zeros((len(counties), len(dates)))
        for i, fips in enumerate(counties):
            if fips not in self.records:
                continue
            rep_dates, values = self.records[fips]
            # last report on or before each day; zero before the first report
            pos = np.searchsorted(rep_dates, dates, side="right") - 1
            have = pos >= 0
            out[i, have] = values[pos[have]]
        return out


@dataclass(frozen=True)
class GroundTruthAgeTable:
    groups: tuple[str, ...]
    cases: np.ndarray
    population: np.ndarray


def _read(path, header) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError("file is empty", path=path) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc})", path=path) from None
    cols = [c.strip() for c in df.columns]
    if cols != header:
        raise ParseError(f"header {','.join(cols)} does not match {','.join(header)}", path=path, row=1)
    df.columns = cols
    return df.apply(lambda s: s.str.strip())


def _row(i) -> int:
    # data row i (0-based) sits on file line i + 2
    return int(i) + 2


def _check_fips(df, path):
    bad = ~df["fips"].str.match(_FIPS) | (df["fips"] == "00000")
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise ParseError(f"malformed FIPS code {df['fips'].iloc[i]!r}", path=path, row=_row(i))


def _parse_dates(df, path) -> np.ndarray:
    parsed = pd.to_datetime(df["date"], format="%Y-%m-%d", errors="coerce")
    if parsed.isna().any():
        i = int(np.flatnonzero(parsed.isna().to_numpy())[0])
        raise ParseError(f"unparseable date {df['date'].iloc[i]!r}", path=path, row=_row(i))
    return parsed.to_numpy().astype("datetime64[D]")


def _parse_numbers(df, col, path, integer=False) -> np.ndarray:
    values = pd.to_numeric(df[col], errors="coerce")
    bad = values.isna() | ~np.isfinite(values)
    if integer:
        bad |= values != np.floor(values)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise ParseError(f"invalid {col} value {df[col].iloc[i]!r}", path=path, row=_row(i))
    return values.to_numpy(dtype=np.float64)


def _first_duplicate(df, keys, path):
    dup = df.duplicated(subset=keys, keep="first")
    if dup.any():
        i = int(np.flatnonzero(dup.to_numpy())[0])
        key = ", ".join(str(df[k].iloc[i]) for k in keys)
        raise ParseError(f"duplicate row for ({key})", path=path, row=_row(i))


def load_cases(path) -> CaseTable:
    df = _read(path, CASES_HEADER)
    if df.empty:
        raise ParseError("no data rows", path=path)
    _check_fips(df, path)
    dates = _parse_dates(df, path)
    cum = _parse_numbers(df, "cumulative_cases", path)
    neg = cum < 0
    if neg.any():
        i = int(np.flatnonzero(neg)[0])
        raise ParseError(f"negative cumulative count {df['cumulative_cases'].iloc[i]}", path=path, row=_row(i))
    _first_duplicate(df, ["fips", "date"], path)

    counties = tuple(sorted(df["fips"].unique()))
    all_dates = np.arange(dates.min(), dates.max() + 1)
    c_idx = np.searchsorted(np.array(counties), df["fips"].to_numpy())
    t_idx = (dates - all_dates[0]).astype(np.int64)
    grid = np.full((len(counties), len(all_dates)), np.nan)
    grid[c_idx, t_idx] = cum
    # gap fill: carry the last report forward, zero before the first one
    filled = pd.DataFrame(grid.T).ffill().fillna(0.0).to_numpy().T
    return CaseTable(counties=counties, dates=all_dates, cumulative=np.ascontiguousarray(filled))


def to_daily(cumulative, diagnostics: Diagnostics | None = None) -> np.ndarray:
    """Difference cumulative series into daily new cases along the last axis.

    ``daily[0] = cum[0]``. Drops in the cumulative series (reporting
    corrections) are clamped to zero and counted.
    """
    cum = cumulative.cumulative if isinstance(cumulative, CaseTable) else cumulative
    cum = np.asarray(cum, dtype=np.float64)
    diff = np.diff(cum, axis=-1, prepend=0.0)
    neg = diff < 0
    n_clamped = int(neg.sum())
    if n_clamped:
        log.info("clamped %d negative daily differences to zero", n_clamped)
        if diagnostics is not None:
            diagnostics.clamped_corrections += n_clamped
    return np.where(neg, 0.0, diff)


def load_static_population(path) -> StaticTable:
    df = _read(path, POPULATION_HEADER)
    if df.empty:
        raise ParseError("no data rows", path=path)
    _check_fips(df, path)
    unknown = ~df["age_group"].map(is_age_group)
    if unknown.any():
        i = int(np.flatnonzero(unknown.to_numpy())[0])
        raise ParseError(f"unknown age group {df['age_group'].iloc[i]!r}", path=path, row=_row(i))
    pop = _parse_numbers(df, "population", path)
    if (pop < 0).any():
        i = int(np.flatnonzero(pop < 0)[0])
        raise ParseError("negative population", path=path, row=_row(i))
    _first_duplicate(df, ["fips", "age_group"], path)

    counties = tuple(sorted(df["fips"].unique()))
    counts = np.full((len(counties), len(AGE_GROUPS)), np.nan)
    c_idx = np.searchsorted(np.array(counties), df["fips"].to_numpy())
    g_idx = df["age_group"].map(age_index).to_numpy()
    counts[c_idx, g_idx] = pop
    missing = np.isnan(counts)
    if missing.any():
        c, g = np.argwhere(missing)[0]
        raise DataValidationError(f"{path}: county {counties[c]} has no row for age group {AGE_GROUPS[g]}")
    totals = counts.sum(axis=1)
    if (totals <= 0).any():
        c = int(np.flatnonzero(totals <= 0)[0])
        raise DataValidationError(f"{path}: county {counties[c]} has total population 0")
    return StaticTable(counties=counties, shares=counts / totals[:, None])


def load_vaccination(path) -> DynamicTable:
    df = _read(path, VACCINATION_HEADER)
    if df.empty:
        return DynamicTable(records={})
    _check_fips(df, path)
    dates = _parse_dates(df, path)
    frac = _parse_numbers(df, "fully_vaccinated_fraction", path)
    bad = (frac < 0) | (frac > 1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ParseError(f"coverage {frac[i]} outside [0, 1]", path=path, row=_row(i))
    _first_duplicate(df, ["fips", "date"], path)
    records = {}
    fips = df["fips"].to_numpy()
    for county in np.unique(fips):
        m = fips == county
        order = np.argsort(dates[m], kind="stable")
        records[str(county)] = (dates[m][order], frac[m][order])
    return DynamicTable(records=records)


def load_ground_truth(path) -> GroundTruthAgeTable:
    df = _read(path, GROUND_TRUTH_HEADER)
    if df.empty:
        raise ParseError("no data rows", path=path)
    unknown = ~df["age_group"].map(is_age_group)
    if unknown.any():
        i = int(np.flatnonzero(unknown.to_numpy())[0])
        raise ParseError(f"unknown age group {df['age_group'].iloc[i]!r}", path=path, row=_row(i))
    _first_duplicate(df, ["age_group"], path)
    cases = _parse_numbers(df, "cases", path)
    pop = _parse_numbers(df, "population", path)
    for i in range(len(df)):
        if pop[i] <= 0:
            raise ParseError("population must be positive", path=path, row=_row(i))
        if cases[i] < 0 or cases[i] > pop[i]:
            raise ParseError("cases must lie in [0, population]", path=path, row=_row(i))
    order = np.argsort(df["age_group"].map(age_index).to_numpy())
    return GroundTruthAgeTable(
        groups=tuple(df["age_group"].to_numpy()[order]),
        cases=cases[order],
        population=pop[order],
    )


def load_age_cases(path) -> pd.DataFrame:
    """Case reports by age band as a frame with ``date`` (datetime64[D]), ``age_group``, ``cases``."""
    df = _read(path, AGE_CASES_HEADER)
    dates = _parse_dates(df, path) if len(df) else np.array([], dtype="datetime64[D]")
    unknown = ~df["age_group"].map(is_age_group).astype(bool)
    if unknown.any():
        i = int(np.flatnonzero(unknown.to_numpy())[0])
        raise ParseError(f"unknown age group {df['age_group'].iloc[i]!r}", path=path, row=_row(i))
    cases = _parse_numbers(df, "cases", path)
    if (cases < 0).any():
        i = int(np.flatnonzero(cases < 0)[0])
        raise ParseError("negative case count", path=path, row=_row(i))
    return pd.DataFrame({"date": dates, "age_group": df["age_group"].to_numpy(), "cases": cases})


def weekly_cases_by_age(age_cases: pd.DataFrame, start=None, end=None) -> pd.DataFrame:
    """Sum reports into Sunday-to-Saturday weeks; one column per age band present.

    Rows are indexed by the Sunday that starts each week.
    """
    df = age_cases
    if start is not None:
        df = df[df["date"] >= np.datetime64(start, "D")]
    if end is not None:
        df = df[df["date"] <= np.datetime64(end, "D")]
    days = df["date"].to_numpy().astype("datetime64[D]")
    # 1970-01-04 was a Sunday
    offset = (days.astype(np.int64) - 3) % 7
    week = days - offset.astype("timedelta64[D]")
    table = (
        pd.DataFrame({"week_start": week, "age_group": df["age_group"].to_numpy(), "cases": df["cases"].to_numpy()})
        .pivot_table(index="week_start", columns="age_group", values="cases", aggfunc="sum", fill_value=0.0)
    )
    cols = [g for g in AGE_GROUPS if g in table.columns]
    return table[cols].sort_index()


def default_ground_truth_path() -> Path:
    return Path(__file__).parent / "data" / "ground_truth_age.csv"


def assemble_panel(
    cases: CaseTable,
    static: StaticTable,
    vaccination: DynamicTable,
    date_range,
    selected_age_group: str,
    diagnostics: Diagnostics | None = None,
) -> PanelDataset:
    """Build the single-feature panel for one age band.

    Counties are the intersection of the case and population tables, sorted
    by FIPS. A county with no vaccination reports gets an all-zero series.
    """
    age_index(selected_age_group)
    start, end = (np.datetime64(str(d), "D") for d in date_range)
    if end < start:
        raise DataValidationError(f"date range ends before it starts: {start}..{end}")
    if start < cases.dates[0] or end > cases.dates[-1]:
        raise DataValidationError(
            f"date range {start}..{end} is outside the case data span {cases.dates[0]}..{cases.dates[-1]}"
        )
    counties = sorted(set(cases.counties) & set(static.counties))
    if not counties:
        raise DataValidationError("case and population tables share no counties")
    dropped = len(set(cases.counties) | set(static.counties)) - len(counties)
    if dropped and diagnostics is not None:
        diagnostics.note(f"inner join dropped {dropped} counties missing from cases or population")
    no_vacc = [c for c in counties if c not in vaccination.records]
    if no_vacc and diagnostics is not None:
        diagnostics.note(f"{len(no_vacc)} counties have no vaccination reports; using zero coverage")

    case_pos = {c: i for i, c in enumerate(cases.counties)}
    static_pos = {c: i for i, c in enumerate(static.counties)}
    rows = [case_pos[c] for c in counties]
    daily = to_daily(cases.cumulative[rows], diagnostics)
    t0 = int((start - cases.dates[0]).astype(np.int64))
    t1 = int((end - cases.dates[0]).astype(np.int64)) + 1
    dates = cases.dates[t0:t1]

    vacc = vaccination.dense(counties, dates)
    sinw = np.broadcast_to(sin_weekly_series(dates), vacc.shape)
    share = static.column(selected_age_group)[[static_pos[c] for c in counties]]
    return PanelDataset(
        counties=tuple(counties),
        dates=dates,
        target=daily[:, t0:t1],
        dynamic=np.stack([vacc, sinw], axis=-1),
        static=share[:, None],
        dynamic_names=("vaccination", "sin_weekly"),
        static_names=(selected_age_group,),
    )

