import datetime as dt

import numpy as np
import pytest

from sensi.ages import AGE_GROUPS
from sensi.errors import DataValidationError, MissingInputError, ParseError
from sensi.ingestion import (
    Diagnostics,
    assemble_panel,
    default_ground_truth_path,
    load_age_cases,
    load_cases,
    load_ground_truth,
    load_static_population,
    load_vaccination,
    to_daily,
    weekly_cases_by_age,
)
from sensi.panel import export_panel, import_panel


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def population_csv(tmp_path, counties=("51001", "51003"), scale=1):
    lines = ["fips,age_group,population"]
    for c in counties:
        for j, g in enumerate(AGE_GROUPS):
            lines.append(f"{c},{g},{(j + 1) * 100 * scale}")
    return write(tmp_path / "population.csv", "\n".join(lines) + "\n")


@pytest.fixture
def inputs(tmp_path):
    cases = write(tmp_path / "cases.csv", "\n".join([
        "fips,date,cumulative_cases",
        "51001,2021-03-01,10",
        "51001,2021-03-02,15",
        # 03-03 missing: carried forward
        "51001,2021-03-04,14",
        "51001,2021-03-05,20",
        "51003,2021-03-02,3",
        "51003,2021-03-05,9",
        "51005,2021-03-01,1",
    ]) + "\n")
    pop = population_csv(tmp_path)
    vacc = write(tmp_path / "vaccination.csv", "\n".join([
        "fips,date,fully_vaccinated_fraction",
        "51001,2021-03-02,0.1",
        "51001,2021-03-04,0.2",
    ]) + "\n")
    return cases, pop, vacc


def test_cases_gap_fill(inputs):
    table = load_cases(inputs[0])
    assert table.counties == ("51001", "51003", "51005")
    assert table.cumulative[0].tolist() == [10, 15, 15, 14, 20]
    assert table.cumulative[1].tolist() == [0, 3, 3, 3, 9]


def test_to_daily_clamps_corrections():
    diag = Diagnostics()
    daily = to_daily(np.array([[10.0, 15, 15, 14, 20]]), diag)
    assert daily.tolist() == [[10, 5, 0, 0, 6]]
    assert diag.clamped_corrections == 1


def test_population_shares(inputs):
    table = load_static_population(inputs[1])
    np.testing.assert_allclose(table.shares.sum(axis=1), 1.0)
    assert table.column("0-4")[0] == pytest.approx(100 / 3600)


def test_assemble_panel_joins_and_fills(inputs):
    cases, pop, vacc = inputs
    diag = Diagnostics()
    panel = assemble_panel(
        load_cases(cases), load_static_population(pop), load_vaccination(vacc),
        (dt.date(2021, 3, 2), dt.date(2021, 3, 5)), "18-29", diag,
    )
    assert panel.counties == ("51001", "51003")
    assert panel.static_names == ("18-29",)
    assert panel.target[0].tolist() == [5, 0, 0, 6]
    assert panel.target[1].tolist() == [3, 0, 0, 6]
    assert panel.dynamic[0, :, 0].tolist() == [0.1, 0.1, 0.2, 0.2]
    assert panel.dynamic[1, :, 0].tolist() == [0, 0, 0, 0]
    assert panel.static[0, 0] == pytest.approx(300 / 3600)
    assert diag.clamped_corrections == 1
    assert any("dropped 1" in n for n in diag.notes)


def test_empty_intersection(tmp_path, inputs):
    pop = population_csv(tmp_path, counties=("52001",))
    with pytest.raises(DataValidationError):
        assemble_panel(
            load_cases(inputs[0]), load_static_population(pop), load_vaccination(inputs[2]),
            ("2021-03-01", "2021-03-05"), "0-4",
        )


def test_date_range_outside_cases(inputs):
    with pytest.raises(DataValidationError):
        assemble_panel(
            load_cases(inputs[0]), load_static_population(inputs[1]), load_vaccination(inputs[2]),
            ("2021-02-01", "2021-03-05"), "0-4",
        )


@pytest.mark.parametrize("body, row", [
    ("5100,2021-03-01,1\n", 2),
    ("51001,2021-03-01,1\n51001,2021-13-01,2\n", 3),
    ("51001,2021-03-01,-1\n", 2),
    ("51001,2021-03-01,1\n51001,2021-03-01,2\n", 3),
    ("51001,2021-03-01,abc\n", 2),
])
def test_bad_case_rows_report_line(tmp_path, body, row):
    path = write(tmp_path / "cases.csv", "fips,date,cumulative_cases\n" + body)
    with pytest.raises(ParseError) as err:
        load_cases(path)
    assert err.value.row == row
    assert f"row {row}" in str(err.value)


def test_wrong_header(tmp_path):
    path = write(tmp_path / "cases.csv", "county,date,cases\n51001,2021-03-01,1\n")
    with pytest.raises(ParseError):
        load_cases(path)


def test_missing_file(tmp_path):
    with pytest.raises(MissingInputError) as err:
        load_vaccination(tmp_path / "nope.csv")
    assert "nope.csv" in str(err.value)


def test_vaccination_out_of_range(tmp_path):
    path = write(tmp_path / "v.csv", "fips,date,fully_vaccinated_fraction\n51001,2021-03-01,1.5\n")
    with pytest.raises(ParseError):
        load_vaccination(path)


def test_population_missing_group(tmp_path):
    path = write(tmp_path / "p.csv", "fips,age_group,population\n51001,0-4,10\n")
    with pytest.raises(DataValidationError):
        load_static_population(path)


def test_shipped_ground_truth():
    gt = load_ground_truth(default_ground_truth_path())
    assert gt.groups == AGE_GROUPS
    assert gt.population[2] == 53_013_409


def test_ground_truth_subset_is_sorted(tmp_path):
    path = write(tmp_path / "gt.csv", "age_group,cases,population\n75+,5,100\n0-4,1,10\n")
    gt = load_ground_truth(path)
    assert gt.groups == ("0-4", "75+")


def test_ground_truth_cases_above_population(tmp_path):
    path = write(tmp_path / "gt.csv", "age_group,cases,population\n0-4,11,10\n")
    with pytest.raises(ParseError):
        load_ground_truth(path)


def test_weekly_cases_by_age(tmp_path):
    lines = ["date,age_group,cases"]
    # 2021-03-06 is a Saturday, 2021-03-07 a Sunday
    for d, n in (("2021-03-06", 1), ("2021-03-07", 2), ("2021-03-13", 3), ("2021-03-14", 4)):
        lines.append(f"{d},18-29,{n}")
        lines.append(f"{d},0-4,{10 * n}")
    weekly = weekly_cases_by_age(load_age_cases(write(tmp_path / "a.csv", "\n".join(lines) + "\n")))
    assert list(weekly.columns) == ["0-4", "18-29"]
    assert [str(d)[:10] for d in weekly.index] == ["2021-02-28", "2021-03-07", "2021-03-14"]
    assert weekly["18-29"].tolist() == [1, 5, 4]


def test_panel_export_round_trip(tmp_path, small_panel):
    export_panel(small_panel, tmp_path / "panel")
    back = import_panel(tmp_path / "panel")
    assert back.equals(small_panel)
    assert (tmp_path / "panel" / "target.csv").read_bytes().count(b"\r") == 0


def test_to_daily_examples():
    assert to_daily(np.array([0.0, 3, 3, 7])).tolist() == [0, 3, 0, 4]
    assert to_daily(np.array([5.0, 4])).tolist() == [5, 0]


def test_equal_counts_give_equal_shares(tmp_path):
    lines = ["fips,age_group,population"] + [f"51001,{g},250" for g in AGE_GROUPS]
    table = load_static_population(write(tmp_path / "p.csv", "\n".join(lines) + "\n"))
    assert table.shares[0].tolist() == [0.125] * 8


def test_vaccination_series_steps_between_reports(tmp_path):
    cases = write(tmp_path / "cases.csv", "fips,date,cumulative_cases\n"
                  + "".join(f"51001,2021-03-0{d},{d}\n" for d in range(1, 7)))
    vacc = write(tmp_path / "vacc.csv", "fips,date,fully_vaccinated_fraction\n"
                 "51001,2021-03-03,0.1\n51001,2021-03-05,0.2\n")
    panel = assemble_panel(load_cases(cases), load_static_population(population_csv(tmp_path, ("51001",))),
                           load_vaccination(vacc), (dt.date(2021, 3, 1), dt.date(2021, 3, 6)), "18-29")
    assert panel.dynamic[0, :, 0].tolist() == [0, 0, 0.1, 0.1, 0.2, 0.2]
