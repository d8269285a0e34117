import csv
import shutil

import numpy as np
import pytest

from sensi import cli
from sensi.ages import AGE_GROUPS
from sensi.config import from_mapping, load_config, parse_lines
from sensi.errors import ConfigError
from sensi.pipeline import MORRIS_HEADER
from sensi.synthetic import write_inputs

FAST = "hidden_size = 6\nepochs = 2\n"
STAGES = ("ingest", "train", "predict", "morris", "rank")


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def make_inputs(directory, extra=""):
    write_inputs(directory, n_counties=12, n_days=70, seed=0)
    cfg = directory / "sensi.cfg"
    cfg.write_text(cfg.read_text() + FAST + extra)
    return cfg


def run(*args):
    return cli.main([str(a) for a in args])


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = make_inputs(d)
    codes = [run(stage, "--config", cfg) for stage in STAGES]
    return d, cfg, codes


def test_all_stages_succeed(full_run):
    assert full_run[2] == [0, 0, 0, 0, 0]


def test_ingest_writes_one_panel_per_group(full_run):
    d = full_run[0]
    assert len(list((d / "out" / "panels").iterdir())) == 8
    assert (d / "out" / "ingest_diagnostics.txt").read_text().startswith("clamped_corrections=")


def test_rmse_table(full_run):
    rows = read_rows(full_run[0] / "out" / "rmse.csv")
    assert rows[0] == ["age_group", "train", "validation", "test"]
    assert [r[0] for r in rows[1:]] == list(AGE_GROUPS)
    assert all(np.isfinite(float(v)) for r in rows[1:] for v in r[1:])


def test_morris_outputs(full_run):
    out = full_run[0] / "out"
    rows = read_rows(out / "morris_results.csv")
    assert rows[0] == MORRIS_HEADER
    assert len(rows) == 1 + 160
    wide = read_rows(out / "morris_vs_delta.csv")
    assert wide[0] == ["delta", *AGE_GROUPS]
    assert len(wide) == 21
    assert (out / "morris_vs_delta.png").read_bytes()[:4] == b"\x89PNG"


def test_rank_outputs(full_run):
    out = full_run[0] / "out"
    rows = read_rows(out / "ranks.csv")
    assert rows[0] == ["age_group", "infection_rate", "infection_rank", "avg_morris_rank", "difference"]
    assert [r[1] for r in rows[1:]] == ["6.4", "11.2", "18.9", "17.2", "16.5", "13.8", "10.2", "11.5"]
    weekly = read_rows(out / "weekly_cases_by_age.csv")
    assert weekly[0] == ["week_start", *AGE_GROUPS]
    assert (out / "weekly_cases_by_age.png").is_file()


def test_predictions_cover_all_splits(full_run):
    rows = read_rows(full_run[0] / "out" / "predictions" / "18-29.csv")
    assert rows[0] == ["fips", "split", "date", "predicted", "actual"]
    assert {r[1] for r in rows[1:]} == {"train", "val", "test"}


def test_no_crlf_in_outputs(full_run):
    for path in (full_run[0] / "out").rglob("*.csv"):
        assert b"\r" not in path.read_bytes(), path


def test_retrain_same_seed_gives_same_rmse(full_run):
    d, cfg, _ = full_run
    before = (d / "out" / "rmse.csv").read_bytes()
    assert run("train", "--config", cfg, "--age-group", "40-49") == 0
    assert (d / "out" / "rmse.csv").read_bytes() == before


def test_single_group_morris(tmp_path, full_run):
    d, cfg, _ = full_run
    single = tmp_path / "single"
    shutil.copytree(d / "out", single / "out")
    (single / "sensi.cfg").write_text(cfg.read_text())
    assert run("morris", "--config", single / "sensi.cfg", "--age-group", "65-74") == 0
    assert len(read_rows(single / "out" / "morris_results.csv")) == 21


def test_missing_vaccination_file(tmp_path, capsys):
    cfg = make_inputs(tmp_path)
    (tmp_path / "vaccination.csv").unlink()
    assert run("ingest", "--config", cfg) == 2
    assert "vaccination.csv" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_empty_county_intersection(tmp_path):
    cfg = make_inputs(tmp_path)
    pop = tmp_path / "population.csv"
    pop.write_text(pop.read_text().replace(",510", ",520").replace("\n510", "\n520"))
    assert run("ingest", "--config", cfg) == 3


def test_unknown_age_group_is_usage_error(tmp_path, capsys):
    cfg = make_inputs(tmp_path)
    assert run("train", "--config", cfg, "--age-group", "20-29") == 4
    assert "20-29" in capsys.readouterr().err


def test_zero_delta_is_config_error(tmp_path):
    cfg = make_inputs(tmp_path, extra="deltas = -0.01, 0, 0.01\n")
    assert run("ingest", "--config", cfg) == 4
    assert not (tmp_path / "out").exists()


def test_bad_arguments_exit_4(capsys):
    with pytest.raises(SystemExit) as err:
        run("explode", "--config", "x.cfg")
    assert err.value.code == 4
    with pytest.raises(SystemExit) as err:
        run("train")
    assert err.value.code == 4


def test_missing_snapshot_names_group(tmp_path, capsys):
    cfg = make_inputs(tmp_path)
    assert run("ingest", "--config", cfg) == 0
    assert run("morris", "--config", cfg) == 2
    assert "0-4" in capsys.readouterr().err


def test_rank_with_seven_group_ground_truth(tmp_path, full_run):
    d, cfg, _ = full_run
    gt = tmp_path / "gt.csv"
    gt.write_text("age_group,cases,population\n" + "".join(f"{g},1,10\n" for g in AGE_GROUPS[:7]))
    text = cfg.read_text() + f"ground_truth = {gt}\n"
    (d / "seven.cfg").write_text(text)
    assert run("rank", "--config", d / "seven.cfg") == 3


def test_rank_against_oracle_morris_ranks(tmp_path):
    # Morris results whose per-delta ranks equal the published fixture ranks
    fixture = {"0-4": 8, "5-17": 7, "18-29": 1, "30-39": 3.5, "40-49": 2, "50-64": 5, "65-74": 6, "75+": 3.5}
    out = tmp_path / "out"
    out.mkdir()
    lines = [",".join(MORRIS_HEADER)]
    for g in AGE_GROUPS:
        for delta in (-0.01, 0.01):
            lines.append(f"{g},{delta},0,0,1,{-fixture[g]}")
    (out / "morris_results.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "sensi.cfg").write_text("output_dir = out\n")
    assert run("rank", "--config", tmp_path / "sensi.cfg") == 0
    rows = read_rows(out / "ranks.csv")[1:]
    assert [float(r[3]) for r in rows] == [fixture[g] for g in AGE_GROUPS]
    assert [float(r[4]) for r in rows] == [0, 1, 0, 1.5, 1, 1, 1, 1.5]
    assert max(float(r[4]) for r in rows) <= 1.5


def test_config_parsing(tmp_path):
    values = parse_lines("# comment\noutput_dir = out  # trailing\nlag = 5\nage_groups = 75+, 0-4\n")
    cfg = from_mapping(values, tmp_path)
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.window.lag == 5 and cfg.window.horizon == 15
    assert cfg.age_groups == ("0-4", "75+")
    assert cfg.split.day_counts() == (637, 15, 15)


@pytest.mark.parametrize("text", [
    "output_dir = out\nbogus = 1\n",
    "output_dir = out\nlag = 3\nlag = 4\n",
    "output_dir = out\nlag = three\n",
    "output_dir = out\nmodel = transformer\n",
    "output_dir = out\nabsolute = maybe\n",
    "lag = 3\n",
    "output_dir = out\nval_start = 2021-11-30\n",
])
def test_config_errors(tmp_path, text):
    path = tmp_path / "c.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_overrides(tmp_path):
    cfg = from_mapping({"output_dir": "out"}, tmp_path).with_overrides(seed=7, absolute=True, age_group="5-17")
    assert cfg.seed == 7 and cfg.morris.absolute and cfg.age_groups == ("5-17",)
