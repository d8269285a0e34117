"""The end-to-end workflow behind each CLI subcommand.

Output layout under ``output_dir``::

    panels/<group>/            exported panel per age group
    ingest_diagnostics.txt
    models/<group>.npz         model snapshots
    history/<group>.csv        training history
    rmse.csv                   age_group,train,validation,test
    predictions/<group>.csv    fips,split,date,predicted,actual
    morris_results.csv         age_group,delta,total_change,mu_star_hat,sigma,scaled_index
    morris_vs_delta.csv/.png   delta,<group>...
    ranks.csv                  age_group,infection_rate,infection_rank,avg_morris_rank,difference
    rank_summary.csv           metric,value
    weekly_cases_by_age.csv/.png
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from sensi import plotting
from sensi.ages import slug, sort_groups
from sensi.config import PipelineConfig
from sensi.dataset import split_indices
from sensi.errors import DataValidationError, MissingInputError
from sensi.ingestion import (
    Diagnostics,
    assemble_panel,
    load_age_cases,
    load_cases,
    load_ground_truth,
    load_static_population,
    load_vaccination,
    weekly_cases_by_age,
)
from sensi.models import LinearBaseline, evaluate, fit_forecaster, load_model, save_model
from sensi.models.training import training_windows
from sensi.morris import MorrisMatrix, run_all_age_groups
from sensi.outputs import atomic_write_text, fmt, write_csv
from sensi.panel import export_panel, import_panel, panel_exists
from sensi.ranking import (
    average_rank_over_deltas,
    infection_rates,
    rank_table,
    round_half,
    spearman,
)

log = logging.getLogger(__name__)

MORRIS_HEADER = ["age_group", "delta", "total_change", "mu_star_hat", "sigma", "scaled_index"]
RANKS_HEADER = ["age_group", "infection_rate", "infection_rank", "avg_morris_rank", "difference"]
RMSE_HEADER = ["age_group", "train", "validation", "test"]


def panel_dir(cfg: PipelineConfig, group: str) -> Path:
    return cfg.output_dir / "panels" / slug(group)


def model_path(cfg: PipelineConfig, group: str) -> Path:
    return cfg.output_dir / "models" / f"{slug(group)}.npz"


def run_ingest(cfg: PipelineConfig) -> list[Path]:
    cfg.require("cases", "population", "vaccination")
    diag = Diagnostics()
    cases = load_cases(cfg.cases)
    static = load_static_population(cfg.population)
    vacc = load_vaccination(cfg.vaccination)
    date_range = (cfg.split.start, cfg.split.end)
    # build every panel before writing any of them
    panels = {g: assemble_panel(cases, static, vacc, date_range, g, diag if i == 0 else None)
              for i, g in enumerate(cfg.age_groups)}
    written = [export_panel(p, panel_dir(cfg, g)) for g, p in panels.items()]
    first = next(iter(panels.values()))
    diag.note(f"panel: {first.n_counties} counties x {first.n_days} days, {len(panels)} age groups")
    atomic_write_text(cfg.output_dir / "ingest_diagnostics.txt", diag.render())
    return written


def _load_panel(cfg, group):
    d = panel_dir(cfg, group)
    if not panel_exists(d):
        raise MissingInputError(f"no panel for age group {group} at {d}; run 'sensi ingest' first")
    return import_panel(d)


def _read_table(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_rmse(cfg, group, values):
    path = cfg.output_dir / "rmse.csv"
    rows = {}
    if path.is_file():
        for r in _read_table(path):
            rows[r["age_group"]] = [r["train"], r["validation"], r["test"]]
    rows[group] = [fmt(values["train"]), fmt(values["val"]), fmt(values["test"])]
    write_csv(path, RMSE_HEADER, [[g] + rows[g] for g in sort_groups(rows)])


def run_train(cfg: PipelineConfig) -> dict[str, dict[str, float]]:
    panels = {g: _load_panel(cfg, g) for g in cfg.age_groups}
    out = {}
    for g, panel in panels.items():
        if cfg.model == "linear":
            train_b, _, _ = training_windows(panel, cfg.split, cfg.window)
            model = LinearBaseline.fit(train_b, cfg.window.lag, cfg.window.horizon, n_known=len(panel.known_channels))
            history = []
        else:
            res = fit_forecaster(panel, cfg.split, cfg.window, cfg.train, hidden_size=cfg.hidden_size)
            model, history = res.model, res.history
        report = evaluate(model, panel, cfg.split, cfg.window)
        save_model(model, model_path(cfg, g))
        write_csv(
            cfg.output_dir / "history" / f"{slug(g)}.csv",
            ["epoch", "train_loss", "val_rmse", "best_val_rmse"],
            [[h.epoch, fmt(h.train_loss), fmt(h.val_rmse), fmt(h.best_val_rmse)] for h in history],
        )
        _write_rmse(cfg, g, report.rmse)
        log.info("trained %s: rmse %s", g, report.rmse)
        out[g] = report.rmse
    return out


def _load_group_model(cfg, group):
    path = model_path(cfg, group)
    if not path.is_file():
        raise MissingInputError(f"no model snapshot for age group {group} at {path}; run 'sensi train' first")
    return load_model(path, lag=cfg.window.lag, horizon=cfg.window.horizon)


def run_predict(cfg: PipelineConfig) -> list[Path]:
    """Per-county forecasts on the train tiling and on the validation/test splits.

    Reported forecasts are clamped at zero; RMSE elsewhere uses the raw values.
    """
    written = []
    for g in cfg.age_groups:
        panel = _load_panel(cfg, g)
        model = _load_group_model(cfg, g)
        report = evaluate(model, panel, cfg.split, cfg.window)
        rows = []
        for split_name in ("train", "val", "test"):
            b = report.batches[split_name]
            pred = report.predictions[split_name]
            for n in range(len(b)):
                a = int(b.anchors[n])
                for j in range(cfg.window.horizon):
                    rows.append([b.counties[n], split_name, str(panel.dates[a + 1 + j]),
                                 fmt(max(float(pred[n, j]), 0.0)), fmt(b.future_target[n, j])])
        path = cfg.output_dir / "predictions" / f"{slug(g)}.csv"
        written.append(write_csv(path, ["fips", "split", "date", "predicted", "actual"], rows))
    return written


def morris_panels(cfg: PipelineConfig) -> dict:
    """Training-split panels the sensitivity sweep runs over."""
    out = {}
    for g in cfg.age_groups:
        panel = _load_panel(cfg, g)
        tr = split_indices(panel, cfg.split)["train"]
        out[g] = panel.slice_days(tr.start, tr.stop)
    return out


def write_morris_outputs(cfg: PipelineConfig, matrix: MorrisMatrix):
    rows = [
        [g, fmt(r.delta), fmt(r.total_change), fmt(r.mu_star_hat), fmt(r.sigma), fmt(r.scaled_index)]
        for g, r in matrix.rows()
    ]
    write_csv(cfg.output_dir / "morris_results.csv", MORRIS_HEADER, rows)
    scaled = matrix.scaled
    plot_rows = [[fmt(d)] + [fmt(v) for v in scaled[:, j]] for j, d in enumerate(matrix.deltas)]
    write_csv(cfg.output_dir / "morris_vs_delta.csv", ["delta", *matrix.groups], plot_rows)
    plotting.plot_morris_vs_delta(
        matrix.deltas, {g: scaled[i] for i, g in enumerate(matrix.groups)},
        cfg.output_dir / "morris_vs_delta.png", absolute=cfg.morris.absolute,
    )


def run_morris(cfg: PipelineConfig) -> MorrisMatrix:
    models = {g: _load_group_model(cfg, g) for g in cfg.age_groups}
    panels = morris_panels(cfg)
    matrix = run_all_age_groups(models, panels, cfg.morris, cfg.window, groups=cfg.age_groups)
    write_morris_outputs(cfg, matrix)
    return matrix


def read_morris_results(path) -> tuple[tuple[str, ...], np.ndarray]:
    """(groups, [groups x deltas] scaled indices) from morris_results.csv."""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"Morris results not found: {path}; run 'sensi morris' first")
    table = {}
    for r in _read_table(path):
        table.setdefault(r["age_group"], {})[float(r["delta"])] = float(r["scaled_index"])
    if not table:
        raise DataValidationError(f"{path}: no rows")
    deltas = sorted(next(iter(table.values())))
    groups = tuple(sort_groups(table))
    for g in groups:
        if sorted(table[g]) != deltas:
            raise DataValidationError(f"{path}: age group {g} does not cover the same deltas as the others")
    return groups, np.array([[table[g][d] for d in deltas] for g in groups])


def run_rank(cfg: PipelineConfig):
    morris_csv = cfg.output_dir / "morris_results.csv"
    if not morris_csv.is_file():
        raise MissingInputError(f"Morris results not found: {morris_csv}; run 'sensi morris' first")
    cfg.require("ground_truth")
    if cfg.age_cases is not None:
        cfg.require("age_cases")
    groups, scaled = read_morris_results(morris_csv)
    gt = load_ground_truth(cfg.ground_truth)
    if set(gt.groups) != set(groups):
        raise DataValidationError(
            f"ground truth covers {', '.join(gt.groups)} but Morris results cover {', '.join(groups)}"
        )
    rates = infection_rates(gt)
    avg = average_rank_over_deltas(scaled, groups)
    table = rank_table(rates, avg, groups)
    out_rows = []
    for r in table:
        shown = round_half(r.avg_morris_rank)
        out_rows.append([r.age_group, f"{r.infection_rate:.1f}", f"{r.infection_rank:g}", f"{shown:g}",
                         f"{abs(r.infection_rank - shown):g}"])
    write_csv(cfg.output_dir / "ranks.csv", RANKS_HEADER, out_rows)
    inf_ranks = {r.age_group: r.infection_rank for r in table}
    summary = [
        ["spearman", fmt(spearman(inf_ranks, avg)) if len(groups) > 1 else "nan"],
        ["max_difference", fmt(max(r.difference for r in table))],
        ["mean_difference", fmt(float(np.mean([r.difference for r in table])))],
    ]
    write_csv(cfg.output_dir / "rank_summary.csv", ["metric", "value"], summary)
    if cfg.age_cases is not None:
        weekly = weekly_cases_by_age(load_age_cases(cfg.age_cases), cfg.split.train_start, cfg.split.train_end)
        weeks = [str(w) for w in weekly.index.to_numpy().astype("datetime64[D]")]
        rows = [[w] + [fmt(v) for v in weekly.iloc[i].to_numpy()] for i, w in enumerate(weeks)]
        write_csv(cfg.output_dir / "weekly_cases_by_age.csv", ["week_start", *weekly.columns], rows)
        plotting.plot_weekly_cases(
            weekly.index.to_numpy(), {g: weekly[g].to_numpy() for g in weekly.columns},
            cfg.output_dir / "weekly_cases_by_age.png",
        )
    else:
        log.info("no age_cases input configured; skipping weekly_cases_by_age outputs")
    return table

