"""Modified Morris screening for a static feature of a spatio-temporal forecaster.

For one feature ``i`` and shift ``delta``: predict every covered (county, day)
cell with the original panel and with ``static[:, i] + delta``, sum the signed
differences into ``G``, and report

    mu_star_hat  = G / (C * T * delta)
    scaled_index = mu_star_hat * std(static[:, i])

The covered cells are the horizons of non-overlapping forecast windows tiled
over the panel, so ``T`` counts days that actually received a forecast.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sensi.ages import sort_groups
from sensi.dataset import WindowConfig, tiled_batch
from sensi.errors import ConfigError, DataValidationError
from sensi.models.base import ForecastModel
from sensi.panel import PanelDataset

log = logging.getLogger(__name__)

DEFAULT_DELTAS = tuple(k / 1000 for k in range(-10, 11) if k != 0)


@dataclass(frozen=True)
class MorrisConfig:
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    feature: int = 0
    absolute: bool = False

    def __post_init__(self):
        deltas = tuple(float(d) for d in self.deltas)
        if not deltas:
            raise ConfigError("delta list is empty")
        if any(d == 0.0 for d in deltas):
            raise ConfigError("delta values must be nonzero")
        if any(not math.isfinite(d) for d in deltas):
            raise ConfigError("delta values must be finite")
        object.__setattr__(self, "deltas", deltas)


@dataclass(frozen=True)
class MorrisResult:
    feature: int
    feature_name: str
    delta: float
    total_change: float
    n_counties: int
    n_days: int
    mu_star_hat: float
    sigma: float
    scaled_index: float
    absolute: bool = False


def perturb_static(panel: PanelDataset, i: int, delta: float) -> PanelDataset:
    """Copy of ``panel`` with static feature ``i`` shifted by ``delta`` in every county (no clamping)."""
    if delta == 0:
        raise ConfigError("delta must be nonzero")
    if not 0 <= i < panel.static.shape[1]:
        raise DataValidationError(f"static feature index {i} out of range for {panel.static.shape[1]} features")
    static = panel.static.copy()
    static[:, i] += delta
    outside = (static[:, i] < 0) | (static[:, i] > 1)
    if outside.any():
        log.info("delta %g moves %d of %d shares outside [0, 1]; not clamped", delta, int(outside.sum()), len(outside))
    return panel.with_static(static)


def prediction_matrix(model: ForecastModel, panel: PanelDataset, window_cfg: WindowConfig) -> np.ndarray:
    """Forecasts over the tiled horizons, as [C, covered days]."""
    batch = tiled_batch(panel, window_cfg)
    y = model.predict_batch(batch)
    return y.reshape(panel.n_counties, -1)


def total_change(y: np.ndarray, y_delta: np.ndarray, absolute: bool = False) -> float:
    """Exactly rounded sum of per-cell prediction changes."""
    diff = np.asarray(y_delta, dtype=float) - np.asarray(y, dtype=float)
    if absolute:
        diff = np.abs(diff)
    return math.fsum(diff.ravel().tolist())


def feature_sigma(panel: PanelDataset, i: int) -> float:
    """Population standard deviation of the raw static feature across counties."""
    return float(np.std(panel.static[:, i]))


def _result(panel, i, delta, y, y_delta, absolute) -> MorrisResult:
    C, T = y.shape
    if C * T == 0:
        raise DataValidationError("no covered prediction cells")
    G = total_change(y, y_delta, absolute)
    mu = G / (C * T * (abs(delta) if absolute else delta))
    sigma = feature_sigma(panel, i)
    return MorrisResult(
        feature=i,
        feature_name=panel.static_names[i],
        delta=float(delta),
        total_change=G,
        n_counties=C,
        n_days=T,
        mu_star_hat=mu,
        sigma=sigma,
        scaled_index=mu * sigma,
        absolute=absolute,
    )


def morris_index(model: ForecastModel, panel: PanelDataset, i: int, delta: float,
                 window_cfg: WindowConfig | None = None, absolute: bool = False) -> MorrisResult:
    window_cfg = window_cfg or WindowConfig()
    y = prediction_matrix(model, panel, window_cfg)
    y_delta = prediction_matrix(model, perturb_static(panel, i, delta), window_cfg)
    return _result(panel, i, delta, y, y_delta, absolute)


def morris_sweep(model: ForecastModel, panel: PanelDataset, i: int | None = None,
                 cfg: MorrisConfig | None = None, window_cfg: WindowConfig | None = None) -> list[MorrisResult]:
    """One result per delta, ordered by delta ascending. Baseline forecasts are computed once."""
    cfg = cfg or MorrisConfig()
    window_cfg = window_cfg or WindowConfig()
    i = cfg.feature if i is None else i
    y = prediction_matrix(model, panel, window_cfg)
    out = []
    for delta in sorted(cfg.deltas):
        y_delta = prediction_matrix(model, perturb_static(panel, i, delta), window_cfg)
        out.append(_result(panel, i, delta, y, y_delta, cfg.absolute))
    return out


@dataclass
class MorrisMatrix:
    """Scaled Morris indices for several groups over a shared delta sweep."""

    groups: tuple[str, ...]
    deltas: tuple[float, ...]
    results: dict[str, list[MorrisResult]] = field(repr=False)

    @property
    def scaled(self) -> np.ndarray:
        return np.array([[r.scaled_index for r in self.results[g]] for g in self.groups])

    def rows(self):
        for g in self.groups:
            for r in self.results[g]:
                yield g, r


def _keyed(items, what):
    pairs = list(items.items()) if hasattr(items, "items") else list(items)
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate age group {key!r} among {what}")
        out[key] = value
    return out


def run_all_age_groups(models, panels, cfg: MorrisConfig | None = None,
                       window_cfg: WindowConfig | None = None, groups=None) -> MorrisMatrix:
    """Sweep every group's model over its own panel.

    ``models`` and ``panels`` are mappings (or sequences of pairs) keyed by age
    group. Rows follow ``groups`` when given, otherwise canonical band order.
    """
    cfg = cfg or MorrisConfig()
    models = _keyed(models, "models")
    panels = _keyed(panels, "panels")
    groups = tuple(sort_groups(panels) if groups is None else groups)
    if len(set(groups)) != len(groups):
        raise ConfigError("duplicate age group in group list")
    for g in groups:
        if g not in models:
            raise DataValidationError(f"no model for age group {g}")
        if g not in panels:
            raise DataValidationError(f"no panel for age group {g}")
    results = {g: morris_sweep(models[g], panels[g], cfg.feature, cfg, window_cfg) for g in groups}
    return MorrisMatrix(groups=groups, deltas=tuple(sorted(cfg.deltas)), results=results)
