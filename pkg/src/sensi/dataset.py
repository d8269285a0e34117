"""Date splits, the SinWeekly encoding, standardization and window construction."""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from sensi.errors import ConfigError, DataValidationError
from sensi.panel import PanelDataset

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-8


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").astype(dt.date)
    try:
        return dt.date.fromisoformat(str(value).strip())
    except ValueError:
        raise ConfigError(f"not an ISO-8601 date: {value!r}") from None


@dataclass(frozen=True)
class SplitConfig:
    train_start: dt.date = dt.date(2020, 3, 1)
    train_end: dt.date = dt.date(2021, 11, 27)
    val_start: dt.date = dt.date(2021, 11, 28)
    val_end: dt.date = dt.date(2021, 12, 12)
    test_start: dt.date = dt.date(2021, 12, 13)
    test_end: dt.date = dt.date(2021, 12, 27)

    def __post_init__(self):
        for name in ("train_start", "train_end", "val_start", "val_end", "test_start", "test_end"):
            object.__setattr__(self, name, _as_date(getattr(self, name)))
        for start, end, label in self._spans():
            if end < start:
                raise ConfigError(f"{label} split ends before it starts ({start} > {end})")
        one = dt.timedelta(days=1)
        if self.val_start != self.train_end + one or self.test_start != self.val_end + one:
            raise ConfigError("splits must be contiguous, non-overlapping and ascending (train, val, test)")

    def _spans(self):
        return (
            (self.train_start, self.train_end, "train"),
            (self.val_start, self.val_end, "val"),
            (self.test_start, self.test_end, "test"),
        )

    def day_counts(self) -> tuple[int, int, int]:
        return tuple((end - start).days + 1 for start, end, _ in self._spans())

    @property
    def start(self) -> dt.date:
        return self.train_start

    @property
    def end(self) -> dt.date:
        return self.test_end


@dataclass(frozen=True)
class WindowConfig:
    lag: int = 13
    horizon: int = 15

    def __post_init__(self):
        if int(self.lag) < 1 or int(self.horizon) < 1:
            raise ConfigError("lag and horizon must both be >= 1")

    @property
    def length(self) -> int:
        return self.lag + self.horizon


@dataclass(frozen=True, eq=False)
class WindowSample:
    """One forecast unit anchored at day index ``anchor`` (the last observed day).

    ``past_target`` covers anchor-lag+1..anchor, ``known_future`` covers
    anchor-lag+1..anchor+horizon and ``future_target`` anchor+1..anchor+horizon.
    """

    county: str
    anchor: int
    anchor_date: np.datetime64
    past_target: np.ndarray
    past_dynamic: np.ndarray
    known_future: np.ndarray
    static: np.ndarray
    future_target: np.ndarray


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """``N`` windows stacked along a leading axis."""

    counties: tuple[str, ...]
    county_index: np.ndarray
    anchors: np.ndarray
    past_target: np.ndarray
    past_dynamic: np.ndarray
    known_future: np.ndarray
    static: np.ndarray
    future_target: np.ndarray
    anchor_dates: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.anchors)

    def take(self, idx) -> "WindowBatch":
        idx = np.asarray(idx)
        return WindowBatch(
            counties=tuple(np.asarray(self.counties, dtype=object)[idx]),
            county_index=self.county_index[idx],
            anchors=self.anchors[idx],
            past_target=self.past_target[idx],
            past_dynamic=self.past_dynamic[idx],
            known_future=self.known_future[idx],
            static=self.static[idx],
            future_target=self.future_target[idx],
            anchor_dates=None if self.anchor_dates is None else self.anchor_dates[idx],
        )

    def samples(self) -> list[WindowSample]:
        return [
            WindowSample(
                county=self.counties[n],
                anchor=int(self.anchors[n]),
                anchor_date=None if self.anchor_dates is None else self.anchor_dates[n],
                past_target=self.past_target[n],
                past_dynamic=self.past_dynamic[n],
                known_future=self.known_future[n],
                static=self.static[n],
                future_target=self.future_target[n],
            )
            for n in range(len(self))
        ]

    @classmethod
    def stack(cls, samples) -> "WindowBatch":
        samples = list(samples)
        if not samples:
            raise DataValidationError("cannot stack an empty list of windows")
        return cls(
            counties=tuple(s.county for s in samples),
            county_index=np.full(len(samples), -1),
            anchors=np.array([s.anchor for s in samples]),
            past_target=np.stack([np.asarray(s.past_target, dtype=float) for s in samples]),
            past_dynamic=np.stack([np.asarray(s.past_dynamic, dtype=float) for s in samples]),
            known_future=np.stack([np.asarray(s.known_future, dtype=float) for s in samples]),
            static=np.stack([np.asarray(s.static, dtype=float) for s in samples]),
            future_target=np.stack([np.asarray(s.future_target, dtype=float) for s in samples]),
            anchor_dates=np.array([s.anchor_date for s in samples], dtype="datetime64[D]"),
        )


def sin_weekly(date) -> float:
    """sin(2*pi*dow/7) with Monday as day 0."""
    dow = _as_date(date).weekday()
    return math.sin(2.0 * math.pi * dow / 7.0)


def sin_weekly_series(dates) -> np.ndarray:
    days = np.asarray(dates, dtype="datetime64[D]").astype(np.int64)
    # 1970-01-01 was a Thursday (dow 3 with Monday = 0)
    dow = (days + 3) % 7
    return np.sin(2.0 * np.pi * dow / 7.0)


def split_indices(panel: PanelDataset, cfg: SplitConfig) -> dict[str, slice]:
    first = panel.dates[0].astype(dt.date)
    last = panel.dates[-1].astype(dt.date)
    if cfg.start < first or cfg.end > last:
        raise DataValidationError(
            f"split range {cfg.start}..{cfg.end} is outside the panel dates {first}..{last}"
        )
    out = {}
    for start, end, label in cfg._spans():
        out[label] = slice((start - first).days, (end - first).days + 1)
    return out


def split_panel(panel: PanelDataset, cfg: SplitConfig | None = None):
    cfg = cfg or SplitConfig()
    idx = split_indices(panel, cfg)
    return tuple(panel.slice_days(idx[k].start, idx[k].stop) for k in ("train", "val", "test"))


def _gather(panel: PanelDataset, cfg: WindowConfig, county_index, anchors) -> WindowBatch:
    k, tau = cfg.lag, cfg.horizon
    ci = np.asarray(county_index, dtype=np.int64)
    a = np.asarray(anchors, dtype=np.int64)
    rows = ci[:, None]
    past = a[:, None] + np.arange(-k + 1, 1)
    fut = a[:, None] + np.arange(1, tau + 1)
    known = a[:, None] + np.arange(-k + 1, tau + 1)
    obs_ch = panel.observed_channels
    known_ch = panel.known_channels
    return WindowBatch(
        counties=tuple(panel.counties[i] for i in ci),
        county_index=ci,
        anchors=a,
        past_target=panel.target[rows, past],
        past_dynamic=panel.dynamic[rows, past][:, :, obs_ch],
        known_future=panel.dynamic[rows, known][:, :, known_ch],
        static=panel.static[ci],
        future_target=panel.target[rows, fut],
        anchor_dates=panel.dates[a] if len(a) else np.array([], dtype="datetime64[D]"),
    )


def window_anchors(n_days: int, cfg: WindowConfig) -> np.ndarray:
    """Every anchor whose past and future blocks fit inside ``n_days``."""
    if n_days < cfg.length:
        raise DataValidationError(
            f"panel has {n_days} days; windows need at least lag + horizon = {cfg.length}"
        )
    return np.arange(cfg.lag - 1, n_days - cfg.horizon)


def tile_anchors(n_days: int, cfg: WindowConfig, start: int | None = None, stop: int | None = None) -> np.ndarray:
    """Anchors whose future blocks tile [start, stop) without overlap.

    ``start`` defaults to the first day with a full past block behind it. The
    past block may reach before ``start`` (but not before day 0).
    """
    start = cfg.lag if start is None else start
    stop = n_days if stop is None else stop
    if start - cfg.lag < 0:
        raise DataValidationError(f"tiling from day {start} leaves no room for a {cfg.lag}-day past block")
    n_tiles = (stop - start) // cfg.horizon
    if n_tiles < 1:
        raise DataValidationError(
            f"range of {stop - start} days holds no complete {cfg.horizon}-day forecast horizon"
        )
    return start - 1 + cfg.horizon * np.arange(n_tiles)


def window_batch(panel: PanelDataset, cfg: WindowConfig | None = None, anchors=None) -> WindowBatch:
    """Vectorized window extraction, ordered county-major then by anchor."""
    cfg = cfg or WindowConfig()
    if anchors is None:
        anchors = window_anchors(panel.n_days, cfg)
    anchors = np.asarray(anchors, dtype=np.int64)
    ci = np.repeat(np.arange(panel.n_counties), len(anchors))
    a = np.tile(anchors, panel.n_counties)
    return _gather(panel, cfg, ci, a)


def make_windows(panel: PanelDataset, cfg: WindowConfig | None = None) -> list[WindowSample]:
    return window_batch(panel, cfg).samples()


def tiled_batch(panel: PanelDataset, cfg: WindowConfig | None = None) -> WindowBatch:
    cfg = cfg or WindowConfig()
    return window_batch(panel, cfg, tile_anchors(panel.n_days, cfg))


def evaluation_batch(panel: PanelDataset, cfg: WindowConfig, span: slice) -> WindowBatch:
    """Non-overlapping windows whose horizons tile ``span``, anchored at its start.

    The past block is taken from the days just before the span.
    """
    return window_batch(panel, cfg, tile_anchors(panel.n_days, cfg, span.start, span.stop))


@dataclass(frozen=True)
class Scaler:
    """Location/scale statistics fitted on the training split.

    ``static_mean``/``static_scale`` are never applied to a panel; models that
    want standardized static inputs apply them internally, so a Morris delta
    always lives in raw share units.
    """

    target_mean: float
    target_scale: float
    dynamic_names: tuple[str, ...]
    dynamic_mean: np.ndarray
    dynamic_scale: np.ndarray
    static_mean: np.ndarray
    static_scale: np.ndarray

    def transform_target(self, y):
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_scale

    def inverse_target(self, y):
        return np.asarray(y, dtype=float) * self.target_scale + self.target_mean

    def transform_dynamic(self, x, channels=None):
        """Scale the last axis of ``x``; ``channels`` selects which panel channels it holds."""
        ch = slice(None) if channels is None else list(channels)
        return (np.asarray(x, dtype=float) - self.dynamic_mean[ch]) / self.dynamic_scale[ch]

    def inverse_dynamic(self, x, channels=None):
        ch = slice(None) if channels is None else list(channels)
        return np.asarray(x, dtype=float) * self.dynamic_scale[ch] + self.dynamic_mean[ch]

    def transform_static(self, s):
        return (np.asarray(s, dtype=float) - self.static_mean) / self.static_scale

    def to_dict(self) -> dict:
        return {
            "target_mean": float(self.target_mean),
            "target_scale": float(self.target_scale),
            "dynamic_names": list(self.dynamic_names),
            "dynamic_mean": [float(v) for v in self.dynamic_mean],
            "dynamic_scale": [float(v) for v in self.dynamic_scale],
            "static_mean": [float(v) for v in self.static_mean],
            "static_scale": [float(v) for v in self.static_scale],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(
            target_mean=float(d["target_mean"]),
            target_scale=float(d["target_scale"]),
            dynamic_names=tuple(d["dynamic_names"]),
            dynamic_mean=np.asarray(d["dynamic_mean"], dtype=float),
            dynamic_scale=np.asarray(d["dynamic_scale"], dtype=float),
            static_mean=np.asarray(d["static_mean"], dtype=float),
            static_scale=np.asarray(d["static_scale"], dtype=float),
        )

    @classmethod
    def identity(cls, dynamic_names, n_static=0) -> "Scaler":
        n = len(dynamic_names)
        return cls(0.0, 1.0, tuple(dynamic_names), np.zeros(n), np.ones(n), np.zeros(n_static), np.ones(n_static))


def _floored(std: float, label: str) -> float:
    if not std > SCALE_FLOOR:
        log.warning("channel %s has zero variance on the training split; scale floored at %g", label, SCALE_FLOOR)
        return SCALE_FLOOR
    return float(std)


def fit_scaler(train: PanelDataset) -> Scaler:
    """Per-channel mean / std (population) from the training split."""
    t_mean = float(train.target.mean())
    t_scale = _floored(float(train.target.std()), "target")
    flat = train.dynamic.reshape(-1, train.dynamic.shape[-1])
    d_mean = flat.mean(axis=0)
    d_scale = np.array([_floored(float(s), n) for s, n in zip(flat.std(axis=0), train.dynamic_names)])
    s_mean = train.static.mean(axis=0)
    s_std = train.static.std(axis=0)
    # a constant static feature carries nothing to standardize
    s_scale = np.where(s_std > SCALE_FLOOR, s_std, 1.0)
    return Scaler(t_mean, t_scale, train.dynamic_names, d_mean, d_scale, s_mean, s_scale)


def apply_scaler(scaler: Scaler, panel: PanelDataset) -> PanelDataset:
    """Standardize target and dynamic channels. Static shares pass through unscaled."""
    if tuple(panel.dynamic_names) != tuple(scaler.dynamic_names):
        raise DataValidationError("scaler channels do not match panel channels")
    return replace(panel, target=scaler.transform_target(panel.target), dynamic=scaler.transform_dynamic(panel.dynamic))
