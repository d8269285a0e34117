"""Training loop, error metrics and the finite-difference gradient check."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from sensi.dataset import (
    SplitConfig,
    WindowBatch,
    WindowConfig,
    evaluation_batch,
    fit_scaler,
    split_indices,
    tile_anchors,
    window_batch,
)
from sensi.errors import ConfigError, DataValidationError, TrainingDivergedError
from sensi.models.base import ForecastModel
from sensi.models.recurrent import RecurrentForecaster
from sensi.panel import PanelDataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 256
    learning_rate: float = 1e-3
    patience: int = 5
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1 or self.patience < 1 or not self.learning_rate > 0 or not self.clip_norm > 0:
            raise ConfigError("batch_size, patience, learning_rate and clip_norm must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_rmse: float
    best_val_rmse: float


@dataclass
class TrainResult:
    model: RecurrentForecaster
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def best_val_rmse(self) -> float | None:
        return self.history[-1].best_val_rmse if self.history else None


def rmse(predictions, actuals) -> float:
    p = np.asarray(predictions, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if p.shape != a.shape:
        raise DataValidationError(f"shape mismatch: predictions {p.shape} vs actuals {a.shape}")
    if p.size == 0:
        raise DataValidationError("rmse of an empty array")
    return float(np.sqrt(np.mean((p - a) ** 2)))


def persistence_forecast(batch: WindowBatch, horizon: int) -> np.ndarray:
    """Last observed value repeated over the horizon."""
    return np.repeat(batch.past_target[:, -1:], horizon, axis=1)


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in params:  # fixed key order keeps updates reproducible
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _clip(grads, max_norm):
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


def _standardized_rmse(model: RecurrentForecaster, batch: WindowBatch) -> float:
    y_hat = model.predict_standardized(batch)
    return rmse(y_hat, model.scaler.transform_target(batch.future_target))


def train(model: RecurrentForecaster, train_windows: WindowBatch, val_windows: WindowBatch,
          cfg: TrainConfig | None = None) -> TrainResult:
    """Minibatch Adam on standardized MSE with early stopping on validation RMSE.

    The model is updated in place and ends holding the best-on-validation
    parameters. Validation RMSE in the history is in standardized units.
    """
    cfg = cfg or TrainConfig()
    if len(train_windows) == 0 or len(val_windows) == 0:
        raise DataValidationError("training and validation window sets must be non-empty")
    model.check_batch(train_windows)
    model.check_batch(val_windows)
    result = TrainResult(model=model)
    if cfg.epochs == 0:
        return result

    rng = np.random.default_rng(cfg.seed)
    opt = _Adam(model.params, cfg.learning_rate)
    best = _standardized_rmse(model, val_windows)
    best_params = model.copy_params()
    stale = 0
    n = len(train_windows)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = model.loss_and_grad(train_windows.take(idx))
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}, batch {start // cfg.batch_size}")
            _clip(grads, cfg.clip_norm)
            opt.step(model.params, grads)
            total += loss * len(idx)
            count += len(idx)
        val = _standardized_rmse(model, val_windows)
        if not np.isfinite(val):
            raise TrainingDivergedError(f"non-finite validation RMSE at epoch {epoch}")
        if val < best:
            best, stale = val, 0
            best_params = model.copy_params()
            result.best_epoch = epoch
        else:
            stale += 1
        result.history.append(EpochRecord(epoch, total / count, val, best))
        log.debug("epoch %d train_loss=%.6f val_rmse=%.6f best=%.6f", epoch, total / count, val, best)
        if stale >= cfg.patience:
            log.info("early stop at epoch %d (no improvement for %d epochs)", epoch, stale)
            break
    model.params = best_params
    return result


def training_windows(panel: PanelDataset, split: SplitConfig, window_cfg: WindowConfig):
    """(train batch, validation batch, train panel): every window inside train; horizon tiles over val."""
    idx = split_indices(panel, split)
    train_panel = panel.slice_days(idx["train"].start, idx["train"].stop)
    return (
        window_batch(train_panel, window_cfg),
        evaluation_batch(panel, window_cfg, idx["val"]),
        train_panel,
    )


def fit_forecaster(panel: PanelDataset, split: SplitConfig, window_cfg: WindowConfig,
                   cfg: TrainConfig | None = None, hidden_size: int = 64) -> TrainResult:
    """Fit the scaler on the training split, build a model and train it."""
    cfg = cfg or TrainConfig()
    train_b, val_b, train_panel = training_windows(panel, split, window_cfg)
    model = RecurrentForecaster.for_panel(
        panel, window_cfg, hidden_size=hidden_size, seed=cfg.seed, scaler=fit_scaler(train_panel)
    )
    return train(model, train_b, val_b, cfg)


@dataclass
class EvalReport:
    """Case-unit RMSE per split plus the windows and forecasts behind it."""

    rmse: dict[str, float]
    batches: dict[str, WindowBatch]
    predictions: dict[str, np.ndarray]


def evaluate(model: ForecastModel, panel: PanelDataset, split: SplitConfig, window_cfg: WindowConfig) -> EvalReport:
    """Train RMSE over horizon tiles of the training span; val/test over one tiling anchored at each split start."""
    idx = split_indices(panel, split)
    tr = idx["train"]
    batches = {
        "train": window_batch(panel, window_cfg, tile_anchors(panel.n_days, window_cfg, tr.start + window_cfg.lag, tr.stop)),
        "val": evaluation_batch(panel, window_cfg, idx["val"]),
        "test": evaluation_batch(panel, window_cfg, idx["test"]),
    }
    preds = {k: model.predict_batch(b) for k, b in batches.items()}
    return EvalReport(
        rmse={k: rmse(preds[k], batches[k].future_target) for k in batches},
        batches=batches,
        predictions=preds,
    )


@dataclass
class GradientCheckReport:
    passed: bool
    checked: int
    max_rel_error: float
    failures: list[tuple[str, tuple, float, float, float]]

    @property
    def failed_parameters(self) -> list[str]:
        return sorted({f[0] for f in self.failures})


def _sample_entries(params, n, rng):
    names = list(params)
    picks = []
    # one entry from every tensor first, then uniformly over all entries
    for name in names:
        picks.append((name, tuple(rng.integers(0, s) for s in params[name].shape)))
    sizes = np.array([params[k].size for k in names])
    while len(picks) < n:
        flat = int(rng.integers(0, sizes.sum()))
        j = int(np.searchsorted(np.cumsum(sizes), flat, side="right"))
        offset = flat - (int(np.cumsum(sizes)[j - 1]) if j else 0)
        picks.append((names[j], np.unravel_index(offset, params[names[j]].shape)))
    return [(name, tuple(int(i) for i in ix)) for name, ix in picks[:max(n, len(names))]]


def gradient_check(model: RecurrentForecaster, batch: WindowBatch, tolerance: float = 1e-4,
                   n_params: int = 100, h: float = 1e-5, seed: int = 0, floor: float = 1e-6) -> GradientCheckReport:
    """Compare analytic gradients with central differences on sampled parameter entries.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``. Central differences
    carry O(h**2) truncation error, so entries whose true gradient is zero are
    judged against ``floor`` rather than against their own tiny size.
    """
    if not isinstance(batch, WindowBatch):
        batch = WindowBatch.stack([batch])
    for name, value in model.params.items():
        if not np.all(np.isfinite(value)):
            raise DataValidationError(f"parameter {name} is not finite")
    _, grads = model.loss_and_grad(batch)
    rng = np.random.default_rng(seed)
    failures = []
    worst = 0.0
    entries = _sample_entries(model.params, n_params, rng)
    for name, ix in entries:
        p = model.params[name]
        orig = p[ix]
        p[ix] = orig + h
        up = model.loss(batch)
        p[ix] = orig - h
        down = model.loss(batch)
        p[ix] = orig
        numeric = (up - down) / (2.0 * h)
        analytic = float(grads[name][ix])
        if not (np.isfinite(numeric) and np.isfinite(analytic)):
            failures.append((name, ix, analytic, numeric, float("inf")))
            worst = float("inf")
            continue
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        worst = max(worst, rel)
        if rel >= tolerance:
            failures.append((name, ix, analytic, numeric, rel))
    return GradientCheckReport(not failures, len(entries), worst, failures)
