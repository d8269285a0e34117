"""Linear forecaster. Its Morris index is known in closed form, which makes it the oracle model."""

from __future__ import annotations

import numpy as np

from sensi.dataset import WindowBatch
from sensi.errors import DataValidationError
from sensi.models.base import ForecastModel


class LinearBaseline(ForecastModel):
    """Every horizon step gets ``bias + w_static.s + w_dyn.mean(z) + w_lag.y_past``.

    Works directly in case units (no scaler). Because the forecast is exactly
    linear in the static vector, shifting static feature i by delta shifts
    every forecast by ``w_static[i] * delta``.
    """

    kind = "linear"

    def __init__(self, lag, horizon, n_static, n_observed, n_known=0,
                 w_static=None, w_dyn=None, w_lag=None, bias=0.0):
        super().__init__(lag, horizon, n_static, n_observed, n_known)
        self.w_static = np.zeros(self.n_static) if w_static is None else np.asarray(w_static, dtype=float).copy()
        self.w_dyn = np.zeros(self.n_observed) if w_dyn is None else np.asarray(w_dyn, dtype=float).copy()
        self.w_lag = np.zeros(self.lag) if w_lag is None else np.asarray(w_lag, dtype=float).copy()
        self.bias = float(bias)
        if self.w_static.shape != (self.n_static,) or self.w_dyn.shape != (self.n_observed,) \
                or self.w_lag.shape != (self.lag,):
            raise DataValidationError("linear weight shapes do not match (n_static, n_observed, lag)")

    def _predict(self, batch: WindowBatch) -> np.ndarray:
        zbar = batch.past_dynamic.mean(axis=1) if self.n_observed else np.zeros((len(batch), 0))
        point = (
            self.bias
            + batch.static @ self.w_static
            + zbar @ self.w_dyn
            + batch.past_target @ self.w_lag
        )
        return np.repeat(point[:, None], self.horizon, axis=1)

    @classmethod
    def fit(cls, batch: WindowBatch, lag, horizon, n_known=0, ridge=0.0) -> "LinearBaseline":
        """Least-squares fit against every horizon step of ``batch``."""
        n_static = batch.static.shape[1]
        n_obs = batch.past_dynamic.shape[2]
        zbar = batch.past_dynamic.mean(axis=1)
        X = np.hstack([np.ones((len(batch), 1)), batch.static, zbar, batch.past_target])
        y = batch.future_target.mean(axis=1)
        if ridge > 0:
            reg = np.sqrt(ridge) * np.eye(X.shape[1])
            reg[0, 0] = 0.0
            X = np.vstack([X, reg])
            y = np.concatenate([y, np.zeros(X.shape[1])])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return cls(
            lag, horizon, n_static, n_obs, n_known,
            w_static=coef[1:1 + n_static],
            w_dyn=coef[1 + n_static:1 + n_static + n_obs],
            w_lag=coef[1 + n_static + n_obs:],
            bias=coef[0],
        )

    def get_state(self):
        config = {
            "lag": self.lag, "horizon": self.horizon, "n_static": self.n_static,
            "n_observed": self.n_observed, "n_known": self.n_known,
        }
        params = {
            "w_static": self.w_static, "w_dyn": self.w_dyn, "w_lag": self.w_lag,
            "bias": np.array([self.bias]),
        }
        return config, params

    @classmethod
    def from_state(cls, config, params):
        return cls(
            config["lag"], config["horizon"], config["n_static"], config["n_observed"], config["n_known"],
            w_static=params["w_static"], w_dyn=params["w_dyn"], w_lag=params["w_lag"],
            bias=float(params["bias"][0]),
        )
