"""The forecaster interface shared by every model the Morris engine can probe."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from sensi.dataset import WindowBatch, WindowSample
from sensi.errors import ShapeError


class ForecastModel(ABC):
    """Multi-horizon forecaster: past target, past dynamic, known-future and static -> horizon.

    Implementations take windows in raw (case) units and return forecasts in
    case units. ``predict`` must be pure: repeated calls on the same input
    agree bit for bit.
    """

    kind: str = "abstract"

    def __init__(self, lag: int, horizon: int, n_static: int, n_observed: int, n_known: int):
        self.lag = int(lag)
        self.horizon = int(horizon)
        self.n_static = int(n_static)
        self.n_observed = int(n_observed)
        self.n_known = int(n_known)

    def check_batch(self, batch: WindowBatch):
        n = len(batch)
        expected = {
            "past_target": (n, self.lag),
            "past_dynamic": (n, self.lag, self.n_observed),
            "known_future": (n, self.lag + self.horizon, self.n_known),
            "static": (n, self.n_static),
        }
        for name, shape in expected.items():
            got = np.shape(getattr(batch, name))
            if got != shape:
                raise ShapeError(f"{name} has shape {got}, model expects {shape}")

    def predict(self, sample: WindowSample) -> np.ndarray:
        return self.predict_batch(WindowBatch.stack([sample]))[0]

    def predict_batch(self, batch: WindowBatch) -> np.ndarray:
        self.check_batch(batch)
        return self._predict(batch)

    @abstractmethod
    def _predict(self, batch: WindowBatch) -> np.ndarray:
        """[N, horizon] forecasts for a shape-checked batch."""

    @abstractmethod
    def get_state(self) -> tuple[dict, dict[str, np.ndarray]]:
        """(JSON-serializable config, named parameter arrays)."""

    @classmethod
    @abstractmethod
    def from_state(cls, config: dict, params: dict[str, np.ndarray]) -> "ForecastModel":
        ...
