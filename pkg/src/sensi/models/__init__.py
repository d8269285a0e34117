from sensi.models.base import ForecastModel
from sensi.models.linear import LinearBaseline
from sensi.models.recurrent import RecurrentForecaster
from sensi.models.serialization import load_model, save_model
from sensi.models.training import (
    EvalReport,
    TrainConfig,
    TrainResult,
    evaluate,
    fit_forecaster,
    gradient_check,
    persistence_forecast,
    rmse,
    train,
)

__all__ = [
    "ForecastModel",
    "LinearBaseline",
    "RecurrentForecaster",
    "load_model",
    "save_model",
    "EvalReport",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "fit_forecaster",
    "gradient_check",
    "persistence_forecast",
    "rmse",
    "train",
]
