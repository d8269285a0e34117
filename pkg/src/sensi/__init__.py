"""Age-group sensitivity analysis for county-level forecasting models.

The pipeline: ingest county CSVs into per-age-group panels, train one
forecaster per panel, perturb the static age share with a sweep of deltas to
get a scaled Morris index, and compare the resulting ranking with observed
infection rates.
"""

from sensi.ages import AGE_GROUPS
from sensi.dataset import (
    PanelDataset,
    SplitConfig,
    WindowConfig,
    WindowSample,
    make_windows,
    sin_weekly,
    split_panel,
)
from sensi.morris import MorrisConfig, MorrisResult, morris_index, morris_sweep
from sensi.ranking import rank_descending, infection_rates

__version__ = "0.1.0"

__all__ = [
    "AGE_GROUPS",
    "PanelDataset",
    "SplitConfig",
    "WindowConfig",
    "WindowSample",
    "make_windows",
    "sin_weekly",
    "split_panel",
    "MorrisConfig",
    "MorrisResult",
    "morris_index",
    "morris_sweep",
    "rank_descending",
    "infection_rates",
]
