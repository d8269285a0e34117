import datetime as dt

import numpy as np
import pytest

from sensi.dataset import sin_weekly_series
from sensi.models.base import ForecastModel
from sensi.panel import PanelDataset
from sensi.synthetic import fips_codes


def random_panel(rng, n_counties=3, n_days=20, n_static=1, start=dt.date(2021, 3, 1)) -> PanelDataset:
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + n_days)
    vacc = rng.uniform(0, 1, (n_counties, n_days))
    sinw = np.broadcast_to(sin_weekly_series(dates), vacc.shape)
    return PanelDataset(
        counties=tuple(fips_codes(n_counties)),
        dates=dates,
        target=rng.uniform(0, 50, (n_counties, n_days)),
        dynamic=np.stack([vacc, sinw], axis=-1),
        static=rng.uniform(0.05, 0.3, (n_counties, n_static)),
        static_names=tuple(f"s{j}" for j in range(n_static)),
    )


class CurvedModel(ForecastModel):
    """Nonlinear, strictly increasing in static feature 0; uses every input block."""

    kind = "curved"

    def _predict(self, batch):
        s = batch.static[:, 0]
        level = np.log1p(batch.past_target.mean(axis=1)) + np.tanh(batch.past_dynamic[:, :, 0].sum(axis=1))
        steps = np.arange(1, self.horizon + 1)
        known = batch.known_future[:, self.lag:, 0] if self.n_known else 0.0
        return np.exp(3.0 * s)[:, None] * (1.0 + level[:, None] * steps / self.horizon) + 0.1 * known + s[:, None] ** 3

    def get_state(self):
        return {}, {}

    @classmethod
    def from_state(cls, config, params):
        raise NotImplementedError


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_panel(rng):
    return random_panel(rng, n_counties=4, n_days=40)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
