"""The rectangular county x day panel every model and analysis works on."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from sensi.errors import DataValidationError, MissingInputError, ShapeError
from sensi.outputs import atomic_write_text

KNOWN_FUTURE_CHANNELS = frozenset({"sin_weekly"})


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Aligned target, dynamic and static arrays for ``C`` counties over ``T`` days.

    ``target`` is [C, T] daily new cases, ``dynamic`` is [C, T, D] with channel
    names in ``dynamic_names`` and ``static`` is [C, K] with names in
    ``static_names``. Channels listed in ``KNOWN_FUTURE_CHANNELS`` are treated
    as known in advance; the rest are past-observed. Arrays are read-only.
    """

    counties: tuple[str, ...]
    dates: np.ndarray
    target: np.ndarray
    dynamic: np.ndarray
    static: np.ndarray
    dynamic_names: tuple[str, ...] = ("vaccination", "sin_weekly")
    static_names: tuple[str, ...] = ("share",)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "counties", tuple(str(c) for c in self.counties))
        set_(self, "dates", _frozen(self.dates, "datetime64[D]"))
        set_(self, "target", _frozen(self.target))
        set_(self, "dynamic", _frozen(self.dynamic))
        set_(self, "static", _frozen(self.static))
        set_(self, "dynamic_names", tuple(self.dynamic_names))
        set_(self, "static_names", tuple(self.static_names))
        self._validate()

    def _validate(self):
        C, T = len(self.counties), len(self.dates)
        if self.target.shape != (C, T):
            raise ShapeError(f"target shape {self.target.shape} != ({C}, {T})")
        if self.dynamic.ndim != 3 or self.dynamic.shape[:2] != (C, T):
            raise ShapeError(f"dynamic shape {self.dynamic.shape} incompatible with ({C}, {T}, D)")
        if self.dynamic.shape[2] != len(self.dynamic_names):
            raise ShapeError("dynamic channel count does not match dynamic_names")
        if self.static.ndim != 2 or self.static.shape != (C, len(self.static_names)):
            raise ShapeError(f"static shape {self.static.shape} != ({C}, {len(self.static_names)})")
        if len(set(self.counties)) != C:
            raise DataValidationError("duplicate county in panel")
        if T > 1 and np.any(np.diff(self.dates).astype(np.int64) != 1):
            raise DataValidationError("panel dates must increase by exactly one day")
        for name, arr in (("target", self.target), ("dynamic", self.dynamic), ("static", self.static)):
            if not np.all(np.isfinite(arr)):
                raise DataValidationError(f"panel {name} has missing or non-finite cells")

    @property
    def n_counties(self) -> int:
        return len(self.counties)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def observed_channels(self) -> list[int]:
        return [j for j, n in enumerate(self.dynamic_names) if n not in KNOWN_FUTURE_CHANNELS]

    @property
    def known_channels(self) -> list[int]:
        return [j for j, n in enumerate(self.dynamic_names) if n in KNOWN_FUTURE_CHANNELS]

    def with_static(self, static) -> "PanelDataset":
        return replace(self, static=static)

    def slice_days(self, start: int, stop: int) -> "PanelDataset":
        return replace(
            self,
            dates=self.dates[start:stop],
            target=self.target[:, start:stop],
            dynamic=self.dynamic[:, start:stop],
        )

    def equals(self, other: "PanelDataset") -> bool:
        return (
            self.counties == other.counties
            and self.dynamic_names == other.dynamic_names
            and self.static_names == other.static_names
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.target, other.target)
            and np.array_equal(self.dynamic, other.dynamic)
            and np.array_equal(self.static, other.static)
        )


# Export format: one CSV per array, counties as rows and dates as columns.
# Floats are written with repr() so a re-read is bit-exact.

def _matrix_text(counties, dates, values) -> str:
    lines = ["fips," + ",".join(str(d) for d in dates)]
    for fips, row in zip(counties, values):
        lines.append(fips + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def export_panel(panel: PanelDataset, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dates = [str(d) for d in panel.dates]
    atomic_write_text(directory / "dates.csv", "date\n" + "".join(d + "\n" for d in dates))
    atomic_write_text(directory / "counties.csv", "fips\n" + "".join(c + "\n" for c in panel.counties))
    atomic_write_text(
        directory / "channels.csv",
        "name,kind\n"
        + "".join(
            f"{n},{'known' if n in KNOWN_FUTURE_CHANNELS else 'observed'}\n" for n in panel.dynamic_names
        ),
    )
    atomic_write_text(directory / "target.csv", _matrix_text(panel.counties, dates, panel.target))
    for j, name in enumerate(panel.dynamic_names):
        atomic_write_text(
            directory / f"dynamic_{name}.csv", _matrix_text(panel.counties, dates, panel.dynamic[:, :, j])
        )
    static_lines = ["fips," + ",".join(panel.static_names)]
    for fips, row in zip(panel.counties, panel.static):
        static_lines.append(fips + "," + ",".join(repr(float(v)) for v in row))
    atomic_write_text(directory / "static.csv", "\n".join(static_lines) + "\n")
    return directory


def _read_rows(path: Path) -> list[list[str]]:
    if not path.exists():
        raise MissingInputError(f"panel file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row]


def _read_matrix(path: Path, counties, dates) -> np.ndarray:
    rows = _read_rows(path)
    header = rows[0]
    if header[1:] != dates:
        raise DataValidationError(f"{path}: date columns do not match dates.csv")
    if [r[0] for r in rows[1:]] != list(counties):
        raise DataValidationError(f"{path}: county rows do not match counties.csv")
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64).reshape(
        len(counties), len(dates)
    )


def import_panel(directory) -> PanelDataset:
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingInputError(f"panel directory not found: {directory}")
    dates = [r[0] for r in _read_rows(directory / "dates.csv")[1:]]
    counties = [r[0] for r in _read_rows(directory / "counties.csv")[1:]]
    channels = [r[0] for r in _read_rows(directory / "channels.csv")[1:]]
    target = _read_matrix(directory / "target.csv", counties, dates)
    dynamic = np.stack(
        [_read_matrix(directory / f"dynamic_{name}.csv", counties, dates) for name in channels], axis=-1
    ) if channels else np.zeros((len(counties), len(dates), 0))
    static_rows = _read_rows(directory / "static.csv")
    if [r[0] for r in static_rows[1:]] != counties:
        raise DataValidationError(f"{directory / 'static.csv'}: county rows do not match counties.csv")
    static = np.array([[float(v) for v in r[1:]] for r in static_rows[1:]], dtype=np.float64)
    static = static.reshape(len(counties), len(static_rows[0]) - 1)
    return PanelDataset(
        counties=tuple(counties),
        dates=np.array(dates, dtype="datetime64[D]"),
        target=target,
        dynamic=dynamic,
        static=static,
        dynamic_names=tuple(channels),
        static_names=tuple(static_rows[0][1:]),
    )


def panel_exists(directory) -> bool:
    return os.path.isfile(os.path.join(directory, "target.csv"))
