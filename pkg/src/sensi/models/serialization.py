"""Model snapshot files.

A snapshot is an uncompressed ``.npz`` (zip of ``.npy`` arrays):

* ``meta`` -- uint8 array holding UTF-8 JSON: ``format`` ("sensi-model"),
  ``version``, ``kind`` ("recurrent" or "linear"), ``config`` (lag, horizon,
  static/dynamic sizes, hidden size, scaler statistics) and ``param_names``
  in parameter order.
* ``param.<name>`` -- one float64 array per parameter.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from sensi.errors import MissingInputError, ModelFormatError, ShapeError
from sensi.models.base import ForecastModel
from sensi.models.linear import LinearBaseline
from sensi.models.recurrent import RecurrentForecaster
from sensi.outputs import atomic_write_bytes

FORMAT = "sensi-model"
VERSION = 1
KINDS = {cls.kind: cls for cls in (RecurrentForecaster, LinearBaseline)}


def save_model(model: ForecastModel, path) -> Path:
    config, params = model.get_state()
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "config": config,
        "param_names": list(params),
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)}
    for name, value in params.items():
        arrays[f"param.{name}"] = np.asarray(value, dtype=np.float64)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return atomic_write_bytes(path, buf.getvalue())


def load_model(path, lag: int | None = None, horizon: int | None = None) -> ForecastModel:
    """Read a snapshot; if ``lag``/``horizon`` are given they must match the stored model."""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"model snapshot not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            if meta.get("format") != FORMAT:
                raise ModelFormatError(f"{path}: not a {FORMAT} file")
            if meta.get("version") != VERSION:
                raise ModelFormatError(f"{path}: snapshot version {meta.get('version')} != supported {VERSION}")
            params = {name: data[f"param.{name}"] for name in meta["param_names"]}
    except ModelFormatError:
        raise
    except (zipfile.BadZipFile, KeyError, ValueError, EOFError, OSError) as exc:
        raise ModelFormatError(f"{path}: unreadable model snapshot ({exc})") from None
    cls = KINDS.get(meta["kind"])
    if cls is None:
        raise ModelFormatError(f"{path}: unknown model kind {meta['kind']!r}")
    model = cls.from_state(meta["config"], params)
    if lag is not None and model.lag != lag or horizon is not None and model.horizon != horizon:
        raise ShapeError(
            f"{path}: snapshot has lag={model.lag}, horizon={model.horizon}; configured lag={lag}, horizon={horizon}"
        )
    return model
