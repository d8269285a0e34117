"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Relative paths are resolved
against the directory holding the config file. Recognised keys:

inputs
    cases, population, vaccination, ground_truth, age_cases, output_dir
splits (ISO dates)
    train_start, train_end, val_start, val_end, test_start, test_end
windows
    lag, horizon
model and training
    model (recurrent | linear), hidden_size, epochs, batch_size,
    learning_rate, patience, seed
sensitivity
    deltas (comma-separated), absolute (true | false), age_groups (comma-separated)
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from sensi.ages import AGE_GROUPS, is_age_group, sort_groups
from sensi.dataset import SplitConfig, WindowConfig
from sensi.errors import ConfigError, MissingInputError
from sensi.ingestion import default_ground_truth_path
from sensi.models.training import TrainConfig
from sensi.morris import MorrisConfig

PATH_KEYS = ("cases", "population", "vaccination", "ground_truth", "age_cases", "output_dir")
SPLIT_KEYS = ("train_start", "train_end", "val_start", "val_end", "test_start", "test_end")
INT_KEYS = ("lag", "horizon", "hidden_size", "epochs", "batch_size", "patience", "seed")
FLOAT_KEYS = ("learning_rate",)
OTHER_KEYS = ("model", "deltas", "absolute", "age_groups")
KNOWN_KEYS = frozenset(PATH_KEYS + SPLIT_KEYS + INT_KEYS + FLOAT_KEYS + OTHER_KEYS)
MODEL_KINDS = ("recurrent", "linear")


@dataclass(frozen=True)
class PipelineConfig:
    output_dir: Path
    cases: Path | None = None
    population: Path | None = None
    vaccination: Path | None = None
    ground_truth: Path = field(default_factory=default_ground_truth_path)
    age_cases: Path | None = None
    split: SplitConfig = field(default_factory=SplitConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    morris: MorrisConfig = field(default_factory=MorrisConfig)
    model: str = "recurrent"
    hidden_size: int = 64
    age_groups: tuple[str, ...] = AGE_GROUPS

    @property
    def seed(self) -> int:
        return self.train.seed

    def with_overrides(self, seed=None, absolute=None, age_group=None) -> "PipelineConfig":
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, seed=seed))
        if absolute:
            cfg = dataclasses.replace(cfg, morris=dataclasses.replace(cfg.morris, absolute=True))
        if age_group is not None:
            if not is_age_group(age_group):
                raise ConfigError(f"unknown age group {age_group!r}; expected one of {', '.join(AGE_GROUPS)}")
            cfg = dataclasses.replace(cfg, age_groups=(age_group,))
        return cfg

    def require(self, *keys):
        """Every named input must be configured and exist on disk."""
        for key in keys:
            path = getattr(self, key)
            if path is None:
                raise ConfigError(f"config key {key!r} is required for this command")
            if not Path(path).is_file():
                raise MissingInputError(f"{key} file not found: {path}")


def parse_lines(text: str, source="<config>") -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        out[key] = value
    return out


def _int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _bool(key, value):
    v = value.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be true or false, got {value!r}")


def from_mapping(values: dict[str, str], base_dir=".") -> PipelineConfig:
    base = Path(base_dir)
    if "output_dir" not in values:
        raise ConfigError("config key 'output_dir' is required")
    kw = {}
    for key in PATH_KEYS:
        if key in values:
            p = Path(values[key])
            kw[key] = p if p.is_absolute() else base / p
    split_defaults = dataclasses.asdict(SplitConfig())
    split_kw = {k: values.get(k, split_defaults[k]) for k in SPLIT_KEYS}
    kw["split"] = SplitConfig(**split_kw)
    ints = {k: _int(k, values[k]) for k in INT_KEYS if k in values}
    kw["window"] = WindowConfig(lag=ints.get("lag", 13), horizon=ints.get("horizon", 15))
    train_kw = {k: ints[k] for k in ("epochs", "batch_size", "patience", "seed") if k in ints}
    if "learning_rate" in values:
        train_kw["learning_rate"] = _float("learning_rate", values["learning_rate"])
    kw["train"] = TrainConfig(**train_kw)
    if "hidden_size" in ints:
        if ints["hidden_size"] < 1:
            raise ConfigError("hidden_size must be positive")
        kw["hidden_size"] = ints["hidden_size"]
    morris_kw = {}
    if "deltas" in values:
        morris_kw["deltas"] = tuple(_float("deltas", v) for v in values["deltas"].split(",") if v.strip())
    if "absolute" in values:
        morris_kw["absolute"] = _bool("absolute", values["absolute"])
    kw["morris"] = MorrisConfig(**morris_kw)
    if "model" in values:
        if values["model"] not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {', '.join(MODEL_KINDS)}")
        kw["model"] = values["model"]
    if "age_groups" in values:
        groups = [g.strip() for g in values["age_groups"].split(",") if g.strip()]
        for g in groups:
            if not is_age_group(g):
                raise ConfigError(f"unknown age group {g!r} in age_groups")
        if len(set(groups)) != len(groups) or not groups:
            raise ConfigError("age_groups must list distinct age groups")
        kw["age_groups"] = tuple(sort_groups(groups))
    return PipelineConfig(**kw)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    return from_mapping(parse_lines(text, source=str(path)), base_dir=path.parent)
