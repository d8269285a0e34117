"""Canonical age bands."""

from __future__ import annotations

AGE_GROUPS: tuple[str, ...] = (
    "0-4",
    "5-17",
    "18-29",
    "30-39",
    "40-49",
    "50-64",
    "65-74",
    "75+",
)

_ORDER = {label: i for i, label in enumerate(AGE_GROUPS)}


def is_age_group(label: str) -> bool:
    return label in _ORDER


def age_index(label: str) -> int:
    try:
        return _ORDER[label]
    except KeyError:
        raise KeyError(f"unknown age group {label!r}; expected one of {', '.join(AGE_GROUPS)}") from None


def lower_bound(label: str) -> int:
    return int(label.rstrip("+").split("-")[0])


def sort_groups(labels) -> list[str]:
    return sorted(labels, key=age_index)


def slug(label: str) -> str:
    """Filesystem-safe name: '18-29' -> '18-29', '75+' -> '75plus'."""
    return label.replace("+", "plus")
