"""Paths to the bundled four-program dataset shipped with the package."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

PROGRAM_FILES = ("taiko.txt", "mantle.txt", "arbitrum-stip.txt", "optimism.txt")


def _data_root() -> Path:
    return Path(str(files("gmi").joinpath("data")))


def bundled_program_paths() -> list[Path]:
    root = _data_root() / "programs"
    return [root / name for name in PROGRAM_FILES]


def bundled_category_table_path() -> Path:
    return _data_root() / "category_scores.txt"
