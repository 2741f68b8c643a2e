"""Projectivity of random relational structure models defined in small RBN, MLN and ProbLog dialects."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled model or world fixture, e.g. ``data_path("block.rbn")``."""
    return Path(str(resources.files("srlproj") / "data" / name))
