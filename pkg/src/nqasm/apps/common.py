"""Application directories: an ``app.json`` plus the listings it names."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError

__all__ = ["App", "DATA_DIR", "load_app", "read_program", "bundled_program"]

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@dataclass(frozen=True)
class App:
    path: Path
    data: dict

    @property
    def kind(self) -> str:
        return self.data["app"]

    @property
    def roles(self) -> dict:
        return self.data.get("roles", {})


def load_app(name_or_path: str | Path) -> App:
    """Load a bundled app by name (``teleport``, ``bqc``, ``epr``) or a directory."""
    path = Path(name_or_path)
    if not path.is_dir():
        path = DATA_DIR / "apps" / str(name_or_path)
    manifest = path / "app.json"
    if not manifest.is_file():
        raise ConfigError(f"{name_or_path}: no app.json found")
    data = json.loads(manifest.read_text())
    if "app" not in data:
        raise ConfigError(f"{manifest}: missing 'app' kind")
    return App(path, data)


def read_program(app: App, name: str) -> str:
    return (app.path / name).read_text()


def bundled_program(name: str) -> str:
    """Text of one of the bundled example listings, e.g. ``for_loop``."""
    return (DATA_DIR / "programs" / f"{name}.nqasm").read_text()
