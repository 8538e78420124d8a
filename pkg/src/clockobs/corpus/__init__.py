"""Bundled verified-reversible machines."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..rtm import RtmSpec, parse_rtm_spec


def machine_names() -> list[str]:
    root = resources.files(__package__)
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".rtm"))


def path(name: str) -> Path:
    p = resources.files(__package__) / f"{name}.rtm"
    if not p.is_file():
        raise FileNotFoundError(f"no bundled machine named {name!r}")
    return Path(str(p))


def load(name: str) -> RtmSpec:
    return parse_rtm_spec(path(name).read_text(encoding="utf-8"), name=name)
