"""Export manifests: the same sectioned key = value grammar as run configs."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import BadManifest

AXIS_NAMES = ("step", "layer", "token", "height", "width")
REQUIRED_AXES = ("token", "height", "width")

_SCHEMA = {
    "source": {"path", "array"},
    "layout": {"axes"},
    "select": {"token", "token_strings"},
    "output": {"path"},
}
_REQUIRED = {
    ("source", "path"),
    ("layout", "axes"),
    ("select", "token"),
    ("output", "path"),
}


@dataclass(frozen=True)
class ExportManifest:
    sources: tuple[Path, ...]
    array_key: str | None
    axes: tuple[str, ...]
    token: str  # raw selector: an index or a name from token_strings
    token_strings: tuple[str, ...]
    output: Path

    def __post_init__(self):
        if not self.sources:
            raise BadManifest("need at least one source path")
        for name in self.axes:
            if name not in AXIS_NAMES:
                raise BadManifest(f"unknown axis {name!r}; choose from {AXIS_NAMES}")
        if len(set(self.axes)) != len(self.axes):
            raise BadManifest(f"axes listed twice: {self.axes}")
        for name in REQUIRED_AXES:
            if name not in self.axes:
                raise BadManifest(f"layout must include the {name} axis")


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def parse_manifest(path) -> ExportManifest:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise BadManifest(f"cannot read manifest {path}: {exc}") from exc
    except configparser.Error as exc:
        raise BadManifest(f"malformed manifest {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise BadManifest(f"unknown manifest section [{section}]")
        for key, _ in parser.items(section):
            if key not in _SCHEMA[section]:
                raise BadManifest(f"unknown key {key!r} in section [{section}]")
    for section, key in _REQUIRED:
        if not parser.has_option(section, key):
            raise BadManifest(f"manifest is missing [{section}] {key}")

    base = Path(path).resolve().parent

    def resolve(text: str) -> Path:
        p = Path(text)
        return p if p.is_absolute() else base / p

    return ExportManifest(
        sources=tuple(resolve(p) for p in _split_list(parser.get("source", "path"))),
        array_key=parser.get("source", "array", fallback=None),
        axes=_split_list(parser.get("layout", "axes")),
        token=parser.get("select", "token").strip(),
        token_strings=_split_list(parser.get("select", "token_strings", fallback="")),
        output=resolve(parser.get("output", "path")),
    )
