"""Experiment configuration plumbing.

TOML config file -> dict, deep merge with flag overrides (flags win),
sha256 content hashes for report provenance, and a small TOML dumper
for the config round-trip (tomllib only reads).
"""

from __future__ import annotations

import hashlib
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]


class ConfigError(ValueError):
    pass


def load_toml(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {p}: {exc}") from exc


def merge(base: dict, *overrides: dict) -> dict:
    """Deep merge; later dicts win, None values are skipped."""
    out = dict(base)
    for layer in overrides:
        for key, val in layer.items():
            if val is None:
                continue
            if isinstance(val, dict) and isinstance(out.get(key), dict):
                out[key] = merge(out[key], val)
            else:
                out[key] = val
    return out


def content_hash(path: str | Path) -> str:
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise ConfigError(f"cannot write {type(value).__name__} to TOML")


def dump_toml(data: dict) -> str:
    """Write a dict of scalars and one level of sections as TOML."""
    lines: list[str] = []
    sections: list[tuple[str, dict]] = []
    for key, value in data.items():
        if isinstance(value, dict):
            sections.append((key, value))
        else:
            lines.append(f"{key} = {_format_value(value)}")
    for name, body in sections:
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        for key, value in body.items():
            if isinstance(value, dict):
                raise ConfigError("nested sections beyond one level unsupported")
            lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
