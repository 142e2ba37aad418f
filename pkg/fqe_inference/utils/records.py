"""Record files: JSON models, comma-separated tables and values files.

Every file written here starts with provenance (a ``schema_version`` field in
JSON records, ``# key=value`` header lines in text files). Readers reject
unknown schema versions.
"""

import csv
import json
import logging
import os
from collections.abc import Iterable, Mapping
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from .. import __version__
from ..errors import ConfigurationError, MissingFileError, SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

ModelT = TypeVar("ModelT", bound=BaseModel)


def provenance(command: str, **extra: Any) -> dict[str, str]:
    """Provenance fields for a file header. Contains no timestamps, so reruns are bit-identical."""
    fields = {"tool": "fqe-inference", "version": __version__, "schema_version": str(SCHEMA_VERSION)}
    fields["command"] = command
    fields.update({key: str(value) for key, value in extra.items()})
    return fields


def require_file(path: str) -> str:
    if not os.path.exists(path):
        raise MissingFileError(f"file not found: {path}")
    return path


def ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_model(path: str, model: BaseModel) -> None:
    """Write a pydantic record as indented JSON."""
    ensure_parent(path)
    with open(path, "w") as f:
        f.write(model.model_dump_json(indent=2, by_alias=True))
        f.write("\n")


def read_model(path: str, model_type: type[ModelT]) -> ModelT:
    """Read a JSON record written by ``write_model``."""
    require_file(path)
    with open(path) as f:
        text = f.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path} is not valid JSON: {e}") from e
    version = raw.get("schema_version", SCHEMA_VERSION) if isinstance(raw, dict) else None
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        return model_type.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"{path} does not describe a valid {model_type.__name__}: {e}") from e


def write_header(f: Any, fields: Mapping[str, str]) -> None:
    for key, value in fields.items():
        f.write(f"# {key}={value}\n")


def read_header(lines: Iterable[str]) -> tuple[dict[str, str], list[str]]:
    """Split ``# key=value`` header lines from the body."""
    header: dict[str, str] = {}
    body: list[str] = []
    for line in lines:
        if not body and line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    return header, body


def check_schema(path: str, header: Mapping[str, str]) -> None:
    version = header.get("schema_version")
    if version != str(SCHEMA_VERSION):
        raise SchemaError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")


def format_value(value: Any) -> str:
    """Shortest round-tripping text for floats; empty for None; quoted when it holds a comma."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return str(value).lower()
    text = str(value)
    if "," in text or '"' in text:
        return '"' + text.replace('"', '""') + '"'
    return text


def write_table(
    path: str | None, columns: list[str], rows: Iterable[Mapping[str, Any]], header: Mapping[str, str]
) -> str:
    """Write a comma-separated table with a provenance header.

    Args:
        path: Output file, or None to only return the text.
        columns: Column order.
        rows: One mapping per row.
        header: Provenance fields.

    Returns:
        The written text.
    """
    lines = [f"# {key}={value}" for key, value in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(row.get(column)) for column in columns))
    text = "\n".join(lines) + "\n"
    if path is not None:
        ensure_parent(path)
        with open(path, "w") as f:
            f.write(text)
    return text


def read_table(path: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Read a table written by ``write_table``."""
    require_file(path)
    with open(path) as f:
        header, body = read_header(f.readlines())
    check_schema(path, header)
    reader = csv.DictReader(body)
    return header, list(reader)


def write_values(path: str, values: Iterable[float], header: Mapping[str, str]) -> None:
    """One real per line, in shortest round-trip form."""
    ensure_parent(path)
    with open(path, "w") as f:
        write_header(f, header)
        for value in values:
            f.write(f"{float(value)!r}\n")


def read_values(path: str) -> list[float]:
    require_file(path)
    with open(path) as f:
        header, body = read_header(f.readlines())
    check_schema(path, header)
    return [float(line) for line in body]
