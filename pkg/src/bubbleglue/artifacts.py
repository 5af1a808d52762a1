"""Experiment configuration, schema validation and deterministic result files."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema

from .analysis import GridSpec
from .geometry import QuadratureSpec

__all__ = [
    "SchemaError",
    "ExperimentConfig",
    "SCHEMA_NAMES",
    "load_schema",
    "validate",
    "read_json",
    "dumps",
    "write_json",
    "artifact",
    "write_csv",
    "read_csv",
    "format_float",
]

SCHEMA_NAMES = ("bubble_type", "bubble_map", "necks", "sequence", "config", "artifact")
FORMAT_VERSION = 1


class SchemaError(ValueError):
    """An input or output document violates its schema."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files("bubbleglue").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: Any, name: str) -> None:
    """Raise :class:`SchemaError` with the JSON pointer of the first violation."""
    schema = load_schema(name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SchemaError(err.message, pointer)


def read_json(path: str | Path, schema: str | None = None) -> Any:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    if schema:
        validate(doc, schema)
    return doc


def _clean(obj: Any) -> Any:
    """Plain JSON types; complex numbers as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if hasattr(obj, "item"):
        return _clean(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj: Any, schema: str | None = None) -> None:
    doc = json.loads(dumps(obj))
    if schema:
        validate(doc, schema)
    Path(path).write_text(dumps(doc))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run; serialised into every artifact."""

    seed: int
    p: float = 3.0
    tol: float = 1e-8
    max_iter: int = 50
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    outputs: Mapping[str, str] = field(default_factory=dict)
    record_timing: bool = False

    def __post_init__(self) -> None:
        if not self.p > 2:
            raise ValueError(f"p must exceed 2, got {self.p}")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter at least 1")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "p": self.p,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "quadrature": self.quadrature.to_json(),
            "grid": self.grid.to_json(),
            "outputs": dict(self.outputs),
            "record_timing": self.record_timing,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ExperimentConfig":
        validate(doc, "config")
        q = doc.get("quadrature", {})
        g = doc.get("grid", {})
        return cls(
            seed=int(doc["seed"]),
            p=float(doc.get("p", 3.0)),
            tol=float(doc.get("tol", 1e-8)),
            max_iter=int(doc.get("max_iter", 50)),
            quadrature=QuadratureSpec(**q) if q else QuadratureSpec(),
            grid=GridSpec(**g) if g else GridSpec(),
            outputs=dict(doc.get("outputs", {})),
            record_timing=bool(doc.get("record_timing", False)),
        )

    def with_overrides(self, **kw) -> "ExperimentConfig":
        data = self.to_json()
        data.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.from_json(data)


def artifact(command: str, config: ExperimentConfig, result: Any) -> dict:
    return {"format_version": FORMAT_VERSION, "command": command, "config": config.to_json(), "result": result}


def format_float(x: Any) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return "" if x is None else str(x)


def write_csv(path: str | Path | None, rows: Iterable[Mapping], columns: Sequence[str], config: ExperimentConfig) -> str:
    """RFC 4180 CSV preceded by one ``# config: {...}`` line; floats at 17 significant digits."""
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config.to_json(), sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_float(r.get(c, "")) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, newline="")
    return text


def read_csv(source: str | Path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_csv`; numeric cells come back as ``float`` or ``int``."""
    if isinstance(source, Path) or "\n" not in str(source):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = str(source)
    lines = text.splitlines(keepends=True)
    config = {}
    if lines and lines[0].startswith("# config: "):
        config = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    rows = []
    for r in reader:
        out = {}
        for k, v in r.items():
            out[k] = _parse_cell(v)
        rows.append(out)
    return config, rows


def _parse_cell(v: str):
    if v == "":
        return ""
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v
