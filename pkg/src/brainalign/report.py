"""Evaluation report assembly and canonical serialization.

Two runs over identical inputs with identical seeds must produce
byte-identical reports, so serialization sorts keys, fixes float
formatting (repr round-trip), and leaves runtime out unless explicitly
requested.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path


def sha256_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _check_tree(value: object, where: str) -> None:
    if isinstance(value, dict):
        for key, sub in value.items():
            if not isinstance(key, str):
                raise TypeError(f"{where}: non-string key {key!r}")
            _check_tree(sub, f"{where}.{key}")
    elif isinstance(value, (list, tuple)):
        for i, sub in enumerate(value):
            _check_tree(sub, f"{where}[{i}]")
    elif isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError(f"{where}: non-finite float {value!r}")
    elif not isinstance(value, (str, int, bool, type(None))):
        raise TypeError(f"{where}: unserializable value of type {type(value).__name__}")


@dataclass
class EvalReport:
    """Versioned container for one CLI run's results."""

    tool: str
    version: str
    inputs: dict[str, str] = field(default_factory=dict)  # label -> sha256
    sections: dict[str, object] = field(default_factory=dict)
    runtime_seconds: float | None = None

    def add_input(self, label: str, path: str | Path) -> None:
        self.inputs[label] = sha256_digest(path)

    def add_section(self, name: str, payload: object) -> None:
        _check_tree(payload, name)
        self.sections[name] = payload

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "inputs": dict(sorted(self.inputs.items())),
            "sections": self.sections,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        """Flat `section,key,value` table carrying the same numbers as JSON.

        Scalar cells are rendered with json.dumps so float text is
        identical across both forms.
        """
        out = io.StringIO()
        out.write("section,key,value\n")

        def emit(section: str, prefix: str, value: object) -> None:
            if isinstance(value, dict):
                for key in sorted(value):
                    emit(section, f"{prefix}.{key}" if prefix else key, value[key])
            elif isinstance(value, (list, tuple)):
                for i, sub in enumerate(value):
                    emit(section, f"{prefix}[{i}]", sub)
            else:
                cell = json.dumps(value)
                if "," in cell or '"' in cell:
                    cell = '"' + cell.replace('"', '""') + '"'
                out.write(f"{section},{prefix},{cell}\n")

        emit("meta", "tool", self.tool)
        emit("meta", "version", self.version)
        emit("meta", "runtime_seconds", self.runtime_seconds)
        for label in sorted(self.inputs):
            emit("inputs", label, self.inputs[label])
        for name in sorted(self.sections):
            emit(name, "", self.sections[name])
        return out.getvalue()

    def render(self, form: str) -> str:
        if form == "json":
            return self.to_json()
        if form == "csv":
            return self.to_csv()
        raise ValueError(f"unknown report form {form!r}")
