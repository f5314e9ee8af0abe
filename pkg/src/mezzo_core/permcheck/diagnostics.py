"""Diagnostic records and their human and JSON renderings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

CODES = ("E-PARSE", "E-KIND", "E-MODE", "E-SUBTRACT", "E-RETURN",
         "E-IMMUT-WRITE", "E-INSTANTIATE", "W-DEADCODE")


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    col: int
    code: str
    message: str
    trace: tuple = field(default=())

    @property
    def is_error(self) -> bool:
        return self.code.startswith("E-")

    @property
    def severity(self) -> str:
        return "error" if self.is_error else "warning"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trace"] = list(self.trace)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostic":
        return cls(d["file"], int(d["line"]), int(d["col"]), d["code"],
                   d["message"], tuple(d.get("trace", ())))

    def format(self, color: bool = False) -> str:
        head = f"{self.severity}[{self.code}]"
        if color:
            head = ("\x1b[1;31m" if self.is_error else "\x1b[1;33m") + head + "\x1b[0m"
        out = f"{self.file}:{self.line}:{self.col}: {head}: {self.message}"
        for goal in self.trace:
            out += f"\n    while proving {goal}"
        return out


def to_json(diags) -> str:
    return json.dumps([d.to_dict() for d in diags], indent=2)


def from_json(text: str) -> list[Diagnostic]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["diagnostics"]
    return [Diagnostic.from_dict(d) for d in data]
