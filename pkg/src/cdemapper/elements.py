"""Local source data elements awaiting normalization."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SourceElement:
    """One local data element: name, description, raw value set."""

    element_id: str
    name: str
    description: str = ""
    value_set: list[str] = field(default_factory=list)
    extras: dict[str, str] = field(default_factory=dict)  # unknown CSV columns, preserved opaquely


def join_values(values: list[str]) -> str:
    """Join a raw value list with ``|``, backslash-escaping literal pipes.

    Inverse of :func:`split_values` for lists of non-empty strings (an empty
    cell and a lone empty value are indistinguishable, so value sets never
    carry empty strings).
    """
    return "|".join(v.replace("\\", "\\\\").replace("|", "\\|") for v in values)


def split_values(cell: str) -> list[str]:
    """Inverse of :func:`join_values`. An empty cell is an empty list."""
    if not cell:
        return []
    values: list[str] = []
    current: list[str] = []
    escaped = False
    for ch in cell:
        if escaped:
            current.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == "|":
            values.append("".join(current))
            current = []
        else:
            current.append(ch)
    if escaped:
        current.append("\\")
    values.append("".join(current))
    return values
