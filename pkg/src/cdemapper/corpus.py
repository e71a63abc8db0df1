"""Loading, validation, and preprocessing of the CDE corpus export.

The corpus arrives as a single JSON export file (see ``load_corpus`` for the
shape). Records that violate their invariants are collected into a rejection
report instead of being silently dropped; a duplicated identifier aborts the
load because every downstream artifact keys on it.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

from .errors import DataError

# Field names of the lexical index, in canonical order. Scoring iterates
# fields in this order, so it is part of the scoring contract.
FIELD_NAMES = (
    "name",
    "designations",
    "question_texts",
    "definition",
    "permissible_values",
    "collection",
)


class CorpusParseError(DataError):
    """The export stream is not well-formed JSON of the documented shape."""

    def __init__(self, message: str, *, line: int | None = None, pos: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, byte {pos})"
        super().__init__(message)
        self.line = line
        self.pos = pos


class DuplicateIdError(DataError):
    """Two corpus records share a tiny_id."""

    def __init__(self, tiny_id: str):
        super().__init__(f"duplicate tiny_id in corpus: {tiny_id!r}")
        self.tiny_id = tiny_id


@dataclass(frozen=True)
class PermissibleValue:
    """One allowed response of a CDE."""

    value_name: str
    code: str | None = None
    code_system: str | None = None


@dataclass(frozen=True)
class CdeRecord:
    """One NIH Common Data Element."""

    tiny_id: str
    name: str
    collection: str
    definition: str = ""
    designations: tuple[str, ...] = ()
    question_texts: tuple[str, ...] = ()
    permissible_values: tuple[PermissibleValue, ...] = ()
    detail_url: str = ""


@dataclass(frozen=True)
class IndexableDocument:
    """A preprocessed CDE ready for indexing.

    ``fielded_text`` has an entry for every name in ``FIELD_NAMES`` (empty
    string allowed). ``embedding_text`` combines name, definition, and value
    names, newline-joined with empty segments omitted.
    """

    tiny_id: str
    fielded_text: dict[str, str]
    embedding_text: str


@dataclass
class RejectedRecord:
    """A record that failed its invariants, with the reasons."""

    position: int  # zero-based index in the export array
    tiny_id: str
    reasons: list[str]


@dataclass
class CorpusLoadResult:
    """Accepted records plus the rejection report of a load."""

    records: list[CdeRecord]
    rejected: list[RejectedRecord] = field(default_factory=list)

    @property
    def collections(self) -> set[str]:
        return {r.collection for r in self.records}


def _string_list(value: object) -> tuple[str, ...]:
    if not isinstance(value, list):
        return ()
    return tuple(str(v) for v in value if isinstance(v, str) and v)


def _parse_record(obj: dict) -> tuple[CdeRecord, list[str]]:
    reasons: list[str] = []
    tiny_id = obj.get("tinyId")
    name = obj.get("name")
    collection = obj.get("collection")
    if not isinstance(tiny_id, str) or not tiny_id:
        reasons.append("missing or empty tinyId")
        tiny_id = ""
    if not isinstance(name, str) or not name:
        reasons.append("missing or empty name")
        name = ""
    if not isinstance(collection, str) or not collection:
        reasons.append("missing or empty collection")
        collection = ""

    values = []
    for pv in obj.get("permissibleValues") or []:
        if not isinstance(pv, dict):
            reasons.append("permissibleValues entry is not an object")
            continue
        value_name = pv.get("valueName")
        if not isinstance(value_name, str) or not value_name:
            reasons.append("permissible value with empty valueName")
            continue
        values.append(
            PermissibleValue(
                value_name=value_name,
                code=pv.get("code") if isinstance(pv.get("code"), str) else None,
                code_system=pv.get("codeSystem") if isinstance(pv.get("codeSystem"), str) else None,
            )
        )

    record = CdeRecord(
        tiny_id=tiny_id,
        name=name,
        collection=collection,
        definition=obj.get("definition") if isinstance(obj.get("definition"), str) else "",
        designations=_string_list(obj.get("designations")),
        question_texts=_string_list(obj.get("questionTexts")),
        permissible_values=tuple(values),
        detail_url=obj.get("detailUrl") if isinstance(obj.get("detailUrl"), str) else "",
    )
    return record, reasons


def load_corpus(source: bytes | io.IOBase, format: str = "json-export") -> CorpusLoadResult:
    """Load a corpus export stream.

    Records failing invariants go to the rejection report; a duplicate
    tiny_id raises :class:`DuplicateIdError`; a malformed stream raises
    :class:`CorpusParseError` with the position.
    """
    if format != "json-export":
        raise DataError(f"unsupported corpus format: {format!r}")
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(exc.msg, line=exc.lineno, pos=exc.pos) from exc
    if not isinstance(data, list):
        raise CorpusParseError("expected a top-level JSON array of CDE records")

    result = CorpusLoadResult(records=[])
    seen: set[str] = set()
    for i, obj in enumerate(data):
        if not isinstance(obj, dict):
            result.rejected.append(RejectedRecord(i, "", ["entry is not an object"]))
            continue
        record, reasons = _parse_record(obj)
        if reasons:
            result.rejected.append(RejectedRecord(i, record.tiny_id, reasons))
            continue
        if record.tiny_id in seen:
            raise DuplicateIdError(record.tiny_id)
        seen.add(record.tiny_id)
        result.records.append(record)
    return result


def serialize_corpus(records: list[CdeRecord]) -> bytes:
    """Write records back to the documented export shape (load round-trips)."""
    out = []
    for r in records:
        out.append(
            {
                "tinyId": r.tiny_id,
                "name": r.name,
                "designations": list(r.designations),
                "questionTexts": list(r.question_texts),
                "definition": r.definition,
                "collection": r.collection,
                "permissibleValues": [
                    {
                        "valueName": pv.value_name,
                        **({"code": pv.code} if pv.code is not None else {}),
                        **({"codeSystem": pv.code_system} if pv.code_system is not None else {}),
                    }
                    for pv in r.permissible_values
                ],
                "detailUrl": r.detail_url,
            }
        )
    return json.dumps(out, ensure_ascii=False, indent=1).encode("utf-8")


def preprocess(record: CdeRecord) -> IndexableDocument:
    """Turn a valid record into an indexable document.

    Each field's text is the whitespace-joined concatenation of its source
    strings; the embedding text is name, definition, and value names joined
    by single newlines with empty segments omitted.
    """
    fielded = {
        "name": record.name,
        "designations": " ".join(record.designations),
        "question_texts": " ".join(record.question_texts),
        "definition": record.definition,
        "permissible_values": " ".join(pv.value_name for pv in record.permissible_values),
        "collection": record.collection,
    }
    segments = [record.name, record.definition]
    segments.extend(pv.value_name for pv in record.permissible_values)
    embedding_text = "\n".join(s for s in segments if s)
    return IndexableDocument(tiny_id=record.tiny_id, fielded_text=fielded, embedding_text=embedding_text)
