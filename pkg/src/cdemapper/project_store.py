"""Persistence and lifecycle of mapping projects.

One directory per project holding an append-only JSONL event log (imports,
candidate snapshots, decisions) plus a compacted snapshot for human
inspection. State is always rebuilt by replaying events, so a killed
process loses nothing. Writes serialize through a per-project file lock;
readers need no coordination.
"""

from __future__ import annotations

import csv
import io
import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from filelock import FileLock

from .corpus import CdeRecord
from .elements import SourceElement, join_values, split_values
from .errors import DataError
from .llm.gateway import ValueMatch
from .pipeline import CandidateList

STATUSES = ("unmapped", "candidates_ready", "mapped", "no_match")
ORIGINS = ("auto_top1", "human_selected", "manual_search")

IMPORT_COLUMNS = ("name", "description", "values")
# The export's source columns re-import directly.
_HEADER_ALIASES = {"source_name": "name", "source_description": "description", "source_values": "values"}

EXPORT_COLUMNS = (
    "source_name",
    "source_description",
    "source_values",
    "target_tiny_id",
    "target_name",
    "target_collection",
    "target_detail_url",
    "origin",
    "value_mappings",
    "status",
)


class StoreError(DataError):
    """Project store failure: unknown project/element or invalid decision."""


class ImportFormatError(DataError):
    """The uploaded CSV is missing required headers."""


@dataclass
class ImportResult:
    elements: list[SourceElement]
    rejected_rows: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)


@dataclass
class MappingDecision:
    element_id: str
    selected_tiny_id: str | None  # None is an explicit no-match
    origin: str
    value_mappings: list[ValueMatch] = field(default_factory=list)
    decided_at: str = ""

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "selected_tiny_id": self.selected_tiny_id,
            "origin": self.origin,
            "value_mappings": [
                {"source_value": m.source_value, "matched_value": m.matched_value, "score": m.score}
                for m in self.value_mappings
            ],
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingDecision":
        return cls(
            element_id=d["element_id"],
            selected_tiny_id=d.get("selected_tiny_id"),
            origin=d.get("origin", "human_selected"),
            value_mappings=[
                ValueMatch(m["source_value"], m["matched_value"], m["score"])
                for m in d.get("value_mappings", [])
            ],
            decided_at=d.get("decided_at", ""),
        )


@dataclass
class ElementState:
    element: SourceElement
    status: str = "unmapped"
    last_candidates: CandidateList | None = None
    decision: MappingDecision | None = None
    history: list[MappingDecision] = field(default_factory=list)


@dataclass
class Project:
    project_id: str
    name: str
    created_at: str
    config: dict
    element_order: list[str] = field(default_factory=list)
    states: dict[str, ElementState] = field(default_factory=dict)

    def elements(self) -> list[ElementState]:
        return [self.states[eid] for eid in self.element_order]

    def status_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in STATUSES}
        for state in self.states.values():
            counts[state.status] += 1
        return counts


def import_source_csv(source: bytes | str | io.TextIOBase) -> ImportResult:
    """Parse a source dictionary CSV with columns name, description, values
    (values separated by ``|``). Rows with an empty name are rejected into
    the import report with their line numbers; unknown columns are kept as
    opaque extras and re-emitted on export."""
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    headers = [(_HEADER_ALIASES.get(h, h)) for h in (reader.fieldnames or [])]
    missing = [c for c in IMPORT_COLUMNS if c not in headers]
    if missing:
        raise ImportFormatError(
            f"CSV is missing required column(s) {missing}; found headers {reader.fieldnames}"
        )

    result = ImportResult(elements=[])
    n = 0
    for row in reader:
        normalized = {(_HEADER_ALIASES.get(k, k)): (v or "") for k, v in row.items() if k is not None}
        name = normalized.get("name", "").strip()
        if not name:
            result.rejected_rows.append((reader.line_num, "empty name"))
            continue
        n += 1
        extras = {
            k: v for k, v in normalized.items()
            if k not in IMPORT_COLUMNS and k not in EXPORT_COLUMNS and v
        }
        result.elements.append(
            SourceElement(
                element_id=f"e{n:04d}",
                name=name,
                description=normalized.get("description", ""),
                value_set=[v for v in split_values(normalized.get("values", "")) if v],
                extras=extras,
            )
        )
    return result


def render_export_csv(project: Project, records: Mapping[str, CdeRecord] | None = None) -> str:
    """Export rows for every element (unmapped ones with empty target
    columns). Re-importing the source columns reproduces the elements."""
    extra_keys: list[str] = []
    for state in project.elements():
        for k in state.element.extras:
            if k not in extra_keys:
                extra_keys.append(k)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(EXPORT_COLUMNS) + extra_keys)
    for state in project.elements():
        e = state.element
        target_id = target_name = target_collection = target_url = origin = ""
        pairs = ""
        decision = state.decision
        if decision is not None:
            origin = decision.origin
            if decision.selected_tiny_id is not None:
                target_id = decision.selected_tiny_id
                record = records.get(target_id) if records else None
                if record is not None:
                    target_name, target_collection, target_url = record.name, record.collection, record.detail_url
                pairs = join_values([f"{m.source_value}={m.matched_value}" for m in decision.value_mappings])
        writer.writerow(
            [
                e.name,
                e.description,
                join_values(e.value_set),
                target_id,
                target_name,
                target_collection,
                target_url,
                origin,
                pairs,
                state.status,
            ]
            + [e.extras.get(k, "") for k in extra_keys]
        )
    return buf.getvalue()


class ProjectStore:
    """Event-sourced store of mapping projects under a root directory."""

    def __init__(self, root: str | Path, records: Mapping[str, CdeRecord] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.records = records or {}

    # -- paths ---------------------------------------------------------------

    def _dir(self, project_id: str) -> Path:
        return self.root / project_id

    def _events_path(self, project_id: str) -> Path:
        return self._dir(project_id) / "events.jsonl"

    def _lock(self, project_id: str) -> FileLock:
        return FileLock(str(self._dir(project_id) / ".lock"))

    # -- event plumbing --------------------------------------------------------

    def _append(self, project_id: str, event_type: str, payload: dict) -> None:
        event = {"type": event_type, "at": time.strftime("%Y-%m-%dT%H:%M:%S"), **payload}
        with open(self._events_path(project_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _write_snapshot(self, project: Project) -> None:
        snapshot = {
            "project_id": project.project_id,
            "name": project.name,
            "created_at": project.created_at,
            "config": project.config,
            "status_counts": project.status_counts(),
            "elements": [
                {
                    "element_id": s.element.element_id,
                    "name": s.element.name,
                    "status": s.status,
                    "selected_tiny_id": s.decision.selected_tiny_id if s.decision else None,
                }
                for s in project.elements()
            ],
        }
        path = self._dir(project.project_id) / "snapshot.json"
        path.write_text(json.dumps(snapshot, ensure_ascii=False, indent=2), encoding="utf-8")

    def _replay(self, project_id: str) -> Project:
        path = self._events_path(project_id)
        if not path.exists():
            raise StoreError(f"unknown project: {project_id!r}")
        project: Project | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                event = json.loads(line)
                kind = event["type"]
                if kind == "project_created":
                    project = Project(
                        project_id=event["project_id"],
                        name=event["name"],
                        created_at=event["at"],
                        config=event.get("config", {}),
                    )
                elif project is None:
                    raise StoreError(f"corrupt event log for {project_id!r}: no project_created first")
                elif kind == "elements_imported":
                    for d in event["elements"]:
                        element = SourceElement(
                            element_id=d["element_id"],
                            name=d["name"],
                            description=d.get("description", ""),
                            value_set=list(d.get("value_set", [])),
                            extras=dict(d.get("extras", {})),
                        )
                        project.element_order.append(element.element_id)
                        project.states[element.element_id] = ElementState(element=element)
                elif kind == "candidates_ready":
                    state = project.states[event["element_id"]]
                    state.last_candidates = CandidateList.from_dict(event["candidates"])
                    state.status = "candidates_ready"
                elif kind == "decision":
                    state = project.states[event["element_id"]]
                    decision = MappingDecision.from_dict(event)
                    state.history.append(decision)
                    state.decision = decision
                    state.status = "mapped" if decision.selected_tiny_id is not None else "no_match"
        if project is None:
            raise StoreError(f"corrupt event log for {project_id!r}: empty")
        return project

    # -- public API -------------------------------------------------------------

    def create_project(self, name: str, config: dict, elements: list[SourceElement]) -> Project:
        project_id = uuid.uuid4().hex[:12]
        self._dir(project_id).mkdir(parents=True)
        with self._lock(project_id):
            self._append(project_id, "project_created", {"project_id": project_id, "name": name, "config": config})
            self._append(
                project_id,
                "elements_imported",
                {
                    "elements": [
                        {
                            "element_id": e.element_id,
                            "name": e.name,
                            "description": e.description,
                            "value_set": e.value_set,
                            "extras": e.extras,
                        }
                        for e in elements
                    ]
                },
            )
            project = self._replay(project_id)
            self._write_snapshot(project)
        return project

    def list_projects(self) -> list[Project]:
        out = []
        for entry in sorted(self.root.iterdir()):
            if entry.is_dir() and (entry / "events.jsonl").exists():
                out.append(self._replay(entry.name))
        return out

    def get_project(self, project_id: str) -> Project:
        return self._replay(project_id)

    def record_candidates(self, project_id: str, candidates: CandidateList) -> Project:
        with self._lock(project_id):
            project = self._replay(project_id)
            if candidates.element_id not in project.states:
                raise StoreError(f"unknown element: {candidates.element_id!r}")
            self._append(project_id, "candidates_ready",
                         {"element_id": candidates.element_id, "candidates": candidates.to_dict()})
            project = self._replay(project_id)
            self._write_snapshot(project)
        return project

    def record_decision(self, project_id: str, decision: MappingDecision) -> str:
        """Persist a decision atomically and return the element's new status.

        A selection must name a CDE from the element's last candidate list
        unless it originated from manual search; the id must resolve in the
        corpus when one is attached to the store.
        """
        if decision.origin not in ORIGINS:
            raise StoreError(f"unknown origin {decision.origin!r}; expected one of {ORIGINS}")
        if decision.selected_tiny_id is None and decision.value_mappings:
            raise StoreError("value_mappings require a selected target")
        with self._lock(project_id):
            project = self._replay(project_id)
            state = project.states.get(decision.element_id)
            if state is None:
                raise StoreError(f"unknown element: {decision.element_id!r}")
            if decision.selected_tiny_id is not None:
                if self.records and decision.selected_tiny_id not in self.records:
                    raise StoreError(f"selected id {decision.selected_tiny_id!r} is not in the corpus")
                if decision.origin != "manual_search":
                    shown = {c.tiny_id for c in state.last_candidates.candidates} if state.last_candidates else set()
                    if decision.selected_tiny_id not in shown:
                        raise StoreError(
                            f"selected id {decision.selected_tiny_id!r} was not among the element's "
                            "last candidates; use origin manual_search for manual picks"
                        )
            # Retry-safe: an identical payload does not grow the history.
            previous = state.decision
            if previous is not None and (
                previous.selected_tiny_id == decision.selected_tiny_id
                and previous.origin == decision.origin
                and previous.value_mappings == decision.value_mappings
            ):
                return state.status
            if not decision.decided_at:
                decision.decided_at = time.strftime("%Y-%m-%dT%H:%M:%S")
            self._append(project_id, "decision", decision.to_dict())
            project = self._replay(project_id)
            self._write_snapshot(project)
        return project.states[decision.element_id].status

    def export_mappings(self, project_id: str) -> bytes:
        project = self._replay(project_id)
        return render_export_csv(project, self.records).encode("utf-8")
