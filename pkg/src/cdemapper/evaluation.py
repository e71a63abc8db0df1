"""Gold-standard loading, mapping-setting classification, Acc@N and coverage
computation, and benchmark reports across pipeline configurations.

Acc@N counts an entry as a hit when any accepted target appears among the
first N candidates (the weakest defensible reading for one-to-many entries;
flagged in the report header). Re-ranking promotes a single candidate, so
Acc@5/10 are not applicable for rerank presets and render as "-".
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path

from .elements import SourceElement, split_values
from .errors import DataError
from .index.persist import IndexBundle
from .llm.gateway import LlmGateway
from .pipeline import CandidateList, PipelineConfig, preset_config, recommend

logger = logging.getLogger(__name__)

GOLD_COLUMNS = ("dataset", "source_name", "source_description", "source_values", "accepted_target_ids")

ANY_HIT_NOTE = "one-to-many entries count as a hit when any accepted target is retrieved"


class MappingSetting(Enum):
    ONE_TO_ONE = "1 vs 1"
    MANY_TO_ONE = "M vs 1"
    ONE_TO_MANY = "1 vs M"


SETTING_ORDER = (MappingSetting.ONE_TO_ONE, MappingSetting.MANY_TO_ONE, MappingSetting.ONE_TO_MANY)


@dataclass(frozen=True)
class GoldEntry:
    source: SourceElement
    accepted_targets: frozenset[str]
    dataset_name: str


@dataclass
class DatasetSpec:
    """One evaluation dataset: its gold entries, target-collection filter,
    and dictionary size for coverage (None means not applicable)."""

    name: str
    entries: list[GoldEntry]
    collections: frozenset[str] | None = None
    total_elements: int | None = None


def load_gold_csv(source: str | Path | io.TextIOBase) -> list[GoldEntry]:
    """Load the normalized gold CSV (dataset, source_name, source_description,
    source_values, accepted_target_ids with ';' between ids)."""
    if isinstance(source, (str, Path)):
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        fh, close = source, False
    try:
        reader = csv.DictReader(fh)
        missing = [c for c in GOLD_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"gold CSV is missing columns {missing}; found {reader.fieldnames}")
        entries: list[GoldEntry] = []
        counters: dict[str, int] = {}
        for row in reader:
            dataset = (row["dataset"] or "").strip()
            name = (row["source_name"] or "").strip()
            targets = frozenset(t.strip() for t in (row["accepted_target_ids"] or "").split(";") if t.strip())
            if not dataset or not name:
                raise DataError(f"gold CSV row {reader.line_num}: dataset and source_name are required")
            if not targets:
                raise DataError(f"gold CSV row {reader.line_num}: accepted_target_ids must be non-empty")
            counters[dataset] = counters.get(dataset, 0) + 1
            element = SourceElement(
                element_id=f"{dataset}:{counters[dataset]:04d}",
                name=name,
                description=(row["source_description"] or "").strip(),
                value_set=split_values(row["source_values"] or ""),
            )
            entries.append(GoldEntry(source=element, accepted_targets=targets, dataset_name=dataset))
        return entries
    finally:
        if close:
            fh.close()


def validate_gold(entries: list[GoldEntry], bundle: IndexBundle) -> None:
    """Every accepted target must resolve in the corpus."""
    unknown = sorted({t for e in entries for t in e.accepted_targets if t not in bundle.records})
    if unknown:
        raise DataError(f"gold targets not present in the corpus: {unknown[:10]}" +
                        (f" (+{len(unknown) - 10} more)" if len(unknown) > 10 else ""))


def group_datasets(
    entries: list[GoldEntry],
    manifest: dict | None = None,
) -> list[DatasetSpec]:
    """Group gold entries into DatasetSpecs, applying an optional manifest
    ({"datasets": [{"name", "collections", "total_elements"}]}) for
    per-dataset collection filters and dictionary sizes."""
    by_name: dict[str, list[GoldEntry]] = {}
    order: list[str] = []
    for e in entries:
        if e.dataset_name not in by_name:
            by_name[e.dataset_name] = []
            order.append(e.dataset_name)
        by_name[e.dataset_name].append(e)

    manifest_entries = {d["name"]: d for d in (manifest or {}).get("datasets", [])}
    manifest_order = [d["name"] for d in (manifest or {}).get("datasets", []) if d["name"] in by_name]
    names = manifest_order + [n for n in order if n not in manifest_order]

    specs = []
    for name in names:
        m = manifest_entries.get(name, {})
        collections = frozenset(m["collections"]) if m.get("collections") else None
        specs.append(
            DatasetSpec(
                name=name,
                entries=by_name[name],
                collections=collections,
                total_elements=m.get("total_elements"),
            )
        )
    return specs


def classify_settings(gold: list[GoldEntry]) -> dict[str, MappingSetting]:
    """Classify each entry (keyed by element_id) within its dataset.

    One-to-many when the entry accepts several targets (source-side
    multiplicity wins; logged when its targets are also shared); many-to-one
    when its single target is shared by at least two source elements.
    """
    sources_per_target: dict[str, set[str]] = {}
    for e in gold:
        for t in e.accepted_targets:
            sources_per_target.setdefault(t, set()).add(e.source.element_id)

    out: dict[str, MappingSetting] = {}
    for e in gold:
        if len(e.accepted_targets) > 1:
            if all(len(sources_per_target[t]) >= 2 for t in e.accepted_targets):
                logger.info(
                    "entry %s is ambiguous (multiple targets, each shared); classified as %s",
                    e.source.element_id, MappingSetting.ONE_TO_MANY.value,
                )
            out[e.source.element_id] = MappingSetting.ONE_TO_MANY
        else:
            (target,) = e.accepted_targets
            if len(sources_per_target[target]) >= 2:
                out[e.source.element_id] = MappingSetting.MANY_TO_ONE
            else:
                out[e.source.element_id] = MappingSetting.ONE_TO_ONE
    return out


def _pct(hits: int, total: int) -> float:
    value = Decimal(hits) * 100 / Decimal(total)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def hit_rank(candidates: CandidateList, accepted: frozenset[str]) -> int | None:
    for c in candidates.candidates:
        if c.tiny_id in accepted:
            return c.rank
    return None


def acc_at_n(predictions: dict[str, CandidateList], gold: list[GoldEntry], n: int) -> float:
    """Percentage of entries whose accepted target set intersects the first
    n candidates; two decimals, half-up. Missing predictions are misses."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if not gold:
        raise DataError("acc_at_n needs at least one gold entry")
    hits = 0
    for e in gold:
        pred = predictions.get(e.source.element_id)
        if pred is None:
            logger.warning("no prediction for gold entry %s; counted as a miss", e.source.element_id)
            continue
        rank = hit_rank(pred, e.accepted_targets)
        if rank is not None and rank <= n:
            hits += 1
    return _pct(hits, len(gold))


def coverage(total_elements: int, mapped_entries: int) -> float:
    """100 * mapped/total, two decimals, half-up."""
    if total_elements <= 0:
        raise DataError(f"total_elements must be positive, got {total_elements}")
    if mapped_entries < 0 or mapped_entries > total_elements:
        raise DataError("mapped_entries must be in [0, total_elements]")
    return _pct(mapped_entries, total_elements)


@dataclass
class ReportRow:
    dataset: str
    setting: MappingSetting
    entry_count: int
    preset: str
    acc_at_1: float | None
    acc_at_5: float | None
    acc_at_10: float | None
    degraded: bool = False


@dataclass
class CoverageRow:
    dataset: str
    total_elements: int | None
    mapped_elements: int
    rate: float | None  # None renders as "not applicable"


@dataclass
class EvaluationReport:
    rows: list[ReportRow] = field(default_factory=list)
    coverage_rows: list[CoverageRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=lambda: [ANY_HIT_NOTE])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dataset", "category", "entry_count", "method", "acc_at_1", "acc_at_5", "acc_at_10", "degraded"])
        for r in self.rows:
            writer.writerow([
                r.dataset,
                r.setting.value,
                r.entry_count,
                r.preset,
                _fmt(r.acc_at_1),
                _fmt(r.acc_at_5),
                _fmt(r.acc_at_10),
                "yes" if r.degraded else "no",
            ])
        if self.coverage_rows:
            writer.writerow([])
            writer.writerow(["dataset", "total_elements", "mapped_elements", "coverage_rate"])
            for c in self.coverage_rows:
                writer.writerow([
                    c.dataset,
                    c.total_elements if c.total_elements is not None else "-",
                    c.mapped_elements,
                    _fmt(c.rate) if c.rate is not None else "not applicable",
                ])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = []
        for note in self.notes:
            lines.append(f"# {note}")
        header = f"{'Datasets':<12}{'Category (numbers)':<20}{'Method':<16}{'Acc@1 (%)':>10}{'Acc@5 (%)':>10}{'Acc@10 (%)':>11}"
        lines.append(header)
        lines.append("-" * len(header))
        last_dataset = last_category = None
        for r in self.rows:
            dataset = r.dataset if r.dataset != last_dataset else ""
            category = f"{r.setting.value} ({r.entry_count})"
            category_cell = category if (r.dataset, category) != (last_dataset, last_category) else ""
            method = r.preset + (" *" if r.degraded else "")
            lines.append(
                f"{dataset:<12}{category_cell:<20}{method:<16}"
                f"{_fmt(r.acc_at_1):>10}{_fmt(r.acc_at_5):>10}{_fmt(r.acc_at_10):>11}"
            )
            last_dataset, last_category = r.dataset, category
        if any(r.degraded for r in self.rows):
            lines.append("* degraded: the preset's LLM leg was unavailable; numbers reflect fallback behavior")
        if self.coverage_rows:
            lines.append("")
            lines.append(f"{'Datasets':<12}{'Elements':>9}{'Mapped':>8}  Coverage")
            for c in self.coverage_rows:
                total = str(c.total_elements) if c.total_elements is not None else "-"
                rate = f"{_fmt(c.rate)}%" if c.rate is not None else "not applicable"
                lines.append(f"{c.dataset:<12}{total:>9}{c.mapped_elements:>8}  {rate}")
        return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def run_benchmark(
    datasets: list[DatasetSpec],
    presets: list[str],
    bundle: IndexBundle,
    gateway: LlmGateway,
    base_config: PipelineConfig | None = None,
    audit_path: str | Path | None = None,
) -> EvaluationReport:
    """Run every preset over every dataset and assemble a Table-2-shaped
    report plus a JSONL audit trail (one record per entry and preset).

    A row is marked degraded instead of fabricated when the preset needs an
    LLM leg that is unavailable (no vector index, or a live gateway that
    fell back during the row).
    """
    report = EvaluationReport()
    if not presets:
        return report
    audit_fh = open(audit_path, "w", encoding="utf-8") if audit_path else None
    try:
        for spec in datasets:
            all_entries = spec.entries
            validate_gold(all_entries, bundle)
            settings = classify_settings(all_entries)

            predictions_by_preset: dict[str, dict[str, CandidateList]] = {}
            degraded_by_preset: dict[str, bool] = {}
            for preset in presets:
                degraded = False
                predictions: dict[str, CandidateList] = {}
                if "emb" in preset and bundle.vectors is None:
                    degraded = True
                else:
                    config = preset_config(preset, collections=spec.collections, base=base_config)
                    fallbacks_before = gateway.fallback_count
                    for e in all_entries:
                        predictions[e.source.element_id] = recommend(e.source, config, bundle, gateway)
                    if not gateway.is_mock and gateway.fallback_count > fallbacks_before:
                        degraded = True
                predictions_by_preset[preset] = predictions
                degraded_by_preset[preset] = degraded
                if audit_fh is not None:
                    for e in all_entries:
                        pred = predictions.get(e.source.element_id)
                        audit_fh.write(json.dumps({
                            "dataset": spec.name,
                            "preset": preset,
                            "element_id": e.source.element_id,
                            "setting": settings[e.source.element_id].value,
                            "query_name": e.source.name,
                            "query_description": e.source.description,
                            "accepted_targets": sorted(e.accepted_targets),
                            "candidate_ids": [c.tiny_id for c in pred.candidates] if pred else None,
                            "hit_rank": hit_rank(pred, e.accepted_targets) if pred else None,
                            "degraded": degraded,
                        }, ensure_ascii=False) + "\n")

            for setting in SETTING_ORDER:
                subset = [e for e in all_entries if settings[e.source.element_id] is setting]
                if not subset:
                    continue
                for preset in presets:
                    uses_rerank = "rank" in preset
                    predictions = predictions_by_preset[preset]
                    if not predictions:
                        acc1 = acc5 = acc10 = None
                    else:
                        acc1 = acc_at_n(predictions, subset, 1)
                        acc5 = None if uses_rerank else acc_at_n(predictions, subset, 5)
                        acc10 = None if uses_rerank else acc_at_n(predictions, subset, 10)
                    report.rows.append(ReportRow(
                        dataset=spec.name,
                        setting=setting,
                        entry_count=len(subset),
                        preset=preset,
                        acc_at_1=acc1,
                        acc_at_5=acc5,
                        acc_at_10=acc10,
                        degraded=degraded_by_preset[preset],
                    ))
            report.coverage_rows.append(CoverageRow(
                dataset=spec.name,
                total_elements=spec.total_elements,
                mapped_elements=len(all_entries),
                rate=coverage(spec.total_elements, len(all_entries)) if spec.total_elements is not None else None,
            ))
    finally:
        if audit_fh is not None:
            audit_fh.close()
    return report
