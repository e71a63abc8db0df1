"""Batch CLI: index building, batch mapping, benchmarking, and the server.

Exit codes: 0 success, 1 usage error, 2 data error, 3 upstream LLM failure.
All diagnostics go to standard error.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from .corpus import load_corpus, preprocess
from .errors import DataError, UpstreamError
from .evaluation import group_datasets, load_gold_csv, run_benchmark
from .index import IndexBundle, build_lexical_index, build_vector_index, load_bundle, save_bundle
from .index.lexical import Bm25Params, SnapshotMeta
from .llm import HttpProvider, LlmConfig, LlmGateway, MockProvider
from .pipeline import PRESETS, map_values, preset_config, recommend
from .project_store import MappingDecision, ProjectStore, import_source_csv


def build_gateway(mock: bool, llm_options: dict | None = None) -> LlmGateway:
    options = dict(llm_options or {})
    for key in ("request_timeout",):
        if key in options:
            options[key] = float(options[key])
    for key in ("max_retries", "max_concurrent_requests"):
        if key in options:
            options[key] = int(options[key])
    config = LlmConfig(**options)
    provider = MockProvider() if mock else HttpProvider(config)
    return LlmGateway(provider, config)


@click.group()
@click.option("--mock-llm", is_flag=True, help="Use the deterministic offline mock instead of a live LLM.")
@click.pass_context
def cli(ctx, mock_llm):
    """Map local data dictionary elements to NIH Common Data Elements."""
    ctx.ensure_object(dict)
    ctx.obj["mock_llm"] = mock_llm


def _parse_field_weights(spec: str) -> dict[str, float]:
    weights = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DataError(f"--field-weights entries must look like name=3.0, got {part!r}")
        field, value = part.split("=", 1)
        try:
            weights[field.strip()] = float(value)
        except ValueError as exc:
            raise DataError(f"bad weight for field {field!r}: {value!r}") from exc
    return weights


@cli.command("index")
@click.argument("action", type=click.Choice(["build"]))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(), help="Corpus export JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output index directory.")
@click.option("--no-embeddings", is_flag=True, help="Skip the vector index (lexical only).")
@click.option("--snapshot-date", default="unknown", help="Corpus snapshot date recorded in index metadata.")
@click.option("--k1", default=1.2, show_default=True, type=float)
@click.option("--b", default=0.75, show_default=True, type=float)
@click.option("--field-weights", default="", help="Comma-separated name=weight overrides.")
@click.pass_context
def index_cmd(ctx, action, corpus_path, out_dir, no_embeddings, snapshot_date, k1, b, field_weights):
    """Build and persist the lexical and vector indexes."""
    path = Path(corpus_path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    result = load_corpus(path.read_bytes())
    if result.rejected:
        click.echo(f"rejected {len(result.rejected)} record(s) failing invariants:", err=True)
        for r in result.rejected[:20]:
            click.echo(f"  position {r.position} ({r.tiny_id or 'no id'}): {'; '.join(r.reasons)}", err=True)
    docs = [preprocess(r) for r in result.records]

    params = Bm25Params(k1=k1, b=b)
    if field_weights:
        merged = dict(params.field_weights)
        merged.update(_parse_field_weights(field_weights))
        params = Bm25Params(k1=k1, b=b, field_weights=merged)
    lexical = build_lexical_index(docs, params, snapshot=SnapshotMeta(snapshot_date, len(docs)))

    vectors = None
    if not no_embeddings:
        gateway = build_gateway(ctx.obj["mock_llm"])
        click.echo(f"embedding {len(docs)} documents...", err=True)
        embeddings = gateway.embed([d.embedding_text for d in docs])
        vectors = build_vector_index(
            [(d.tiny_id, np.asarray(v)) for d, v in zip(docs, embeddings)],
            collections={r.tiny_id: r.collection for r in result.records},
        )

    bundle = IndexBundle(records={r.tiny_id: r for r in result.records}, lexical=lexical, vectors=vectors)
    save_bundle(bundle, out_dir)
    click.echo(f"indexed {len(docs)} CDEs into {out_dir}" + (" (no embeddings)" if no_embeddings else ""), err=True)


@cli.command("map")
@click.option("--index", "index_dir", required=True, type=click.Path(), help="Index directory.")
@click.option("--input", "input_csv", required=True, type=click.Path(), help="Source dictionary CSV.")
@click.option("--preset", required=True, type=click.Choice(sorted(PRESETS)), help="Pipeline configuration.")
@click.option("--collections", default="", help="Comma-separated target collection filter.")
@click.option("--out", "out_csv", required=True, type=click.Path(), help="Output export CSV.")
@click.option("--map-values / --no-map-values", "do_map_values", default=False,
              help="Also map raw source values to target permissible values.")
@click.pass_context
def map_cmd(ctx, index_dir, input_csv, preset, collections, out_csv, do_map_values):
    """Batch map-all: recommend for every element, accept rank 1, export CSV."""
    bundle = load_bundle(index_dir)
    gateway = build_gateway(ctx.obj["mock_llm"])
    input_path = Path(input_csv)
    if not input_path.exists():
        raise DataError(f"input file not found: {input_path}")
    result = import_source_csv(input_path.read_bytes())
    for line, reason in result.rejected_rows:
        click.echo(f"skipping row at line {line}: {reason}", err=True)

    coll = frozenset(c.strip() for c in collections.split(",") if c.strip()) or None
    config = preset_config(preset, collections=coll)

    with tempfile.TemporaryDirectory() as tmp:
        store = ProjectStore(tmp, records=bundle.records)
        project = store.create_project(input_path.stem, config.to_dict(), result.elements)
        for element in result.elements:
            candidates = recommend(element, config, bundle, gateway)
            store.record_candidates(project.project_id, candidates)
            if not candidates.candidates:
                continue
            top = candidates.candidates[0]
            mappings = []
            if do_map_values and element.value_set:
                matches = map_values(element.value_set, bundle.records[top.tiny_id], gateway)
                mappings = matches or []
            store.record_decision(
                project.project_id,
                MappingDecision(
                    element_id=element.element_id,
                    selected_tiny_id=top.tiny_id,
                    origin="auto_top1",
                    value_mappings=mappings,
                    decided_at="batch",
                ),
            )
        Path(out_csv).write_bytes(store.export_mappings(project.project_id))
    click.echo(f"mapped {len(result.elements)} elements -> {out_csv}", err=True)


@cli.command("eval")
@click.option("--index", "index_dir", required=True, type=click.Path(), help="Index directory.")
@click.option("--gold", "gold_csv", required=True, type=click.Path(), help="Normalized gold CSV.")
@click.option("--datasets", "manifest_path", default="", type=click.Path(),
              help="Datasets manifest JSON (per-dataset collections and dictionary sizes).")
@click.option("--presets", default="bm25", help="Comma-separated preset list.")
@click.option("--report", "report_path", required=True, type=click.Path(), help="Report CSV path.")
@click.option("--audit", "audit_path", default="", type=click.Path(), help="Audit trail JSONL path.")
@click.pass_context
def eval_cmd(ctx, index_dir, gold_csv, manifest_path, presets, report_path, audit_path):
    """Run the Acc@N benchmark and write Table-shaped reports."""
    bundle = load_bundle(index_dir)
    gateway = build_gateway(ctx.obj["mock_llm"])
    gold_file = Path(gold_csv)
    if not gold_file.exists():
        raise DataError(f"gold file not found: {gold_file}")
    entries = load_gold_csv(gold_file)
    manifest = None
    if manifest_path:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    specs = group_datasets(entries, manifest)

    preset_list = [p.strip() for p in presets.split(",") if p.strip()]
    for p in preset_list:
        if p not in PRESETS:
            raise DataError(f"unknown preset {p!r}; choose from {sorted(PRESETS)}")

    report_file = Path(report_path)
    audit_file = Path(audit_path) if audit_path else report_file.with_name(report_file.stem + "_audit.jsonl")
    report = run_benchmark(specs, preset_list, bundle, gateway, audit_path=audit_file)

    report_file.write_text(report.to_csv(), encoding="utf-8")
    text_file = report_file.with_suffix(".txt")
    text_file.write_text(report.to_text(), encoding="utf-8")
    click.echo(report.to_text())
    click.echo(f"report: {report_file}  text: {text_file}  audit: {audit_file}", err=True)


@cli.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Flat key=value config file.")
@click.pass_context
def serve_cmd(ctx, config_path):
    """Start the HTTP service (fails fast on index version mismatch)."""
    import uvicorn

    from .pipeline import PipelineConfig
    from .service import create_app, parse_service_config

    path = Path(config_path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    cfg = parse_service_config(path)
    bundle = load_bundle(cfg.index_path)
    gateway = build_gateway(cfg.mock_llm or ctx.obj["mock_llm"], cfg.llm)
    store = ProjectStore(cfg.projects_dir, records=bundle.records)
    app = create_app(
        bundle,
        store,
        gateway,
        base_config=PipelineConfig(),
        static_dir=cfg.static_path,
        cors_origins=cfg.cors_origins,
    )
    click.echo(f"serving on http://{cfg.listen_host}:{cfg.listen_port}", err=True)
    uvicorn.run(app, host=cfg.listen_host, port=cfg.listen_port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Exit as exc:
        return 0 if exc.exit_code == 0 else 1
    except (click.UsageError, click.ClickException) as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except UpstreamError as exc:
        click.echo(f"upstream error: {exc}", err=True)
        return 3
    except (DataError, FileNotFoundError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
