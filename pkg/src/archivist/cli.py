"""Command-line interface.

Commands: ingest, index, search, ask, eval, serve, gen-benchmark. State
(knowledge base + index files) lives under --data-dir so invocations compose:
ingest once, index once, then search or serve as often as needed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .benchmark import generate_benchmark, save_dataset, write_corpus_jsonl
from .config import load_config
from .errors import ArchivistError
from .evaluation import default_config_grid, evaluate_search, render_table
from .fusion import FusionParams, HybridSearcher
from .kb import KnowledgeBase
from .lexical import build_index
from .runtime import Runtime
from .vectors import VectorStore


def _runtime(config_file: str | None, data_dir: str | None, **overrides) -> Runtime:
    if data_dir is not None:
        overrides["data_dir"] = data_dir
    config = load_config(config_file, overrides=overrides)
    return Runtime(config)


@click.group()
def main() -> None:
    """Talk to an archive: ingest, index, search, ask, evaluate, serve."""


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None, help="Directory for the store and index files.")
@click.option("--entries", "entries_path", type=click.Path(exists=True), default=None)
@click.option("--authors", "authors_path", type=click.Path(exists=True), default=None)
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl")
def ingest(config_file, data_dir, entries_path, authors_path, fmt) -> None:
    """Load corpus files into the knowledge base."""
    if entries_path is None and authors_path is None:
        raise click.UsageError("provide --entries and/or --authors")
    rt = _runtime(config_file, data_dir)
    total_e = total_a = 0
    for path in (authors_path, entries_path):
        if path is None:
            continue
        with open(path, "rb") as fh:
            n_e, n_a = rt.ingest(fh, fmt)
        total_e += n_e
        total_a += n_a
    click.echo(f"loaded {total_e} entries, {total_a} authors")


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def index(config_file, data_dir) -> None:
    """Build and persist the lexical index and vector store."""
    rt = _runtime(config_file, data_dir)
    stats = rt.reindex()
    rt.save_indexes()
    click.echo(json.dumps(stats))


@main.command()
@click.argument("query")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--scorer", type=click.Choice(["tfidf", "bm25"]), default=None)
def search(query, config_file, data_dir, alpha, gamma, k, scorer) -> None:
    """Hybrid search without any LLM involvement."""
    rt = _runtime(config_file, data_dir)
    if not rt.load_indexes():
        rt.reindex()
    base = rt.default_params()
    params = FusionParams(
        alpha=base.alpha if alpha is None else alpha,
        gamma=base.gamma if gamma is None else gamma,
        k=base.k if k is None else k,
        fields=base.fields,
    )
    for c in rt.searcher.hybrid_search(query, params, scorer=scorer):
        entry = rt.kb.get_entry(c.entry_id)
        click.echo(f"{c.s_final:0.4f}  #{c.entry_id}  [{entry.date}] {entry.text[:90]}")


@main.command()
@click.argument("question")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--scorer", type=click.Choice(["tfidf", "bm25"]), default=None)
def ask(question, config_file, data_dir, alpha, gamma, k, scorer) -> None:
    """One-shot turn: query generation, SQL filter, search, answer."""
    rt = _runtime(config_file, data_dir)
    if not rt.load_indexes():
        rt.reindex()
    base = rt.default_params()
    params = FusionParams(
        alpha=base.alpha if alpha is None else alpha,
        gamma=base.gamma if gamma is None else gamma,
        k=base.k if k is None else k,
        fields=base.fields,
    )
    session = rt.sessions.create()
    turn = rt.orchestrator.handle_turn(session, question, params, scorer=scorer)
    if turn.degraded:
        click.echo("[degraded: LLM gateway unavailable]", err=True)
    click.echo(turn.answer_rendered)
    for cite in turn.citations:
        click.echo(f"  [{cite.marker}] entry {cite.entry_id}: {cite.url}")
    if not turn.citations:
        for c in turn.candidates:
            click.echo(f"  source entry {c.entry_id} (score {c.s_final:0.3f})")


@main.command(name="eval")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--topics", type=int, default=25, show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--scorer", type=click.Choice(["tfidf", "bm25"]), default="tfidf")
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable records.")
def eval_cmd(seed, topics, k, scorer, as_json) -> None:
    """Generate the seeded benchmark and print the evaluation grid."""
    entries, authors, dataset = generate_benchmark(seed=seed, topics=topics)
    kb = KnowledgeBase(":memory:")
    kb.ingest_records(entries, authors)
    from .embeddings import HashedEmbeddingProvider

    provider = HashedEmbeddingProvider()
    idx = build_index((e.id, e.text) for e in entries)
    vstore = VectorStore()
    vstore.index_entries(provider, entries)
    vstore.index_fields(provider, authors)
    searcher = HybridSearcher(kb, idx, vstore, provider, scorer=scorer)
    configs = [c for c in default_config_grid(k=k)]
    report = evaluate_search(dataset, searcher, configs, k=k)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(render_table(report))


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_file, data_dir, host, port) -> None:
    """Run the HTTP service (loads persisted indexes when present)."""
    import uvicorn

    from .api import create_app

    rt = _runtime(config_file, data_dir, host=host, port=port)
    if not rt.load_indexes() and rt.kb.entry_count() > 0:
        rt.reindex()
    app = create_app(runtime=rt)
    uvicorn.run(app, host=rt.config.host, port=rt.config.port)


@main.command(name="gen-benchmark")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--topics", type=int, default=25, show_default=True)
@click.option("--entries-per-topic", type=int, default=5, show_default=True)
@click.option("--questions-per-topic", type=int, default=2, show_default=True)
@click.option("--out-dir", type=click.Path(), default="benchmark", show_default=True)
def gen_benchmark(seed, topics, entries_per_topic, questions_per_topic, out_dir) -> None:
    """Write the synthetic corpus and question set as jsonl files."""
    entries, authors, dataset = generate_benchmark(
        seed=seed,
        topics=topics,
        entries_per_topic=entries_per_topic,
        questions_per_topic=questions_per_topic,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        write_corpus_jsonl(entries, authors, fh)
    save_dataset(dataset, out / "dataset.jsonl")
    click.echo(
        f"wrote {len(entries)} entries, {len(authors)} authors,"
        f" {len(dataset.questions)} questions to {out}/"
    )


def _cli_main() -> None:
    try:
        main(standalone_mode=True)
    except ArchivistError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    _cli_main()
