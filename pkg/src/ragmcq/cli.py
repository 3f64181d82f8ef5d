"""Command-line interface.

Subcommands: ingest (corpus -> chunks), index (chunks -> vector cache),
run (experiment), score (re-score an existing results file), compare
(two reports). Exit codes: 0 success, 1 config error, 2 partial failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ragmcq.corpus import ChunkingConfig, chunk_corpus, read_corpus
from ragmcq.providers import ProviderBundle
from ragmcq.runner import (
    ConfigError,
    ExperimentConfig,
    build_report,
    compare_reports,
    load_results_csv,
    render_report_text,
    run_experiment,
    score_rows,
    write_results_csv,
)
from ragmcq.vectorindex import build_index


@click.group()
def main() -> None:
    """RAG answering strategies and evaluation for multiple-choice QA."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True), help="Corpus manifest JSON.")
@click.option("--out", required=True, type=click.Path(), help="Output chunks JSONL.")
@click.option("--chunk-size", default=1000, show_default=True)
@click.option("--overlap", default=200, show_default=True)
def ingest(manifest: str, out: str, chunk_size: int, overlap: int) -> None:
    """Normalize corpus documents and write overlapping chunks."""
    try:
        cfg = ChunkingConfig(chunk_size=chunk_size, overlap=overlap)
        docs = read_corpus(manifest)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    chunks = chunk_corpus(docs, cfg)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(
                json.dumps(
                    {
                        "chunk_id": chunk.chunk_id,
                        "text": chunk.text,
                        "char_start": chunk.char_start,
                        "char_len": chunk.char_len,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    click.echo(f"wrote {len(chunks)} chunks from {len(docs)} documents to {out}")


@main.command(name="index")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def index_cmd(config_path: str) -> None:
    """Build (or refresh from cache) the vector index for the configured corpus."""
    try:
        cfg = ExperimentConfig.from_file(config_path)
        if cfg.corpus_manifest is None:
            raise ConfigError("config has no corpus.manifest to index")
        providers = ProviderBundle.from_config(cfg.providers, base_dir=cfg.base_dir)
        if providers.embed is None:
            raise ConfigError("config has no providers.embed section")
        docs = read_corpus(cfg.corpus_manifest)
        chunks = chunk_corpus(docs, cfg.chunking)
        index = build_index(chunks, providers.embed, cache_dir=cfg.cache_dir)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    click.echo(
        f"index ready: {len(index)} chunks, dimension {index.dimension}, "
        f"fingerprint {index.fingerprint[:16]}..."
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--strategy", default=None, help="Override the configured strategy.")
@click.option("--model-id", default=None)
@click.option("--seed", default=None, type=int)
@click.option("--k", default=None, type=int)
@click.option("--concurrency", default=None, type=int)
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--dataset", "dataset_path", default=None, type=click.Path(exists=True))
def run(config_path, strategy, model_id, seed, k, concurrency, output_dir, dataset_path) -> None:
    """Run an experiment; flags win over config-file values."""
    # flag paths are relative to the invocation directory, not the config file
    overrides = {
        "strategy": strategy,
        "model_id": model_id,
        "seed": seed,
        "k": k,
        "concurrency": concurrency,
        "output_dir": str(Path(output_dir).resolve()) if output_dir else None,
        "dataset_path": str(Path(dataset_path).resolve()) if dataset_path else None,
    }
    try:
        cfg = ExperimentConfig.from_file(config_path, overrides)
        result = run_experiment(cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    if result.status != 0:
        click.echo(f"partial run ({result.answered} questions answered): {result.error}", err=True)
        sys.exit(2)
    click.echo(f"results: {result.results_path}")
    click.echo(f"report : {result.report_path}")
    click.echo(render_report_text(result.report))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--output-dir", required=True, type=click.Path())
def score(config_path: str, results_path: str, output_dir: str) -> None:
    """Recompute metrics and the report from an existing results file."""
    try:
        cfg = ExperimentConfig.from_file(config_path, {"output_dir": str(Path(output_dir).resolve())})
        providers = ProviderBundle.from_config(cfg.providers, base_dir=cfg.base_dir)
        if providers.embed is None:
            raise ConfigError("config has no providers.embed section")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    rows = load_results_csv(results_path)
    rescored = score_rows(rows, lambda toks: providers.embed.embed(list(toks)))
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(rescored, out_dir / "results.csv")
    report = build_report(cfg, rescored)
    (out_dir / "report.json").write_text(
        json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "report.txt").write_text(render_report_text(report), encoding="utf-8")
    click.echo(f"rescored {len(rescored)} rows into {out_dir}")


@main.command()
@click.argument("report_a", type=click.Path(exists=True))
@click.argument("report_b", type=click.Path(exists=True))
@click.option("--out-prefix", default=None, type=click.Path(), help="Write <prefix>.csv and <prefix>.txt.")
def compare(report_a: str, report_b: str, out_prefix: str | None) -> None:
    """Compare two report.json files side by side."""
    a = json.loads(Path(report_a).read_text(encoding="utf-8"))
    b = json.loads(Path(report_b).read_text(encoding="utf-8"))
    try:
        csv_text, txt = compare_reports(a, b)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    if out_prefix:
        Path(out_prefix + ".csv").write_text(csv_text, encoding="utf-8")
        Path(out_prefix + ".txt").write_text(txt, encoding="utf-8")
    click.echo(txt, nl=False)


if __name__ == "__main__":
    main()
