"""Subcommand CLI for the full pipeline and its individual stages."""

from __future__ import annotations

import json
import logging
import shutil
import sys
from pathlib import Path

import click

from .corpus import SyntheticConfig, generate_synthetic, save_corpus
from .pipeline import (AwaitingLabels, Run, RunConfig, StageError,
                       load_config_file)
from .training import read_labels_csv


def _build_run(ctx) -> Run:
    config_path = ctx.obj.get("config")
    if config_path is None:
        raise click.UsageError("--config PATH is required for this command")
    config = load_config_file(config_path, seed_set=ctx.obj["seed_set"])
    if ctx.obj.get("output"):
        config.output_dir = ctx.obj["output"]
    return Run(config)


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="run configuration JSON")
@click.option("--output", type=click.Path(file_okay=False),
              help="override the configured output directory")
@click.option("--seed-set", default="default", show_default=True,
              help="named seed set to pick from the config's seed_sets")
@click.option("-v", "--verbose", is_flag=True, help="log stage progress")
@click.pass_context
def main(ctx, config, output, seed_set, verbose):
    """Social-isolation narrative mining pipeline."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj.update(config=config, output=output, seed_set=seed_set)


def _stage_command(name: str, help_text: str):
    @main.command(name=name, help=help_text)
    @click.pass_context
    def _cmd(ctx):
        run = _build_run(ctx)
        try:
            run.execute(through=_STAGE_FOR_COMMAND[name])
        except AwaitingLabels as exc:
            click.echo(f"paused: {exc}")
            sys.exit(3)
        except StageError as exc:
            raise click.ClickException(str(exc))
        click.echo(f"{name}: done (run {run.run_id} in {run.dir})")
    return _cmd


_STAGE_FOR_COMMAND = {
    "gen-corpus": "corpus",
    "topic-model": "topics",
    "match": "match",
    "sample": "sample",
    "train": "train",
    "predict": "predict",
    "analyze": "analyze",
    "report": "report",
    "run": "report",
}

_stage_command("topic-model", "Tokenize summaries and grid-search the theme model.")
_stage_command("match", "Scan narratives with the lexicon and export matches.")
_stage_command("sample", "Draw per-topic annotation batches.")
_stage_command("train", "Train/evaluate per-topic classifiers from labels.")
_stage_command("predict", "Apply winning classifiers to matched decedents.")
_stage_command("analyze", "Agreement, odds ratios, ages, rates, trends.")
_stage_command("report", "Assemble the report bundle from run artifacts.")
_stage_command("run", "Execute the full pipeline end to end.")


@main.command("gen-corpus")
@click.option("--n", "n_records", type=int, default=None,
              help="record count override")
@click.option("--seed", type=int, default=None, help="generator seed override")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the corpus JSONL here instead of into a run dir")
@click.pass_context
def gen_corpus(ctx, n_records, seed, out):
    """Generate a synthetic corpus (standalone or as the corpus stage)."""
    if out is not None:
        cfg = SyntheticConfig(n_records=n_records or 1000, seed=seed or 0)
        save_corpus(generate_synthetic(cfg), out)
        click.echo(f"wrote {cfg.n_records} records to {out}")
        return
    run = _build_run(ctx)
    if n_records is not None or seed is not None:
        raise click.UsageError("--n/--seed overrides need --out; config-driven "
                               "runs take them from the config")
    try:
        run.execute(through="corpus")
    except StageError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"gen-corpus: done (run {run.run_id} in {run.dir})")


@main.command("import-labels")
@click.argument("labels_csv", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def import_labels(ctx, labels_csv):
    """Validate an annotation-labels CSV and install it into the run."""
    run = _build_run(ctx)
    try:
        run.execute(through="sample")
    except StageError as exc:
        raise click.ClickException(str(exc))
    labels = read_labels_csv(labels_csv)
    corpus = run.load_corpus()
    for lab in labels:
        try:
            corpus.get(lab.decedent_id)
        except KeyError:
            raise click.ClickException(
                f"label references unknown decedent {lab.decedent_id!r}")
    shutil.copyfile(labels_csv, run.labels_file)
    run._mark("labels", mode="imported", n_labels=len(labels))
    click.echo(f"imported {len(labels)} labels into {run.dir}")


@main.command("serve-annotate")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--static-dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="annotation SPA build to serve at /")
@click.option("--allow-overwrite", is_flag=True,
              help="let repeated labels replace earlier ones without 409s")
@click.pass_context
def serve_annotate(ctx, host, port, static_dir, allow_overwrite):
    """Serve the annotation HTTP API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app

    run = _build_run(ctx)
    try:
        run.execute(through="sample")
    except StageError as exc:
        raise click.ClickException(str(exc))
    app = create_app(run, overwrite=allow_overwrite, static_dir=static_dir)
    click.echo(f"annotation service on http://{host}:{port} (run {run.run_id})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("show-config")
@click.pass_context
def show_config(ctx):
    """Print the fully resolved run configuration."""
    config_path = ctx.obj.get("config")
    if config_path is None:
        raise click.UsageError("--config PATH is required")
    config = load_config_file(config_path, seed_set=ctx.obj["seed_set"])
    if ctx.obj.get("output"):
        config.output_dir = ctx.obj["output"]
    click.echo(json.dumps(config.to_dict(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
