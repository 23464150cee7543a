"""Command-line entry point wiring ingestion, metrics, coherency and stats.

Every artifact is written atomically (temp file + rename, so interrupted
runs leave nothing truncated) and starts with the fully resolved run
configuration: a ``record_type: run_config`` first line in JSONL outputs,
a ``# config:`` comment in text reports. Identical inputs and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click

from . import corpus, metrics, stats
from .coherency import scorer, splitting, weak_labels
from .embeddings import resolve_provider
from .errors import FacetKitError
from .service import (
    AnnotationService,
    Criterion,
    create_app,
    load_gold_tasks,
    load_pairs,
)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_line(command: str, config: dict) -> str:
    payload = {"record_type": "run_config", "command": command, **config}
    return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def _config_comment(command: str, config: dict) -> str:
    return "# config: " + _config_line(command, config)


def _out_path(ctx: click.Context, name: str) -> Path:
    return Path(ctx.obj["out"]) / name


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Global RNG seed.")
@click.option(
    "--provider",
    default="hashed",
    show_default=True,
    help="Embedding provider: 'hashed' or 'http:<url>'.",
)
@click.option(
    "--out",
    type=click.Path(file_okay=False),
    default=".",
    show_default=True,
    help="Directory for output artifacts.",
)
@click.pass_context
def main(ctx: click.Context, seed: int, provider: str, out: str) -> None:
    """Facet-set evaluation toolkit."""
    ctx.obj = {"seed": seed, "provider_spec": provider, "out": out}


def _provider(ctx: click.Context):
    return resolve_provider(ctx.obj["provider_spec"])


@main.command()
@click.option("--tsv", type=click.File("r"), required=True, help="Clarification TSV.")
@click.option("--documents", type=click.File("r"), default=None, help="Documents JSONL.")
@click.option("--name", default="records.jsonl", show_default=True)
@click.pass_context
def ingest(ctx, tsv, documents, name) -> None:
    """Parse a clarification TSV into canonical records JSONL."""
    records, errors = corpus.parse_clarification_tsv(tsv)
    attached = 0
    if documents is not None:
        docs_by_query, doc_errors = corpus.load_documents(documents)
        errors.extend(doc_errors)
        updated = []
        for record in records:
            docs = docs_by_query.get(record.query.id)
            if docs is not None:
                record = corpus.ClarificationRecord(
                    query=record.query,
                    question=record.question,
                    facets=record.facets,
                    documents=docs,
                    source=record.source,
                )
                attached += 1
            updated.append(record)
        records = updated

    config = {"seed": ctx.obj["seed"], "rows": len(records), "row_errors": len(errors)}
    lines = [_config_line("ingest", config)]
    lines += [json.dumps(corpus.record_to_dict(r), ensure_ascii=False) for r in records]
    path = _out_path(ctx, name)
    _atomic_write(path, "\n".join(lines) + "\n")
    for error in errors:
        click.echo(f"row {error.row}: {error.reason}", err=True)
    click.echo(f"wrote {len(records)} records to {path} ({len(errors)} row errors, "
               f"{attached} with documents)")


@main.command()
@click.option("--ground-truth", "gt_file", type=click.File("r"), required=True,
              help="Canonical records JSONL (from ingest).")
@click.option("--generated", "gen_file", type=click.File("r"), required=True,
              help="Generated facets JSONL.")
@click.option("--generator-name", default="generated", show_default=True)
@click.pass_context
def evaluate(ctx, gt_file, gen_file, generator_name) -> None:
    """Score generated facet sets against ground truth, aggregated per M."""
    gt_records = corpus.read_records_jsonl(gt_file)
    gen_records, line_errors = corpus.load_generated_facets(gen_file, generator_name)
    for error in line_errors:
        click.echo(f"line {error.row}: {error.reason}", err=True)
    report = metrics.evaluate_corpus(gt_records, gen_records, _provider(ctx))

    config = {
        "seed": ctx.obj["seed"],
        "provider": ctx.obj["provider_spec"],
        "pairs": len(report.pairs),
        "unpaired": len(report.unpaired),
    }
    pair_lines = [_config_line("evaluate", config)] + report.pair_lines()
    _atomic_write(_out_path(ctx, "metric_report.jsonl"), "\n".join(pair_lines) + "\n")
    table = _config_comment("evaluate", config) + "\n" + report.aggregate_table()
    _atomic_write(_out_path(ctx, "metric_aggregates.txt"), table)
    for query in report.unpaired:
        click.echo(f"unpaired query: {query}", err=True)
    click.echo(f"evaluated {len(report.pairs)} pairs "
               f"({len(report.unpaired)} unpaired queries skipped)")


@main.command("weak-label")
@click.option("--records", "records_file", type=click.File("r"), required=True)
@click.option("--propagate-from", "propagate_file", type=click.File("r"), default=None,
              help="Labeled JSONL used to compute per-question coherent fractions.")
@click.option("--name", default="weak_labels.jsonl", show_default=True)
@click.pass_context
def weak_label_cmd(ctx, records_file, propagate_file, name) -> None:
    """Apply the weak coherency rules; unlabeled records are dropped."""
    records = corpus.read_records_jsonl(records_file)
    question_stats = None
    if propagate_file is not None:
        labeled = weak_labels.read_labeled_jsonl(propagate_file)
        question_stats = weak_labels.question_coherent_fractions(labeled)

    labeled_out = []
    for record in records:
        label = weak_labels.weak_label(record, question_stats)
        if label is not None:
            labeled_out.append(weak_labels.LabeledRecord(record, label))

    config = {"seed": ctx.obj["seed"], "records": len(records), "labeled": len(labeled_out)}
    lines = [_config_line("weak-label", config)]
    for item in labeled_out:
        payload = corpus.record_to_dict(item.record)
        payload["label"] = item.label.value.value
        payload["provenance"] = item.label.provenance
        lines.append(json.dumps(payload, ensure_ascii=False))
    path = _out_path(ctx, name)
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(f"labeled {len(labeled_out)} of {len(records)} records -> {path}")


@main.command()
@click.option("--labeled", "labeled_file", type=click.File("r"), required=True)
@click.option("--ratios", default="0.70,0.15,0.15", show_default=True)
@click.pass_context
def split(ctx, labeled_file, ratios) -> None:
    """Stratified train/validation/test split of labeled records."""
    labeled = weak_labels.read_labeled_jsonl(labeled_file)
    ratio_tuple = tuple(float(r) for r in ratios.split(","))
    if len(ratio_tuple) != 3:
        raise click.UsageError("--ratios needs three comma-separated values")
    assignment = splitting.stratified_split(labeled, ratio_tuple, seed=ctx.obj["seed"])

    config = {"seed": ctx.obj["seed"], "ratios": list(ratio_tuple), "records": len(labeled)}
    for part in splitting.Split:
        selected = assignment.select(labeled, part)
        lines = [_config_line("split", {**config, "split": part.value, "count": len(selected)})]
        for item in selected:
            payload = corpus.record_to_dict(item.record)
            payload["label"] = item.label.value.value
            payload["provenance"] = item.label.provenance
            lines.append(json.dumps(payload, ensure_ascii=False))
        _atomic_write(_out_path(ctx, f"{part.value}.jsonl"), "\n".join(lines) + "\n")
    counts = {p.value: len(assignment.indices(p)) for p in splitting.Split}
    click.echo(f"split {len(labeled)} records: {counts}")


@main.command()
@click.option("--train", "train_file", type=click.File("r"), required=True)
@click.option("--validation", "val_file", type=click.File("r"), required=True)
@click.option("--learning-rate", type=float, default=0.1, show_default=True)
@click.option("--epochs", type=int, default=4, show_default=True)
@click.option("--patience", type=int, default=2, show_default=True)
@click.option("--l2", type=float, default=0.0, show_default=True)
@click.option("--name", default="coherency_model.json", show_default=True)
@click.pass_context
def train(ctx, train_file, val_file, learning_rate, epochs, patience, l2, name) -> None:
    """Train the coherency scorer on labeled records."""
    train_records = weak_labels.read_labeled_jsonl(train_file)
    val_records = weak_labels.read_labeled_jsonl(val_file)
    config = scorer.TrainConfig(
        learning_rate=learning_rate,
        epochs=epochs,
        patience=patience,
        l2=l2,
        seed=ctx.obj["seed"],
    )
    model = scorer.train(train_records, val_records, _provider(ctx), config)
    import io

    buffer = io.StringIO()
    scorer.save_model(model, buffer)
    path = _out_path(ctx, name)
    _atomic_write(path, buffer.getvalue())
    final = model.training["loss_trace"][-1]
    click.echo(
        f"trained on {len(train_records)} records "
        f"(epochs run: {model.training['epochs_run']}, "
        f"final train loss: {final['train_loss']:.6f}) -> {path}"
    )


@main.command("eval-classifier")
@click.option("--model", "model_file", type=click.File("r"), required=True)
@click.option("--test", "test_file", type=click.File("r"), required=True)
@click.pass_context
def eval_classifier(ctx, model_file, test_file) -> None:
    """Evaluate a trained scorer: accuracy, macro-F1, confusion counts."""
    model = scorer.load_model(model_file)
    test_records = weak_labels.read_labeled_jsonl(test_file)
    report = scorer.evaluate(model, test_records, _provider(ctx))

    config = {"provider": ctx.obj["provider_spec"], "test_records": len(test_records)}
    lines = [
        _config_comment("eval-classifier", config),
        f"accuracy\t{report.accuracy:.4f}",
        f"macro_f1\t{report.macro_f1:.4f}",
    ]
    for true_label, row in report.confusion.items():
        for pred_label, count in row.items():
            lines.append(f"confusion\ttrue={true_label}\tpred={pred_label}\t{count}")
    path = _out_path(ctx, "classifier_eval.txt")
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(f"accuracy {report.accuracy:.4f}, macro-F1 {report.macro_f1:.4f} -> {path}")


@main.command()
@click.option("--model", "model_file", type=click.File("r"), required=True)
@click.option("--records", "records_file", type=click.File("r"), default=None)
@click.option("--query", "query_text", default=None)
@click.option("--facet", "facet_texts", multiple=True)
@click.pass_context
def predict(ctx, model_file, records_file, query_text, facet_texts) -> None:
    """Score facet sets with a trained model (records file or one inline set)."""
    model = scorer.load_model(model_file)
    provider = _provider(ctx)
    if records_file is not None:
        records = corpus.read_records_jsonl(records_file)
        items = [(r.facets, r.query) for r in records]
    elif query_text and facet_texts:
        items = [(corpus.FacetSet.from_texts(facet_texts), corpus.Query(query_text))]
    else:
        raise click.UsageError("provide --records or both --query and --facet")

    config = {"provider": ctx.obj["provider_spec"], "records": len(items)}
    lines = [_config_line("predict", config)]
    for facets, query in items:
        result = scorer.predict(model, facets, query, provider)
        lines.append(
            json.dumps(
                {
                    "query": query.text,
                    "facets": facets.raw_texts(),
                    "s": result.s,
                    "label": result.label.value,
                },
                ensure_ascii=False,
            )
        )
    path = _out_path(ctx, "predictions.jsonl")
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(f"scored {len(items)} facet sets -> {path}")


@main.command()
@click.option("--model", "model_file", type=click.File("r"), required=True)
@click.option("--records", "records_file", type=click.File("r"), required=True)
@click.option("--group-by-m", is_flag=True, default=False)
@click.pass_context
def prevalence(ctx, model_file, records_file, group_by_m) -> None:
    """Fraction of records the model labels incoherent."""
    model = scorer.load_model(model_file)
    records = corpus.read_records_jsonl(records_file)
    items = [(r.facets, r.query) for r in records]
    result = scorer.prevalence(model, items, _provider(ctx), group_by_m=group_by_m)

    config = {"provider": ctx.obj["provider_spec"], "records": len(items),
              "group_by_m": group_by_m}
    lines = [_config_comment("prevalence", config)]
    if group_by_m:
        lines.append("M\tincoherent_fraction")
        for m, fraction in result.items():
            lines.append(f"{m}\t{fraction:.4f}")
    else:
        lines.append(f"incoherent_fraction\t{result:.4f}")
    path = _out_path(ctx, "prevalence.txt")
    _atomic_write(path, "\n".join(lines) + "\n")
    click.echo(lines[-1].replace("\t", " = "))


@main.command()
@click.option("--wins", type=int, required=True, help="Wins for side A.")
@click.option("--ties", type=int, required=True)
@click.option("--losses", type=int, required=True, help="Wins for side B.")
@click.option("--criterion", default="comparison", show_default=True)
@click.option("--alpha", type=float, default=0.01, show_default=True)
@click.pass_context
def trinomial(ctx, wins, ties, losses, criterion, alpha) -> None:
    """Exact trinomial significance test on win/tie/loss counts."""
    counts = stats.PairwiseCounts(wins, ties, losses, criterion=criterion)
    result = stats.trinomial_pvalue(counts)
    row = stats.format_comparison_row(counts, result, alpha=alpha)
    config = {"wins": wins, "ties": ties, "losses": losses, "alpha": alpha}
    text = "\n".join(
        [
            _config_comment("trinomial", config),
            "criterion\twins_a\tties\twins_b\tp_value\tverdict",
            row,
        ]
    )
    _atomic_write(_out_path(ctx, "trinomial.txt"), text + "\n")
    click.echo(row)


@main.command("subset-test")
@click.option("--values-a", type=click.File("r"), required=True,
              help="One numeric value per line.")
@click.option("--values-b", type=click.File("r"), required=True)
@click.option("--permutations", type=int, default=10_000, show_default=True)
@click.pass_context
def subset_test(ctx, values_a, values_b, permutations) -> None:
    """Seeded permutation test on the difference of means."""
    a = [float(line) for line in values_a if line.strip()]
    b = [float(line) for line in values_b if line.strip()]
    result = stats.subset_significance(a, b, permutations=permutations, seed=ctx.obj["seed"])
    config = {"seed": ctx.obj["seed"], "permutations": permutations,
              "n_a": len(a), "n_b": len(b)}
    lines = [
        _config_comment("subset-test", config),
        f"mean_a\t{result.mean_a:.6f}",
        f"mean_b\t{result.mean_b:.6f}",
        f"p_value\t{result.p_value:.6f}",
    ]
    _atomic_write(_out_path(ctx, "subset_test.txt"), "\n".join(lines) + "\n")
    click.echo(f"mean_a={result.mean_a:.6f} mean_b={result.mean_b:.6f} "
               f"p={result.p_value:.6f}")


@main.command()
@click.option("--export", "export_file", type=click.File("r"), required=True,
              help="JSON export from the annotation service.")
@click.option("--alpha", type=float, default=0.01, show_default=True)
@click.pass_context
def aggregate(ctx, export_file, alpha) -> None:
    """Aggregate a service export into counts and run the trinomial test."""
    payload = json.load(export_file)
    judgments = [
        (task["task_id"], judgment["choice"])
        for task in payload["complete"]
        for judgment in task["judgments"]
    ]
    counts, skipped = stats.aggregate_pairwise(judgments, criterion=payload["criterion"])
    result = stats.trinomial_pvalue(counts)
    row = stats.format_comparison_row(counts, result, alpha=alpha)
    config = {"criterion": payload["criterion"], "alpha": alpha,
              "complete_tasks": counts.n, "skipped_tasks": len(skipped)}
    text = "\n".join(
        [
            _config_comment("aggregate", config),
            "criterion\twins_a\tties\twins_b\tp_value\tverdict",
            row,
        ]
    )
    _atomic_write(_out_path(ctx, "pairwise_counts.txt"), text + "\n")
    for task_id in skipped:
        click.echo(f"incomplete task skipped: {task_id}", err=True)
    click.echo(row)


@main.command()
@click.option("--pairs", "pairs_file", type=click.File("r"), required=True,
              help="JSONL: {query, ground_truth: [...], generated: [...]}.")
@click.option("--gold", "gold_file", type=click.File("r"), default=None,
              help="JSONL gold tasks for qualification.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), required=True)
@click.option("--judgments-per-task", type=int, default=2, show_default=True)
@click.option("--qualification-threshold", type=float, default=0.8, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8400, show_default=True)
@click.pass_context
def serve(ctx, pairs_file, gold_file, log_path, judgments_per_task,
          qualification_threshold, host, port) -> None:
    """Run the blind pairwise annotation service."""
    import uvicorn

    pairs = load_pairs(pairs_file)
    gold = load_gold_tasks(gold_file) if gold_file is not None else []
    service = AnnotationService(
        pairs,
        gold,
        seed=ctx.obj["seed"],
        judgments_per_task=judgments_per_task,
        qualification_threshold=qualification_threshold,
        log_path=log_path,
    )
    click.echo(
        f"serving {len(service.tasks)} tasks ({len(pairs)} pairs x "
        f"{len(list(Criterion))} criteria) on {host}:{port}, log: {log_path}"
    )
    uvicorn.run(create_app(service), host=host, port=port, log_level="warning")


def run() -> None:
    """Console entry point: module errors become diagnostics, not tracebacks."""
    try:
        main()
    except FacetKitError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
