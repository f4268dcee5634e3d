"""Command-line surface: one subcommand per pipeline, reproducible via seeded
configs and self-describing output headers."""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, corpus, genpipeline, judge, metricbench, modelio, prompts, ranking, textmetrics
from .errors import ConfigError, PersumError

logger = logging.getLogger(__name__)


def _config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def make_header(command: str, seed: int, config: dict, template_ids=None) -> dict:
    config = {k: config[k] for k in sorted(config)}
    return {
        "tool": "persum",
        "version": __version__,
        "command": command,
        "seed": seed,
        "tokenizer": textmetrics.TOKENIZER_TAG,
        "prompt_digests": prompts.prompt_digests(template_ids),
        "config_digest": _config_digest(config),
        "config": config,
    }


def write_atomic(path: str | Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_jsonl(path, header: dict, records) -> None:
    lines = [json.dumps({"_header": header}, ensure_ascii=False)]
    lines.extend(json.dumps(r, ensure_ascii=False) for r in records)
    write_atomic(path, "\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    write_atomic(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def read_jsonl(path) -> tuple[dict | None, list[dict]]:
    header = None
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_header" in obj:
                header = obj["_header"]
            else:
                records.append(obj)
    return header, records


def _build_client(endpoints, mock, seed, jobs) -> modelio.ModelClient:
    if mock:
        return modelio.mock_client(seed=seed, max_parallel=jobs)
    if not endpoints:
        raise ConfigError("either --endpoints or --mock is required")
    return modelio.load_client(endpoints)


def _endpoint_params(client: modelio.ModelClient) -> dict:
    """Decoding parameters per endpoint, surfaced in every report header."""
    return {
        name: {k: ep.params[k] for k in sorted(ep.params)}
        for name, ep in sorted(client.endpoints.items())
    }


def _load_pairs(path) -> list[genpipeline.ArticlePair]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of article pairs")
    pairs = []
    for idx, entry in enumerate(raw):
        try:
            pair = genpipeline.ArticlePair(
                pair_id=entry["pair_id"],
                left=_parse_article(entry["topic"], corpus.LEFT, entry["left"]),
                right=_parse_article(entry["topic"], corpus.RIGHT, entry["right"]),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: pair[{idx}] malformed: {exc}") from exc
        pairs.append(pair)
    return pairs


def _parse_article(topic, perspective, raw) -> corpus.SourceArticle:
    documents = tuple(
        corpus.Document(d["doc_id"], d["text"]) for d in raw["documents"]
    )
    return corpus.SourceArticle(topic, perspective, documents)


def _tasks_from_pairs(pairs, target, seed) -> list[genpipeline.GenerationTask]:
    targets = [corpus.LEFT, corpus.RIGHT] if target == "both" else [target]
    return [
        genpipeline.GenerationTask(pair, perspective, seed)
        for pair in pairs
        for perspective in targets
    ]


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PersumError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


@click.group(cls=_Cli)
@click.version_option(__version__)
def main():
    """Perspective summarization toolkit."""
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")


seed_option = click.option("--seed", type=int, default=0, show_default=True)
jobs_option = click.option(
    "--jobs", type=int, default=8, show_default=True, help="Global parallelism bound."
)
endpoints_option = click.option(
    "--endpoints", type=click.Path(exists=True), default=None,
    help="Endpoint config file (JSON).",
)
mock_option = click.option(
    "--mock", is_flag=True, help="Use the built-in seeded mock endpoints."
)


@main.command("build-testset")
@click.option("--annotations", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@seed_option
@jobs_option
@endpoints_option
@mock_option
@click.option("--paraphrase-endpoint", default="generator", show_default=True)
@click.option("--faithfulness-endpoint", default="judge_faithfulness", show_default=True,
              help="Judge endpoint verifying fused summaries (fuse mode only).")
@click.option("--mode", type=click.Choice(["concat", "fuse"]), default="concat", show_default=True)
@click.option("--per-article-budget", type=int, default=8, show_default=True)
@click.option("--max-bad", type=int, default=2, show_default=True)
def build_testset_cmd(annotations, out, seed, jobs, endpoints, mock,
                      paraphrase_endpoint, faithfulness_endpoint, mode,
                      per_article_budget, max_bad):
    """Ingest annotations, derive key points, and emit a scored test set."""
    client = _build_client(endpoints, mock, seed, jobs)
    ingested = corpus.ingest_annotations(annotations)
    relevant_by_key: dict[str, list[corpus.KeyPoint]] = {}
    adversarial_by_key: dict[str, list[corpus.KeyPoint]] = {}
    articles_by_key: dict[str, corpus.SourceArticle] = {}
    for article, excerpts in ingested:
        deduped = []
        seen_docs = set()
        for excerpt in excerpts:
            if excerpt.doc_id in seen_docs:
                logger.info(
                    "%s: extra excerpt for %s ignored for key point derivation",
                    article.key, excerpt.doc_id,
                )
                continue
            seen_docs.add(excerpt.doc_id)
            deduped.append(excerpt)
        relevant = corpus.paraphrase_excerpts(article, deduped, client, paraphrase_endpoint)
        relevant_by_key[article.key] = relevant
        adversarial_by_key[article.key] = corpus.generate_adversarial(
            relevant, client, paraphrase_endpoint
        )
        articles_by_key[article.key] = article

    opposite_of = {corpus.LEFT: corpus.RIGHT, corpus.RIGHT: corpus.LEFT}
    annotated = []
    for key in sorted(articles_by_key):
        article = articles_by_key[key]
        other_key = f"{article.topic}|{opposite_of.get(article.perspective, '')}"
        opposite: tuple[corpus.KeyPoint, ...] = ()
        if other_key in relevant_by_key:
            opposite = corpus.borrow_opposite(
                corpus.KeyPointSet(tuple(relevant_by_key[other_key]))
            )
        if not relevant_by_key[key]:
            logger.warning("%s: no excerpts, article skipped", key)
            continue
        annotated.append(
            corpus.AnnotatedArticle(
                article,
                corpus.KeyPointSet(
                    tuple(relevant_by_key[key]),
                    tuple(adversarial_by_key[key]),
                    opposite,
                ),
            )
        )

    entailment_check = None
    if mode == "fuse":
        def entailment_check(summary_text, key_point_text):
            try:
                score = judge.llm_faithfulness(
                    summary_text, key_point_text, client, faithfulness_endpoint
                )
            except PersumError:
                return False
            return score.raw >= 4

    instances = corpus.build_testset(
        annotated,
        grid=None,
        rng_seed=seed,
        per_article_budget=per_article_budget,
        mode=mode,
        client=client,
        endpoint=paraphrase_endpoint if mode == "fuse" else None,
        entailment_check=entailment_check,
        max_bad=max_bad,
    )
    config = {
        "annotations": str(annotations), "out": str(out), "mode": mode,
        "per_article_budget": per_article_budget, "max_bad": max_bad,
        "mock": mock, "paraphrase_endpoint": paraphrase_endpoint,
        "faithfulness_endpoint": faithfulness_endpoint if mode == "fuse" else None,
        "endpoint_params": _endpoint_params(client),
    }
    header = make_header("build-testset", seed, config)
    write_jsonl(out, header, [corpus.instance_to_record(i) for i in instances])
    click.echo(f"wrote {len(instances)} instances to {out}")


@main.command("eval-metrics")
@click.option("--testset", type=click.Path(exists=True), required=True)
@click.option("--scores", type=click.Path(exists=True), default=None,
              help="Precomputed score matrix (JSONL).")
@click.option("--score-with", type=click.Path(exists=True), default=None,
              help="Scorer spec file (JSON list); scores computed in-run.")
@click.option("--annotations", type=click.Path(exists=True), default=None,
              help="Annotation file supplying article texts for --score-with.")
@click.option("--scores-out", type=click.Path(), default=None,
              help="Where to write the in-run score matrix.")
@click.option("--out", type=click.Path(), required=True)
@seed_option
@jobs_option
@endpoints_option
@mock_option
@click.option("--bootstrap", type=int, default=500, show_default=True)
def eval_metrics_cmd(testset, scores, score_with, annotations, scores_out, out,
                     seed, jobs, endpoints, mock, bootstrap):
    """Benchmark metric scores against a test set's ground truth."""
    _, instance_records = read_jsonl(testset)
    instances = [corpus.instance_from_record(r) for r in instance_records]
    if (scores is None) == (score_with is None):
        raise ConfigError("pass exactly one of --scores / --score-with")
    endpoint_params = None
    if score_with:
        if not annotations:
            raise ConfigError("--score-with requires --annotations for article texts")
        articles = {a.key: a for a, _ in corpus.ingest_annotations(annotations)}
        raw_specs = json.loads(Path(score_with).read_text(encoding="utf-8"))
        specs = [
            judge.ScorerSpec(
                metric_id=s["metric_id"], kind=s["kind"],
                endpoint=s.get("endpoint"), variant=s.get("variant", "mean"),
            )
            for s in raw_specs
        ]
        client = (
            _build_client(endpoints, mock, seed, jobs)
            if any(s.kind != "native_rouge_proxy" for s in specs)
            else None
        )
        if client is not None:
            endpoint_params = _endpoint_params(client)
        scorable = []
        for inst in instances:
            if inst.article_key not in articles:
                raise ConfigError(f"no article text for {inst.article_key}")
            scorable.append(
                judge.ScorableText(
                    inst.instance_id,
                    articles[inst.article_key].full_text(),
                    inst.summary_text,
                )
            )
        matrix = judge.score_batch(scorable, specs, client)
        score_records = matrix.to_records()
        if scores_out:
            matrix_config = {
                "testset": str(testset), "score_with": str(score_with),
                "endpoint_params": endpoint_params,
            }
            write_jsonl(
                scores_out, make_header("eval-metrics", seed, matrix_config), score_records
            )
    else:
        _, score_records = read_jsonl(scores)
    by_metric: dict[str, dict[str, float]] = {}
    for record in score_records:
        if record.get("normalized") is None:
            continue
        by_metric.setdefault(record["metric_id"], {})[record["instance_id"]] = record[
            "normalized"
        ]
    results = []
    for metric_id in sorted(by_metric):
        metric_scores = by_metric[metric_id]
        for attribute in ("coverage", "faithfulness"):
            xs, ys, articles = [], [], []
            for inst in instances:
                if inst.instance_id not in metric_scores:
                    continue
                xs.append(metric_scores[inst.instance_id])
                ys.append(float(getattr(inst, attribute)))
                articles.append(inst.article_key)
            if len(xs) < 3:
                logger.warning("%s/%s: too few scored instances", metric_id, attribute)
                continue
            results.append(
                metricbench.benchmark_metric(
                    metric_id, attribute, xs, ys, articles, seed, bootstrap
                ).to_record()
            )
    config = {
        "testset": str(testset), "scores": str(scores) if scores else None,
        "score_with": str(score_with) if score_with else None,
        "out": str(out), "bootstrap": bootstrap,
        "endpoint_params": endpoint_params,
    }
    payload = {
        "header": make_header("eval-metrics", seed, config),
        "results": results,
        "table_text": _format_bench_table(results),
    }
    write_json(out, payload)
    click.echo(payload["table_text"])


def _format_bench_table(results: list[dict]) -> str:
    metrics = sorted({r["metric_id"] for r in results})
    by_key = {(r["metric_id"], r["attribute"]): r for r in results}
    width = max([len(m) for m in metrics] + [6])
    lines = [
        f"{'Metric'.ljust(width)} | {'Coverage corr':>14} {'Coverage winrate':>18}"
        f" | {'Faith. corr':>12} {'Faith. winrate':>16}"
    ]
    for metric in metrics:
        cells = []
        for attribute in ("coverage", "faithfulness"):
            row = by_key.get((metric, attribute))
            if row is None:
                cells.extend(["-", "-"])
                continue
            rho = "-" if row["rho_s"] is None else f"{row['rho_s']:.3f}{row['stars']}"
            lo, hi = row["winrate_ci95"]
            cells.append(rho)
            cells.append(f"{row['winrate']:.3f} [{lo:.3f},{hi:.3f}]")
        lines.append(
            f"{metric.ljust(width)} | {cells[0]:>14} {cells[1]:>18}"
            f" | {cells[2]:>12} {cells[3]:>16}"
        )
    return "\n".join(lines)


@main.command("rank-methods")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="JSONL of {method, document, score}.")
@click.option("--out", type=click.Path(), required=True)
@seed_option
@click.option("--bootstrap", "-b", type=int, default=500, show_default=True)
@click.option("--mode", type=click.Choice(["per_document", "aggregated"]),
              default="per_document", show_default=True)
def rank_methods_cmd(scores, out, seed, bootstrap, mode):
    """Fit bootstrap Bradley-Terry abilities over per-document method scores."""
    _, records = read_jsonl(scores)
    table = ranking.ScoreTable.from_records(records)
    report = ranking.rank_with_bootstrap(table, bootstrap, seed, mode)
    config = {"scores": str(scores), "out": str(out), "bootstrap": bootstrap, "mode": mode}
    payload = {"header": make_header("rank-methods", seed, config), **report.to_record()}
    write_json(out, payload)
    for row in payload["methods"]:
        lo, hi = row["ci95"]
        click.echo(
            f"#{row['rank']} {row['method']}: ability {row['mean_ability']:.3f} "
            f"[{lo:.3f}, {hi:.3f}]"
        )


@main.command("generate")
@click.option("--pairs", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--method", type=click.Choice(["zero-shot", "self-refine", "debate"]),
              default="zero-shot", show_default=True)
@click.option("--target", type=click.Choice(["Left", "Right", "both"]),
              default="both", show_default=True)
@seed_option
@jobs_option
@endpoints_option
@mock_option
@click.option("--gen-endpoint", default="generator", show_default=True)
@click.option("--iterations", type=int, default=3, show_default=True)
@click.option("--agents", type=int, default=3, show_default=True)
@click.option("--rounds", type=int, default=3, show_default=True)
def generate_cmd(pairs, out, method, target, seed, jobs, endpoints, mock,
                 gen_endpoint, iterations, agents, rounds):
    """Generate perspective summaries with a prompting method."""
    client = _build_client(endpoints, mock, seed, jobs)
    tasks = _tasks_from_pairs(_load_pairs(pairs), target, seed)
    records = []
    for task in tasks:
        calls_before = client.calls
        if method == "zero-shot":
            result = genpipeline.zero_shot(task, client, gen_endpoint)
        elif method == "self-refine":
            result = genpipeline.self_refine(task, client, gen_endpoint, iterations)
        else:
            result = genpipeline.debate(task, client, gen_endpoint, agents, rounds)
        records.append(
            {
                "task_id": task.task_id,
                "pair_id": task.pair.pair_id,
                "perspective": task.target_perspective,
                "method": method,
                "summary": result.text,
                "flagged": result.flagged,
                "calls": client.calls - calls_before,
                "transcript": [
                    {"role": m.role, "text": m.text} for m in result.transcript
                ],
            }
        )
    config = {
        "pairs": str(pairs), "out": str(out), "method": method, "target": target,
        "mock": mock, "gen_endpoint": gen_endpoint, "iterations": iterations,
        "agents": agents, "rounds": rounds,
        "endpoint_params": _endpoint_params(client),
    }
    write_jsonl(out, make_header("generate", seed, config), records)
    click.echo(f"wrote {len(records)} summaries to {out}")


@main.command("rerank")
@click.option("--pairs", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--n", type=int, default=9, show_default=True)
@click.option("--proxy", type=click.Choice(["judge", "rouge"]), default="judge",
              show_default=True)
@click.option("--target", type=click.Choice(["Left", "Right", "both"]),
              default="both", show_default=True)
@seed_option
@jobs_option
@endpoints_option
@mock_option
@click.option("--gen-endpoint", default="generator", show_default=True)
@click.option("--coverage-endpoint", default="judge_coverage", show_default=True)
@click.option("--faithfulness-endpoint", default="judge_faithfulness", show_default=True)
def rerank_cmd(pairs, out, n, proxy, target, seed, jobs, endpoints, mock,
               gen_endpoint, coverage_endpoint, faithfulness_endpoint):
    """Best-of-N rerank with judge or ROUGE proxy scoring."""
    client = _build_client(endpoints, mock, seed, jobs)
    tasks = _tasks_from_pairs(_load_pairs(pairs), target, seed)
    records = []
    for task in tasks:
        if proxy == "judge":
            outcome = genpipeline.rerank(
                task, client, gen_endpoint, coverage_endpoint,
                faithfulness_endpoint, n, rng_seed=seed,
            )
        else:
            outcome = genpipeline.rerank_rouge_proxy(
                task, client, gen_endpoint, n, rng_seed=seed
            )
        records.append(
            {
                "task_id": task.task_id,
                "best": outcome.best.text,
                "best_score": outcome.best.combined,
                "degenerate": outcome.degenerate,
                "candidates": [
                    {
                        "text": c.text,
                        "sample_index": c.sample_index,
                        "scores": c.scores,
                        "combined": c.combined,
                    }
                    for c in outcome.candidate_set.candidates
                ],
            }
        )
    config = {
        "pairs": str(pairs), "out": str(out), "n": n, "proxy": proxy,
        "target": target, "mock": mock, "gen_endpoint": gen_endpoint,
        "coverage_endpoint": coverage_endpoint,
        "faithfulness_endpoint": faithfulness_endpoint,
        "endpoint_params": _endpoint_params(client),
    }
    write_jsonl(out, make_header("rerank", seed, config), records)
    click.echo(f"wrote {len(records)} reranked summaries to {out}")


@main.command("export-dpo")
@click.option("--pairs", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--candidates", type=int, default=3, show_default=True)
@click.option("--margin", type=float, default=0.05, show_default=True)
@click.option("--pairs-per-input", type=int, default=1, show_default=True)
@click.option("--target", type=click.Choice(["Left", "Right", "both"]),
              default="both", show_default=True)
@click.option("--schedule", type=click.Path(exists=True), default=None,
              help="JSON mapping epoch -> generation endpoint name.")
@seed_option
@jobs_option
@endpoints_option
@mock_option
@click.option("--gen-endpoint", default="generator", show_default=True)
@click.option("--coverage-endpoint", default="judge_coverage", show_default=True)
@click.option("--faithfulness-endpoint", default="judge_faithfulness", show_default=True)
def export_dpo_cmd(pairs, out_dir, epochs, candidates, margin, pairs_per_input,
                   target, schedule, seed, jobs, endpoints, mock, gen_endpoint,
                   coverage_endpoint, faithfulness_endpoint):
    """Run the epoch loop and export preference-pair files for a trainer."""
    client = _build_client(endpoints, mock, seed, jobs)
    tasks = _tasks_from_pairs(_load_pairs(pairs), target, seed)
    if schedule:
        raw = json.loads(Path(schedule).read_text(encoding="utf-8"))
        endpoint_schedule = {int(k): v for k, v in raw.items()}
    else:
        endpoint_schedule = {e: gen_endpoint for e in range(epochs)}
    config = {
        "pairs": str(pairs), "out_dir": str(out_dir), "epochs": epochs,
        "candidates": candidates, "margin": margin,
        "pairs_per_input": pairs_per_input, "target": target, "mock": mock,
        "schedule": {str(k): v for k, v in sorted(endpoint_schedule.items())},
        "coverage_endpoint": coverage_endpoint,
        "faithfulness_endpoint": faithfulness_endpoint,
        "endpoint_params": _endpoint_params(client),
    }
    header = make_header("export-dpo", seed, config)
    exports = genpipeline.dpo_rr_epoch_loop(
        tasks, client, endpoint_schedule, coverage_endpoint, faithfulness_endpoint,
        out_dir, epochs, candidates, margin, pairs_per_input, seed, header,
    )
    manifest = {
        "header": header,
        "exports": [
            {"epoch": e.epoch, "endpoint": e.endpoint, "path": e.path.name,
             "n_pairs": e.n_pairs}
            for e in exports
        ],
    }
    write_json(Path(out_dir) / "exports.json", manifest)
    click.echo(f"exported {len(exports)} epoch files to {out_dir}")


@main.command("iaa")
@click.option("--annotations-a", type=click.Path(exists=True), required=True)
@click.option("--annotations-b", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--tau", type=float, default=0.5, show_default=True)
@click.option("--baseline-trials", type=int, default=0, show_default=True,
              help="If > 0, also simulate the random-annotator baseline.")
@seed_option
def iaa_cmd(annotations_a, annotations_b, out, tau, baseline_trials, seed):
    """Inter-annotator agreement between two annotation files."""
    side_a = {a.key: excerpts for a, excerpts in corpus.ingest_annotations(annotations_a)}
    side_b = {a.key: excerpts for a, excerpts in corpus.ingest_annotations(annotations_b)}
    shared = sorted(side_a.keys() & side_b.keys())
    if not shared:
        raise ConfigError("no shared articles between the two files")
    per_article = []
    for key in shared:
        report = textmetrics.agreement(
            [e.text for e in side_a[key]], [e.text for e in side_b[key]], tau
        )
        per_article.append(
            {
                "article": key,
                "r_a_given_b": report.r_a_given_b,
                "r_b_given_a": report.r_b_given_a,
                "r_overall": report.r_overall,
                "n_a": len(side_a[key]),
                "n_b": len(side_b[key]),
            }
        )
    overall = [row["r_overall"] for row in per_article]
    payload_stats = {
        "mean": float(np.mean(overall)),
        "sd": float(np.std(overall, ddof=1)) if len(overall) > 1 else 0.0,
    }
    baseline = None
    if baseline_trials > 0:
        counts = [row["n_a"] for row in per_article] + [row["n_b"] for row in per_article]
        lengths = [
            len(e.text)
            for key in shared
            for e in (*side_a[key], *side_b[key])
        ]
        doc_lengths = [
            len(d.text)
            for a, _ in corpus.ingest_annotations(annotations_a)
            for d in a.documents
        ]
        stats = textmetrics.HighlightStats(
            count_mean=float(np.mean(counts)),
            count_var=float(np.var(counts, ddof=1)) if len(counts) > 1 else 0.0,
            length_mean=float(np.mean(lengths)) if lengths else 1.0,
            length_var=float(np.var(lengths, ddof=1)) if len(lengths) > 1 else 0.0,
            text_length=int(np.mean(doc_lengths)),
        )
        baseline = textmetrics.iaa_random_baseline(stats, seed, baseline_trials, tau)
    config = {
        "annotations_a": str(annotations_a), "annotations_b": str(annotations_b),
        "out": str(out), "tau": tau, "baseline_trials": baseline_trials,
    }
    payload = {
        "header": make_header("iaa", seed, config),
        "per_article": per_article,
        "overall": payload_stats,
        "random_baseline": baseline,
    }
    write_json(out, payload)
    click.echo(f"R_overall = {payload_stats['mean']:.3f} +/- {payload_stats['sd']:.3f}")


@main.command("abstractiveness")
@click.option("--pairs", type=click.Path(exists=True), required=True)
@click.option("--summaries", type=click.Path(exists=True), required=True,
              help="JSONL of {pair_id, perspective, method, summary}.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--ngram", type=int, default=4, show_default=True)
@seed_option
def abstractiveness_cmd(pairs, summaries, out, ngram, seed):
    """Novel n-gram, extractive fragment, length, and compression statistics."""
    pair_map = {p.pair_id: p for p in _load_pairs(pairs)}
    _, records = read_jsonl(summaries)
    values: dict[str, dict[str, list[float]]] = {}
    for record in records:
        pair = pair_map.get(record["pair_id"])
        if pair is None:
            raise ConfigError(f"unknown pair_id: {record['pair_id']}")
        article = textmetrics.tokenize(pair.side(record["perspective"]).full_text())
        summary = textmetrics.tokenize(record["summary"])
        frags = textmetrics.extractive_fragments(article, summary)
        metrics = {
            "ef_coverage": frags.ef_coverage,
            "ef_density": frags.ef_density,
            "compression": frags.compression,
            "summary_length": float(len(summary)),
        }
        try:
            metrics[f"novel_{ngram}gram"] = textmetrics.novel_ngram_ratio(
                summary, article, ngram
            )
        except PersumError:
            logger.warning(
                "%s/%s: summary shorter than %d tokens, novel n-gram skipped",
                record["pair_id"], record["perspective"], ngram,
            )
        method_values = values.setdefault(record["method"], {})
        for name, value in metrics.items():
            method_values.setdefault(name, []).append(value)
    summary_stats = {
        method: {
            name: {
                "mean": float(np.mean(vals)),
                "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                "n": len(vals),
            }
            for name, vals in sorted(values[method].items())
        }
        for method in sorted(values)
    }
    config = {
        "pairs": str(pairs), "summaries": str(summaries), "out": str(out),
        "ngram": ngram,
    }
    payload = {
        "header": make_header("abstractiveness", seed, config),
        "methods": summary_stats,
    }
    write_json(out, payload)
    click.echo(f"wrote abstractiveness report for {len(summary_stats)} methods")


@main.command("human-scores")
@click.option("--records", "records_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@seed_option
def human_scores_cmd(records_path, out, seed):
    """Coverage/faithfulness from human key point annotations."""
    raw = json.loads(Path(records_path).read_text(encoding="utf-8"))
    if isinstance(raw, dict):
        raw = [raw]
    records = []
    for entry in raw:
        records.append(
            metricbench.HumanEvalRecord(
                instance_id=entry["instance_id"],
                method=entry.get("method", "unknown"),
                doc_keypoints=tuple(_kp_ids(entry["doc_keypoints"])),
                summary_keypoints=tuple(_kp_ids(entry["summary_keypoints"])),
                included_doc_ids=frozenset(entry["included_doc_ids"]),
                supported_summary_ids=frozenset(entry["supported_summary_ids"]),
                annotator_id=entry.get("annotator_id", "default"),
            )
        )
    per_record = []
    by_method: dict[str, list[metricbench.HumanEvalRecord]] = {}
    for record in records:
        coverage, faithfulness = metricbench.human_scores(record)
        per_record.append(
            {
                "instance_id": record.instance_id,
                "method": record.method,
                "coverage": float(coverage),
                "faithfulness": float(faithfulness),
            }
        )
        by_method.setdefault(record.method, []).append(record)
    methods = {}
    inclusion = metricbench.keypoint_inclusion_stats(by_method)
    for method in sorted(by_method):
        rows = [r for r in per_record if r["method"] == method]
        methods[method] = {
            "coverage_mean": float(np.mean([r["coverage"] for r in rows])),
            "faithfulness_mean": float(np.mean([r["faithfulness"] for r in rows])),
            "inclusion": inclusion[method],
        }
    config = {"records": str(records_path), "out": str(out)}
    payload = {
        "header": make_header("human-scores", seed, config),
        "records": per_record,
        "methods": methods,
    }
    write_json(out, payload)
    click.echo(f"scored {len(per_record)} records")


def _kp_ids(raw_list):
    ids = []
    for item in raw_list:
        if isinstance(item, dict):
            ids.append(item["kp_id"])
        else:
            ids.append(item)
    return ids


if __name__ == "__main__":
    main()
