"""Model-based scoring: prompt judges for coverage and faithfulness with
strict output parsing, plus adapters that put external scorers and native
metrics behind one interface."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field

from . import prompts, textmetrics
from .errors import ConfigError, ScoreParseError, ScoringError

logger = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


@dataclass(frozen=True)
class Provenance:
    endpoint: str
    prompt_digest: str
    attempts: int = 1

    def digest(self) -> str:
        material = f"{self.endpoint}|{self.prompt_digest}|{self.attempts}"
        return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class JudgeScore:
    metric_id: str
    raw: float
    normalized: float
    provenance: Provenance

    def __post_init__(self):
        if not 0.0 <= self.normalized <= 1.0:
            raise ScoringError(f"normalized score out of range: {self.normalized}")


def parse_scale_score(completion: str) -> int:
    """Extract the final 1..5 judgement from a completion.

    Takes the last numeric token, tolerating leading reasoning; a decimal or
    any integer outside {1..5} is a parse failure.
    """
    tokens = _NUMBER_RE.findall(completion)
    if not tokens:
        raise ScoreParseError("completion contains no numeric token")
    last = tokens[-1]
    if "." in last:
        raise ScoreParseError(f"final numeric token is not an integer: {last}")
    value = int(last)
    if value not in (1, 2, 3, 4, 5):
        raise ScoreParseError(f"final integer outside the 1..5 scale: {value}")
    return value


def normalize_scale(raw: int) -> float:
    return (raw - 1) / 4


def _prompt_judge(
    metric_id: str,
    template_id: str,
    article_text: str,
    summary_text: str,
    client,
    endpoint: str,
    retries: int = 3,
) -> JudgeScore:
    if not article_text or not summary_text:
        raise ScoringError(f"{metric_id}: article and summary must be non-empty")
    prompt = prompts.render(
        template_id, {"article": article_text, "summary": summary_text}
    )
    digest = prompts.get_template(template_id).digest()
    last_error = None
    for attempt in range(retries):
        completion = client.complete(endpoint, prompt, sample_index=attempt)
        try:
            raw = parse_scale_score(completion)
        except ScoreParseError as exc:
            last_error = exc
            continue
        return JudgeScore(
            metric_id=metric_id,
            raw=raw,
            normalized=normalize_scale(raw),
            provenance=Provenance(endpoint, digest, attempts=attempt + 1),
        )
    raise ScoringError(
        f"{metric_id}: unparseable after {retries} attempts: {last_error}"
    )


def llm_coverage(
    article_text: str, summary_text: str, client, endpoint: str, retries: int = 3
) -> JudgeScore:
    """Prompt-based 1..5 coverage judgement, normalized to [0, 1]."""
    return _prompt_judge(
        "llm_coverage", "llm_coverage", article_text, summary_text,
        client, endpoint, retries,
    )


def llm_faithfulness(
    article_text: str, summary_text: str, client, endpoint: str, retries: int = 3
) -> JudgeScore:
    """Prompt-based 1..5 faithfulness judgement, normalized to [0, 1]."""
    return _prompt_judge(
        "llm_faithfulness", "llm_faithfulness", article_text, summary_text,
        client, endpoint, retries,
    )


# -- unified scorer interface -------------------------------------------------


@dataclass(frozen=True)
class ScorerSpec:
    """One scoring backend: kind decides how config is interpreted.

    kinds: llm_coverage / llm_faithfulness (endpoint = judge endpoint name),
    external (endpoint = scorer name), native_rouge_proxy (no endpoint;
    optional ``variant`` of recall/precision/mean).
    """

    metric_id: str
    kind: str
    endpoint: str | None = None
    variant: str = "mean"

    def __post_init__(self):
        kinds = ("llm_coverage", "llm_faithfulness", "external", "native_rouge_proxy")
        if self.kind not in kinds:
            raise ConfigError(f"unknown scorer kind: {self.kind}")
        if self.kind != "native_rouge_proxy" and not self.endpoint:
            raise ConfigError(f"scorer {self.metric_id}: endpoint required")


def rouge_proxy_score(reference_text: str, summary_text: str, variant: str = "mean") -> float:
    """Mean ROUGE-{1,2,L} over the requested precision/recall variants."""
    ref = textmetrics.tokenize(reference_text)
    cand = textmetrics.tokenize(summary_text)
    results = [
        textmetrics.rouge_n(cand, ref, 1),
        textmetrics.rouge_n(cand, ref, 2),
        textmetrics.rouge_l(cand, ref),
    ]
    if variant == "mean":
        values = [r[k] for r in results for k in ("precision", "recall")]
    elif variant in ("precision", "recall"):
        values = [r[variant] for r in results]
    else:
        raise ConfigError(f"unknown rouge proxy variant: {variant}")
    return sum(values) / len(values)


def make_scorer(spec: ScorerSpec, client=None, retries: int = 3):
    """Return ``score(article_text, summary_text) -> JudgeScore`` for a spec."""
    if spec.kind in ("llm_coverage", "llm_faithfulness"):
        judge_fn = llm_coverage if spec.kind == "llm_coverage" else llm_faithfulness

        def score(article_text, summary_text):
            base = judge_fn(article_text, summary_text, client, spec.endpoint, retries)
            return JudgeScore(spec.metric_id, base.raw, base.normalized, base.provenance)

        return score
    if spec.kind == "external":

        def score(article_text, summary_text):
            value = client.external_score(spec.endpoint, article_text, summary_text)
            return JudgeScore(
                spec.metric_id, value, value, Provenance(spec.endpoint, "external")
            )

        return score

    def score(article_text, summary_text):
        value = rouge_proxy_score(article_text, summary_text, spec.variant)
        return JudgeScore(
            spec.metric_id, value, value,
            Provenance("native", f"rouge-{spec.variant}|{textmetrics.TOKENIZER_TAG}"),
        )

    return score


# -- batch scoring -------------------------------------------------------------


@dataclass(frozen=True)
class ScorableText:
    instance_id: str
    article_text: str
    summary_text: str


@dataclass
class ScoreMatrix:
    """instance x metric normalized scores; unscored cells stay None."""

    instance_ids: list[str]
    metric_ids: list[str]
    cells: dict[tuple[str, str], JudgeScore | None] = field(default_factory=dict)

    def get(self, instance_id: str, metric_id: str) -> JudgeScore | None:
        return self.cells.get((instance_id, metric_id))

    def column(self, metric_id: str) -> list[float | None]:
        return [
            None if (score := self.get(i, metric_id)) is None else score.normalized
            for i in self.instance_ids
        ]

    def to_records(self) -> list[dict]:
        records = []
        for instance_id in self.instance_ids:
            for metric_id in self.metric_ids:
                score = self.get(instance_id, metric_id)
                records.append(
                    {
                        "instance_id": instance_id,
                        "metric_id": metric_id,
                        "raw": None if score is None else score.raw,
                        "normalized": None if score is None else score.normalized,
                        "provenance": None if score is None else score.provenance.digest(),
                    }
                )
        return records


def score_batch(
    instances: list[ScorableText],
    scorer_specs: list[ScorerSpec],
    client=None,
    retries: int = 3,
    max_unscored_frac: float = 0.25,
) -> ScoreMatrix:
    """Score every instance with every scorer; canonical row/column order.

    Cells fan out over a thread pool bounded by the client's parallelism
    limit; assembly is order-independent (cells are keyed, output sorted).
    Individual scoring failures leave explicit null cells; the whole run fails
    only when the unscored fraction exceeds ``max_unscored_frac``.
    """
    from concurrent.futures import ThreadPoolExecutor

    ids = [inst.instance_id for inst in instances]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate instance_id in batch")
    matrix = ScoreMatrix(
        instance_ids=sorted(ids),
        metric_ids=sorted(spec.metric_id for spec in scorer_specs),
    )
    by_id = {inst.instance_id: inst for inst in instances}
    scorers = {spec.metric_id: make_scorer(spec, client, retries) for spec in scorer_specs}

    def run_cell(instance_id, metric_id):
        inst = by_id[instance_id]
        try:
            return scorers[metric_id](inst.article_text, inst.summary_text)
        except ScoringError as exc:
            logger.warning("unscored cell (%s, %s): %s", instance_id, metric_id, exc)
            return None

    cells = [(i, m) for i in matrix.instance_ids for m in matrix.metric_ids]
    workers = max(1, getattr(client, "max_parallel", 1)) if client else 1
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(lambda cell: run_cell(*cell), cells)
            for cell, score in zip(cells, results):
                matrix.cells[cell] = score
    else:
        for cell in cells:
            matrix.cells[cell] = run_cell(*cell)
    unscored = sum(1 for score in matrix.cells.values() if score is None)
    total = len(cells)
    if total and unscored / total > max_unscored_frac:
        raise ScoringError(
            f"{unscored}/{total} cells unscored, above threshold {max_unscored_frac}"
        )
    return matrix
