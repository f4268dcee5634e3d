"""Summary generation methods and the reranking / preference-pair data loop:
zero-shot, self-refine, multi-agent debate, best-of-N reranking, and the
epoch-wise preference-pair export for external trainers."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from . import judge, prompts
from .corpus import LEFT, RIGHT, SourceArticle
from .errors import ConfigError, ParameterError, RerankError, ScoringError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArticlePair:
    pair_id: str
    left: SourceArticle
    right: SourceArticle

    def __post_init__(self):
        if self.left.topic != self.right.topic:
            raise ParameterError(f"pair {self.pair_id}: topics differ")

    def side(self, perspective: str) -> SourceArticle:
        if perspective == LEFT:
            return self.left
        if perspective == RIGHT:
            return self.right
        raise ParameterError(f"unknown perspective: {perspective}")


@dataclass(frozen=True)
class GenerationTask:
    pair: ArticlePair
    target_perspective: str
    seed: int = 0

    def __post_init__(self):
        if self.target_perspective not in (LEFT, RIGHT):
            raise ParameterError(
                f"target perspective must be {LEFT} or {RIGHT}, "
                f"got {self.target_perspective}"
            )

    @property
    def task_id(self) -> str:
        return f"{self.pair.pair_id}|{self.target_perspective}"

    def zero_shot_prompt(self) -> str:
        template = "zero_shot_left" if self.target_perspective == LEFT else "zero_shot_right"
        return prompts.render(
            template,
            {
                "left_article": self.pair.left.full_text(),
                "right_article": self.pair.right.full_text(),
            },
        )

    def target_text(self) -> str:
        return self.pair.side(self.target_perspective).full_text()


@dataclass(frozen=True)
class Message:
    role: str
    text: str


@dataclass(frozen=True)
class GenerationResult:
    text: str
    flagged: bool = False
    transcript: tuple[Message, ...] = ()


def _required_prefix(perspective: str) -> str:
    return f"The {perspective} "


def zero_shot(
    task: GenerationTask, client, endpoint: str, retries: int = 3
) -> GenerationResult:
    """Single-completion summary; the perspective prefix is enforced with
    retries, and a persistent violation flags the output."""
    prompt = task.zero_shot_prompt()
    prefix = _required_prefix(task.target_perspective)
    text = ""
    for attempt in range(retries):
        text = client.complete(endpoint, prompt, sample_index=attempt).strip()
        if text.startswith(prefix):
            return GenerationResult(text, transcript=(Message("draft", text),))
    logger.warning("%s: prefix violation after %d attempts", task.task_id, retries)
    return GenerationResult(text, flagged=True, transcript=(Message("draft", text),))


def self_refine(
    task: GenerationTask, client, endpoint: str, iterations: int = 3
) -> GenerationResult:
    """Draft, then critique/revise ``iterations`` times; transcript retained."""
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    bindings = {
        "left_article": task.pair.left.full_text(),
        "right_article": task.pair.right.full_text(),
        "perspective": task.target_perspective,
    }
    draft = zero_shot(task, client, endpoint)
    transcript = [Message("draft", draft.text)]
    summary = draft.text
    for _ in range(iterations):
        critique = client.complete(
            endpoint,
            prompts.render("refine_critique", {**bindings, "summary": summary}),
        ).strip()
        transcript.append(Message("critique", critique))
        summary = client.complete(
            endpoint,
            prompts.render(
                "refine_revise", {**bindings, "summary": summary, "critique": critique}
            ),
        ).strip()
        transcript.append(Message("revision", summary))
    return GenerationResult(summary, flagged=draft.flagged, transcript=tuple(transcript))


def debate(
    task: GenerationTask, client, endpoint: str, agents: int = 3, rounds: int = 3
) -> GenerationResult:
    """Multi-agent debate: drafts, per-round updates against the other agents'
    latest drafts, then one aggregator call (m + m*n + 1 completions)."""
    if agents < 2:
        raise ParameterError("agents must be >= 2")
    if rounds < 1:
        raise ParameterError("rounds must be >= 1")
    bindings = {
        "left_article": task.pair.left.full_text(),
        "right_article": task.pair.right.full_text(),
        "perspective": task.target_perspective,
    }
    zero_prompt = task.zero_shot_prompt()
    drafts = []
    transcript = []
    for agent in range(agents):
        text = client.complete(endpoint, zero_prompt, sample_index=agent).strip()
        drafts.append(text)
        transcript.append(Message(f"agent{agent}.draft", text))
    for round_idx in range(rounds):
        updated = []
        for agent in range(agents):
            others = "\n".join(
                f"- {d}" for k, d in enumerate(drafts) if k != agent
            )
            prompt = prompts.render(
                "debate_update",
                {**bindings, "own_draft": drafts[agent], "other_drafts": others},
            )
            text = client.complete(endpoint, prompt, sample_index=agent).strip()
            updated.append(text)
            transcript.append(Message(f"agent{agent}.round{round_idx + 1}", text))
        drafts = updated
    final = client.complete(
        endpoint,
        prompts.render(
            "debate_aggregate",
            {**bindings, "drafts": "\n".join(f"- {d}" for d in drafts)},
        ),
    ).strip()
    transcript.append(Message("aggregate", final))
    return GenerationResult(final, transcript=tuple(transcript))


# -- reranking -----------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    text: str
    sample_index: int
    scores: dict[str, float] | None = None  # normalized per proxy metric
    combined: float | None = None


@dataclass(frozen=True)
class CandidateSet:
    task_id: str
    prompt: str
    candidates: tuple[Candidate, ...]

    @property
    def n(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class RerankOutcome:
    best: Candidate
    candidate_set: CandidateSet
    degenerate: bool = False


def sample_candidates(
    task: GenerationTask, client, endpoint: str, n: int
) -> CandidateSet:
    """N completions of the zero-shot prompt at distinct sample indices."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    prompt = task.zero_shot_prompt()
    candidates = tuple(
        Candidate(client.complete(endpoint, prompt, sample_index=i).strip(), i)
        for i in range(n)
    )
    return CandidateSet(task.task_id, prompt, candidates)


def _argmax_with_ties(values: list[float], rng: random.Random) -> int:
    best = max(values)
    tied = [i for i, v in enumerate(values) if v == best]
    return tied[0] if len(tied) == 1 else rng.choice(tied)


def _select(
    candidate_set: CandidateSet, scored: list[Candidate], rng_seed: int
) -> RerankOutcome:
    if len(scored) * 2 < candidate_set.n:
        raise RerankError(
            f"{len(candidate_set.candidates) - len(scored)} of "
            f"{candidate_set.n} candidates unscored"
        )
    rng = random.Random(rng_seed)
    pick = _argmax_with_ties([c.combined for c in scored], rng)
    texts = {c.text for c in candidate_set.candidates}
    return RerankOutcome(
        best=scored[pick],
        candidate_set=CandidateSet(
            candidate_set.task_id, candidate_set.prompt, tuple(scored)
        ),
        degenerate=len(texts) == 1,
    )


def score_candidates(
    candidate_set: CandidateSet,
    reference_text: str,
    client,
    coverage_endpoint: str,
    faithfulness_endpoint: str,
    weights: tuple[float, float] = (0.5, 0.5),
    retries: int = 3,
) -> list[Candidate]:
    """Judge each candidate for coverage and faithfulness; combined score is
    the weighted mean of the two normalized judgements."""
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ConfigError("judge weights must sum to 1")
    scored = []
    for candidate in candidate_set.candidates:
        try:
            cov = judge.llm_coverage(
                reference_text, candidate.text, client, coverage_endpoint, retries
            )
            faith = judge.llm_faithfulness(
                reference_text, candidate.text, client, faithfulness_endpoint, retries
            )
        except ScoringError as exc:
            logger.warning(
                "%s candidate %d unscored: %s",
                candidate_set.task_id, candidate.sample_index, exc,
            )
            continue
        scores = {"coverage": cov.normalized, "faithfulness": faith.normalized}
        combined = weights[0] * cov.normalized + weights[1] * faith.normalized
        scored.append(
            Candidate(candidate.text, candidate.sample_index, scores, combined)
        )
    return scored


def rerank(
    task: GenerationTask,
    client,
    gen_endpoint: str,
    coverage_endpoint: str,
    faithfulness_endpoint: str,
    n: int = 9,
    rng_seed: int = 0,
    weights: tuple[float, float] = (0.5, 0.5),
    retries: int = 3,
) -> RerankOutcome:
    """Best-of-N selection under the two prompt judges.

    Ties break by a seeded coin flip; more than half the candidates unscored
    aborts the selection.
    """
    candidate_set = sample_candidates(task, client, gen_endpoint, n)
    scored = score_candidates(
        candidate_set, task.target_text(), client,
        coverage_endpoint, faithfulness_endpoint, weights, retries,
    )
    return _select(candidate_set, scored, rng_seed)


def rerank_rouge_proxy(
    task: GenerationTask,
    client,
    gen_endpoint: str,
    n: int = 9,
    reference_text: str | None = None,
    rng_seed: int = 0,
) -> RerankOutcome:
    """Best-of-N under the native ROUGE proxy (mean of ROUGE-1/2/L precision
    and recall) against a pseudo-reference, by default the concatenated
    target-perspective documents."""
    candidate_set = sample_candidates(task, client, gen_endpoint, n)
    reference = reference_text if reference_text is not None else task.target_text()
    scored = []
    for candidate in candidate_set.candidates:
        value = judge.rouge_proxy_score(reference, candidate.text)
        scored.append(
            Candidate(
                candidate.text, candidate.sample_index,
                {"rouge_proxy": value}, value,
            )
        )
    return _select(candidate_set, scored, rng_seed)


# -- preference pairs ----------------------------------------------------------


@dataclass(frozen=True)
class PreferencePair:
    prompt: str
    chosen: str
    rejected: str
    chosen_score: float
    rejected_score: float
    epoch: int = 0

    def __post_init__(self):
        if self.chosen == self.rejected:
            raise ParameterError("chosen and rejected must differ")
        if not self.chosen_score > self.rejected_score:
            raise ParameterError("chosen_score must exceed rejected_score")


def build_preference_pairs(
    candidate_sets: list[CandidateSet],
    margin: float = 0.05,
    pairs_per_input: int = 1,
    epoch: int = 0,
) -> list[PreferencePair]:
    """Extremal pairing per input: pairs ordered by descending score gap,
    keeping those with gap >= margin (and > 0); inputs yielding none are
    skipped with a log line."""
    if pairs_per_input < 1:
        raise ParameterError("pairs_per_input must be >= 1")
    pairs = []
    for candidate_set in candidate_sets:
        scored = [c for c in candidate_set.candidates if c.combined is not None]
        if len(scored) < 2:
            logger.info("%s: fewer than two scored candidates", candidate_set.task_id)
            continue
        ranked = sorted(scored, key=lambda c: (-c.combined, c.sample_index))
        options = []
        for hi_idx, hi in enumerate(ranked):
            for lo in ranked[hi_idx + 1 :]:
                gap = hi.combined - lo.combined
                if gap <= 0 or gap < margin or hi.text == lo.text:
                    continue
                options.append((gap, hi, lo))
        options.sort(key=lambda o: (-o[0], o[1].sample_index, o[2].sample_index))
        if not options:
            logger.info("%s: no pair meets margin %.3f", candidate_set.task_id, margin)
            continue
        for gap, hi, lo in options[:pairs_per_input]:
            pairs.append(
                PreferencePair(
                    prompt=candidate_set.prompt,
                    chosen=hi.text,
                    rejected=lo.text,
                    chosen_score=hi.combined,
                    rejected_score=lo.combined,
                    epoch=epoch,
                )
            )
    return pairs


# -- preference data epochs ------------------------------------------------------


@dataclass(frozen=True)
class EpochExport:
    epoch: int
    endpoint: str
    path: Path
    n_pairs: int


def dpo_rr_epoch_loop(
    tasks: list[GenerationTask],
    client,
    endpoint_schedule: dict[int, str],
    coverage_endpoint: str,
    faithfulness_endpoint: str,
    out_dir: str | Path,
    epochs: int = 10,
    candidates_per_input: int = 3,
    margin: float = 0.05,
    pairs_per_input: int = 1,
    seed: int = 0,
    header: dict | None = None,
) -> list[EpochExport]:
    """Per epoch: sample candidates with the scheduled endpoint, judge-score,
    pair, and export one JSONL file. Weight updates happen outside; the
    schedule maps each epoch to the endpoint serving that epoch's model. A
    missing epoch halts the loop with all prior exports intact.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    exports = []
    for epoch in range(epochs):
        if epoch not in endpoint_schedule:
            logger.warning("no endpoint scheduled for epoch %d; halting", epoch)
            break
        gen_endpoint = endpoint_schedule[epoch]
        candidate_sets = []
        for task in tasks:
            candidate_set = sample_candidates(
                task, client, gen_endpoint, candidates_per_input
            )
            scored = score_candidates(
                candidate_set, task.target_text(), client,
                coverage_endpoint, faithfulness_endpoint,
            )
            candidate_sets.append(
                CandidateSet(candidate_set.task_id, candidate_set.prompt, tuple(scored))
            )
        pairs = build_preference_pairs(candidate_sets, margin, pairs_per_input, epoch)
        path = out_dir / f"pairs_epoch{epoch:03d}.jsonl"
        judge_digests = prompts.prompt_digests(["llm_coverage", "llm_faithfulness"])
        lines = []
        if header is not None:
            lines.append(json.dumps({"_header": {**header, "epoch": epoch}}, ensure_ascii=False))
        for pair in pairs:
            lines.append(
                json.dumps(
                    {
                        "prompt": pair.prompt,
                        "chosen": pair.chosen,
                        "rejected": pair.rejected,
                        "chosen_score": pair.chosen_score,
                        "rejected_score": pair.rejected_score,
                        "epoch": pair.epoch,
                        "seed": seed,
                        "judge": {
                            "coverage_endpoint": coverage_endpoint,
                            "faithfulness_endpoint": faithfulness_endpoint,
                            "prompt_digests": judge_digests,
                        },
                    },
                    ensure_ascii=False,
                )
            )
        tmp = path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(path)
        exports.append(EpochExport(epoch, gen_endpoint, path, len(pairs)))
    return exports
