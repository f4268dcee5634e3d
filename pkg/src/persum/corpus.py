"""Data model, annotation ingestion, and construction of synthetic
perspective-summary test sets with exact ground-truth scores."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import prompts
from .errors import (
    AnnotationSchemaError,
    DegenerateCompositionError,
    SpanIntegrityError,
    SplitSizeError,
)

logger = logging.getLogger(__name__)

LEFT = "Left"
RIGHT = "Right"

CONCAT_CONNECTIVES = ("Additionally,", "Furthermore,", "Moreover,")
KEY_POINT_PREFIX = "The article argues"


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class SourceArticle:
    """One topic+perspective document set."""

    topic: str
    perspective: str
    documents: tuple[Document, ...]

    def __post_init__(self):
        if not self.documents:
            raise AnnotationSchemaError(f"article {self.key}: documents is empty")
        ids = [d.doc_id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise AnnotationSchemaError(f"article {self.key}: duplicate doc_id")

    @property
    def key(self) -> str:
        return f"{self.topic}|{self.perspective}"

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise AnnotationSchemaError(f"article {self.key}: unknown doc_id {doc_id}")

    def full_text(self) -> str:
        return "\n\n".join(d.text for d in self.documents)


@dataclass(frozen=True)
class Excerpt:
    """A highlighted character span [start, end) in one document."""

    doc_id: str
    start: int
    end: int
    text: str
    annotator_id: str = "default"

    def validate_against(self, document: Document):
        if not 0 <= self.start < self.end <= len(document.text):
            raise AnnotationSchemaError(
                f"excerpt span [{self.start}, {self.end}) out of bounds for "
                f"document {self.doc_id} (len {len(document.text)})"
            )
        if document.text[self.start : self.end] != self.text:
            raise SpanIntegrityError(
                f"excerpt text disagrees with document {self.doc_id} "
                f"at span [{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class KeyPoint:
    kp_id: str
    text: str
    origin: str = "relevant"  # relevant | adversarial | opposite
    source_doc_id: str | None = None
    source_kp_id: str | None = None
    flagged: bool = False


@dataclass(frozen=True)
class KeyPointSet:
    """Relevant key points plus the unfaithful pool for one article."""

    relevant: tuple[KeyPoint, ...]
    adversarial: tuple[KeyPoint, ...] = ()
    opposite: tuple[KeyPoint, ...] = ()

    def __post_init__(self):
        if len(self.adversarial) > len(self.relevant):
            raise AnnotationSchemaError("more adversarial key points than relevant")
        relevant_ids = {kp.kp_id for kp in self.relevant}
        for kp in self.adversarial:
            if kp.source_kp_id not in relevant_ids:
                raise AnnotationSchemaError(
                    f"adversarial {kp.kp_id} does not link to a relevant key point"
                )
        all_ids = [kp.kp_id for kp in self.relevant + self.adversarial + self.opposite]
        if len(set(all_ids)) != len(all_ids):
            raise AnnotationSchemaError("kp_ids not unique across key point lists")

    def bad_pool(self) -> tuple[KeyPoint, ...]:
        return self.adversarial + self.opposite

    def by_id(self) -> dict[str, KeyPoint]:
        return {
            kp.kp_id: kp
            for kp in self.relevant + self.adversarial + self.opposite
        }


@dataclass(frozen=True)
class AnnotatedArticle:
    article: SourceArticle
    key_points: KeyPointSet


@dataclass(frozen=True)
class SummaryComposition:
    included_relevant: frozenset[str]
    included_bad: frozenset[str]
    order: tuple[str, ...]
    mode: str = "concat"  # concat | fuse

    def __post_init__(self):
        if self.included_relevant & self.included_bad:
            raise DegenerateCompositionError("relevant and bad selections overlap")
        if self.k_g + self.k_b == 0:
            raise DegenerateCompositionError("empty composition: k_g = k_b = 0")
        if set(self.order) != self.included_relevant | self.included_bad or len(
            self.order
        ) != self.k_g + self.k_b:
            raise DegenerateCompositionError("order is not a permutation of the union")

    @property
    def k_g(self) -> int:
        return len(self.included_relevant)

    @property
    def k_b(self) -> int:
        return len(self.included_bad)


def score_composition(
    composition: SummaryComposition, total_relevant: int
) -> tuple[Fraction, Fraction]:
    """Exact ground-truth (coverage, faithfulness) for a composition."""
    if total_relevant < 1:
        raise DegenerateCompositionError("total_relevant must be >= 1")
    if composition.k_g > total_relevant:
        raise DegenerateCompositionError(
            f"k_g={composition.k_g} exceeds total_relevant={total_relevant}"
        )
    coverage = Fraction(composition.k_g, total_relevant)
    faithfulness = Fraction(composition.k_g, composition.k_g + composition.k_b)
    return coverage, faithfulness


@dataclass(frozen=True)
class SyntheticInstance:
    instance_id: str
    topic: str
    perspective: str
    composition: SummaryComposition
    summary_text: str
    total_relevant: int
    coverage: Fraction
    faithfulness: Fraction
    verified: bool = True

    @property
    def article_key(self) -> str:
        return f"{self.topic}|{self.perspective}"


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int


# -- annotation ingestion ----------------------------------------------------


def _require(mapping, key, kind, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise AnnotationSchemaError(f"{where}: missing field '{key}'")
    value = mapping[key]
    if not isinstance(value, kind):
        raise AnnotationSchemaError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def ingest_annotations(file: str | Path) -> list[tuple[SourceArticle, list[Excerpt]]]:
    """Load and validate an annotation file.

    The file holds one article object or a list of them:
    {topic, perspective, documents: [{doc_id, text}], excerpts: [{doc_id,
    start, end, text, annotator_id}]}. Offsets are character offsets into the
    stored document text. Each (document, annotator) carries at most one
    excerpt. Output is ordered by (topic, perspective, doc_id).
    """
    path = Path(file)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise AnnotationSchemaError(f"{path}: not valid JSON: {exc}") from exc
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise AnnotationSchemaError(f"{path}: expected an object or a list")

    results = []
    seen_articles = set()
    for a_idx, entry in enumerate(raw):
        where = f"articles[{a_idx}]"
        topic = _require(entry, "topic", str, where)
        perspective = _require(entry, "perspective", str, where)
        raw_docs = _require(entry, "documents", list, where)
        documents = []
        for d_idx, rd in enumerate(raw_docs):
            dwhere = f"{where}.documents[{d_idx}]"
            text = _require(rd, "text", str, dwhere)
            if not text:
                raise AnnotationSchemaError(f"{dwhere}.text: empty document text")
            documents.append(Document(_require(rd, "doc_id", str, dwhere), text))
        article = SourceArticle(topic, perspective, tuple(documents))
        if article.key in seen_articles:
            raise AnnotationSchemaError(f"{where}: duplicate article {article.key}")
        seen_articles.add(article.key)

        excerpts = []
        seen_slots = set()
        for e_idx, re_ in enumerate(entry.get("excerpts", [])):
            ewhere = f"{where}.excerpts[{e_idx}]"
            excerpt = Excerpt(
                doc_id=_require(re_, "doc_id", str, ewhere),
                start=_require(re_, "start", int, ewhere),
                end=_require(re_, "end", int, ewhere),
                text=_require(re_, "text", str, ewhere),
                annotator_id=_require(re_, "annotator_id", str, ewhere),
            )
            excerpt.validate_against(article.document(excerpt.doc_id))
            slot = (excerpt.doc_id, excerpt.annotator_id)
            if slot in seen_slots:
                raise AnnotationSchemaError(
                    f"{ewhere}: second excerpt for document {excerpt.doc_id} "
                    f"by annotator {excerpt.annotator_id}"
                )
            seen_slots.add(slot)
            excerpts.append(excerpt)
        excerpts.sort(key=lambda e: (e.doc_id, e.annotator_id))
        results.append((article, excerpts))

    results.sort(key=lambda pair: (pair[0].topic, pair[0].perspective))
    return results


# -- key point derivation ----------------------------------------------------


def paraphrase_excerpts(
    article: SourceArticle,
    excerpts: list[Excerpt],
    client,
    endpoint: str,
    retries: int = 3,
) -> list[KeyPoint]:
    """Rewrite highlighted excerpts into one-sentence key points.

    Outputs must start with the required prefix; non-conforming completions are
    re-queried up to ``retries`` times, then flagged for manual review rather
    than silently accepted.
    """
    key_points = []
    for excerpt in excerpts:
        prompt = prompts.render(
            "paraphrase_key_point",
            {
                "topic": article.topic,
                "article": article.document(excerpt.doc_id).text,
                "excerpt": excerpt.text,
            },
        )
        text, flagged = "", True
        for attempt in range(retries):
            text = client.complete(endpoint, prompt, sample_index=attempt).strip()
            if text.startswith(KEY_POINT_PREFIX):
                flagged = False
                break
        if flagged:
            logger.warning(
                "paraphrase for %s/%s lacks prefix after %d attempts; flagged",
                article.key, excerpt.doc_id, retries,
            )
        key_points.append(
            KeyPoint(
                kp_id=f"{excerpt.doc_id}#kp",
                text=text,
                origin="relevant",
                source_doc_id=excerpt.doc_id,
                flagged=flagged,
            )
        )
    return key_points


def generate_adversarial(
    key_points: list[KeyPoint], client, endpoint: str, retries: int = 3
) -> list[KeyPoint]:
    """Reverse each key point into its semantically opposite claim.

    One output per input, linked by source kp_id. Outputs that stay identical
    to their source (or come back empty) are flagged.
    """
    reversed_points = []
    for kp in key_points:
        prompt = prompts.render("reverse_key_point", {"original_key_point": kp.text})
        text, flagged = "", True
        for attempt in range(retries):
            text = client.complete(endpoint, prompt, sample_index=attempt).strip()
            if text and text != kp.text:
                flagged = False
                break
        if flagged:
            logger.warning("reversal of %s failed sanity check; flagged", kp.kp_id)
        reversed_points.append(
            KeyPoint(
                kp_id=f"{kp.kp_id}#adv",
                text=text,
                origin="adversarial",
                source_kp_id=kp.kp_id,
                flagged=flagged,
            )
        )
    return reversed_points


def borrow_opposite(counterpart: KeyPointSet) -> tuple[KeyPoint, ...]:
    """Re-key the opposing perspective's relevant key points for this article."""
    return tuple(
        KeyPoint(
            kp_id=f"opp#{kp.kp_id}",
            text=kp.text,
            origin="opposite",
            source_kp_id=kp.kp_id,
            flagged=kp.flagged,
        )
        for kp in counterpart.relevant
    )


# -- summary realization -----------------------------------------------------


def compose_summary(
    key_point_texts: list[str],
    mode: str = "concat",
    client=None,
    endpoint: str | None = None,
) -> str:
    """Realize ordered key points as a summary.

    concat joins the texts with a fixed connective cycle, keeping every key
    point verbatim-recoverable; fuse asks the model for a single fluent
    paragraph (verification happens at test-set build time).
    """
    if not key_point_texts:
        raise DegenerateCompositionError("no key points to compose")
    if mode == "concat":
        parts = [key_point_texts[0]]
        for i, text in enumerate(key_point_texts[1:]):
            parts.append(f" {CONCAT_CONNECTIVES[i % len(CONCAT_CONNECTIVES)]} {text}")
        return "".join(parts)
    if mode == "fuse":
        if client is None or endpoint is None:
            raise DegenerateCompositionError("fuse mode requires a model client")
        prompt = prompts.render(
            "fuse_key_points",
            {"key_points": "\n".join(f"- {t}" for t in key_point_texts)},
        )
        return client.complete(endpoint, prompt).strip()
    raise DegenerateCompositionError(f"unknown mode: {mode}")


# -- test set construction ---------------------------------------------------


def default_grid(n_relevant: int, max_bad: int = 2) -> list[tuple[int, int]]:
    """All (k_g, k_b) with k_g in 0..n_relevant, k_b in 0..max_bad, minus (0,0)."""
    return [
        (k_g, k_b)
        for k_g in range(n_relevant + 1)
        for k_b in range(max_bad + 1)
        if k_g + k_b > 0
    ]


def _article_rng(seed: int, key: str) -> random.Random:
    material = f"{seed}|{key}".encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _pick_bad(rng: random.Random, kps: KeyPointSet, k_b: int) -> list[str]:
    """Draw bad key points alternating between the two pools, seeded start."""
    adversarial = [kp.kp_id for kp in kps.adversarial]
    opposite = [kp.kp_id for kp in kps.opposite]
    rng.shuffle(adversarial)
    rng.shuffle(opposite)
    pools = [adversarial, opposite]
    side = rng.randrange(2)
    picked = []
    while len(picked) < k_b:
        if pools[side]:
            picked.append(pools[side].pop())
        elif pools[1 - side]:
            picked.append(pools[1 - side].pop())
        else:
            break
        side = 1 - side
    return picked


def build_testset(
    articles: list[AnnotatedArticle],
    grid: list[tuple[int, int]] | None = None,
    rng_seed: int = 0,
    per_article_budget: int | None = 8,
    mode: str = "concat",
    client=None,
    endpoint: str | None = None,
    entailment_check=None,
    max_bad: int = 2,
) -> list[SyntheticInstance]:
    """Construct scored synthetic instances for every article.

    Selection, bad-pool mixing, and key point order depend only on rng_seed
    (derived per article, so article order does not matter). Targets that
    exceed the available pools are skipped with a logged reason, never clamped.
    In fuse mode, ``entailment_check(summary, key_point_text) -> bool`` guards
    each included key point; failures mark the instance unverified and drop it
    from the returned set.
    """
    instances = []
    for annotated in articles:
        kps = annotated.key_points
        if not kps.relevant:
            raise DegenerateCompositionError(
                f"article {annotated.article.key} has no relevant key points"
            )
        rng = _article_rng(rng_seed, annotated.article.key)
        targets = (
            list(grid) if grid is not None
            else default_grid(len(kps.relevant), max_bad)
        )
        if per_article_budget is not None and len(targets) > per_article_budget:
            targets = rng.sample(targets, per_article_budget)
        by_id = kps.by_id()
        seq = 0
        for k_g, k_b in targets:
            if k_g > len(kps.relevant):
                logger.info(
                    "%s: skip (k_g=%d, k_b=%d): only %d relevant key points",
                    annotated.article.key, k_g, k_b, len(kps.relevant),
                )
                continue
            if k_b > len(kps.bad_pool()):
                logger.info(
                    "%s: skip (k_g=%d, k_b=%d): bad pool has %d key points",
                    annotated.article.key, k_g, k_b, len(kps.bad_pool()),
                )
                continue
            relevant_ids = sorted(
                rng.sample([kp.kp_id for kp in kps.relevant], k_g)
            )
            bad_ids = sorted(_pick_bad(rng, kps, k_b))
            order = relevant_ids + bad_ids
            rng.shuffle(order)
            composition = SummaryComposition(
                frozenset(relevant_ids), frozenset(bad_ids), tuple(order), mode
            )
            coverage, faithfulness = score_composition(composition, len(kps.relevant))
            texts = [by_id[kp_id].text for kp_id in order]
            summary = compose_summary(texts, mode, client, endpoint)
            verified = True
            if mode == "fuse" and entailment_check is not None:
                verified = all(entailment_check(summary, text) for text in texts)
            instance = SyntheticInstance(
                instance_id=f"{annotated.article.key}#{seq:03d}",
                topic=annotated.article.topic,
                perspective=annotated.article.perspective,
                composition=composition,
                summary_text=summary,
                total_relevant=len(kps.relevant),
                coverage=coverage,
                faithfulness=faithfulness,
                verified=verified,
            )
            seq += 1
            if not verified:
                logger.warning(
                    "%s: fuse verification failed; instance excluded",
                    instance.instance_id,
                )
                continue
            instances.append(instance)
    return instances


def split_dataset(
    article_pairs: list[str], train_n: int = 1716, test_n: int = 100, seed: int = 0
) -> DatasetSplit:
    """Disjoint seed-deterministic train/test split over article-pair ids."""
    if train_n + test_n > len(article_pairs):
        raise SplitSizeError(
            f"need {train_n + test_n} pairs, only {len(article_pairs)} available"
        )
    shuffled = list(article_pairs)
    random.Random(seed).shuffle(shuffled)
    return DatasetSplit(
        train=tuple(sorted(shuffled[:train_n])),
        test=tuple(sorted(shuffled[train_n : train_n + test_n])),
        seed=seed,
    )


# -- serialization -----------------------------------------------------------


def instance_to_record(instance: SyntheticInstance) -> dict:
    comp = instance.composition
    return {
        "instance_id": instance.instance_id,
        "topic": instance.topic,
        "perspective": instance.perspective,
        "summary_text": instance.summary_text,
        "k_g": comp.k_g,
        "k_b": comp.k_b,
        "total_relevant": instance.total_relevant,
        "coverage": float(instance.coverage),
        "faithfulness": float(instance.faithfulness),
        "composition": {
            "relevant_ids": sorted(comp.included_relevant),
            "bad_ids": sorted(comp.included_bad),
            "order": list(comp.order),
        },
        "mode": comp.mode,
    }


def instance_from_record(record: dict) -> SyntheticInstance:
    """Rebuild an instance; exact scores are reconstructed from the counts."""
    comp = SummaryComposition(
        frozenset(record["composition"]["relevant_ids"]),
        frozenset(record["composition"]["bad_ids"]),
        tuple(record["composition"]["order"]),
        record["mode"],
    )
    coverage, faithfulness = score_composition(comp, record["total_relevant"])
    if float(coverage) != record["coverage"] or float(faithfulness) != record[
        "faithfulness"
    ]:
        raise SpanIntegrityError(
            f"{record['instance_id']}: stored scores disagree with the composition"
        )
    return SyntheticInstance(
        instance_id=record["instance_id"],
        topic=record["topic"],
        perspective=record["perspective"],
        composition=comp,
        summary_text=record["summary_text"],
        total_relevant=record["total_relevant"],
        coverage=coverage,
        faithfulness=faithfulness,
    )
