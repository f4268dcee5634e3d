"""Shared fixtures: synthetic corpora, annotation files, and stub clients."""

from __future__ import annotations

import json

import pytest

from persum import corpus, modelio


def make_article(topic: str, perspective: str, n_docs: int = 3) -> corpus.SourceArticle:
    documents = tuple(
        corpus.Document(
            f"{perspective.lower()}{i}",
            f"{topic} {perspective} document {i} discusses policy point {i} "
            f"with supporting detail and context sentences.",
        )
        for i in range(n_docs)
    )
    return corpus.SourceArticle(topic, perspective, documents)


def make_keypoints(article: corpus.SourceArticle, n_opposite: int = 2) -> corpus.KeyPointSet:
    relevant = tuple(
        corpus.KeyPoint(
            kp_id=f"{doc.doc_id}#kp",
            text=f"The article argues {article.perspective} stance {doc.doc_id} on {article.topic}.",
            origin="relevant",
            source_doc_id=doc.doc_id,
        )
        for doc in article.documents
    )
    adversarial = tuple(
        corpus.KeyPoint(
            kp_id=f"{kp.kp_id}#adv",
            text=f"The article argues the opposite of {kp.source_doc_id} on {article.topic}.",
            origin="adversarial",
            source_kp_id=kp.kp_id,
        )
        for kp in relevant
    )
    opposite = tuple(
        corpus.KeyPoint(
            kp_id=f"opp#{k}",
            text=f"The article argues the rival view {k} on {article.topic}.",
            origin="opposite",
            source_kp_id=f"rival{k}",
        )
        for k in range(n_opposite)
    )
    return corpus.KeyPointSet(relevant, adversarial, opposite)


def make_annotated(topic: str, perspective: str = "Left", n_docs: int = 3) -> corpus.AnnotatedArticle:
    article = make_article(topic, perspective, n_docs)
    return corpus.AnnotatedArticle(article, make_keypoints(article))


@pytest.fixture
def annotated_corpus():
    return [make_annotated(f"Topic {i:02d}") for i in range(6)]


def write_annotation_file(path, articles_with_excerpts):
    payload = []
    for article, excerpts in articles_with_excerpts:
        payload.append(
            {
                "topic": article.topic,
                "perspective": article.perspective,
                "documents": [
                    {"doc_id": d.doc_id, "text": d.text} for d in article.documents
                ],
                "excerpts": [
                    {
                        "doc_id": e.doc_id,
                        "start": e.start,
                        "end": e.end,
                        "text": e.text,
                        "annotator_id": e.annotator_id,
                    }
                    for e in excerpts
                ],
            }
        )
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def excerpt_for(article: corpus.SourceArticle, doc_idx: int, annotator="a1") -> corpus.Excerpt:
    doc = article.documents[doc_idx]
    end = min(len(doc.text), 40)
    return corpus.Excerpt(doc.doc_id, 0, end, doc.text[:end], annotator)


@pytest.fixture
def annotation_file(tmp_path):
    article = make_article("Budget", "Left")
    excerpts = [excerpt_for(article, i) for i in range(3)]
    return write_annotation_file(tmp_path / "annotations.json", [(article, excerpts)])


def stub_client(transport, scorer_transport=None, **kwargs) -> modelio.ModelClient:
    """Client with one endpoint backed by an arbitrary transport callable."""
    endpoint = modelio.ModelEndpoint(
        "stub", "stub://", "stub-model", params={"temperature": 0.0}
    )
    kwargs.setdefault("backoff_base", 0.0)
    return modelio.ModelClient(
        endpoints=[endpoint],
        scorers=[modelio.ScorerEndpoint("scorer", "stub://score")],
        transport=transport,
        scorer_transport=scorer_transport,
        **kwargs,
    )
