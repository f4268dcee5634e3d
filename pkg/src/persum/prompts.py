"""Prompt registry: template bodies with named placeholder markers and a
byte-deterministic renderer."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import RenderError


@dataclass(frozen=True)
class PromptTemplate:
    """A template body plus its placeholder markers.

    ``markers`` maps the literal marker string appearing in the body, e.g.
    ``"(article)"``, to the binding name used at render time (``"article"``).
    """

    template_id: str
    body: str
    markers: dict[str, str]

    @property
    def required_placeholders(self) -> frozenset[str]:
        return frozenset(self.markers.values())

    def digest(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()[:12]


COVERAGE_JUDGE = """You are an evaluator. Your task is to determine how well a generated summary captures all of the main arguments from a source article. This is a measure of "coverage," which does not necessarily address factual accuracy (faithfulness) but focuses on completeness of content.

The scale for coverage is:
1. No Coverage: The summary does not include any of the main arguments from the article.
2. Low Coverage: The summary includes only a few of the main arguments from the article, omitting most.
3. Medium Coverage: The summary contains around half of the article's main arguments.
4. High Coverage: The summary contains most of the main arguments from the article, missing only a few.
5. Perfect Coverage: The summary includes all major points and arguments mentioned in the article, leaving out nothing important.

Follow these steps carefully:

1. **Read the Source Article**: Examine the text provided in the article. Identify all major points, arguments, or facts it contains.
2. **Read the Summary**: Look at the text in the summary. List each argument or point the summary includes.
3. **Compare for Completeness**:
- Check if each major point from the source article is present in the summary.
- Count how many major points are covered versus how many are omitted.
4. **Determine the Score**:
- Assign a score from 1 (no coverage) to 5 (perfect coverage), based on how many main arguments are included in the summary relative to the source.
5. **Output Instructions**:
- Output only the final numeric score (1, 2, 3, 4, or 5) without any explanation or additional text.

---

# Source Article:

(article)

# Generated Summary:

(summary)

# Final Coverage Score (1~5 only):"""

FAITHFULNESS_JUDGE = """You are an evaluator. Your task is to analyze how faithfully a generated summary represents the information found in the source article. Faithfulness here means the absence of factual errors---i.e., any claims in the summary must be either directly stated, heavily implied, or logically entailed by the source article.

The scale for faithfulness is:
1. Unfaithful: The summary is almost entirely incorrect or unrelated to the source.
2. Mostly Unfaithful: The summary includes only a few relevant arguments or correct details but is largely incorrect or missing.
3. Neutral: The summary has about half of the important points correct, but also includes notable inaccuracies or omissions.
4. Mostly Faithful: The summary reflects most of the article's arguments accurately, with only minor errors or omissions.
5. Perfectly Faithful: The summary includes all of the article's main arguments accurately and does not introduce any contradictory or unsupported claims.

Follow these steps carefully:

1. **Read the Source Article**: Examine the text provided in the article. Identify the main points, arguments, or facts it contains.
2. **Read the Summary**: Look at the text in the summary. Itemize or note each claim or statement made in the summary.
3. **Compare for Accuracy**:
- Check if each claim in the summary is explicitly or logically supported by the source. 
- Mark any claim that appears to be contradicting the source or not found in the source. 
- Check if the summary omits major arguments that are central to the source.
4. **Determine the Score**: 
- Assign a score from 1 (completely unfaithful) to 5 (perfectly faithful), based on how many claims match (and do not contradict) the source article and whether key points are included.
5. **Output Instructions**:
- Output only the final numeric score (1, 2, 3, 4, or 5) without any additional explanation or text.

---

# Source Article:

(article)

# Generated Summary:

(summary)

# Final Faithfulness Score (1~5 only):"""

ZERO_SHOT_LEFT = """Given texts from both Left-leaning and Right-leaning perspectives, summarize only the Left-leaning perspective in one sentence, starting with 'The Left '. ONLY RETURN THE SUMMARY AND NOTHING ELSE.

Left:
(left-perspective article)

Right:
(right-perspective article)"""

# Mechanical perspective swap of the instruction sentence; document sections
# keep their labels.
ZERO_SHOT_RIGHT = """Given texts from both Left-leaning and Right-leaning perspectives, summarize only the Right-leaning perspective in one sentence, starting with 'The Right '. ONLY RETURN THE SUMMARY AND NOTHING ELSE.

Left:
(left-perspective article)

Right:
(right-perspective article)"""

PARAPHRASE_KEY_POINT = """[TASK]
You are given an article that makes an argument related to the provided topic. An excerpt from the document highlights the main key argument that the author of the article is trying to assert. Please write a concise, short, one-sentence paraphrase (as short as possible) that reflects the argument implied or present in the provided excerpt. **Your paraphrase should begin with "The article argues"**.

---

Topic: (topic)

Article: (article)

Excerpt: (excerpt)

---

One-Line Argument Summary starting with "The article argues":"""

REVERSE_KEY_POINT = """[TASK]
You are given one main argument from a political news article (either left-leaning or right-leaning). **Rewrite the argument so that the argument is completely reversed or semantically opposite.** If the original argument supports or praises a policy/idea/group, the reversed version should criticize or oppose it, and vice versa. Only return the reversed argument itself, with no extra commentary or analysis.

[EXAMPLES]
1.
ORIGINAL: The article argues that stricter immigration laws help protect domestic jobs and strengthen national identity.
REVERSED: The article argues that relaxed immigration laws create more job opportunities and enhance cultural diversity.

2.
ORIGINAL: The article insists that climate change is primarily caused by human activity and demands immediate government intervention.
REVERSED: The article insists that human activity has minimal impact on climate change and calls for minimal government involvement.

[INFERENCE]
ORIGINAL: (original key point)
REVERSED:"""

FUSE_KEY_POINTS = """Rewrite the following key points as one fluent paragraph. Include every key point exactly once, do not add any new claims, and do not drop any. ONLY RETURN THE PARAGRAPH AND NOTHING ELSE.

Key points:
(key points)"""

REFINE_CRITIQUE = """You wrote a one-sentence summary of the (perspective)-leaning perspective from the source texts below. Critique it: list any missing key arguments from that perspective and any claims unsupported by or opposed to it. Be concise.

Left:
(left-perspective article)

Right:
(right-perspective article)

# Current Summary:
(summary)

# Critique:"""

REFINE_REVISE = """Revise the summary below to address the critique while staying faithful to the (perspective)-leaning perspective in the source texts. The revision must be one sentence starting with 'The (perspective) '. ONLY RETURN THE REVISED SUMMARY AND NOTHING ELSE.

Left:
(left-perspective article)

Right:
(right-perspective article)

# Current Summary:
(summary)

# Critique:
(critique)

# Revised Summary:"""

DEBATE_UPDATE = """Other agents proposed the following one-sentence summaries of the (perspective)-leaning perspective. Consider their answers, then return your updated one-sentence summary starting with 'The (perspective) '. ONLY RETURN THE SUMMARY AND NOTHING ELSE.

Left:
(left-perspective article)

Right:
(right-perspective article)

# Your Current Summary:
(own draft)

# Other Agents' Summaries:
(other drafts)

# Updated Summary:"""

DEBATE_AGGREGATE = """You are the aggregator. Given the agents' final one-sentence summaries of the (perspective)-leaning perspective, return the single best consolidated summary, one sentence starting with 'The (perspective) '. ONLY RETURN THE SUMMARY AND NOTHING ELSE.

Left:
(left-perspective article)

Right:
(right-perspective article)

# Agent Summaries:
(drafts)

# Final Summary:"""

_ARTICLE_SUMMARY = {"(article)": "article", "(summary)": "summary"}
_PAIR = {
    "(left-perspective article)": "left_article",
    "(right-perspective article)": "right_article",
}

REGISTRY: dict[str, PromptTemplate] = {
    t.template_id: t
    for t in [
        PromptTemplate("llm_coverage", COVERAGE_JUDGE, dict(_ARTICLE_SUMMARY)),
        PromptTemplate("llm_faithfulness", FAITHFULNESS_JUDGE, dict(_ARTICLE_SUMMARY)),
        PromptTemplate("zero_shot_left", ZERO_SHOT_LEFT, dict(_PAIR)),
        PromptTemplate("zero_shot_right", ZERO_SHOT_RIGHT, dict(_PAIR)),
        PromptTemplate(
            "paraphrase_key_point",
            PARAPHRASE_KEY_POINT,
            {"(topic)": "topic", "(article)": "article", "(excerpt)": "excerpt"},
        ),
        PromptTemplate(
            "reverse_key_point",
            REVERSE_KEY_POINT,
            {"(original key point)": "original_key_point"},
        ),
        PromptTemplate(
            "fuse_key_points", FUSE_KEY_POINTS, {"(key points)": "key_points"}
        ),
        PromptTemplate(
            "refine_critique",
            REFINE_CRITIQUE,
            {**_PAIR, "(perspective)": "perspective", "(summary)": "summary"},
        ),
        PromptTemplate(
            "refine_revise",
            REFINE_REVISE,
            {
                **_PAIR,
                "(perspective)": "perspective",
                "(summary)": "summary",
                "(critique)": "critique",
            },
        ),
        PromptTemplate(
            "debate_update",
            DEBATE_UPDATE,
            {
                **_PAIR,
                "(perspective)": "perspective",
                "(own draft)": "own_draft",
                "(other drafts)": "other_drafts",
            },
        ),
        PromptTemplate(
            "debate_aggregate",
            DEBATE_AGGREGATE,
            {**_PAIR, "(perspective)": "perspective", "(drafts)": "drafts"},
        ),
    ]
}


def get_template(template_id: str) -> PromptTemplate:
    if template_id not in REGISTRY:
        raise RenderError(f"unknown template: {template_id}")
    return REGISTRY[template_id]


def render(template_id: str, bindings: dict[str, str]) -> str:
    """Substitute every marker with its binding, in one pass.

    The body is split on the marker strings first, so substituted values are
    never rescanned; a value containing a marker is rendered literally.
    """
    template = get_template(template_id)
    missing = template.required_placeholders - bindings.keys()
    if missing:
        raise RenderError(f"unbound placeholder(s): {', '.join(sorted(missing))}")
    # Invariant: even indices hold still-scannable body fragments, odd indices
    # hold substituted values. Splitting an even piece appends an odd-length
    # alternating run, so the parity survives every pass.
    pieces = [template.body]
    for marker, name in template.markers.items():
        value = str(bindings[name])
        next_pieces = []
        for k, piece in enumerate(pieces):
            if k % 2 == 1:
                next_pieces.append(piece)
                continue
            parts = piece.split(marker)
            for m, part in enumerate(parts):
                if m:
                    next_pieces.append(value)
                next_pieces.append(part)
        pieces = next_pieces
    return "".join(pieces)


def prompt_digests(template_ids=None) -> dict[str, str]:
    ids = sorted(template_ids) if template_ids else sorted(REGISTRY)
    return {tid: REGISTRY[tid].digest() for tid in ids}
