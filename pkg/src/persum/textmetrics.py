"""Deterministic text metrics: ROUGE variants, novel n-gram ratio, extractive
fragment statistics, and the excerpt-matching agreement machinery."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from statistics import mean

import numpy as np

from .errors import ParameterError, UndefinedMetricError

# Reports embed this tag because every token-level metric depends on it.
TOKENIZER_TAG = "lower-alnum-v1"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class TokenSeq:
    """Normalized token sequence; build via :func:`tokenize` only."""

    tokens: tuple[str, ...]
    source_len_chars: int

    def __len__(self):
        return len(self.tokens)


def tokenize(text: str) -> TokenSeq:
    """Lowercase and split on whitespace/punctuation boundaries, keeping numerals."""
    return TokenSeq(tuple(_TOKEN_RE.findall(text.lower())), len(text))


def _ngrams(tokens: tuple[str, ...], n: int) -> list[tuple[str, ...]]:
    return [tokens[i : i + n] for i in range(len(tokens) - n + 1)]


def _prf(overlap: float, n_candidate: float, n_reference: float) -> dict[str, float]:
    precision = overlap / n_candidate if n_candidate else 0.0
    recall = overlap / n_reference if n_reference else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def rouge_n(candidate: TokenSeq, reference: TokenSeq, n: int) -> dict[str, float]:
    """Clipped n-gram overlap; 0 whenever a denominator is 0."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    cand = Counter(_ngrams(candidate.tokens, n))
    ref = Counter(_ngrams(reference.tokens, n))
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a, b) -> int:
    """Longest common subsequence length between two sequences."""
    if not a or not b:
        return 0
    if len(b) < len(a):
        a, b = b, a
    prev = [0] * (len(a) + 1)
    for y in b:
        curr = [0]
        for i, x in enumerate(a):
            curr.append(prev[i] + 1 if x == y else max(prev[i + 1], curr[i]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: TokenSeq, reference: TokenSeq) -> dict[str, float]:
    """LCS-based ROUGE: P = lcs/|candidate|, R = lcs/|reference|."""
    lcs = lcs_length(candidate.tokens, reference.tokens)
    return _prf(lcs, len(candidate), len(reference))


def novel_ngram_ratio(summary: TokenSeq, article: TokenSeq, n: int = 4) -> float:
    """Share of the summary's n-gram occurrences absent from the article.

    Multiset semantics: an n-gram occurring more often in the summary than in
    the article contributes the excess occurrences.
    """
    if len(summary) < n:
        raise UndefinedMetricError(
            f"summary has {len(summary)} tokens, fewer than n={n}"
        )
    summ = Counter(_ngrams(summary.tokens, n))
    art = Counter(_ngrams(article.tokens, n))
    total = sum(summ.values())
    novel = sum(max(0, count - art[gram]) for gram, count in summ.items())
    return novel / total


@dataclass(frozen=True)
class Fragment:
    """One greedily matched shared span."""

    summary_start: int
    article_start: int
    length: int
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class FragmentStats:
    fragments: tuple[Fragment, ...]
    ef_coverage: float
    ef_density: float
    compression: float


def extractive_fragments(article: TokenSeq, summary: TokenSeq) -> FragmentStats:
    """Greedy longest-shared-span matching, scanning the summary left to right.

    Each summary token is consumed once; span-length ties take the earliest
    article occurrence. ef_coverage = sum(|f|)/|S|, ef_density = sum(|f|^2)/|S|,
    compression = |A|/|S| (token counts).
    """
    if not summary.tokens:
        raise UndefinedMetricError("summary has no tokens")
    art = article.tokens
    summ = summary.tokens
    # Article positions per token, in order, so ties resolve to the earliest.
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(art):
        positions.setdefault(tok, []).append(j)

    fragments = []
    i = 0
    while i < len(summ):
        best_len = 0
        best_j = -1
        for j in positions.get(summ[i], ()):
            length = 0
            while (
                i + length < len(summ)
                and j + length < len(art)
                and summ[i + length] == art[j + length]
            ):
                length += 1
            if length > best_len:
                best_len, best_j = length, j
        if best_len == 0:
            i += 1
            continue
        fragments.append(Fragment(i, best_j, best_len, summ[i : i + best_len]))
        i += best_len

    n_s = len(summ)
    total = sum(f.length for f in fragments)
    return FragmentStats(
        fragments=tuple(fragments),
        ef_coverage=total / n_s,
        ef_density=sum(f.length**2 for f in fragments) / n_s,
        compression=len(art) / n_s,
    )


def _normalize_excerpt(text: str) -> str:
    return " ".join(text.lower().split())


def match_excerpts(
    excerpts_a: list[str], excerpts_b: list[str], tau: float = 0.5
) -> list[tuple[int, int]]:
    """One-to-one excerpt matching between two annotators.

    For each element of ``excerpts_a`` in order, match the first still-unmatched
    element of ``excerpts_b`` that either contains it / is contained by it, or
    whose character-level LCS with it, divided by the shorter length, strictly
    exceeds ``tau``. Strings are compared lowercased with collapsed whitespace.
    """
    if not 0 < tau <= 1:
        raise ParameterError(f"tau must be in (0, 1], got {tau}")
    norm_a = [_normalize_excerpt(e) for e in excerpts_a]
    norm_b = [_normalize_excerpt(e) for e in excerpts_b]
    matched_b: set[int] = set()
    pairs = []
    for i, ea in enumerate(norm_a):
        for j, eb in enumerate(norm_b):
            if j in matched_b:
                continue
            if ea and eb and (ea in eb or eb in ea):
                pass
            elif not ea or not eb:
                continue
            elif lcs_length(ea, eb) / min(len(ea), len(eb)) <= tau:
                continue
            pairs.append((i, j))
            matched_b.add(j)
            break
    return pairs


@dataclass(frozen=True)
class AgreementReport:
    r_a_given_b: float
    r_b_given_a: float
    r_overall: float
    matches: tuple[tuple[int, int], ...] = field(default=())


def agreement(
    excerpts_a: list[str], excerpts_b: list[str], tau: float = 0.5
) -> AgreementReport:
    """Conditional overlap ratios and their mean.

    An empty side yields 0 for both conditionals (no overlap credit); two empty
    sides count as full agreement.
    """
    if not excerpts_a and not excerpts_b:
        return AgreementReport(1.0, 1.0, 1.0)
    if not excerpts_a or not excerpts_b:
        return AgreementReport(0.0, 0.0, 0.0)
    matches = match_excerpts(excerpts_a, excerpts_b, tau)
    r_ab = len(matches) / len(excerpts_a)
    r_ba = len(matches) / len(excerpts_b)
    return AgreementReport(r_ab, r_ba, (r_ab + r_ba) / 2, tuple(matches))


@dataclass(frozen=True)
class HighlightStats:
    """Moments of observed highlighting behaviour, driving the random baseline."""

    count_mean: float
    count_var: float
    length_mean: float
    length_var: float
    text_length: int


_BASELINE_VOCAB = (
    "policy court state vote law bill tax debt jobs trade press party house "
    "senate budget crisis reform leader voter poll race debate campaign city "
    "border school health energy climate union wage crime police right left"
).split()


def _draw_highlights(rng: np.random.Generator, stats: HighlightStats, fixed: bool):
    count = max(1, round(rng.normal(stats.count_mean, np.sqrt(stats.count_var))))
    lengths = [
        min(
            stats.text_length,
            max(1, round(rng.normal(stats.length_mean, np.sqrt(stats.length_var)))),
        )
        for _ in range(count)
    ]
    spans = []
    for k, length in enumerate(lengths):
        if fixed:
            start = min(
                stats.text_length - length, k * (stats.text_length // (count + 1))
            )
        else:
            start = int(rng.integers(0, stats.text_length - length + 1))
        spans.append((start, start + length))
    return spans


def iaa_random_baseline(
    stats: HighlightStats,
    seed: int,
    trials: int = 200,
    tau: float = 0.5,
    fixed_placement: bool = False,
) -> float:
    """Expected overall agreement between two independent random annotators.

    Per trial, each annotator draws a highlight count and per-highlight lengths
    from normal distributions (rounded, clamped to >= 1) and places spans
    uniformly in a synthetic text; ``fixed_placement`` pins spans to
    deterministic offsets for degenerate-simulation checks. Zero variance is a
    valid degenerate input; negative variance is rejected.
    """
    if stats.count_var < 0 or stats.length_var < 0:
        raise ParameterError("variances must be non-negative")
    if stats.text_length < 1 or stats.count_mean <= 0 or stats.length_mean <= 0:
        raise ParameterError("means and text length must be positive")
    rng = np.random.default_rng(seed)
    overall = []
    for _ in range(trials):
        words = rng.choice(_BASELINE_VOCAB, size=stats.text_length // 4 + 2)
        text = " ".join(words)[: stats.text_length].ljust(stats.text_length)
        spans_a = _draw_highlights(rng, stats, fixed_placement)
        spans_b = _draw_highlights(rng, stats, fixed_placement)
        e_a = [text[s:t] for s, t in spans_a]
        e_b = [text[s:t] for s, t in spans_b]
        overall.append(agreement(e_a, e_b, tau).r_overall)
    return mean(overall)
