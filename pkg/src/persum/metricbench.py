"""Benchmarks candidate metrics against ground truth: Spearman correlation
with significance, per-article winrate with bootstrap CIs, and human
evaluation scores from annotation marks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats as scipy_stats

from .errors import (
    NoValidPairsError,
    ParameterError,
    UndefinedCorrelationError,
)

logger = logging.getLogger(__name__)

BOOTSTRAP_DEFAULT = 500


def average_ranks(values) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(xs, ys) -> tuple[float, float]:
    """Spearman rho with average-rank ties and a t-approximation p-value."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ParameterError("inputs must be 1-d vectors of equal length")
    n = len(xs)
    if n < 3:
        raise ParameterError(f"need at least 3 observations, got {n}")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise UndefinedCorrelationError("constant vector has no rank correlation")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1 - rho * rho))
    p = float(2 * scipy_stats.t.sf(abs(t), n - 2))
    return rho, p


def significance_stars(p_value: float | None) -> str:
    if p_value is None:
        return ""
    for threshold, stars in ((0.001, "***"), (0.01, "**"), (0.05, "*")):
        if p_value < threshold:
            return stars
    return ""


@dataclass(frozen=True)
class WinrateResult:
    winrate: float
    ci95: tuple[float, float]
    n_pairs: int


def _article_pair_counts(
    metric_scores, gt_scores, article_ids, rng
) -> dict[str, tuple[int, int]]:
    """Per-article (correct, total) over within-article pairs.

    Pairs with equal ground truth are excluded; metric ties resolve by a
    seeded coin flip, consumed in canonical pair order.
    """
    indices_by_article: dict[str, list[int]] = {}
    for idx, article in enumerate(article_ids):
        indices_by_article.setdefault(article, []).append(idx)
    counts = {}
    for article in sorted(indices_by_article):
        indices = indices_by_article[article]
        correct = total = 0
        for a_pos, i in enumerate(indices):
            for j in indices[a_pos + 1 :]:
                if gt_scores[i] == gt_scores[j]:
                    continue
                total += 1
                if metric_scores[i] == metric_scores[j]:
                    picked_higher = bool(rng.integers(0, 2))
                else:
                    picked_higher = metric_scores[i] > metric_scores[j]
                if picked_higher == (gt_scores[i] > gt_scores[j]):
                    correct += 1
        if total:
            counts[article] = (correct, total)
    return counts


def winrate(
    metric_scores,
    gt_scores,
    article_ids,
    rng_seed: int = 0,
    n_bootstrap: int = BOOTSTRAP_DEFAULT,
    tie_mode: str = "random",
) -> WinrateResult:
    """Share of within-article pairs the metric orders like the ground truth.

    CI via percentile bootstrap over articles (articles resampled with
    replacement, their precomputed pair counts reused). ``tie_mode='half'``
    credits metric ties 0.5 instead of flipping a coin.
    """
    if not len(metric_scores) == len(gt_scores) == len(article_ids):
        raise ParameterError("scores and article ids must align")
    if tie_mode not in ("random", "half"):
        raise ParameterError(f"unknown tie_mode: {tie_mode}")
    rng = np.random.default_rng([rng_seed, 1])
    if tie_mode == "half":
        counts = _half_credit_counts(metric_scores, gt_scores, article_ids)
    else:
        counts = _article_pair_counts(metric_scores, gt_scores, article_ids, rng)
    if not counts:
        raise NoValidPairsError("no within-article pair with distinct ground truth")
    articles = sorted(counts)
    correct = np.array([counts[a][0] for a in articles], dtype=float)
    totals = np.array([counts[a][1] for a in articles], dtype=float)
    rate = float(correct.sum() / totals.sum())

    boot_rates = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        boot_rng = np.random.default_rng([rng_seed, 2, b])
        draw = boot_rng.integers(0, len(articles), size=len(articles))
        boot_rates[b] = correct[draw].sum() / totals[draw].sum()
    lo, hi = np.percentile(boot_rates, [2.5, 97.5])
    # the interval must bracket the point estimate (heavy skew can push a
    # pure percentile interval past it)
    lo, hi = min(float(lo), rate), max(float(hi), rate)
    return WinrateResult(rate, (lo, hi), int(totals.sum()))


def _half_credit_counts(metric_scores, gt_scores, article_ids):
    indices_by_article: dict[str, list[int]] = {}
    for idx, article in enumerate(article_ids):
        indices_by_article.setdefault(article, []).append(idx)
    counts = {}
    for article in sorted(indices_by_article):
        indices = indices_by_article[article]
        correct = total = 0.0
        for a_pos, i in enumerate(indices):
            for j in indices[a_pos + 1 :]:
                if gt_scores[i] == gt_scores[j]:
                    continue
                total += 1
                if metric_scores[i] == metric_scores[j]:
                    correct += 0.5
                elif (metric_scores[i] > metric_scores[j]) == (
                    gt_scores[i] > gt_scores[j]
                ):
                    correct += 1
        if total:
            counts[article] = (correct, total)
    return counts


@dataclass(frozen=True)
class BenchResult:
    metric_id: str
    attribute: str  # coverage | faithfulness
    rho_s: float | None
    p_value: float | None
    winrate: float
    winrate_ci95: tuple[float, float]
    n_pairs: int

    def to_record(self) -> dict:
        return {
            "metric_id": self.metric_id,
            "attribute": self.attribute,
            "rho_s": self.rho_s,
            "p_value": self.p_value,
            "stars": significance_stars(self.p_value),
            "winrate": self.winrate,
            "winrate_ci95": list(self.winrate_ci95),
            "n_pairs": self.n_pairs,
        }


def benchmark_metric(
    metric_id: str,
    attribute: str,
    metric_scores,
    gt_scores,
    article_ids,
    rng_seed: int = 0,
    n_bootstrap: int = BOOTSTRAP_DEFAULT,
) -> BenchResult:
    """One metric x attribute row: correlation plus winrate."""
    try:
        rho, p = spearman(metric_scores, gt_scores)
    except UndefinedCorrelationError:
        logger.warning("%s/%s: constant scores, correlation undefined", metric_id, attribute)
        rho, p = None, None
    wr = winrate(metric_scores, gt_scores, article_ids, rng_seed, n_bootstrap)
    return BenchResult(metric_id, attribute, rho, p, wr.winrate, wr.ci95, wr.n_pairs)


# -- human evaluation ----------------------------------------------------------


@dataclass(frozen=True)
class HumanEvalRecord:
    """Key point extraction plus inclusion marks for one summary."""

    instance_id: str
    method: str
    doc_keypoints: tuple[str, ...]
    summary_keypoints: tuple[str, ...]
    included_doc_ids: frozenset[str]
    supported_summary_ids: frozenset[str]
    annotator_id: str = "default"

    def __post_init__(self):
        if not self.included_doc_ids <= set(self.doc_keypoints):
            raise ParameterError(
                f"{self.instance_id}: inclusion mark references unknown doc key point"
            )
        if not self.supported_summary_ids <= set(self.summary_keypoints):
            raise ParameterError(
                f"{self.instance_id}: support mark references unknown summary key point"
            )


def human_scores(record: HumanEvalRecord) -> tuple[Fraction, Fraction]:
    """(coverage, faithfulness) from annotation marks, as exact ratios."""
    if not record.doc_keypoints:
        raise ParameterError(f"{record.instance_id}: no document key points")
    if not record.summary_keypoints:
        raise ParameterError(
            f"{record.instance_id}: faithfulness undefined without summary key points"
        )
    coverage = Fraction(len(record.included_doc_ids), len(record.doc_keypoints))
    faithfulness = Fraction(
        len(record.supported_summary_ids), len(record.summary_keypoints)
    )
    return coverage, faithfulness


def keypoint_inclusion_stats(records_by_method: dict[str, list[HumanEvalRecord]]) -> dict:
    """Per-method mean +/- sample sd of included / omitted / hallucinated counts."""
    out = {}
    for method in sorted(records_by_method):
        records = records_by_method[method]
        if not records:
            raise ParameterError(f"method {method}: no records")
        included = [len(r.included_doc_ids) for r in records]
        omitted = [len(r.doc_keypoints) - len(r.included_doc_ids) for r in records]
        hallucinated = [
            len(r.summary_keypoints) - len(r.supported_summary_ids) for r in records
        ]
        out[method] = {
            name: {
                "mean": float(np.mean(vals)),
                "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            }
            for name, vals in (
                ("included", included),
                ("omitted", omitted),
                ("hallucinated", hallucinated),
            )
        }
    return out
