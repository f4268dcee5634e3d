"""Metric benchmarking tests: Spearman vs a brute-force rank oracle, winrate
behaviour, and human-evaluation scoring."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as scipy_stats

from persum import metricbench as mb
from persum.errors import NoValidPairsError, ParameterError, UndefinedCorrelationError

from oracles import oracle_spearman


# -- spearman -------------------------------------------------------------------


def test_spearman_monotone_is_exactly_one():
    rho, p = mb.spearman([1, 2, 3, 4, 5], [10, 20, 30, 40, 50])
    assert rho == 1.0
    assert p == 0.0


def test_spearman_reversed_is_minus_one():
    rho, _ = mb.spearman([1, 2, 3, 4], [4, 3, 2, 1])
    assert rho == -1.0


def test_spearman_tied_case_matches_oracle():
    xs, ys = [1, 2, 2, 4], [1, 2, 3, 4]
    rho, _ = mb.spearman(xs, ys)
    assert rho == pytest.approx(oracle_spearman(xs, ys), abs=1e-12)


def test_spearman_random_vectors_match_oracle_and_scipy():
    rng = random.Random(17)
    for _ in range(100):
        n = rng.randint(3, 12)
        xs = [rng.randint(0, 5) for _ in range(n)]
        ys = [rng.randint(0, 5) for _ in range(n)]
        if len(set(xs)) == 1 or len(set(ys)) == 1:
            continue
        rho, p = mb.spearman(xs, ys)
        assert rho == pytest.approx(oracle_spearman(xs, ys), abs=1e-12)
        sp_rho, sp_p = scipy_stats.spearmanr(xs, ys)
        assert rho == pytest.approx(sp_rho, abs=1e-12)
        if abs(rho) < 1:
            assert p == pytest.approx(sp_p, abs=1e-9)


def test_spearman_constant_vector_undefined():
    with pytest.raises(UndefinedCorrelationError):
        mb.spearman([1, 1, 1], [1, 2, 3])


def test_spearman_requires_three_points():
    with pytest.raises(ParameterError):
        mb.spearman([1, 2], [2, 1])


def test_spearman_invariant_under_increasing_transforms():
    rng = random.Random(23)
    for _ in range(30):
        xs = [rng.random() for _ in range(8)]
        ys = [rng.random() for _ in range(8)]
        rho, _ = mb.spearman(xs, ys)
        rho_t, _ = mb.spearman([math.exp(3 * x) for x in xs], [y**3 + 2 for y in ys])
        assert rho == pytest.approx(rho_t, abs=1e-12)


def test_significance_stars():
    assert mb.significance_stars(0.2) == ""
    assert mb.significance_stars(0.04) == "*"
    assert mb.significance_stars(0.004) == "**"
    assert mb.significance_stars(0.0004) == "***"
    assert mb.significance_stars(None) == ""


# -- winrate -------------------------------------------------------------------


def _synthetic_scores(n_articles=20, per_article=5, seed=0):
    rng = random.Random(seed)
    gt, articles = [], []
    for a in range(n_articles):
        for _ in range(per_article):
            gt.append(rng.random())
            articles.append(f"article{a}")
    return gt, articles


def test_winrate_identity_metric_is_one():
    gt, articles = _synthetic_scores()
    result = mb.winrate(gt, gt, articles, rng_seed=0)
    assert result.winrate == 1.0
    assert result.n_pairs > 0


def test_winrate_negated_metric_is_zero():
    gt, articles = _synthetic_scores()
    result = mb.winrate([-g for g in gt], gt, articles, rng_seed=0)
    assert result.winrate == 0.0


def test_winrate_excludes_equal_ground_truth_pairs():
    gt = [1.0, 1.0, 2.0]
    metric = [0.1, 0.9, 0.5]
    articles = ["a", "a", "a"]
    result = mb.winrate(metric, gt, articles, rng_seed=0)
    # only pairs (0,2) and (1,2) countable; (0,1) has equal ground truth
    assert result.n_pairs == 2


def test_winrate_pairs_only_within_articles():
    gt = [0.0, 1.0, 0.0, 1.0]
    metric = [0.0, 1.0, 0.0, 1.0]
    articles = ["a", "a", "b", "b"]
    result = mb.winrate(metric, gt, articles, rng_seed=0)
    assert result.n_pairs == 2  # one pair per article, no cross-article pairs


def test_winrate_no_valid_pairs():
    with pytest.raises(NoValidPairsError):
        mb.winrate([1.0, 2.0], [5.0, 5.0], ["a", "a"], rng_seed=0)


def test_winrate_monotone_transform_invariance():
    gt, articles = _synthetic_scores(10, 4, seed=3)
    rng = random.Random(4)
    metric = [rng.random() for _ in gt]
    base = mb.winrate(metric, gt, articles, rng_seed=11)
    transformed = mb.winrate(
        [math.tanh(4 * m) + 7 for m in metric], gt, articles, rng_seed=11
    )
    assert base.winrate == transformed.winrate
    assert base.ci95 == transformed.ci95


def test_winrate_random_metric_near_half():
    gt, articles = _synthetic_scores(80, 6, seed=5)
    rng = random.Random(6)
    metric = [rng.random() for _ in gt]
    result = mb.winrate(metric, gt, articles, rng_seed=7, n_bootstrap=100)
    assert abs(result.winrate - 0.5) < 0.05
    assert result.ci95[0] <= result.winrate <= result.ci95[1]


def test_winrate_bootstrap_reproducible():
    gt, articles = _synthetic_scores(15, 4, seed=8)
    rng = random.Random(9)
    metric = [rng.random() for _ in gt]
    a = mb.winrate(metric, gt, articles, rng_seed=13)
    b = mb.winrate(metric, gt, articles, rng_seed=13)
    assert a == b


def test_winrate_tie_modes():
    gt = [0.0, 1.0]
    metric = [0.5, 0.5]
    result = mb.winrate(metric, gt, ["a", "a"], rng_seed=0, tie_mode="half")
    assert result.winrate == 0.5
    with pytest.raises(ParameterError):
        mb.winrate(metric, gt, ["a", "a"], tie_mode="coin")


def test_benchmark_metric_row():
    gt, articles = _synthetic_scores(12, 4, seed=10)
    row = mb.benchmark_metric("oracle", "coverage", gt, gt, articles, rng_seed=1)
    assert row.rho_s == 1.0
    assert row.winrate == 1.0
    record = row.to_record()
    assert record["stars"] == "***"


def test_benchmark_metric_constant_scores_reported_null():
    gt, articles = _synthetic_scores(5, 4, seed=11)
    row = mb.benchmark_metric("flat", "coverage", [1.0] * len(gt), gt, articles)
    assert row.rho_s is None
    assert row.p_value is None


# -- human evaluation --------------------------------------------------------------


def _record(doc_n, summ_n, included, supported, method="m"):
    return mb.HumanEvalRecord(
        instance_id="i1",
        method=method,
        doc_keypoints=tuple(f"d{i}" for i in range(doc_n)),
        summary_keypoints=tuple(f"s{i}" for i in range(summ_n)),
        included_doc_ids=frozenset(f"d{i}" for i in included),
        supported_summary_ids=frozenset(f"s{i}" for i in supported),
    )


def test_human_scores_perfect():
    record = _record(3, 2, [0, 1, 2], [0, 1])
    assert mb.human_scores(record) == (Fraction(1), Fraction(1))


def test_human_scores_partial():
    record = _record(3, 2, [0], [1])
    assert mb.human_scores(record) == (Fraction(1, 3), Fraction(1, 2))


def test_human_scores_requires_summary_keypoints():
    record = _record(3, 0, [0], [])
    with pytest.raises(ParameterError, match="faithfulness undefined"):
        mb.human_scores(record)


def test_human_record_rejects_dangling_marks():
    with pytest.raises(ParameterError):
        _record(2, 2, [5], [0])


def test_inclusion_stats_single_record():
    stats = mb.keypoint_inclusion_stats({"m": [_record(4, 3, [0, 1, 2, 3], [0, 1, 2])]})
    assert stats["m"]["included"]["mean"] == 4.0
    assert stats["m"]["omitted"]["mean"] == 0.0
    assert stats["m"]["hallucinated"]["mean"] == 0.0
    assert stats["m"]["included"]["sd"] == 0.0


def test_inclusion_stats_hand_computed():
    records = [
        _record(3, 2, [0, 1], [0]),      # included 2, omitted 1, hallucinated 1
        _record(4, 3, [0], [0, 1, 2]),   # included 1, omitted 3, hallucinated 0
    ]
    stats = mb.keypoint_inclusion_stats({"m": records})
    assert stats["m"]["included"]["mean"] == pytest.approx(1.5)
    assert stats["m"]["omitted"]["mean"] == pytest.approx(2.0)
    assert stats["m"]["hallucinated"]["mean"] == pytest.approx(0.5)
    assert stats["m"]["included"]["sd"] == pytest.approx(np.std([2, 1], ddof=1))
    assert stats["m"]["omitted"]["sd"] == pytest.approx(np.std([1, 3], ddof=1))


def test_inclusion_stats_empty_method_rejected():
    with pytest.raises(ParameterError):
        mb.keypoint_inclusion_stats({"m": []})
