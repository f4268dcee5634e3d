"""Bradley-Terry ability estimation over per-document method scores, with
bootstrap resampling for confidence intervals and a final ranking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import BootstrapError, ParameterError

logger = logging.getLogger(__name__)

ABILITY_CAP = 30.0
GRAD_TOL = 1e-8
MAX_ITER = 10_000


def win_prob(theta_i: float, theta_j: float, sigma: float = 1.0) -> float:
    """Probability that ability theta_i beats theta_j under logistic noise.

    Computed through the d >= 0 branch in both directions so that
    win_prob(a, b) + win_prob(b, a) == 1.0 exactly (1 - p is exact for
    p in [1/2, 1]).
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    d = (theta_i - theta_j) / sigma
    if d >= 0:
        return 1.0 / (1.0 + math.exp(-d))
    return 1.0 - 1.0 / (1.0 + math.exp(d))


@dataclass(frozen=True)
class PairwiseOutcome:
    winner: str
    loser: str
    document_id: str

    def __post_init__(self):
        if self.winner == self.loser:
            raise ParameterError("winner and loser must differ")


@dataclass(frozen=True)
class ScoreTable:
    """Per-method, per-document raw scores; NaN marks a missing cell."""

    methods: tuple[str, ...]
    documents: tuple[str, ...]
    values: np.ndarray  # shape (methods, documents)

    def __post_init__(self):
        if self.values.shape != (len(self.methods), len(self.documents)):
            raise ParameterError("score table shape mismatch")

    @classmethod
    def from_records(cls, records) -> "ScoreTable":
        """Build from {method, document, score} records."""
        methods = sorted({r["method"] for r in records})
        documents = sorted({r["document"] for r in records})
        values = np.full((len(methods), len(documents)), np.nan)
        m_idx = {m: i for i, m in enumerate(methods)}
        d_idx = {d: i for i, d in enumerate(documents)}
        for r in records:
            values[m_idx[r["method"]], d_idx[r["document"]]] = r["score"]
        return cls(tuple(methods), tuple(documents), values)


def outcomes_from_scores(table: ScoreTable, rng_seed: int = 0) -> list[PairwiseOutcome]:
    """One outcome per unordered method pair per document.

    Exact ties resolve by a seeded coin flip; missing cells skip the
    comparison with a log line.
    """
    rng = np.random.default_rng([rng_seed, 1])
    outcomes = []
    for i in range(len(table.methods)):
        for j in range(i + 1, len(table.methods)):
            for d, document in enumerate(table.documents):
                a, b = table.values[i, d], table.values[j, d]
                if np.isnan(a) or np.isnan(b):
                    logger.info(
                        "skip %s vs %s on %s: missing score",
                        table.methods[i], table.methods[j], document,
                    )
                    continue
                if a == b:
                    winner_is_i = bool(rng.integers(0, 2))
                elif a > b:
                    winner_is_i = True
                else:
                    winner_is_i = False
                winner, loser = (
                    (table.methods[i], table.methods[j])
                    if winner_is_i
                    else (table.methods[j], table.methods[i])
                )
                outcomes.append(PairwiseOutcome(winner, loser, document))
    return outcomes


@dataclass(frozen=True)
class AbilityEstimate:
    abilities: dict[str, float]
    iterations: int
    grad_norm: float
    capped: bool = False


def _neg_log_likelihood(theta: np.ndarray, wins: np.ndarray):
    diff = theta[:, None] - theta[None, :]
    log_p = -np.logaddexp(0.0, -diff)
    p = 1.0 / (1.0 + np.exp(-diff))
    nll = -float(np.sum(wins * log_p))
    contrib = wins * (1.0 - p)
    grad = -(contrib.sum(axis=1) - contrib.sum(axis=0))
    return nll, grad


def _fit_win_matrix(wins: np.ndarray) -> tuple[np.ndarray, int, float, bool]:
    n = wins.shape[0]
    result = optimize.minimize(
        _neg_log_likelihood,
        np.zeros(n),
        args=(wins,),
        jac=True,
        method="L-BFGS-B",
        bounds=[(-ABILITY_CAP, ABILITY_CAP)] * n,
        options={"maxiter": MAX_ITER, "gtol": GRAD_TOL, "ftol": 1e-15},
    )
    theta = result.x
    # The MLE diverges when a method never wins or never loses; the bounds
    # keep the fit usable and the estimate gets flagged.
    lossless = (wins.sum(axis=1) > 0) & (wins.sum(axis=0) == 0)
    winless = (wins.sum(axis=0) > 0) & (wins.sum(axis=1) == 0)
    capped = bool(
        np.any(np.abs(theta) >= ABILITY_CAP - 1e-6)
        or np.any(lossless)
        or np.any(winless)
    )
    theta = theta - theta.mean()  # sum-zero identifiability
    grad_norm = float(np.linalg.norm(result.jac))
    return theta, int(result.nit), grad_norm, capped


def win_matrix(outcomes: list[PairwiseOutcome], methods: tuple[str, ...]) -> np.ndarray:
    index = {m: i for i, m in enumerate(methods)}
    wins = np.zeros((len(methods), len(methods)))
    for outcome in outcomes:
        wins[index[outcome.winner], index[outcome.loser]] += 1
    return wins


def fit_bt(outcomes: list[PairwiseOutcome]) -> AbilityEstimate:
    """Maximize the pairwise log-likelihood (sigma fixed at 1, sum-zero).

    Methods with only wins or only losses diverge; their abilities are capped
    at +/-30 and the estimate is flagged instead of failing.
    """
    if not outcomes:
        raise ParameterError("no outcomes to fit")
    methods = tuple(sorted({o.winner for o in outcomes} | {o.loser for o in outcomes}))
    if len(methods) < 2:
        raise ParameterError("need at least two methods")
    wins = win_matrix(outcomes, methods)
    theta, iterations, grad_norm, capped = _fit_win_matrix(wins)
    if capped:
        logger.warning("ability estimate hit the +/-%.0f cap", ABILITY_CAP)
    return AbilityEstimate(
        abilities={m: float(t) for m, t in zip(methods, theta)},
        iterations=iterations,
        grad_norm=grad_norm,
        capped=capped,
    )


def _resample_win_matrix(
    table: ScoreTable, rng: np.random.Generator, mode: str
) -> np.ndarray | None:
    """Win matrix for one bootstrap resample of documents; None if a method
    ends up without any comparison."""
    n_methods = len(table.methods)
    n_docs = len(table.documents)
    draw = rng.integers(0, n_docs, size=n_docs)
    values = table.values[:, draw]
    wins = np.zeros((n_methods, n_methods))
    if mode == "aggregated":
        means = np.nanmean(values, axis=1)
        for i in range(n_methods):
            for j in range(i + 1, n_methods):
                a, b = means[i], means[j]
                if np.isnan(a) or np.isnan(b):
                    continue
                if a == b:
                    if rng.integers(0, 2):
                        wins[i, j] += 1
                    else:
                        wins[j, i] += 1
                elif a > b:
                    wins[i, j] += 1
                else:
                    wins[j, i] += 1
    else:
        for i in range(n_methods):
            for j in range(i + 1, n_methods):
                a, b = values[i], values[j]
                valid = ~(np.isnan(a) | np.isnan(b))
                i_wins = int(np.sum(a[valid] > b[valid]))
                j_wins = int(np.sum(b[valid] > a[valid]))
                ties = int(valid.sum()) - i_wins - j_wins
                if ties:
                    flips = int(rng.integers(0, 2, size=ties).sum())
                    i_wins += flips
                    j_wins += ties - flips
                wins[i, j] += i_wins
                wins[j, i] += j_wins
    played = wins.sum(axis=0) + wins.sum(axis=1)
    if np.any(played == 0):
        return None
    return wins


@dataclass(frozen=True)
class RankReport:
    methods: tuple[str, ...]
    mean_abilities: dict[str, float]
    ci95: dict[str, tuple[float, float]]
    ranks: dict[str, int]
    n_resamples: int
    seed: int
    mode: str
    ability_samples: np.ndarray | None = field(default=None, compare=False, repr=False)

    def to_record(self) -> dict:
        return {
            "methods": [
                {
                    "method": m,
                    "mean_ability": self.mean_abilities[m],
                    "ci95": list(self.ci95[m]),
                    "rank": self.ranks[m],
                }
                for m in sorted(self.methods, key=lambda m: self.ranks[m])
            ],
            "B": self.n_resamples,
            "seed": self.seed,
            "mode": self.mode,
        }


def rank_with_bootstrap(
    table: ScoreTable,
    n_resamples: int = 500,
    seed: int = 0,
    mode: str = "per_document",
    max_redraws: int = 5,
) -> RankReport:
    """Bootstrap documents, refit abilities per resample, rank by mean ability.

    ``mode`` picks the comparison granularity: 'per_document' compares scores
    document by document; 'aggregated' compares resample-mean scores once per
    pair. A resample whose fit is impossible (a method loses all its
    comparisons to missing data) is redrawn up to ``max_redraws`` times.
    """
    if mode not in ("per_document", "aggregated"):
        raise ParameterError(f"unknown mode: {mode}")
    if len(table.methods) < 2:
        raise ParameterError("need at least two methods")
    samples = np.empty((len(table.methods), n_resamples))
    for b in range(n_resamples):
        for attempt in range(max_redraws + 1):
            rng = np.random.default_rng([seed, 3, b, attempt])
            wins = _resample_win_matrix(table, rng, mode)
            if wins is not None:
                break
        else:
            raise BootstrapError(f"resample {b} unfittable after {max_redraws} redraws")
        theta, _, _, _ = _fit_win_matrix(wins)
        samples[:, b] = theta
    means = samples.mean(axis=1)
    order = sorted(range(len(table.methods)), key=lambda i: (-means[i], table.methods[i]))
    ranks = {table.methods[i]: rank + 1 for rank, i in enumerate(order)}
    ci = {
        table.methods[i]: (
            float(np.percentile(samples[i], 2.5)),
            float(np.percentile(samples[i], 97.5)),
        )
        for i in range(len(table.methods))
    }
    return RankReport(
        methods=table.methods,
        mean_abilities={m: float(means[i]) for i, m in enumerate(table.methods)},
        ci95=ci,
        ranks=ranks,
        n_resamples=n_resamples,
        seed=seed,
        mode=mode,
        ability_samples=samples,
    )
