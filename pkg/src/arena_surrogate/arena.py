"""Bradley-Terry leaderboards from pairwise judge verdicts.

Judgments are tallied into win matrices, fitted with Hunter's MM iteration and
bootstrapped over queries (one bootstrap replicate = one "tournament").
"""
from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .core import PairwiseJudgment, Verdict, derive_rng

_MARKER = re.compile(r"\[\[\s*([ABC])\s*\]\]")
_MARKER_VERDICT = {"A": Verdict.WIN_A, "B": Verdict.WIN_B, "C": Verdict.TIE}


class UnparseableVerdict(ValueError):
    pass


class DisconnectedGraph(ValueError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


def canonicalize_verdict(raw: str, swapped: bool) -> Verdict:
    """Last ``[[A]]``/``[[B]]``/``[[C]]`` marker wins; undo a presentation swap."""
    found = _MARKER.findall(raw)
    if not found:
        raise UnparseableVerdict("no [[A]]/[[B]]/[[C]] marker in judge output")
    v = _MARKER_VERDICT[found[-1]]
    return v.flipped() if swapped else v


@dataclass(frozen=True)
class JudgmentPool:
    """Columnar view of canonical judgments, indexed by model and query."""

    models: tuple[str, ...]
    query_ids: tuple[str, ...]
    q_idx: np.ndarray
    a_idx: np.ndarray
    b_idx: np.ndarray
    score_a: np.ndarray

    @classmethod
    def from_judgments(cls, judgments: Iterable[PairwiseJudgment], models: Sequence[str] | None = None) -> "JudgmentPool":
        js = list(judgments)
        if models is None:
            models = sorted({j.model_a for j in js} | {j.model_b for j in js})
        models = tuple(models)
        m_index = {m: i for i, m in enumerate(models)}
        queries = tuple(sorted({j.query_id for j in js}))
        q_index = {q: i for i, q in enumerate(queries)}
        rows = sorted(
            ((q_index[j.query_id], m_index[j.model_a], m_index[j.model_b], j.verdict.score_a) for j in js),
            key=lambda r: r[:3],
        )
        arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
        return cls(
            models,
            queries,
            arr[:, 0].astype(np.int64),
            arr[:, 1].astype(np.int64),
            arr[:, 2].astype(np.int64),
            arr[:, 3].copy(),
        )

    @property
    def n_models(self) -> int:
        return len(self.models)

    @property
    def n_queries(self) -> int:
        return len(self.query_ids)

    def __len__(self) -> int:
        return int(self.q_idx.size)

    def restrict(self, query_ids: Iterable[str]) -> "JudgmentPool":
        keep_q = sorted(set(query_ids))
        index = {q: i for i, q in enumerate(self.query_ids)}
        unknown = [q for q in keep_q if q not in index]
        if unknown:
            raise KeyError(f"queries not in pool: {unknown[:5]}")
        old = np.array([index[q] for q in keep_q], dtype=np.int64)
        remap = np.full(self.n_queries, -1, dtype=np.int64)
        remap[old] = np.arange(old.size)
        mask = remap[self.q_idx] >= 0
        return JudgmentPool(self.models, tuple(keep_q), remap[self.q_idx[mask]],
                            self.a_idx[mask], self.b_idx[mask], self.score_a[mask])


@dataclass(frozen=True)
class PairCounts:
    """``wins[i, j]``: wins of model i over j, ties counted 0.5 to each side."""

    models: tuple[str, ...]
    wins: np.ndarray

    @property
    def n_matches(self) -> np.ndarray:
        return self.wins + self.wins.T

    def pair(self, a: str, b: str) -> tuple[float, float, float]:
        i, j = self.models.index(a), self.models.index(b)
        return float(self.wins[i, j]), float(self.wins[j, i]), float(self.wins[i, j] + self.wins[j, i])

    def scaled(self, factor: float) -> "PairCounts":
        return PairCounts(self.models, self.wins * factor)


def tally(judgments, query_subset: Iterable[str] | None = None) -> PairCounts:
    """Win counts over a (multi)set of queries.

    A query appearing k times in ``query_subset`` contributes its judgments k
    times, which is how bootstrap resamples are tallied.
    """
    pool = judgments if isinstance(judgments, JudgmentPool) else JudgmentPool.from_judgments(judgments)
    if query_subset is None:
        weights = np.ones(pool.n_queries)
    else:
        index = {q: i for i, q in enumerate(pool.query_ids)}
        weights = np.zeros(pool.n_queries)
        for q, c in Counter(query_subset).items():
            if q in index:
                weights[index[q]] = c
    return PairCounts(pool.models, kernels.tally(pool.q_idx, pool.a_idx, pool.b_idx, pool.score_a,
                                                  weights, pool.n_models))


@dataclass(frozen=True)
class BtLogits:
    models: tuple[str, ...]
    logits: np.ndarray
    iterations: int
    converged: bool

    def as_dict(self) -> dict[str, float]:
        return {m: float(v) for m, v in zip(self.models, self.logits)}


def regularized_wins(counts: PairCounts, reg: float) -> np.ndarray:
    w = np.array(counts.wins, dtype=np.float64)
    if reg:
        played = counts.n_matches > 0
        np.fill_diagonal(played, False)
        w = w + reg * played
    return w


def fit_bt(counts: PairCounts, reg: float = 0.5, tol: float = 1e-8, max_iter: int = 1000) -> BtLogits:
    """Maximum-likelihood Bradley-Terry logits (natural log, mean-centred).

    ``reg`` pseudo-wins are added in both directions of every pair that met at
    least once, which keeps all logits finite. Raises ``DisconnectedGraph``
    when the (regularised) win graph is not strongly connected, since the MLE
    then does not exist. Non-convergence returns the last iterate and emits a
    ``NonConvergenceWarning``.
    """
    if reg < 0:
        raise ValueError("reg must be >= 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    n = len(counts.models)
    if n < 2:
        raise ValueError("need at least two models")
    w = regularized_wins(counts, reg)
    np.fill_diagonal(w, 0.0)
    n_comp, _ = connected_components(w > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise DisconnectedGraph(
            f"win graph over {n} models has {n_comp} strongly connected components; "
            "add comparisons or use reg > 0"
        )
    logits, iters, ok = kernels.bt_mm(w, tol, max_iter)
    if not ok:
        warnings.warn(f"Bradley-Terry MM did not converge in {max_iter} iterations", NonConvergenceWarning,
                      stacklevel=2)
    return BtLogits(counts.models, logits, iters, ok)


@dataclass(frozen=True)
class TournamentConfig:
    n_tournaments: int = 200
    n_queries: int = 100
    match_fraction: float = 1.0
    seed: int = 0
    reg: float = 0.5
    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if self.n_tournaments < 1:
            raise ValueError("n_tournaments must be positive")
        if self.n_queries < 1:
            raise ValueError("n_queries must be positive")
        if not 0 < self.match_fraction <= 1:
            raise ValueError("match_fraction must lie in (0, 1]")


def tournament_label(index: int) -> str:
    return f"tournament-{index}"


def sample_tournament(pool: JudgmentPool, config: TournamentConfig, rng: np.random.Generator) -> PairCounts:
    """Resample queries with replacement, optionally thin the matches, and tally."""
    draws = rng.integers(0, pool.n_queries, size=config.n_queries)
    q_weight = np.bincount(draws, minlength=pool.n_queries).astype(np.float64)
    if config.match_fraction >= 1.0:
        wins = kernels.tally(pool.q_idx, pool.a_idx, pool.b_idx, pool.score_a, q_weight, pool.n_models)
        return PairCounts(pool.models, wins)
    mult = q_weight[pool.q_idx].astype(np.int64)
    slots = np.repeat(np.arange(len(pool)), mult)
    keep = max(1, int(round(config.match_fraction * slots.size)))
    chosen = slots[rng.choice(slots.size, size=keep, replace=False)]
    j_weight = np.bincount(chosen, minlength=len(pool)).astype(np.float64)
    ident = np.arange(len(pool), dtype=np.int64)
    wins = kernels.tally(ident, pool.a_idx, pool.b_idx, pool.score_a, j_weight, pool.n_models)
    return PairCounts(pool.models, wins)


def run_tournament(pool: JudgmentPool, config: TournamentConfig, index: int,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """One bootstrap replicate; logits ordered like ``pool.models``."""
    if rng is None:
        rng = derive_rng(config.seed, tournament_label(index))
    counts = sample_tournament(pool, config, rng)
    return fit_bt(counts, config.reg, config.tol, config.max_iter).logits


@dataclass
class BtFit:
    """Point fit on the full pool plus the bootstrap distribution of logits."""

    models: tuple[str, ...]
    logit: np.ndarray
    samples: np.ndarray  # (n_tournaments, n_models)
    metadata: dict = field(default_factory=dict)

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def ci_low(self) -> np.ndarray:
        return np.percentile(self.samples, 2.5, axis=0)

    @property
    def ci_high(self) -> np.ndarray:
        return np.percentile(self.samples, 97.5, axis=0)

    def means(self) -> dict[str, float]:
        return {m: float(v) for m, v in zip(self.models, self.mean)}

    def leaderboard(self) -> "RankedLeaderboard":
        return to_leaderboard(self.means())

    def rows(self) -> list[dict]:
        """Per-model rows sorted by descending mean (tie-break by name)."""
        mean, lo, hi = self.mean, self.ci_low, self.ci_high
        idx = {m: i for i, m in enumerate(self.models)}
        out = []
        for e in self.leaderboard().entries:
            i = idx[e.model]
            out.append({
                "model": e.model,
                "logit": float(self.logit[i]),
                "mean": float(mean[i]),
                "ci_low_offset": float(lo[i] - mean[i]),
                "ci_high_offset": float(hi[i] - mean[i]),
            })
        return out

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "models": self.rows(),
            "model_order": list(self.models),
            "tournament_logits": self.samples.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BtFit":
        models = tuple(obj["model_order"])
        by = {r["model"]: r for r in obj["models"]}
        logit = np.array([by[m]["logit"] for m in models])
        return cls(models, logit, np.array(obj["tournament_logits"], dtype=np.float64).reshape(-1, len(models)),
                   dict(obj.get("metadata", {})))


def bootstrap_bt(pool: JudgmentPool, config: TournamentConfig, workers: int = 1) -> BtFit:
    """Run ``config.n_tournaments`` independent tournaments.

    Each tournament draws from its own ``(seed, "tournament-<i>")`` stream, so
    the result does not depend on ``workers`` or scheduling.
    """
    point = fit_bt(tally(pool), config.reg, config.tol, config.max_iter)

    def one(i):
        return run_tournament(pool, config, i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            samples = list(ex.map(one, range(config.n_tournaments)))
    else:
        samples = [one(i) for i in range(config.n_tournaments)]
    meta = {
        "seed": config.seed,
        "n_tournaments": config.n_tournaments,
        "n_queries": config.n_queries,
        "match_fraction": config.match_fraction,
        "reg": config.reg,
        "n_judgments": len(pool),
        "n_pool_queries": pool.n_queries,
        "rng_labels": f"{tournament_label(0)} .. {tournament_label(config.n_tournaments - 1)}",
    }
    return BtFit(pool.models, point.logits, np.vstack(samples), meta)


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    model: str
    score: float


@dataclass(frozen=True)
class RankedLeaderboard:
    entries: tuple[LeaderboardEntry, ...]

    def models(self) -> list[str]:
        return [e.model for e in self.entries]

    def ranks(self) -> dict[str, int]:
        return {e.model: e.rank for e in self.entries}

    def scores(self) -> dict[str, float]:
        return {e.model: e.score for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)


def to_leaderboard(scores: Mapping[str, float]) -> RankedLeaderboard:
    """Descending by score; equal scores ordered by model name."""
    for m, s in scores.items():
        if not math.isfinite(s):
            raise ValueError(f"non-finite score for {m!r}")
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedLeaderboard(tuple(LeaderboardEntry(i + 1, m, float(s)) for i, (m, s) in enumerate(order)))
