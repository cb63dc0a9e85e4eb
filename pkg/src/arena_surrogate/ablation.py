"""Sampling and feature-subset ablations."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .arena import BtFit, DisconnectedGraph, JudgmentPool, PairCounts, fit_bt, tally
from .core import derive_rng
from .surrogate import ForestParams, HoldoutProtocol, kendall_tau, per_tournament_r2, surrogate_pipeline
from .textmetrics.features import PRESETS, FeatureVector, resolve_subset


@dataclass(frozen=True)
class SamplingCell:
    n_queries: int
    match_fraction: float
    bt_taus: np.ndarray
    surrogate_taus: np.ndarray | None
    failures: int

    @staticmethod
    def _stats(x):
        x = x[~np.isnan(x)] if x is not None else np.array([])
        if not x.size:
            return float("nan"), float("nan")
        return float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 0.0

    def row(self) -> dict:
        bt_mean, bt_sd = self._stats(self.bt_taus)
        out = {"n_queries": self.n_queries, "match_fraction": self.match_fraction, "reps": int(self.bt_taus.size),
               "bt_tau_mean": bt_mean, "bt_tau_sd": bt_sd, "failures": self.failures}
        if self.surrogate_taus is not None:
            out["surrogate_tau_mean"], out["surrogate_tau_sd"] = self._stats(self.surrogate_taus)
        return out


def subsample_counts(pool: JudgmentPool, n_queries: int, match_fraction: float,
                     rng: np.random.Generator) -> PairCounts:
    """Draw ``n_queries`` distinct queries, then keep a ``match_fraction`` share of their judgments."""
    if not 1 <= n_queries <= pool.n_queries:
        raise ValueError(f"n_queries must lie in [1, {pool.n_queries}]")
    if not 0 < match_fraction <= 1:
        raise ValueError("match_fraction must lie in (0, 1]")
    picked = np.sort(rng.choice(pool.n_queries, size=n_queries, replace=False))
    sub = pool.restrict([pool.query_ids[i] for i in picked])
    if match_fraction >= 1.0:
        return tally(sub)
    keep = max(1, int(round(match_fraction * len(sub))))
    chosen = rng.choice(len(sub), size=keep, replace=False)
    weight = np.zeros(len(sub))
    weight[chosen] = 1.0
    ident = np.arange(len(sub), dtype=np.int64)
    return PairCounts(sub.models, kernels.tally(ident, sub.a_idx, sub.b_idx, sub.score_a, weight, sub.n_models))


def ablate_sampling(pool: JudgmentPool, query_grid: Sequence[int], fraction_grid: Sequence[float],
                    reps: int = 10, seed: int = 0, reg: float = 0.5,
                    vectors: Sequence[FeatureVector] | None = None,
                    protocol: HoldoutProtocol = HoldoutProtocol(),
                    params: ForestParams = ForestParams()) -> list[SamplingCell]:
    """Kendall tau of cheaper BT fits against the full-data BT leaderboard.

    With ``vectors`` the surrogate is also retrained on each cheap fit and its
    synthetic leaderboard is scored against the same reference.
    """
    if not query_grid or not fraction_grid:
        raise ValueError("query and fraction grids must be non-empty")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    reference = fit_bt(tally(pool), reg).as_dict()
    cells = []
    for nq in query_grid:
        for frac in fraction_grid:
            bt_taus, sur_taus, fails = [], [], 0
            for r in range(reps):
                rng = derive_rng(seed, f"ablate-sampling/{nq}/{frac}/{r}")
                try:
                    cheap = fit_bt(subsample_counts(pool, int(nq), float(frac), rng), reg).as_dict()
                except DisconnectedGraph:
                    fails += 1
                    bt_taus.append(np.nan)
                    sur_taus.append(np.nan)
                    continue
                bt_taus.append(kendall_tau(cheap, reference))
                if vectors is not None:
                    res = surrogate_pipeline(vectors, cheap, protocol, params, seed)
                    sur_taus.append(kendall_tau({m: res.predictions[m] for m in reference}, reference))
            cells.append(SamplingCell(int(nq), float(frac), np.array(bt_taus),
                                      np.array(sur_taus) if vectors is not None else None, fails))
    return cells


def ablate_features(vectors: Sequence[FeatureVector], bt: BtFit, presets: Sequence[str] = tuple(PRESETS),
                    protocol: HoldoutProtocol = HoldoutProtocol(), params: ForestParams = ForestParams(),
                    seed: int = 0, per_tournament: bool = False) -> list[dict]:
    """Surrogate quality per feature subset."""
    rows = []
    for name in presets:
        feats = resolve_subset(name)
        res = surrogate_pipeline(vectors, bt, protocol, params, seed, feats)
        row = {"subset": name if isinstance(name, str) else "custom", "n_features": len(feats),
               "features": " ".join(f.value for f in res.train.feature_names),
               "tau_vs_bt": res.tau_vs_bt,
               "holdout_r2": res.holdout_r2 if res.holdout_r2 is not None else float("nan")}
        if per_tournament:
            r2 = per_tournament_r2(vectors, bt, protocol, params, seed, feats)
            row["r2_mean"] = r2.mean
            row["r2_ci_low"], row["r2_ci_high"] = r2.ci
        rows.append(row)
    return rows
