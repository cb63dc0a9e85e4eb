"""Train the surrogate, score every model, and compare against the BT leaderboard."""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..arena import BtFit, RankedLeaderboard, to_leaderboard
from ..textmetrics.features import FeatureName, FeatureVector
from .dataset import HoldoutProtocol, TrainingSet, build_dataset, feature_columns
from .forest import ForestParams, RegressionForest, feature_importance, fit_forest, train_forest
from .metrics import kendall_tau, r_squared

TRAIN_PREDICTIONS = ("oob", "in_sample")


@dataclass(frozen=True)
class R2Protocol:
    """Holdout R^2 of one forest per bootstrap tournament."""

    values: np.ndarray
    skipped: int

    @property
    def mean(self) -> float:
        return float(self.values.mean()) if self.values.size else float("nan")

    @property
    def ci(self) -> tuple[float, float]:
        if not self.values.size:
            return (float("nan"), float("nan"))
        lo, hi = np.percentile(self.values, [2.5, 97.5])
        return float(lo), float(hi)

    def to_json(self) -> dict:
        lo, hi = self.ci
        return {"n_fits": int(self.values.size), "skipped": self.skipped, "mean": self.mean,
                "ci_low": lo, "ci_high": hi}


@dataclass
class SurrogateResult:
    forest: RegressionForest
    train: TrainingSet
    holdout: TrainingSet | None
    holdout_r2: float | None
    predictions: dict[str, float]
    leaderboard: RankedLeaderboard
    bt_leaderboard: RankedLeaderboard
    tau_vs_bt: float
    importances: dict[str, float]
    warnings: list[str] = field(default_factory=list)
    r2_protocol: R2Protocol | None = None


def _predict_all(forest: RegressionForest, train: TrainingSet, vectors: Sequence[FeatureVector],
                 mode: str, warnings: list[str]) -> dict[str, float]:
    cols = train.feature_names
    names = [v.model_id for v in vectors]
    X = np.array([v.as_row(cols) for v in vectors], dtype=np.float64)
    preds = dict(zip(names, forest.predict(X).tolist()))
    if mode == "oob":
        oob = forest.oob_predict()
        for m, v in zip(train.model_ids, oob.tolist()):
            if math.isnan(v):
                warnings.append(f"{m}: in every bootstrap sample, using in-sample prediction")
            else:
                preds[m] = v
    return preds


def surrogate_pipeline(vectors: Sequence[FeatureVector], bt: BtFit | Mapping[str, float],
                       protocol: HoldoutProtocol = HoldoutProtocol(),
                       params: ForestParams = ForestParams(), seed: int = 0,
                       features: Sequence[FeatureName] | None = None,
                       train_predictions: str = "oob",
                       per_tournament: bool = False) -> SurrogateResult:
    """Fit on the training split, predict a logit for every model with a
    feature vector, and rank the result.

    ``train_predictions="oob"`` scores training models with the trees that did
    not see them, so the synthetic leaderboard is not a memorised copy of the
    targets. Holdout models are always scored by the full forest.
    """
    if train_predictions not in TRAIN_PREDICTIONS:
        raise ValueError(f"train_predictions must be one of {TRAIN_PREDICTIONS}")
    train, holdout = build_dataset(vectors, bt, protocol, features)
    forest = train_forest(train, params, seed, "forest")
    warnings: list[str] = []
    holdout_r2 = None
    if holdout is None:
        warnings.append("empty holdout set; tau is measured on training models only")
    elif len(holdout) >= 2 and np.ptp(holdout.y) > 0:
        holdout_r2 = r_squared(holdout.y, forest.predict(holdout.X))
    else:
        warnings.append("holdout too small for R^2")
    preds = _predict_all(forest, train, vectors, train_predictions, warnings)
    bt_scores = bt.means() if isinstance(bt, BtFit) else dict(bt)
    shared = [m for m in bt_scores if m in preds]
    tau = kendall_tau({m: preds[m] for m in shared}, {m: bt_scores[m] for m in shared})
    r2p = None
    if per_tournament:
        if not isinstance(bt, BtFit):
            raise TypeError("per-tournament protocol needs a BtFit with tournament samples")
        r2p = per_tournament_r2(vectors, bt, protocol, params, seed, features)
    return SurrogateResult(
        forest=forest, train=train, holdout=holdout, holdout_r2=holdout_r2, predictions=preds,
        leaderboard=to_leaderboard(preds), bt_leaderboard=to_leaderboard(bt_scores), tau_vs_bt=tau,
        importances=feature_importance(forest), warnings=warnings, r2_protocol=r2p,
    )


def per_tournament_r2(vectors: Sequence[FeatureVector], bt: BtFit,
                      protocol: HoldoutProtocol = HoldoutProtocol(),
                      params: ForestParams = ForestParams(), seed: int = 0,
                      features: Sequence[FeatureName] | None = None) -> R2Protocol:
    """One forest per tournament, each scored on the holdout models of that tournament."""
    by_model = {v.model_id: v for v in vectors}
    train_m, hold_m = protocol.split(bt.models)
    if len(hold_m) < 2:
        raise ValueError("R^2 protocol needs at least two holdout models")
    cols = feature_columns([by_model[m] for m in bt.models], features)
    pos = {m: i for i, m in enumerate(bt.models)}
    Xt = np.array([by_model[m].as_row(cols) for m in train_m], dtype=np.float64)
    Xh = np.array([by_model[m].as_row(cols) for m in hold_m], dtype=np.float64)
    ti = [pos[m] for m in train_m]
    hi = [pos[m] for m in hold_m]
    values, skipped = [], 0
    for i, sample in enumerate(bt.samples):
        yh = sample[hi]
        if np.ptp(yh) == 0:
            skipped += 1
            continue
        f = fit_forest(Xt, sample[ti], cols, params, seed, f"tournament-{i}/forest")
        values.append(r_squared(yh, f.predict(Xh)))
    return R2Protocol(np.array(values), skipped)
