from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..arena import BtFit
from ..textmetrics.features import ALL_FEATURES, FeatureName, FeatureVector

DEFAULT_HOLDOUT = frozenset({"Gemma-1.1 (2B)", "Llama-3 (70B)"})


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingSet:
    model_ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[FeatureName, ...]

    def __post_init__(self):
        if len(set(self.model_ids)) != len(self.model_ids):
            raise DatasetError("model ids must be unique")
        if self.X.shape != (len(self.model_ids), len(self.feature_names)) or self.y.shape != (len(self.model_ids),):
            raise DatasetError("row/column shapes disagree")
        if not self.feature_names:
            raise DatasetError("need at least one feature")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise DatasetError("training rows must be finite")

    def __len__(self) -> int:
        return len(self.model_ids)


@dataclass(frozen=True)
class HoldoutProtocol:
    holdout_models: frozenset[str] = field(default=DEFAULT_HOLDOUT)

    def __post_init__(self):
        object.__setattr__(self, "holdout_models", frozenset(self.holdout_models))

    def split(self, models: Iterable[str]) -> tuple[list[str], list[str]]:
        train, hold = [], []
        for m in models:
            (hold if m in self.holdout_models else train).append(m)
        return train, hold


def _targets(bt: BtFit | Mapping[str, float]) -> dict[str, float]:
    return bt.means() if isinstance(bt, BtFit) else {m: float(v) for m, v in bt.items()}


def feature_columns(vectors: Sequence[FeatureVector], features: Sequence[FeatureName] | None = None) -> tuple[FeatureName, ...]:
    """Shared feature set in canonical enum order, optionally narrowed to ``features``."""
    if not vectors:
        raise DatasetError("no feature vectors")
    sets = {frozenset(v.values) for v in vectors}
    if len(sets) != 1:
        raise DatasetError("feature vectors do not share one feature set")
    present = next(iter(sets))
    wanted = present if features is None else frozenset(FeatureName(f) for f in features)
    missing = wanted - present
    if missing:
        raise DatasetError(f"requested features absent from vectors: {sorted(f.value for f in missing)}")
    return tuple(f for f in ALL_FEATURES if f in wanted)


def build_dataset(vectors: Sequence[FeatureVector], bt: BtFit | Mapping[str, float],
                  split: HoldoutProtocol = HoldoutProtocol(),
                  features: Sequence[FeatureName] | None = None) -> tuple[TrainingSet, TrainingSet | None]:
    """Join feature vectors with BT targets and partition rows by the holdout set.

    Rows follow the order of the fitted models; the holdout set is None when empty.
    """
    targets = _targets(bt)
    by_model = {v.model_id: v for v in vectors}
    if len(by_model) != len(vectors):
        raise DatasetError("duplicate feature vectors for a model")
    lacking = [m for m in targets if m not in by_model]
    if lacking:
        raise DatasetError(f"no feature vector for fitted models: {lacking}")
    absent = sorted(split.holdout_models - set(targets))
    if absent:
        raise DatasetError(f"holdout models not present in the fit: {absent}")
    cols = feature_columns([by_model[m] for m in targets], features)
    train_m, hold_m = split.split(targets)

    def make(models):
        X = np.array([by_model[m].as_row(cols) for m in models], dtype=np.float64).reshape(len(models), len(cols))
        y = np.array([targets[m] for m in models], dtype=np.float64)
        return TrainingSet(tuple(models), X, y, cols)

    if len(train_m) < 2:
        raise DatasetError("fewer than two training models")
    return make(train_m), (make(hold_m) if hold_m else None)
