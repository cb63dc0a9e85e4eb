from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RIDGE = 1e-6


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.weights + self.intercept


def train_linear(X, y, ridge: float = RIDGE, refine: int = 3) -> LinearModel:
    """Least squares on centred data, solved through a ridge-damped system.

    A few steps of iterative refinement remove the shrinkage the damping would
    otherwise leave behind, so exact linear data is recovered to ~1e-12.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} rows for {p} features")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    raw = Xc.T @ Xc
    # degenerate: some direction carries less curvature than the damping itself
    if np.linalg.eigvalsh(raw)[0] <= ridge:
        raise np.linalg.LinAlgError("design matrix is degenerate even after ridge damping")
    damped = raw + ridge * np.eye(p)
    rhs = Xc.T @ (y - y_mean)
    w = np.linalg.solve(damped, rhs)
    for _ in range(refine):
        w = w + np.linalg.solve(damped, rhs - raw @ w)
    return LinearModel(w, float(y_mean - x_mean @ w))
