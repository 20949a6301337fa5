import numpy as np

from ..errors import ConfigError, InsufficientDataError
from .base import MultiOutputModel


class KNNRegressor(MultiOutputModel):
    """Brute-force k-nearest neighbors in lag space.

    Neighbors are ordered by Euclidean distance, ties broken by training
    row order. With ``weight="distance"`` a query that coincides with one
    or more of its neighbors returns the mean target of those exact matches.
    """

    def __init__(self, X, Y, k, weight="uniform", spec=None):
        if weight not in ("uniform", "distance"):
            raise ConfigError(f"unknown kNN weight {weight!r}")
        if k < 1:
            raise ConfigError("K must be >= 1")
        if X.shape[0] < k:
            raise InsufficientDataError(f"kNN with K={k} needs at least {k} training rows, got {X.shape[0]}")
        super().__init__(spec, X.shape[1], Y.shape[1])
        self.X = X.copy()
        self.Y = Y.copy()
        self.k = int(k)
        self.weight = weight

    def kneighbors(self, X, chunk=256):
        dists, idxs = [], []
        for start in range(0, X.shape[0], chunk):
            diff = X[start:start + chunk, None, :] - self.X[None, :, :]
            d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            idx = np.argsort(d, axis=1, kind="stable")[:, :self.k]
            dists.append(np.take_along_axis(d, idx, axis=1))
            idxs.append(idx)
        return np.concatenate(dists), np.concatenate(idxs)

    def _predict(self, X):
        dist, idx = self.kneighbors(X)
        targets = self.Y[idx]
        if self.weight == "uniform":
            return targets.mean(axis=1)
        exact = dist == 0.0
        with np.errstate(divide="ignore"):
            w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / dist)
        w /= w.sum(axis=1, keepdims=True)
        return np.einsum("ij,ijh->ih", w, targets)


def fit_knn(X, Y, k, weight="uniform", spec=None):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    return KNNRegressor(X, Y, k, weight, spec)
