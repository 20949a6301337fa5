"""Independent reference computations used to check the package's solvers."""
import math

import numpy as np


def ridge_normal_equations(X, y, lam):
    """Dense (X'X + lam I)^-1 X'y on centered data, intercept from the means."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = X.mean(axis=0), y.mean(axis=0)
    Xc, yc = X - xm, y - ym
    w = np.linalg.inv(Xc.T @ Xc + lam * np.eye(X.shape[1])) @ Xc.T @ yc
    return w, ym - xm @ w


def elastic_net_kkt_violation(X, y, coef, lam, l1_ratio):
    """Largest violation of the subgradient optimality conditions.

    Works in the standardized space (population std, centered target) for
    the objective (1/2m)||y - Zw||^2 + lam*(a|w|_1 + (1-a)/2 ||w||^2).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(X.shape[0], -1)
    m = X.shape[0]
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / sd
    W = np.asarray(coef).reshape(X.shape[1], -1) * sd[:, None]
    R = (y - y.mean(axis=0)) - Z @ W
    worst = 0.0
    for j in range(X.shape[1]):
        for h in range(y.shape[1]):
            g = Z[:, j] @ R[:, h] / m - lam * (1 - l1_ratio) * W[j, h]
            if W[j, h] != 0:
                viol = abs(g - lam * l1_ratio * math.copysign(1.0, W[j, h]))
            else:
                viol = max(0.0, abs(g) - lam * l1_ratio)
            worst = max(worst, viol)
    return worst


def brute_force_knn(Xtr, Ytr, x, k, weight):
    dists = [(math.sqrt(sum((a - b) ** 2 for a, b in zip(row, x))), i) for i, row in enumerate(Xtr)]
    dists.sort()
    nearest = dists[:k]
    if weight == "uniform":
        return np.mean([Ytr[i] for _, i in nearest], axis=0)
    exact = [i for d, i in nearest if d == 0.0]
    if exact:
        return np.mean([Ytr[i] for i in exact], axis=0)
    w = np.array([1.0 / d for d, _ in nearest])
    return (w[:, None] * np.array([Ytr[i] for _, i in nearest])).sum(axis=0) / w.sum()


def brute_force_neighbors(Xtr, x, k):
    """Indices of the k nearest rows, ties to the lower index."""
    dists = [(math.sqrt(sum((a - b) ** 2 for a, b in zip(row, x))), i) for i, row in enumerate(Xtr)]
    dists.sort()
    return [i for _, i in dists[:k]]
