"""Ridge, lasso and elastic-net regression, multi-output with an unpenalized intercept."""
import numpy as np

from ..errors import InsufficientDataError, NumericError
from .base import MultiOutputModel


def _check_xy(X, Y, min_rows=2):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] < min_rows:
        raise InsufficientDataError(f"need at least {min_rows} rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise NumericError("training data contains non-finite values")
    return X, Y


def standardize(X):
    """Column means and population standard deviations; zero-variance columns get scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    constant = scale <= 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(constant, 1.0, scale)
    return mean, scale, constant


def ridge_coefficients(X, Y, lam):
    """Solve ``(Xc'Xc + lam I) W = Xc'Yc`` on centered data; returns (W, intercept)."""
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    Yc = Y - y_mean
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        W = np.linalg.solve(gram, Xc.T @ Yc)
    except np.linalg.LinAlgError:
        W = np.linalg.lstsq(gram, Xc.T @ Yc, rcond=None)[0]
    return W, y_mean - x_mean @ W


def coordinate_descent(Z, Yc, lam, l1_ratio, tol=1e-6, max_sweeps=1000, active=None):
    """Cyclic coordinate descent for the elastic-net objective on standardized inputs.

    Minimizes ``(1/2m)||Yc - Z W||^2 + lam*(l1_ratio*|W|_1 + (1-l1_ratio)/2*||W||^2)``
    for every output column at once; columns of ``Z`` are assumed to have
    zero mean and unit population variance (or be identically zero, in
    which case they are skipped via ``active``).

    Returns ``(W, n_sweeps)``.
    """
    m, q = Z.shape
    W = np.zeros((q, Yc.shape[1]))
    if active is None:
        active = np.ones(q, dtype=bool)
    R = Yc.copy()
    l1 = lam * l1_ratio
    denom = 1.0 + lam * (1.0 - l1_ratio)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in np.flatnonzero(active):
            z = Z[:, j]
            w_old = W[j].copy()
            rho = z @ R / m + w_old
            w_new = np.sign(rho) * np.maximum(np.abs(rho) - l1, 0.0) / denom
            delta = w_new - w_old
            if np.any(delta):
                R -= np.outer(z, delta)
                W[j] = w_new
                max_delta = max(max_delta, float(np.max(np.abs(delta))))
        if max_delta < tol:
            break
    return W, sweeps


class LinearModel(MultiOutputModel):
    def __init__(self, coef, intercept, spec=None, n_iter=None):
        super().__init__(spec, coef.shape[0], coef.shape[1])
        self.coef = coef
        self.intercept = intercept
        self.n_iter = n_iter

    def _predict(self, X):
        return X @ self.coef + self.intercept


def fit_ridge(X, Y, lam, spec=None):
    X, Y = _check_xy(X, Y)
    W, b = ridge_coefficients(X, Y, lam)
    return LinearModel(W, b, spec)


def fit_elastic_net(X, Y, lam, l1_ratio=0.5, tol=1e-6, max_sweeps=1000, spec=None):
    X, Y = _check_xy(X, Y)
    x_mean, x_scale, constant = standardize(X)
    y_mean = Y.mean(axis=0)
    Z = (X - x_mean) / x_scale
    Z[:, constant] = 0.0
    W, sweeps = coordinate_descent(Z, Y - y_mean, lam, l1_ratio, tol, max_sweeps, active=~constant)
    coef = W / x_scale[:, None]
    return LinearModel(coef, y_mean - x_mean @ coef, spec, n_iter=sweeps)


def fit_lasso(X, Y, lam, tol=1e-6, max_sweeps=1000, spec=None):
    return fit_elastic_net(X, Y, lam, 1.0, tol, max_sweeps, spec)
