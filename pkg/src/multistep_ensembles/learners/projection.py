"""Principal components regression and PLS2 (NIPALS), both on standardized lags."""
import warnings

import numpy as np

from ..errors import ConfigError, InsufficientDataError, RankWarning
from .linear import LinearModel, _check_xy, standardize


def _check_components(X, n_components):
    m, q = X.shape
    if n_components < 1 or n_components > q:
        raise ConfigError(f"{n_components} components requested for {q} input columns")
    if m <= n_components:
        raise InsufficientDataError(f"{n_components} components need more than {n_components} rows, got {m}")


def _intercept_only(Y, spec, q, family):
    warnings.warn(f"{family}: no component with usable variance; predicting target means", RankWarning,
                  stacklevel=3)
    return LinearModel(np.zeros((q, Y.shape[1])), Y.mean(axis=0), spec)


def _back_transform(B_std, x_mean, x_scale, y_mean, spec):
    coef = B_std / x_scale[:, None]
    return LinearModel(coef, y_mean - x_mean @ coef, spec)


def fit_pcr(X, Y, n_components, spec=None, tol=1e-10):
    X, Y = _check_xy(X, Y)
    _check_components(X, n_components)
    x_mean, x_scale, constant = standardize(X)
    Z = (X - x_mean) / x_scale
    Z[:, constant] = 0.0
    y_mean = Y.mean(axis=0)

    cov = Z.T @ Z / Z.shape[0]
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval, kind="stable")[::-1]
    eigval, eigvec = eigval[order], eigvec[:, order]
    keep = eigval[:n_components] > tol * max(eigval[0], 1.0)
    if not keep.any():
        return _intercept_only(Y, spec, X.shape[1], "PCR")
    V = eigvec[:, :n_components][:, keep]
    T = Z @ V
    gamma = np.linalg.lstsq(T, Y - y_mean, rcond=None)[0]
    return _back_transform(V @ gamma, x_mean, x_scale, y_mean, spec)


def nipals_pls(Z, Yc, n_components, tol=1e-12, max_iter=500):
    """PLS2 by NIPALS on centered ``Z`` (m x q) and ``Yc`` (m x H).

    Returns the x-weights ``W``, x-loadings ``P`` and y-loadings ``C``
    (columns per extracted component). Extraction stops early when the
    deflated ``Z`` has no covariance left with ``Yc``.
    """
    Z = Z.copy()
    Yc = Yc.copy()
    W, P, C = [], [], []
    for _ in range(n_components):
        col = int(np.argmax(np.sum(Yc ** 2, axis=0)))
        u = Yc[:, col].copy()
        t_old = None
        w = None
        for _ in range(max_iter):
            w = Z.T @ u
            norm = np.linalg.norm(w)
            if norm <= 1e-12:
                w = None
                break
            w /= norm
            t = Z @ w
            tt = t @ t
            c = Yc.T @ t / tt
            u = Yc @ c / (c @ c)
            if t_old is not None and np.linalg.norm(t - t_old) <= tol * max(np.linalg.norm(t), 1.0):
                break
            t_old = t
        if w is None:
            break
        t = Z @ w
        tt = t @ t
        if tt <= 1e-24:
            break
        p = Z.T @ t / tt
        c = Yc.T @ t / tt
        Z -= np.outer(t, p)
        Yc -= np.outer(t, c)
        W.append(w)
        P.append(p)
        C.append(c)
    if not W:
        return None
    return np.column_stack(W), np.column_stack(P), np.column_stack(C)


def fit_pls(X, Y, n_components, spec=None):
    X, Y = _check_xy(X, Y)
    _check_components(X, n_components)
    x_mean, x_scale, constant = standardize(X)
    Z = (X - x_mean) / x_scale
    Z[:, constant] = 0.0
    y_mean = Y.mean(axis=0)
    fitted = nipals_pls(Z, Y - y_mean, n_components)
    if fitted is None:
        return _intercept_only(Y, spec, X.shape[1], "PLS")
    W, P, C = fitted
    B = W @ np.linalg.solve(P.T @ W, C.T)
    return _back_transform(B, x_mean, x_scale, y_mean, spec)
