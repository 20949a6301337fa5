import numpy as np

from ..errors import ShapeError


class MultiOutputModel:
    """A fitted regressor mapping q lag values to an H-vector of forecasts."""

    def __init__(self, spec, input_dim, output_dim):
        self.spec = spec
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"expected input with {self.input_dim} columns, got shape {X.shape}")
        if X.shape[0] == 0:
            return np.empty((0, self.output_dim))
        return self._predict(X)

    def _predict(self, X):
        raise NotImplementedError

    def __repr__(self):
        name = self.spec.id if self.spec is not None else "-"
        return f"{type(self).__name__}({name}, q={self.input_dim}, H={self.output_dim})"
