"""Learner specifications, the default pool and the fit/predict entry points."""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ShapeError
from .knn import fit_knn as _fit_knn
from .linear import fit_elastic_net, fit_ridge
from .projection import fit_pcr, fit_pls
from .trees import fit_trees

FAMILIES = ("bagging", "random_forest", "extra_trees", "knn", "lasso", "ridge", "elastic_net",
            "pls", "pcr", "tree")

# family -> {param: (type, default)}; a default of ``...`` marks a required parameter
_SCHEMAS = {
    "bagging": {"trees": (int, ...), "max_depth": (int, None), "min_samples_leaf": (int, 5)},
    "random_forest": {"trees": (int, ...), "max_depth": (int, None), "min_samples_leaf": (int, 5)},
    "extra_trees": {"trees": (int, ...), "max_depth": (int, None), "min_samples_leaf": (int, 5)},
    "tree": {"max_depth": (int, None), "min_samples_leaf": (int, 5)},
    "knn": {"K": (int, ...), "weight": (str, "uniform")},
    "lasso": {"lambda": (float, ...), "tol": (float, 1e-6), "max_sweeps": (int, 1000)},
    "ridge": {"lambda": (float, ...)},
    "elastic_net": {"lambda": (float, 1.0), "alpha": (float, 0.5), "tol": (float, 1e-6),
                    "max_sweeps": (int, 1000)},
    "pls": {"components": (int, ...)},
    "pcr": {"components": (int, ...)},
}


def _coerce(kind, value):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "default")):
        return None
    if kind is int:
        as_float = float(value)
        if as_float != int(as_float):
            raise ConfigError(f"expected an integer, got {value!r}")
        return int(as_float)
    return kind(value)


@dataclass(frozen=True)
class LearnerSpec:
    id: str
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _SCHEMAS:
            raise ConfigError(f"{self.id}: unknown learner family {self.family!r}")
        schema = _SCHEMAS[self.family]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"{self.id}: unknown parameter(s) {sorted(unknown)} for {self.family}")
        params = {}
        for name, (kind, default) in schema.items():
            if name in self.params:
                params[name] = _coerce(kind, self.params[name])
            elif default is ...:
                raise ConfigError(f"{self.id}: missing required parameter {name!r}")
            else:
                params[name] = default
        _validate(self.id, self.family, params)
        object.__setattr__(self, "params", params)

    def __hash__(self):
        return hash((self.id, self.family, tuple(sorted(self.params.items()))))


def _validate(sid, family, p):
    def need(cond, msg):
        if not cond:
            raise ConfigError(f"{sid}: {msg}")

    if family == "knn":
        need(p["K"] >= 1, "K must be >= 1")
        need(p["weight"] in ("uniform", "distance"), "weight must be uniform or distance")
    elif family in ("bagging", "random_forest", "extra_trees", "tree"):
        need(p.get("trees", 1) is not None and p.get("trees", 1) >= 1, "trees must be >= 1")
        need(p["max_depth"] is None or p["max_depth"] >= 1, "max_depth must be >= 1")
        need(p["min_samples_leaf"] >= 1, "min_samples_leaf must be >= 1")
    elif family in ("lasso", "ridge", "elastic_net"):
        need(p["lambda"] >= 0, "lambda must be >= 0")
        if family == "elastic_net":
            need(0.0 <= p["alpha"] <= 1.0, "alpha must lie in [0, 1]")
    elif family in ("pls", "pcr"):
        need(p["components"] >= 1, "components must be >= 1")


def default_pool() -> list[LearnerSpec]:
    """The 39 learners of the experimental setup (projection pursuit excluded)."""
    pool = [LearnerSpec(f"BAGGING_{i}", "bagging", {"trees": t}) for i, t in enumerate((50, 100), 1)]
    forest_grid = [(50, None), (50, 3), (50, 5), (100, None), (100, 3), (100, 5)]
    pool += [LearnerSpec(f"RF_{i}", "random_forest", {"trees": t, "max_depth": d})
             for i, (t, d) in enumerate(forest_grid, 1)]
    pool += [LearnerSpec(f"ET_{i}", "extra_trees", {"trees": t, "max_depth": d})
             for i, (t, d) in enumerate(forest_grid, 1)]
    pool += [LearnerSpec(f"KNN_{i}", "knn", {"K": k, "weight": w})
             for i, (w, k) in enumerate(((w, k) for w in ("uniform", "distance")
                                         for k in (1, 5, 10, 20, 50)), 1)]
    reg = (1.0, 0.75, 0.5, 0.25)
    pool += [LearnerSpec(f"LASSO_{i}", "lasso", {"lambda": r}) for i, r in enumerate(reg, 1)]
    pool += [LearnerSpec(f"RIDGE_{i}", "ridge", {"lambda": r}) for i, r in enumerate(reg, 1)]
    pool.append(LearnerSpec("EN", "elastic_net", {"lambda": 1.0, "alpha": 0.5}))
    pool += [LearnerSpec(f"PLS_{i}", "pls", {"components": c}) for i, c in enumerate((2, 3, 5), 1)]
    pool += [LearnerSpec(f"PCR_{i}", "pcr", {"components": c}) for i, c in enumerate((2, 3, 5), 1)]
    return pool


def parse_pool(text: str) -> list[LearnerSpec]:
    """Parse ``ID family key=value ...`` lines; blank lines and ``#`` comments are skipped."""
    pool = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ConfigError(f"pool line {lineno}: expected 'ID family key=value ...'")
        sid, family, *pairs = tokens
        params = {}
        for pair in pairs:
            if "=" not in pair:
                raise ConfigError(f"pool line {lineno}: bad parameter {pair!r}")
            key, value = pair.split("=", 1)
            params[key] = value
        if sid in seen:
            raise ConfigError(f"pool line {lineno}: duplicate learner id {sid!r}")
        seen.add(sid)
        pool.append(LearnerSpec(sid, family, params))
    if not pool:
        raise ConfigError("pool file defines no learners")
    return pool


def load_pool(path=None) -> list[LearnerSpec]:
    if path is None:
        return default_pool()
    return parse_pool(Path(path).read_text(encoding="utf-8"))


def format_pool(pool) -> str:
    lines = []
    for spec in pool:
        params = " ".join(f"{k}={'default' if v is None else v}" for k, v in spec.params.items())
        lines.append(f"{spec.id} {spec.family} {params}".rstrip())
    return "\n".join(lines) + "\n"


def model_seed(seed: int, spec_id: str) -> int:
    """Per-learner seed: the experiment seed xor a stable hash of the learner id."""
    return (int(seed) ^ zlib.crc32(spec_id.encode("utf-8"))) & 0xFFFFFFFF


def _xy(data, Y=None):
    if Y is None:
        return np.asarray(data.X, dtype=float), np.asarray(data.Y, dtype=float)
    return np.asarray(data, dtype=float), np.asarray(Y, dtype=float)


def fit_linear(spec: LearnerSpec, data, Y=None):
    X, Y = _xy(data, Y)
    p = spec.params
    if spec.family == "ridge":
        return fit_ridge(X, Y, p["lambda"], spec=spec)
    if spec.family == "lasso":
        return fit_elastic_net(X, Y, p["lambda"], 1.0, p["tol"], p["max_sweeps"], spec=spec)
    if spec.family == "elastic_net":
        return fit_elastic_net(X, Y, p["lambda"], p["alpha"], p["tol"], p["max_sweeps"], spec=spec)
    raise ConfigError(f"{spec.id}: {spec.family} is not a linear family")


def fit_knn(spec: LearnerSpec, data, Y=None):
    if spec.family != "knn":
        raise ConfigError(f"{spec.id}: {spec.family} is not knn")
    X, Y = _xy(data, Y)
    return _fit_knn(X, Y, spec.params["K"], spec.params["weight"], spec=spec)


def fit_projection(spec: LearnerSpec, data, Y=None):
    X, Y = _xy(data, Y)
    c = spec.params.get("components")
    if spec.family == "pcr":
        return fit_pcr(X, Y, c, spec=spec)
    if spec.family == "pls":
        return fit_pls(X, Y, c, spec=spec)
    raise ConfigError(f"{spec.id}: {spec.family} is not a projection family")


def fit_tree_family(spec: LearnerSpec, data, Y=None, seed=0):
    X, Y = _xy(data, Y)
    p = spec.params
    return fit_trees(X, Y, spec.family, n_trees=p.get("trees", 1), max_depth=p["max_depth"],
                     min_samples_leaf=p["min_samples_leaf"], seed=model_seed(seed, spec.id),
                     spec=spec)


def fit_learner(spec: LearnerSpec, data, Y=None, seed=0):
    """Fit any pool member on an EmbeddedDataset (or on ``X``, ``Y`` arrays)."""
    if spec.family in ("ridge", "lasso", "elastic_net"):
        return fit_linear(spec, data, Y)
    if spec.family == "knn":
        return fit_knn(spec, data, Y)
    if spec.family in ("pls", "pcr"):
        return fit_projection(spec, data, Y)
    return fit_tree_family(spec, data, Y, seed=seed)


def predict(model, X):
    """Forecast an (m', H) matrix for the (m', q) lag matrix ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D lag matrix, got shape {X.shape}")
    return model.predict(X)
