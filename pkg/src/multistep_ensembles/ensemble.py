"""Per-(series, fold) pipeline: nested-holdout pruning, refit, and rolling test evaluation."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .combiner import (FEEDBACK_MODES, Combiner, MetaModelSet, ade_fit_meta, all_methods, combine,
                       parse_method, update_with_feedback)
from .errors import ConfigError, EnsembleError, InsufficientLengthError
from .learners import LearnerSpec, default_pool, fit_learner
from .series import embed, invert_forecast

logger = logging.getLogger(__name__)


@dataclass
class EnsembleConfig:
    q: int = 5
    H: int = 18
    keep_fraction: float = 0.75
    inner_fraction: float = 0.70
    pool: list = field(default_factory=default_pool)
    methods: list = field(default_factory=all_methods)
    feedback: str = "optimistic"
    seed: int = 0
    window: int = 50
    eta: float | None = None
    alpha: float = 0.1
    p: float = 2.0
    meta_spec: LearnerSpec | None = None
    ade_min_rows: int = 10

    def __post_init__(self):
        if self.q < 1 or self.H < 1:
            raise ConfigError("q and H must be >= 1")
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ConfigError("keep fraction must lie in (0, 1]")
        if not 0.0 < self.inner_fraction < 1.0:
            raise ConfigError("inner train fraction must lie in (0, 1)")
        if self.feedback not in FEEDBACK_MODES:
            raise ConfigError(f"feedback must be one of {FEEDBACK_MODES}")
        if self.window < 1:
            raise ConfigError("window length must be >= 1")
        if not self.pool:
            raise ConfigError("the learner pool is empty")
        ids = [spec.id for spec in self.pool]
        if len(set(ids)) != len(ids):
            raise ConfigError("learner ids must be unique")
        if not self.methods:
            raise ConfigError("no combination methods configured")
        for name in self.methods:
            parse_method(name)

    @property
    def needs_ade(self):
        return any(name.startswith("ADE_") for name in self.methods)


@dataclass
class PruningReport:
    validation_mae: dict
    kept: list
    discarded: list
    failed: dict = field(default_factory=dict)


@dataclass
class TrainedEnsemble:
    members: list
    member_ids: list
    train_losses: np.ndarray
    report: PruningReport
    meta: MetaModelSet | None = None
    ade_fallback: bool = False

    def __len__(self):
        return len(self.members)


@dataclass
class EvaluationResult:
    """Rolling test outcome: per method, combined forecasts and absolute errors ``(m, H)``."""

    forecasts: dict
    errors: dict
    member_forecasts: np.ndarray
    actuals: np.ndarray
    origins: np.ndarray
    cold_starts: dict

    def mae_per_horizon(self, method):
        return self.errors[method].mean(axis=0)


def keep_count(pool_size, keep_fraction):
    # small tolerance so e.g. 0.75 * 40 is not pushed to 31 by round-off
    return max(1, math.ceil(keep_fraction * pool_size - 1e-9))


def to_eval_scale(predictions, targets, origins, levels):
    """Re-integrate difference forecasts into levels when ``levels`` is given.

    ``levels[t]`` is the raw level at the time of modelling-scale index ``t``.
    """
    if levels is None:
        return predictions, targets
    base = np.asarray(levels, dtype=float)[origins]
    return invert_forecast(predictions, base), invert_forecast(targets, base)


def fit_with_pruning(train, cfg: EnsembleConfig, levels=None, label="") -> TrainedEnsemble:
    """Prune the pool on a chronological inner split, then refit the survivors on all of ``train``.

    The first ``inner_fraction`` of ``train`` fits every pool member; the rest
    (with ``q`` lags of context) scores them by MAE over all horizons. The
    best ``ceil(keep_fraction * |pool|)`` members are refit on the whole
    segment. Their validation errors are the training losses used by
    LossTrain/Best and the meta-training targets for ADE.
    """
    train = np.asarray(train, dtype=float)
    q, H = cfg.q, cfg.H
    n = train.size
    n_inner = int(cfg.inner_fraction * n)
    where = f" ({label})" if label else ""
    # inner fit needs >= 2 embedded rows; validation >= 1 row
    if n_inner < q + H + 1 or n - n_inner < H:
        need = max(math.ceil((q + H + 1) / cfg.inner_fraction), math.ceil(H / (1 - cfg.inner_fraction)))
        raise InsufficientLengthError(
            f"training segment of length {n}{where} too short for nested pruning "
            f"with q={q}, H={H} (needs about {need})", required=need, actual=n)

    inner = embed(train[:n_inner], q, H)
    val = embed(train[n_inner - q:], q, H)
    val_origins = val.origin_index + (n_inner - q)
    full = embed(train, q, H)

    val_preds, ok_specs, failed = [], [], {}
    for spec in cfg.pool:
        try:
            model = fit_learner(spec, inner, seed=cfg.seed)
            pred = model.predict(val.X)
        except EnsembleError as exc:
            failed[spec.id] = str(exc)
            logger.debug("%s: %s failed on the inner split: %s", label, spec.id, exc)
            continue
        if not np.all(np.isfinite(pred)):
            failed[spec.id] = "non-finite validation forecasts"
            continue
        val_preds.append(pred)
        ok_specs.append(spec)
    if not ok_specs:
        raise EnsembleError(f"no pool member could be fit{where}")

    preds, actual = to_eval_scale(np.stack(val_preds), val.Y, val_origins, levels)
    abs_err = np.abs(preds - actual[None])
    per_horizon = abs_err.mean(axis=1)
    mae = per_horizon.mean(axis=1)

    n_keep = min(keep_count(len(cfg.pool), cfg.keep_fraction), len(ok_specs))
    order = sorted(range(len(ok_specs)), key=lambda i: (mae[i], i))
    kept_idx = sorted(order[:n_keep])
    kept_ids = [ok_specs[i].id for i in kept_idx]
    discarded = [ok_specs[i].id for i in sorted(order[n_keep:])] + list(failed)
    report = PruningReport({s.id: float(m) for s, m in zip(ok_specs, mae)}, kept_ids, discarded, failed)

    members = [fit_learner(ok_specs[i], full, seed=cfg.seed) for i in kept_idx]

    meta, fallback = None, False
    if cfg.needs_ade:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            meta = ade_fit_meta(preds[kept_idx], actual, val.X, cfg.meta_spec, seed=cfg.seed,
                                min_rows=cfg.ade_min_rows)
        if meta is None:
            fallback = True
            for w in caught:
                logger.warning("%s%s", w.message, where)
    return TrainedEnsemble(members, kept_ids, per_horizon[kept_idx], report, meta, fallback)


def make_combiner(name, ens: TrainedEnsemble, cfg: EnsembleConfig) -> Combiner:
    rule, strategy = parse_method(name)
    if rule == "ADE" and ens.meta is None:
        rule = "LossTrain"
    return Combiner(rule, strategy, len(ens), cfg.H, window=cfg.window, train_losses=ens.train_losses,
                    meta=ens.meta, eta=cfg.eta, alpha=cfg.alpha, p=cfg.p)


def rolling_evaluate(ens: TrainedEnsemble, test, cfg: EnsembleConfig, levels=None) -> EvaluationResult:
    """Forecast every test origin in order with every configured method.

    ``test`` starts with the ``q`` values preceding the test period. Member
    forecasts are computed once and shared; methods differ only in weights.
    ``levels`` (aligned with ``test``) switches evaluation to re-integrated levels.
    """
    test = np.asarray(test, dtype=float)
    ds = embed(test, cfg.q, cfg.H)
    block = np.stack([member.predict(ds.X) for member in ens.members])
    block, actual = to_eval_scale(block, ds.Y, ds.origin_index, levels)
    m = ds.m
    meta_errors = None
    if ens.meta is not None and any(name.startswith("ADE_") for name in cfg.methods):
        meta_errors = ens.meta.predict(ds.X)

    forecasts, errors, cold = {}, {}, {}
    for name in cfg.methods:
        comb = make_combiner(name, ens, cfg)
        out = np.empty((m, cfg.H))
        for j in range(m):
            update_with_feedback(comb, j, block, actual, cfg.feedback)
            pe = meta_errors[:, j, :] if (comb.rule == "ADE") else None
            out[j] = combine(block[:, j, :], comb.weights(j, predicted_errors=pe))
        forecasts[name] = out
        errors[name] = np.abs(out - actual)
        cold[name] = comb.cold_starts
    return EvaluationResult(forecasts, errors, block, actual, ds.origin_index, cold)
