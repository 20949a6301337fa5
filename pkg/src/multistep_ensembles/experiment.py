"""Batch experiment: series x folds x methods, then every report."""
from __future__ import annotations

import json
import logging
import platform
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .combiner import RULES, STRATEGIES, all_methods, method_name, parse_method
from .ensemble import EnsembleConfig, fit_with_pruning, rolling_evaluate
from .errors import ConfigError, EnsembleError
from .evaluation import (BASELINE, mccv_folds, metric_records, metric_table, write_metrics,
                         write_reports)
from .learners import default_pool, load_pool
from .series import load_catalog

logger = logging.getLogger(__name__)

EVAL_SCALES = ("levels", "diffs")


@dataclass
class RunConfig:
    data: str | None = None
    out: str = "results"
    q: int = 5
    H: int = 18
    keep_fraction: float = 0.75
    inner_fraction: float = 0.70
    pool: str | None = None
    methods: list = field(default_factory=all_methods)
    folds: int = 10
    train_frac: float = 0.6
    test_frac: float = 0.1
    seed: int = 0
    eval_scale: str = "levels"
    feedback: str = "optimistic"
    jobs: int = 1
    window: int = 50
    eta: float | None = None
    alpha: float = 0.1
    p: float = 2.0
    meta_spec: str = "RF_4"

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("method list is empty")
        for name in self.methods:
            parse_method(name)
        if BASELINE not in self.methods:
            self.methods = [BASELINE] + list(self.methods)
        if self.eval_scale not in EVAL_SCALES:
            raise ConfigError(f"eval_scale must be one of {EVAL_SCALES}")
        if self.folds < 1 or self.jobs < 1:
            raise ConfigError("folds and jobs must be >= 1")
        if not (0 < self.train_frac < 1 and 0 < self.test_frac < 1
                and self.train_frac + self.test_frac <= 1):
            raise ConfigError("train/test fractions must be positive and sum to at most 1")

    def ensemble_config(self, seed=None) -> EnsembleConfig:
        pool = load_pool(self.pool)
        candidates = {spec.id: spec for spec in default_pool() + pool}
        if self.meta_spec not in candidates:
            raise ConfigError(f"unknown ADE meta learner {self.meta_spec!r}")
        return EnsembleConfig(q=self.q, H=self.H, keep_fraction=self.keep_fraction,
                              inner_fraction=self.inner_fraction, pool=pool, methods=list(self.methods),
                              feedback=self.feedback, seed=self.seed if seed is None else seed,
                              window=self.window, eta=self.eta, alpha=self.alpha, p=self.p,
                              meta_spec=candidates[self.meta_spec])


# config-file key -> RunConfig field
_KEYS = {
    "data": "data", "out": "out", "q": "q", "H": "H", "horizon": "H",
    "keep_fraction": "keep_fraction", "inner_fraction": "inner_fraction", "pool": "pool",
    "methods": "methods", "folds": "folds", "train_frac": "train_frac", "test_frac": "test_frac",
    "seed": "seed", "eval_scale": "eval_scale", "feedback": "feedback", "jobs": "jobs",
    "lambda": "window", "ewa.eta": "eta", "fs.alpha": "alpha", "mlpol.p": "p",
    "ade.meta_spec": "meta_spec",
}


def _methods_from(rules, strategies):
    rules = [r for r in rules if r != "Simple"]
    for r in rules:
        if r not in RULES:
            raise ConfigError(f"unknown rule {r!r}")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}")
    return [BASELINE] + [method_name(r, s) for r in rules for s in strategies]


def parse_config_text(text) -> dict:
    """Parse the flat ``key = value`` format (``#`` comments) into RunConfig keyword arguments."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return normalize_options(raw)


def normalize_options(raw: dict) -> dict:
    kwargs = {}
    types = {f.name: f.type for f in fields(RunConfig)}
    rules = raw.pop("rule", None)
    strategies = raw.pop("strategy", None)
    for key, value in raw.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        name = _KEYS[key]
        if value is None:
            continue
        if name == "methods":
            if isinstance(value, str):
                value = all_methods() if value.strip() == "all" else [
                    m.strip() for m in value.replace(",", " ").split() if m.strip()]
        elif name == "eta" and str(value).lower() in ("adaptive", "none", ""):
            value = None
        elif "int" in types[name] and not isinstance(value, int):
            value = int(value)
        elif "float" in types[name] and not isinstance(value, float):
            value = float(value)
        kwargs[name] = value
    if rules is not None or strategies is not None:
        split = lambda v, default: default if v is None else [x.strip() for x in v.replace(",", " ").split()]
        kwargs["methods"] = _methods_from(split(rules, [r for r in RULES if r != "Simple"]),
                                          split(strategies, list(STRATEGIES)))
    return kwargs


def load_config(path=None, **overrides) -> RunConfig:
    """Config file values, then non-None ``overrides`` (command-line flags) on top."""
    kwargs = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    kwargs.update(normalize_options({k: v for k, v in overrides.items() if v is not None}))
    return RunConfig(**kwargs)


def derive_seed(*parts) -> int:
    words = [p if isinstance(p, int) else zlib.crc32(str(p).encode("utf-8")) for p in parts]
    return int(np.random.SeedSequence([w & 0xFFFFFFFF for w in words]).generate_state(1)[0])


def min_lengths(cfg: RunConfig):
    """Smallest train and test windows (raw observations) the pipeline can use."""
    q, H, f = cfg.q, cfg.H, cfg.inner_fraction
    n_train = q + 1
    while True:
        n = n_train - 1  # differenced length
        n_inner = int(f * n)
        if n_inner >= q + H + 1 and n - n_inner >= H:
            break
        n_train += 1
    return n_train, H


def run_task(series_id, values, fold_idx, fold, cfg: RunConfig):
    """Evaluate every method on one (series, fold); returns (records, diagnostics)."""
    seg = np.asarray(values, dtype=float)[fold.train_start:fold.test_end]
    diffs = np.diff(seg)
    levels = seg[1:]
    t = fold.train_len - 1  # differenced training length
    q = cfg.q
    ecfg = cfg.ensemble_config(seed=derive_seed(cfg.seed, series_id, fold_idx))
    use_levels = cfg.eval_scale == "levels"
    label = f"series {series_id}, fold {fold_idx}"
    ens = fit_with_pruning(diffs[:t], ecfg, levels=levels[:t] if use_levels else None, label=label)
    test = diffs[t - q:]
    result = rolling_evaluate(ens, test, ecfg, levels=levels[t - q:] if use_levels else None)
    diag = {"kept": ens.member_ids, "discarded": ens.report.discarded,
            "failed_members": ens.report.failed, "ade_fallback": ens.ade_fallback,
            "test_origins": int(result.origins.size)}
    return metric_records(series_id, fold_idx, result), diag


def _run_task_safe(args):
    series_id, values, fold_idx, fold, cfg = args
    try:
        records, diag = run_task(series_id, values, fold_idx, fold, cfg)
        return series_id, fold_idx, records, diag, None
    except EnsembleError as exc:
        return series_id, fold_idx, [], {}, str(exc)


def run_experiment(cfg: RunConfig, catalog=None) -> int:
    """Run the full pipeline and write ``metrics.csv``, the reports and ``run_meta.json``.

    Returns 0 on success, 1 when no series produced results and 2 when the
    data could not be read.
    """
    started = time.time()
    out = Path(cfg.out)
    if catalog is None:
        try:
            catalog = load_catalog(cfg.data)
        except (OSError, EnsembleError) as exc:
            logger.error("cannot read data: %s", exc)
            return 2
    out.mkdir(parents=True, exist_ok=True)
    cfg.ensemble_config()  # fail fast on pool / meta learner problems

    min_train, min_test = min_lengths(cfg)
    skipped, tasks = {}, []
    for ts in catalog:
        try:
            folds = mccv_folds(len(ts), cfg.folds, cfg.train_frac, cfg.test_frac,
                               seed=derive_seed(cfg.seed, ts.id), min_train=min_train,
                               min_test=min_test)
        except EnsembleError as exc:
            skipped[ts.id] = str(exc)
            logger.warning("skipping series %s: %s", ts.id, exc)
            continue
        tasks += [(ts.id, ts.values, i, fold, cfg) for i, fold in enumerate(folds)]

    logger.info("%d series, %d tasks, %d methods", len(catalog), len(tasks), len(cfg.methods))
    results = []
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for i, res in enumerate(pool.map(_run_task_safe, tasks, chunksize=1), 1):
                results.append(res)
                logger.info("task %d/%d done (series %s, fold %d)", i, len(tasks), res[0], res[1])
    else:
        for i, task in enumerate(tasks, 1):
            results.append(_run_task_safe(task))
            logger.info("task %d/%d done (series %s, fold %d)", i, len(tasks), task[0], task[2])

    records, diagnostics, task_errors = [], {}, {}
    for series_id, fold_idx, recs, diag, error in sorted(results, key=lambda r: (r[0], r[1])):
        if error is not None:
            task_errors.setdefault(series_id, {})[fold_idx] = error
            logger.warning("series %s fold %d failed: %s", series_id, fold_idx, error)
            continue
        records += recs
        diagnostics.setdefault(series_id, {})[fold_idx] = diag

    # a series with any failed fold is dropped so every method covers the same units
    for series_id, errs in task_errors.items():
        skipped[series_id] = "; ".join(f"fold {k}: {v}" for k, v in sorted(errs.items()))
    records = [r for r in records if r[0] not in task_errors]

    meta = {
        "package_version": __version__,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": _versions(),
        "n_series": len(catalog),
        "n_series_evaluated": len({r[0] for r in records}),
        "skipped": skipped,
        "diagnostics": diagnostics,
    }
    if records:
        table = metric_table(records)
        write_metrics(table, out / "metrics.csv")
        write_reports(table, out)
    meta["elapsed_seconds"] = round(time.time() - started, 3)
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str),
                                       encoding="utf-8")
    if not records:
        logger.error("every series failed or was skipped")
        return 1
    return 0


def _versions():
    import numba
    import pandas

    return {"python": platform.python_version(), "numpy": np.__version__,
            "pandas": pandas.__version__, "numba": numba.__version__}
