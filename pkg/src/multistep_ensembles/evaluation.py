"""Monte Carlo cross-validation folds and the rank / percentage-difference analyses."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import CompletenessError, InsufficientLengthError, UndefinedBaselineError

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["series_id", "fold", "method", "horizon", "mae"]
ALL_HORIZONS = 0  # horizon key of the aggregate (all-horizon) MAE record
BASELINE = "Simple"
DRAW_BAND = 1.0


@dataclass(frozen=True)
class FoldSpec:
    train_start: int
    train_end: int
    test_start: int
    test_end: int

    @property
    def train_len(self):
        return self.train_end - self.train_start

    @property
    def test_len(self):
        return self.test_end - self.test_start


def mccv_folds(n, folds=10, train_frac=0.6, test_frac=0.1, seed=0, min_train=1, min_test=1):
    """Monte Carlo cross-validation: random contiguous train+test windows.

    Each fold has ``floor(train_frac * n)`` training and ``floor(test_frac * n)``
    test observations, the test window directly after the training window.
    Start offsets are drawn without replacement from ``0..n - train - test``
    (with replacement, and a warning, when that range holds fewer than
    ``folds`` offsets). Folds come back sorted by start.
    """
    if folds < 1:
        raise ValueError("folds must be >= 1")
    train_len = int(math.floor(train_frac * n))
    test_len = int(math.floor(test_frac * n))
    span = n - train_len - test_len
    if train_len < max(min_train, 1) or test_len < max(min_test, 1) or span < 0:
        need = max(math.ceil(max(min_train, 1) / train_frac), math.ceil(max(min_test, 1) / test_frac))
        raise InsufficientLengthError(
            f"series of length {n} is too short for a {train_frac:.0%}/{test_frac:.0%} fold "
            f"(needs at least {need})", required=need, actual=n)
    rng = np.random.default_rng(seed)
    n_offsets = span + 1
    if n_offsets >= folds:
        starts = rng.choice(n_offsets, size=folds, replace=False)
    else:
        warnings.warn(f"only {n_offsets} distinct fold offsets for {folds} folds; folds will repeat",
                      UserWarning, stacklevel=2)
        starts = rng.integers(0, n_offsets, size=folds)
    return [FoldSpec(int(s), int(s) + train_len, int(s) + train_len, int(s) + train_len + test_len)
            for s in np.sort(starts)]


def mae(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("MAE of an empty error list")
    return float(np.mean(np.abs(errors)))


def percentage_difference(mae_m, mae_simple) -> float:
    if mae_simple == 0:
        raise UndefinedBaselineError("baseline MAE is zero; percentage difference undefined")
    # ratio form: exact for equal inputs and keeps 0.99 / 1.01 on the draw boundary
    return 100.0 * (mae_m / mae_simple) - 100.0


def outcome(pd_value, band=DRAW_BAND):
    if pd_value < -band:
        return "win"
    if pd_value > band:
        return "loss"
    return "draw"


def win_draw_loss(pds, band=DRAW_BAND):
    """Proportions of wins (< -1%), draws ([-1%, 1%]) and losses (> 1%)."""
    pds = np.asarray(pds, dtype=float)
    if pds.size == 0:
        raise ValueError("no percentage differences given")
    n = pds.size
    win = int(np.count_nonzero(pds < -band))
    loss = int(np.count_nonzero(pds > band))
    return win / n, (n - win - loss) / n, loss / n


# -- metric tables -------------------------------------------------------------

def metric_records(series_id, fold, result):
    """MAE records for one (series, fold) from an EvaluationResult, aggregate row first."""
    rows = []
    for method, err in result.errors.items():
        rows.append((series_id, fold, method, ALL_HORIZONS, float(err.mean())))
        for h, value in enumerate(err.mean(axis=0), 1):
            rows.append((series_id, fold, method, h, float(value)))
    return rows


def metric_table(records) -> pd.DataFrame:
    table = pd.DataFrame(list(records), columns=METRIC_COLUMNS)
    table["series_id"] = table["series_id"].astype(str)
    table["fold"] = table["fold"].astype(int)
    table["horizon"] = table["horizon"].astype(int)
    if table.duplicated(subset=METRIC_COLUMNS[:4]).any():
        raise CompletenessError("metric table holds duplicate (series, fold, method, horizon) keys")
    return table.sort_values(METRIC_COLUMNS[:4], kind="stable").reset_index(drop=True)


def write_metrics(table: pd.DataFrame, path):
    out = table.copy()
    out["horizon"] = out["horizon"].map(lambda h: "all" if h == ALL_HORIZONS else str(h))
    out.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")


def read_metrics(path) -> pd.DataFrame:
    table = pd.read_csv(path, dtype={"series_id": str, "method": str, "horizon": str},
                        float_precision="round_trip")
    missing = [c for c in METRIC_COLUMNS if c not in table.columns]
    if missing:
        raise CompletenessError(f"{path}: missing column(s) {missing}")
    table["horizon"] = table["horizon"].map(lambda h: ALL_HORIZONS if h == "all" else int(h))
    return metric_table(table[METRIC_COLUMNS].itertuples(index=False, name=None))


def _wide(table, horizon=ALL_HORIZONS, scope="series_fold"):
    """(unit x method) MAE matrix; ``scope="series"`` averages folds first."""
    sub = table[table["horizon"] == horizon]
    if scope == "series_fold":
        wide = sub.pivot(index=["series_id", "fold"], columns="method", values="mae")
    elif scope == "series":
        wide = sub.groupby(["series_id", "method"])["mae"].mean().unstack("method")
        counts = sub.groupby(["series_id", "method"]).size().unstack("method")
        if counts.nunique(axis=1).gt(1).any():
            raise CompletenessError("methods were evaluated on different numbers of folds")
    else:
        raise ValueError(f"unknown rank scope {scope!r}")
    if wide.isna().any().any():
        raise CompletenessError("some methods are missing for some (series, fold) units")
    return wide


def rank_table(table, scope="series_fold", horizon=ALL_HORIZONS) -> pd.DataFrame:
    """Fractional ranks (1 = lowest MAE, ties averaged) per comparison unit."""
    return _wide(table, horizon, scope).rank(axis=1, method="average")


def average_rank(table, scope="series_fold", horizon=ALL_HORIZONS) -> pd.DataFrame:
    """Mean and (population) standard deviation of each method's rank, best first."""
    ranks = rank_table(table, scope, horizon)
    out = pd.DataFrame({"mean_rank": ranks.mean(axis=0), "std_rank": ranks.std(axis=0, ddof=0)})
    out.index.name = "method"
    return out.sort_values(["mean_rank"], kind="stable").reset_index()


def pairwise_vs_baseline(table, baseline=BASELINE, horizon=ALL_HORIZONS, band=DRAW_BAND):
    """Per-unit percentage difference of every method against ``baseline``.

    Units where the baseline MAE is zero are left out; their number is
    returned alongside the table.
    """
    wide = _wide(table, horizon)
    if baseline not in wide.columns:
        raise CompletenessError(f"baseline method {baseline!r} missing from the metric table")
    base = wide[baseline]
    valid = base != 0
    excluded = int((~valid).sum())
    if excluded:
        logger.warning("%d unit(s) with zero %s MAE excluded from percentage differences",
                       excluded, baseline)
    rows = []
    for (series_id, fold), row in wide[valid].iterrows():
        for method, value in row.items():
            if method == baseline:
                continue
            pd_value = percentage_difference(value, base[(series_id, fold)])
            rows.append((series_id, fold, method, pd_value, outcome(pd_value, band)))
    pairs = pd.DataFrame(rows, columns=["series_id", "fold", "method", "pct_diff", "outcome"])
    return pairs, excluded


def pairwise_summary(pairs: pd.DataFrame, band=DRAW_BAND) -> pd.DataFrame:
    rows = []
    for method, group in pairs.groupby("method", sort=True):
        win, draw, loss = win_draw_loss(group["pct_diff"], band)
        rows.append((method, len(group), float(group["pct_diff"].median()), win, draw, loss))
    out = pd.DataFrame(rows, columns=["method", "n", "median_pct_diff", "win", "draw", "loss"])
    return out.sort_values("median_pct_diff", kind="stable").reset_index(drop=True)


def per_horizon_breakdown(table, baseline=BASELINE) -> pd.DataFrame:
    """Median percentage difference against the baseline, per (method, horizon)."""
    horizons = sorted(h for h in table["horizon"].unique() if h != ALL_HORIZONS)
    rows = []
    for h in horizons:
        wide = _wide(table, h)
        if baseline not in wide.columns:
            raise CompletenessError(f"baseline {baseline!r} missing at horizon {h}")
        base = wide[baseline]
        valid = base != 0
        for method in wide.columns:
            pct = 100.0 * (wide.loc[valid, method] / base[valid]) - 100.0
            rows.append((method, h, float(pct.median()) if len(pct) else float("nan")))
    out = pd.DataFrame(rows, columns=["method", "horizon", "median_pct_diff"])
    return out.sort_values(["method", "horizon"], kind="stable").reset_index(drop=True)


def write_reports(table: pd.DataFrame, out_dir, baseline=BASELINE):
    """Write every analysis next to ``metrics.csv``; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    summaries = []
    for scope in ("series_fold", "series"):
        ranks = average_rank(table, scope)
        ranks.insert(0, "scope", scope)
        summaries.append(ranks)
    paths["summary_ranks"] = out_dir / "summary_ranks.csv"
    pd.concat(summaries, ignore_index=True).to_csv(paths["summary_ranks"], index=False,
                                                   float_format="%.17g")

    paths["ranks"] = out_dir / "ranks.csv"
    rank_table(table).reset_index().to_csv(paths["ranks"], index=False, float_format="%.17g")

    pairs, _ = pairwise_vs_baseline(table, baseline)
    paths["pairwise_vs_simple"] = out_dir / "pairwise_vs_simple.csv"
    pairs.to_csv(paths["pairwise_vs_simple"], index=False, float_format="%.17g")
    paths["pairwise_summary"] = out_dir / "pairwise_summary.csv"
    pairwise_summary(pairs).to_csv(paths["pairwise_summary"], index=False, float_format="%.17g")

    paths["per_horizon"] = out_dir / "per_horizon.csv"
    per_horizon_breakdown(table, baseline).to_csv(paths["per_horizon"], index=False,
                                                  float_format="%.17g")
    return paths
