"""Series ingestion, first differencing and time delay embedding."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import FormatError, InsufficientLengthError, IntegrityError, ParseError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("series_id", "timestamp", "value")


@dataclass(frozen=True)
class TimeSeries:
    id: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise InsufficientLengthError(
                f"series {self.id!r} must hold at least one value", required=1, actual=values.size)
        if not np.all(np.isfinite(values)):
            raise IntegrityError(f"series {self.id!r} contains missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DifferencedSeries:
    parent_id: str
    diffs: np.ndarray
    first_level: float
    last_level: float

    def levels(self) -> np.ndarray:
        """Rebuild the original series from the stored initial level."""
        return np.concatenate([[self.first_level], self.first_level + np.cumsum(self.diffs)])


@dataclass(frozen=True)
class EmbeddedDataset:
    """Auto-regressive rows: ``X[i]`` holds lags most-recent first, ``Y[i]`` the next H values."""

    X: np.ndarray
    Y: np.ndarray
    q: int
    H: int
    origin_index: np.ndarray

    @property
    def m(self) -> int:
        return self.X.shape[0]


@dataclass
class DatasetCatalog:
    series: dict = field(default_factory=dict)
    source_path: str | None = None

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series.values())

    def __getitem__(self, key):
        return self.series[key]

    def add(self, ts: TimeSeries):
        if ts.id in self.series:
            raise IntegrityError(f"duplicate series id {ts.id!r}")
        self.series[ts.id] = ts


def _sort_key(timestamps: pd.Series) -> pd.Series:
    numeric = pd.to_numeric(timestamps, errors="coerce")
    if numeric.notna().all():
        return numeric
    return timestamps


def load_catalog(path, format: str = "long_csv") -> DatasetCatalog:
    """Read a long-format CSV (``series_id,timestamp,value``) into a catalog.

    Timestamps are sorted numerically when every one of them parses as a
    number and lexicographically otherwise.
    """
    if format != "long_csv":
        raise FormatError(f"unsupported input format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")

    values = pd.to_numeric(frame["value"].str.strip(), errors="coerce")
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        pos = int(np.flatnonzero(bad.to_numpy())[0])
        # +2: 1-based rows plus the header line
        raise ParseError(
            f"{path}: row {pos + 2}: value {frame['value'].iloc[pos]!r} is not a finite number",
            row=pos + 2)
    frame = frame.assign(value=values.astype(float))

    dup = frame.duplicated(subset=["series_id", "timestamp"], keep="first")
    if dup.any():
        pos = int(np.flatnonzero(dup.to_numpy())[0])
        row = frame.iloc[pos]
        raise IntegrityError(
            f"{path}: row {pos + 2}: duplicate (series_id, timestamp) = "
            f"({row['series_id']!r}, {row['timestamp']!r})")

    catalog = DatasetCatalog(source_path=str(path))
    for sid, group in frame.groupby("series_id", sort=True):
        order = np.argsort(_sort_key(group["timestamp"]).to_numpy(), kind="stable")
        catalog.add(TimeSeries(str(sid), group["value"].to_numpy()[order]))
    lengths = [len(s) for s in catalog]
    logger.info("loaded %d series from %s (lengths %s..%s)", len(catalog), path,
                min(lengths, default=0), max(lengths, default=0))
    return catalog


def write_long_csv(series, path):
    """Write one or more TimeSeries as long-format CSV with integer timestamps."""
    if isinstance(series, TimeSeries):
        series = [series]
    frames = [pd.DataFrame({"series_id": s.id, "timestamp": np.arange(len(s)), "value": s.values})
              for s in series]
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.17g")


def difference(s) -> DifferencedSeries:
    """First differences of ``s``; the first and last raw levels are kept for inversion."""
    if isinstance(s, TimeSeries):
        sid, values = s.id, s.values
    else:
        sid, values = "", np.asarray(s, dtype=float)
    if values.size < 2:
        raise InsufficientLengthError(
            f"differencing needs at least 2 values, got {values.size}", required=2, actual=values.size)
    return DifferencedSeries(sid, np.diff(values), float(values[0]), float(values[-1]))


def invert_forecast(diff_forecast, level_at_origin) -> np.ndarray:
    """Turn forecast differences into levels by cumulative summation from the origin level.

    Broadcasts over leading axes: the horizon is the last axis of
    ``diff_forecast`` and ``level_at_origin`` matches the remaining ones.
    """
    diff_forecast = np.asarray(diff_forecast, dtype=float)
    level = np.asarray(level_at_origin, dtype=float)
    return level[..., None] + np.cumsum(diff_forecast, axis=-1)


def embed(s, q: int, H: int) -> EmbeddedDataset:
    """Time delay embedding of ``s`` into ``m = n - q - H + 1`` rows."""
    s = np.asarray(s, dtype=float)
    if q < 1 or H < 1:
        raise ValueError("q and H must be positive")
    n = s.size
    if n < q + H:
        raise InsufficientLengthError(
            f"embedding with q={q}, H={H} needs at least {q + H} values, got {n}",
            required=q + H, actual=n)
    windows = np.lib.stride_tricks.sliding_window_view(s, q + H)
    X = windows[:, q - 1::-1].copy()
    Y = windows[:, q:].copy()
    origins = np.arange(q - 1, n - H)
    return EmbeddedDataset(X, Y, q, H, origins)
