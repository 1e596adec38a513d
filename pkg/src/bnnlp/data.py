"""CSV ingestion and per-column stationarity transforms."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pandas as pd

from .config import DatasetConfig
from .exceptions import DataError


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way ``git hash-object`` does."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _parse_dates(raw: pd.Series) -> pd.PeriodIndex:
    raw = raw.astype(str).str.strip()
    full = pd.to_datetime(raw, format="%Y-%m-%d", errors="coerce")
    month = pd.to_datetime(raw, format="%Y-%m", errors="coerce")
    dates = full.fillna(month)
    bad = dates.isna()
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(f"unparseable date {raw.iloc[i]!r} on data row {i + 1}")
    return pd.PeriodIndex(dates, freq="M")


def apply_transform(series: pd.Series, kind: str) -> pd.Series:
    if kind == "level":
        return series
    if kind == "diff":
        return series.diff()
    if kind == "log_diff_pct":
        if (series.dropna() <= 0).any():
            raise DataError(f"column {series.name!r} has non-positive values; cannot take logs")
        return 100.0 * np.log(series).diff()
    raise DataError(f"unknown transform {kind!r}")


def load_and_transform(cfg: DatasetConfig, columns=None) -> pd.DataFrame:
    """Read ``cfg.csv_path`` and return the transformed monthly panel.

    Rows lost to differencing are dropped, the sample is restricted to
    ``[sample_start, sample_end]`` and any remaining gap is an error.
    """
    path = Path(cfg.csv_path)
    try:
        raw = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if cfg.date_column not in raw.columns:
        raise DataError(f"date column {cfg.date_column!r} not found in {path}")
    columns = list(cfg.variable_order) if columns is None else list(columns)
    missing = [c for c in columns if c not in raw.columns]
    if missing:
        raise DataError(f"columns {missing} not found in {path}")

    index = _parse_dates(raw[cfg.date_column])
    out = {}
    for col in columns:
        values = pd.to_numeric(raw[col], errors="coerce")
        values.index = index
        values.name = col
        kind = cfg.transforms.get(col)
        if kind is None:
            raise DataError(f"no transform configured for column {col!r}")
        out[col] = apply_transform(values, kind)
    panel = pd.DataFrame(out, index=index)
    if any(cfg.transforms[c] != "level" for c in columns):
        panel = panel.iloc[1:]

    start, end = pd.Period(cfg.sample_start, "M"), pd.Period(cfg.sample_end, "M")
    if start > end:
        raise DataError(f"sample_start {start} is after sample_end {end}")
    panel = panel[(panel.index >= start) & (panel.index <= end)]
    if panel.empty:
        raise DataError(f"no observations between {start} and {end}")
    nan = panel.isna().to_numpy()
    if nan.any():
        r, c = np.argwhere(nan)[0]
        raise DataError(f"missing value after transforms at {panel.index[r]} in column {panel.columns[c]!r}")
    return panel
