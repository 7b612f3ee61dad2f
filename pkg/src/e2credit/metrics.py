"""Evaluation statistics: R^2, RMSE, MAPE, MASE, truncated means and
averaged per-group correlations, plus the bucketed comparison tables."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PairedSeries:
    """Actual vs predicted spreads keyed by (firm, date)."""

    firm_ids: tuple[str, ...]
    dates: tuple[str, ...]
    actual: np.ndarray
    predicted: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.firm_ids)
        if not (n == len(self.dates) == self.actual.shape[0] == self.predicted.shape[0]):
            raise ValueError("paired series lengths do not match")
        if n < 1:
            raise ValueError("paired series must have at least one row")
        if not (np.isfinite(self.actual).all() and np.isfinite(self.predicted).all()):
            raise ValueError("paired series values must be finite")

    @property
    def n_rows(self) -> int:
        return self.actual.shape[0]


def r_squared_arrays(actual: np.ndarray, predicted: np.ndarray) -> float:
    """R^2 = 1 - SS_res / SS_tot; errors when the actuals have no variance."""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R^2 undefined: actual values have zero variance")
    ss_res = float(np.sum((actual - predicted) ** 2))
    return 1.0 - ss_res / ss_tot


def r_squared(series: PairedSeries) -> float:
    if series.n_rows < 2:
        raise ValueError("R^2 requires at least two rows")
    return r_squared_arrays(series.actual, series.predicted)


def rmse(series: PairedSeries) -> float:
    err = series.actual - series.predicted
    return float(np.sqrt(np.mean(err * err)))


def mape(series: PairedSeries) -> float:
    if np.any(series.actual == 0.0):
        raise ValueError("MAPE undefined: actual series contains zeros")
    return float(np.mean(np.abs(series.actual - series.predicted) / np.abs(series.actual)))


def mase(series: PairedSeries) -> float:
    """Mean absolute error scaled by the panel's naive forecast error.

    The scale is the per-firm mean absolute one-step (lag-1 by date) change
    of the actual series, averaged over firms with at least two dates. This
    panel adaptation of the usual scaling is a documented convention here;
    firms observed on a single date contribute to the numerator only.
    """
    scale = _naive_scale(series)
    if scale is None:
        raise ValueError("MASE undefined: no firm has two or more dates")
    if scale == 0.0:
        raise ValueError("MASE undefined: naive forecast error is zero")
    return float(np.mean(np.abs(series.actual - series.predicted))) / scale


def _naive_scale(series: PairedSeries) -> float | None:
    by_firm: dict[str, list[tuple[str, float]]] = {}
    for firm, date, actual in zip(series.firm_ids, series.dates, series.actual):
        by_firm.setdefault(firm, []).append((date, float(actual)))
    firm_errors = []
    for rows in by_firm.values():
        if len(rows) < 2:
            continue
        rows.sort(key=lambda item: item[0])
        values = np.array([v for _, v in rows])
        firm_errors.append(float(np.mean(np.abs(np.diff(values)))))
    if not firm_errors:
        return None
    return float(np.mean(firm_errors))


def truncated_mean(values, trim_frac: float) -> float:
    """Mean after dropping floor(trim_frac * n) points from each tail."""
    if not 0.0 <= trim_frac < 0.5:
        raise ValueError(f"trim_frac must be in [0, 0.5), got {trim_frac}")
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("truncated_mean of an empty list")
    k = int(math.floor(trim_frac * arr.size))
    return float(arr[k : arr.size - k].mean())


def avg_correlation(series_by_group: dict) -> float:
    """Mean Pearson correlation across groups of paired vectors.

    Groups with fewer than two points or zero variance on either side are
    skipped with a warning; all groups degenerate is an error.
    """
    correlations = []
    for key, (a, b) in series_by_group.items():
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.size < 2 or np.all(a == a[0]) or np.all(b == b[0]):
            warnings.warn(f"group {key!r} degenerate for correlation, skipped",
                          stacklevel=2)
            continue
        correlations.append(float(np.corrcoef(a, b)[0, 1]))
    if not correlations:
        raise ValueError("no group had a defined correlation")
    return float(np.mean(correlations))


def group_pairs(series: PairedSeries, mode: str) -> dict:
    """Group (actual, predicted) vectors by firm or by date."""
    if mode == "by_firm":
        keys = series.firm_ids
    elif mode == "by_date":
        keys = series.dates
    else:
        raise ValueError(f"mode must be 'by_firm' or 'by_date', got {mode!r}")
    grouped: dict[str, tuple[list[float], list[float]]] = {}
    for key, a, p in zip(keys, series.actual, series.predicted):
        bucket = grouped.setdefault(key, ([], []))
        bucket[0].append(float(a))
        bucket[1].append(float(p))
    return {
        key: (np.array(a), np.array(p)) for key, (a, p) in sorted(grouped.items())
    }


# ---------------------------------------------------------------------------
# Bucketed comparison tables
# ---------------------------------------------------------------------------


def _trim_rows_by_actual(actual: np.ndarray, trim_frac: float) -> np.ndarray:
    """Row indices that survive dropping the extreme trim_frac tails of the
    actual values (stable order among ties)."""
    n = actual.shape[0]
    k = int(math.floor(trim_frac * n))
    if k == 0:
        return np.arange(n, dtype=np.int64)
    order = np.argsort(actual, kind="stable")
    keep = np.sort(order[k : n - k])
    return keep


def accuracy_metrics(
    series: PairedSeries, trim_frac: float = 0.10
) -> dict[str, float | None]:
    """RMSE / MAPE / MASE after trimming rows by the actual value.

    MASE falls back to None (with a warning) when the trimmed rows leave no
    firm with two dates.
    """
    keep = _trim_rows_by_actual(np.asarray(series.actual), trim_frac)
    trimmed = PairedSeries(
        firm_ids=tuple(series.firm_ids[i] for i in keep),
        dates=tuple(series.dates[i] for i in keep),
        actual=series.actual[keep],
        predicted=series.predicted[keep],
    )
    out: dict[str, float | None] = {"rmse": rmse(trimmed), "mape": mape(trimmed)}
    try:
        out["mase"] = mase(trimmed)
    except ValueError as exc:
        warnings.warn(f"MASE unavailable: {exc}", stacklevel=2)
        out["mase"] = None
    return out


def bucket_comparison(
    bucket_keys,
    firm_ids,
    dates,
    actual: np.ndarray,
    models: dict[str, np.ndarray],
    trim_frac: float = 0.10,
) -> list[dict]:
    """One table row per bucket: observation count, median and truncated mean
    of the actual and of each model, and trimmed accuracy metrics per model.

    Buckets too small to trim (fewer than ceil(1/trim_frac) rows) are skipped
    with a warning.
    """
    rows = []
    buckets = sorted(set(bucket_keys))
    keys = np.asarray(bucket_keys)
    min_rows = math.ceil(1.0 / trim_frac) if trim_frac > 0 else 1
    for bucket in buckets:
        idx = np.nonzero(keys == bucket)[0]
        if idx.size < min_rows:
            warnings.warn(
                f"bucket {bucket!r} has {idx.size} rows (< {min_rows}), skipped",
                stacklevel=2,
            )
            continue
        row: dict = {"bucket": bucket, "obs": int(idx.size)}
        row["median_actual"] = float(np.median(actual[idx]))
        row["tmean_actual"] = truncated_mean(actual[idx], trim_frac)
        for name, values in models.items():
            row[f"median_{name}"] = float(np.median(values[idx]))
            row[f"tmean_{name}"] = truncated_mean(values[idx], trim_frac)
            sub = PairedSeries(
                firm_ids=tuple(firm_ids[i] for i in idx),
                dates=tuple(dates[i] for i in idx),
                actual=actual[idx],
                predicted=values[idx],
            )
            metrics = accuracy_metrics(sub, trim_frac)
            row[f"rmse_{name}"] = metrics["rmse"]
            row[f"mape_{name}"] = metrics["mape"]
            row[f"mase_{name}"] = metrics["mase"]
        rows.append(row)
    return rows
