"""Series container, thresholds, tail-balance and Hill estimators, marginal transforms."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DataError, DegenerateSampleError, NoExceedanceError, NumericError

SeriesKind = Literal["raw", "log_return", "rank_transformed"]

__all__ = [
    "TimeSeries",
    "Threshold",
    "TailIndexEstimate",
    "TailBalanceEstimate",
    "threshold_from_quantile",
    "threshold_at_order_statistic",
    "estimate_p",
    "hill_alpha",
    "rank_transform",
    "log_returns",
    "read_series_csv",
    "read_prices_csv",
    "write_series_csv",
]


@dataclass(frozen=True)
class TimeSeries:
    """An ordered, finite, read-only sequence of observations."""

    values: np.ndarray
    kind: SeriesKind = "raw"

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True).ravel()
        if arr.size < 1:
            raise DataError("a time series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at index {bad}")
        if self.kind not in ("raw", "log_return", "rank_transformed"):
            raise ValueError(f"unknown series kind {self.kind!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def reversed(self) -> "TimeSeries":
        return TimeSeries(self.values[::-1], self.kind)

    def scaled(self, c: float) -> "TimeSeries":
        return TimeSeries(c * self.values, self.kind)


@dataclass(frozen=True)
class Threshold:
    level: float
    quantile_used: float | None = None

    def __post_init__(self) -> None:
        if not (self.level > 0 and math.isfinite(self.level)):
            raise DegenerateSampleError(f"threshold must be positive and finite, got {self.level}")


@dataclass(frozen=True)
class TailIndexEstimate:
    alpha: float
    n_exceedances: int


@dataclass(frozen=True)
class TailBalanceEstimate:
    p: float
    n_pos: int
    n_neg: int

    @property
    def n_exceedances(self) -> int:
        return self.n_pos + self.n_neg


def _as_array(series: TimeSeries | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=float)


def _level(u: Threshold | float) -> float:
    return u.level if isinstance(u, Threshold) else float(u)


def threshold_from_quantile(series: TimeSeries | np.ndarray, q: float) -> Threshold:
    """Lower empirical ``q``-quantile of ``|X|``: the ceil(q*n)-th smallest value.

    With no ties at the returned level exactly ``n - ceil(q*n)`` observations
    exceed it strictly (50 for n = 2000, q = 0.975).
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    absx = np.sort(np.abs(_as_array(series)))
    n = absx.size
    if absx[0] == absx[-1]:
        raise DegenerateSampleError("all absolute values are equal")
    # round() guards against q*n landing a hair above an integer
    k = max(1, math.ceil(round(q * n, 9)))
    return Threshold(float(absx[k - 1]), q)


def threshold_at_order_statistic(series: TimeSeries | np.ndarray, k: int) -> Threshold:
    """Threshold at the k-th smallest ``|X|`` (1-based), no quantile recorded.

    Used to carry an exceedance set across a monotone transform of ``|X|``.
    """
    absx = np.sort(np.abs(_as_array(series)))
    if not 1 <= k <= absx.size:
        raise ValueError(f"order statistic index {k} outside 1..{absx.size}")
    return Threshold(float(absx[k - 1]))


def estimate_p(series: TimeSeries | np.ndarray, u: Threshold | float) -> TailBalanceEstimate:
    """Fraction of positive observations among those with ``|X_i| > u``."""
    x = _as_array(series)
    lev = _level(u)
    n_pos = int(np.count_nonzero(x > lev))
    n_neg = int(np.count_nonzero(x < -lev))
    if n_pos + n_neg == 0:
        raise NoExceedanceError(f"no |X_i| exceeds u = {lev}")
    return TailBalanceEstimate(n_pos / (n_pos + n_neg), n_pos, n_neg)


def hill_alpha(series: TimeSeries | np.ndarray, u: Threshold | float) -> TailIndexEstimate:
    """Hill-type estimate: exceedance count over the summed log-excesses of ``|X|``."""
    absx = np.abs(_as_array(series))
    lev = _level(u)
    exc = absx[absx > lev]
    if exc.size == 0:
        raise NoExceedanceError(f"no |X_i| exceeds u = {lev}")
    total = float(np.sum(np.log(exc / lev)))
    if total <= 0.0:
        raise NumericError("sum of log-excesses is zero; Hill estimate undefined")
    return TailIndexEstimate(exc.size / total, int(exc.size))


def rank_transform(series: TimeSeries | np.ndarray) -> TimeSeries:
    """Signed rank transform ``sign(X_i) (n+1) / (n+1-R_i)``, ``R_i = #{j : |X_j| <= |X_i|}``.

    The transformed series has unit tail index; tied magnitudes map to the
    same transformed magnitude.
    """
    x = _as_array(series)
    n = x.size
    absx = np.abs(x)
    ranks = np.searchsorted(np.sort(absx), absx, side="right")
    return TimeSeries(np.sign(x) * (n + 1) / (n + 1 - ranks), "rank_transformed")


def log_returns(prices: Iterable[float]) -> TimeSeries:
    p = np.asarray(list(prices) if not isinstance(prices, np.ndarray) else prices, dtype=float)
    if p.size < 2:
        raise ValueError("need at least two prices")
    if not np.all(p > 0):
        raise ValueError(f"non-positive price at index {int(np.flatnonzero(~(p > 0))[0])}")
    return TimeSeries(np.log(p[1:] / p[:-1]), "log_return")


# -- CSV ingestion -----------------------------------------------------------

def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_series_csv(path: str | Path, kind: SeriesKind = "raw") -> TimeSeries:
    """Single numeric column; a non-numeric first row is taken as a header."""
    vals: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#") or not row[0].strip():
                continue
            cell = row[0].strip()
            if not _is_number(cell):
                if not vals and lineno == 1:
                    continue
                raise DataError(f"{path}:{lineno}: not a number: {cell!r}")
            vals.append(float(cell))
    return TimeSeries(np.asarray(vals), kind)


def read_prices_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Two-column ``date,close`` file in file order; dates are kept as opaque strings."""
    dates: list[str] = []
    closes: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected date,close")
            if not _is_number(row[1].strip()):
                if lineno == 1:
                    continue
                raise DataError(f"{path}:{lineno}: not a number: {row[1]!r}")
            dates.append(row[0].strip())
            closes.append(float(row[1]))
    if len(closes) < 2:
        raise DataError(f"{path}: fewer than two prices")
    return dates, np.asarray(closes)


def write_series_csv(path: str | Path, series: TimeSeries | np.ndarray, header: str = "x") -> None:
    x = _as_array(series)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for v in x:
            fh.write(f"{float(v)!r}\n")
