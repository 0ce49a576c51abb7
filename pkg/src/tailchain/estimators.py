"""Forward, backward and mixture estimators of the tail-chain increment cdfs.

All estimators work on the ratios of consecutive observations at times where
the series is beyond the threshold.  ``A1`` conditions on positive extremes,
``B1`` on negative ones.  The ``*_rev`` targets are the same estimators run on
the time-reversed series, i.e. estimates of the laws of ``A_{-1}``/``B_{-1}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .core import (
    Threshold,
    TimeSeries,
    hill_alpha,
    rank_transform,
    threshold_from_quantile,
)
from .errors import NoExceedanceError

Target = Literal["A1", "B1", "A1_rev", "B1_rev"]
EstimatorName = Literal["forward", "backward", "mixture", "monotonized_mixture"]
AlphaMode = Literal["known", "plugin", "rank"]

_SIGN = {"A1": 1.0, "B1": -1.0}


def default_grid(lo: float = -3.0, hi: float = 3.0, num: int = 201) -> np.ndarray:
    """Equispaced grid on [lo, hi] plus the points -1, 0, 1."""
    g = np.round(np.linspace(lo, hi, num), 10) + 0.0
    g = np.union1d(g, [-1.0, 0.0, 1.0])
    return g[(g >= lo) & (g <= hi)]


def mixture_weight(x):
    """lambda(x) = max(1 - |x|, 0)."""
    return np.maximum(1.0 - np.abs(np.asarray(x, dtype=float)), 0.0)


@dataclass(frozen=True)
class CdfEstimate:
    grid: np.ndarray
    values: np.ndarray
    estimator: EstimatorName
    target: Target
    alpha_mode: AlphaMode
    alpha: float
    threshold: Threshold
    n_exceedances: int

    def __post_init__(self) -> None:
        g = np.array(self.grid, dtype=float, copy=True)
        v = np.array(self.values, dtype=float, copy=True)
        if g.shape != v.shape or g.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def meta(self) -> dict[str, str]:
        return {
            "estimator": self.estimator,
            "target": self.target,
            "alpha_mode": self.alpha_mode,
            "alpha": repr(float(self.alpha)),
            "u": repr(float(self.threshold.level)),
            "n_exceedances": str(self.n_exceedances),
        }

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            for k, v in self.meta().items():
                fh.write(f"# {k}={v}\n")
            fh.write("x,value\n")
            for x, y in zip(self.grid, self.values):
                fh.write(f"{float(x)!r},{float(y)!r}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "CdfEstimate":
        meta: dict[str, str] = {}
        xs, ys = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    meta[k.strip()] = v.strip()
                elif line == "x,value":
                    continue
                else:
                    a, b = line.split(",")
                    xs.append(float(a))
                    ys.append(float(b))
        return cls(
            np.asarray(xs),
            np.asarray(ys),
            meta["estimator"],  # type: ignore[arg-type]
            meta["target"],  # type: ignore[arg-type]
            meta["alpha_mode"],  # type: ignore[arg-type]
            float(meta["alpha"]),
            Threshold(float(meta["u"])),
            int(meta["n_exceedances"]),
        )


def _prepare(series, u, target, grid):
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    if x.size < 2:
        raise ValueError("ratio estimators need at least two observations")
    if target not in _SIGN:
        raise ValueError(f"target must be 'A1' or 'B1', got {target!r}")
    lev = u.level if isinstance(u, Threshold) else float(u)
    thr = u if isinstance(u, Threshold) else Threshold(lev)
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    return x, lev, thr, g, _SIGN[target]


def forward_cdf(series, u, target: str = "A1", grid=None, alpha_mode: AlphaMode = "known",
                alpha: float = float("nan")) -> CdfEstimate:
    """Empirical cdf of ``X_{i+1}/X_i`` over times ``i <= n-1`` with ``s X_i > u``.

    ``s`` is +1 for A1 and -1 for B1.  Right-continuous step function.
    """
    x, lev, thr, g, s = _prepare(series, u, target, grid)
    cond = s * x[:-1] > lev
    k = int(np.count_nonzero(cond))
    if k == 0:
        side = "positive" if s > 0 else "negative"
        raise NoExceedanceError(f"no {side} exceedance of u = {lev} among X_1..X_(n-1)")
    ratios = np.sort(x[1:][cond] / x[:-1][cond])
    values = np.searchsorted(ratios, g, side="right") / k
    return CdfEstimate(g, values, "forward", target, alpha_mode, alpha, thr, k)  # type: ignore[arg-type]


def _backward_values(x: np.ndarray, lev: float, alpha: float, s: float, g: np.ndarray):
    prev, cur = x[:-1], x[1:]
    same = s * cur > lev
    other = s * cur < -lev
    k = int(np.count_nonzero(same))
    if k == 0:
        side = "positive" if s > 0 else "negative"
        raise NoExceedanceError(f"no {side} exceedance of u = {lev} among X_2..X_n")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = cur / prev  # X_i / X_{i-1}; +-inf when X_{i-1} = 0
    out = np.empty_like(g)

    pos = g >= 0
    if np.any(pos):
        base = prev[same] / cur[same]
        w = np.where(base > 0, np.abs(base), 0.0) ** alpha
        hit = ratio[same][:, None] > g[pos][None, :]
        out[pos] = 1.0 - np.where(hit, w[:, None], 0.0).sum(axis=0) / k
    neg = ~pos
    if np.any(neg):
        base = -prev[other] / cur[other]
        w = np.where(base > 0, np.abs(base), 0.0) ** alpha
        hit = ratio[other][:, None] <= g[neg][None, :]
        out[neg] = np.where(hit, w[:, None], 0.0).sum(axis=0) / k
    return out, k


def backward_cdf(series, u, alpha: float, target: str = "A1", grid=None,
                 alpha_mode: AlphaMode = "known") -> CdfEstimate:
    """Backward estimator built from ``X_{i-1}/X_i`` with weights ``|X_{i-1}/X_i|**alpha``.

    For A1 and ``x >= 0`` this is ``1 - sum (X_{i-1}/X_i)^a 1(X_i/X_{i-1} > x, X_i > u) / #{X_i > u}``;
    for ``x < 0`` the sum runs over negative extremes with weight
    ``(-X_{i-1}/X_i)^a`` and indicator ``X_i/X_{i-1} <= x``, still divided by
    the number of positive extremes.  B1 swaps the roles of the signs.  Sums
    run over i = 2..n.  Values are not clamped and need not be monotone.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x, lev, thr, g, s = _prepare(series, u, target, grid)
    values, k = _backward_values(x, lev, float(alpha), s, g)
    return CdfEstimate(g, values, "backward", target, alpha_mode, float(alpha), thr, k)  # type: ignore[arg-type]


def mixture_cdf(forward: CdfEstimate, backward: CdfEstimate) -> CdfEstimate:
    if forward.grid.shape != backward.grid.shape or np.any(forward.grid != backward.grid):
        raise ValueError("forward and backward estimates are on different grids")
    if forward.target != backward.target:
        raise ValueError("forward and backward estimates have different targets")
    if forward.threshold.level != backward.threshold.level:
        raise ValueError("forward and backward estimates use different thresholds")
    lam = mixture_weight(forward.grid)
    values = lam * forward.values + (1.0 - lam) * backward.values
    return replace(backward, values=values, estimator="mixture")


def monotonize(est: CdfEstimate, anchor_zero: bool = False) -> CdfEstimate:
    """Smallest nondecreasing majorant on x >= 0, largest nondecreasing minorant on x < 0.

    The result is clamped to [0, 1].  When the two halves do not join up
    monotonically at zero a warning is issued and the values are left as is.
    With ``anchor_zero`` the minorant on x < 0 is also kept below the value
    at the first nonnegative grid point, which makes the glued curve a cdf
    and changes nothing when the halves already join up.
    """
    g, v = est.grid, est.values
    out = np.empty_like(v)
    pos = g >= 0
    if np.any(pos):
        out[pos] = np.maximum.accumulate(v[pos])
    neg = ~pos
    if np.any(neg):
        out[neg] = np.minimum.accumulate(v[neg][::-1])[::-1]
        if anchor_zero and np.any(pos):
            out[neg] = np.minimum(out[neg], out[pos][0])
    out = np.clip(out, 0.0, 1.0)
    if np.any(np.diff(out) < 0):
        warnings.warn(
            f"monotonized {est.target} estimate decreases across x = 0", RuntimeWarning, stacklevel=2
        )
    return replace(est, values=out, estimator="monotonized_mixture")


def _rev_target(target: str) -> str:
    return target if target.endswith("_rev") else f"{target}_rev"


def estimate_cdf(
    series: TimeSeries,
    u: Threshold | float,
    target: str = "A1",
    estimator: EstimatorName = "mixture",
    alpha: float | None = None,
    grid=None,
    alpha_mode: AlphaMode = "known",
) -> CdfEstimate:
    """Run one named estimator with a given threshold and tail index.

    ``target`` may carry the ``_rev`` suffix, in which case the series is
    reversed first.
    """
    reverse = target.endswith("_rev")
    base = target[:-4] if reverse else target
    if reverse:
        series = series.reversed() if isinstance(series, TimeSeries) else TimeSeries(np.asarray(series)[::-1])
    if estimator == "forward":
        est = forward_cdf(series, u, base, grid, alpha_mode, float("nan") if alpha is None else alpha)
    else:
        if alpha is None:
            raise ValueError(f"the {estimator} estimator needs alpha")
        b = backward_cdf(series, u, alpha, base, grid, alpha_mode)
        if estimator == "backward":
            est = b
        else:
            f = forward_cdf(series, u, base, b.grid, alpha_mode, alpha)
            est = mixture_cdf(f, b)
            if estimator == "monotonized_mixture":
                est = monotonize(est)
            elif estimator != "mixture":
                raise ValueError(f"unknown estimator {estimator!r}")
    if reverse:
        est = replace(est, target=_rev_target(base))
    return est


def estimate_reversed(series: TimeSeries, u, target: str = "A1", estimator: EstimatorName = "mixture",
                      alpha: float | None = None, grid=None, alpha_mode: AlphaMode = "known") -> CdfEstimate:
    """Estimate the law of ``A_{-1}`` (or ``B_{-1}``) from the reversed series."""
    return estimate_cdf(series, u, _rev_target(target), estimator, alpha, grid, alpha_mode)


def estimate_from_quantile(
    series: TimeSeries,
    q: float,
    target: str = "A1",
    estimator: EstimatorName = "mixture",
    alpha_mode: AlphaMode = "rank",
    alpha: float | None = None,
    grid=None,
) -> CdfEstimate:
    """Threshold at the ``q`` quantile of ``|X|`` and resolve alpha by mode.

    ``plugin`` uses the Hill estimate at the same threshold, ``rank``
    rank-transforms the series and sets alpha = 1 (so the target becomes the
    starred increment), ``known`` requires ``alpha``.
    """
    if alpha_mode == "rank":
        series = rank_transform(series)
        alpha = 1.0
    u = threshold_from_quantile(series, q)
    if alpha_mode == "plugin":
        alpha = hill_alpha(series, u).alpha
    elif alpha_mode == "known" and alpha is None and estimator != "forward":
        raise ValueError("alpha_mode 'known' needs an explicit alpha")
    return estimate_cdf(series, u, target, estimator, alpha, grid, alpha_mode)
