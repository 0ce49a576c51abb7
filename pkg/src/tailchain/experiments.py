"""Monte Carlo study harness and the log-return case-study pipeline."""

from __future__ import annotations

import datetime as _dt
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Sequence, Union

import numpy as np

from .core import (
    estimate_p,
    hill_alpha,
    log_returns,
    rank_transform,
    read_prices_csv,
    threshold_from_quantile,
)
from .errors import InsufficientDataError, NoExceedanceError
from .estimators import (
    CdfEstimate,
    backward_cdf,
    default_grid,
    estimate_cdf,
    forward_cdf,
    mixture_cdf,
    monotonize,
)
from .models import (
    SREConfig,
    TCopulaMarkovConfig,
    simulate_sre_batch,
    simulate_tcopula_batch,
    true_cdf_A1_tcopula,
    true_cdf_B1_tcopula,
)

Model = Union[TCopulaMarkovConfig, SREConfig]
ESTIMATORS = ("forward", "backward", "mixture")
TARGETS = ("A1", "B1")


def replication_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed of replication ``index``: the ``index``-th child of ``master_seed``.

    Equivalent to ``SeedSequence(master_seed).spawn(index + 1)[index]`` and
    independent of how replications are split across runs.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def study_grid() -> np.ndarray:
    """[-3, 3] in steps of 0.03."""
    return default_grid(-3.0, 3.0, 201)


@dataclass(frozen=True)
class MCStudyConfig:
    model: Model
    n: int = 2000
    reps: int = 1000
    q: float = 0.975
    grid: np.ndarray = field(default_factory=study_grid)
    alpha_mode: Literal["plugin", "rank"] = "plugin"
    master_seed: int = 0
    first_replication: int = 0
    chunk: int = 250

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be nonempty and strictly increasing")
        if self.alpha_mode not in ("plugin", "rank"):
            raise ValueError(f"alpha_mode must be 'plugin' or 'rank', got {self.alpha_mode!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        object.__setattr__(self, "grid", g)

    @property
    def model_name(self) -> str:
        return "tcopula" if isinstance(self.model, TCopulaMarkovConfig) else "sre"

    @property
    def true_alpha(self) -> float:
        return self.model.alpha if isinstance(self.model, TCopulaMarkovConfig) else self.model.alpha_true

    @property
    def true_p(self) -> float:
        return 0.5

    def seeds(self) -> list[np.random.SeedSequence]:
        return [replication_seed(self.master_seed, self.first_replication + r) for r in range(self.reps)]


def true_increment_cdf(model: Model, target: str) -> Callable:
    if isinstance(model, TCopulaMarkovConfig):
        return true_cdf_A1_tcopula(model) if target == "A1" else true_cdf_B1_tcopula(model)
    return model.c_law.cdf


def starred(cdf: Callable, alpha: float) -> Callable:
    """Cdf of ``sign(A)|A|^alpha`` from the cdf of ``A``."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return cdf(np.sign(x) * np.abs(x) ** (1.0 / alpha))

    return f


def truth_on_grid(cfg: MCStudyConfig, target: str) -> np.ndarray:
    cdf = true_increment_cdf(cfg.model, target)
    if cfg.alpha_mode == "rank":
        cdf = starred(cdf, cfg.true_alpha)
    return np.asarray(cdf(cfg.grid), dtype=float)


@dataclass
class MCReplications:
    """Raw per-replication output; rows follow replication index order."""

    config: MCStudyConfig
    p_hat: np.ndarray
    alpha_hat: np.ndarray
    estimates: dict[str, dict[str, np.ndarray]]

    @classmethod
    def concat(cls, first: "MCReplications", second: "MCReplications") -> "MCReplications":
        if second.config.first_replication != first.config.first_replication + first.config.reps:
            raise ValueError("replication ranges are not adjacent")
        cfg = MCStudyConfig(first.config.model, first.config.n, first.config.reps + second.config.reps,
                            first.config.q, first.config.grid, first.config.alpha_mode,
                            first.config.master_seed, first.config.first_replication, first.config.chunk)
        est = {t: {e: np.vstack([first.estimates[t][e], second.estimates[t][e]]) for e in ESTIMATORS}
               for t in TARGETS}
        return cls(cfg, np.concatenate([first.p_hat, second.p_hat]),
                   np.concatenate([first.alpha_hat, second.alpha_hat]), est)


def _simulate(cfg: MCStudyConfig, seeds) -> np.ndarray:
    if isinstance(cfg.model, TCopulaMarkovConfig):
        return simulate_tcopula_batch(cfg.model, cfg.n, seeds)
    return simulate_sre_batch(cfg.model, cfg.n, seeds)


def _one_replication(x: np.ndarray, cfg: MCStudyConfig):
    u = threshold_from_quantile(x, cfg.q)
    p_hat = estimate_p(x, u).p
    a_hat = hill_alpha(x, u).alpha
    if cfg.alpha_mode == "rank":
        series = rank_transform(x).values
        u_est = threshold_from_quantile(series, cfg.q)
        alpha = 1.0
    else:
        series, u_est, alpha = x, u, a_hat
    out = {}
    for target in TARGETS:
        row = {}
        try:
            f = forward_cdf(series, u_est, target, cfg.grid, cfg.alpha_mode, alpha)
            row["forward"] = f.values
        except NoExceedanceError:
            f = None
            row["forward"] = None
        try:
            b = backward_cdf(series, u_est, alpha, target, cfg.grid, cfg.alpha_mode)
            row["backward"] = b.values
        except NoExceedanceError:
            b = None
            row["backward"] = None
        row["mixture"] = mixture_cdf(f, b).values if f is not None and b is not None else None
        out[target] = row
    return p_hat, a_hat, out


def run_replications(cfg: MCStudyConfig, progress: Callable[[int], None] | None = None) -> MCReplications:
    """Simulate and estimate every replication; failed cells are stored as NaN."""
    g = cfg.grid.size
    p_hat = np.empty(cfg.reps)
    a_hat = np.empty(cfg.reps)
    est = {t: {e: np.full((cfg.reps, g), np.nan) for e in ESTIMATORS} for t in TARGETS}
    seeds = cfg.seeds()
    for start in range(0, cfg.reps, cfg.chunk):
        block = _simulate(cfg, seeds[start : start + cfg.chunk])
        for j, x in enumerate(block):
            r = start + j
            p_hat[r], a_hat[r], out = _one_replication(x, cfg)
            for t in TARGETS:
                for e in ESTIMATORS:
                    if out[t][e] is not None:
                        est[t][e][r] = out[t][e]
        if progress is not None:
            progress(min(start + cfg.chunk, cfg.reps))
    return MCReplications(cfg, p_hat, a_hat, est)


@dataclass(frozen=True)
class CellStats:
    bias: np.ndarray
    sd: np.ndarray
    rmse: np.ndarray
    n_excluded: np.ndarray


def cell_stats(samples: np.ndarray, truth) -> CellStats:
    """Bias, SD and RMSE down the columns of ``samples``, ignoring NaN rows per column.

    SD uses the 1/reps normalisation so that RMSE^2 = bias^2 + SD^2.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    truth = np.broadcast_to(np.asarray(truth, dtype=float), samples.shape[1:])
    ok = ~np.isnan(samples)
    cnt = ok.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(ok, samples, 0.0).sum(axis=0) / cnt
        dev = np.where(ok, samples - mean, 0.0)
        sd = np.sqrt((dev**2).sum(axis=0) / cnt)
        bias = mean - truth
        rmse = np.sqrt((np.where(ok, samples - truth, 0.0) ** 2).sum(axis=0) / cnt)
    return CellStats(bias, sd, rmse, samples.shape[0] - cnt)


@dataclass(frozen=True)
class ScalarStats:
    mean: float
    bias: float
    sd: float
    rmse: float


def scalar_stats(values: np.ndarray, truth: float) -> ScalarStats:
    s = cell_stats(np.asarray(values, dtype=float)[:, None], truth)
    return ScalarStats(float(truth + s.bias[0]), float(s.bias[0]), float(s.sd[0]), float(s.rmse[0]))


@dataclass(frozen=True)
class MCStudyResult:
    config: MCStudyConfig
    grid: np.ndarray
    truth: dict[str, np.ndarray]
    cells: dict[str, dict[str, CellStats]]
    p_hat: ScalarStats
    alpha_hat: ScalarStats
    truth_label: str

    def rmse_ratio(self, target: str, estimator: str) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.cells[target][estimator].rmse / self.cells[target]["forward"].rmse


def summarize(reps: MCReplications) -> MCStudyResult:
    cfg = reps.config
    truth = {t: truth_on_grid(cfg, t) for t in TARGETS}
    cells = {t: {e: cell_stats(reps.estimates[t][e], truth[t]) for e in ESTIMATORS} for t in TARGETS}
    label = "starred" if cfg.alpha_mode == "rank" else "raw"
    return MCStudyResult(cfg, cfg.grid, truth, cells, scalar_stats(reps.p_hat, cfg.true_p),
                         scalar_stats(reps.alpha_hat, cfg.true_alpha), label)


def run_mc_study(cfg: MCStudyConfig, progress: Callable[[int], None] | None = None) -> MCStudyResult:
    return summarize(run_replications(cfg, progress))


def _fmt(v) -> str:
    return repr(float(v))


def write_results_csv(result: MCStudyResult, path: str | Path, target: str = "A1") -> None:
    """Columns ``x, estimator, bias, sd, rmse, rmse_ratio_vs_forward, n_excluded``."""
    with open(path, "w", newline="") as fh:
        fh.write("x,estimator,bias,sd,rmse,rmse_ratio_vs_forward,n_excluded\n")
        for e in ESTIMATORS:
            c = result.cells[target][e]
            ratio = result.rmse_ratio(target, e)
            for i, x in enumerate(result.grid):
                fh.write(f"{_fmt(x)},{e},{_fmt(c.bias[i])},{_fmt(c.sd[i])},{_fmt(c.rmse[i])},"
                         f"{_fmt(ratio[i])},{int(c.n_excluded[i])}\n")


def write_summary_csv(result: MCStudyResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("stat,bias,sd,rmse\n")
        for name, s in (("p_hat", result.p_hat), ("alpha_hat", result.alpha_hat)):
            fh.write(f"{name},{_fmt(s.bias)},{_fmt(s.sd)},{_fmt(s.rmse)}\n")


@dataclass(frozen=True)
class KnownAlphaSD:
    """Monte Carlo SDs of the forward and backward A1 estimators with the true index."""

    grid: np.ndarray
    sd_forward: np.ndarray
    sd_backward: np.ndarray
    mean_exceedances: float
    reps: int

    def scaled(self) -> tuple[np.ndarray, np.ndarray]:
        """SDs multiplied by the square root of the mean exceedance count."""
        k = math.sqrt(self.mean_exceedances)
        return k * self.sd_forward, k * self.sd_backward


def known_alpha_sd_study(model: SREConfig, n: int = 10_000, reps: int = 2000, q: float = 0.975,
                         grid=(0.5, 1.0, 2.0), master_seed: int = 0, chunk: int = 250) -> KnownAlphaSD:
    """Replicate the forward and backward estimators of A1 at the declared index.

    The threshold is the ``q`` quantile of each simulated path and the index
    is ``model.alpha_true``, so the spread reflects the estimators alone.
    """
    g = np.asarray(grid, dtype=float)
    fwd = np.empty((reps, g.size))
    bwd = np.empty((reps, g.size))
    ks = np.empty(reps)
    seeds = [replication_seed(master_seed, r) for r in range(reps)]
    for start in range(0, reps, chunk):
        block = simulate_sre_batch(model, n, seeds[start : start + chunk])
        for j, x in enumerate(block):
            r = start + j
            u = threshold_from_quantile(x, q)
            f = forward_cdf(x, u, "A1", g)
            fwd[r] = f.values
            bwd[r] = backward_cdf(x, u, model.alpha_true, "A1", g).values
            ks[r] = f.n_exceedances
    return KnownAlphaSD(g, fwd.std(axis=0), bwd.std(axis=0), float(ks.mean()), reps)


# -- case study -----------------------------------------------------------------

CURVES = ("A1*", "A-1*", "B1*", "B-1*")


@dataclass(frozen=True)
class CaseStudyResult:
    n_obs: int
    n_extremes: int
    n_pos: int
    n_neg: int
    alpha_hat: float
    threshold: float
    quantile: float
    curves: dict[str, CdfEstimate]
    glue_adjusted: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_pos + self.n_neg != self.n_extremes:
            raise ValueError("n_pos + n_neg must equal n_extremes")

    def sup_distance(self, a: str, b: str) -> float:
        """Largest gap between two curves on the evaluation grid (grid dependent)."""
        return float(np.max(np.abs(self.curves[a].values - self.curves[b].values)))

    def summary(self) -> dict[str, str]:
        return {
            "n_obs": str(self.n_obs),
            "n_extremes": str(self.n_extremes),
            "n_pos": str(self.n_pos),
            "n_neg": str(self.n_neg),
            "alpha_hat": _fmt(self.alpha_hat),
            "threshold": _fmt(self.threshold),
            "quantile": _fmt(self.quantile),
            "sup_dist_A1_vs_A-1": _fmt(self.sup_distance("A1*", "A-1*")),
            "sup_dist_B1_vs_B-1": _fmt(self.sup_distance("B1*", "B-1*")),
            **{f"glue_adjusted_{k}": str(v) for k, v in self.glue_adjusted.items()},
        }


def noise_bound(n_cond: int) -> float:
    """Largest binomial SD of the difference of two empirical cdfs on ``n_cond`` extremes each."""
    return 0.5 * math.sqrt(2.0 / n_cond)


def run_case_study(prices, q: float = 0.95, grid=None, min_extremes: int = 10) -> CaseStudyResult:
    """Log-returns, counts and Hill index on the raw scale, starred curves on the rank scale.

    ``prices`` is a path to a ``date,close`` CSV or a sequence of prices.
    The four curves are monotonized mixture estimates with unit index; the
    reversed-time curves come from the reversed transformed series.  The
    negative branch is anchored below the value at zero so that every curve
    is a cdf; ``glue_adjusted`` counts the grid points this changed.
    """
    if isinstance(prices, (str, Path)):
        _, prices = read_prices_csv(prices)
    r = log_returns(prices)
    u = threshold_from_quantile(r, q)
    bal = estimate_p(r, u)
    for name, count in (("positive", bal.n_pos), ("negative", bal.n_neg)):
        if count < min_extremes:
            raise InsufficientDataError(f"only {count} {name} extremes (need {min_extremes})")
    a_hat = hill_alpha(r, u).alpha
    star = rank_transform(r)
    u_star = threshold_from_quantile(star, q)
    g = study_grid() if grid is None else np.asarray(grid, dtype=float)
    curves = {}
    adjusted = {}
    for name, target in zip(CURVES, ("A1", "A1_rev", "B1", "B1_rev")):
        mix = estimate_cdf(star, u_star, target, "mixture", 1.0, g, "rank")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            plain = monotonize(mix)
        curves[name] = monotonize(mix, anchor_zero=True)
        adjusted[name] = int(np.count_nonzero(curves[name].values != plain.values))
    return CaseStudyResult(len(r), bal.n_exceedances, bal.n_pos, bal.n_neg, a_hat, u.level, q, curves,
                           adjusted)



def synthetic_prices(n_returns: int = 2280, seed: int = 0, kind: Literal["tcopula", "iid_t"] = "tcopula",
                     scale: float = 0.01, start: float = 100.0) -> tuple[list[str], np.ndarray]:
    """Deterministic price path whose log-returns follow a reversible heavy-tailed model.

    ``tcopula`` uses the default t-copula chain (exchangeable copula, so the
    extremal dynamics are time reversible); ``iid_t`` uses iid t(3) returns.
    Dates are consecutive weekdays from 2000-01-03.
    """
    rng = np.random.default_rng(seed)
    if kind == "tcopula":
        r = simulate_tcopula_batch(TCopulaMarkovConfig(), n_returns, [rng])[0]
    elif kind == "iid_t":
        r = rng.standard_t(3.0, n_returns)
    else:
        raise ValueError(f"unknown fixture kind {kind!r}")
    prices = start * np.exp(np.concatenate([[0.0], np.cumsum(scale * r)]))
    dates = []
    day = _dt.date(2000, 1, 3)
    while len(dates) < prices.size:
        if day.weekday() < 5:
            dates.append(day.isoformat())
        day += _dt.timedelta(days=1)
    return dates, prices


def write_prices_csv(path: str | Path, dates: Sequence[str], prices) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("date,close\n")
        for d, p in zip(dates, prices):
            fh.write(f"{d},{_fmt(p)}\n")


def write_curves_csv(result: CaseStudyResult, path: str | Path) -> None:
    """Wide CSV: ``x`` and one column per curve."""
    grid = result.curves[CURVES[0]].grid
    with open(path, "w", newline="") as fh:
        fh.write("x," + ",".join(CURVES) + "\n")
        for i, x in enumerate(grid):
            fh.write(_fmt(x) + "," + ",".join(_fmt(result.curves[c].values[i]) for c in CURVES) + "\n")


__all__ = [
    "MCStudyConfig",
    "MCReplications",
    "MCStudyResult",
    "CaseStudyResult",
    "KnownAlphaSD",
    "known_alpha_sd_study",
    "replication_seed",
    "run_replications",
    "summarize",
    "run_mc_study",
    "cell_stats",
    "scalar_stats",
    "truth_on_grid",
    "starred",
    "write_results_csv",
    "write_summary_csv",
    "run_case_study",
    "synthetic_prices",
    "write_prices_csv",
    "write_curves_csv",
    "noise_bound",
]
