"""Reference models with known tail-chain increment laws.

Two simulators (a t-copula Markov chain with t margins and a stochastic
recurrence equation), closed-form increment cdfs for the t-copula and for
extreme-value copulas, a numeric corner-limit evaluator for copula partial
derivatives, and a direct simulator of the spectral tail chain itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import special

from .core import TimeSeries
from .errors import BranchUndefinedError, NumericError, ValidationError
from .laws import DiscreteLaw, Law, ParametricLaw, TailChainSpec

DIVERGENCE_BOUND = 1e250


def rng_for(seed) -> np.random.Generator:
    """Generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# -- Student t helpers -----------------------------------------------------------

def t_cdf(nu: float, x):
    return special.stdtr(nu, np.asarray(x, dtype=float))


def t_lower_quantile(nu: float, s):
    """Quantile of ``t_nu`` at probabilities ``s <= 1/2``, accurate deep in the tail.

    Closed forms for one and two degrees of freedom, the incomplete-beta
    inverse otherwise.
    """
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        if nu == 1.0:
            return -1.0 / np.tan(np.pi * s)
        if nu == 2.0:
            return (2.0 * s - 1.0) / np.sqrt(2.0 * s * (1.0 - s))
    return special.stdtrit(nu, s)


def t_quantile(nu: float, u):
    """Quantile of ``t_nu`` computed through the nearer tail."""
    u = np.asarray(u, dtype=float)
    lower = np.minimum(u, 1.0 - u)
    return np.where(u < 0.5, 1.0, -1.0) * t_lower_quantile(nu, lower)


def t_transform(x, nu_from: float, nu_to: float):
    """``t_{nu_to}^{-1}(t_{nu_from}(x))`` evaluated through the symmetric tail."""
    x = np.asarray(x, dtype=float)
    s = special.stdtr(nu_from, -np.abs(x))
    return -np.sign(x) * t_lower_quantile(nu_to, s)


# -- t-copula Markov chain -------------------------------------------------------

@dataclass(frozen=True)
class TCopulaMarkovConfig:
    """t margin with ``nu_margin`` degrees of freedom, t-copula with ``nu_copula`` and ``rho``."""

    nu_margin: float = 2.0
    nu_copula: float = 2.5
    rho: float = 0.2
    burn_in: int = 1000

    def __post_init__(self) -> None:
        if not (self.nu_margin > 0 and self.nu_copula > 0):
            raise ValidationError("degrees of freedom must be positive")
        if not -1.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be nonnegative")

    @property
    def alpha(self) -> float:
        return float(self.nu_margin)

    @property
    def p(self) -> float:
        return 0.5


def _tcopula_draws(cfg: TCopulaMarkovConfig, steps: int, rng: np.random.Generator):
    t0 = rng.standard_t(cfg.nu_copula)
    eps = rng.standard_t(cfg.nu_copula + 1.0, size=steps)
    return t0, eps


def _run_tcopula(cfg: TCopulaMarkovConfig, t0: np.ndarray, eps: np.ndarray, n: int) -> np.ndarray:
    """Latent recursion on the copula t scale; rows are replications."""
    nu, rho = cfg.nu_copula, cfg.rho
    c = (1.0 - rho * rho) / (nu + 1.0)
    t = t0.copy()
    out = np.empty((t0.size, n))
    burn = cfg.burn_in
    for j in range(burn + n):
        t = rho * t + np.sqrt(c * (nu + t * t)) * eps[:, j]
        if j >= burn:
            out[:, j - burn] = t
    x = t_transform(out, cfg.nu_copula, cfg.nu_margin)
    bad = ~np.isfinite(x)
    if np.any(bad):
        r, k = np.argwhere(bad)[0]
        raise NumericError(f"margin quantile inversion failed at replication {r}, index {k}")
    return x


def simulate_tcopula_chain(cfg: TCopulaMarkovConfig, n: int, seed) -> TimeSeries:
    """Stationary chain with ``t_{nu_margin}`` margin and t-copula transitions.

    The copula scale ``T_t = t^{-1}_{nu_copula}(U_t)`` given ``T_{t-1} = z`` is
    location-scale ``t_{nu_copula+1}`` with centre ``rho z`` and scale
    ``sqrt((1-rho^2)(nu_copula+z^2)/(nu_copula+1))``; this inverts the
    conditional copula cdf exactly.  The chain starts in stationarity and the
    first ``burn_in`` values are discarded all the same.
    """
    return TimeSeries(simulate_tcopula_batch(cfg, n, [seed])[0])


def simulate_tcopula_batch(cfg: TCopulaMarkovConfig, n: int, seeds) -> np.ndarray:
    """One row per seed; row ``r`` equals ``simulate_tcopula_chain(cfg, n, seeds[r])``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    steps = cfg.burn_in + n
    t0 = np.empty(len(seeds))
    eps = np.empty((len(seeds), steps))
    for r, sd in enumerate(seeds):
        t0[r], eps[r] = _tcopula_draws(cfg, steps, rng_for(sd))
    return _run_tcopula(cfg, t0, eps, n)


def tcopula_partial(nu: float, rho: float) -> Callable:
    """``dC/du`` of the t-copula as a vectorised function of ``(u, v)``."""
    scale = math.sqrt((nu + 1.0) / (1.0 - rho * rho))

    def partial(u, v):
        tu = t_quantile(nu, u)
        tv = t_quantile(nu, v)
        arg = (tv / tu - rho) * scale / np.sqrt(1.0 + nu / (tu * tu)) * np.sign(tu)
        return t_cdf(nu + 1.0, arg)

    return partial


def true_cdf_A1_tcopula(cfg: TCopulaMarkovConfig, alpha: float | None = None,
                        p: float | None = None) -> Callable:
    """Cdf of ``A1`` for the t-copula chain; ``alpha`` and ``p`` default to the t margin's."""
    return _tcopula_cdf(cfg, alpha, p, "A1")


def true_cdf_B1_tcopula(cfg: TCopulaMarkovConfig, alpha: float | None = None,
                        p: float | None = None) -> Callable:
    """Cdf of ``B1``: the ``A1`` form with the odds ``(1-p)/p`` inverted (radial symmetry)."""
    return _tcopula_cdf(cfg, alpha, p, "B1")


def _tcopula_cdf(cfg, alpha, p, which):
    a = cfg.alpha if alpha is None else float(alpha)
    pp = cfg.p if p is None else float(p)
    nu, rho = cfg.nu_copula, cfg.rho
    scale = math.sqrt((nu + 1.0) / (1.0 - rho * rho))
    odds = (1.0 - pp) / pp if which == "A1" else pp / (1.0 - pp)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        mag = np.abs(x) ** (a / nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            # -((odds |x|^-a)^(-1/nu)) written without the negative power
            neg = -(odds ** (-1.0 / nu)) * mag
        z = np.where(x >= 0, mag, neg)
        return t_cdf(nu + 1.0, (z - rho) * scale)

    return cdf


def copula_corner_limits(copula_partial: Callable, z, s: float) -> dict[str, np.ndarray]:
    """``dC/du`` at the four corners ``(1-s, 1-sz), (1-s, sz), (s, 1-sz), (s, sz)``.

    As ``s -> 0`` these approach ``eta11, eta10, eta01, eta00`` at ``z``.
    """
    z = np.asarray(z, dtype=float)
    return {
        "eta11": copula_partial(1.0 - s, 1.0 - s * z),
        "eta10": copula_partial(1.0 - s, s * z),
        "eta01": copula_partial(s, 1.0 - s * z),
        "eta00": copula_partial(s, s * z),
    }


def cdf_from_corner_limits(copula_partial: Callable, alpha: float, p: float, s: float,
                           which: Literal["A1", "B1"] = "A1") -> Callable:
    """Increment cdf assembled from the corner limits at a small ``s``."""

    def cdf(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for k, xv in enumerate(x):
            if which == "A1":
                if xv > 0:
                    out[k] = copula_corner_limits(copula_partial, xv ** -alpha, s)["eta11"]
                else:
                    out[k] = copula_corner_limits(copula_partial, (1 - p) / p * abs(xv) ** -alpha, s)["eta10"]
            else:
                if xv > 0:
                    out[k] = 1.0 - copula_corner_limits(copula_partial, xv ** -alpha, s)["eta00"]
                else:
                    out[k] = 1.0 - copula_corner_limits(copula_partial, p / (1 - p) * abs(xv) ** -alpha, s)["eta01"]
        return out

    return cdf


# -- extreme-value copulas -------------------------------------------------------

EVFamily = Literal["asymmetric_logistic", "asymmetric_negative_logistic"]


@dataclass(frozen=True)
class EVCopulaModel:
    family: EVFamily
    theta: float
    psi1: float = 1.0
    psi2: float = 1.0

    def __post_init__(self) -> None:
        if self.family == "asymmetric_logistic":
            if not self.theta >= 1:
                raise ValidationError(f"asymmetric logistic needs theta >= 1, got {self.theta}")
        elif self.family == "asymmetric_negative_logistic":
            if not self.theta > 0:
                raise ValidationError(f"asymmetric negative logistic needs theta > 0, got {self.theta}")
        else:
            raise ValidationError(f"unknown family {self.family!r}")
        for name in ("psi1", "psi2"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValidationError(f"{name} must lie in (0, 1], got {v}")

    def pickands(self, w):
        w = np.asarray(w, dtype=float)
        th, p1, p2 = self.theta, self.psi1, self.psi2
        a, b = p1 * w, p2 * (1.0 - w)
        if self.family == "asymmetric_logistic":
            return (1 - p1) * w + (1 - p2) * (1 - w) + (a**th + b**th) ** (1.0 / th)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            inner = np.where(lo > 0, lo * (1.0 + (lo / hi) ** th) ** (-1.0 / th), 0.0)
        return 1.0 - inner

    def pickands_derivative(self, w):
        """``D'(w)``, with one-sided limits at the endpoints."""
        w = np.asarray(w, dtype=float)
        th, p1, p2 = self.theta, self.psi1, self.psi2
        a, b = p1 * w, p2 * (1.0 - w)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.family == "asymmetric_logistic":
                # a^th / (a^th + b^th) written as 1 / (1 + (b/a)^th)
                fa = np.where(a > 0, 1.0 / (1.0 + (b / a) ** th), 0.0)
                fb = np.where(b > 0, 1.0 / (1.0 + (a / b) ** th), 0.0)
                e = (th - 1.0) / th
                return (p2 - p1) + p1 * fa**e - p2 * fb**e
            fa = np.where(b > 0, 1.0 / (1.0 + (a / b) ** th), 0.0)
            fb = np.where(a > 0, 1.0 / (1.0 + (b / a) ** th), 0.0)
            e = (1.0 + th) / th
            return -p1 * fa**e + p2 * fb**e

    def atom_at_zero(self) -> float:
        """``P(A1 = 0) = 1 - D'(1)``."""
        return float(1.0 - self.pickands_derivative(1.0))


def true_cdf_A1_evcopula(model: EVCopulaModel, alpha: float, closed_form: bool = False) -> Callable:
    """Cdf of ``A1`` under an extreme-value copula: ``D(w) - w D'(w)`` at ``w = 1/(x^alpha+1)``.

    With ``closed_form`` the family-specific simplification is used instead.
    Both vanish for ``x < 0``.
    """
    th, p1, p2 = model.theta, model.psi1, model.psi2

    def generic(x):
        x = np.asarray(x, dtype=float)
        w = 1.0 / (np.abs(x) ** alpha + 1.0)
        val = model.pickands(w) - w * model.pickands_derivative(w)
        return np.where(x >= 0, val, 0.0)

    def closed(x):
        x = np.asarray(x, dtype=float)
        xa = np.abs(x) ** alpha
        with np.errstate(divide="ignore", over="ignore"):
            if model.family == "asymmetric_logistic":
                val = 1.0 - p2 + p2 * (1.0 + (p1 / (p2 * xa)) ** th) ** ((1.0 - th) / th)
            else:
                val = 1.0 - p2 * (1.0 + (p2 * xa / p1) ** th) ** (-(1.0 + th) / th)
        return np.where(x >= 0, val, 0.0)

    return closed if closed_form else generic


# -- stochastic recurrence equation ----------------------------------------------

def expected_log_abs(law: Law) -> float:
    if isinstance(law, DiscreteLaw):
        with np.errstate(divide="ignore"):
            return law.expect(lambda a: np.log(np.abs(a)))
    if law.family == "lognormal":
        return law.params[0]
    return law.expect(lambda t: math.log(abs(t)) if t != 0 else -math.inf)


@dataclass(frozen=True)
class SREConfig:
    """``X_t = C_t X_{t-1} + D_t`` with iid ``C_t``, ``D_t`` and declared Kesten index."""

    c_law: Law
    d_law: Law
    burn_in: int = 1000
    alpha_true: float = 2.0

    def __post_init__(self) -> None:
        if self.burn_in < 0:
            raise ValidationError("burn_in must be nonnegative")
        if not self.alpha_true > 0:
            raise ValidationError("alpha_true must be positive")

    def kesten_moment(self) -> float:
        """``E|C|^alpha_true``; equals one when ``alpha_true`` is the tail index."""
        return self.c_law.abs_moment(self.alpha_true)

    def check_contractive(self) -> float:
        m = expected_log_abs(self.c_law)
        if not m < 0:
            raise ValidationError(f"E log|C| = {m:.6g} is not negative; no stationary solution")
        return m


def default_sre_config(burn_in: int = 1000) -> SREConfig:
    """``C ~ N(1/3, 8/9)``, ``D ~ N(-10, 1)``, index 2."""
    return SREConfig(ParametricLaw("normal", (1 / 3, 8 / 9)), ParametricLaw("normal", (-10.0, 1.0)),
                     burn_in, 2.0)


def simulate_sre(cfg: SREConfig, n: int, seed) -> TimeSeries:
    """Iterate the recursion from ``X = 0`` through ``burn_in`` steps, then keep ``n`` values."""
    return TimeSeries(simulate_sre_batch(cfg, n, [seed])[0])


def simulate_sre_batch(cfg: SREConfig, n: int, seeds) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    cfg.check_contractive()
    steps = cfg.burn_in + n
    c = np.empty((len(seeds), steps))
    d = np.empty((len(seeds), steps))
    for r, sd in enumerate(seeds):
        rng = rng_for(sd)
        c[r] = cfg.c_law.sample(rng, steps)
        d[r] = cfg.d_law.sample(rng, steps)
    x = np.zeros(len(seeds))
    out = np.empty((len(seeds), n))
    burn = cfg.burn_in
    for j in range(steps):
        x = c[:, j] * x + d[:, j]
        if not np.all(np.abs(x) < DIVERGENCE_BOUND):
            r = int(np.flatnonzero(~(np.abs(x) < DIVERGENCE_BOUND))[0])
            raise NumericError(f"SRE diverged at replication {r}, step {j}")
        if j >= burn:
            out[:, j - burn] = x
    return out


def sre_true_increment_law(cfg: SREConfig) -> tuple[Law, Law]:
    """Both increment laws equal the law of ``C``."""
    return cfg.c_law, cfg.c_law


def sre_tail_spec(cfg: SREConfig, p: float = 0.5) -> TailChainSpec:
    """Tail chain of the SRE solution.  ``p`` is 1/2 whenever ``C`` takes negative values."""
    return TailChainSpec(p, cfg.alpha_true, cfg.c_law, cfg.c_law if p < 1 else None)


# -- spectral tail chain ---------------------------------------------------------

@dataclass(frozen=True)
class SpectralPath:
    """Simulated ``Theta_t`` and ``Y_t = |Y_0| Theta_t`` for ``t = -T..T``, one row per path."""

    times: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    abs_y0: np.ndarray


def simulate_spectral_tail_chain(spec: TailChainSpec, horizon: int, seed, n_paths: int = 1,
                                 backward: bool | None = None) -> SpectralPath:
    """Draw paths of the Markov spectral tail chain and its tail process.

    ``Theta_0`` is +1 with probability ``p``; from a positive state the next
    increment comes from ``A``, from a negative state from ``B``; 0 is
    absorbing.  The backward half uses the laws of ``A_{-1}``/``B_{-1}``
    derived from the forward laws, which needs discrete laws; with
    ``backward=False`` (the default for parametric laws) negative times are NaN.
    """
    from .oracle import backward_from_forward

    if horizon < 0 or n_paths < 1:
        raise ValueError("need horizon >= 0 and n_paths >= 1")
    if backward is None:
        backward = spec.is_discrete
    rng = rng_for(seed)
    theta0 = np.where(rng.random(n_paths) < spec.p, 1.0, -1.0)
    abs_y0 = rng.pareto(spec.alpha, n_paths) + 1.0

    def walk(pos_law, neg_law):
        cols = []
        cur = theta0.copy()
        for _ in range(horizon):
            pos, neg = cur > 0, cur < 0
            step = np.zeros(n_paths)
            if np.any(pos):
                if pos_law is None:
                    raise BranchUndefinedError("positive state reached without a law for that branch")
                step[pos] = pos_law.sample(rng, int(pos.sum()))
            if np.any(neg):
                if neg_law is None:
                    raise BranchUndefinedError("negative state reached without a law for that branch")
                step[neg] = neg_law.sample(rng, int(neg.sum()))
            cur = cur * step
            cols.append(cur)
        return cols

    fwd = walk(spec.a1_law, spec.b1_law)
    if backward:
        a_m1, b_m1, _ = backward_from_forward(spec)
        bwd = walk(a_m1, b_m1)
    else:
        bwd = [np.full(n_paths, np.nan) for _ in range(horizon)]
    theta = np.column_stack(bwd[::-1] + [theta0] + fwd) if horizon else theta0[:, None]
    return SpectralPath(np.arange(-horizon, horizon + 1), theta, abs_y0[:, None] * theta, abs_y0)
