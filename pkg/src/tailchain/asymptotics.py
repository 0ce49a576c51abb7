"""Limiting covariances of the forward and backward estimators for nonnegative chains.

With ``Theta_0 = 1`` the forward chain is a product of iid copies of ``A1``
and ``Y_k = |Y_0| Theta_k`` with ``|Y_0|`` standard Pareto(alpha), so
``P(Y_k > 1 | Theta) = min(1, Theta_k^alpha)``.  The series in the
forward/backward cross covariance are evaluated either exactly (discrete
laws, by dynamic programming over the law of the partial products) or by
Monte Carlo over simulated increment paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import ValidationError
from .laws import ATOM_MERGE_TOL, DiscreteLaw, Law, TailChainSpec

Exponent = Literal["derived", "printed"]


@dataclass(frozen=True)
class AsymptoticCov:
    kind: Literal["ff", "bb", "fb"]
    x: float
    y: float
    value: float
    truncation_K: int = 1
    mc_paths: int = 0
    std_error: float = 0.0
    tail_diag: float = 0.0


def _require_nonnegative(spec: TailChainSpec) -> Law:
    if not spec.is_nonnegative:
        raise ValidationError("the limiting covariances are available for nonnegative chains (p = 1, A1 >= 0)")
    return spec.a1_law


def survival(law: Law) -> Callable:
    """``x -> P(A > x)``."""
    return law.sf


def var_forward(sf: Callable, x: float, y: float | None = None) -> float:
    """``Fbar(max(x, y)) - Fbar(x) Fbar(y)``; the variance when ``y`` is omitted."""
    y = x if y is None else y
    return float(sf(max(x, y)) - sf(x) * sf(y))


def cov_matrix_forward(sf: Callable, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    fb = np.asarray(sf(g), dtype=float)
    return np.asarray(sf(np.maximum.outer(g, g)), dtype=float) - np.outer(fb, fb)


def _neg_power_tail(law: Law, m: float, e: float) -> float:
    """``E[A^{-e} 1(A > m)]`` for a nonnegative law and ``m >= 0``."""
    if isinstance(law, DiscreteLaw):
        sel = law.atoms > m
        return float(np.sum(law.masses[sel] * law.atoms[sel] ** -e))
    return law.expect(lambda t: t ** -e if t > 0 else 0.0, lb=m)


def var_backward(spec: TailChainSpec, x: float, y: float | None = None,
                 exponent: Exponent = "derived") -> float:
    """``E[Theta_1^{-e} 1(Theta_1 > max(x, y))] - Fbar(x) Fbar(y)`` for ``x, y >= 0``.

    ``e = alpha`` follows from the time-change formula; ``exponent="printed"``
    uses ``e = 1`` instead.  The two agree when ``alpha = 1``.
    """
    law = _require_nonnegative(spec)
    y = x if y is None else y
    if min(x, y) < 0:
        raise ValueError("the backward covariance is defined for x, y >= 0")
    e = spec.alpha if exponent == "derived" else 1.0
    return _neg_power_tail(law, max(x, y), e) - float(law.sf(x) * law.sf(y))


# -- cross covariance -------------------------------------------------------------

def _merge(vals: np.ndarray, probs: np.ndarray):
    order = np.argsort(vals, kind="stable")
    vals, probs = vals[order], probs[order]
    if vals.size < 2:
        return vals, probs
    new = np.empty(vals.size, dtype=bool)
    new[0] = True
    new[1:] = np.diff(vals) > ATOM_MERGE_TOL * np.maximum(1.0, np.abs(vals[1:]))
    ids = np.cumsum(new) - 1
    return vals[new], np.bincount(ids, weights=probs)


def _exact_terms(law: DiscreteLaw, alpha: float, x: float, y: float, K: int):
    a, pa = law.atoms[law.atoms > 0], law.masses[law.atoms > 0]
    ax = a > x
    by = a > y
    wb = pa * a ** -alpha  # P(b) b^-alpha

    def emin(c, vals, probs):
        """E[min(1, (c M)^alpha)] for each constant in ``c``."""
        return np.minimum(1.0, (np.multiply.outer(c, vals)) ** alpha) @ probs

    # law of the partial products M_j (positive atoms only; zero products never reach Y > 1)
    mv, mp = np.array([1.0]), np.array([1.0])
    prods = [(mv, mp)]
    for _ in range(K):
        mv, mp = _merge(np.multiply.outer(mv, a).ravel(), np.multiply.outer(mp, pa).ravel())
        keep = mp > 0
        mv, mp = mv[keep], mp[keep]
        prods.append((mv, mp))

    t1 = t2 = t3 = t4 = 0.0
    for k in range(1, K + 1):
        vk, pk = prods[k]
        t4 += float(np.minimum(1.0, vk**alpha) @ pk)
        vk1, pk1 = prods[k - 1]
        t3 += float(pa[ax] @ emin(a[ax], vk1, pk1))
        if k == 1:
            g = np.minimum(1.0, a**alpha) * wb
            t1 += float(np.sum(g[ax & by]))
            t2 += float(np.sum(g[by]))
        else:
            vk2, pk2 = prods[k - 2]
            ab = np.multiply.outer(a, a[by])  # a = A_1, b = A_k
            e = emin(ab.ravel(), vk2, pk2).reshape(ab.shape)
            inner = e @ wb[by]
            t1 += float(pa[ax] @ inner[ax])
            t2 += float(pa @ inner)
    tail = float(np.minimum(1.0, prods[K][0] ** alpha) @ prods[K][1])
    return t1, t2, t3, t4, tail


def _mc_block(law: Law, alpha: float, x: float, y: float, K: int, m: int,
              rng: np.random.Generator, fx: float, fy: float):
    inc = law.sample(rng, (m, K))
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        theta = np.cumprod(inc, axis=1)
        py = np.minimum(1.0, theta**alpha)
        w = np.where(inc > y, np.where(inc > 0, inc, 1.0) ** -alpha, 0.0)
    a1x = (inc[:, 0] > x)[:, None]
    per = (w * py * a1x) - fx * (w * py) - fy * (py * a1x) + fx * fy * py
    return per.sum(axis=1), py[:, -1]


def cross_cov_fb(spec: TailChainSpec, x: float, y: float, K: int = 100, paths: int = 1_000_000,
                 seed=0, method: Literal["auto", "exact", "mc"] = "auto",
                 block: int = 20_000, exact_atom_cap: int = 2_000_000) -> AsymptoticCov:
    """Cross covariance of the forward estimator at ``x`` and the backward one at ``y``.

    Series truncated after ``K`` terms.  ``tail_diag`` is ``P(Y_K > 1)``, the
    size of the last retained term of the ``P(Y_k > 1)`` series.  The Monte
    Carlo path runs in blocks with per-block seeds, summed in block order.
    """
    law = _require_nonnegative(spec)
    if K < 1 or paths < 1:
        raise ValueError("need K >= 1 and paths >= 1")
    alpha = spec.alpha
    fx, fy = float(law.sf(x)), float(law.sf(y))
    if method == "auto":
        method = "mc"
        if isinstance(law, DiscreteLaw):
            m = int(np.count_nonzero(law.atoms > 0))
            if m <= 1 or math.comb(K + m - 1, m - 1) <= exact_atom_cap:
                method = "exact"
    if method == "exact":
        if not isinstance(law, DiscreteLaw):
            raise TypeError("exact evaluation needs a discrete law")
        t1, t2, t3, t4, tail = _exact_terms(law, alpha, x, y, K)
        value = t1 - fx * t2 - fy * t3 + fx * fy * t4
        return AsymptoticCov("fb", x, y, value, K, 0, 0.0, tail)

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    total = 0.0
    total_sq = 0.0
    tail = 0.0
    done = 0
    b = 0
    while done < paths:
        m = min(block, paths - done)
        rng = np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (b,)))
        per, last = _mc_block(law, alpha, x, y, K, m, rng, fx, fy)
        total += float(per.sum())
        total_sq += float((per**2).sum())
        tail += float(last.sum())
        done += m
        b += 1
    mean = total / paths
    var = max(total_sq / paths - mean * mean, 0.0)
    return AsymptoticCov("fb", x, y, mean, K, paths, math.sqrt(var / paths), tail / paths)


def sd_from_variance(var: float, n_vn: float) -> float:
    """``sqrt(var / (n v_n))``: the finite-sample SD implied by the limit variance."""
    if n_vn <= 0:
        raise ValueError("n v_n must be positive")
    return math.sqrt(max(var, 0.0) / n_vn)


def predicted_sd(spec: TailChainSpec, estimator: Literal["forward", "backward"], x: float, n: int,
                 v_n: float, exponent: Exponent = "derived") -> float:
    """Predicted standard deviation of an estimator at ``x`` for sample size ``n``."""
    law = _require_nonnegative(spec)
    if estimator == "forward":
        var = var_forward(law.sf, x)
    elif estimator == "backward":
        var = var_backward(spec, x, exponent=exponent)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return sd_from_variance(var, n * v_n)


@dataclass(frozen=True)
class AsymptoticRow:
    x: float
    var_f: float
    var_b: float
    var_b_printed: float
    sd_pred_f: float
    sd_pred_b: float
    cov_fb: float
    tail_diag: float


def asymptotic_table(spec: TailChainSpec, grid, n_vn: float, K: int = 100, paths: int = 1_000_000,
                     seed=0) -> list[AsymptoticRow]:
    """Variances, predicted SDs and the diagonal cross covariance on a grid of ``x >= 0``."""
    law = _require_nonnegative(spec)
    rows = []
    for i, x in enumerate(np.asarray(grid, dtype=float)):
        vf = var_forward(law.sf, x)
        vb = var_backward(spec, x)
        vbp = var_backward(spec, x, exponent="printed")
        sub = np.random.SeedSequence(seed, spawn_key=(i,)) if not isinstance(seed, np.random.SeedSequence) else seed
        c = cross_cov_fb(spec, x, x, K, paths, sub)
        rows.append(AsymptoticRow(float(x), vf, vb, vbp, sd_from_variance(vf, n_vn),
                                  sd_from_variance(vb, n_vn), c.value, c.tail_diag))
    return rows
