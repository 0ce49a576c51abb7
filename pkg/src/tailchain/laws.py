"""Increment laws and the Markov spectral tail chain specification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, stats

from .errors import ValidationError

ATOM_MERGE_TOL = 1e-12
MASS_TOL = 1e-12
VALIDITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Finite law with distinct atoms and nonnegative masses summing to one."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.atoms, dtype=float, copy=True).ravel()
        m = np.array(self.masses, dtype=float, copy=True).ravel()
        if a.shape != m.shape or a.size == 0:
            raise ValidationError("atoms and masses must be nonempty and of equal length")
        if not np.all(np.isfinite(a)):
            raise ValidationError("atoms must be finite")
        if np.any(m < 0):
            raise ValidationError("masses must be nonnegative")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise ValidationError(f"masses sum to {m.sum()!r}, not 1")
        order = np.argsort(a, kind="stable")
        a, m = a[order], m[order]
        if a.size > 1 and np.any(np.diff(a) == 0):
            raise ValidationError("atoms must be distinct")
        a.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_pairs(cls, atoms, masses, residual_to_zero: bool = False) -> "DiscreteLaw":
        """Build a law, merging atoms closer than 1e-12 and dropping zero masses.

        With ``residual_to_zero`` the missing mass ``1 - sum(masses)`` is put
        on the atom 0.
        """
        a = np.asarray(atoms, dtype=float).ravel()
        m = np.asarray(masses, dtype=float).ravel()
        if residual_to_zero:
            resid = 1.0 - float(m.sum())
            if resid < -VALIDITY_TOL:
                raise ValidationError(f"derived masses exceed one by {-resid:.3g}")
            a = np.append(a, 0.0)
            m = np.append(m, max(resid, 0.0))
        order = np.argsort(a, kind="stable")
        a, m = a[order], m[order]
        out_a: list[float] = []
        out_m: list[float] = []
        for x, w in zip(a, m):
            if out_a and abs(x - out_a[-1]) <= ATOM_MERGE_TOL * max(1.0, abs(x)):
                out_m[-1] += w
            else:
                out_a.append(float(x))
                out_m.append(float(w))
        keep = [i for i, w in enumerate(out_m) if w > 0]
        if not keep:
            keep = [0]
        mm = np.asarray([out_m[i] for i in keep])
        total = mm.sum()
        if abs(total - 1.0) <= VALIDITY_TOL:
            mm = mm / total
        return cls(np.asarray([out_a[i] for i in keep]), mm)

    @classmethod
    def point(cls, a: float) -> "DiscreteLaw":
        return cls(np.array([a]), np.array([1.0]))

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a:g}:{m:g}" for a, m in zip(self.atoms, self.masses))
        return f"DiscreteLaw({pairs})"

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(self.masses * fn(self.atoms)))

    def abs_moment(self, alpha: float) -> float:
        return self.expect(lambda a: np.abs(a) ** alpha)

    def pos_moment(self, alpha: float) -> float:
        """E[(A^+)^alpha]."""
        return self.expect(lambda a: np.where(a > 0, np.abs(a), 0.0) ** alpha)

    def neg_moment(self, alpha: float) -> float:
        """E[(A^-)^alpha]."""
        return self.expect(lambda a: np.where(a < 0, np.abs(a), 0.0) ** alpha)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cm = np.concatenate([[0.0], np.cumsum(self.masses)])
        return cm[np.searchsorted(self.atoms, x, side="right")]

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        rm = np.concatenate([np.cumsum(self.masses[::-1])[::-1], [0.0]])
        return rm[np.searchsorted(self.atoms, x, side="right")]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.atoms[rng.choice(self.atoms.size, size=size, p=self.masses)]

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.atoms >= 0))

    def close_to(self, other: "DiscreteLaw", tol: float = 1e-12) -> bool:
        """Same atoms and masses up to ``tol``, ignoring atoms of zero mass."""
        a1, m1 = self.atoms[self.masses > tol], self.masses[self.masses > tol]
        a2, m2 = other.atoms[other.masses > tol], other.masses[other.masses > tol]
        if a1.size != a2.size:
            return False
        return bool(
            np.all(np.abs(a1 - a2) <= max(tol, ATOM_MERGE_TOL) * np.maximum(1.0, np.abs(a1)))
            and np.all(np.abs(m1 - m2) <= tol)
        )

    def max_deviation(self, other: "DiscreteLaw") -> float:
        """Largest absolute cdf difference over the union of the two supports.

        Atoms closer than the merge tolerance count as one point, so
        reciprocals that differ in the last bit compare equal.
        """
        pts = np.union1d(self.atoms, other.atoms)
        gap = np.diff(pts) > ATOM_MERGE_TOL * np.maximum(1.0, np.abs(pts[1:]))
        upper = pts[np.append(gap, True)]
        return float(np.max(np.abs(self.cdf(upper) - other.cdf(upper))))


_FAMILIES = ("normal", "lognormal", "exponential", "uniform")


@dataclass(frozen=True)
class ParametricLaw:
    """Named continuous law.

    ``normal(mean, var)``, ``lognormal(mu, sigma)`` (log-scale location and
    scale), ``exponential(scale)``, ``uniform(lo, hi)``.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; supported: {', '.join(_FAMILIES)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        self.dist  # validates parameters

    @property
    def dist(self):
        f, p = self.family, self.params
        if f == "normal":
            mean, var = p
            if var <= 0:
                raise ValidationError("normal variance must be positive")
            return stats.norm(loc=mean, scale=math.sqrt(var))
        if f == "lognormal":
            mu, sigma = p
            if sigma <= 0:
                raise ValidationError("lognormal sigma must be positive")
            return stats.lognorm(s=sigma, scale=math.exp(mu))
        if f == "exponential":
            (scale,) = p
            if scale <= 0:
                raise ValidationError("exponential scale must be positive")
            return stats.expon(scale=scale)
        lo, hi = p
        if not hi > lo:
            raise ValidationError("uniform needs lo < hi")
        return stats.uniform(loc=lo, scale=hi - lo)

    def __str__(self) -> str:
        return f"{self.family}({', '.join(repr(p) for p in self.params)})"

    @classmethod
    def parse(cls, text: str) -> "ParametricLaw":
        """Inverse of ``str``: ``"normal(0.333, 0.889)"``."""
        text = text.strip()
        name, _, rest = text.partition("(")
        if not rest.endswith(")"):
            raise ValidationError(f"cannot parse law {text!r}")
        params = tuple(float(s) for s in rest[:-1].split(",") if s.strip())
        return cls(name.strip(), params)

    def cdf(self, x):
        return self.dist.cdf(x)

    def sf(self, x):
        return self.dist.sf(x)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        f, p = self.family, self.params
        if f == "normal":
            return rng.normal(p[0], math.sqrt(p[1]), size)
        if f == "lognormal":
            return np.exp(rng.normal(p[0], p[1], size))
        if f == "exponential":
            return rng.exponential(p[0], size)
        return rng.uniform(p[0], p[1], size)

    def expect(self, fn: Callable, lb: float = -np.inf, ub: float = np.inf) -> float:
        lo, hi = self.dist.support()
        lo, hi = max(lo, lb), min(hi, ub)
        if lo >= hi:
            return 0.0
        pdf = self.dist.pdf
        pts = [0.0] if lo < 0.0 < hi else None
        if pts and (np.isinf(lo) or np.isinf(hi)):
            # quad rejects break points on infinite ranges
            left, _ = integrate.quad(lambda t: fn(t) * pdf(t), lo, 0.0, limit=200, epsabs=1e-13, epsrel=1e-12)
            right, _ = integrate.quad(lambda t: fn(t) * pdf(t), 0.0, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
            return float(left + right)
        val, _ = integrate.quad(lambda t: fn(t) * pdf(t), lo, hi, points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)
        return float(val)

    def abs_moment(self, alpha: float) -> float:
        f, p = self.family, self.params
        if f == "normal" and alpha == 2:
            return p[0] ** 2 + p[1]
        if f == "lognormal":
            return math.exp(alpha * p[0] + 0.5 * alpha**2 * p[1] ** 2)
        if f == "exponential":
            return p[0] ** alpha * math.gamma(alpha + 1.0)
        return self.expect(lambda t: abs(t) ** alpha)

    def pos_moment(self, alpha: float) -> float:
        if self.family in ("lognormal", "exponential"):
            return self.abs_moment(alpha)
        return self.expect(lambda t: t**alpha, lb=0.0)

    def neg_moment(self, alpha: float) -> float:
        if self.family in ("lognormal", "exponential"):
            return 0.0
        return self.expect(lambda t: (-t) ** alpha, ub=0.0)

    @property
    def is_nonnegative(self) -> bool:
        return self.dist.support()[0] >= 0


Law = Union[DiscreteLaw, ParametricLaw]


@dataclass(frozen=True)
class TailChainSpec:
    """Law of a Markov spectral tail chain: tail balance, index and forward increment laws.

    ``b1_law`` may be ``None`` when ``p == 1`` (and ``a1_law`` when
    ``p == 0``): the law of an increment out of a state of probability zero
    is immaterial.
    """

    p: float
    alpha: float
    a1_law: Law | None
    b1_law: Law | None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if self.p > 0 and self.a1_law is None:
            raise ValidationError("p > 0 requires a law for A1")
        if self.p < 1 and self.b1_law is None:
            raise ValidationError("p < 1 requires a law for B1")
        mass = self.theta_minus1_mass()
        if mass > 1.0 + VALIDITY_TOL:
            raise ValidationError(
                f"p E|A1|^a + (1-p) E|B1|^a = {mass:.12g} exceeds 1; P(Theta_-1 != 0) cannot exceed one"
            )

    def _moment(self, law: Law | None, kind: str) -> float:
        if law is None:
            return 0.0
        return getattr(law, f"{kind}_moment")(self.alpha)

    def theta_minus1_mass(self) -> float:
        """``P(Theta_{-1} != 0) = E|Theta_1|^alpha``."""
        out = 0.0
        if self.p > 0:
            out += self.p * self._moment(self.a1_law, "abs")
        if self.p < 1:
            out += (1.0 - self.p) * self._moment(self.b1_law, "abs")
        return out

    @property
    def is_discrete(self) -> bool:
        return all(law is None or isinstance(law, DiscreteLaw) for law in (self.a1_law, self.b1_law))

    @property
    def is_nonnegative(self) -> bool:
        """Chain started at +1 never leaves [0, inf)."""
        return self.p == 1.0 and self.a1_law is not None and self.a1_law.is_nonnegative
