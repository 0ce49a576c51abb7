"""Exact identities for Markov spectral tail chains with discrete increment laws.

Everything here is a finite sum over atoms, so the functions double as
oracles for the estimators and simulators: forward/backward duality of the
increment laws, brute-force evaluation of both sides of the time-change
formula, the index-one standardization, and the sign-balance check that
applies when ``A1`` and ``B1`` share a law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import BranchUndefinedError, ContractError, ResourceError, ValidationError
from .laws import DiscreteLaw, Law, ParametricLaw, TailChainSpec, VALIDITY_TOL

DEFAULT_PATH_CAP = 10_000_000


def _dual(a: DiscreteLaw | None, b: DiscreteLaw | None, p: float, alpha: float):
    """Map the increment laws at one time direction to the other direction.

    The same finite sums serve both ways because the identities are symmetric
    in the time instances 1 and -1.  Returns ``None`` for a branch whose sign
    has probability zero.
    """
    for law in (a, b):
        if law is not None and not isinstance(law, DiscreteLaw):
            raise TypeError("exact duality needs discrete laws")

    def pieces(same, other, ratio):
        atoms, masses = [], []
        if same is not None:
            sel = same.atoms > 0
            atoms.append(1.0 / same.atoms[sel])
            masses.append(same.masses[sel] * same.atoms[sel] ** alpha)
        if other is not None and ratio > 0:
            sel = other.atoms < 0
            atoms.append(1.0 / other.atoms[sel])
            masses.append(ratio * other.masses[sel] * np.abs(other.atoms[sel]) ** alpha)
        if not atoms:
            return np.empty(0), np.empty(0)
        return np.concatenate(atoms), np.concatenate(masses)

    out_a = out_b = None
    if p > 0:
        atoms, masses = pieces(a, b, (1.0 - p) / p)
        try:
            out_a = DiscreteLaw.from_pairs(atoms, masses, residual_to_zero=True)
        except ValidationError as exc:
            raise ValidationError(f"derived law of the A increment is not a probability law: {exc}") from None
    if p < 1:
        atoms, masses = pieces(b, a, p / (1.0 - p))
        try:
            out_b = DiscreteLaw.from_pairs(atoms, masses, residual_to_zero=True)
        except ValidationError as exc:
            raise ValidationError(f"derived law of the B increment is not a probability law: {exc}") from None
    return out_a, out_b


def backward_from_forward(spec: TailChainSpec) -> tuple[DiscreteLaw | None, DiscreteLaw | None, float]:
    """Laws of ``A_{-1}`` and ``B_{-1}`` from those of ``A1`` and ``B1``.

    Returns ``(a_minus1, b_minus1, p_check)`` where ``p_check`` is
    ``P(Theta_{-1} != 0)`` computed from the derived laws.  A law is ``None``
    when its conditioning sign has probability zero (``p`` in {0, 1}).

    Raises:
        ValidationError: a derived law would carry more than unit mass.
        TypeError: ``spec`` holds non-discrete laws.
    """
    a_m1, b_m1 = _dual(spec.a1_law, spec.b1_law, spec.p, spec.alpha)
    p_check = 0.0
    if a_m1 is not None:
        p_check += spec.p * float(a_m1.masses[a_m1.atoms != 0].sum())
    if b_m1 is not None:
        p_check += (1.0 - spec.p) * float(b_m1.masses[b_m1.atoms != 0].sum())
    return a_m1, b_m1, p_check


def forward_from_backward(a_minus1: DiscreteLaw | None, b_minus1: DiscreteLaw | None, p: float,
                          alpha: float) -> tuple[DiscreteLaw | None, DiscreteLaw | None]:
    """Laws of ``A1`` and ``B1`` from those of ``A_{-1}`` and ``B_{-1}``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    return _dual(a_minus1, b_minus1, p, alpha)


def standardize_spec(spec: TailChainSpec) -> TailChainSpec:
    """Increments ``a -> sign(a)|a|^alpha`` and index one; ``p`` is kept."""

    def std(law):
        if law is None:
            return None
        if not isinstance(law, DiscreteLaw):
            raise TypeError("standardization is implemented for discrete laws")
        return DiscreteLaw.from_pairs(np.sign(law.atoms) * np.abs(law.atoms) ** spec.alpha, law.masses)

    return TailChainSpec(spec.p, 1.0, std(spec.a1_law), std(spec.b1_law))


# -- path enumeration ----------------------------------------------------------

def _extend(states: np.ndarray, probs: np.ndarray, pos_law, neg_law, cap: int):
    """One Markov step of every enumerated path; 0 stays at 0 with no branching."""
    new_states, new_probs, parent = [], [], []
    for sign, law in ((1, pos_law), (-1, neg_law)):
        idx = np.flatnonzero(np.sign(states) == sign)
        if idx.size == 0:
            continue
        if law is None:
            raise BranchUndefinedError(
                f"the chain reaches a {'positive' if sign > 0 else 'negative'} state but that branch has no law"
            )
        atoms, masses = law.atoms, law.masses
        parent.append(np.repeat(idx, atoms.size))
        new_states.append((states[idx][:, None] * atoms[None, :]).ravel())
        new_probs.append((probs[idx][:, None] * masses[None, :]).ravel())
    idx = np.flatnonzero(states == 0)
    if idx.size:
        parent.append(idx)
        new_states.append(np.zeros(idx.size))
        new_probs.append(probs[idx])
    order = np.concatenate(parent)
    total = order.size
    if total > cap:
        raise ResourceError(f"path enumeration needs {total} paths, above the cap {cap}")
    return np.concatenate(new_states), np.concatenate(new_probs), order


def enumerate_paths(spec: TailChainSpec, lo: int, hi: int, cap: int = DEFAULT_PATH_CAP):
    """All paths ``(Theta_lo, ..., Theta_hi)`` with their probabilities, ``lo <= 0 <= hi``.

    Returns ``(paths, probs)`` with ``paths[:, j]`` holding ``Theta_{lo+j}``.
    Zero-probability paths are dropped.
    """
    if not lo <= 0 <= hi:
        raise ValueError("the window must contain time 0")
    if not spec.is_discrete:
        raise TypeError("path enumeration needs discrete laws")
    a_m1 = b_m1 = None
    if lo < 0:
        a_m1, b_m1, _ = backward_from_forward(spec)
    starts = [(s, w) for s, w in ((1.0, spec.p), (-1.0, 1.0 - spec.p)) if w > 0]
    cols = [np.array([s for s, _ in starts])]
    probs = np.array([w for _, w in starts])
    # forward half
    fwd_cols = [cols[0]]
    for _ in range(hi):
        nxt, probs, parent = _extend(fwd_cols[-1], probs, spec.a1_law, spec.b1_law, cap)
        fwd_cols = [c[parent] for c in fwd_cols] + [nxt]
    # backward half, conditionally independent of the forward half given Theta_0
    bwd_cols: list[np.ndarray] = []
    cur = fwd_cols[0]
    for _ in range(-lo):
        nxt, probs, parent = _extend(cur, probs, a_m1, b_m1, cap)
        fwd_cols = [c[parent] for c in fwd_cols]
        bwd_cols = [c[parent] for c in bwd_cols] + [nxt]
        cur = nxt
    paths = np.column_stack(bwd_cols[::-1] + fwd_cols)
    keep = probs > 0
    return paths[keep], probs[keep]


def verify_time_change(
    spec: TailChainSpec,
    f: Callable[[np.ndarray], np.ndarray],
    s: int,
    t: int,
    i: int,
    horizon: int | None = None,
    cap: int = DEFAULT_PATH_CAP,
) -> tuple[float, float]:
    """Both sides of the time-change formula, computed by exact path enumeration.

    ``f`` receives an array of shape ``(npaths, t - s + 1)`` whose column
    ``j`` holds ``y_{s+j}`` and must return one value per row.  It has to
    vanish whenever ``y_0 = 0``.

    Returns:
        ``(lhs, rhs)`` with ``lhs = E f(Theta_{s-i}, ..., Theta_{t-i})`` and
        ``rhs = E f(Theta_s/|Theta_i|, ..., Theta_t/|Theta_i|) |Theta_i|^alpha 1(Theta_i != 0)``.

    Raises:
        ContractError: ``f`` does not vanish at ``y_0 = 0``.
        ResourceError: the enumeration exceeds ``cap`` paths.
    """
    if not s <= 0 <= t:
        raise ValueError(f"need s <= 0 <= t, got s={s}, t={t}")
    if horizon is not None and max(abs(s - i), abs(t - i), abs(s), abs(t), abs(i)) > horizon:
        raise ValueError(f"window exceeds the horizon {horizon}")
    lo = min(s - i, s, i, 0)
    hi = max(t - i, t, i, 0)
    paths, probs = enumerate_paths(spec, lo, hi, cap)

    def window(a, b):
        return paths[:, a - lo : b - lo + 1]

    lhs_in = window(s - i, t - i)
    rhs_state = paths[:, i - lo]
    alive = rhs_state != 0
    rhs_in = window(s, t)[alive] / np.abs(rhs_state[alive])[:, None]

    for probe in (lhs_in, rhs_in):
        if probe.shape[0] == 0:
            continue
        z = probe.copy()
        z[:, -s] = 0.0
        if np.any(np.asarray(f(z), dtype=float) != 0.0):
            raise ContractError("f must vanish whenever y_0 = 0")

    lhs = float(np.sum(probs * np.asarray(f(lhs_in), dtype=float)))
    w = probs[alive] * np.abs(rhs_state[alive]) ** spec.alpha
    rhs = float(np.sum(w * np.asarray(f(rhs_in), dtype=float))) if rhs_in.shape[0] else 0.0
    return lhs, rhs


def time_change_gap(lhs: float, rhs: float) -> float:
    """``|lhs - rhs|`` relative to ``max(1, |lhs|)``.

    Absolute for bounded functionals; power functionals can reach large
    values when derived atoms are reciprocals of small ones.
    """
    return abs(lhs - rhs) / max(1.0, abs(lhs))


# -- sign balance --------------------------------------------------------------

@dataclass(frozen=True)
class TailSignVerdict:
    status: Literal["pass", "fail", "not_applicable"]
    mu_minus: float = float("nan")
    residual: float = float("nan")
    law_deviation: float = float("nan")
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _same_law(a: Law | None, b: Law | None) -> bool:
    if a is None or b is None:
        return a is b
    if isinstance(a, DiscreteLaw) and isinstance(b, DiscreteLaw):
        return a.close_to(b)
    if isinstance(a, ParametricLaw) and isinstance(b, ParametricLaw):
        return a == b
    return False


def check_tailsign(spec: TailChainSpec, tol: float = 1e-9) -> TailSignVerdict:
    """Check the sign-balance consequence of ``law(A1) = law(B1)`` with ``E|A1|^alpha = 1``.

    Under those two conditions ``Theta_{-1}/Theta_0`` is independent of
    ``Theta_0``, so the derived ``A_{-1}`` and ``B_{-1}`` laws coincide, and
    ``(1 - 2p) E[(A1^-)^alpha]`` must vanish.
    """
    if spec.p in (0.0, 1.0):
        return TailSignVerdict("not_applicable", message="p in {0, 1}: the sign of Theta_0 is degenerate")
    if not _same_law(spec.a1_law, spec.b1_law):
        return TailSignVerdict("not_applicable", message="law(A1) differs from law(B1)")
    law = spec.a1_law
    m = law.abs_moment(spec.alpha)
    if abs(m - 1.0) > tol:
        return TailSignVerdict("not_applicable", message=f"E|A1|^alpha = {m!r} is not 1")
    mu_minus = law.neg_moment(spec.alpha)
    residual = (1.0 - 2.0 * spec.p) * mu_minus
    problems = []
    if abs(residual) > tol:
        problems.append(f"(1 - 2p) mu_- = {residual:.6g} != 0")
    deviation = float("nan")
    if isinstance(law, DiscreteLaw):
        try:
            a_m1, b_m1, _ = backward_from_forward(spec)
        except ValidationError as exc:
            problems.append(str(exc))
        else:
            deviation = a_m1.max_deviation(b_m1)
            if not a_m1.close_to(b_m1, tol):
                problems.append(f"derived A_-1 and B_-1 laws differ (max cdf gap {deviation:.6g})")
    status = "fail" if problems else "pass"
    return TailSignVerdict(status, mu_minus, residual, deviation, "; ".join(problems))


def random_discrete_spec(rng: np.random.Generator, max_atoms: int = 4, alpha: float | None = None,
                         mixed_sign: bool = True) -> TailChainSpec:
    """Random spec whose derived backward laws are proper probability laws.

    Masses are drawn first and the atoms then scaled so that each derived
    law keeps total mass below one.
    """
    if alpha is None:
        alpha = float(rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
    p = float(rng.uniform(0.2, 0.8)) if mixed_sign else 1.0

    def draw():
        k = int(rng.integers(1, max_atoms + 1))
        mags = rng.uniform(0.1, 2.0, size=k)
        signs = rng.choice([-1.0, 1.0], size=k) if mixed_sign else np.ones(k)
        atoms = np.unique(signs * mags)
        masses = rng.dirichlet(np.ones(atoms.size))
        return atoms, masses

    a_at, a_m = draw()
    b_at, b_m = draw()
    q = 1.0 - p
    ratio_a = q / p
    ratio_b = p / q if q > 0 else 0.0

    def loads(scale_a, scale_b):
        def part(at, m, sign, c):
            sel = np.sign(at) == sign
            return float(np.sum(m[sel] * np.abs(c * at[sel]) ** alpha))

        la = part(a_at, a_m, 1, scale_a) + ratio_a * part(b_at, b_m, -1, scale_b)
        lb = part(b_at, b_m, 1, scale_b) + ratio_b * part(a_at, a_m, -1, scale_a)
        return la, lb

    la, lb = loads(1.0, 1.0)
    target = float(rng.uniform(0.3, 0.95))
    c = (target / max(la, lb, VALIDITY_TOL)) ** (1.0 / alpha)
    a_law = DiscreteLaw.from_pairs(c * a_at, a_m)
    b_law = DiscreteLaw.from_pairs(c * b_at, b_m)
    if not mixed_sign:
        b_law = None
    return TailChainSpec(p, alpha, a_law, b_law)


def functional_family(width: int, zero_col: int) -> list[tuple[str, Callable[[np.ndarray], np.ndarray]]]:
    """Indicator and power functionals of a window of ``width`` values, all vanishing at ``y_0 = 0``.

    ``zero_col`` is the column holding ``y_0``; the functionals follow the
    calling convention of :func:`verify_time_change`.
    """
    z = zero_col
    out: list[tuple[str, Callable[[np.ndarray], np.ndarray]]] = [
        ("y0_pos", lambda y: (y[:, z] > 0).astype(float)),
        ("abs_y0_pow", lambda y: np.abs(y[:, z]) ** 0.7),
        ("sqrt_prod_abs", lambda y: np.prod(np.abs(y), axis=1) ** 0.5 * (y[:, z] != 0)),
    ]
    for j in range(width):
        out.append((f"y0_times_y{j}", lambda y, j=j: y[:, z] * y[:, j]))
        for c in (-0.5, 0.0, 0.8):
            out.append((
                f"y0_pos_and_y{j}_gt_{c}",
                lambda y, j=j, c=c: ((y[:, z] > 0) & (y[:, j] > c * np.abs(y[:, z]))).astype(float),
            ))
    return out


def windows(max_len: int = 3):
    """All ``(s, t, i)`` with ``s <= 0 <= t``, ``t - s + 1 <= max_len`` and ``|i| <= max_len - 1``."""
    for length in range(1, max_len + 1):
        for s in range(-(length - 1), 1):
            t = s + length - 1
            for i in range(-(max_len - 1), max_len):
                yield s, t, i


__all__ = [
    "backward_from_forward",
    "forward_from_backward",
    "standardize_spec",
    "enumerate_paths",
    "verify_time_change",
    "time_change_gap",
    "check_tailsign",
    "TailSignVerdict",
    "random_discrete_spec",
    "functional_family",
    "windows",
]
