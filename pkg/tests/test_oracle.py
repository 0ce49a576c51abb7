from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailchain.errors import BranchUndefinedError, ContractError, ResourceError, ValidationError
from tailchain.laws import DiscreteLaw, ParametricLaw, TailChainSpec
from tailchain.oracle import (
    backward_from_forward,
    check_tailsign,
    enumerate_paths,
    forward_from_backward,
    functional_family,
    random_discrete_spec,
    standardize_spec,
    time_change_gap,
    verify_time_change,
    windows,
)

HALF = DiscreteLaw([0.5, 1.5], [0.5, 0.5])


def test_backward_hand_example():
    a_m1, b_m1, p_check = backward_from_forward(TailChainSpec(1.0, 1.0, HALF, None))
    assert b_m1 is None
    assert a_m1.close_to(DiscreteLaw([2 / 3, 2.0], [0.75, 0.25]))
    assert p_check == pytest.approx(1.0, abs=1e-15)
    a1, _ = forward_from_backward(a_m1, None, 1.0, 1.0)
    assert a1.close_to(HALF)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_unit_law_is_fixed_point(alpha):
    a_m1, _, _ = backward_from_forward(TailChainSpec(1.0, alpha, DiscreteLaw.point(1.0), None))
    assert a_m1.close_to(DiscreteLaw.point(1.0))


def test_residual_mass_goes_to_zero():
    law = DiscreteLaw([0.4, 1.2], [0.5, 0.5])  # E A = 0.8
    a_m1, _, p_check = backward_from_forward(TailChainSpec(1.0, 1.0, law, None))
    assert a_m1.cdf(0.0) == pytest.approx(0.2, abs=1e-15)
    assert p_check == pytest.approx(0.8, abs=1e-15)


def test_derived_mass_above_one_is_rejected():
    # forward spec is valid (total mass 0.75) but B_-1 would need mass 3
    spec = TailChainSpec(0.75, 1.0, DiscreteLaw([-1.0], [1.0]), DiscreteLaw([0.0], [1.0]))
    with pytest.raises(ValidationError, match="B increment"):
        backward_from_forward(spec)


def test_mixed_sign_branch_undefined_in_enumeration():
    spec = TailChainSpec(1.0, 1.0, DiscreteLaw([-0.5, 0.5], [0.5, 0.5]), None)
    with pytest.raises(BranchUndefinedError):
        enumerate_paths(spec, 0, 2)


def test_round_trip_random_specs():
    rng = np.random.default_rng(11)
    for _ in range(50):
        spec = random_discrete_spec(rng)
        a_m1, b_m1, p_check = backward_from_forward(spec)
        assert abs(p_check - spec.theta_minus1_mass()) <= 1e-12
        a1, b1 = forward_from_backward(a_m1, b_m1, spec.p, spec.alpha)
        assert spec.a1_law.max_deviation(a1) <= 1e-12
        assert spec.b1_law.max_deviation(b1) <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    spec = random_discrete_spec(rng, mixed_sign=bool(rng.integers(2)))
    a_m1, b_m1, _ = backward_from_forward(spec)
    a1, b1 = forward_from_backward(a_m1, b_m1, spec.p, spec.alpha)
    for orig, back in ((spec.a1_law, a1), (spec.b1_law, b1)):
        if orig is not None:
            assert orig.max_deviation(back) <= 1e-12


def test_identity_time_shift_gives_p():
    spec = random_discrete_spec(np.random.default_rng(3))
    lhs, rhs = verify_time_change(spec, lambda y: (y[:, 0] == 1.0).astype(float), 0, 0, 0)
    assert lhs == pytest.approx(spec.p, abs=1e-15) and rhs == pytest.approx(spec.p, abs=1e-15)


def test_time_change_exhaustive():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(4):
        spec = random_discrete_spec(rng)
        for s, t, i in windows(3):
            for _, f in functional_family(t - s + 1, -s):
                lhs, rhs = verify_time_change(spec, f, s, t, i)
                worst = max(worst, time_change_gap(lhs, rhs))
    assert worst <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from(list(windows(3))))
def test_time_change_property(seed, win):
    spec = random_discrete_spec(np.random.default_rng(seed), max_atoms=3)
    s, t, i = win
    for _, f in functional_family(t - s + 1, -s):
        lhs, rhs = verify_time_change(spec, f, s, t, i)
        assert time_change_gap(lhs, rhs) <= 1e-12


def test_one_step_indicator_matches_duality():
    spec = TailChainSpec(1.0, 1.0, HALF, None)
    a_m1, _, _ = backward_from_forward(spec)
    for c in (0.3, 0.7, 1.0, 1.6):
        f = lambda y, c=c: ((y[:, 0] == 1.0) & (y[:, 1] > c)).astype(float)
        lhs, rhs = verify_time_change(spec, f, 0, 1, 0)
        direct = float(np.sum(a_m1.masses * a_m1.atoms * (1.0 / np.where(a_m1.atoms > 0, a_m1.atoms, np.inf) > c)))
        assert lhs == pytest.approx(HALF.sf(c), abs=1e-15)
        assert lhs == pytest.approx(direct, abs=1e-15)


@pytest.mark.parametrize("y", [0.0, 0.7, 1.0])
def test_log_functional(y):
    law = DiscreteLaw([0.4, 0.9, 1.3], [0.3, 0.3, 0.4])
    spec = TailChainSpec(1.0, 1.5, law, None)

    def f(v):
        y0 = v[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y0 > y, -np.log(np.where(y0 > 0, y0, 1.0)), 0.0)

    lhs, rhs = verify_time_change(spec, f, 0, 0, -1)
    direct = -float(np.sum(law.masses * np.log(law.atoms) * (law.atoms > y)))
    a_m1, _, _ = backward_from_forward(spec)
    pos = a_m1.atoms > 0
    am, mm = a_m1.atoms[pos], a_m1.masses[pos]
    dual = float(np.sum(mm * am**1.5 * np.log(am) * (1.0 / am > y)))
    assert lhs == pytest.approx(direct, abs=1e-14)
    assert rhs == pytest.approx(lhs, abs=1e-12)
    assert dual == pytest.approx(lhs, abs=1e-12)


def test_gap_is_absolute_below_one():
    assert time_change_gap(0.5, 0.5 + 1e-13) == pytest.approx(1e-13)
    assert time_change_gap(1e4, 1e4 + 1e-9) == pytest.approx(1e-13)


def test_contract_error_when_f_does_not_vanish():
    spec = random_discrete_spec(np.random.default_rng(1))
    with pytest.raises(ContractError):
        verify_time_change(spec, lambda y: np.ones(y.shape[0]), 0, 1, 1)


def test_resource_cap():
    spec = TailChainSpec(1.0, 1.0, DiscreteLaw([0.2, 0.4, 0.6, 0.8], [0.25] * 4), None)
    with pytest.raises(ResourceError):
        enumerate_paths(spec, -3, 3, cap=100)


def test_standardize_examples():
    spec = TailChainSpec(0.5, 2.0, DiscreteLaw([-0.5, 0.5], [0.5, 0.5]), DiscreteLaw([0.5], [1.0]))
    std = standardize_spec(spec)
    assert std.alpha == 1.0 and std.p == 0.5
    assert std.a1_law.atoms.tolist() == [-0.25, 0.25]
    assert std.theta_minus1_mass() == pytest.approx(spec.theta_minus1_mass(), abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_standardize_commutes_with_duality(seed):
    spec = random_discrete_spec(np.random.default_rng(seed))
    a = backward_from_forward(standardize_spec(spec))
    b = backward_from_forward(spec)
    for star, plain in zip(a[:2], b[:2]):
        transported = DiscreteLaw.from_pairs(np.sign(plain.atoms) * np.abs(plain.atoms) ** spec.alpha,
                                             plain.masses)
        assert star.max_deviation(transported) <= 1e-12


def _symmetric_normal_like():
    # discretized normal(1/3, 8/9), rescaled to unit second moment
    q = np.linspace(0.05, 0.95, 7)
    from scipy import stats

    atoms = stats.norm(1 / 3, np.sqrt(8 / 9)).ppf(q)
    masses = np.full(7, 1 / 7)
    atoms = atoms / np.sqrt(np.sum(masses * atoms**2))
    return DiscreteLaw(atoms, masses)


def test_tailsign_pass_and_fail():
    law = _symmetric_normal_like()
    ok = check_tailsign(TailChainSpec(0.5, 2.0, law, law))
    assert ok.status == "pass" and ok.mu_minus > 0 and ok.law_deviation <= 1e-12
    bad = check_tailsign(TailChainSpec(0.6, 2.0, law, law))
    assert bad.status == "fail"
    assert bad.residual == pytest.approx(-0.2 * bad.mu_minus)
    assert "(1 - 2p)" in bad.message


def test_tailsign_nonnegative_and_not_applicable():
    law = DiscreteLaw([0.5, 1.5], [0.5, 0.5])
    assert check_tailsign(TailChainSpec(0.7, 1.0, law, law)).status == "pass"
    assert check_tailsign(TailChainSpec(1.0, 1.0, law, None)).status == "not_applicable"
    other = DiscreteLaw([0.5], [1.0])
    assert check_tailsign(TailChainSpec(0.5, 1.0, law, other)).status == "not_applicable"
    small = DiscreteLaw([0.5], [1.0])
    assert check_tailsign(TailChainSpec(0.5, 1.0, small, small)).status == "not_applicable"


def test_tailsign_parametric_sre_law():
    c = ParametricLaw("normal", (1 / 3, 8 / 9))
    assert check_tailsign(TailChainSpec(0.5, 2.0, c, c)).status == "pass"
    assert check_tailsign(TailChainSpec(0.4, 2.0, c, c)).status == "fail"
