from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from tailchain.errors import ValidationError
from tailchain.laws import DiscreteLaw, ParametricLaw, TailChainSpec
from tailchain.models import (
    EVCopulaModel,
    SREConfig,
    TCopulaMarkovConfig,
    cdf_from_corner_limits,
    copula_corner_limits,
    default_sre_config,
    simulate_spectral_tail_chain,
    simulate_sre,
    simulate_sre_batch,
    simulate_tcopula_batch,
    simulate_tcopula_chain,
    sre_tail_spec,
    t_cdf,
    t_lower_quantile,
    t_quantile,
    t_transform,
    tcopula_partial,
    true_cdf_A1_evcopula,
    true_cdf_A1_tcopula,
    true_cdf_B1_tcopula,
)

CFG = TCopulaMarkovConfig()


def mp_t_cdf(nu, x):
    nu, x = mp.mpf(nu), mp.mpf(x)
    c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))
    return mp.mpf(1) / 2 + mp.quad(lambda t: c * (1 + t * t / nu) ** (-(nu + 1) / 2), [0, x])


@pytest.mark.parametrize("nu", [1.0, 2.0, 2.5, 3.5])
@pytest.mark.parametrize("x", [-7.0, -1.0, 0.3, 2.0])
def test_t_cdf_against_mpmath(nu, x):
    mp.mp.dps = 30
    assert t_cdf(nu, x) == pytest.approx(float(mp_t_cdf(nu, x)), rel=1e-12)


@pytest.mark.parametrize("nu", [1.0, 2.0])
def test_closed_form_quantiles(nu):
    s = np.array([1e-12, 1e-6, 0.01, 0.3, 0.5])
    assert np.allclose(t_lower_quantile(nu, s), special.stdtrit(nu, s), rtol=1e-9)


@given(st.floats(-1e4, 1e4))
def test_t_transform_identity(x):
    assert t_transform(x, 2.5, 2.5) == pytest.approx(x, rel=1e-9, abs=1e-12)


def test_t_quantile_symmetry():
    u = np.array([1e-9, 0.2, 0.8, 1 - 1e-9])
    q = t_quantile(3.0, u)
    assert q[0] == pytest.approx(-q[3]) and q[1] == pytest.approx(-q[2])


# frozen from an independent 30-digit evaluation of the t_{3.5} cdf at
# (x^{2/2.5} - 0.2) sqrt(3.5 / 0.96) for x >= 0 and -(|x|^{2/2.5} + 0.2) sqrt(3.5 / 0.96) for x < 0
FROZEN_A1 = {
    -1.0: 0.046606747857045148,
    0.0: 0.362290794826508216,
    1.0: 0.894386258828947476,
    2.0: 0.975056486326544359,
}


@pytest.mark.parametrize("x", sorted(FROZEN_A1))
def test_tcopula_true_cdf_frozen(x):
    assert true_cdf_A1_tcopula(CFG)(x) == pytest.approx(FROZEN_A1[x], abs=1e-13)


def test_tcopula_cdf_continuous_at_zero_and_symmetric_for_half():
    f = true_cdf_A1_tcopula(CFG)
    assert f(-1e-12) == pytest.approx(f(0.0), abs=1e-9)
    g = true_cdf_B1_tcopula(CFG)
    x = np.linspace(-3, 3, 13)
    assert np.allclose(f(x), g(x))
    assert np.all(np.diff(f(np.linspace(-5, 5, 101))) >= 0)


def test_corner_limits_converge_to_closed_form():
    part = tcopula_partial(CFG.nu_copula, CFG.rho)
    x = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    numeric = cdf_from_corner_limits(part, CFG.alpha, 0.5, 1e-6)(x)
    assert np.max(np.abs(numeric - true_cdf_A1_tcopula(CFG)(x))) < 1e-3


def test_radial_symmetry_of_corners():
    part = tcopula_partial(2.5, 0.4)
    lim = copula_corner_limits(part, np.array([0.3, 1.0, 4.0]), 1e-8)
    assert np.allclose(lim["eta11"] + lim["eta00"], 1.0, atol=1e-6)
    assert np.allclose(lim["eta10"] + lim["eta01"], 1.0, atol=1e-6)


def test_tcopula_determinism_and_batch_rows():
    seeds = [np.random.SeedSequence(9, spawn_key=(i,)) for i in range(3)]
    batch = simulate_tcopula_batch(CFG, 300, seeds)
    one = simulate_tcopula_chain(CFG, 300, np.random.SeedSequence(9, spawn_key=(1,)))
    assert np.array_equal(batch[1], one.values)
    assert np.array_equal(simulate_tcopula_batch(CFG, 300, seeds), batch)


def test_tcopula_margin_is_t():
    x = simulate_tcopula_chain(TCopulaMarkovConfig(burn_in=100), 20_000, 1).values
    # thin the chain to weaken serial dependence before the KS test
    assert stats.kstest(x[::5], stats.t(2.0).cdf).pvalue > 1e-3


def test_uncorrelated_copula_has_no_sign_autocorrelation():
    x = simulate_tcopula_chain(TCopulaMarkovConfig(rho=0.0, burn_in=10), 40_000, 4).values
    s = np.sign(x)
    assert abs(np.mean(s[1:] * s[:-1])) < 0.03


def test_invalid_tcopula_config():
    with pytest.raises(ValidationError):
        TCopulaMarkovConfig(rho=1.0)


# -- extreme-value copulas ------------------------------------------------------

EV_MODELS = [
    EVCopulaModel("asymmetric_logistic", 2.0, 0.6, 0.9),
    EVCopulaModel("asymmetric_logistic", 1.0, 1.0, 1.0),
    EVCopulaModel("asymmetric_negative_logistic", 0.7, 0.8, 0.5),
    EVCopulaModel("asymmetric_negative_logistic", 3.0, 1.0, 1.0),
]


@pytest.mark.parametrize("m", EV_MODELS, ids=lambda m: f"{m.family}-{m.theta}")
def test_pickands_bounds_and_convexity(m):
    w = np.linspace(0, 1, 401)
    d = m.pickands(w)
    assert np.all(d <= 1 + 1e-12) and np.all(d >= np.maximum(w, 1 - w) - 1e-12)
    assert d[0] == pytest.approx(1.0) and d[-1] == pytest.approx(1.0)
    assert np.all(np.diff(d, 2) >= -1e-12)


@pytest.mark.parametrize("m", EV_MODELS, ids=lambda m: f"{m.family}-{m.theta}")
def test_pickands_derivative_finite_difference(m):
    w = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (m.pickands(w + h) - m.pickands(w - h)) / (2 * h)
    assert np.allclose(m.pickands_derivative(w), fd, atol=1e-7)


def test_gumbel_special_case():
    m = EVCopulaModel("asymmetric_logistic", 2.5)
    w = np.linspace(0, 1, 11)
    assert np.allclose(m.pickands(w), (w**2.5 + (1 - w) ** 2.5) ** (1 / 2.5))
    assert m.atom_at_zero() == pytest.approx(0.0, abs=1e-15)


def test_atom_at_zero_for_asymmetric_model():
    m = EVCopulaModel("asymmetric_logistic", 2.0, 0.6, 0.9)
    assert m.atom_at_zero() == pytest.approx(1 - 0.9, abs=1e-12)
    f = true_cdf_A1_evcopula(m, 2.0)
    assert f(1e-9) == pytest.approx(m.atom_at_zero(), abs=1e-6)


@pytest.mark.parametrize("m", EV_MODELS, ids=lambda m: f"{m.family}-{m.theta}")
def test_ev_generic_matches_closed_form(m):
    x = np.linspace(0.02, 5, 50)
    g = true_cdf_A1_evcopula(m, 1.5)(x)
    c = true_cdf_A1_evcopula(m, 1.5, closed_form=True)(x)
    assert np.max(np.abs(g - c)) < 1e-10
    assert np.all(true_cdf_A1_evcopula(m, 1.5)(-x) == 0.0)


def test_unknown_ev_family():
    with pytest.raises(ValidationError):
        EVCopulaModel("gaussian", 1.0)  # type: ignore[arg-type]


# -- stochastic recurrence ------------------------------------------------------

def test_default_sre_law():
    cfg = default_sre_config()
    assert abs(cfg.kesten_moment() - 1.0) <= 1e-12
    assert cfg.c_law.cdf(0.0) == pytest.approx(0.361836804915881533, abs=1e-12)
    assert cfg.check_contractive() < 0


def test_sre_with_zero_coefficient_is_iid_noise():
    d = ParametricLaw("normal", (0.0, 1.0))
    cfg = SREConfig(DiscreteLaw.point(0.0), d, burn_in=5)
    x = simulate_sre(cfg, 50, 3).values
    rng = np.random.default_rng(3)
    cfg.c_law.sample(rng, 55)
    assert np.array_equal(x, d.sample(rng, 55)[5:])


def test_sre_rejects_noncontractive_law():
    cfg = SREConfig(ParametricLaw("normal", (3.0, 1.0)), ParametricLaw("normal", (0.0, 1.0)))
    with pytest.raises(ValidationError):
        simulate_sre(cfg, 10, 0)


def test_sre_batch_rows_match_single_runs():
    cfg = default_sre_config(burn_in=50)
    seeds = [np.random.SeedSequence(1, spawn_key=(i,)) for i in range(2)]
    rows = simulate_sre_batch(cfg, 100, seeds)
    assert np.array_equal(rows[1], simulate_sre(cfg, 100, seeds[1]).values)


def test_sre_tail_spec():
    spec = sre_tail_spec(default_sre_config())
    assert spec.p == 0.5 and spec.a1_law == spec.b1_law


# -- spectral tail chain --------------------------------------------------------

def test_spectral_chain_degenerate_p_one():
    spec = TailChainSpec(1.0, 1.0, DiscreteLaw([0.5, 1.5], [0.5, 0.5]), None)
    path = simulate_spectral_tail_chain(spec, 3, 0, n_paths=500)
    assert np.all(path.theta[:, 3] == 1.0)
    assert np.all(path.theta >= 0)
    assert path.times.tolist() == [-3, -2, -1, 0, 1, 2, 3]


def test_spectral_chain_sign_balance_and_pareto_radius():
    law = DiscreteLaw([-0.5, 0.8], [0.5, 0.5])
    spec = TailChainSpec(0.3, 2.0, law, law)
    path = simulate_spectral_tail_chain(spec, 2, 1, n_paths=200_000)
    assert np.mean(path.theta[:, 2] == 1.0) == pytest.approx(0.3, abs=0.005)
    assert np.mean(path.abs_y0 > 2.0) == pytest.approx(2.0**-2, abs=0.005)
    assert np.allclose(path.y, path.abs_y0[:, None] * path.theta)


def test_spectral_chain_forward_marginal_matches_law():
    law = DiscreteLaw([-0.5, 0.8], [0.25, 0.75])
    spec = TailChainSpec(0.5, 1.0, law, law)
    path = simulate_spectral_tail_chain(spec, 1, 2, n_paths=100_000)
    inc = path.theta[:, 2] / path.theta[:, 1]
    assert np.mean(inc == 0.8) == pytest.approx(0.75, abs=0.01)


def test_spectral_chain_parametric_has_no_backward_half():
    c = ParametricLaw("normal", (1 / 3, 8 / 9))
    path = simulate_spectral_tail_chain(TailChainSpec(0.5, 2.0, c, c), 2, 0, n_paths=10)
    assert np.all(np.isnan(path.theta[:, :2])) and np.all(np.isfinite(path.theta[:, 2:]))
