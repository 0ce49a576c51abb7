from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from tailchain.errors import ValidationError
from tailchain.laws import DiscreteLaw, ParametricLaw, TailChainSpec


def test_discrete_law_validation():
    with pytest.raises(ValidationError):
        DiscreteLaw([1.0, 2.0], [0.5, 0.6])
    with pytest.raises(ValidationError):
        DiscreteLaw([1.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValidationError):
        DiscreteLaw([1.0], [-1.0])


def test_from_pairs_merges_and_fills_zero():
    law = DiscreteLaw.from_pairs([1.0, 1.0 + 1e-14, 2.0], [0.2, 0.2, 0.3], residual_to_zero=True)
    assert law.atoms.tolist() == [0.0, 1.0, 2.0]
    assert law.masses.tolist() == pytest.approx([0.3, 0.4, 0.3], abs=1e-15)
    with pytest.raises(ValidationError):
        DiscreteLaw.from_pairs([1.0], [1.2], residual_to_zero=True)


def test_discrete_cdf_and_moments():
    law = DiscreteLaw([-1.0, 0.5, 2.0], [0.25, 0.25, 0.5])
    assert law.cdf([-2.0, -1.0, 0.0, 0.5, 3.0]).tolist() == [0.0, 0.25, 0.25, 0.5, 1.0]
    assert law.sf(0.5) == 0.5
    assert law.abs_moment(2.0) == pytest.approx(0.25 + 0.0625 + 2.0)
    assert law.neg_moment(2.0) == pytest.approx(0.25)
    assert law.pos_moment(2.0) == pytest.approx(0.0625 + 2.0)


@given(st.floats(-3, 3), st.floats(0.1, 2.0))
def test_parametric_moments_match_quadrature(mean, var):
    law = ParametricLaw("normal", (mean, var))
    closed = law.abs_moment(2.0)
    assert closed == pytest.approx(mean**2 + var, rel=1e-12)
    split = law.pos_moment(2.0) + law.neg_moment(2.0)
    assert split == pytest.approx(closed, rel=1e-8)


def test_lognormal_and_exponential_moments():
    ln = ParametricLaw("lognormal", (-0.125, 0.5))
    assert ln.abs_moment(1.0) == pytest.approx(1.0, abs=1e-15)
    assert ln.abs_moment(1.5) == pytest.approx(ln.expect(lambda t: t**1.5), rel=1e-8)
    ex = ParametricLaw("exponential", (2.0,))
    assert ex.abs_moment(3.0) == pytest.approx(8.0 * 6.0)
    assert ex.neg_moment(3.0) == 0.0


def test_parametric_parse_round_trip():
    law = ParametricLaw("normal", (1 / 3, 8 / 9))
    assert ParametricLaw.parse(str(law)) == law
    with pytest.raises(ValidationError):
        ParametricLaw.parse("cauchy(0, 1)")
    with pytest.raises(ValidationError):
        ParametricLaw("normal", (0.0, -1.0))


def test_parametric_cdf_matches_scipy():
    law = ParametricLaw("uniform", (-1.0, 3.0))
    assert law.cdf(1.0) == pytest.approx(stats.uniform(-1, 4).cdf(1.0))


def test_spec_validity():
    a = DiscreteLaw([0.5, 1.5], [0.5, 0.5])
    spec = TailChainSpec(1.0, 1.0, a, None)
    assert spec.theta_minus1_mass() == pytest.approx(1.0)
    assert spec.is_nonnegative and spec.is_discrete
    with pytest.raises(ValidationError, match="exceeds 1"):
        TailChainSpec(1.0, 2.0, a, None)
    with pytest.raises(ValidationError):
        TailChainSpec(0.5, 1.0, a, None)
    with pytest.raises(ValidationError):
        TailChainSpec(1.5, 1.0, a, None)


def test_sre_normal_law_has_unit_second_moment():
    c = ParametricLaw("normal", (1 / 3, 8 / 9))
    assert abs(c.abs_moment(2.0) - 1.0) <= 1e-12
    assert c.cdf(0.0) == pytest.approx(stats.norm.cdf(-(1 / 3) / math.sqrt(8 / 9)), abs=1e-15)
    assert c.cdf(0.0) == pytest.approx(0.361836804915881533, abs=1e-12)


def test_sampling_is_reproducible():
    law = DiscreteLaw([-1.0, 2.0], [0.3, 0.7])
    a = law.sample(np.random.default_rng(1), 100)
    b = law.sample(np.random.default_rng(1), 100)
    assert np.array_equal(a, b) and set(np.unique(a)) <= {-1.0, 2.0}
