import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hierpoisson.hierarchy import HierarchyGeometry
from hierpoisson.potential import (
    PotentialModel,
    density_at,
    intensity_F,
    kernel_bound,
    kernel_integral,
    normalizers,
    sample_potential,
    site_probability,
)
from hierpoisson.seeding import realization_seeds, site_uniforms

G2 = HierarchyGeometry(2)


def test_model_validation():
    with pytest.raises(ValueError):
        PotentialModel("cauchy", -1.0)
    with pytest.raises(ValueError):
        PotentialModel("uniform", 0.0)


def test_density_examples():
    assert density_at(PotentialModel("cauchy", 0.0), 17, 0.0) == pytest.approx(1 / math.pi)
    assert density_at(PotentialModel("cauchy", 1.0), 1, 0.0) == pytest.approx(2 / math.pi)


@pytest.mark.parametrize("base", ["cauchy", "gaussian"])
@pytest.mark.parametrize("x", [0, 5, 100])
def test_density_normalized(base, x):
    model = PotentialModel(base, 0.7)
    total, _ = integrate.quad(lambda v: density_at(model, x, v), -np.inf, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_site_probability_matches_quadrature():
    for base in ("cauchy", "gaussian"):
        model = PotentialModel(base, 0.5)
        for x in (0, 3, 40):
            quad, _ = integrate.quad(lambda v: density_at(model, x, v), -0.3, 1.1, epsabs=1e-12)
            assert site_probability(model, x, -0.3, 1.1) == pytest.approx(quad, abs=1e-10)
    assert site_probability(PotentialModel(), 0, 1.0, -1.0) == 0.0


def test_kernel_examples():
    unit = PotentialModel("cauchy", 0.0)
    assert kernel_bound(unit, 0, 1.0) == pytest.approx(0.5)
    assert kernel_integral(unit, 0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-10)
    half = PotentialModel("cauchy", 1.0)  # s_1 = 1/2
    assert kernel_integral(half, 1, 0.25, 0.0) == pytest.approx(1 / 0.75, abs=1e-6)
    assert kernel_bound(half, 1, 1e-9) == pytest.approx(float(half.a(1)), rel=1e-8)


def test_cauchy_kernel_closed_form_off_peak():
    model = PotentialModel("cauchy", 0.5)
    for x, t, s in [(0, 0.3, 1.2), (8, 2.0, -0.7), (3, 0.05, 0.01)]:
        w = float(model.site_scale(x)) + t
        assert kernel_integral(model, x, t, s) == pytest.approx(w / (s * s + w * w), abs=1e-9)


@pytest.mark.parametrize("base", ["cauchy", "gaussian"])
def test_kernel_bound_domination(base):
    model = PotentialModel(base, 1.0)
    for x in (0, 3, 30):
        a_x = float(model.a(x)) * model.kernel_constant
        for t in (0.01, 0.1, 1.0):
            b = kernel_bound(model, x, t)
            assert b <= a_x * (1 + 1e-9)
            if base == "cauchy":
                assert b < a_x


def test_gaussian_constant_is_tight_as_t_vanishes():
    model = PotentialModel("gaussian", 0.0)
    assert kernel_bound(model, 0, 1e-4) == pytest.approx(model.kernel_constant, rel=1e-3)


def test_normalizer_examples():
    N = normalizers(PotentialModel("cauchy", 0.0), 3, 1, G2)
    assert N.A_k == 8 and N.A_kj.tolist() == [2, 2, 2, 2]
    assert normalizers(PotentialModel("cauchy", 1.0), 2, 2, G2).A_k == 10
    N = normalizers(PotentialModel("cauchy", 0.37), 9, 4, G2)
    assert N.A_k == pytest.approx(N.A_kj.sum(), rel=1e-15)
    assert np.all(N.A_kj > 0)


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 0.5, 1.0])
def test_normalizer_growth(gamma):
    model = PotentialModel("cauchy", gamma)
    A = normalizers(model, 12, 12, G2).A_k
    assert A / 4096 ** (1 + gamma) == pytest.approx(1 / (1 + gamma), rel=0.02)


def test_intensity_examples():
    zero = PotentialModel("cauchy", 0.0)
    for k in (1, 5, 9):
        assert intensity_F(zero, 0.0, k, G2) == pytest.approx(1 / math.pi, rel=1e-14)
    one = PotentialModel("cauchy", 1.0)
    assert intensity_F(one, 1.0, 12, G2) < intensity_F(one, 1.0, 6, G2)
    neg = PotentialModel("cauchy", -0.5)
    gaps = [abs(intensity_F(neg, 2.0, k, G2) - 1 / math.pi) for k in range(10, 17, 2)]
    assert all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 1e-2


def test_sampling_is_nested_across_volumes():
    model = PotentialModel("cauchy", 0.8)
    small = sample_potential(model, 3, G2, 1234)
    large = sample_potential(model, 5, G2, 1234)
    assert np.array_equal(small, large[:8])
    assert np.array_equal(small, sample_potential(model, 3, G2, 1234))
    assert not np.array_equal(small, sample_potential(model, 3, G2, 1235))


def test_gamma_zero_is_iid_base_law():
    model = PotentialModel("cauchy", 0.0)
    v = np.concatenate([sample_potential(model, 6, G2, s) for s in realization_seeds(3, 100)])
    quartiles = np.quantile(v, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(quartiles, [-1, 0, 1], atol=0.05)


def test_spread_shrinks_with_site():
    model = PotentialModel("cauchy", 1.0)
    seeds = realization_seeds(11, 10_000)
    sites = [0, 9, 99]
    draws = np.array([sample_potential(model, 7, G2, s)[sites] for s in seeds])
    iqr = np.subtract(*np.quantile(draws, [0.75, 0.25], axis=0))
    # Cauchy IQR is 2 s_x = 2 / (1 + x)
    np.testing.assert_allclose(iqr * (1 + np.array(sites)), 2.0, rtol=0.06)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 2**40), min_size=1, max_size=20))
def test_site_uniforms_pure_and_open(seed, sites):
    u = site_uniforms(seed, sites)
    assert np.all((u > 0) & (u < 1))
    assert np.array_equal(u, site_uniforms(seed, sites))
    assert np.array_equal(u[::-1], site_uniforms(seed, sites[::-1]))
