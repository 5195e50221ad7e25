import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierpoisson.hierarchy import HierarchyGeometry
from hierpoisson.laplacian import SpectralDimensionSpec, geometric_couplings
from hierpoisson.measures import (
    CountRecord,
    block_count_array,
    block_counts,
    counting_measure,
    empirical_IDS,
    eta_estimate,
    rescale_spectrum,
    trace_statistic,
)
from hierpoisson.operator import assemble_hamiltonian, block_spectra, eigenvalues
from hierpoisson.potential import PotentialModel, normalizers, sample_potential, site_probability
from hierpoisson.seeding import realization_seeds

G2 = HierarchyGeometry(2)
CAUCHY0 = PotentialModel("cauchy", 0.0)


def test_counting_measure_examples():
    s = np.array([-3.0, -1.0, 0.0, 2.0])
    assert counting_measure(s, 2.0, (-np.inf, np.inf)) == 2.0
    assert counting_measure(s, 2.0, (1.0, 0.5)) == 0.0
    assert counting_measure(s, 1.0, (-1.0, 2.0)) == 3.0  # closed interval


def test_counting_measure_mean_for_iid_cauchy():
    vals = [counting_measure(sample_potential(CAUCHY0, 10, G2, s), 1024.0, (-1, 1)) for s in realization_seeds(4, 500)]
    mean, se = np.mean(vals), np.std(vals, ddof=1) / math.sqrt(500)
    assert abs(mean - 0.5) <= 3 * se


def test_ids_examples():
    s = np.array([0.1, -0.4, 0.9, 0.3])
    ids = empirical_IDS(s, 2.0, [-1, 0, 0.3, 5])
    assert ids.tolist() == [0.0, 0.5, 1.5, 2.0]
    with pytest.raises(ValueError):
        empirical_IDS(s, 2.0, [1, 0])


def test_ids_self_averaging():
    # diagonal model at k=12; the spread of mu_k is known exactly
    k, A_k = 12, 4096.0
    x = np.arange(4096)
    p = site_probability(CAUCHY0, x, -np.inf, 0.5)
    sd = math.sqrt(np.sum(p * (1 - p))) / A_k
    a = empirical_IDS(sample_potential(CAUCHY0, k, G2, 101), A_k, [0.5])[0]
    b = empirical_IDS(sample_potential(CAUCHY0, k, G2, 202), A_k, [0.5])[0]
    assert abs(a - b) <= 3 * math.sqrt(2) * sd


def test_rescale_examples():
    p = rescale_spectrum([0.25], 0.25, 100.0, 1.0)
    assert p.points.tolist() == [0.0]
    s = np.array([0.001, -0.002, 0.5])
    a = rescale_spectrum(s, 0.0, 100.0, 1.0)
    b = rescale_spectrum(s, 0.0, 200.0, 1.0)
    assert a.points.tolist() == pytest.approx([-0.2, 0.1])
    assert b.points.tolist() == pytest.approx([-0.4, 0.2])


def test_rescaled_count_for_iid_cauchy():
    counts = [rescale_spectrum(sample_potential(CAUCHY0, 10, G2, s), 0.0, 1024.0, 1.0).count
              for s in realization_seeds(42, 1000)]
    assert abs(np.mean(counts) - 2 / math.pi) <= 3 * np.std(counts, ddof=1) / math.sqrt(1000)


def test_block_count_examples():
    c = geometric_couplings(SpectralDimensionSpec(0.5, 2), 6)
    v = sample_potential(CAUCHY0, 6, G2, 8)
    rec = block_counts(block_spectra(c, 6, 0, v, G2), 0.0, 64.0, (-20, 20))
    assert set(rec.blocks.tolist()) <= {0, 1}
    blocks = block_spectra(c, 6, 3, v, G2)
    rec = block_counts(blocks, 0.0, 64.0, (-1, 1))
    union = np.concatenate([b.eigenvalues for b in blocks])
    assert rec.total == rescale_spectrum(union, 0.0, 64.0, 1.0).count
    with pytest.raises(ValueError):
        CountRecord(total=3, blocks=np.array([1, 1]))


def test_wegner_bound_on_truncated_ensemble():
    model = PotentialModel("cauchy", 0.5)
    c = geometric_couplings(SpectralDimensionSpec(0.5, 2), 8)
    k, r = 8, 4
    N = normalizers(model, k, r, G2)
    counts = np.array([
        block_count_array(np.stack([b.eigenvalues for b in block_spectra(c, k, r, sample_potential(model, k, G2, s), G2)]),
                          0.0, N.A_k, (-1, 1))
        for s in realization_seeds(5, 500)
    ])
    mean, se = counts.mean(axis=0), counts.std(axis=0, ddof=1) / math.sqrt(500)
    assert np.all(mean <= 2 * N.ratios + 3 * se)


def test_trace_statistic_examples():
    assert trace_statistic([0.0], 1j) == pytest.approx(1j)
    with pytest.raises(ValueError):
        trace_statistic([0.0], 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.floats(-5, 5), st.floats(1e-3, 10))
def test_herglotz(vals, re, im):
    assert trace_statistic(vals, complex(re, im)).imag > 0


def test_trace_identity_with_resolvent_diagonal():
    from hierpoisson.operator import resolvent_imag_diagonal

    c = geometric_couplings(SpectralDimensionSpec(0.5, 2), 5)
    h = assemble_hamiltonian(c, 5, 5, sample_potential(CAUCHY0, 5, G2, 1), G2)
    assert trace_statistic(eigenvalues(h), 1j).imag == pytest.approx(resolvent_imag_diagonal(h, 1j).sum(), abs=1e-10)


def test_eta_for_iid_cauchy():
    # For the diagonal Cauchy model E eta(e=0, eps) = 1 / (pi (1 + eps)) exactly.
    spectra = np.array([sample_potential(CAUCHY0, 10, G2, s) for s in realization_seeds(9, 300)])
    for eps in (0.2, 0.1):
        est, se = eta_estimate(spectra, 0.0, 1024.0, eps, return_se=True)
        assert abs(est - 1 / (math.pi * (1 + eps))) <= 3 * se
    coarse = eta_estimate(spectra, 0.0, 1024.0, 0.2)
    fine = eta_estimate(spectra, 0.0, 1024.0, 0.1)
    assert abs(fine - coarse) / fine < 0.1
    est, se = eta_estimate(list(spectra), 0.0, 1024.0, return_se=True)
    assert math.pi * est <= 1 + 3 * math.pi * se
