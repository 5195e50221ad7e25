import math

import numpy as np
import pytest

from hierpoisson.hierarchy import HierarchyGeometry
from hierpoisson.laplacian import SpectralDimensionSpec, geometric_couplings
from hierpoisson.measures import eta_samples, rescale_spectrum
from hierpoisson.operator import assemble_hamiltonian, eigenvalues
from hierpoisson.potential import PotentialModel, normalizers, sample_potential
from hierpoisson.reference import (
    PoissonRef,
    cauchy_eta,
    cauchy_mean_resolvent,
    expected_counting_measure,
    expected_rescaled_count,
    poisson_sample,
    pure_random_points,
    slln_check,
)
from hierpoisson.seeding import realization_seeds

G2 = HierarchyGeometry(2)
C = geometric_couplings(SpectralDimensionSpec(0.5, 2), 12)


@pytest.mark.parametrize("gamma", [0.0, 0.6])
def test_pure_random_matches_operator_path(gamma):
    model = PotentialModel("cauchy", gamma)
    A_k = normalizers(model, 8, 8, G2).A_k
    for seed in realization_seeds(1, 5):
        direct = pure_random_points(model, 8, 0.0, G2, seed, 40.0)
        h = assemble_hamiltonian(C, 8, 0, sample_potential(model, 8, G2, seed), G2)
        via_operator = rescale_spectrum(eigenvalues(h), 0.0, A_k, 40.0)
        assert np.array_equal(direct.points, via_operator.points)


def test_expected_counts():
    assert expected_rescaled_count(PotentialModel("cauchy", 0.0), 10, 0.0, 1.0, G2) == pytest.approx(
        2 / math.pi, rel=1e-6)
    one = PotentialModel("cauchy", 1.0)
    gaps = [abs(expected_rescaled_count(one, k, 0.0, 1.0, G2) - 2 / math.pi) for k in (4, 8, 12)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3


def test_poisson_sampler_moments():
    ref = PoissonRef(0.8, 1.5)
    counts = np.array([poisson_sample(ref, s).count for s in np.random.SeedSequence(0).spawn(10_000)])
    mean = 0.8 * 3.0
    assert abs(counts.mean() - mean) <= 3 * math.sqrt(mean / 10_000)
    assert counts.var(ddof=1) / counts.mean() == pytest.approx(1.0, abs=0.05)
    p = poisson_sample(ref, 5)
    assert np.all(np.diff(p.points) >= 0) and np.all(np.abs(p.points) <= 1.5)


def test_poisson_ref_validation():
    with pytest.raises(ValueError):
        PoissonRef(0.0)
    with pytest.raises(ValueError):
        PoissonRef(1.0, -1.0)


def test_slln_examples():
    model = PotentialModel("cauchy", 0.0)
    assert expected_counting_measure(model, 6, (-1, 1), G2) == pytest.approx(0.5, rel=1e-12)
    assert slln_check(model, (1, -1), [4, 8], G2, 3)[0]["gap"] == 0.0
    shrinking = 0
    for seed in realization_seeds(17, 10):
        rows = {r["k"]: r["gap"] for r in slln_check(model, (-1, 1), [8, 14], G2, seed)}
        shrinking += rows[14] < rows[8]
    assert shrinking >= 9


def test_cauchy_resolvent_against_monte_carlo():
    # Exact averaged trace vs the sample mean over realizations.
    model = PotentialModel("cauchy", 0.5)
    z = 0.2 + 0.3j
    k = 5
    exact = np.trace(cauchy_mean_resolvent(C, k, k, model, z, G2))
    samples = []
    for seed in realization_seeds(8, 2000):
        h = assemble_hamiltonian(C, k, k, sample_potential(model, k, G2, seed), G2)
        samples.append(np.sum(1 / (eigenvalues(h).eigenvalues - z)))
    samples = np.array(samples)
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - exact) <= 4 * se


def test_cauchy_eta_matches_sampled_eta():
    model = PotentialModel("cauchy", 0.0)
    k = 6
    A_k = normalizers(model, k, k, G2).A_k
    eps = 4 / A_k
    spectra = np.array([eigenvalues(assemble_hamiltonian(C, k, k, sample_potential(model, k, G2, s), G2)).eigenvalues
                        for s in realization_seeds(2, 1000)])
    vals = eta_samples(spectra, 0.0, A_k, eps)
    exact = cauchy_eta(C, k, k, model, 0.0, eps, G2)
    assert abs(vals.mean() - exact) <= 3 * vals.std(ddof=1) / math.sqrt(vals.size)


def test_cauchy_resolvent_rejects_other_laws():
    with pytest.raises(ValueError):
        cauchy_mean_resolvent(C, 3, 3, PotentialModel("gaussian", 0.0), 1j, G2)
    with pytest.raises(ValueError):
        cauchy_mean_resolvent(C, 3, 3, PotentialModel(), 1.0, G2)
