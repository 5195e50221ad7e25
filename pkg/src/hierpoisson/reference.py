"""Analytic oracles: the diagonal (pure-random) model, a homogeneous Poisson
sampler, and the exact averaged resolvent of the Cauchy family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hierarchy import HierarchyGeometry
from .laplacian import CouplingSequence, assemble_laplacian
from .measures import RescaledProcess, rescale_spectrum
from .potential import PotentialModel, normalizers, sample_potential, site_probability


@dataclass(frozen=True)
class PoissonRef:
    intensity: float
    half_width: float = 1.0

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError(f"intensity must be > 0, got {self.intensity}")
        if not self.half_width > 0:
            raise ValueError(f"half width must be > 0, got {self.half_width}")


def pure_random_points(
    model: PotentialModel, k: int, e: float, geom: HierarchyGeometry, seed: int, half_width: float = 1.0
) -> RescaledProcess:
    """Rescaled eigenvalues of H = V on B_k; the eigenvalues are the V_x themselves."""
    A_k = normalizers(model, k, k, geom).A_k
    return rescale_spectrum(sample_potential(model, k, geom, seed), e, A_k, half_width)


def poisson_sample(ref: PoissonRef, seed) -> RescaledProcess:
    rng = np.random.default_rng(seed)
    length = 2.0 * ref.half_width
    count = rng.poisson(ref.intensity * length)
    pts = np.sort(rng.uniform(-ref.half_width, ref.half_width, size=count))
    return RescaledProcess(points=pts, e=0.0, A_k=1.0, half_width=ref.half_width)


def expected_counting_measure(model: PotentialModel, k: int, interval, geom: HierarchyGeometry) -> float:
    """E mu_k(I) = (1 / A_k) sum_x P[V_x in I] for the diagonal model."""
    lo, hi = interval
    x = np.arange(geom.volume(k))
    A_k = float(np.sum(model.a(x)))
    return float(np.sum(site_probability(model, x, lo, hi)) / A_k)


def expected_rescaled_count(model: PotentialModel, k: int, e: float, half_width: float, geom: HierarchyGeometry) -> float:
    """Exact E xi_k([-w, w]) for the diagonal model."""
    x = np.arange(geom.volume(k))
    A_k = float(np.sum(model.a(x)))
    lo, hi = e - half_width / A_k, e + half_width / A_k
    return float(np.sum(site_probability(model, x, lo, hi)))


def slln_check(model: PotentialModel, interval, k_list, geom: HierarchyGeometry, seed: int) -> list[dict]:
    """Single-realization mu_k(I) against its exact mean, one row per k.

    The same seed is used at every k, so the realizations are nested.
    """
    lo, hi = interval
    rows = []
    for k in k_list:
        x = np.arange(geom.volume(k))
        A_k = float(np.sum(model.a(x)))
        exact = expected_counting_measure(model, k, interval, geom)
        if lo > hi:
            observed = 0.0
        else:
            v = sample_potential(model, k, geom, seed)
            observed = np.count_nonzero((v >= lo) & (v <= hi)) / A_k
        rows.append({"k": k, "observed": observed, "expected": exact, "gap": abs(observed - exact)})
    return rows


def cauchy_mean_resolvent(
    c: CouplingSequence, k: int, r: int, model: PotentialModel, z: complex, geom: HierarchyGeometry
) -> np.ndarray:
    """E (H_r - z)^-1 for Cauchy site laws, which equals (Delta_r - z - i S)^-1.

    Each V_x enters analytically and boundedly in the lower half-plane, so the
    Cauchy average evaluates it at V_x = -i s_x (Lloyd's model).
    """
    if model.base != "cauchy":
        raise ValueError("the averaged resolvent is exact only for the Cauchy family")
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"need Im z > 0, got {z}")
    s = model.site_scale(np.arange(geom.volume(k)))
    lap = assemble_laplacian(c, k, geom, r=r) if k > 0 else np.zeros((1, 1))
    m = lap.astype(complex)
    m[np.diag_indices_from(m)] -= z + 1j * s
    return np.linalg.inv(m)


def cauchy_eta(
    c: CouplingSequence, k: int, r: int, model: PotentialModel, e: float, epsilon: float, geom: HierarchyGeometry
) -> float:
    """Exact mean of the eta estimator: (1 / (pi A_k)) Im tr E (H_r - e - i epsilon)^-1."""
    g = cauchy_mean_resolvent(c, k, r, model, complex(e, epsilon), geom)
    A_k = float(np.sum(model.a(np.arange(geom.volume(k)))))
    return float(np.trace(g).imag / (np.pi * A_k))
