"""Random Hamiltonians H = sum_{s<=r} p_s E_s + V on l2(B_k) and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hierarchy import HierarchyGeometry
from .laplacian import MAX_DENSE_SITES, CouplingSequence, assemble_laplacian

TIE_TOL = 1e-12


class EigensolverError(RuntimeError):
    """Raised when LAPACK fails; carries the parameters of the offending matrix."""

    def __init__(self, message: str, params: dict):
        super().__init__(f"{message} (params: {params})")
        self.params = params


@dataclass(frozen=True)
class HamiltonianInstance:
    k: int
    r: int
    couplings: CouplingSequence
    potential: np.ndarray
    matrix: np.ndarray
    n: int = 2
    seed: int | None = None


@dataclass(frozen=True)
class SpectrumSample:
    eigenvalues: np.ndarray
    k: int
    r: int
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def near_ties(self) -> int:
        """Number of adjacent pairs closer than TIE_TOL (flagged, never fatal)."""
        return int(np.count_nonzero(np.diff(self.eigenvalues) < TIE_TOL))


def _spectrum_of(values) -> np.ndarray:
    if isinstance(values, SpectrumSample):
        return values.eigenvalues
    return np.asarray(values, dtype=float)


def assemble_hamiltonian(
    c: CouplingSequence,
    k: int,
    r: int,
    potential,
    geom: HierarchyGeometry,
    seed: int | None = None,
    max_sites: int = MAX_DENSE_SITES,
) -> HamiltonianInstance:
    potential = np.asarray(potential, dtype=float)
    if not 0 <= r <= k:
        raise ValueError(f"truncation level r={r} outside [0, {k}]")
    if potential.shape != (geom.volume(k),):
        raise ValueError(f"potential has shape {potential.shape}, expected ({geom.volume(k)},)")
    if k == 0:
        matrix = np.diag(potential)
    else:
        matrix = assemble_laplacian(c, k, geom, r=r, max_sites=max_sites)
        matrix[np.diag_indices_from(matrix)] += potential
    return HamiltonianInstance(k=k, r=r, couplings=c, potential=potential, matrix=matrix, n=geom.n, seed=seed)


def _params(h: HamiltonianInstance) -> dict:
    return {"n": h.n, "k": h.k, "r": h.r, "seed": h.seed}


def eigenvalues(h: HamiltonianInstance, check_residuals: bool = False, params: dict | None = None) -> SpectrumSample:
    """Full symmetric eigensolve, ascending.

    With ``check_residuals`` the extremal eigenpairs are recomputed with
    vectors and their residuals checked against 1e-10 * ||H||.
    """
    meta = {**_params(h), **(params or {})}
    try:
        vals = scipy.linalg.eigh(h.matrix, eigvals_only=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"symmetric eigensolve failed: {exc}", meta) from exc
    if check_residuals:
        size = h.matrix.shape[0]
        norm = max(np.linalg.norm(h.matrix, 2), 1.0)
        for idx in {0, size - 1}:
            w, v = scipy.linalg.eigh(h.matrix, subset_by_index=[idx, idx])
            res = np.linalg.norm(h.matrix @ v[:, 0] - w[0] * v[:, 0])
            if res > 1e-10 * norm:
                raise EigensolverError(f"eigenpair {idx} residual {res:.3e} too large", meta)
    return SpectrumSample(eigenvalues=vals, k=h.k, r=h.r, seed=h.seed, params=meta)


def block_matrices(c: CouplingSequence, k: int, r: int, potential, geom: HierarchyGeometry) -> np.ndarray:
    """Stack of the n**(k-r) diagonal blocks of the truncated Hamiltonian."""
    potential = np.asarray(potential, dtype=float)
    if not 0 <= r < k:
        raise ValueError(f"block decomposition needs 0 <= r < k, got r={r}, k={k}")
    if potential.shape != (geom.volume(k),):
        raise ValueError(f"potential has shape {potential.shape}, expected ({geom.volume(k)},)")
    size = geom.n**r
    lap = assemble_laplacian(c, r, geom) if r > 0 else np.zeros((1, 1))
    mats = np.broadcast_to(lap, (geom.n ** (k - r), size, size)).copy()
    idx = np.arange(size)
    mats[:, idx, idx] += potential.reshape(-1, size)
    return mats


def block_eigenvalues(c: CouplingSequence, k: int, r: int, potential, geom: HierarchyGeometry) -> np.ndarray:
    """Eigenvalues of every block, shape (n**(k-r), n**r), each row ascending."""
    mats = block_matrices(c, k, r, potential, geom)
    try:
        return np.linalg.eigvalsh(mats)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"block eigensolve failed: {exc}", {"n": geom.n, "k": k, "r": r}) from exc


def block_spectra(c: CouplingSequence, k: int, r: int, potential, geom: HierarchyGeometry, seed: int | None = None):
    """Per-block spectra of the truncated operator, block j covering B_{k,j}."""
    vals = block_eigenvalues(c, k, r, potential, geom)
    return [SpectrumSample(eigenvalues=row, k=r, r=r, seed=seed, params={"n": geom.n, "k": k, "r": r, "block": j})
            for j, row in enumerate(vals)]


def resolvent_imag_diagonal(h: HamiltonianInstance, z: complex) -> np.ndarray:
    """Im <delta_x, (H - z)^-1 delta_x> for every x, from the eigendecomposition."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"need Im z > 0, got {z}")
    w, v = scipy.linalg.eigh(h.matrix)
    weights = (1.0 / (w - z)).imag
    return (v * v) @ weights


def truncation_gap(c: CouplingSequence, k: int, r: int, z: complex) -> float:
    """Uniform bound (1 - lambda_r) / |Im z|**2 on ||(H_r - z)^-1 - (H_k - z)^-1||."""
    if not 0 <= r <= k:
        raise ValueError(f"truncation level r={r} outside [0, {k}]")
    im = abs(complex(z).imag)
    if im == 0.0:
        raise ValueError("z must be off the real axis")
    return c.tail_at(r) / im**2
