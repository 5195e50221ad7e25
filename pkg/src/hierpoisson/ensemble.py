"""Monte Carlo drivers: one task per realization, results in realization order.

Every task is a pure function of (setup, levels, realization seed), so the
stacked output does not depend on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .hierarchy import HierarchyGeometry
from .laplacian import CouplingSequence
from .operator import assemble_hamiltonian, block_eigenvalues, eigenvalues
from .potential import PotentialModel, sample_potential
from .seeding import realization_seeds


@dataclass(frozen=True)
class ModelSetup:
    n: int
    couplings: CouplingSequence
    model: PotentialModel

    @property
    def geom(self) -> HierarchyGeometry:
        return HierarchyGeometry(self.n)


def potential_task(setup: ModelSetup, k: int, seed: int) -> np.ndarray:
    return sample_potential(setup.model, k, setup.geom, seed)


def full_spectrum_task(setup: ModelSetup, k: int, r: int, seed: int) -> np.ndarray:
    geom = setup.geom
    h = assemble_hamiltonian(setup.couplings, k, r, sample_potential(setup.model, k, geom, seed), geom, seed=seed)
    return eigenvalues(h).eigenvalues


def block_spectrum_task(setup: ModelSetup, k: int, r: int, seed: int) -> np.ndarray:
    geom = setup.geom
    return block_eigenvalues(setup.couplings, k, r, sample_potential(setup.model, k, geom, seed), geom)


def run_tasks(task, seeds, workers: int = 1) -> list:
    """Map ``task`` over seeds, keeping seed order whatever the worker count."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2:
        return [task(s) for s in seeds]
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, seeds, chunksize=chunk))


def potentials(setup: ModelSetup, k: int, base_seed: int, realizations: int, workers: int = 1) -> np.ndarray:
    seeds = realization_seeds(base_seed, realizations)
    return np.stack(run_tasks(partial(potential_task, setup, k), seeds, workers))


def full_spectra(setup: ModelSetup, k: int, r: int, base_seed: int, realizations: int, workers: int = 1) -> np.ndarray:
    """Sorted spectra of H_r on B_k, shape (realizations, n**k)."""
    seeds = realization_seeds(base_seed, realizations)
    return np.stack(run_tasks(partial(full_spectrum_task, setup, k, r), seeds, workers))


def block_spectra_ensemble(
    setup: ModelSetup, k: int, r: int, base_seed: int, realizations: int, workers: int = 1
) -> np.ndarray:
    """Block spectra of the truncated operator, shape (realizations, n**(k-r), n**r)."""
    seeds = realization_seeds(base_seed, realizations)
    return np.stack(run_tasks(partial(block_spectrum_task, setup, k, r), seeds, workers))
