"""Counting measures, rescaled local processes and trace statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operator import _spectrum_of


@dataclass(frozen=True)
class RescaledProcess:
    points: np.ndarray
    e: float
    A_k: float
    half_width: float

    @property
    def count(self) -> int:
        return int(self.points.size)

    @property
    def window_length(self) -> float:
        return 2.0 * self.half_width

    def gaps(self) -> np.ndarray:
        return np.diff(self.points)


@dataclass(frozen=True)
class CountRecord:
    total: int
    blocks: np.ndarray

    def __post_init__(self):
        if int(np.sum(self.blocks)) != self.total:
            raise ValueError("block counts do not add up to the total count")


def _count_in(values: np.ndarray, lo: float, hi: float) -> int:
    # Closed interval; values are sorted.
    return int(np.searchsorted(values, hi, side="right") - np.searchsorted(values, lo, side="left"))


def counting_measure(s, A_k: float, interval) -> float:
    """(number of eigenvalues in the closed interval [a, b]) / A_k."""
    a, b = interval
    if not A_k > 0:
        raise ValueError(f"A_k must be > 0, got {A_k}")
    if a > b:
        return 0.0
    return _count_in(np.sort(_spectrum_of(s)), a, b) / A_k


def empirical_IDS(s, A_k: float, grid) -> np.ndarray:
    """Normalized count of eigenvalues <= e for each e of a sorted grid."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("energy grid must be sorted")
    vals = np.sort(_spectrum_of(s))
    return np.searchsorted(vals, grid, side="right") / A_k


def rescale_spectrum(s, e: float, A_k: float, half_width: float) -> RescaledProcess:
    """Points A_k (e_i - e) that fall in [-half_width, half_width]."""
    if not A_k > 0:
        raise ValueError(f"A_k must be > 0, got {A_k}")
    pts = A_k * (np.sort(_spectrum_of(s)) - e)
    pts = pts[np.abs(pts) <= half_width]
    return RescaledProcess(points=pts, e=float(e), A_k=float(A_k), half_width=float(half_width))


def block_count_array(block_vals: np.ndarray, e: float, A_k: float, interval) -> np.ndarray:
    """Counts of rescaled eigenvalues in I for each row of a (blocks, size) array."""
    lo, hi = interval
    pts = A_k * (np.asarray(block_vals, dtype=float) - e)
    return np.count_nonzero((pts >= lo) & (pts <= hi), axis=-1)


def block_counts(blocks, e: float, A_k: float, interval) -> CountRecord:
    if isinstance(blocks, np.ndarray):
        counts = block_count_array(blocks, e, A_k, interval)
    else:
        counts = np.array([block_count_array(_spectrum_of(b), e, A_k, interval) for b in blocks])
    return CountRecord(total=int(counts.sum()), blocks=counts)


def trace_statistic(s, z: complex) -> complex:
    """tr (H - z)^-1 = sum_i 1 / (e_i - z)."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"need Im z > 0, got {z}")
    return complex(np.sum(1.0 / (_spectrum_of(s) - z)))


def default_epsilon(A_k: float) -> float:
    return 4.0 / A_k


def eta_samples(ensemble, e: float, A_k: float, epsilon: float | None = None) -> np.ndarray:
    """Per-realization (1 / (pi A_k)) Im tr (H - e - i epsilon)^-1."""
    epsilon = default_epsilon(A_k) if epsilon is None else epsilon
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    z = complex(e, epsilon)
    if isinstance(ensemble, np.ndarray) and ensemble.ndim == 2:
        im = (1.0 / (ensemble - z)).imag.sum(axis=1)
    else:
        im = np.array([trace_statistic(s, z).imag for s in ensemble])
    return im / (math.pi * A_k)


def eta_estimate(ensemble, e: float, A_k: float, epsilon: float | None = None, return_se: bool = False):
    """Density of the expected spectral measure at e, smoothed at width epsilon.

    ``epsilon`` defaults to 4 / A_k.
    """
    vals = eta_samples(ensemble, e, A_k, epsilon)
    est = float(np.mean(vals))
    if not return_se:
        return est
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return est, se
