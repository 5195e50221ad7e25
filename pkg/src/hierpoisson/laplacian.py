"""Coupling sequences p_r and the finite-volume hierarchical Laplacian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hierarchy import HierarchyGeometry

# Dense assembly cap (sites); callers may raise it explicitly.
MAX_DENSE_SITES = 4096


@dataclass(frozen=True)
class SpectralDimensionSpec:
    d: float
    n: int = 2

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"spectral dimension must be > 0, got {self.d}")
        HierarchyGeometry(self.n)

    @property
    def validated(self) -> bool:
        """True inside the regime 0 < d < 1 that the test suite exercises."""
        return 0 < self.d < 1


@dataclass(frozen=True)
class CouplingSequence:
    """Weights p_0..p_rmax with p_0 = 0, and the stored tails 1 - lambda_r.

    The tail is stored separately so that geometric families keep
    1 - lambda_r = rho**r to full relative precision even when it is far
    below machine epsilon.
    """

    p: tuple[float, ...]
    tail: tuple[float, ...]

    def __post_init__(self):
        if len(self.p) < 1 or len(self.p) != len(self.tail):
            raise ValueError("p and tail must be non-empty and of equal length")
        if self.p[0] != 0.0:
            raise ValueError(f"p_0 must be 0, got {self.p[0]}")
        if any(not (pr >= 0.0) for pr in self.p):
            raise ValueError("couplings must be nonnegative")
        lam = np.cumsum(self.p)
        if lam[-1] > 1.0 + 1e-12:
            raise ValueError(f"couplings sum to {lam[-1]} > 1")
        if np.max(np.abs((1.0 - lam) - np.asarray(self.tail))) > 1e-12:
            raise ValueError("stored tail disagrees with 1 - lambda_r")

    @classmethod
    def from_list(cls, p) -> CouplingSequence:
        """User-supplied p_1, p_2, ... (with or without the leading p_0 = 0)."""
        p = [float(v) for v in p]
        if not p or p[0] != 0.0:
            p = [0.0] + p
        tail = [1.0 - math.fsum(p[: r + 1]) for r in range(len(p))]
        return cls(tuple(p), tuple(tail))

    @property
    def r_max(self) -> int:
        return len(self.p) - 1

    @property
    def lam(self) -> np.ndarray:
        """Partial sums lambda_r = p_0 + ... + p_r."""
        return np.cumsum(self.p)

    def tail_at(self, r: int) -> float:
        """1 - lambda_r; levels beyond r_max keep the last stored tail."""
        if r < 0:
            raise ValueError(f"level must be >= 0, got {r}")
        return self.tail[min(r, self.r_max)]

    def require(self, k: int) -> None:
        if k > self.r_max:
            raise ValueError(f"couplings only cover levels up to {self.r_max}, need {k}")

    def to_dict(self) -> dict:
        return {"p": list(self.p), "tail": list(self.tail)}

    @classmethod
    def from_dict(cls, data: dict) -> CouplingSequence:
        return cls(tuple(float(v) for v in data["p"]), tuple(float(v) for v in data["tail"]))


def geometric_couplings(spec: SpectralDimensionSpec, r_max: int) -> CouplingSequence:
    """p_r = (1 - rho) rho**(r-1) with rho = n**(-2/d), so that 1 - lambda_r = rho**r."""
    if r_max < 1:
        raise ValueError(f"r_max must be >= 1, got {r_max}")
    rho = float(spec.n) ** (-2.0 / spec.d)
    p = [0.0] + [(1.0 - rho) * rho ** (r - 1) for r in range(1, r_max + 1)]
    tail = [rho**r for r in range(r_max + 1)]
    return CouplingSequence(tuple(p), tuple(tail))


def estimate_spectral_dimension(c: CouplingSequence, geom: HierarchyGeometry) -> float:
    """Least-squares fit of ln(1 - lambda_k) against k, mapped to d.

    Returns ``math.inf`` when the tail does not decay at all.
    """
    tails = np.asarray(c.tail[1:], dtype=float)
    if np.any(tails <= 0.0):
        raise ValueError("lambda_r reaches 1 at a finite level; ln(1 - lambda_r) is singular")
    if tails.size < 3:
        raise ValueError("need at least 3 levels with lambda_r < 1")
    ks = np.arange(1, tails.size + 1, dtype=float)
    slope = np.polyfit(ks, np.log(tails), 1)[0]
    if slope >= -1e-300:
        return math.inf
    return -2.0 * math.log(geom.n) / slope


def apply_averaging(v, r: int, geom: HierarchyGeometry) -> np.ndarray:
    """E_r: replace each block of n**r consecutive entries by its mean.

    ``v`` may be a vector or a matrix; the operator acts along axis 0.
    """
    v = np.asarray(v, dtype=float)
    k = geom.level_of(v.shape[0])
    if not 0 <= r <= k:
        raise ValueError(f"averaging level r={r} outside [0, {k}]")
    size = geom.n**r
    blocks = v.reshape((-1, size) + v.shape[1:])
    means = blocks.mean(axis=1, keepdims=True)
    return np.broadcast_to(means, blocks.shape).reshape(v.shape).copy()


def distance_matrix(k: int, geom: HierarchyGeometry) -> np.ndarray:
    """All pairwise hierarchical distances inside B_k."""
    x = np.arange(geom.n**k)
    dist = np.full((x.size, x.size), k, dtype=np.int64)
    for s in range(k - 1, -1, -1):
        q = x // geom.n**s
        dist[q[:, None] == q[None, :]] = s
    return dist


def assemble_laplacian(
    c: CouplingSequence,
    k: int,
    geom: HierarchyGeometry,
    r: int | None = None,
    max_sites: int = MAX_DENSE_SITES,
) -> np.ndarray:
    """Dense sum_{s=1}^{r} p_s E_s on l2(B_k); r defaults to k (untruncated)."""
    if k < 1:
        raise ValueError(f"volume level must be >= 1, got {k}")
    r = k if r is None else r
    if not 0 <= r <= k:
        raise ValueError(f"truncation level r={r} outside [0, {k}]")
    c.require(r)
    size = geom.n**k
    if size > max_sites:
        raise ValueError(f"n**k = {size} exceeds the dense cap of {max_sites} sites")
    # Entry (x, y) is sum of p_s n^-s over d(x, y) <= s <= r.
    weights = np.zeros(k + 2)
    for s in range(r, 0, -1):
        weights[s] = weights[s + 1] + c.p[s] * float(geom.n) ** (-s)
    weights[0] = weights[1]
    return weights[distance_matrix(k, geom)]


def analytic_spectrum(c: CouplingSequence, k: int, geom: HierarchyGeometry) -> list[tuple[float, int]]:
    """Eigenvalues lambda_s of the level-k Laplacian with their multiplicities."""
    if k < 1:
        raise ValueError(f"volume level must be >= 1, got {k}")
    c.require(k)
    lam = c.lam
    n = geom.n
    out = [(float(lam[s]), (n - 1) * n ** (k - s - 1)) for s in range(k)]
    out.append((float(lam[k]), 1))
    return out
