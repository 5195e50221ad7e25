"""Independent, non-identically distributed site potentials.

Site x carries V_x = s_x W_x with s_x = (1 + x)**(-gamma) and W_x drawn from
a fixed base law (standard Cauchy or standard normal). The disorder-strength
sequence is a_x = (1 + x)**gamma and A_k, A_{k,j} are its partial sums over
B_k and over the blocks of B_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .hierarchy import HierarchyGeometry
from .seeding import site_uniforms

BASES = ("cauchy", "gaussian")


@dataclass(frozen=True)
class PotentialModel:
    base: str = "cauchy"
    gamma: float = 0.0

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"base density must be one of {BASES}, got {self.base!r}")
        if not self.gamma > -1.0:
            raise ValueError(f"gamma must be > -1, got {self.gamma}")

    def site_scale(self, x) -> np.ndarray:
        return (1.0 + np.asarray(x, dtype=float)) ** (-self.gamma)

    def a(self, x) -> np.ndarray:
        return (1.0 + np.asarray(x, dtype=float)) ** self.gamma

    @property
    def kernel_constant(self) -> float:
        """sup over t of kernel_bound / a_x; 1 for Cauchy, sqrt(pi/2) for Gaussian."""
        return 1.0 if self.base == "cauchy" else math.sqrt(math.pi / 2.0)

    def to_dict(self) -> dict:
        return {"base": self.base, "gamma": self.gamma}


@dataclass(frozen=True)
class Normalizers:
    k: int
    r: int
    A_k: float
    A_kj: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.A_kj / self.A_k


def _base_quantile(base: str, u: np.ndarray) -> np.ndarray:
    if base == "cauchy":
        return np.tan(np.pi * (u - 0.5))
    return special.ndtri(u)


def sample_potential(model: PotentialModel, k: int, geom: HierarchyGeometry, seed: int) -> np.ndarray:
    """V_x for x in B_k; entry x depends only on (seed, x)."""
    x = np.arange(geom.volume(k))
    return model.site_scale(x) * _base_quantile(model.base, site_uniforms(seed, x))


def density_at(model: PotentialModel, x, v):
    """rho_x(v), vectorized over x and v."""
    s = model.site_scale(x)
    v = np.asarray(v, dtype=float)
    if model.base == "cauchy":
        out = s / (np.pi * (v * v + s * s))
    else:
        out = np.exp(-0.5 * (v / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    return out if np.ndim(out) else float(out)


def site_probability(model: PotentialModel, x, lo: float, hi: float) -> np.ndarray:
    """P[lo <= V_x <= hi] in closed form."""
    s = model.site_scale(x)
    if hi < lo:
        return np.zeros_like(s)
    if model.base == "cauchy":
        return (np.arctan(hi / s) - np.arctan(lo / s)) / np.pi
    return special.ndtr(hi / s) - special.ndtr(lo / s)


def kernel_integral(model: PotentialModel, x: int, t: float, s: float) -> float:
    """Quadrature of int rho_x(v) t / ((v - s)**2 + t**2) dv.

    Substituting v = s + t tan(phi) turns the Lorentzian into the flat
    measure on (-pi/2, pi/2); the remaining peak sits where v = 0.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")

    def f(phi):
        return density_at(model, x, s + t * math.tan(phi))

    peak = math.atan(-s / t)
    val, _ = integrate.quad(f, -math.pi / 2, math.pi / 2, points=[peak], limit=500, epsabs=1e-13, epsrel=1e-12)
    return val


def kernel_bound(model: PotentialModel, x: int, t: float) -> float:
    """sup_s of the Cauchy-smoothed density at site x and width t."""
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    s_x = float(model.site_scale(x))
    if model.base == "cauchy":
        return 1.0 / (s_x + t)
    width = 5.0 * (s_x + t)
    res = optimize.minimize_scalar(
        lambda s: -kernel_integral(model, x, t, s), bounds=(-width, width), method="bounded",
        options={"xatol": 1e-10 * width},
    )
    return max(-res.fun, kernel_integral(model, x, t, 0.0))


def normalizers(model: PotentialModel, k: int, r: int, geom: HierarchyGeometry) -> Normalizers:
    """A_k over B_k and A_{k,j} over the radius-r blocks of B_k."""
    if not 0 <= r <= k:
        raise ValueError(f"block level r={r} outside [0, {k}]")
    a = model.a(np.arange(geom.volume(k)))
    A_kj = a.reshape(-1, geom.n**r).sum(axis=1)
    return Normalizers(k=k, r=r, A_k=float(a.sum()), A_kj=A_kj)


def intensity_F(model: PotentialModel, e: float, k: int, geom: HierarchyGeometry) -> float:
    """(1 / A_k) sum_{x in B_k} rho_x(e)."""
    x = np.arange(geom.volume(k))
    return float(np.sum(density_at(model, x, e)) / np.sum(model.a(x)))
