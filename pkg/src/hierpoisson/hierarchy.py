"""Index arithmetic for the hierarchical (ultrametric) lattice X = {0, 1, 2, ...}."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HierarchyGeometry:
    """Branching number of the hierarchy; balls of radius r hold n**r sites."""

    n: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"branching number must be an integer >= 2, got {self.n!r}")

    def volume(self, k: int) -> int:
        """Number of sites |B_k| = n**k."""
        if k < 0:
            raise ValueError(f"level must be >= 0, got {k}")
        return self.n**k

    def level_of(self, size: int) -> int:
        """Inverse of `volume`; raises if `size` is not a power of n."""
        k, m = 0, 1
        while m < size:
            m *= self.n
            k += 1
        if m != size:
            raise ValueError(f"length {size} is not a power of n={self.n}")
        return k


@dataclass(frozen=True)
class Ball:
    center: int
    radius: int
    n: int

    @property
    def start(self) -> int:
        size = self.n**self.radius
        return (self.center // size) * size

    @property
    def stop(self) -> int:
        """One past the last member."""
        return self.start + self.n**self.radius

    @property
    def members(self) -> range:
        return range(self.start, self.stop)

    def __len__(self) -> int:
        return self.n**self.radius

    def __contains__(self, x: int) -> bool:
        return self.start <= x < self.stop

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return (self.n, self.radius, self.start) == (other.n, other.radius, other.start)

    def __hash__(self):
        return hash((self.n, self.radius, self.start))


def _check_site(x: int) -> None:
    if x < 0:
        raise ValueError(f"sites are nonnegative integers, got {x}")


def hier_distance(x: int, y: int, geom: HierarchyGeometry) -> int:
    """Smallest k >= 0 such that x // n**k == y // n**k."""
    _check_site(x)
    _check_site(y)
    k = 0
    while x != y:
        x //= geom.n
        y //= geom.n
        k += 1
    return k


def ball_members(x: int, r: int, geom: HierarchyGeometry) -> range:
    """Closed ball B(x, r) as a contiguous range of n**r sites."""
    _check_site(x)
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    return Ball(x, r, geom.n).members


def partition_blocks(k: int, r: int, geom: HierarchyGeometry) -> list[Ball]:
    """Split B_k into its n**(k - r) radius-r balls, ordered left to right.

    Block j (1-based) covers sites (j - 1) * n**r .. j * n**r - 1, so the
    first block is B_r itself.
    """
    if r < 0 or k < 0:
        raise ValueError(f"levels must be >= 0, got k={k}, r={r}")
    if r > k:
        raise ValueError(f"block radius r={r} exceeds volume level k={k}")
    size = geom.n**r
    return [Ball(j * size, r, geom.n) for j in range(geom.n ** (k - r))]
