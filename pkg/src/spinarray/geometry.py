"""Atomic position sets for chains, square lattices, and rings.

Units: lengths in units of the transition wavelength, so the wavenumber is
2*pi. Arrays live in the x-y plane; the dipole polarization (along z) is
owned by the couplings module, not stored here. Atom ordering is
deterministic: row-major for lattices, counterclockwise for rings.
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np


class LatticeKind(str, Enum):
    CHAIN = "chain"
    SQUARE = "square"
    RING = "ring"


@dataclass(frozen=True)
class Geometry:
    kind: LatticeKind
    spacing: float
    positions: np.ndarray  # (count, 3)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must be an (N, 3) array")
        object.__setattr__(self, "positions", pos)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.count >= 2:
            d = pairwise_distances(pos)
            iu = np.triu_indices(self.count, k=1)
            if d[iu].min() <= 0.0:
                raise ValueError("coincident atoms")

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind.value,
            "spacing": self.spacing,
            "count": self.count,
            "positions": self.positions.tolist(),
        })

    @staticmethod
    def from_json(text: str) -> "Geometry":
        d = json.loads(text)
        geo = Geometry(LatticeKind(d["kind"]), float(d["spacing"]),
                       np.asarray(d["positions"], dtype=np.float64))
        if geo.count != int(d["count"]):
            raise ValueError("count does not match positions")
        return geo


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def build_square_lattice(n_side: int, spacing: float) -> Geometry:
    """n_side x n_side atoms on a planar square grid, centered on the
    origin, row-major ordering."""
    if n_side < 1:
        raise ValueError("n_side must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    half = (n_side - 1) / 2.0
    pos = np.zeros((n_side * n_side, 3))
    for row in range(n_side):
        for col in range(n_side):
            pos[row * n_side + col, 0] = (col - half) * spacing
            pos[row * n_side + col, 1] = (row - half) * spacing
    return Geometry(LatticeKind.SQUARE, spacing, pos)


def build_chain(n: int, spacing: float) -> Geometry:
    """n atoms along the x axis, centered on the origin."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    x = (np.arange(n) - (n - 1) / 2.0) * spacing
    pos = np.zeros((n, 3))
    pos[:, 0] = x
    return Geometry(LatticeKind.CHAIN, spacing, pos)


def build_ring(n: int, spacing: float) -> Geometry:
    """n atoms equally spaced on a circle in the x-y plane.

    ``spacing`` is the chord length between adjacent atoms (the arc
    parameterization is not used); the ring radius follows as
    spacing / (2 sin(pi/n)).
    """
    if n < 2:
        raise ValueError("a ring needs at least 2 atoms")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    radius = spacing / (2.0 * np.sin(np.pi / n))
    angles = 2.0 * np.pi * np.arange(n) / n
    pos = np.zeros((n, 3))
    pos[:, 0] = radius * np.cos(angles)
    pos[:, 1] = radius * np.sin(angles)
    return Geometry(LatticeKind.RING, spacing, pos)
