"""Vacuum Green's tensor and the dipole-dipole coupling matrices it induces.

The coherent (J) and dissipative (Gamma) pair couplings follow from the
zz projection of the free-space dipole propagator, J - i Gamma/2 =
-(3 pi gamma0 / k) Gzz, with the polarization fixed along z (perpendicular
to the array plane). Units: gamma0 = 1, wavelength = 1, k = 2 pi.

Thermodynamic-limit effective couplings are truncated lattice sums with
tail averaging (see kernels.square_lattice_tail_sum for the method); they
diverge at spacings commensurate with the wavelength, which are reported
with a warning flag rather than rejected.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Geometry, LatticeKind
from .kernels import TWO_PI, chain_lattice_tail_sum, square_lattice_tail_sum

DEFAULT_RADIUS = {LatticeKind.CHAIN: 400.0, LatticeKind.SQUARE: 200.0}
DEFAULT_WINDOW = 20.0
DIVERGENCE_GUARD = 1e-3


@dataclass(frozen=True)
class CouplingMatrices:
    j: np.ndarray       # (N, N), zero diagonal
    gamma: np.ndarray   # (N, N), diagonal gamma0
    gamma0: float

    def __post_init__(self):
        j = np.asarray(self.j, dtype=np.float64)
        g = np.asarray(self.gamma, dtype=np.float64)
        if j.shape != g.shape or j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ValueError("j and gamma must be square matrices of equal size")
        if not np.array_equal(j, j.T) or not np.array_equal(g, g.T):
            raise ValueError("coupling matrices must be symmetric")
        if np.any(np.diag(j) != 0.0):
            raise ValueError("j must have zero diagonal")
        if np.any(np.diag(g) != self.gamma0):
            raise ValueError("gamma diagonal must equal gamma0")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "gamma", g)

    @property
    def count(self) -> int:
        return self.j.shape[0]

    def gamma_offdiag(self) -> np.ndarray:
        """Gamma with the single-atom rate removed from the diagonal."""
        return self.gamma - self.gamma0 * np.eye(self.count)

    def to_json(self) -> str:
        return json.dumps({
            "gamma0": self.gamma0,
            "j": self.j.tolist(),
            "gamma": self.gamma.tolist(),
        })

    def to_csv(self, path) -> None:
        n = self.count
        with open(path, "w") as f:
            f.write("row,col,J,Gamma\n")
            for i in range(n):
                for k in range(n):
                    f.write("%d,%d,%.17g,%.17g\n"
                            % (i, k, self.j[i, k], self.gamma[i, k]))


@dataclass(frozen=True)
class EffectiveCouplings:
    j_eff: float
    gamma_eff: float
    convergence: Optional[float] = None   # change under radius halving
    near_divergent: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "j_eff": self.j_eff,
            "gamma_eff": self.gamma_eff,
            "convergence": self.convergence,
            "near_divergent": self.near_divergent,
        })


def greens_tensor(r_vec, k: float = TWO_PI) -> np.ndarray:
    """Free-space dipole propagator G(r) as a 3x3 complex matrix.

    The contact (delta-function) term is excluded; the self-interaction is
    handled separately through the gamma0 diagonal.
    """
    r_vec = np.asarray(r_vec, dtype=np.float64)
    r = np.linalg.norm(r_vec)
    if r == 0.0:
        raise ValueError("Green's tensor is singular at zero separation")
    x = k * r
    rhat = r_vec / r
    diag = 1.0 + 1j / x - 1.0 / x ** 2
    outer = -1.0 - 3j / x + 3.0 / x ** 2
    pre = np.exp(1j * x) / (4.0 * np.pi * r)
    return pre * (diag * np.eye(3) + outer * np.outer(rhat, rhat))


def pair_coupling(r_vec, gamma0: float = 1.0) -> tuple[float, float]:
    """(J, Gamma) for one atom pair, from the zz tensor projection."""
    g = greens_tensor(r_vec)
    c = -(3.0 * np.pi * gamma0 / TWO_PI) * g[2, 2]
    return float(c.real), float(-2.0 * c.imag)


def pair_coupling_inplane(r: float, gamma0: float = 1.0) -> tuple[float, float]:
    """(J, Gamma) for an in-plane separation r, scalar closed forms.

    Algebraically equal to pair_coupling for r perpendicular to z; kept as
    an independent route for cross-checks and as the form the lattice-sum
    kernels inline.
    """
    if r <= 0.0:
        raise ValueError("separation must be positive")
    x = TWO_PI * r
    s, c = np.sin(x), np.cos(x)
    gam = 1.5 * gamma0 * (s / x + c / x ** 2 - s / x ** 3)
    j = -0.75 * gamma0 / x * (c * (1.0 - 1.0 / x ** 2) - s / x)
    return float(j), float(gam)


def coupling_matrices(geometry: Geometry, gamma0: float = 1.0) -> CouplingMatrices:
    """Assemble the full J and Gamma matrices for a geometry."""
    pos = geometry.positions
    n = geometry.count
    if n == 1:
        return CouplingMatrices(np.zeros((1, 1)),
                                np.array([[gamma0]]), gamma0)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    np.fill_diagonal(dist, 1.0)  # placeholder, diagonal overwritten below
    zfrac2 = (diff[:, :, 2] / dist) ** 2
    x = TWO_PI * dist
    bracket = ((1.0 + 1j / x - 1.0 / x ** 2)
               + (-1.0 - 3j / x + 3.0 / x ** 2) * zfrac2)
    gzz = np.exp(1j * x) / (4.0 * np.pi * dist) * bracket
    c = -(3.0 * np.pi * gamma0 / TWO_PI) * gzz
    j = c.real.copy()
    gam = (-2.0 * c.imag).copy()
    np.fill_diagonal(j, 0.0)
    np.fill_diagonal(gam, gamma0)
    return CouplingMatrices(j, gam, gamma0)


def effective_couplings(matrices: CouplingMatrices,
                        reference: int = 0) -> EffectiveCouplings:
    """Row sums of J and Gamma excluding the diagonal.

    Geometry-independent plumbing: on permutationally symmetric geometries
    (rings) the result is reference-independent; elsewhere callers get the
    value seen by the chosen reference atom.
    """
    if not 0 <= reference < matrices.count:
        raise ValueError("reference atom out of range")
    j_eff = float(matrices.j[reference].sum())
    g_eff = float(matrices.gamma[reference].sum() - matrices.gamma0)
    return EffectiveCouplings(j_eff, g_eff)


def divergence_spacings(kind: LatticeKind, max_spacing: float) -> np.ndarray:
    """Spacings (in wavelengths) where the lattice sums diverge.

    Sites in phase with the origin exist whenever the spacing makes some
    shell radius an integer: at integer spacings for chains, and at
    sqrt(i^2 + j^2) for square lattices.
    """
    if kind == LatticeKind.CHAIN:
        return np.arange(1.0, np.floor(max_spacing) + 1.0)
    if kind == LatticeKind.SQUARE:
        s_max = int(np.ceil(max_spacing ** 2)) + 1
        vals = sorted({i * i + k * k
                       for i in range(int(np.sqrt(s_max)) + 1)
                       for k in range(int(np.sqrt(s_max)) + 1)} - {0})
        out = np.sqrt(np.array(vals, dtype=np.float64))
        return out[out <= max_spacing]
    raise ValueError("thermodynamic sums support chain and square only")


def thermodynamic_effective_couplings(
        kind: LatticeKind, spacing: float,
        radius: Optional[float] = None,
        window: float = DEFAULT_WINDOW,
        gamma0: float = 1.0) -> EffectiveCouplings:
    """Effective couplings of an infinite chain or square lattice.

    Sums pair couplings from the origin over all sites within ``radius``
    with tail averaging over the final ``window`` (in wavelengths); also
    evaluates at radius/2 and reports the difference as the convergence
    estimate. Spacings within the guard band of a divergence are flagged,
    not rejected.
    """
    kind = LatticeKind(kind)
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if radius is None:
        radius = DEFAULT_RADIUS[kind]
    if radius / 2.0 <= window:
        raise ValueError("radius must be at least twice the averaging window")
    if kind == LatticeKind.CHAIN:
        kernel = chain_lattice_tail_sum
    elif kind == LatticeKind.SQUARE:
        kernel = square_lattice_tail_sum
    else:
        raise ValueError("thermodynamic sums support chain and square only")
    j_full, g_full = kernel(spacing, radius, window)
    j_half, g_half = kernel(spacing, radius / 2.0, window)
    conv = max(abs(j_full - j_half), abs(g_full - g_half))
    divs = divergence_spacings(kind, spacing + 2.0 * DIVERGENCE_GUARD)
    near = bool(divs.size and np.min(np.abs(divs - spacing)) < DIVERGENCE_GUARD)
    return EffectiveCouplings(gamma0 * j_full, gamma0 * g_full,
                              convergence=gamma0 * conv, near_divergent=near)


def check_psd(matrices: CouplingMatrices) -> float:
    """Smallest eigenvalue of the dissipation matrix (>= 0 up to rounding)."""
    return float(np.linalg.eigvalsh(matrices.gamma).min())
