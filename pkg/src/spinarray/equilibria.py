"""Steady states of the symmetric model: roots, stability, regimes,
bistable widths.

Eliminating the transverse components through the linear subsystem (with
alpha = -(gamma0 - Gamma_eff s_z)/2 and beta = J_eff s_z, the steady
transverse parts are s_x = -beta Omega s_z / (alpha^2 + beta^2) and
s_y = alpha Omega s_z / (alpha^2 + beta^2)) turns the s_z steady-state
condition into the cubic

    A s^3 + (A + B) s^2 + (B + C + Omega^2/2) s + C = 0,
    A = Gamma_eff^2/4 + J_eff^2, B = -gamma0 Gamma_eff / 2, C = gamma0^2/4.

Roots come from the companion-matrix eigensolve (np.roots), which stays
well behaved near double roots where the closed-form cubic formula
cancels catastrophically. Only roots with negligible imaginary part are
physical. When the leading coefficients vanish (uncoupled atoms) the
polynomial degenerates and fewer than three roots exist.
"""

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .couplings import EffectiveCouplings
from .meanfield import DriveParams, rhs_symmetric

PHYSICALITY_TOL = 1e-8   # |imag| bound on a physical s_z root
REALNESS_TOL = 1e-8      # |imag| bound for a "real" Jacobian eigenvalue
SINGULAR_TOL = 1e-30     # alpha^2 + beta^2 below this: transverse subsystem singular


class StabilityClass(Enum):
    STABLE_FOCUS_NODE = "StableFocusNode"
    UNSTABLE_FOCUS_NODE = "UnstableFocusNode"
    SADDLE_FOCUS_1D = "SaddleFocus1D"
    SADDLE_FOCUS_2D = "SaddleFocus2D"
    DEGENERATE = "Degenerate"


class AnalyticRegime(Enum):
    MONO = "Mono"
    BI = "Bi"
    LC_CH = "LcCh"
    LC_CH_MONO = "LcChMono"
    UNCLASSIFIED = "Unclassified"


@dataclass
class Equilibrium:
    sz_root: complex
    physical: bool
    state: Optional[np.ndarray] = None          # (3,) when physical
    eigenvalues: Optional[np.ndarray] = None    # 3 complex, when physical
    stability: Optional[StabilityClass] = None


@dataclass(frozen=True)
class BistableWidth:
    width: float
    omega_lo: float
    omega_hi: float

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be >= 0")


def cubic_coefficients(eff: EffectiveCouplings, drive: DriveParams) -> np.ndarray:
    """Descending coefficients of the steady-state polynomial in s_z."""
    a = 0.25 * eff.gamma_eff ** 2 + eff.j_eff ** 2
    b = -0.5 * drive.gamma0 * eff.gamma_eff
    c = 0.25 * drive.gamma0 ** 2
    return np.array([a, a + b, b + c + 0.5 * drive.omega ** 2, c])


def steady_transverse(sz: float, eff: EffectiveCouplings,
                      drive: DriveParams) -> Optional[np.ndarray]:
    """Back-substitute a real s_z root; None if the transverse subsystem
    is singular there."""
    alpha = -0.5 * (drive.gamma0 - eff.gamma_eff * sz)
    beta = eff.j_eff * sz
    denom = alpha ** 2 + beta ** 2
    if denom < SINGULAR_TOL:
        return None
    sx = -beta * drive.omega * sz / denom
    sy = alpha * drive.omega * sz / denom
    return np.array([sx, sy, sz])


def jacobian_symmetric(state, eff: EffectiveCouplings,
                       drive: DriveParams) -> np.ndarray:
    """Analytic Jacobian of the symmetric equations at a state."""
    sx, sy, sz = np.asarray(state, dtype=np.float64)
    g0, om = drive.gamma0, drive.omega
    j, g = eff.j_eff, eff.gamma_eff
    alpha = -0.5 * (g0 - g * sz)
    return np.array([
        [alpha, j * sz, j * sy + 0.5 * g * sx],
        [-j * sz, alpha, -om - j * sx + 0.5 * g * sy],
        [-g * sx, om - g * sy, -g0],
    ])


def classify_eigenvalues(eigenvalues,
                         tol: float = REALNESS_TOL) -> StabilityClass:
    """Stability class from a Jacobian eigenvalue triple.

    One real eigenvalue plus a complex-conjugate pair: focus-node when all
    real parts share a sign (stable iff negative), saddle-focus otherwise
    (1d stable manifold iff the real eigenvalue is negative). All-real
    triples and real parts at the tolerance boundary are Degenerate rather
    than being forced into a class.
    """
    ev = np.asarray(eigenvalues, dtype=np.complex128)
    if ev.shape != (3,):
        raise ValueError("expected 3 eigenvalues")
    real_mask = np.abs(ev.imag) <= tol
    if real_mask.sum() != 1:
        return StabilityClass.DEGENERATE
    rho = float(ev[real_mask][0].real)
    pair = ev[~real_mask]
    if abs(pair[0].imag + pair[1].imag) > tol * max(1.0, abs(pair[0].imag)):
        return StabilityClass.DEGENERATE
    sigma = float(pair[0].real)
    if abs(rho) <= tol or abs(sigma) <= tol:
        return StabilityClass.DEGENERATE
    if rho < 0 and sigma < 0:
        return StabilityClass.STABLE_FOCUS_NODE
    if rho > 0 and sigma > 0:
        return StabilityClass.UNSTABLE_FOCUS_NODE
    if rho < 0:
        return StabilityClass.SADDLE_FOCUS_1D
    return StabilityClass.SADDLE_FOCUS_2D


def classify_equilibrium(eq: Equilibrium) -> StabilityClass:
    if not eq.physical:
        raise ValueError("stability is defined for physical equilibria only")
    if eq.stability is not None:
        return eq.stability
    return classify_eigenvalues(eq.eigenvalues)


def symmetric_equilibria(eff: EffectiveCouplings, drive: DriveParams,
                         tol_physical: float = PHYSICALITY_TOL) -> list[Equilibrium]:
    """All steady states, physical or not, ordered by Re(s_z root).

    Returns three equilibria generically; fewer when the polynomial
    degenerates (e.g. the uncoupled single atom, where it is linear).
    """
    if drive.gamma0 <= 0:
        raise ValueError("equilibrium analysis requires gamma0 > 0")
    coeffs = cubic_coefficients(eff, drive)
    while len(coeffs) > 1 and coeffs[0] == 0.0:
        coeffs = coeffs[1:]
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    out = []
    for root in sorted(roots, key=lambda z: (z.real, z.imag)):
        physical = abs(root.imag) <= tol_physical
        eq = Equilibrium(sz_root=complex(root), physical=physical)
        if physical:
            state = steady_transverse(float(root.real), eff, drive)
            if state is None:
                eq.stability = StabilityClass.DEGENERATE
            else:
                eq.state = state
                eq.eigenvalues = np.linalg.eigvals(
                    jacobian_symmetric(state, eff, drive))
                eq.stability = classify_eigenvalues(eq.eigenvalues)
        out.append(eq)
    return out


def classify_regime(eff: EffectiveCouplings, drive: DriveParams) -> AnalyticRegime:
    """Map the multiset of physical-equilibrium classes to a regime.

    Mono: a single physical point, a stable focus-node. Bi: three physical
    points, two stable focus-nodes plus a saddle-focus with 2d stable
    manifold. LcCh: a single physical point, a saddle-focus with 1d stable
    manifold. LcChMono: three physical points, one of each of the above.
    Anything else is reported Unclassified rather than forced to fit.
    """
    eqs = symmetric_equilibria(eff, drive)
    classes = Counter(eq.stability for eq in eqs if eq.physical)
    n_phys = sum(classes.values())
    if n_phys == 1:
        if classes[StabilityClass.STABLE_FOCUS_NODE] == 1:
            return AnalyticRegime.MONO
        if classes[StabilityClass.SADDLE_FOCUS_1D] == 1:
            return AnalyticRegime.LC_CH
        return AnalyticRegime.UNCLASSIFIED
    if n_phys == 3:
        if (classes[StabilityClass.STABLE_FOCUS_NODE] == 2
                and classes[StabilityClass.SADDLE_FOCUS_2D] == 1):
            return AnalyticRegime.BI
        if (classes[StabilityClass.STABLE_FOCUS_NODE] == 1
                and classes[StabilityClass.SADDLE_FOCUS_1D] == 1
                and classes[StabilityClass.SADDLE_FOCUS_2D] == 1):
            return AnalyticRegime.LC_CH_MONO
        return AnalyticRegime.UNCLASSIFIED
    return AnalyticRegime.UNCLASSIFIED


def count_physical_roots(eff: EffectiveCouplings, omega: float,
                         gamma0: float = 1.0,
                         tol_physical: float = PHYSICALITY_TOL) -> int:
    """Number of real s_z roots at a given drive strength."""
    coeffs = cubic_coefficients(eff, DriveParams(omega=omega, gamma0=gamma0))
    while len(coeffs) > 1 and coeffs[0] == 0.0:
        coeffs = coeffs[1:]
    if len(coeffs) <= 1:
        return 0
    roots = np.roots(coeffs)
    return int(np.sum(np.abs(roots.imag) <= tol_physical))


def bistable_width(eff: EffectiveCouplings,
                   omega_range: Optional[tuple] = None,
                   gamma0: float = 1.0,
                   n_scan: int = 512,
                   refine_tol: float = 1e-6) -> BistableWidth:
    """Width of the drive interval where all three roots are physical.

    Coarse scan over the range (default n_scan = 512 points), then
    bisection of each boundary to refine_tol. Boundary points where roots
    merge count as bistable. Returns zero width when no bistable point is
    found in range.
    """
    if omega_range is None:
        a = 0.25 * eff.gamma_eff ** 2 + eff.j_eff ** 2
        omega_range = (1e-3 * gamma0, 4.0 * np.sqrt(a) + 5.0 * gamma0)
    lo, hi = omega_range
    if not lo < hi:
        raise ValueError("omega range must be increasing")
    omegas = np.linspace(lo, hi, n_scan)
    tri = np.array([count_physical_roots(eff, w, gamma0) >= 3
                    for w in omegas])
    if not tri.any():
        return BistableWidth(0.0, 0.0, 0.0)
    idx = np.flatnonzero(tri)

    def bisect(w_out, w_in):
        # keeps w_in on the bistable side
        while abs(w_in - w_out) > refine_tol:
            mid = 0.5 * (w_in + w_out)
            if count_physical_roots(eff, mid, gamma0) >= 3:
                w_in = mid
            else:
                w_out = mid
        return 0.5 * (w_in + w_out)

    if idx[0] > 0:
        omega_lo = bisect(omegas[idx[0] - 1], omegas[idx[0]])
    else:
        omega_lo = omegas[0]
    if idx[-1] < n_scan - 1:
        omega_hi = bisect(omegas[idx[-1] + 1], omegas[idx[-1]])
    else:
        omega_hi = omegas[-1]
    return BistableWidth(omega_hi - omega_lo, omega_lo, omega_hi)


def equilibria_report(eff: EffectiveCouplings, drive: DriveParams) -> dict:
    """JSON-ready summary: roots, physicality, eigenvalues, classes, regime."""
    eqs = symmetric_equilibria(eff, drive)
    report = {
        "j_eff": eff.j_eff,
        "gamma_eff": eff.gamma_eff,
        "omega": drive.omega,
        "gamma0": drive.gamma0,
        "regime": classify_regime(eff, drive).value,
        "equilibria": [],
    }
    for eq in eqs:
        entry = {
            "sz_root": [eq.sz_root.real, eq.sz_root.imag],
            "physical": eq.physical,
            "stability": eq.stability.value if eq.stability else None,
            "state": eq.state.tolist() if eq.state is not None else None,
            "eigenvalues": ([[z.real, z.imag] for z in eq.eigenvalues]
                            if eq.eigenvalues is not None else None),
        }
        if eq.state is not None:
            entry["residual"] = float(np.linalg.norm(
                rhs_symmetric(eq.state, eff, drive)))
        report["equilibria"].append(entry)
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
