"""Mean-field equations of motion and their adaptive integration.

Two system flavors share one kernel:

* FullSystem: N coupled Bloch vectors, state shape (N, 3).
* SymmetricSystem: the permutationally symmetric three-variable reduction,
  state shape (3,). It is integrated as the N = 1 case of the full
  equations with (J_eff, Gamma_eff) in the 1x1 coupling matrices, which
  reproduces the reduced equations exactly (the coherent term cancels from
  the s_z equation).

States are plain float arrays. Time is measured in units of 1/gamma0.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .couplings import CouplingMatrices, EffectiveCouplings
from .kernels import (STATUS_MAX_STEPS, STATUS_OK, STATUS_STEP_UNDERFLOW,
                      bloch_rhs, integrate_adaptive)

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11
DEFAULT_MAX_STEPS = 20_000_000

# named initial states; "tilted" starts every atom at the off-axis point
# used to probe coexisting attractors
PRESETS = {
    "ground": np.array([0.0, 0.0, -1.0]),
    "excited": np.array([0.0, 0.0, 1.0]),
    "tilted": np.array([-0.9, 0.1, -0.6]),
}


@dataclass(frozen=True)
class DriveParams:
    omega: float
    gamma0: float = 1.0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        # gamma0 = 0 is allowed so the undamped (norm-conserving) limit is
        # reachable; everything physical in this package uses gamma0 > 0
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be >= 0")


@dataclass(frozen=True)
class FullSystem:
    matrices: CouplingMatrices
    drive: DriveParams

    @property
    def n_atoms(self) -> int:
        return self.matrices.count

    def kernel_args(self):
        return (self.matrices.j, self.matrices.gamma_offdiag(),
                self.drive.omega, self.drive.gamma0)


@dataclass(frozen=True)
class SymmetricSystem:
    eff: EffectiveCouplings
    drive: DriveParams

    @property
    def n_atoms(self) -> int:
        return 1

    def kernel_args(self):
        return (np.array([[self.eff.j_eff]]),
                np.array([[self.eff.gamma_eff]]),
                self.drive.omega, self.drive.gamma0)


@dataclass
class Trajectory:
    times: np.ndarray          # (T,)
    states: np.ndarray         # (T, N, 3) or (T, 3) for the symmetric model
    final_state: np.ndarray
    final_time: float
    n_accepted: int
    n_rejected: int
    status: int
    max_bloch_norm: float

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states lengths differ")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


class IntegrationError(RuntimeError):
    """Integration stopped early; carries the partial trajectory."""

    def __init__(self, message, trajectory: Trajectory, status: int):
        super().__init__(message)
        self.trajectory = trajectory
        self.status = status


def uniform_state(vec3, n_atoms: int) -> np.ndarray:
    """All atoms in the same single-atom state."""
    vec3 = np.asarray(vec3, dtype=np.float64)
    if vec3.shape != (3,):
        raise ValueError("expected a 3-component state")
    return np.tile(vec3, (n_atoms, 1))


def _flatten(state: np.ndarray, n_atoms: int) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64)
    if state.shape == (3,):
        state = uniform_state(state, n_atoms)
    if state.shape != (n_atoms, 3):
        raise ValueError(f"state shape {state.shape} does not match "
                         f"{n_atoms} atoms")
    return np.concatenate((state[:, 0], state[:, 1], state[:, 2]))


def _unflatten(y: np.ndarray, n_atoms: int, symmetric: bool) -> np.ndarray:
    n = n_atoms
    parts = np.stack((y[..., 0:n], y[..., n:2 * n], y[..., 2 * n:3 * n]),
                     axis=-1)
    if symmetric:
        return parts[..., 0, :]
    return parts


def rhs_full(state, matrices: CouplingMatrices, drive: DriveParams):
    """Time derivative of an (N, 3) spin configuration."""
    n = matrices.count
    y = _flatten(state, n)
    out = np.empty_like(y)
    bloch_rhs(y, matrices.j, matrices.gamma_offdiag(),
              drive.omega, drive.gamma0, out)
    return _unflatten(out, n, symmetric=False)


def rhs_symmetric(state, eff: EffectiveCouplings, drive: DriveParams):
    """Time derivative of the three-variable symmetric state."""
    sys = SymmetricSystem(eff, drive)
    y = _flatten(state, 1)
    out = np.empty_like(y)
    bloch_rhs(y, *sys.kernel_args()[:2], drive.omega, drive.gamma0, out)
    return _unflatten(out, 1, symmetric=True)


def integrate(system, initial, t_end: float,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              t_eval=None, max_steps: int = DEFAULT_MAX_STEPS) -> Trajectory:
    """Integrate from t = 0 to t_end, sampling at t_eval (default: t_end).

    Deterministic for fixed inputs. Raises IntegrationError on step-size
    underflow or step-budget exhaustion, with the partial trajectory
    attached to the exception.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    n = system.n_atoms
    symmetric = isinstance(system, SymmetricSystem)
    y0 = _flatten(initial, n)
    if t_eval is None:
        t_eval = np.array([float(t_end)])
    else:
        t_eval = np.asarray(t_eval, dtype=np.float64)
        if t_eval.ndim != 1 or (len(t_eval) > 1 and np.any(np.diff(t_eval) < 0)):
            raise ValueError("t_eval must be a sorted 1-d array")
        if len(t_eval) and (t_eval[0] < 0 or t_eval[-1] > t_end):
            raise ValueError("t_eval must lie within [0, t_end]")
    jmat, goff, omega, gamma0 = system.kernel_args()
    y_eval, y_final, t_reached, n_acc, n_rej, status = integrate_adaptive(
        np.ascontiguousarray(jmat), np.ascontiguousarray(goff),
        float(omega), float(gamma0), y0, float(t_end),
        float(rtol), float(atol), t_eval, max_steps)

    valid = ~np.isnan(y_eval[:, 0]) if len(t_eval) else np.zeros(0, bool)
    states = _unflatten(y_eval[valid], n, symmetric)
    norms = np.sqrt((y_final.reshape(3, n) ** 2).sum(axis=0))
    max_norm = float(norms.max())
    if valid.any():
        samp = y_eval[valid].reshape(-1, 3, n)
        max_norm = max(max_norm, float(np.sqrt((samp ** 2).sum(axis=1)).max()))
    if max_norm > 1.0 + 1e-6:
        log.debug("Bloch norm reached %.6f (gain regimes may leave the "
                  "unit ball)", max_norm)
    traj = Trajectory(times=t_eval[valid], states=states,
                      final_state=_unflatten(y_final, n, symmetric),
                      final_time=float(t_reached),
                      n_accepted=int(n_acc), n_rejected=int(n_rej),
                      status=int(status), max_bloch_norm=max_norm)
    if status == STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {t_reached:.6g}", traj, status)
    if status == STATUS_MAX_STEPS:
        raise IntegrationError(
            f"step budget exhausted at t = {t_reached:.6g}", traj, status)
    return traj


@dataclass
class AttractorResult:
    final_state: np.ndarray
    anchor_times: np.ndarray
    anchor_states: np.ndarray  # (n_anchors, ...) stacked states


def evolve_to_attractor(system, initial, horizon: float = 2000.0,
                        anchor_times=None,
                        rtol: float = DEFAULT_RTOL,
                        atol: float = DEFAULT_ATOL) -> AttractorResult:
    """Integrate to the horizon and sample late-time anchor states.

    Default anchors sit at horizon - 400 .. horizon in steps of 100, the
    sampling used by the trajectory-separation protocol.
    """
    if anchor_times is None:
        anchor_times = horizon - 400.0 + 100.0 * np.arange(5)
    anchor_times = np.asarray(anchor_times, dtype=np.float64)
    if np.any(anchor_times <= 0) or np.any(anchor_times > horizon):
        raise ValueError("anchor times must lie in (0, horizon]")
    traj = integrate(system, initial, horizon, rtol=rtol, atol=atol,
                     t_eval=anchor_times)
    return AttractorResult(final_state=traj.final_state,
                           anchor_times=anchor_times,
                           anchor_states=traj.states)


def trajectory_to_csv(traj: Trajectory, path, averaged: bool = False) -> None:
    """Write time plus per-atom columns (sx_0.., sy_0.., sz_0..), or the
    atom-averaged components when ``averaged`` is set."""
    states = traj.states
    if states.ndim == 2:  # symmetric model
        states = states[:, None, :]
    n = states.shape[1]
    with open(path, "w") as f:
        if averaged:
            f.write("time,sx_mean,sy_mean,sz_mean\n")
            for t, s in zip(traj.times, states):
                m = s.mean(axis=0)
                f.write("%.17g,%.17g,%.17g,%.17g\n" % (t, m[0], m[1], m[2]))
        else:
            cols = (["sx_%d" % i for i in range(n)]
                    + ["sy_%d" % i for i in range(n)]
                    + ["sz_%d" % i for i in range(n)])
            f.write("time," + ",".join(cols) + "\n")
            for t, s in zip(traj.times, states):
                row = np.concatenate((s[:, 0], s[:, 1], s[:, 2]))
                f.write("%.17g," % t
                        + ",".join("%.17g" % v for v in row) + "\n")
