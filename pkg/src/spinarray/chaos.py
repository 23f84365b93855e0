"""Trajectory-separation analysis: perturb attractor states, measure how
fast neighboring orbits drift apart, and classify the late-time dynamics.

Protocol: evolve to the attractor, take the state at each anchor time,
displace it along eight canonical directions (the same small vector added
to every atom), propagate both orbits for a fixed horizon, and record the
distance curve. The averaged final separation relative to the mean initial
separation d0 distinguishes steady states (shrinking), limit cycles
(stagnant) and chaos (growing). A per-trial exponential rate is also
fitted, but only its sign is robust: the fit cannot separate steady states
from limit cycles, and the ratio d_avg/d0 is the quantity to trust.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .meanfield import (DEFAULT_ATOL, DEFAULT_RTOL, IntegrationError,
                        SymmetricSystem, evolve_to_attractor, integrate)

D0_COEFF = (2.0 + np.sqrt(3.0)) / 3.0

# canonical displacement directions, scaled by epsilon
_DIRECTIONS = np.array([
    [1, 0, 0], [-1, 0, 0],
    [0, 1, 0], [0, -1, 0],
    [0, 0, 1], [0, 0, -1],
    [1, 1, 1], [-1, -1, -1],
], dtype=np.float64)


class NumericRegime(Enum):
    STEADY_STATE = "SteadyState"
    LIMIT_CYCLE = "LimitCycle"
    CHAOS = "Chaos"


@dataclass(frozen=True)
class SeparationConfig:
    epsilon: float = 1e-5
    anchor_times: tuple = (1600.0, 1700.0, 1800.0, 1900.0, 2000.0)
    horizon: float = 200.0
    tail_window: tuple = (180.0, 200.0)
    dt_sample: float = 0.1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        at = np.asarray(self.anchor_times, dtype=np.float64)
        if at.ndim != 1 or len(at) < 1 or np.any(np.diff(at) <= 0) or at[0] <= 0:
            raise ValueError("anchor times must be positive and increasing")
        lo, hi = self.tail_window
        if not 0 <= lo < hi <= self.horizon:
            raise ValueError("tail window must lie inside [0, horizon]")
        if self.dt_sample <= 0 or self.dt_sample > hi - lo:
            raise ValueError("dt_sample must be positive and resolve the tail")


@dataclass
class TrialRecord:
    anchor_time: float
    vector_index: int
    d_init: float
    d_end: float = np.nan
    lyapunov: float = np.nan
    t_fit: float = np.nan
    crossed: bool = False
    failed: bool = False
    message: str = ""


@dataclass
class SeparationOutcome:
    d_avg: float
    d_avg_ratio: float
    lyapunov: float
    d0: float
    trials: list
    effective_trials: int
    flags: list = field(default_factory=list)
    curve_times: Optional[np.ndarray] = None
    curves: Optional[np.ndarray] = None  # (n_trials, T) when stored


def displacement_vectors(epsilon: float, n_atoms: int) -> np.ndarray:
    """The 8 canonical displacements; shape (8, 3) for a single effective
    atom, else (8, n_atoms, 3) with the same vector applied to every atom."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    base = epsilon * _DIRECTIONS
    if n_atoms == 1:
        return base.copy()
    return np.repeat(base[:, None, :], n_atoms, axis=1)


def d0_constant(epsilon: float, n_atoms: int) -> float:
    """Normalization for d_avg: the quoted mean initial separation.

    Note this is the conventional constant, not the arithmetic mean of the
    eight displacement norms ((3 + sqrt(3))/4 per atom factor); the quoted
    value is kept so ratios are comparable across studies using it.
    """
    return float(np.sqrt(n_atoms) * D0_COEFF * epsilon)


def fit_separation_rate(times, dists, d_init, tail_window):
    """Fit the exponential separation rate of one distance curve.

    d_end is the mean distance over the tail window; the fit runs from 0
    to the first crossing of |d_end - d_init| / 2, or over the whole
    horizon (crossed = False) when the curve never reaches that level.
    Returns (lyapunov, t_fit, d_end, crossed).
    """
    times = np.asarray(times, dtype=np.float64)
    dists = np.asarray(dists, dtype=np.float64)
    tail = (times >= tail_window[0]) & (times <= tail_window[1])
    if not tail.any():
        raise ValueError("tail window contains no samples")
    d_end = float(dists[tail].mean())
    threshold = 0.5 * abs(d_end - d_init)
    delta = dists - threshold
    crossed = False
    i_fit = len(times) - 1
    if delta[0] == 0.0:
        crossed = True
        i_fit = 1
    else:
        sign0 = np.sign(delta[0])
        hits = np.flatnonzero(np.sign(delta) != sign0)
        if hits.size:
            crossed = True
            i_fit = max(int(hits[0]), 1)
    logd = np.log(np.maximum(dists[:i_fit + 1], 1e-300))
    slope = np.polyfit(times[:i_fit + 1], logd, 1)[0]
    return float(slope), float(times[i_fit]), d_end, crossed


def _distance_curve(states_a, states_b):
    diff = (states_a - states_b).reshape(len(states_a), -1)
    return np.sqrt((diff ** 2).sum(axis=1))


def separation_analysis(system, initial,
                        config: SeparationConfig = SeparationConfig(),
                        rtol: float = DEFAULT_RTOL,
                        atol: float = DEFAULT_ATOL,
                        n_threads: int = 1,
                        store_curves: bool = False) -> SeparationOutcome:
    """Run the full perturbation protocol and aggregate the trials.

    len(anchor_times) x 8 trials; the unperturbed orbit from each anchor is
    shared by its eight trials. Failed integrations drop the affected
    trials and are flagged; aggregation averages in fixed trial order, so
    the result does not depend on n_threads.
    """
    symmetric = isinstance(system, SymmetricSystem)
    n_atoms = system.n_atoms
    d0 = d0_constant(config.epsilon, 1 if symmetric else n_atoms)
    displacements = displacement_vectors(config.epsilon,
                                         1 if symmetric else n_atoms)
    att = evolve_to_attractor(system, initial,
                              horizon=float(max(config.anchor_times)),
                              anchor_times=np.asarray(config.anchor_times),
                              rtol=rtol, atol=atol)
    n_samples = int(round(config.horizon / config.dt_sample)) + 1
    times = np.linspace(0.0, config.horizon, n_samples)

    def propagate(state):
        traj = integrate(system, state, config.horizon, rtol=rtol, atol=atol,
                         t_eval=times)
        return traj.states

    def run_base(i_anchor):
        try:
            return propagate(att.anchor_states[i_anchor]), ""
        except IntegrationError as exc:
            return None, str(exc)

    n_anchors = len(config.anchor_times)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            bases = list(pool.map(run_base, range(n_anchors)))
    else:
        bases = [run_base(i) for i in range(n_anchors)]

    trial_specs = [(ia, iv) for ia in range(n_anchors)
                   for iv in range(len(displacements))]

    def run_trial(spec):
        ia, iv = spec
        anchor_t = float(config.anchor_times[ia])
        disp = displacements[iv]
        d_init = float(np.linalg.norm(disp))
        rec = TrialRecord(anchor_time=anchor_t, vector_index=iv,
                          d_init=d_init)
        base_states, base_err = bases[ia]
        if base_states is None:
            rec.failed = True
            rec.message = f"attractor orbit failed: {base_err}"
            return rec, None
        try:
            pert_states = propagate(att.anchor_states[ia] + disp)
        except IntegrationError as exc:
            rec.failed = True
            rec.message = str(exc)
            return rec, None
        dists = _distance_curve(base_states, pert_states)
        lam, t_fit, d_end, crossed = fit_separation_rate(
            times, dists, d_init, config.tail_window)
        rec.d_end = d_end
        rec.lyapunov = lam
        rec.t_fit = t_fit
        rec.crossed = crossed
        return rec, (dists if store_curves else None)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run_trial, trial_specs))
    else:
        results = [run_trial(s) for s in trial_specs]

    trials = [rec for rec, _ in results]
    flags = []
    d_ends, lams = [], []
    for k, rec in enumerate(trials):
        if rec.failed:
            flags.append(f"trial-{k}-dropped: {rec.message}")
        else:
            d_ends.append(rec.d_end)
            lams.append(rec.lyapunov)
    effective = len(d_ends)
    d_avg = float(np.mean(d_ends)) if effective else np.nan
    lam = float(np.mean(lams)) if effective else np.nan
    curves = None
    if store_curves:
        curves = np.full((len(trials), n_samples), np.nan)
        for k, (_, dists) in enumerate(results):
            if dists is not None:
                curves[k] = dists
    return SeparationOutcome(d_avg=d_avg, d_avg_ratio=d_avg / d0,
                             lyapunov=lam, d0=d0, trials=trials,
                             effective_trials=effective, flags=flags,
                             curve_times=times if store_curves else None,
                             curves=curves)


def classify_numeric(outcome: SeparationOutcome) -> NumericRegime:
    """Threshold map: ratio <= 0.1 steady state, > 1 chaos, else limit
    cycle."""
    r = outcome.d_avg_ratio
    if not np.isfinite(r):
        raise ValueError("outcome has no successful trials")
    if r <= 1e-1:
        return NumericRegime.STEADY_STATE
    if r > 1e0:
        return NumericRegime.CHAOS
    return NumericRegime.LIMIT_CYCLE


def outcome_to_json(outcome: SeparationOutcome) -> str:
    return json.dumps({
        "d_avg": outcome.d_avg,
        "d_avg_ratio": outcome.d_avg_ratio,
        "lyapunov": outcome.lyapunov,
        "d0": outcome.d0,
        "effective_trials": outcome.effective_trials,
        "regime": (classify_numeric(outcome).value
                   if outcome.effective_trials else None),
        "flags": outcome.flags,
        "trials": [{
            "anchor_time": t.anchor_time,
            "vector_index": t.vector_index,
            "d_init": t.d_init,
            "d_end": t.d_end,
            "lyapunov": t.lyapunov,
            "t_fit": t.t_fit,
            "crossed": t.crossed,
            "failed": t.failed,
            "message": t.message,
        } for t in outcome.trials],
    }, indent=2)


def distance_curves_to_csv(outcome: SeparationOutcome, path) -> None:
    """Distance-vs-time curves for every trial (needs store_curves)."""
    if outcome.curves is None:
        raise ValueError("curves were not stored; rerun with store_curves")
    cols = ["t%s_v%d" % (("%g" % t.anchor_time), t.vector_index)
            for t in outcome.trials]
    with open(path, "w") as f:
        f.write("time," + ",".join(cols) + "\n")
        for i, t in enumerate(outcome.curve_times):
            f.write("%.17g," % t + ",".join(
                "%.17g" % outcome.curves[k, i]
                for k in range(len(outcome.trials))) + "\n")
