"""Hot numerical kernels: the mean-field right-hand side, an adaptive
Dormand-Prince 5(4) integrator with dense output, and truncated lattice sums.

Everything here is written in numba-compatible numpy and wrapped with
``maybe_njit``, so the identical source runs compiled or as plain numpy
depending on SPIN_ARRAY_BACKEND (see :mod:`spinarray.backend`).

State layout is flat, x = (sx_1..sx_N, sy_1..sy_N, sz_1..sz_N). The
permutationally symmetric three-variable model is the N = 1 case of the
same equations with the effective couplings placed in the 1x1 matrices,
so a single right-hand side serves both models.
"""

import numpy as np

from .backend import maybe_njit

TWO_PI = 2.0 * np.pi

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

MIN_STEP = 1e-12

# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = [3 / 40, 9 / 40]
_DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_DP_B = _DP_A[6, :7].copy()
# difference between the 5th and embedded 4th order weights
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])
# 4th-order dense-output polynomial (Shampine); row q holds the
# coefficients of theta^1..theta^4 multiplying stage q.
_DP_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])


@maybe_njit(cache=True, nogil=True)
def bloch_rhs(y, jmat, goff, omega, gamma0, out):
    """Mean-field equations of motion, written into ``out``.

    jmat holds the coherent couplings J_ik (zero diagonal), goff the
    dissipative couplings with the single-atom rate removed from the
    diagonal, so the matrix-vector products realize the i != k sums.
    """
    n = jmat.shape[0]
    sx = y[0:n]
    sy = y[n:2 * n]
    sz = y[2 * n:3 * n]
    jx = np.dot(jmat, sx)
    jy = np.dot(jmat, sy)
    gx = np.dot(goff, sx)
    gy = np.dot(goff, sy)
    out[0:n] = (jy + 0.5 * gx) * sz - 0.5 * gamma0 * sx
    out[n:2 * n] = (0.5 * gy - jx) * sz - 0.5 * gamma0 * sy - omega * sz
    out[2 * n:3 * n] = (omega * sy - gamma0 * (sz + 1.0)
                        - (jy * sx - jx * sy)
                        - 0.5 * (gx * sx + gy * sy))


@maybe_njit(cache=True, nogil=True)
def integrate_adaptive(jmat, goff, omega, gamma0, y0, t_end,
                       rtol, atol, t_eval, max_steps):
    """Embedded Runge-Kutta 5(4) integration from t = 0 to t_end.

    Dense output: entries of the sorted array t_eval are filled by
    4th-order interpolation inside each accepted step, so sampling does
    not constrain step selection. Returns
    (y_eval, y_final, t_reached, n_accepted, n_rejected, status).
    Rows of y_eval beyond t_reached stay NaN when integration stops early.
    """
    dim = y0.shape[0]
    n_eval = t_eval.shape[0]
    y_eval = np.full((n_eval, dim), np.nan)
    K = np.empty((7, dim))
    y = y0.copy()
    t = 0.0
    ieval = 0
    while ieval < n_eval and t_eval[ieval] <= 0.0:
        y_eval[ieval, :] = y0
        ieval += 1

    bloch_rhs(y, jmat, goff, omega, gamma0, K[0])

    # initial step size heuristic
    sc = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / sc) ** 2))
    d1 = np.sqrt(np.mean((K[0] / sc) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    f1 = np.empty(dim)
    bloch_rhs(y + h * K[0], jmat, goff, omega, gamma0, f1)
    d2 = np.sqrt(np.mean(((f1 - K[0]) / sc) ** 2)) / h
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100.0 * h, h1, t_end)

    n_accepted = 0
    n_rejected = 0
    status = STATUS_OK
    while t < t_end:
        if h < MIN_STEP:
            status = STATUS_STEP_UNDERFLOW
            break
        if n_accepted + n_rejected >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if t + h > t_end:
            h = t_end - t
        for s in range(1, 7):
            bloch_rhs(y + h * np.dot(_DP_A[s, :s], K[:s]),
                      jmat, goff, omega, gamma0, K[s])
        ynew = y + h * np.dot(_DP_B, K)
        errvec = h * np.dot(_DP_E, K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        errnorm = np.sqrt(np.mean((errvec / sc) ** 2))
        if errnorm <= 1.0:
            tnew = t + h
            while ieval < n_eval and t_eval[ieval] <= tnew:
                theta = (t_eval[ieval] - t) / h
                tpow = np.empty(4)
                th = theta
                for j in range(4):
                    tpow[j] = th
                    th *= theta
                y_eval[ieval, :] = y + h * np.dot(np.dot(_DP_P, tpow), K)
                ieval += 1
            y = ynew
            K[0, :] = K[6, :]  # first-same-as-last
            t = tnew
            n_accepted += 1
            if errnorm == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, max(0.2, 0.9 * errnorm ** -0.2))
            h *= fac
        else:
            n_rejected += 1
            h *= max(0.2, 0.9 * errnorm ** -0.2)
    return y_eval, y, t, n_accepted, n_rejected, status


@maybe_njit(cache=True, nogil=True)
def square_lattice_tail_sum(spacing, radius, window):
    """Pair couplings (J, Gamma) summed from the origin over an infinite
    square lattice, truncated at ``radius`` with tail averaging.

    The raw partial sums oscillate with period 1 in r (lengths in units of
    the transition wavelength) and a non-decaying envelope, so the plain
    truncated sum does not converge. Averaging the partial sums S(r)
    uniformly over r in [radius - window, radius] is equivalent to
    weighting each site term by clip((radius - r)/window, 0, 1), which is
    what is computed here. Sites on a common shell share a weight, so
    shells are never split. ``window`` should span many oscillation
    periods; see couplings.thermodynamic_effective_couplings for defaults.
    """
    m = int(radius / spacing) + 1
    ks = np.arange(-m, m + 1)
    k2 = (ks * ks).astype(np.float64)
    a2 = spacing * spacing
    rad2 = radius * radius
    j_sum = 0.0
    g_sum = 0.0
    for i in range(-m, m + 1):
        r2 = a2 * (k2 + float(i * i))
        mask = (r2 > 0.0) & (r2 <= rad2)
        r = np.sqrt(r2[mask])
        kr = TWO_PI * r
        s = np.sin(kr)
        c = np.cos(kr)
        inv = 1.0 / kr
        g = 1.5 * (s * inv + (c - s * inv) * inv * inv)
        j = -0.75 * inv * (c * (1.0 - inv * inv) - s * inv)
        w = np.minimum(1.0, (radius - r) / window)
        j_sum += np.sum(j * w)
        g_sum += np.sum(g * w)
    return j_sum, g_sum


@maybe_njit(cache=True, nogil=True)
def chain_lattice_tail_sum(spacing, radius, window):
    """Same tail-averaged coupling sum for an infinite chain."""
    m = int(radius / spacing)
    n = np.arange(1, m + 1).astype(np.float64)
    r = spacing * n
    r = r[r <= radius]
    kr = TWO_PI * r
    s = np.sin(kr)
    c = np.cos(kr)
    inv = 1.0 / kr
    g = 3.0 * (s * inv + (c - s * inv) * inv * inv)
    j = -1.5 * inv * (c * (1.0 - inv * inv) - s * inv)
    w = np.minimum(1.0, (radius - r) / window)
    return float(np.sum(j * w)), float(np.sum(g * w))
