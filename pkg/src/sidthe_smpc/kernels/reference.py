"""NumPy reference implementation of the batched rollout kernels.

These functions are the pure-Python fallback for the compiled extension in
``_core.pyx``. Both backends perform the same floating-point operations in
the same order (the extension is compiled with FP contraction disabled), so
their outputs agree bitwise; the test suite enforces this.

State components are ordered (S, I, D, T, H, E); parameters are ordered
(alpha, gamma, lambda, delta, sigma, tau). Controls are applied with a
zero-order hold over each step.
"""

from __future__ import annotations

import numpy as np


def _rhs(s, i, d, t, ab, gamma, cih, delta, lam, sigma, tau):
    # Flow formulation: every flow enters once with each sign, so the
    # components sum to zero up to a few ULP.
    f_si = ab * s * i
    f_id = gamma * i
    f_ih = cih * i
    f_dt = delta * d
    f_dh = lam * d
    f_th = sigma * t
    f_te = tau * t
    ds = -f_si
    di = f_si - f_id - f_ih
    dd = f_id - f_dt - f_dh
    dt = f_dt - f_th - f_te
    dh = f_ih + f_dh + f_th
    de = f_te
    return ds, di, dd, dt, dh, de


def _rk4_stages(x, ab, gamma, cih, delta, lam, sigma, tau, h):
    """The four RK4 stage slopes and stage states for one step.

    ``x`` is a tuple of six (B,) arrays. Returns (k1, k2, k3, k4, x2, x3, x4)
    where each entry is a 6-tuple of (B,) arrays.
    """
    h2 = 0.5 * h
    k1 = _rhs(x[0], x[1], x[2], x[3], ab, gamma, cih, delta, lam, sigma, tau)
    x2 = tuple(x[c] + h2 * k1[c] for c in range(6))
    k2 = _rhs(x2[0], x2[1], x2[2], x2[3], ab, gamma, cih, delta, lam, sigma, tau)
    x3 = tuple(x[c] + h2 * k2[c] for c in range(6))
    k3 = _rhs(x3[0], x3[1], x3[2], x3[3], ab, gamma, cih, delta, lam, sigma, tau)
    x4 = tuple(x[c] + h * k3[c] for c in range(6))
    k4 = _rhs(x4[0], x4[1], x4[2], x4[3], ab, gamma, cih, delta, lam, sigma, tau)
    return k1, k2, k3, k4, x2, x3, x4


def rollout(x0, thetas, u, h=1.0):
    """Batched fixed-step RK4 integration of the SIDTHE dynamics.

    Parameters
    ----------
    x0 : (B, 6) array
        Initial states, one per batch entry.
    thetas : (B, 6) array
        Parameter vectors (alpha, gamma, lambda, delta, sigma, tau).
    u : (B, N) array
        Control value for each of the N steps (zero-order hold).
    h : float
        Step size in days.

    Returns
    -------
    (B, N+1, 6) array of states, ``states[:, 0] == x0``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n_batch, n_steps = u.shape
    alpha, gamma, lam, delta, sigma, tau = (np.ascontiguousarray(thetas[:, c], dtype=np.float64)
                                            for c in range(6))
    cih = (lam * gamma) / (lam + gamma)
    h6 = h / 6.0

    states = np.empty((n_batch, n_steps + 1, 6))
    states[:, 0, :] = x0
    x = tuple(states[:, 0, c].copy() for c in range(6))
    for k in range(n_steps):
        ab = alpha * (1.0 - u[:, k])
        k1, k2, k3, k4, _, _, _ = _rk4_stages(x, ab, gamma, cih, delta, lam, sigma, tau, h)
        x = tuple(x[c] + h6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) for c in range(6))
        for c in range(6):
            states[:, k + 1, c] = x[c]
    return states


def _jac_t_product(x, v, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau):
    """Transposed-Jacobian product of the SIDTHE right-hand side."""
    vs, vi, vd, vt, vh, ve = v
    s, i = x[0], x[1]
    w = vi - vs
    js = ab * i * w
    ji = ab * s * w - cout * vi + gamma * vd + cih * vh
    jd = -dl * vd + delta * vt + lam * vh
    jt = -st * vt + sigma * vh + tau * ve
    zero = np.zeros_like(js)
    return js, ji, jd, jt, zero, zero


def _du_product(x, v, alpha):
    """Control-derivative contraction: only S and I depend on u."""
    return alpha * x[0] * x[1] * (v[0] - v[1])


def rollout_vjp(states, thetas, u, seeds, h=1.0):
    """Reverse-mode pullback of :func:`rollout` onto the controls.

    Computes the gradient with respect to ``u`` of
    ``sum_{k>=1} <seeds[:, k, :], states[:, k, :]>``, re-deriving the RK4
    stage states from the stored day states.

    Parameters
    ----------
    states : (B, N+1, 6) array as returned by :func:`rollout`.
    thetas : (B, 6) array
    u : (B, N) array
    seeds : (B, N+1, 6) array
        Adjoint seeds per day; ``seeds[:, 0, :]`` is ignored (the initial
        state is not a decision variable).

    Returns
    -------
    (B, N) array: gradient with respect to each step's control.
    """
    u = np.asarray(u, dtype=np.float64)
    n_batch, n_steps = u.shape
    alpha, gamma, lam, delta, sigma, tau = (np.ascontiguousarray(thetas[:, c], dtype=np.float64)
                                            for c in range(6))
    cih = (lam * gamma) / (lam + gamma)
    cout = gamma + cih
    dl = delta + lam
    st = sigma + tau
    h2 = 0.5 * h
    h6 = h / 6.0

    gu = np.zeros((n_batch, n_steps))
    lam_adj = tuple(np.ascontiguousarray(seeds[:, n_steps, c], dtype=np.float64)
                    for c in range(6))
    for k in range(n_steps - 1, -1, -1):
        x = tuple(np.ascontiguousarray(states[:, k, c]) for c in range(6))
        ab = alpha * (1.0 - u[:, k])
        k1, k2, k3, _, x2, x3, x4 = _rk4_stages(x, ab, gamma, cih, delta, lam, sigma, tau, h)

        b = tuple(h6 * lam_adj[c] for c in range(6))
        kbar4 = b
        a4 = _jac_t_product(x4, kbar4, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau)
        gk = _du_product(x4, kbar4, alpha)
        kbar3 = tuple(2.0 * b[c] + h * a4[c] for c in range(6))
        a3 = _jac_t_product(x3, kbar3, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau)
        gk = gk + _du_product(x3, kbar3, alpha)
        kbar2 = tuple(2.0 * b[c] + h2 * a3[c] for c in range(6))
        a2 = _jac_t_product(x2, kbar2, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau)
        gk = gk + _du_product(x2, kbar2, alpha)
        kbar1 = tuple(b[c] + h2 * a2[c] for c in range(6))
        a1 = _jac_t_product(x, kbar1, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau)
        gk = gk + _du_product(x, kbar1, alpha)
        gu[:, k] = gk

        lam_adj = tuple(lam_adj[c] + a1[c] + a2[c] + a3[c] + a4[c] for c in range(6))
        if k > 0:
            lam_adj = tuple(lam_adj[c] + seeds[:, k, c] for c in range(6))
    return gu


def invariance_envelope(x0, thetas, bounds, u_max, band, h, n_steps):
    """Componentwise running maximum of (S, I, D, T) under band feedback.

    The feedback applies ``u_max`` whenever any of S, I, D, T is within a
    relative ``band`` of its bound (and 0 otherwise), evaluated at the start
    of each step and held constant over the step.

    Parameters
    ----------
    x0 : (B, 6) initial states.
    thetas : (B, 6) parameter vectors.
    bounds : (4,) upper bounds for (S, I, D, T).
    u_max, band, h : floats.
    n_steps : number of RK4 steps of size ``h``.

    Returns
    -------
    (B, 4) array: max over the trajectory (including ``x0``) of S, I, D, T.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n_batch = x0.shape[0]
    alpha, gamma, lam, delta, sigma, tau = (np.ascontiguousarray(thetas[:, c], dtype=np.float64)
                                            for c in range(6))
    cih = (lam * gamma) / (lam + gamma)
    h6 = h / 6.0
    triggers = np.asarray(bounds, dtype=np.float64) * (1.0 - band)

    x = tuple(x0[:, c].copy() for c in range(6))
    env = np.stack([x[c].copy() for c in range(4)], axis=1)
    for _ in range(n_steps):
        hot = ((x[0] >= triggers[0]) | (x[1] >= triggers[1])
               | (x[2] >= triggers[2]) | (x[3] >= triggers[3]))
        ab = alpha * (1.0 - np.where(hot, u_max, 0.0))
        k1, k2, k3, k4, _, _, _ = _rk4_stages(x, ab, gamma, cih, delta, lam, sigma, tau, h)
        x = tuple(x[c] + h6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) for c in range(6))
        for c in range(4):
            np.maximum(env[:, c], x[c], out=env[:, c])
    return env
