# cython: boundscheck=False, wraparound=False, initializedcheck=False
# cython: cdivision=True, language_level=3
"""Compiled rollout kernels.

Bit-for-bit equivalent to ``kernels.reference``: identical operations in
identical order, and the build disables FP contraction so no FMA fusing can
perturb results. Loops run per batch entry with the six-component state held
in registers.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _rhs1(double s, double i, double d, double t,
                       double ab, double gamma, double cih, double delta,
                       double lam, double sigma, double tau,
                       double* out) noexcept nogil:
    cdef double f_si = ab * s * i
    cdef double f_id = gamma * i
    cdef double f_ih = cih * i
    cdef double f_dt = delta * d
    cdef double f_dh = lam * d
    cdef double f_th = sigma * t
    cdef double f_te = tau * t
    out[0] = -f_si
    out[1] = f_si - f_id - f_ih
    out[2] = f_id - f_dt - f_dh
    out[3] = f_dt - f_th - f_te
    out[4] = f_ih + f_dh + f_th
    out[5] = f_te


cdef inline void _jt1(double s, double i, const double* v,
                      double ab, double gamma, double cih, double cout,
                      double dl, double st, double lam, double delta,
                      double sigma, double tau,
                      double* out) noexcept nogil:
    cdef double w = v[1] - v[0]
    out[0] = ab * i * w
    out[1] = ab * s * w - cout * v[1] + gamma * v[2] + cih * v[4]
    out[2] = -dl * v[2] + delta * v[3] + lam * v[4]
    out[3] = -st * v[3] + sigma * v[4] + tau * v[5]
    out[4] = 0.0
    out[5] = 0.0


cdef inline double _du1(double s, double i, const double* v, double alpha) noexcept nogil:
    return alpha * s * i * (v[0] - v[1])


def rollout(const double[:, ::1] x0, const double[:, ::1] thetas, const double[:, ::1] u, double h):
    cdef Py_ssize_t n_batch = u.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    states_np = np.empty((n_batch, n_steps + 1, 6))
    cdef double[:, :, ::1] states = states_np
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef Py_ssize_t b, k, c
    cdef double alpha, gamma, lam, delta, sigma, tau, cih, ab
    cdef double x[6]
    cdef double x2[6]
    cdef double x3[6]
    cdef double x4[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]

    with nogil:
        for b in range(n_batch):
            alpha = thetas[b, 0]; gamma = thetas[b, 1]; lam = thetas[b, 2]
            delta = thetas[b, 3]; sigma = thetas[b, 4]; tau = thetas[b, 5]
            cih = (lam * gamma) / (lam + gamma)
            for c in range(6):
                x[c] = x0[b, c]
                states[b, 0, c] = x[c]
            for k in range(n_steps):
                ab = alpha * (1.0 - u[b, k])
                _rhs1(x[0], x[1], x[2], x[3], ab, gamma, cih, delta, lam, sigma, tau, k1)
                for c in range(6):
                    x2[c] = x[c] + h2 * k1[c]
                _rhs1(x2[0], x2[1], x2[2], x2[3], ab, gamma, cih, delta, lam, sigma, tau, k2)
                for c in range(6):
                    x3[c] = x[c] + h2 * k2[c]
                _rhs1(x3[0], x3[1], x3[2], x3[3], ab, gamma, cih, delta, lam, sigma, tau, k3)
                for c in range(6):
                    x4[c] = x[c] + h * k3[c]
                _rhs1(x4[0], x4[1], x4[2], x4[3], ab, gamma, cih, delta, lam, sigma, tau, k4)
                for c in range(6):
                    x[c] = x[c] + h6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
                    states[b, k + 1, c] = x[c]
    return states_np


def rollout_vjp(const double[:, :, ::1] states, const double[:, ::1] thetas, const double[:, ::1] u,
                const double[:, :, ::1] seeds, double h):
    cdef Py_ssize_t n_batch = u.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    gu_np = np.zeros((n_batch, n_steps))
    cdef double[:, ::1] gu = gu_np
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef Py_ssize_t b, k, c
    cdef double alpha, gamma, lam, delta, sigma, tau, cih, cout, dl, st, ab, gk
    cdef double x[6]
    cdef double x2[6]
    cdef double x3[6]
    cdef double x4[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double l[6]
    cdef double b6[6]
    cdef double kbar[6]
    cdef double a1[6]
    cdef double a2[6]
    cdef double a3[6]
    cdef double a4[6]

    with nogil:
        for b in range(n_batch):
            alpha = thetas[b, 0]; gamma = thetas[b, 1]; lam = thetas[b, 2]
            delta = thetas[b, 3]; sigma = thetas[b, 4]; tau = thetas[b, 5]
            cih = (lam * gamma) / (lam + gamma)
            cout = gamma + cih
            dl = delta + lam
            st = sigma + tau
            for c in range(6):
                l[c] = seeds[b, n_steps, c]
            for k in range(n_steps - 1, -1, -1):
                for c in range(6):
                    x[c] = states[b, k, c]
                ab = alpha * (1.0 - u[b, k])
                # recompute the stage states of the forward step
                _rhs1(x[0], x[1], x[2], x[3], ab, gamma, cih, delta, lam, sigma, tau, k1)
                for c in range(6):
                    x2[c] = x[c] + h2 * k1[c]
                _rhs1(x2[0], x2[1], x2[2], x2[3], ab, gamma, cih, delta, lam, sigma, tau, k2)
                for c in range(6):
                    x3[c] = x[c] + h2 * k2[c]
                _rhs1(x3[0], x3[1], x3[2], x3[3], ab, gamma, cih, delta, lam, sigma, tau, k3)
                for c in range(6):
                    x4[c] = x[c] + h * k3[c]

                for c in range(6):
                    b6[c] = h6 * l[c]
                # stage 4
                for c in range(6):
                    kbar[c] = b6[c]
                _jt1(x4[0], x4[1], kbar, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau, a4)
                gk = _du1(x4[0], x4[1], kbar, alpha)
                # stage 3
                for c in range(6):
                    kbar[c] = 2.0 * b6[c] + h * a4[c]
                _jt1(x3[0], x3[1], kbar, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau, a3)
                gk = gk + _du1(x3[0], x3[1], kbar, alpha)
                # stage 2
                for c in range(6):
                    kbar[c] = 2.0 * b6[c] + h2 * a3[c]
                _jt1(x2[0], x2[1], kbar, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau, a2)
                gk = gk + _du1(x2[0], x2[1], kbar, alpha)
                # stage 1
                for c in range(6):
                    kbar[c] = b6[c] + h2 * a2[c]
                _jt1(x[0], x[1], kbar, ab, gamma, cih, cout, dl, st, lam, delta, sigma, tau, a1)
                gk = gk + _du1(x[0], x[1], kbar, alpha)
                gu[b, k] = gk

                for c in range(6):
                    l[c] = l[c] + a1[c] + a2[c] + a3[c] + a4[c]
                if k > 0:
                    for c in range(6):
                        l[c] = l[c] + seeds[b, k, c]
    return gu_np


def invariance_envelope(const double[:, ::1] x0, const double[:, ::1] thetas, const double[::1] bounds,
                        double u_max, double band, double h, Py_ssize_t n_steps):
    cdef Py_ssize_t n_batch = x0.shape[0]
    env_np = np.empty((n_batch, 4))
    cdef double[:, ::1] env = env_np
    cdef double h6 = h / 6.0
    cdef double trig[4]
    cdef Py_ssize_t b, k, c
    cdef double alpha, gamma, lam, delta, sigma, tau, cih, ab
    cdef bint hot
    cdef double x[6]
    cdef double x2[6]
    cdef double x3[6]
    cdef double x4[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double h2 = 0.5 * h

    for c in range(4):
        trig[c] = bounds[c] * (1.0 - band)
    with nogil:
        for b in range(n_batch):
            alpha = thetas[b, 0]; gamma = thetas[b, 1]; lam = thetas[b, 2]
            delta = thetas[b, 3]; sigma = thetas[b, 4]; tau = thetas[b, 5]
            cih = (lam * gamma) / (lam + gamma)
            for c in range(6):
                x[c] = x0[b, c]
            for c in range(4):
                env[b, c] = x[c]
            for k in range(n_steps):
                hot = (x[0] >= trig[0] or x[1] >= trig[1]
                       or x[2] >= trig[2] or x[3] >= trig[3])
                ab = alpha * (1.0 - (u_max if hot else 0.0))
                _rhs1(x[0], x[1], x[2], x[3], ab, gamma, cih, delta, lam, sigma, tau, k1)
                for c in range(6):
                    x2[c] = x[c] + h2 * k1[c]
                _rhs1(x2[0], x2[1], x2[2], x2[3], ab, gamma, cih, delta, lam, sigma, tau, k2)
                for c in range(6):
                    x3[c] = x[c] + h2 * k2[c]
                _rhs1(x3[0], x3[1], x3[2], x3[3], ab, gamma, cih, delta, lam, sigma, tau, k3)
                for c in range(6):
                    x4[c] = x[c] + h * k3[c]
                _rhs1(x4[0], x4[1], x4[2], x4[3], ab, gamma, cih, delta, lam, sigma, tau, k4)
                for c in range(6):
                    x[c] = x[c] + h6 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
                for c in range(4):
                    if x[c] > env[b, c]:
                        env[b, c] = x[c]
    return env_np
