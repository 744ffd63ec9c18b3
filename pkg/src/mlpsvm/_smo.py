"""Numba kernels for the per-label pairwise coordinate solver.

The solver minimizes

    F(eta, theta) = 0.5 * v' K v - sum(eta),    v_i = y_i eta_i - (1 + y_i) theta_i

subject to 0 <= eta <= C1, sum(y * eta) = 0 and, over the positive points,
theta >= -C2, sum(theta) = 0.  ``g`` always holds ``K @ v``.

Two kinds of pair steps are taken: an eta pair (the classical SMO step that
keeps ``sum(y * eta)`` fixed) and a theta pair among positive points (keeps
``sum(theta)`` fixed).  Each iteration picks the kind with the larger
first-order violation and does an exact clipped line search along it.
"""

import numpy as np
from numba import njit

TAU = 1e-12

STATUS_OK = 0
STATUS_MAX_ITER = 1
STATUS_INDEFINITE = 2


@njit(cache=True, nogil=True)
def _select_eta_pair(K, y, eta, g, C1):
    m = y.shape[0]
    i = -1
    gmax = -np.inf
    for t in range(m):
        if (y[t] > 0 and eta[t] < C1) or (y[t] < 0 and eta[t] > 0):
            val = y[t] - g[t]
            if val > gmax:
                gmax = val
                i = t
    if i < 0:
        return -1, -1, 0.0
    # second-order choice of the partner (Fan, Chen and Lin's WSS3)
    j = -1
    best = np.inf
    gmin = np.inf
    kii = K[i, i]
    for t in range(m):
        if (y[t] > 0 and eta[t] > 0) or (y[t] < 0 and eta[t] < C1):
            val = y[t] - g[t]
            if val < gmin:
                gmin = val
            b = gmax - val
            if b > 0.0:
                a = kii + K[t, t] - 2.0 * K[i, t]
                if a <= 0.0:
                    a = TAU
                obj = -(b * b) / a
                if obj < best:
                    best = obj
                    j = t
    if j < 0:
        return -1, -1, 0.0
    return i, j, gmax - gmin


@njit(cache=True, nogil=True)
def _select_theta_pair(K, pos, theta, g, C2):
    p = -1
    hi = -np.inf
    for s in range(pos.shape[0]):
        t = pos[s]
        if g[t] > hi:
            hi = g[t]
            p = t
    if p < 0:
        return -1, -1, 0.0
    q = -1
    best = np.inf
    lo = np.inf
    kpp = K[p, p]
    for s in range(pos.shape[0]):
        t = pos[s]
        if theta[t] > -C2:
            if g[t] < lo:
                lo = g[t]
            b = hi - g[t]
            if b > 0.0:
                a = kpp + K[t, t] - 2.0 * K[p, t]
                if a <= 0.0:
                    a = TAU
                obj = -(b * b) / a
                if obj < best:
                    best = obj
                    q = t
    if q < 0:
        return -1, -1, 0.0
    return p, q, hi - lo


@njit(cache=True, nogil=True)
def pair_descent(K, y, pos, C1, C2, use_theta, eta, theta, g, eps, max_iter):
    """Run pair steps in place until both violations drop to ``eps``.

    Returns ``(status, iterations, violation)``.
    """
    neg_curv = -1e-8 * (1.0 + np.abs(np.diag(K)).max())
    it = 0
    viol = np.inf
    while it < max_iter:
        i, j, viol_eta = _select_eta_pair(K, y, eta, g, C1)
        p = -1
        q = -1
        viol_theta = 0.0
        if use_theta:
            p, q, viol_theta = _select_theta_pair(K, pos, theta, g, C2)
        viol = max(viol_eta, viol_theta)
        if viol <= eps:
            return STATUS_OK, it, viol
        it += 1

        if viol_eta >= viol_theta and i >= 0:
            a = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if a < neg_curv:
                return STATUS_INDEFINITE, it, viol
            if a <= 0.0:
                a = TAU
            b = (y[i] - g[i]) - (y[j] - g[j])
            step = b / a
            # eta_i moves by y_i*step, eta_j by -y_j*step; both must stay in [0, C1]
            lim_i = C1 - eta[i] if y[i] > 0 else eta[i]
            lim_j = eta[j] if y[j] > 0 else C1 - eta[j]
            clip_i = False
            clip_j = False
            if step >= lim_i:
                step = lim_i
                clip_i = True
            if step >= lim_j:
                if lim_j < lim_i:
                    clip_i = False
                step = lim_j
                clip_j = True
            if step <= 0.0:
                continue
            if clip_i:
                eta[i] = C1 if y[i] > 0 else 0.0
            else:
                eta[i] += y[i] * step
            if clip_j:
                eta[j] = 0.0 if y[j] > 0 else C1
            else:
                eta[j] -= y[j] * step
            for t in range(K.shape[0]):
                g[t] += step * (K[i, t] - K[j, t])
        elif p >= 0:
            a = K[p, p] + K[q, q] - 2.0 * K[p, q]
            if a < neg_curv:
                return STATUS_INDEFINITE, it, viol
            if a <= 0.0:
                a = TAU
            # theta_p += s, theta_q -= s moves v by (-2s, +2s)
            step = (g[p] - g[q]) / (2.0 * a)
            lim = theta[q] + C2
            clip = False
            if step >= lim:
                step = lim
                clip = True
            if step <= 0.0:
                continue
            theta[p] += step
            if clip:
                theta[q] = -C2
            else:
                theta[q] -= step
            for t in range(K.shape[0]):
                g[t] += 2.0 * step * (K[q, t] - K[p, t])
        else:
            return STATUS_OK, it, viol
    return STATUS_MAX_ITER, it, viol
