"""Sequential label-sweep kernels.

Both sweeps visit nodes in ascending index order and let each accepted move
take effect before the next node is considered, so they cannot be
vectorised across nodes. Each kernel comes in two flavours with identical
semantics: an explicit-loop version compiled with numba, and a numpy
version that vectorises over candidate labels and receivers. The public
names (:func:`dirsbm_sweep`, :func:`linear_icm_sweep`) resolve to one of
them according to :mod:`dirsbm._backend`.

Tie rule shared by all sweeps: a node leaves its current label only if a
candidate beats the incumbent by more than ``rtol * max(1, |incumbent|)``;
among improving candidates the lowest index wins.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from ._backend import USE_NUMBA, njit

__all__ = [
    "dirsbm_sweep",
    "dirsbm_sweep_numba",
    "dirsbm_sweep_numpy",
    "linear_icm_sweep",
    "linear_icm_sweep_numba",
    "linear_icm_sweep_numpy",
]


# ---------------------------------------------------------------------------
# DirSBM greedy sweep
#
# The hybrid log-likelihood term of node l for sender cluster h is
#
#     G[h, c_l] + data[l, h]
#
# where G[h, c] = lgamma(sum_g m_g A[h, g]) - sum_g m_g lgamma(A[h, g]) with
# m = counts - e_c, and data[l, h] = sum_{j != l} (A[h, c_j] - 1) log x_lj.
# Moving node i from a to b shifts every count vector by (e_b - e_a) and
# every data row by log x_li * (A[:, b] - A[:, a]).
# ---------------------------------------------------------------------------


def _g_table_loops(N, A, lgA, G):
    K = A.shape[0]
    for h in range(K):
        tot = 0.0
        slg = 0.0
        for g in range(K):
            tot += N[g] * A[h, g]
            slg += N[g] * lgA[h, g]
        for c in range(K):
            G[h, c] = math.lgamma(tot - A[h, c]) - slg + lgA[h, c]


_g_table = njit(_g_table_loops)


def _dirsbm_sweep_loops(logx, labels, A, log_theta, rtol):
    n = logx.shape[0]
    K = A.shape[0]
    lab = labels.copy()
    if K == 1:
        return lab, 0

    lgA = np.empty((K, K))
    for h in range(K):
        for g in range(K):
            lgA[h, g] = math.lgamma(A[h, g])

    N = np.zeros(K)
    for j in range(n):
        N[lab[j]] += 1.0

    data = np.zeros((n, K))
    for l in range(n):
        for j in range(n):
            if j != l:
                v = logx[l, j]
                cj = lab[j]
                for h in range(K):
                    data[l, h] += v * (A[h, cj] - 1.0)

    N2 = np.empty(K)
    G = np.empty((K, K))
    tmp = np.empty(K)
    vals = np.empty(K)
    n_changed = 0

    for i in range(n):
        a = lab[i]
        # node i's own term depends only on the labels of the others
        _g_table(N, A, lgA, G)
        m = -np.inf
        for h in range(K):
            tmp[h] = log_theta[h] + G[h, a] + data[i, h]
            if tmp[h] > m:
                m = tmp[h]
        acc = 0.0
        for h in range(K):
            acc += math.exp(tmp[h] - m)
        t_i = m + math.log(acc)

        for b in range(K):
            for g in range(K):
                N2[g] = N[g]
            N2[a] -= 1.0
            N2[b] += 1.0
            _g_table(N2, A, lgA, G)
            s = t_i
            for l in range(n):
                if l == i:
                    continue
                cl = lab[l]
                x = logx[l, i]
                m = -np.inf
                for h in range(K):
                    tmp[h] = log_theta[h] + G[h, cl] + data[l, h] + x * (A[h, b] - A[h, a])
                    if tmp[h] > m:
                        m = tmp[h]
                if m == -np.inf:
                    s = -np.inf
                    break
                acc = 0.0
                for h in range(K):
                    acc += math.exp(tmp[h] - m)
                s += m + math.log(acc)
            vals[b] = s

        incumbent = vals[a]
        best = -1
        best_val = -np.inf
        for b in range(K):
            if b != a and vals[b] > best_val:
                best_val = vals[b]
                best = b
        if best >= 0 and best_val > incumbent + rtol * max(1.0, abs(incumbent)):
            N[a] -= 1.0
            N[best] += 1.0
            for l in range(n):
                x = logx[l, i]
                for h in range(K):
                    data[l, h] += x * (A[h, best] - A[h, a])
            lab[i] = best
            n_changed += 1

    return lab, n_changed


def dirsbm_sweep_numpy(logx, labels, A, log_theta, rtol=1e-12):
    n = logx.shape[0]
    K = A.shape[0]
    lab = np.array(labels, dtype=np.int64, copy=True)
    if K == 1:
        return lab, 0
    lgA = gammaln(A)
    N = np.bincount(lab, minlength=K).astype(float)
    Z = np.zeros((n, K))
    Z[np.arange(n), lab] = 1.0
    data = (logx @ Z) @ (A - 1.0).T
    eye = np.eye(K)
    n_changed = 0

    for i in range(n):
        a = lab[i]
        N2 = N[None, :] - eye[a][None, :] + eye  # candidate b -> counts
        tot = N2 @ A.T  # (b, h)
        slg = N2 @ lgA.T
        G = gammaln(tot[:, :, None] - A[None, :, :]) - slg[:, :, None] + lgA[None, :, :]  # (b, h, c)
        Gl = np.transpose(G[:, :, lab], (0, 2, 1))  # (b, l, h)
        delta = A.T - A[:, a][None, :]  # (b, h)
        D = Gl + data[None, :, :] + logx[:, i][None, :, None] * delta[:, None, :]
        with np.errstate(divide="ignore"):
            T = logsumexp(D + log_theta[None, None, :], axis=2)  # (b, l)
        T[:, i] = T[a, i]
        vals = T.sum(axis=1)

        incumbent = vals[a]
        others = vals.copy()
        others[a] = -np.inf
        best = int(np.argmax(others))
        if others[best] > incumbent + rtol * max(1.0, abs(incumbent)):
            N[a] -= 1.0
            N[best] += 1.0
            data += logx[:, i][:, None] * (A[:, best] - A[:, a])[None, :]
            lab[i] = best
            n_changed += 1

    return lab, n_changed


# ---------------------------------------------------------------------------
# ICM sweep for SBMs whose per-edge log-likelihood is linear in the weight:
#     log p(u_ij | c_i = k, c_j = h) = u_ij * P[k, h] + Q[k, h] + const(u_ij)
# (Gaussian with shared variance, Bernoulli). Node i's candidate score is
# log theta_k plus the sum over its outgoing and incoming edges.
# ---------------------------------------------------------------------------


def _linear_icm_loops(u, labels, P, Q, log_theta, rtol):
    n = u.shape[0]
    K = P.shape[0]
    lab = labels.copy()
    if K == 1:
        return lab, 0
    s_out = np.zeros((n, K))
    s_in = np.zeros((n, K))
    N = np.zeros(K)
    for j in range(n):
        N[lab[j]] += 1.0
    for l in range(n):
        for j in range(n):
            if j != l:
                s_out[l, lab[j]] += u[l, j]
                s_in[l, lab[j]] += u[j, l]

    m = np.empty(K)
    score = np.empty(K)
    n_changed = 0
    for i in range(n):
        a = lab[i]
        for g in range(K):
            m[g] = N[g]
        m[a] -= 1.0
        for k in range(K):
            s = log_theta[k]
            for h in range(K):
                s += s_out[i, h] * P[k, h] + m[h] * Q[k, h] + s_in[i, h] * P[h, k] + m[h] * Q[h, k]
            score[k] = s
        incumbent = score[a]
        best = -1
        best_val = -np.inf
        for k in range(K):
            if k != a and score[k] > best_val:
                best_val = score[k]
                best = k
        if best >= 0 and best_val > incumbent + rtol * max(1.0, abs(incumbent)):
            for l in range(n):
                if l != i:
                    s_out[l, a] -= u[l, i]
                    s_out[l, best] += u[l, i]
                    s_in[l, a] -= u[i, l]
                    s_in[l, best] += u[i, l]
            N[a] -= 1.0
            N[best] += 1.0
            lab[i] = best
            n_changed += 1
    return lab, n_changed


def linear_icm_sweep_numpy(u, labels, P, Q, log_theta, rtol=1e-12):
    n = u.shape[0]
    K = P.shape[0]
    lab = np.array(labels, dtype=np.int64, copy=True)
    if K == 1:
        return lab, 0
    u0 = u.copy()
    np.fill_diagonal(u0, 0.0)
    Z = np.zeros((n, K))
    Z[np.arange(n), lab] = 1.0
    s_out = u0 @ Z
    s_in = u0.T @ Z
    N = Z.sum(axis=0)
    n_changed = 0
    for i in range(n):
        a = lab[i]
        m = N.copy()
        m[a] -= 1.0
        score = log_theta + P @ s_out[i] + Q @ m + P.T @ s_in[i] + Q.T @ m
        incumbent = score[a]
        others = score.copy()
        others[a] = -np.inf
        best = int(np.argmax(others))
        if others[best] > incumbent + rtol * max(1.0, abs(incumbent)):
            col_out = u0[:, i]
            col_in = u0[i, :]
            s_out[:, a] -= col_out
            s_out[:, best] += col_out
            s_in[:, a] -= col_in
            s_in[:, best] += col_in
            N[a] -= 1.0
            N[best] += 1.0
            lab[i] = best
            n_changed += 1
    return lab, n_changed


_dirsbm_sweep_jit = njit(_dirsbm_sweep_loops)
_linear_icm_jit = njit(_linear_icm_loops)


def dirsbm_sweep_numba(logx, labels, A, log_theta, rtol=1e-12):
    return _dirsbm_sweep_jit(
        np.ascontiguousarray(logx, dtype=np.float64),
        np.ascontiguousarray(labels, dtype=np.int64),
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(log_theta, dtype=np.float64),
        float(rtol),
    )


def linear_icm_sweep_numba(u, labels, P, Q, log_theta, rtol=1e-12):
    u0 = np.array(u, dtype=np.float64, copy=True)
    np.fill_diagonal(u0, 0.0)
    return _linear_icm_jit(
        u0,
        np.ascontiguousarray(labels, dtype=np.int64),
        np.ascontiguousarray(P, dtype=np.float64),
        np.ascontiguousarray(Q, dtype=np.float64),
        np.ascontiguousarray(log_theta, dtype=np.float64),
        float(rtol),
    )


if USE_NUMBA:
    dirsbm_sweep = dirsbm_sweep_numba
    linear_icm_sweep = linear_icm_sweep_numba
else:
    dirsbm_sweep = dirsbm_sweep_numpy
    linear_icm_sweep = linear_icm_sweep_numpy
