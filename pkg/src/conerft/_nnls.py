"""Compiled Lawson-Hanson active-set kernel.

Kept separate from :mod:`conerft.conefit` so the jitted code has no
Python-object dependencies. All arrays are float64 and C-contiguous.
"""

import numpy as np
from numba import njit

# status codes returned by the kernel
CONVERGED = 0
MAX_ITER = 1


@njit(cache=True)
def _solve_passive(X, z, passive):
    n, m = X.shape
    count = 0
    for j in range(m):
        if passive[j]:
            count += 1
    out = np.zeros(m)
    if count == 0:
        return out
    A = np.empty((n, count))
    c = 0
    for j in range(m):
        if passive[j]:
            for i in range(n):
                A[i, c] = X[i, j]
            c += 1
    sol = np.linalg.lstsq(A, z)[0]
    c = 0
    for j in range(m):
        if passive[j]:
            out[j] = sol[c]
            c += 1
    return out


@njit(cache=True)
def lawson_hanson(X, z, passive0, max_outer):
    """Return ``(beta, passive, n_outer, status)`` for min ||z - X b||, b >= 0."""
    n, m = X.shape
    beta = np.zeros(m)
    passive = passive0.copy()
    w = X.T @ z
    scale = 0.0
    for j in range(m):
        if abs(w[j]) > scale:
            scale = abs(w[j])
    tol = 1e-10 * scale
    if scale == 0.0:
        passive[:] = False
        return beta, passive, 0, CONVERGED

    # warm start: shrink the seeded set until its solve is strictly positive
    while passive.any():
        s = _solve_passive(X, z, passive)
        feasible = True
        for j in range(m):
            if passive[j] and s[j] <= 0.0:
                passive[j] = False
                feasible = False
        if feasible:
            beta = s
            break

    excluded = np.zeros(m, dtype=np.bool_)
    n_outer = 0
    status = CONVERGED
    while True:
        w = X.T @ (z - X @ beta)
        jmax = -1
        wmax = tol
        for j in range(m):
            if not passive[j] and not excluded[j] and w[j] > wmax:
                jmax = j
                wmax = w[j]
        if jmax < 0:
            break
        if n_outer >= max_outer:
            status = MAX_ITER
            break
        n_outer += 1
        passive[jmax] = True
        first = True
        n_inner = 0
        while True:
            s = _solve_passive(X, z, passive)
            if first and s[jmax] <= 0.0:
                # rounding: the column is numerically in the passive span
                passive[jmax] = False
                excluded[jmax] = True
                break
            first = False
            alpha = 2.0
            jmin = -1
            for j in range(m):
                if passive[j] and s[j] <= 0.0:
                    a = beta[j] / (beta[j] - s[j])
                    if a < alpha:
                        alpha = a
                        jmin = j
            if jmin < 0:
                beta = s
                excluded[:] = False
                break
            n_inner += 1
            if n_inner > 3 * m:
                status = MAX_ITER
                break
            for j in range(m):
                if passive[j]:
                    beta[j] += alpha * (s[j] - beta[j])
                    if j == jmin or beta[j] <= 0.0:
                        beta[j] = 0.0
                        passive[j] = False
            excluded[:] = False
        if status != CONVERGED:
            break
    for j in range(m):
        if not passive[j]:
            beta[j] = 0.0
    return beta, passive, n_outer, status


@njit(cache=True)
def lawson_hanson_batch(X, Z, warm, chunk):
    """Solve one NNLS problem per row of ``Z``.

    With ``warm`` set, each row is seeded with the passive set of the
    previous row inside fixed chunks of ``chunk`` rows, so the result does
    not depend on how chunks are scheduled.
    """
    N = Z.shape[0]
    m = X.shape[1]
    B = np.zeros((N, m))
    status = np.zeros(N, dtype=np.int64)
    seed = np.zeros(m, dtype=np.bool_)
    for i in range(N):
        if not warm or i % chunk == 0:
            seed[:] = False
        beta, passive, _, st = lawson_hanson(X, np.ascontiguousarray(Z[i]), seed, 10 * m)
        B[i] = beta
        status[i] = st
        seed = passive
    return B, status
