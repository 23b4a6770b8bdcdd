"""Independent reference computations used by the test suite.

Nothing here imports the closed forms under test: each oracle goes back
to a definition (derivatives of tails, quadrature over a mixing law,
brute-force enumeration, or direct simulation).
"""

import itertools
import math

import numpy as np
from scipy import integrate, special, stats

# Frozen high-precision values (mpmath, 40 digits; see scripts/freeze_oracles.py).
# Gaussian: (-(2 pi)^{-1/2} d/dt)^d P(Z >= t) by numerical differentiation.
GAUSSIAN_FROZEN = {
    (1, 0.0): 0.15915494309189534,
    (3, 2.0): 0.010284248314578473,
    (2, 1.5): 0.030920048351406162,
    (4, 2.5): 0.0036074759362828419,
    (5, 3.0): 0.0013435581913928088,
}
# Student T: (1 + t^2/nu)^{d/2} E[rho^G_d(chi_nu t / sqrt(nu))] by quadrature.
T_FROZEN = {
    (1, 2.0, 8): 0.038503545739934623,
    (2, 3.0, 10): 0.010342386667099939,
    (3, 4.0, 20): 0.0013515739391630161,
    (3, 5.1, 110): 5.9418126745115485e-6,
    (2, 1.5, 5): 0.043103173209989437,
}


def central_diff(f, t, h=1e-4):
    return (f(t + h) - f(t - h)) / (2 * h)


def derivative_chain(f, t, h=1e-4):
    """``-(2 pi)^{-1/2} f'(t)`` by central differences."""
    return -central_diff(f, t, h) / math.sqrt(2 * math.pi)


def gaussian_tail_derivative(d, t, h=1e-2):
    """``(-(2 pi)^{-1/2} d/dt)^d`` of the normal tail.

    Central d-th differences at steps ``h`` and ``h/2`` combined by one
    Richardson step, which cancels the ``h^2`` error term.
    """
    def diff(step):
        total = sum((-1) ** i * math.comb(d, i) * stats.norm.sf(t + (d / 2 - i) * step)
                    for i in range(d + 1))
        return total / step**d

    fine = diff(h / 2)
    return (4 * fine - diff(h)) / 3 * (-1 / math.sqrt(2 * math.pi)) ** d


def t_density_quadrature(d, t, nu, gaussian):
    """Mixing representation of the T-field EC density over ``chi_nu``."""
    chi = stats.chi(nu)
    f = lambda x: gaussian(d, x * t / math.sqrt(nu)) * chi.pdf(x)  # noqa: E731
    val, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    return (1 + t * t / nu) ** (d / 2) * val


def chi_tail(t, j):
    return stats.chi.sf(t, j)


def tlr_beta_tail(t, weights, n):
    """``sum_j p_j P(B_j >= t^2 / (n + t^2))``, ``B_j ~ Beta(j/2, (n-j)/2)``."""
    x = t * t / (n + t * t)
    return sum(p * special.betaincc(j / 2, (n - j) / 2, x)
               for j, p in enumerate(weights) if j >= 1 and p > 0 and j < n)


def detr_bruteforce(A, j):
    d = A.shape[0]
    if j == 0:
        return 1.0
    return float(sum(np.linalg.det(A[np.ix_(S, S)]) for S in itertools.combinations(range(d), j)))


def cubical_ec_bruteforce(inside):
    """EC of a 2D binary image by enumerating vertices, edges and squares."""
    a = np.asarray(inside, dtype=bool)
    rows, cols = a.shape
    v = int(a.sum())
    e = 0
    f = 0
    for i in range(rows):
        for j in range(cols):
            if i + 1 < rows and a[i, j] and a[i + 1, j]:
                e += 1
            if j + 1 < cols and a[i, j] and a[i, j + 1]:
                e += 1
            if i + 1 < rows and j + 1 < cols and a[i:i + 2, j:j + 2].all():
                f += 1
    return v - e + f


def kkt_violation(X, z, beta):
    """Largest violation of the NNLS optimality conditions."""
    g = X.T @ (z - X @ beta)
    active = beta > 0
    return max(float(np.max(np.abs(g[active]), initial=0.0)),
               float(np.max(g[~active], initial=0.0)), float(-np.min(beta, initial=0.0)))
