"""Recompute the frozen high-precision oracle values in tests/oracles.py.

Gaussian densities come from numerically differentiating the normal tail;
Student T densities from quadrature of the Gaussian density over the
chi mixing law. Both use mpmath at 40 digits.
"""

import mpmath as mp

mp.mp.dps = 40


def rho_gaussian(d, t):
    return (-1 / mp.sqrt(2 * mp.pi)) ** d * mp.diff(lambda s: mp.ncdf(-s), t, d)


def rho_t(d, t, nu):
    t = mp.mpf(t)

    def integrand(x):
        chi_pdf = x ** (nu - 1) * mp.exp(-x * x / 2) / (2 ** (mp.mpf(nu) / 2 - 1) * mp.gamma(mp.mpf(nu) / 2))
        return rho_gaussian(d, x * t / mp.sqrt(nu)) * chi_pdf

    return (1 + t * t / nu) ** (mp.mpf(d) / 2) * mp.quad(integrand, [0, mp.sqrt(nu), mp.inf])


if __name__ == "__main__":
    for d, t in [(1, 0), (3, 2), (2, 1.5), (4, 2.5), (5, 3)]:
        print("gaussian", (d, t), mp.nstr(rho_gaussian(d, mp.mpf(t)), 17))
    mp.mp.dps = 25
    for d, t, nu in [(1, 2, 8), (2, 3, 10), (3, 4, 20), (3, 5.1, 110), (2, 1.5, 5)]:
        print("t", (d, t, nu), mp.nstr(rho_t(d, t, nu), 17))
