"""Extended-precision reference values (test-only)."""
import mpmath as mp


def dps_for(z) -> int:
    # the ascending series cancel ~|z| / ln 10 digits, and J + iY another 2 Im z / ln 10
    z = complex(z)
    return int(50 + 0.9 * abs(z) + 0.87 * max(z.imag, 0.0))


def j_series(ell, z, terms=200):
    """``J_ell`` by summing ``terms`` ascending-series terms in mpmath."""
    with mp.workdps(dps_for(z)):
        z = mp.mpc(z)
        h = z / 2
        total = mp.mpf(0)
        term = h**ell / mp.factorial(ell)
        for k in range(terms):
            total += term
            term *= -(h * h) / ((k + 1) * (k + 1 + ell))
        return complex(total)


def cyl_j(ell, z):
    with mp.workdps(dps_for(z)):
        z = mp.mpc(z)
        return complex(mp.besselj(ell, z)), complex(mp.besselj(ell, z, derivative=1))


def cyl_h1(ell, z):
    with mp.workdps(dps_for(z)):
        z = mp.mpc(z)
        return complex(mp.hankel1(ell, z)), complex(mp.diff(lambda t: mp.hankel1(ell, t), z))


def sph_j(ell, z):
    with mp.workdps(dps_for(z) + 20):
        z = mp.mpc(z)
        f = lambda t: mp.sqrt(mp.pi / (2 * t)) * mp.besselj(ell + mp.mpf(1) / 2, t)
        return complex(f(z)), complex(mp.diff(f, z))


def sph_h1(ell, z):
    with mp.workdps(dps_for(z) + 20):
        z = mp.mpc(z)
        f = lambda t: mp.sqrt(mp.pi / (2 * t)) * mp.hankel1(ell + mp.mpf(1) / 2, t)
        return complex(f(z)), complex(mp.diff(f, z))
