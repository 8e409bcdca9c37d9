"""Complete and incomplete elliptic integrals and the Jacobi functions sn, cn, dn.

Real arguments go through the arithmetic-geometric mean (AGM) and the
descending Landen transformation. Complex arguments ``x + iy`` are assembled
from real evaluations at ``(x | m)`` and ``(y | 1 - m)`` with the classical
addition-type quotient formulas.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from ._quad import quad_segment
from .errors import DomainError, PoleError

M_CLAMP = 1e-12
AGM_TOL = 1e-15
POLE_GUARD = 1e-8


@dataclass(frozen=True)
class EllipticPair:
    """Complete integrals of the first (``K``) and second (``E``) kind at ``m``."""

    m: float
    K: float
    E: float

    @property
    def gap(self):
        """``E - (1 - m) K``, increasing from 0 to 1 on ``(0, 1)``."""
        return complete_gap(self.m)


@dataclass(frozen=True)
class JacobiTriple:
    sn: complex
    cn: complex
    dn: complex


def _check_parameter(m, *, allow_zero=False):
    m = float(m)
    lo_ok = m >= 0.0 if allow_zero else m > 0.0
    if not (lo_ok and m < 1.0):
        raise DomainError(f"elliptic parameter m={m!r} outside (0, 1)")
    return m


@lru_cache(maxsize=256)
def _agm(m):
    """AGM sequences ``a_n``, ``c_n`` started from ``(1, sqrt(1-m), sqrt(m))``."""
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while c[-1] > AGM_TOL and len(a) < 64:
        an, bn = a[-1], b
        a.append(0.5 * (an + bn))
        # c_{n+1} = (a_n - b_n)/2 rewritten without cancellation
        c.append(c[-1] ** 2 / (4.0 * a[-1]))
        b = math.sqrt(an * bn)
    return tuple(a), tuple(c)


def _near_one(m1):
    """Logarithmic expansions of K and E for ``1 - m`` below the clamp."""
    L = math.log(16.0 / m1)
    K = 0.5 * L + 0.25 * m1 * (0.5 * L - 1.0)
    E = 1.0 + 0.25 * m1 * (L - 1.0)
    return K, E


def complete_elliptic(m):
    """Return ``EllipticPair(m, K(m), E(m))``.

    ``m = 0`` gives ``K = E = pi/2`` exactly. Parameters within ``1e-12`` of
    either end use the leading asymptotic expansions instead of the AGM.
    """
    m = _check_parameter(m, allow_zero=True)
    if m == 0.0:
        return EllipticPair(0.0, math.pi / 2, math.pi / 2)
    if m < M_CLAMP:
        return EllipticPair(m, math.pi / 2 * (1 + m / 4), math.pi / 2 * (1 - m / 4))
    m1 = 1.0 - m
    if m1 < M_CLAMP:
        K, E = _near_one(m1)
        return EllipticPair(m, K, E)
    a, c = _agm(m)
    K = math.pi / (2.0 * a[-1])
    s = sum(2.0 ** (n - 1) * cn * cn for n, cn in enumerate(c))
    return EllipticPair(m, K, K * (1.0 - s))


def complete_gap(m):
    """``E(m) - (1 - m) K(m)`` without cancellation for small ``m``."""
    m = _check_parameter(m, allow_zero=True)
    if m == 0.0:
        return 0.0
    if m < M_CLAMP:
        return math.pi * m / 4 * (1 + m / 8)
    if m <= 0.5:
        a, c = _agm(m)
        K = math.pi / (2.0 * a[-1])
        # the n = 0 term of the E-series is m/2 and cancels against (1 - m)K
        tail = sum(2.0 ** (n - 1) * cn * cn for n, cn in enumerate(c) if n > 0)
        return K * (0.5 * m - tail)
    pair = complete_elliptic(m)
    return pair.E - (1.0 - m) * pair.K


def complete_derivatives(m):
    """``(dK/dm, dE/dm)`` from the closed forms in ``K`` and ``E``."""
    m = _check_parameter(m)
    pair = complete_elliptic(m)
    dK = complete_gap(m) / (2.0 * m * (1.0 - m))
    dE = (pair.E - pair.K) / (2.0 * m)
    return dK, dE


def incomplete_F(phi, m):
    """Incomplete integral of the first kind ``F(phi | m)``, complex ``phi`` allowed."""
    m = _check_parameter(m)

    def integrand(theta):
        return 1.0 / np.sqrt(1.0 - m * np.sin(theta) ** 2 + 0j)

    value = quad_segment(integrand, 0.0, phi)
    if isinstance(phi, (int, float, np.floating)):
        return value.real
    return value


def _sncndn_real(x, m):
    """Vectorised real-argument sn, cn, dn by the descending Landen scheme."""
    a, c = _agm(m)
    n = len(a) - 1
    phi = (2.0**n) * a[-1] * np.asarray(x, dtype=float)
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # 1 - m sn^2 = (1 - m) + m cn^2 avoids cancellation near m -> 1
    dn = np.sqrt((1.0 - m) + m * cn * cn)
    return sn, cn, dn


def periods(m):
    """Quarter periods ``(K, K')`` for parameter ``m``."""
    return complete_elliptic(m).K, complete_elliptic(1.0 - m).K


def pole_distance(u, m):
    """Distance from ``u`` to the nearest pole ``iK' + 2lK + 2niK'``."""
    K, Kp = periods(m)
    u = np.asarray(u, dtype=complex)
    dx = np.mod(u.real + K, 2 * K) - K
    dy = np.mod(u.imag, 2 * Kp) - Kp
    return np.hypot(dx, dy)


def jacobi_scd(u, m):
    """Jacobi ``sn``, ``cn``, ``dn`` at complex ``u`` (scalar or array)."""
    m = _check_parameter(m)
    u_arr = np.asarray(u, dtype=complex)
    if np.any(pole_distance(u_arr, m) < POLE_GUARD):
        raise PoleError(f"argument within {POLE_GUARD} of a pole iK' (m={m})")
    x, y = u_arr.real, u_arr.imag
    s, c, d = _sncndn_real(x, m)
    if not np.any(y):
        sn, cn, dn = s + 0j, c + 0j, d + 0j
    else:
        s1, c1, d1 = _sncndn_real(y, 1.0 - m)
        den = c1 * c1 + m * s * s * s1 * s1
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    if u_arr.ndim == 0:
        return JacobiTriple(complex(sn), complex(cn), complex(dn))
    return JacobiTriple(sn, cn, dn)


def _segment_pole_distance(z0, z1, m):
    K, Kp = periods(m)
    lo_re, hi_re = sorted((z0.real, z1.real))
    lo_im, hi_im = sorted((z0.imag, z1.imag))
    best = math.inf
    for l in range(math.floor((lo_re - K) / (2 * K)), math.ceil((hi_re + K) / (2 * K)) + 1):
        for n in range(math.floor((lo_im - 3 * Kp) / (2 * Kp)), math.ceil(hi_im / (2 * Kp)) + 1):
            p = complex(2 * l * K, (2 * n + 1) * Kp)
            d = z1 - z0
            t = 0.0 if d == 0 else min(1.0, max(0.0, ((p - z0) * d.conjugate()).real / abs(d) ** 2))
            best = min(best, abs(z0 + t * d - p))
    return best


def jacobi_epsilon(sigma, m, epsabs=1e-12):
    """Jacobi epsilon ``E(sigma | m) = int_0^sigma dn(z|m)^2 dz`` along a straight path."""
    m = _check_parameter(m)
    sigma = complex(sigma)
    if _segment_pole_distance(0j, sigma, m) < POLE_GUARD:
        raise PoleError(f"segment [0, {sigma}] passes within {POLE_GUARD} of a pole")

    def integrand(z):
        return jacobi_scd(z, m).dn ** 2

    return quad_segment(integrand, 0.0, sigma, epsabs=epsabs)
