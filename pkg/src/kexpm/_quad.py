"""Thin wrappers around QUADPACK adaptive Gauss-Kronrod quadrature."""

import warnings

from scipy import integrate

from .errors import QuadratureError

_LIMIT = 400


def quad_real(func, lo, hi, epsabs=1e-12, epsrel=1e-13):
    """Integrate a real function on ``[lo, hi]``; raise if the tolerance is missed."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=_LIMIT, full_output=1
        )
    value, abserr = out[0], out[1]
    # ier is only reported (as a 4th element) when nonzero
    if len(out) > 3 and abserr > 100 * max(epsabs, epsrel * abs(value)):
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] stopped at error {abserr:.3e}: {out[3]}"
        )
    return value


def quad_segment(func, z0, z1, epsabs=1e-12, epsrel=1e-13):
    """Integrate a complex function along the straight segment from ``z0`` to ``z1``."""
    z0 = complex(z0)
    dz = complex(z1) - z0
    if dz == 0:
        return 0j

    def re(s):
        return (func(z0 + s * dz) * dz).real

    def im(s):
        return (func(z0 + s * dz) * dz).imag

    return complex(
        quad_real(re, 0.0, 1.0, epsabs, epsrel), quad_real(im, 0.0, 1.0, epsabs, epsrel)
    )
