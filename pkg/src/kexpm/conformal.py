"""Conformal map from the exterior of a rectangle onto the exterior of the unit disk.

The rectangle ``[a, b] x [-c, c]`` is centred, then mapped to the upper half
plane through an auxiliary elliptic variable ``sigma``, then onto ``|u| > 1``.
Eliminating the half-plane variable gives the pair

    z(sigma) = alpha - (i / lam) * (E(sigma | m) - (1 - m) sigma)
    dn(sigma | m) = (u + 1/u) / 2

which is all that is needed to evaluate the inverse map on circles ``|u| = r``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._quad import quad_real
from .elliptic import complete_elliptic, complete_gap, jacobi_epsilon, jacobi_scd, _sncndn_real
from .errors import ContinuationError, ConvergenceError, DegenerateBoxError, DomainError

TOTAL_ROTATION = 2 * math.pi  # boundary of a convex region

_MAX_BISECT = 200
_STEPS_PER_TURN = 1024
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class SpectralBox:
    """Rectangle ``[a, b] x [-c, c]`` enclosing the field of values."""

    a: float
    b: float
    c: float
    estimated: bool = False

    def __post_init__(self):
        if not (self.b >= self.a and self.c >= 0):
            raise DomainError(f"invalid box a={self.a}, b={self.b}, c={self.c}")

    @property
    def alpha(self):
        return 0.5 * (self.b - self.a)

    @property
    def beta(self):
        return self.c

    @property
    def center(self):
        return 0.5 * (self.a + self.b)

    def shifted(self, sigma):
        return SpectralBox(self.a + sigma, self.b + sigma, self.c, self.estimated)


@dataclass(frozen=True)
class ConformalParams:
    m: float
    m1: float
    K: float
    E: float
    Kp: float
    Ep: float
    alpha: float
    beta: float
    lam: float
    capacity: float

    @property
    def gap(self):
        return complete_gap(self.m)

    @property
    def gap_complement(self):
        return complete_gap(self.m1)


def modulus_ratio(m):
    """Aspect ratio ``beta / alpha`` produced by modulus ``m`` (monotone increasing)."""
    return complete_gap(m) / complete_gap(1.0 - m)


def _bisect_small(ratio):
    # modulus_ratio(m) ~ pi m / 2 for small m; use it to tighten the bracket
    lo, hi = 0.0, 0.5
    guess = 4.0 * ratio / math.pi
    if guess < 0.5 and modulus_ratio(guess) >= ratio:
        hi = guess
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= 1e-16 * hi:
            return 0.5 * (lo + hi)
        if modulus_ratio(mid) < ratio:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"modulus bisection did not converge for ratio={ratio}")


def solve_modulus(ratio):
    """Unique ``m`` in ``(0, 1)`` whose rectangle has aspect ratio ``beta/alpha = ratio``.

    Uses ``modulus_ratio(1 - m) = 1 / modulus_ratio(m)`` so the bisection always
    runs on ``(0, 1/2]`` where the relative resolution of ``m`` is best.
    """
    ratio = float(ratio)
    if not (ratio > 0 and math.isfinite(ratio)):
        raise DomainError(f"aspect ratio must be positive and finite, got {ratio}")
    if ratio == 1.0:
        return 0.5
    if ratio < 1.0:
        return _bisect_small(ratio)
    return 1.0 - _bisect_small(1.0 / ratio)


def params_from_modulus(m, alpha, beta=None):
    """Assemble ``ConformalParams`` for modulus ``m`` and half-width ``alpha``.

    ``m = 0`` is accepted and yields the limit of a vanishing rectangle height.
    """
    pair = complete_elliptic(m)
    comp = complete_elliptic(1.0 - m) if m > 0 else None
    lam = complete_gap(1.0 - m) / alpha if m > 0 else 1.0 / alpha
    if beta is None:
        beta = complete_gap(m) / lam
    return ConformalParams(
        m=m,
        m1=1.0 - m,
        K=pair.K,
        E=pair.E,
        Kp=comp.K if comp else math.inf,
        Ep=comp.E if comp else 1.0,
        alpha=alpha,
        beta=beta,
        lam=lam,
        capacity=1.0 / (2.0 * lam),
    )


def build_conformal(box):
    """Conformal parameters for a nondegenerate ``SpectralBox``."""
    alpha, beta = box.alpha, box.beta
    if not (alpha > 0 and beta > 0):
        raise DegenerateBoxError(
            f"box [{box.a}, {box.b}] x [-{box.c}, {box.c}] has zero width or height"
        )
    m = solve_modulus(beta / alpha)
    return params_from_modulus(m, alpha, beta)


def _level_integrand(m, t):
    return math.sqrt(m + t * t) / math.sqrt(1.0 + t * t)


def level_integral(m, upper):
    """``int_0^upper sqrt(m + t^2) / sqrt(1 + t^2) dt`` for ``m`` in ``[0, 1)``."""
    if upper <= 0:
        return 0.0
    if upper <= 1.0:
        return quad_real(lambda t: _level_integrand(m, t), 0.0, upper)
    head = quad_real(lambda t: _level_integrand(m, t), 0.0, 1.0)

    # 1 - integrand decays like (1 - m)/(2 t^2); integrate it in s = 1/t
    def deficit(s):
        p = math.sqrt(s * s + 1.0)
        return (1.0 - m) / ((p + math.sqrt(m * s * s + 1.0)) * p)

    tail = quad_real(deficit, 1.0 / upper, 1.0)
    return head + (upper - 1.0) - tail


def psi_minus_r(cp, box, r):
    """Leftmost real coordinate of the level curve ``C_r`` (image of ``u = -r``)."""
    if not r > 1:
        raise DomainError(f"level radius must exceed 1, got {r}")
    return box.a - level_integral(cp.m, 0.5 * (r - 1.0 / r)) / cp.lam


def _sigma_on_axis(cp, r):
    """``sigma = iy`` with ``dn(iy | m) = (r + 1/r)/2``, ``0 < y < K'``."""
    target = 0.5 * (r + 1.0 / r)
    lo, hi = 0.0, cp.Kp
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        _, c1, d1 = _sncndn_real(mid, cp.m1)
        # dn(iy | m) = dn(y | m1) / cn(y | m1), increasing on (0, K')
        if d1 < target * c1:
            lo = mid
        else:
            hi = mid
    return 1j * 0.5 * (lo + hi)


def _newton(cp, sigma, target, theta):
    m = cp.m
    # dn near a pole carries absolute round-off ~ eps |dn|^2
    floor = 1e-12 * max(1.0, abs(target)) ** 2
    trip = jacobi_scd(sigma, m)
    res = trip.dn - target
    for _ in range(60):
        if abs(res) <= 4e-16 * max(1.0, abs(target)):
            return sigma
        step = res / (-m * trip.sn * trip.cn)
        damp = 1.0
        for _ in range(40):
            cand = sigma - damp * step
            try:
                ctrip = jacobi_scd(cand, m)
            except DomainError:
                damp *= 0.5
                continue
            cres = ctrip.dn - target
            if abs(cres) < abs(res):
                break
            damp *= 0.5
        else:
            # no descent left: accept if the residual is at round-off level
            if abs(res) <= floor:
                return sigma
            raise ContinuationError(theta)
        if abs(damp * step) <= 1e-15 * max(1.0, abs(sigma)):
            return cand
        sigma, trip, res = cand, ctrip, cres
    if abs(res) <= floor:
        return sigma
    raise ContinuationError(theta)


def _segment_epsilon(m, s0, s1):
    mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
    dn = jacobi_scd(mid + half * _GL_NODES, m).dn
    return half * np.dot(_GL_WEIGHTS, dn * dn)


def _trace(cp, r, thetas):
    """Continue ``sigma`` and ``E(sigma)`` around ``|u| = r`` through sorted ``thetas``."""
    sigma = _sigma_on_axis(cp, r)
    sigma = _newton(cp, sigma, 0.5 * (r + 1.0 / r), 0.0)
    eps = jacobi_epsilon(sigma, cp.m)
    theta = 0.0
    dmax = 2 * math.pi / _STEPS_PER_TURN
    out = []
    for target_theta in thetas:
        while theta < target_theta:
            nxt = min(target_theta, theta + dmax)
            u_old = r * np.exp(1j * theta)
            u_new = r * np.exp(1j * nxt)
            trip = jacobi_scd(sigma, cp.m)
            # tangent predictor: d(dn)/dsigma = -m sn cn
            dtarget = 0.5 * ((u_new + 1 / u_new) - (u_old + 1 / u_old))
            guess = sigma + dtarget / (-cp.m * trip.sn * trip.cn)
            new_sigma = _newton(cp, guess, 0.5 * (u_new + 1 / u_new), nxt)
            eps += _segment_epsilon(cp.m, sigma, new_sigma)
            sigma, theta = new_sigma, nxt
        out.append((sigma, eps))
    return out


def _z_from_sigma(cp, box, sigma, eps):
    return box.center + cp.alpha - 1j / cp.lam * (eps - cp.m1 * sigma)


def inverse_map(cp, box, u):
    """Point of the rectangle exterior mapped to ``u`` (``|u| > 1``)."""
    u = complex(u)
    r = abs(u)
    if not r > 1:
        raise DomainError(f"|u| must exceed 1, got {r}")
    theta = math.atan2(u.imag, u.real) % (2 * math.pi)
    ((sigma, eps),) = _trace(cp, r, [theta])
    return complex(_z_from_sigma(cp, box, sigma, eps))


def level_curve(cp, box, r, n):
    """``n`` points of the level curve ``C_r`` at ``theta = 2 pi j / n``, ``j = 0..n-1``."""
    if not r > 1:
        raise DomainError(f"level radius must exceed 1, got {r}")
    if n < 8:
        raise DomainError(f"need at least 8 samples, got {n}")
    thetas = 2 * math.pi * np.arange(n) / n
    traced = _trace(cp, r, thetas)
    return np.array([_z_from_sigma(cp, box, s, e) for s, e in traced])
