"""A posteriori estimate, a priori bounds and the classical reference bounds.

Every bound is evaluated through its logarithm. A bound whose logarithm
exceeds ``LOG_OVERFLOW`` is reported as ``math.inf`` (the overflow flag).
"""

from dataclasses import dataclass, replace
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, optimize

from .conformal import SpectralBox, build_conformal, level_integral, params_from_modulus
from .elliptic import complete_gap
from .errors import ConvergenceError, DegenerateBoxError, DomainError
from .krylov import DENSE_LIMIT, KrylovProcess, LinearOperator, as_operator, h_entry_series, krylov_approx

CROUZEIX_Q = 11.08
SIMPSON_N = 10
LOG_OVERFLOW = 700.0
Q_MIN, Q_MAX = 1e-12, 1.0 - 1e-12
BOX_LANCZOS_STEPS = 60
BOX_MARGIN = 0.01
_BRENT_MAXITER = 200


def _from_log(logval):
    if logval > LOG_OVERFLOW:
        return math.inf
    return math.exp(logval)


def _check_q(q):
    if not 0.0 < q < 1.0:
        raise DomainError(f"rate q must lie in (0, 1), got {q}")


def _check_k(k):
    if int(k) != k or k < 1:
        raise DomainError(f"iteration index must be a positive integer, got {k}")


# ---------------------------------------------------------------- spectral box


def _hermitian_parts(A):
    dense = A.to_dense() if isinstance(A, LinearOperator) else np.asarray(A)
    herm = 0.5 * (dense + dense.conj().T)
    skew = 0.5j * (dense.conj().T - dense)  # (A - A*)/(2i), Hermitian
    return herm, skew


def _ritz_extremes(apply, n, dtype, seed=0):
    op = LinearOperator(n, apply, 1.0, "hermitian")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n).astype(dtype)
    proc = KrylovProcess(op, v, min(BOX_LANCZOS_STEPS, n), "lanczos").run()
    ritz = np.linalg.eigvalsh(proc.decomposition().H)
    return float(ritz[0]), float(ritz[-1])


def spectral_box(A):
    """Rectangle ``[a, b] x [-c, c]`` from the Hermitian and skew-Hermitian parts of ``A``.

    Up to ``n = 2000`` the extremal eigenvalues are computed exactly. Larger
    operators use 60 Lanczos steps per part and pad the result outward by 1%;
    the returned box is then flagged ``estimated``.
    """
    if not isinstance(A, LinearOperator):
        A = as_operator(A)
    if A.n <= DENSE_LIMIT:
        herm, skew = _hermitian_parts(A)
        ev = np.linalg.eigvalsh(herm)
        a, b = float(ev[0]), float(ev[-1])
        c = 0.0
        if A.structure != "hermitian":
            es = np.linalg.eigvalsh(skew)
            c = float(max(abs(es[0]), abs(es[-1])))
        return SpectralBox(a, b, c)

    mat = A.matrix
    if mat is None or not hasattr(mat, "conj_transpose"):
        # only the norm is known; fall back to the square it implies
        s = A.norm_estimate
        return SpectralBox(-s, s, s, estimated=True)
    adj = mat.conj_transpose()
    dtype = np.result_type(mat.dtype, float)
    a, b = _ritz_extremes(lambda x: 0.5 * (mat.matvec(x) + adj.matvec(x)), A.n, dtype)
    c = 0.0
    if A.structure != "hermitian":
        lo, hi = _ritz_extremes(
            lambda x: 0.5j * (adj.matvec(x) - mat.matvec(x)), A.n, complex
        )
        c = max(abs(lo), abs(hi))
    pad = BOX_MARGIN * max(abs(a), abs(b), b - a)
    return SpectralBox(a - pad, b + pad, c * (1.0 + BOX_MARGIN), estimated=True)


# ---------------------------------------------------------------- context


@dataclass(frozen=True)
class BoundContext:
    """Everything the a priori bounds need besides ``k`` and ``q``.

    In ``"general"`` mode ``box`` encloses the field of values of ``A`` in
    ``exp(-tau A) v``. In ``"skew"`` mode the target is ``exp(i tau H) v`` and
    ``box`` is the spectral interval ``[lambda_min, lambda_max]`` of ``H``.
    """

    box: SpectralBox
    tau: float
    norm_a: float
    mode: str = "general"
    cp: object = None
    nu: float = None
    rho_skew: float = None
    rho_disk: float = None
    q_constant: float = CROUZEIX_Q
    simpson_n: int = SIMPSON_N
    vnorm: float = 1.0
    degenerate: str = None

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.mode not in ("general", "skew"):
            raise DomainError(f"unknown bound mode {self.mode!r}")
        box = self.box
        extent = max(abs(box.a), abs(box.b), box.c)
        if self.norm_a < extent * (1.0 - 1e-12):
            raise DomainError(f"norm estimate {self.norm_a} below box extent {extent}")
        if self.simpson_n < 2 or self.simpson_n % 2:
            raise DomainError(f"Simpson subintervals must be even and >= 2, got {self.simpson_n}")
        if self.nu is None:
            object.__setattr__(self, "nu", box.a)
        if self.mode == "skew":
            if self.rho_skew is None:
                object.__setattr__(self, "rho_skew", 0.25 * (box.b - box.a))
            return
        if self.cp is None and self.degenerate is None:
            if box.c > 0 and box.b > box.a:
                object.__setattr__(self, "cp", build_conformal(box))
            elif box.c == 0:
                # vanishing height: the m -> 0 limit of the rectangle map
                if box.b > box.a:
                    object.__setattr__(self, "cp", params_from_modulus(0.0, box.alpha, 0.0))
                object.__setattr__(self, "degenerate", "hermitian")
            else:
                object.__setattr__(self, "degenerate", "shifted-skew")

    @property
    def krylov_mode(self):
        return "unitary" if self.mode == "skew" else "exp"


def make_context(box, tau, norm_a, mode="general", **kwargs):
    return BoundContext(box=box, tau=float(tau), norm_a=float(norm_a), mode=mode, **kwargs)


@dataclass(frozen=True)
class ConvergenceRecord:
    """One row of a convergence history."""

    k: int
    err_true: float = None
    est_post: float = None
    bnd_prior: float = None
    q_used: float = None
    bnd_saad: float = None
    bnd_hl: float = None

    FIELDS = ("k", "err_true", "est_post", "bnd_prior", "q_used", "bnd_saad", "bnd_hl")

    def as_tuple(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


# ---------------------------------------------------------------- a posteriori


def simpson(values, tau):
    """Composite Simpson rule for samples on an even number of equal subintervals."""
    values = np.asarray(values, dtype=float)
    if values.size < 3 or values.size % 2 == 0:
        raise DomainError(f"Simpson needs an odd number (>= 3) of nodes, got {values.size}")
    return float(integrate.simpson(values, x=np.linspace(0.0, tau, values.size)))


def aposteriori_estimate(dec, tau, nu=0.0, mode="exp", simpson_n=SIMPSON_N, spread=None):
    """Residual-based error estimate ``h_next * exp(-min(nu,0) tau) * int_0^tau |h(t)| dt``.

    The integral is replaced by Simpson's rule on ``simpson_n`` subintervals.
    In ``"unitary"`` mode with ``spread = lambda_max - lambda_min`` of ``H``
    the factor ``h_next`` becomes ``||H - alpha I|| = spread / 2`` (midpoint
    shift); without ``spread`` the residual coefficient is kept.
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if dec.breakdown or dec.h_next == 0.0:
        return 0.0
    ts = np.linspace(0.0, tau, simpson_n + 1)
    integral = simpson(np.abs(h_entry_series(dec, ts, mode)), tau)
    if mode == "unitary":
        factor = dec.h_next if spread is None else 0.5 * spread
        return dec.beta0 * factor * integral
    return dec.beta0 * dec.h_next * math.exp(-min(nu, 0.0) * tau) * integral


# ---------------------------------------------------------------- non-Hermitian a priori


def tilde_z(cp, a, q):
    """Leftmost real coordinate of the level curve ``C_{1/q}`` of a box with left edge ``a``."""
    _check_q(q)
    return a - level_integral(cp.m, 0.5 * (1.0 / q - q)) / cp.lam


def crude_tilde_z(cp, a, q):
    """Lower estimate ``a - (1/q - q) / (2 lam)`` of ``tilde_z``."""
    _check_q(q)
    return a - 0.5 * (1.0 / q - q) / cp.lam


def crude_q(cp, a):
    """The rate ``1 / (sqrt(a^2 lam^2 + 1) + a lam)`` at which the crude exponent vanishes."""
    al = a * cp.lam
    return 1.0 / (math.sqrt(al * al + 1.0) + al)


def _require_conformal(ctx):
    if ctx.mode != "general":
        raise DomainError("this bound needs a general-mode context")
    if ctx.cp is None:
        raise DegenerateBoxError(f"no conformal map for a {ctx.degenerate} box")


def apriori_log(ctx, k, q, crude=False):
    """Natural log of ``apriori_nonhermitian``."""
    _check_k(k)
    _check_q(q)
    _require_conformal(ctx)
    z = crude_tilde_z(ctx.cp, ctx.box.a, q) if crude else tilde_z(ctx.cp, ctx.box.a, q)
    scale = 2.0 * ctx.q_constant * ctx.tau * ctx.norm_a * ctx.vnorm
    if scale == 0.0:
        return -math.inf
    # int_0^tau exp(-t z) dt <= tau exp(-tau min(z, 0)); the min keeps this valid for z > 0
    return (
        math.log(scale)
        + (k - 1) * math.log(q)
        - math.log1p(-q)
        - ctx.tau * min(ctx.nu, 0.0)
        - ctx.tau * min(z, 0.0)
    )


def apriori_nonhermitian(ctx, k, q, crude=False):
    """``2 Q tau ||A|| q^(k-1) / (1-q) * exp(-tau min(a,0) - tau min(tilde_z,0))``.

    ``crude=True`` replaces ``tilde_z`` by its lower estimate ``crude_tilde_z``.
    """
    return _from_log(apriori_log(ctx, k, q, crude))


def q_equation(k, C, m, q):
    """Left side of the stationarity condition for the non-Hermitian bound in ``q``."""
    return (k - 1) * q + (2 - k) * q * q - C * (1 - q) * math.sqrt((1 - q * q) ** 2 + 4 * m * q * q)


def _brent(func, lo, hi, what):
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ConvergenceError(f"{what}: no sign change on [{lo}, {hi}]")
    try:
        return optimize.brentq(func, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps,
                               maxiter=_BRENT_MAXITER)
    except RuntimeError as exc:
        raise ConvergenceError(f"{what}: {exc}") from exc


def optimal_q_nonhermitian(ctx, k):
    """Root in ``(0, 1)`` of ``q_equation`` with ``C = tau / (2 lam)``."""
    _check_k(k)
    _require_conformal(ctx)
    C = ctx.tau / (2.0 * ctx.cp.lam)
    m = ctx.cp.m
    return _brent(lambda q: q_equation(k, C, m, q), Q_MIN, Q_MAX, "optimal q")


@lru_cache(maxsize=512)
def threshold_q(a_lambda, m):
    """Rate ``q0`` with ``a lam = int_0^{(1/q - q)/2} sqrt(m + s^2)/sqrt(1 + s^2) ds``.

    Returns ``Q_MAX`` when the root lies above it (``a lam`` near zero).
    """
    if not a_lambda > 0:
        raise DomainError(f"a*lambda must be positive, got {a_lambda}")
    if not 0.0 <= m < 1.0:
        raise DomainError(f"modulus m={m} outside [0, 1)")

    def resid(q):
        return level_integral(m, 0.5 * (1.0 / q - q)) - a_lambda

    if resid(Q_MAX) >= 0.0:
        return Q_MAX
    return _brent(resid, Q_MIN, Q_MAX, "threshold q")


def threshold_q_m0(kappa, m):
    """Threshold rate for a box with condition ratio ``kappa = b/a`` and modulus ``m``."""
    if not kappa > 1:
        raise DomainError(f"condition ratio must exceed 1, got {kappa}")
    if not 0.0 < m < 1.0:
        raise DomainError(f"modulus m={m} outside (0, 1)")
    # a lam = 2 a (E' - m K') / (b - a)
    return threshold_q(2.0 * complete_gap(1.0 - m) / (kappa - 1.0), m)


def cg_rate(kappa):
    """``(sqrt(kappa) - 1) / (sqrt(kappa) + 1)``."""
    if not kappa >= 1:
        raise DomainError(f"condition ratio must be >= 1, got {kappa}")
    s = math.sqrt(kappa)
    return (s - 1.0) / (s + 1.0)


def _clip_q(q):
    return min(max(q, Q_MIN), Q_MAX)


def candidate_rates(ctx, k):
    """Rates tried when minimising the non-Hermitian bound over ``q``."""
    qs = [optimal_q_nonhermitian(ctx, k)]
    a = ctx.box.a
    if a > 0:
        qs.append(_clip_q(crude_q(ctx.cp, a)))
        qs.append(threshold_q(a * ctx.cp.lam, ctx.cp.m))
    return qs


# ---------------------------------------------------------------- skew-Hermitian a priori


def apriori_skew_log(rho, tau, k, q):
    _check_k(k)
    _check_q(q)
    if rho < 0:
        raise DomainError(f"rho must be nonnegative, got {rho}")
    tr = tau * rho
    if tr == 0.0:
        return -math.inf
    lead = min(-math.log1p(-q * q), math.log(tr / q))
    return math.log(4.0) + lead - math.log1p(-q) + k * math.log(q) + tr * (1.0 / q - q)


def apriori_skew(rho, tau, k, q):
    """``4 min{1/(1-q^2), tau rho/q} / (1-q) * q^k * exp(tau rho (1/q - q))``."""
    return _from_log(apriori_skew_log(rho, tau, k, q))


def skew_quartic(tau_rho, k, q):
    return tau_rho * q**4 + (3 - k) * q**3 + q * q + k * q - tau_rho


def optimal_q_skew(tau_rho, k, method="quartic"):
    """Minimising rate for the skew bound.

    ``"quartic"`` returns the root in ``(0, 1)`` of ``skew_quartic``;
    ``"simplified"`` minimises ``q^k exp(tau rho (1/q - q))`` and returns
    exactly ``1.0`` when ``k <= 2 tau rho``.
    """
    _check_k(k)
    if not tau_rho > 0:
        raise DomainError(f"tau*rho must be positive, got {tau_rho}")
    if method == "quartic":
        return _brent(lambda q: skew_quartic(tau_rho, k, q), Q_MIN, Q_MAX, "skew quartic")
    if method == "simplified":
        if k <= 2.0 * tau_rho:
            return 1.0
        q = (k - math.sqrt(k * k - 4.0 * tau_rho * tau_rho)) / (2.0 * tau_rho)
        return min(q, Q_MAX)
    raise DomainError(f"unknown method {method!r}")


def _best_skew(rho, tau, k, scale_log=0.0):
    tr = tau * rho
    if tr == 0.0:
        return 0.0, None
    qs = {optimal_q_skew(tr, k, "quartic")}
    simple = optimal_q_skew(tr, k, "simplified")
    if simple < 1.0:
        qs.add(simple)
    if tr / k < 1.0:
        qs.add(_clip_q(tr / k))
    best = min(qs, key=lambda q: apriori_skew_log(rho, tau, k, q))
    return _from_log(scale_log + apriori_skew_log(rho, tau, k, best)), best


# ---------------------------------------------------------------- minimised a priori bound


def apriori_bound(ctx, k):
    """A priori bound minimised over ``q``; returns ``(bound, q_used)``.

    ``q_used`` is ``None`` when the bound does not depend on a rate.
    """
    _check_k(k)
    if ctx.mode == "skew":
        bound, q = _best_skew(ctx.rho_skew, ctx.tau, k)
        return bound * ctx.vnorm, q
    if ctx.cp is None:
        # A = a I + S with S skew-Hermitian, spectrum of iS inside [-c, c]
        return _best_skew(0.5 * ctx.box.c, ctx.tau, k, math.log(ctx.vnorm) - ctx.tau * ctx.box.a)
    qs = candidate_rates(ctx, k)
    logs = [apriori_log(ctx, k, q) for q in qs]
    i = int(np.argmin(logs))
    return _from_log(logs[i]), qs[i]


# ---------------------------------------------------------------- reference bounds


def saad_bound(tau_norm, k):
    """``2 (tau ||A||)^k / k!``."""
    _check_k(k)
    if tau_norm == 0.0:
        return 0.0
    return _from_log(math.log(2.0) + k * math.log(tau_norm) - math.lgamma(k + 1))


def hl_disk_bound(rho, tau, k):
    """``12 exp(-rho tau) (e rho tau / k)^k``; ``None`` for ``k < 2 rho tau``."""
    _check_k(k)
    rt = rho * tau
    if k < 2.0 * rt:
        return None
    if rt == 0.0:
        return 0.0
    return _from_log(math.log(12.0) - rt + k * (1.0 + math.log(rt / k)))


def hl_skew_bound(rho, tau, k):
    """``12 exp(-(rho tau)^2 / k) (e rho tau / k)^k``; ``None`` for ``k < 2 rho tau``."""
    _check_k(k)
    rt = rho * tau
    if k < 2.0 * rt:
        return None
    if rt == 0.0:
        return 0.0
    return _from_log(math.log(12.0) - rt * rt / k + k * (1.0 + math.log(rt / k)))


def reference_bounds(ctx, k):
    """``(saad, hl)``; ``hl`` is ``None`` where it does not apply."""
    saad = saad_bound(ctx.tau * ctx.norm_a, k) * ctx.vnorm
    if ctx.mode == "skew":
        hl = hl_skew_bound(ctx.rho_skew, ctx.tau, k)
    elif ctx.rho_disk is not None:
        hl = hl_disk_bound(ctx.rho_disk, ctx.tau, k)
    else:
        hl = None
    if hl is not None:
        hl *= ctx.vnorm
    return saad, hl


# ---------------------------------------------------------------- convergence history


def hessenberg_context(ctx, dec):
    """Context whose box comes from ``H_k`` and whose norm factor is ``h_next``.

    The exponential factor for ``nu(A)`` keeps using the operator's box.
    """
    box_k = spectral_box(dec.H)
    norm = max(dec.h_next, abs(box_k.a), abs(box_k.b), box_k.c)
    return replace(ctx, box=box_k, cp=None, degenerate=None, norm_a=norm, nu=ctx.nu)


def bound_curve(ctx, dec, k_range, want_reference=True, reference=None, box_source="operator"):
    """Convergence records for each ``k`` in ``k_range`` from one decomposition.

    ``dec`` must hold at least ``max(k_range)`` steps unless it broke down
    earlier, in which case the history stops at the breakdown step.
    """
    if box_source not in ("operator", "hessenberg"):
        raise DomainError(f"unknown box source {box_source!r}")
    mode = ctx.krylov_mode
    spread = ctx.box.b - ctx.box.a if ctx.mode == "skew" else None
    rows = []
    for k in k_range:
        if k > dec.k:
            break
        sub = dec.truncate(k)
        err = None
        if reference is not None:
            err = float(np.linalg.norm(reference - krylov_approx(sub, ctx.tau, mode)))
        est = aposteriori_estimate(sub, ctx.tau, ctx.nu, mode, ctx.simpson_n, spread)
        local = ctx
        if box_source == "hessenberg" and ctx.mode == "general":
            local = hessenberg_context(ctx, sub)
        bnd, q = apriori_bound(local, k)
        saad = hl = None
        if want_reference:
            saad, hl = reference_bounds(ctx, k)
        rows.append(ConvergenceRecord(k, err, est, bnd, q, saad, hl))
    return rows
