"""Arnoldi and Lanczos reductions and the Krylov approximation of ``exp(-tau A) v``.

The two evaluation modes are

``"exp"``
    ``w_k(tau) = V_k exp(-tau H_k) e_1`` approximating ``exp(-tau A) v``;
``"unitary"``
    ``w_k(tau) = V_k exp(i tau T_k) e_1`` approximating ``exp(i tau H) v`` for a
    Hermitian ``H`` reduced by Lanczos.
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionError, DomainError, ExpmOverflowError, ModeError

log = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14
DENSE_LIMIT = 2000
STRUCTURES = ("general", "hermitian", "skew-hermitian")
MODES = ("exp", "unitary")


class SparseMatrix:
    """Compressed-row sparse matrix (real or complex) with a matvec."""

    def __init__(self, data, indices, indptr, shape):
        self._csr = sp.csr_array((data, indices, indptr), shape=shape)

    @classmethod
    def from_scipy(cls, mat):
        mat = sp.csr_array(mat)
        mat.sum_duplicates()
        return cls(mat.data, mat.indices, mat.indptr, mat.shape)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        return cls.from_scipy(sp.coo_array((vals, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, arr):
        return cls.from_scipy(sp.csr_array(np.asarray(arr)))

    @property
    def shape(self):
        return self._csr.shape

    @property
    def dtype(self):
        return self._csr.dtype

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def data(self):
        return self._csr.data

    @property
    def indices(self):
        return self._csr.indices

    @property
    def indptr(self):
        return self._csr.indptr

    def matvec(self, x):
        return self._csr @ x

    __matmul__ = matvec

    def to_scipy(self):
        return self._csr

    def to_dense(self):
        return self._csr.toarray()

    def conj_transpose(self):
        return SparseMatrix.from_scipy(self._csr.conj().T)

    def structure(self):
        """Exact structural test: ``"hermitian"``, ``"skew-hermitian"`` or ``"general"``."""
        if self.shape[0] != self.shape[1]:
            return "general"
        diff = self._csr - self._csr.conj().T
        if diff.count_nonzero() == 0:
            return "hermitian"
        summ = self._csr + self._csr.conj().T
        if summ.count_nonzero() == 0:
            return "skew-hermitian"
        return "general"


@dataclass(frozen=True)
class LinearOperator:
    """Square linear map ``x -> A x`` plus what the bounds need to know about ``A``."""

    n: int
    apply: object
    norm_estimate: float
    structure: str = "general"
    matrix: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise DomainError(f"unknown structure tag {self.structure!r}")

    def __call__(self, x):
        return self.apply(x)

    def to_dense(self):
        if self.matrix is not None:
            mat = self.matrix
            if isinstance(mat, SparseMatrix):
                return mat.to_dense()
            if sp.issparse(mat):
                return mat.toarray()
            return np.asarray(mat)
        cols = [self.apply(e) for e in np.eye(self.n)]
        return np.column_stack(cols)


def norm_upper_bound(mat):
    """An upper bound on ``||A||_2``: exact for dense matrices up to ``DENSE_LIMIT``."""
    if isinstance(mat, SparseMatrix):
        mat = mat.to_scipy()
    if sp.issparse(mat):
        if mat.shape[0] <= DENSE_LIMIT:
            return float(np.linalg.norm(mat.toarray(), 2))
        one = abs(mat).sum(axis=0).max()
        inf = abs(mat).sum(axis=1).max()
        return float(math.sqrt(one * inf))
    return float(np.linalg.norm(np.asarray(mat), 2))


def as_operator(mat, structure=None, norm=None):
    """Wrap a dense array, scipy sparse matrix or ``SparseMatrix`` as a ``LinearOperator``."""
    if isinstance(mat, LinearOperator):
        return mat
    if sp.issparse(mat):
        mat = SparseMatrix.from_scipy(mat)
    if isinstance(mat, SparseMatrix):
        n, ncol = mat.shape
        if structure is None:
            structure = mat.structure()
        apply = mat.matvec
    else:
        mat = np.asarray(mat)
        if mat.ndim != 2:
            raise DimensionError(f"expected a matrix, got shape {mat.shape}")
        n, ncol = mat.shape
        if structure is None:
            if np.array_equal(mat, mat.conj().T):
                structure = "hermitian"
            elif np.array_equal(mat, -mat.conj().T):
                structure = "skew-hermitian"
            else:
                structure = "general"
        apply = mat.__matmul__
    if n != ncol:
        raise DimensionError(f"operator must be square, got {n}x{ncol}")
    if norm is None:
        norm = norm_upper_bound(mat)
    return LinearOperator(n, apply, float(norm), structure, mat)


@dataclass(frozen=True)
class KrylovDecomposition:
    """``A V_k = V_k H_k + h_next v_{k+1} e_k^T`` with ``v = beta0 V_k e_1``.

    ``V`` holds ``k + 1`` columns, or only ``k`` after a breakdown.
    """

    V: np.ndarray
    H: np.ndarray
    h_next: float
    k: int
    breakdown: bool
    beta0: float = 1.0
    structure: str = "general"
    h_all: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def v_next(self):
        return None if self.breakdown else self.V[:, self.k]

    @property
    def basis(self):
        return self.V[:, : self.k]

    def truncate(self, j):
        """The decomposition after ``j <= k`` steps (a prefix of this one)."""
        if not 1 <= j <= self.k:
            raise DomainError(f"cannot truncate a {self.k}-step decomposition to {j}")
        if j == self.k:
            return self
        h_next = float(abs(self.h_all[j, j - 1]))
        return replace(
            self,
            V=self.V[:, : j + 1],
            H=self.H[:j, :j],
            h_next=h_next,
            k=j,
            breakdown=False,
        )


class KrylovProcess:
    """Incremental Arnoldi (or Lanczos) recurrence; call ``step`` then ``decomposition``."""

    def __init__(self, A, v, k_max, method="arnoldi"):
        if method not in ("arnoldi", "lanczos"):
            raise DomainError(f"unknown method {method!r}")
        if method == "lanczos" and A.structure != "hermitian":
            raise ModeError("Lanczos requires an operator tagged hermitian")
        v = np.asarray(v)
        if v.shape != (A.n,):
            raise DimensionError(f"vector of shape {v.shape} for operator of size {A.n}")
        beta0 = float(np.linalg.norm(v))
        if beta0 == 0.0:
            raise DomainError("start vector is zero")
        self.A = A
        self.method = method
        self.k_max = min(int(k_max), A.n)
        if self.k_max < 1:
            raise DomainError(f"step budget must be positive, got {k_max}")
        v1 = v / beta0
        dtype = np.result_type(v1, A.apply(v1))
        if method == "lanczos":
            dtype = np.result_type(dtype, v1.dtype)
        self.beta0 = beta0
        self.V = np.zeros((A.n, self.k_max + 1), dtype=dtype)
        self.V[:, 0] = v1
        hdtype = float if method == "lanczos" else dtype
        self.Hbar = np.zeros((self.k_max + 1, self.k_max), dtype=hdtype)
        self.k = 0
        self.breakdown = False
        self._threshold = BREAKDOWN_TOL * max(A.norm_estimate, np.finfo(float).tiny)

    @property
    def done(self):
        return self.breakdown or self.k >= self.k_max

    def step(self):
        if self.done:
            return False
        j = self.k
        V = self.V
        w = np.asarray(self.A.apply(V[:, j]), dtype=V.dtype)
        if self.method == "arnoldi":
            for i in range(j + 1):
                h = np.vdot(V[:, i], w)
                w = w - h * V[:, i]
                self.Hbar[i, j] = h
            # one full reorthogonalisation pass
            corr = V[:, : j + 1].conj().T @ w
            w = w - V[:, : j + 1] @ corr
            self.Hbar[: j + 1, j] += corr
        else:
            alpha = np.vdot(V[:, j], w).real
            w = w - alpha * V[:, j]
            if j > 0:
                w = w - self.Hbar[j, j - 1] * V[:, j - 1]
            for _ in range(2):
                w = w - V[:, : j + 1] @ (V[:, : j + 1].conj().T @ w)
            self.Hbar[j, j] = alpha
        h_next = float(np.linalg.norm(w))
        self.k = j + 1
        if h_next <= self._threshold or self.k == self.A.n:
            self.breakdown = True
            self.Hbar[j + 1, j] = 0.0
        else:
            self.Hbar[j + 1, j] = h_next
            if self.method == "lanczos" and j + 1 < self.k_max:
                self.Hbar[j, j + 1] = h_next
            V[:, j + 1] = w / h_next
        return True

    def run(self, k=None):
        target = self.k_max if k is None else min(k, self.k_max)
        while self.k < target and self.step():
            pass
        return self

    def decomposition(self, copy=True):
        """Snapshot after the current step; ``copy=False`` shares the basis storage."""
        k = self.k
        if k == 0:
            raise DomainError("no steps taken yet")
        H = self.Hbar[:k, :k].copy()
        if self.method == "lanczos":
            H = np.triu(np.tril(H, 1), -1)
        ncol = k if self.breakdown else k + 1
        V = self.V[:, :ncol]
        return KrylovDecomposition(
            V=V.copy() if copy else V,
            H=H,
            h_next=float(abs(self.Hbar[k, k - 1])),
            k=k,
            breakdown=self.breakdown,
            beta0=self.beta0,
            structure=self.A.structure,
            h_all=self.Hbar[: k + 1, :k].copy(),
        )


def arnoldi(A, v, k_max):
    """Run up to ``k_max`` Arnoldi steps (MGS plus one reorthogonalisation pass)."""
    return KrylovProcess(as_operator(A), v, k_max, "arnoldi").run().decomposition()


def lanczos(H, v, k_max):
    """Run up to ``k_max`` Lanczos steps with full reorthogonalisation; ``H`` Hermitian."""
    return KrylovProcess(as_operator(H), v, k_max, "lanczos").run().decomposition()


# Pade(13) coefficients and the 1-norm threshold from Higham (2005)
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def dense_expm(M):
    """Matrix exponential by scaling and squaring with the diagonal Pade(13) approximant."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n > DENSE_LIMIT:
        raise DimensionError(f"dense_expm limited to n <= {DENSE_LIMIT}, got {n}")
    if not np.all(np.isfinite(M)):
        raise ExpmOverflowError("input matrix is not finite")
    if n == 0:
        return M.copy()
    M = M.astype(np.result_type(M.dtype, float))
    norm1 = np.linalg.norm(M, 1)
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
        M = M / 2.0**s
    b = _PADE13
    ident = np.eye(n, dtype=M.dtype)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2) + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
    V = M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2) + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            R = R @ R
    if not np.all(np.isfinite(R)):
        raise ExpmOverflowError(f"exponential overflows (||M||_1 = {norm1:.3e})")
    return R


def _check_mode(dec, mode):
    if mode not in MODES:
        raise ModeError(f"unknown mode {mode!r}")
    if mode == "unitary" and dec.structure != "hermitian":
        raise ModeError("unitary mode needs a Lanczos decomposition of a Hermitian operator")


def _small_exp_e1(dec, t, mode):
    """First column of ``exp(-t H_k)`` (or ``exp(i t T_k)``)."""
    H = dec.H
    if dec.structure == "hermitian":
        lam, Q = np.linalg.eigh(H)
        phase = np.exp(1j * t * lam) if mode == "unitary" else np.exp(-t * lam)
        return Q @ (phase * Q[0].conj())
    if mode == "unitary":
        return dense_expm(1j * t * H)[:, 0]
    return dense_expm(-t * H)[:, 0]


def krylov_approx(dec, tau, mode="exp"):
    """Krylov approximation ``w_k(tau)`` from a decomposition."""
    _check_mode(dec, mode)
    if dec.k < 1:
        raise DomainError("decomposition is empty")
    y = _small_exp_e1(dec, tau, mode)
    return dec.beta0 * (dec.basis @ y)


def _h_series(dec, ts, mode):
    ts = np.asarray(ts, dtype=float)
    if np.any(~np.isfinite(ts)) or np.any(ts < 0):
        raise DomainError("times must be finite and nonnegative")
    k = dec.k
    H = dec.H
    sign = 1j if mode == "unitary" else -1.0
    if dec.structure == "hermitian":
        lam, Q = np.linalg.eigh(H)
        coef = Q[k - 1] * Q[0].conj()
        return np.exp(sign * np.outer(ts, lam)) @ coef, False
    try:
        lam, X = scipy.linalg.eig(H)
        Y = np.linalg.solve(X, np.eye(k)[:, 0])
        cond = np.linalg.cond(X)
    except (np.linalg.LinAlgError, ValueError):
        cond = math.inf
    if math.isfinite(cond):
        growth = np.max(np.abs(np.exp(sign * np.outer(ts, lam))))
        if np.finfo(float).eps * cond * growth <= 1e-13:
            return np.exp(sign * np.outer(ts, lam)) @ (X[k - 1] * Y), False
    log.debug("h(t) series: eigenbasis ill-conditioned (cond=%.3e), using dense_expm", cond)
    vals = np.array([dense_expm(sign * t * H)[k - 1, 0] for t in ts], dtype=complex)
    return vals, True


def h_entry_series(dec, ts, mode="exp"):
    """``h(t) = e_k^T exp(-t H_k) e_1`` (or ``exp(i t T_k)``) at every ``t`` in ``ts``.

    One eigendecomposition of ``H_k`` serves all times; an ill-conditioned
    eigenbasis falls back to one dense exponential per time.
    """
    _check_mode(dec, mode)
    vals, _ = _h_series(dec, ts, mode)
    return np.asarray(vals, dtype=complex)
