"""Test problems with known spectral boxes and reference solutions."""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from .conformal import SpectralBox
from .elliptic import complete_gap
from .errors import DimensionError, DomainError
from .krylov import DENSE_LIMIT, SparseMatrix, as_operator, dense_expm

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class TestProblem:
    """Operator, unit start vector and how to compute the exact answer.

    ``mode`` is ``"exp"`` for ``exp(-tau A) v`` and ``"unitary"`` for
    ``exp(i tau H) v``.
    """

    __test__ = False  # not a pytest class

    name: str
    operator: object
    v: np.ndarray
    reference: str
    mode: str = "exp"
    box_exact: SpectralBox = None
    data: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.operator.n


def start_vector(n, seed=DEFAULT_SEED):
    """Seeded standard normal vector scaled to unit length."""
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


def lattice_normal_matrix(N, box, shift=0.0, seed=DEFAULT_SEED):
    """Block-diagonal normal matrix with eigenvalues on a lattice filling ``box``.

    Blocks ``[[x_l, y_j], [-y_j, x_l]]`` for ``x_l = a + (l-1)(b-a)/(N-1)``,
    ``l = 1..N`` and ``y_j = 2 j c / (N-1)``, ``j = 1..(N-1)/2``. The
    dimension is ``N (N - 1)``. ``shift`` moves the box along the real axis.
    """
    if int(N) != N or N < 3 or N % 2 == 0:
        raise DomainError(f"N must be an odd integer >= 3, got {N}")
    if not (box.b > box.a and box.c > 0):
        raise DomainError(f"lattice needs a nondegenerate box, got {box}")
    box = box.shifted(shift) if shift else box
    x = box.a + np.arange(N) * (box.b - box.a) / (N - 1)
    y = 2.0 * np.arange(1, (N - 1) // 2 + 1) * box.c / (N - 1)
    xs, ys = (g.ravel() for g in np.meshgrid(x, y, indexing="ij"))
    nb = xs.size
    first = 2 * np.arange(nb)
    rows = np.concatenate([first, first, first + 1, first + 1])
    cols = np.concatenate([first, first + 1, first, first + 1])
    vals = np.concatenate([xs, ys, -ys, xs])
    mat = SparseMatrix.from_coo(rows, cols, vals, (2 * nb, 2 * nb))
    op = as_operator(mat, structure="general", norm=float(np.max(np.hypot(xs, ys))))
    return TestProblem(
        name=f"lattice-N{N}",
        operator=op,
        v=start_vector(2 * nb, seed),
        reference="block",
        box_exact=box,
        data={"x": xs, "y": ys},
    )


def example2_box(m):
    """Box ``[0, 2 alpha] x [-beta, beta]`` with ``alpha = E' - m K'`` and ``beta = E - m1 K``."""
    m = float(m)
    if not 0.0 < m < 1.0:
        raise DomainError(f"modulus m={m} outside (0, 1)")
    alpha = complete_gap(1.0 - m)
    beta = complete_gap(m)
    return SpectralBox(0.0, 2.0 * alpha, beta)


def _tridiag(n, lower, diag, upper):
    return sp.diags([lower, diag, upper], [-1, 0, 1], shape=(n, n), format="csr")


def convection_diffusion(grid_n=20, convection=True, seed=DEFAULT_SEED):
    """Five-point discretisation ``A`` of ``-(Laplacian u - u_x - u_y)`` scaled by ``h^2``.

    Zero Dirichlet data on the unit square, ``grid_n`` interior points per
    side, centred differences for the first derivatives.
    """
    if int(grid_n) != grid_n or grid_n < 3:
        raise DomainError(f"grid_n must be an integer >= 3, got {grid_n}")
    h = 1.0 / (grid_n + 1)
    skew = 0.5 * h if convection else 0.0
    T = _tridiag(grid_n, -1.0 - skew, 2.0, -1.0 + skew)
    eye = sp.identity(grid_n, format="csr")
    mat = sp.kron(eye, T) + sp.kron(T, eye)
    op = as_operator(SparseMatrix.from_scipy(mat))
    return TestProblem(
        name=f"convdiff-{grid_n}",
        operator=op,
        v=start_vector(grid_n * grid_n, seed),
        reference="dense-expm",
    )


def diagonal_skew(n=1000, seed=DEFAULT_SEED):
    """Hermitian ``H = diag(j/n)``; the target is ``exp(i tau H) v``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    d = np.arange(1, n + 1) / n
    mat = SparseMatrix.from_scipy(sp.diags(d, format="csr"))
    op = as_operator(mat, structure="hermitian", norm=float(d[-1]))
    return TestProblem(
        name=f"diagskew-{n}",
        operator=op,
        v=start_vector(n, seed),
        reference="eigen-diagonal",
        mode="unitary",
        box_exact=SpectralBox(float(d[0]), float(d[-1]), 0.0),
        data={"d": d},
    )


def skew_rho(p):
    """``(lambda_max - lambda_min) / 4`` of a diagonal skew problem."""
    d = p.data["d"]
    return 0.25 * (d[-1] - d[0])


def _block_solution(x, y, v, tau):
    v1, v2 = v[0::2], v[1::2]
    decay = np.exp(-tau * x)
    cs, sn = np.cos(tau * y), np.sin(tau * y)
    out = np.empty(v.shape, dtype=np.result_type(v, float))
    out[0::2] = decay * (cs * v1 - sn * v2)
    out[1::2] = decay * (sn * v1 + cs * v2)
    return out


def reference_solution(p, tau, method=None):
    """Exact ``exp(-tau A) v`` (or ``exp(i tau H) v`` in unitary mode)."""
    method = method or p.reference
    if method == "block":
        return _block_solution(p.data["x"], p.data["y"], p.v, tau)
    if method == "eigen-diagonal":
        return np.exp(1j * tau * p.data["d"]) * p.v
    if method == "dense-expm":
        if p.n > DENSE_LIMIT:
            raise DimensionError(f"dense reference limited to n <= {DENSE_LIMIT}, got {p.n}")
        dense = p.operator.to_dense()
        M = 1j * tau * dense if p.mode == "unitary" else -tau * dense
        return dense_expm(M) @ p.v
    raise DomainError(f"unknown reference method {method!r}")


def example1_box():
    """Square ``[1 - s, 1 + s] x [-s, s]``, ``s = sqrt(2)/2``, inside ``|z - 1| < 1``."""
    s = math.sqrt(2.0) / 2.0
    return SpectralBox(1.0 - s, 1.0 + s, s)
