"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 no convergence within the step budget.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import logging
import math
import os
from pathlib import Path
import sys
import time

import numpy as np

from .bounds import (
    CROUZEIX_Q,
    SIMPSON_N,
    ConvergenceRecord,
    aposteriori_estimate,
    apriori_bound,
    bound_curve,
    make_context,
    reference_bounds,
    spectral_box,
)
from .conformal import SpectralBox, build_conformal, level_curve, modulus_ratio, psi_minus_r
from .elliptic import complete_elliptic, complete_gap
from .errors import ConvergenceError, KexpmError
from .krylov import KrylovProcess, LinearOperator, SparseMatrix, as_operator, krylov_approx
from .mmio import read_matrix_market, read_vector, write_vector
from .problems import (
    DEFAULT_SEED,
    convection_diffusion,
    diagonal_skew,
    example1_box,
    example2_box,
    lattice_normal_matrix,
    reference_solution,
)
from .svg import emit_svg

log = logging.getLogger("kexpm")

EXIT_OK, EXIT_INPUT, EXIT_NOCONV = 0, 2, 3
DEFAULT_TAUS = {1: [10.0, 20.0, 30.0, 40.0], 2: [30.0], 3: [2.0, 10.0, 20.0, 50.0], 4: [2.0, 10.0, 20.0, 50.0]}
DEFAULT_M = [0.01, 0.1, 0.9, 0.99]
DEFAULT_SHIFTS = [-1.0, -10.0]
LATTICE_N = 31
GRID_N = 20
SKEW_N = 1000


class InputError(KexpmError):
    """Invalid command-line input."""


@dataclass
class RunConfig:
    command: str
    example_id: int = None
    tau_list: list = None
    tol: float = 1e-8
    max_k: int = 120
    matrix_path: str = None
    vector_path: str = None
    out_dir: str = None
    seed: int = DEFAULT_SEED
    simpson_n: int = SIMPSON_N
    q_constant: float = CROUZEIX_Q
    m_list: list = field(default_factory=lambda: list(DEFAULT_M))
    shift_list: list = field(default_factory=lambda: list(DEFAULT_SHIFTS))
    jobs: int = 4
    box: tuple = None
    norm: float = None
    skew: bool = False
    rho_disk: float = None
    m: float = None
    radius: float = None
    points: int = 256

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError(f"--tol must be positive, got {self.tol}")
        if self.max_k < 1:
            raise InputError(f"--max-k must be >= 1, got {self.max_k}")
        if self.simpson_n < 2 or self.simpson_n % 2:
            raise InputError(f"--simpson must be even and >= 2, got {self.simpson_n}")
        if not self.q_constant > 0:
            raise InputError(f"--crouzeix must be positive, got {self.q_constant}")
        if self.tau_list is not None and any(not (t > 0 and math.isfinite(t)) for t in self.tau_list):
            raise InputError(f"--tau values must be positive, got {self.tau_list}")
        if self.out_dir is None:
            self.out_dir = os.environ.get("KEXPM_OUT", "kexpm_out")


# ---------------------------------------------------------------- CSV


def format_value(x):
    """Shortest decimal that reads back to the same double; empty for not-applicable."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def parse_value(s):
    return None if s == "" else float(s)


def write_records(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ConvergenceRecord.FIELDS)
        for r in rows:
            writer.writerow([format_value(v) for v in r.as_tuple()])
    return path


def read_records(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ConvergenceRecord.FIELDS:
            raise InputError(f"unexpected CSV header {header}")
        return [
            ConvergenceRecord(int(row[0]), *(parse_value(s) for s in row[1:])) for row in reader
        ]


def records_svg(rows, path, title):
    ks = [r.k for r in rows]
    series = {}
    for name in ConvergenceRecord.FIELDS[1:]:
        if name == "q_used":
            continue
        ys = [getattr(r, name) for r in rows]
        if any(y is not None for y in ys):
            series[name] = [math.nan if y is None else y for y in ys]
    return emit_svg(ks, series, path, title)


# ---------------------------------------------------------------- examples


@dataclass(frozen=True)
class ExampleRun:
    label: str
    problem: object
    tau: float
    rho_disk: float = None


def example_runs(cfg):
    eid = cfg.example_id
    if eid not in (1, 2, 3, 4):
        raise InputError(f"--example must be 1, 2, 3 or 4, got {eid}")
    taus = cfg.tau_list or DEFAULT_TAUS[eid]
    runs = []
    if eid == 1:
        p = lattice_normal_matrix(LATTICE_N, example1_box(), seed=cfg.seed)
        runs = [ExampleRun(f"tau{t:g}", p, t, rho_disk=1.0) for t in taus]
    elif eid == 2:
        for m in cfg.m_list:
            p = lattice_normal_matrix(LATTICE_N, example2_box(m), seed=cfg.seed)
            runs += [ExampleRun(f"m{m:g}_tau{t:g}", p, t) for t in taus]
        for s in cfg.shift_list:
            p = lattice_normal_matrix(LATTICE_N, SpectralBox(0.0, 2.0, 1.0), shift=s, seed=cfg.seed)
            runs += [ExampleRun(f"shift{s:g}_tau{t:g}", p, t) for t in taus]
    elif eid == 3:
        p = convection_diffusion(GRID_N, seed=cfg.seed)
        runs = [ExampleRun(f"tau{t:g}", p, t) for t in taus]
    else:
        p = diagonal_skew(SKEW_N, seed=cfg.seed)
        runs = [ExampleRun(f"tau{t:g}", p, t) for t in taus]
    return runs


def history(run, cfg):
    """Convergence records of one example run."""
    p = run.problem
    op = p.operator
    box = spectral_box(op)
    skew = p.mode == "unitary"
    ctx = make_context(
        box, run.tau, op.norm_estimate, mode="skew" if skew else "general",
        rho_disk=run.rho_disk, q_constant=cfg.q_constant, simpson_n=cfg.simpson_n,
    )
    method = "lanczos" if skew else "arnoldi"
    dec = KrylovProcess(op, p.v, cfg.max_k, method).run().decomposition()
    ref = reference_solution(p, run.tau)
    return bound_curve(ctx, dec, range(1, cfg.max_k + 1), True, ref)


def _do_run(run, cfg, out):
    rows = history(run, cfg)
    # labels may contain '.', so no with_suffix
    stem = f"example{cfg.example_id}_{run.label}"
    csv_path = write_records(out / f"{stem}.csv", rows)
    svg_path = records_svg(rows, out / f"{stem}.svg", f"Example {cfg.example_id}, {run.label}")
    return csv_path, svg_path


def run_example(cfg):
    """Write one CSV and one SVG per run of the chosen example; returns the paths."""
    runs = example_runs(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(lambda r: _do_run(r, cfg, out), runs))
    return [p for pair in results for p in pair]


# ---------------------------------------------------------------- expmv


@dataclass
class ExpmvResult:
    w: np.ndarray
    k: int
    estimate: float
    converged: bool
    box: SpectralBox
    structure: str
    elapsed: float


def _load_operator(cfg):
    if not cfg.matrix_path or not cfg.vector_path:
        raise InputError("expmv needs --matrix and --vector")
    mat, tag = read_matrix_market(cfg.matrix_path)
    v = read_vector(cfg.vector_path)
    if mat.shape[0] != mat.shape[1]:
        raise InputError(f"matrix must be square, got {mat.shape[0]}x{mat.shape[1]}")
    if v.shape[0] != mat.shape[0]:
        raise InputError(f"vector has {v.shape[0]} entries for a {mat.shape[0]}x{mat.shape[0]} matrix")
    return as_operator(mat, structure=tag), v


def solve_expmv(A, v, tau, tol=1e-8, max_k=120, simpson_n=SIMPSON_N):
    """``exp(-tau A) v`` by Arnoldi (Lanczos for Hermitian or skew-Hermitian ``A``).

    Stops at the first step whose estimate is ``<= tol``.
    """
    start = time.perf_counter()
    A = as_operator(A)
    if A.structure == "skew-hermitian":
        # A = -i H with H = i A Hermitian, and exp(-tau A) = exp(i tau H)
        op = LinearOperator(A.n, lambda x: 1j * A.apply(x), A.norm_estimate, "hermitian",
                            None if A.matrix is None else _scaled(A.matrix, 1j))
        mode, method = "unitary", "lanczos"
    else:
        op = A
        mode, method = "exp", "lanczos" if A.structure == "hermitian" else "arnoldi"
    box = spectral_box(op)
    spread = box.b - box.a if mode == "unitary" else None
    proc = KrylovProcess(op, v, max_k, method)
    est = math.inf
    while proc.step():
        dec = proc.decomposition(copy=False)
        est = aposteriori_estimate(dec, tau, box.a, mode, simpson_n, spread)
        if est <= tol:
            break
    dec = proc.decomposition()
    w = krylov_approx(dec, tau, mode)
    return ExpmvResult(w, dec.k, est, est <= tol, box, A.structure, time.perf_counter() - start)


def _scaled(mat, s):
    if isinstance(mat, SparseMatrix):
        return SparseMatrix.from_scipy(mat.to_scipy() * s)
    return np.asarray(mat) * s


def expmv(cfg):
    A, v = _load_operator(cfg)
    if not cfg.tau_list or len(cfg.tau_list) != 1:
        raise InputError("expmv needs exactly one --tau value")
    res = solve_expmv(A, v, cfg.tau_list[0], cfg.tol, cfg.max_k, cfg.simpson_n)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_vector(out / "w.txt", res.w)
    b = res.box
    summary = (
        f"converged: {'yes' if res.converged else 'no'}\n"
        f"k: {res.k}\n"
        f"estimate: {format_value(res.estimate)}\n"
        f"structure: {res.structure}\n"
        f"box: a={format_value(b.a)} b={format_value(b.b)} c={format_value(b.c)}"
        f"{' (estimated)' if b.estimated else ''}\n"
        f"elapsed_s: {res.elapsed:.3f}\n"
    )
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    if not res.converged:
        raise ConvergenceError(f"estimate {res.estimate:.3e} above tol {cfg.tol:.3e} after {res.k} steps")
    return res


# ---------------------------------------------------------------- bounds-only


def bounds_table(cfg):
    if cfg.box is None and cfg.matrix_path is None:
        raise InputError("bounds needs --box a,b,c or --matrix")
    if not cfg.tau_list or len(cfg.tau_list) != 1:
        raise InputError("bounds needs exactly one --tau value")
    if cfg.box is not None:
        box = SpectralBox(*cfg.box)
        # ||A|| <= ||(A + A*)/2|| + ||(A - A*)/2||
        norm = cfg.norm if cfg.norm is not None else max(abs(box.a), abs(box.b)) + box.c
    else:
        mat, tag = read_matrix_market(cfg.matrix_path)
        op = as_operator(mat, structure=tag)
        box, norm = spectral_box(op), op.norm_estimate
    ctx = make_context(
        box, cfg.tau_list[0], norm, mode="skew" if cfg.skew else "general",
        rho_disk=cfg.rho_disk, q_constant=cfg.q_constant, simpson_n=cfg.simpson_n,
    )
    rows = []
    for k in range(1, cfg.max_k + 1):
        bnd, q = apriori_bound(ctx, k)
        saad, hl = reference_bounds(ctx, k)
        rows.append(ConvergenceRecord(k, None, None, bnd, q, saad, hl))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "bounds.csv", rows)
    records_svg(rows, out / "bounds.svg", f"bounds, tau={cfg.tau_list[0]:g}")
    return rows


def elliptic_debug(cfg):
    m = cfg.m
    if m is None:
        raise InputError("elliptic-debug needs --m")
    pair = complete_elliptic(m)
    comp = complete_elliptic(1.0 - m)
    lines = [
        f"m   = {format_value(m)}",
        f"K   = {format_value(pair.K)}",
        f"E   = {format_value(pair.E)}",
        f"K'  = {format_value(comp.K)}",
        f"E'  = {format_value(comp.E)}",
        f"E - (1-m)K = {format_value(complete_gap(m))}",
        f"E' - mK'   = {format_value(complete_gap(1.0 - m))}",
        f"beta/alpha = {format_value(modulus_ratio(m))}",
    ]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    return text


def level_curve_dump(cfg):
    if cfg.box is None or cfg.radius is None:
        raise InputError("level-curve needs --box a,b,c and --r")
    box = SpectralBox(*cfg.box)
    cp = build_conformal(box)
    pts = level_curve(cp, box, cfg.radius, cfg.points)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"level_curve_r{cfg.radius:g}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "re", "im"])
        for j, z in enumerate(pts):
            writer.writerow([format_value(2 * math.pi * j / cfg.points), format_value(z.real),
                             format_value(z.imag)])
    print(f"leftmost point: {format_value(psi_minus_r(cp, box, cfg.radius))}")
    return path


# ---------------------------------------------------------------- argument parsing


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _box(text):
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected a,b,c, got {text!r}")
    return tuple(vals)


def _int(text):
    return int(text, 0)


def build_parser():
    parser = argparse.ArgumentParser(prog="kexpm", description="Krylov exp(-tau A) v with error bounds")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tau", type=_floats, dest="tau_list")
        p.add_argument("--max-k", type=int, default=120, dest="max_k")
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--simpson", type=int, default=SIMPSON_N, dest="simpson_n")
        p.add_argument("--crouzeix", type=float, default=CROUZEIX_Q, dest="q_constant")

    p = sub.add_parser("example", help="reproduce one of the four experiments")
    common(p)
    p.add_argument("--example", type=int, required=True, dest="example_id")
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED)
    p.add_argument("--m", type=_floats, dest="m_list", default=list(DEFAULT_M))
    p.add_argument("--shift", type=_floats, dest="shift_list", default=list(DEFAULT_SHIFTS))
    p.add_argument("--jobs", type=int, default=4)

    p = sub.add_parser("expmv", help="solve exp(-tau A) v for a Matrix Market matrix")
    common(p)
    p.add_argument("--matrix", dest="matrix_path", required=True)
    p.add_argument("--vector", dest="vector_path", required=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("bounds", help="a priori and reference bounds for a box or matrix")
    common(p)
    p.add_argument("--box", type=_box)
    p.add_argument("--matrix", dest="matrix_path")
    p.add_argument("--norm", type=float)
    p.add_argument("--skew", action="store_true", help="box is the spectral interval of H in exp(i tau H)")
    p.add_argument("--rho-disk", type=float, dest="rho_disk")

    p = sub.add_parser("elliptic-debug", help="print complete elliptic integrals for m")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--out", dest="out_dir")

    p = sub.add_parser("level-curve", help="dump a level curve of the rectangle map as CSV")
    p.add_argument("--box", type=_box, required=True)
    p.add_argument("--r", type=float, required=True, dest="radius")
    p.add_argument("--n", type=int, default=256, dest="points")
    p.add_argument("--out", dest="out_dir")
    return parser


_HANDLERS = {
    "example": run_example,
    "expmv": expmv,
    "bounds": bounds_table,
    "elliptic-debug": elliptic_debug,
    "level-curve": level_curve_dump,
}


def main(argv=None):
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    logging.basicConfig(level=logging.DEBUG if args.pop("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(**{k: v for k, v in args.items() if v is not None or k == "command"})
        result = _HANDLERS[cfg.command](cfg)
        if cfg.command == "example":
            for path in result:
                print(path)
    except ConvergenceError as exc:
        print(f"kexpm: not converged: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (KexpmError, ValueError, OSError) as exc:
        print(f"kexpm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK
