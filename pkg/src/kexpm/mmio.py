"""Matrix Market coordinate files and plain one-value-per-line vectors."""

import numpy as np

from .errors import MatrixMarketError
from .krylov import SparseMatrix

_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


def _parse_header(line, lineno):
    parts = line.strip().split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(lineno, f"bad header {line.strip()!r}")
    obj, fmt, fld, sym = (p.lower() for p in parts[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(lineno, f"only 'matrix coordinate' is supported, got {obj} {fmt}")
    if fld not in _FIELDS:
        raise MatrixMarketError(lineno, f"unsupported field {fld!r}")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(lineno, f"unsupported symmetry {sym!r}")
    if sym == "hermitian" and fld != "complex":
        raise MatrixMarketError(lineno, "hermitian storage requires complex entries")
    return fld, sym


def _data_lines(lines, start):
    for lineno, line in enumerate(lines[start:], start=start + 1):
        s = line.strip()
        if s and not s.startswith("%"):
            yield lineno, s.split()


def structure_of(field, symmetry):
    """Operator structure tag implied by a header."""
    if symmetry == "hermitian" or (symmetry == "symmetric" and field != "complex"):
        return "hermitian"
    if symmetry == "skew-symmetric" and field != "complex":
        return "skew-hermitian"
    return None


def read_matrix_market(path):
    """Load a coordinate Matrix Market file; returns ``(SparseMatrix, structure or None)``.

    Symmetric, skew-symmetric and Hermitian storage is expanded to the full
    matrix. The structure tag is ``None`` when the header implies nothing.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(1, "empty file")
    fld, sym = _parse_header(lines[0], 1)
    body = _data_lines(lines, 1)
    try:
        lineno, size = next(body)
    except StopIteration:
        raise MatrixMarketError(len(lines), "missing size line") from None
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(lineno, f"bad size line {' '.join(size)!r}") from None
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise MatrixMarketError(lineno, "negative size")
    if sym != "general" and nrows != ncols:
        raise MatrixMarketError(lineno, f"{sym} storage needs a square matrix")

    width = {"pattern": 2, "complex": 4}.get(fld, 3)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=complex if fld == "complex" else float)
    count = 0
    for lineno, toks in body:
        if count == nnz:
            raise MatrixMarketError(lineno, f"more than the declared {nnz} entries")
        if len(toks) != width:
            raise MatrixMarketError(lineno, f"expected {width} fields, got {len(toks)}")
        try:
            i, j = int(toks[0]), int(toks[1])
            if fld == "pattern":
                val = 1.0
            elif fld == "complex":
                val = complex(float(toks[2]), float(toks[3]))
            elif fld == "integer":
                val = float(int(toks[2]))
            else:
                val = float(toks[2])
        except ValueError:
            raise MatrixMarketError(lineno, f"unparsable entry {' '.join(toks)!r}") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(lineno, f"index ({i}, {j}) outside {nrows}x{ncols}")
        if sym != "general" and i < j:
            raise MatrixMarketError(lineno, f"{sym} storage expects the lower triangle only")
        if sym == "skew-symmetric" and i == j:
            raise MatrixMarketError(lineno, "skew-symmetric storage has no diagonal")
        rows[count], cols[count], vals[count] = i - 1, j - 1, val
        count += 1
    if count != nnz:
        raise MatrixMarketError(len(lines), f"declared {nnz} entries, found {count}")

    if sym != "general":
        off = rows != cols
        mirror = vals[off]
        if sym == "skew-symmetric":
            mirror = -mirror
        elif sym == "hermitian":
            mirror = mirror.conj()
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, mirror]),
        )
    mat = SparseMatrix.from_coo(rows, cols, vals, (nrows, ncols))
    return mat, structure_of(fld, sym)


def _fmt(x):
    return "%.17g" % x


def write_matrix_market(path, mat):
    """Write ``mat`` (``SparseMatrix``, scipy sparse or dense) in general coordinate form."""
    if not isinstance(mat, SparseMatrix):
        mat = SparseMatrix.from_scipy(mat) if hasattr(mat, "tocsr") else SparseMatrix.from_dense(mat)
    coo = mat.to_scipy().tocoo()
    is_complex = np.iscomplexobj(coo.data)
    fld = "complex" if is_complex else "real"
    nrows, ncols = mat.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {fld} general\n")
        fh.write(f"{nrows} {ncols} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if is_complex:
                fh.write(f"{i + 1} {j + 1} {_fmt(v.real)} {_fmt(v.imag)}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {_fmt(v)}\n")


def read_vector(path):
    """One value per line (``re`` or ``re im``); ``%`` and ``#`` start comment lines."""
    vals = []
    is_complex = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s[0] in "%#":
                continue
            toks = s.split()
            try:
                if len(toks) == 1:
                    vals.append(complex(float(toks[0])))
                elif len(toks) == 2:
                    vals.append(complex(float(toks[0]), float(toks[1])))
                    is_complex = True
                else:
                    raise ValueError
            except ValueError:
                raise MatrixMarketError(lineno, f"bad vector entry {s!r}") from None
    if not vals:
        raise MatrixMarketError(1, "vector file has no entries")
    out = np.array(vals)
    return out if is_complex else out.real.copy()


def write_vector(path, v):
    v = np.asarray(v)
    with open(path, "w", encoding="utf-8") as fh:
        for x in v:
            if np.iscomplexobj(v):
                fh.write(f"{_fmt(x.real)} {_fmt(x.imag)}\n")
            else:
                fh.write(f"{_fmt(x)}\n")
