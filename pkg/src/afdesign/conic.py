"""Standard-form conic problems and the builder that assembles them.

A problem is ``minimize c'x  subject to  A x = b,  x in K`` where ``K`` is an
ordered product of PSD blocks (stored as scaled upper-triangle vectors so the
Euclidean inner product matches the trace inner product), a nonnegative
orthant, and free variables.

Hermitian blocks are hosted through the real symmetric embedding
``[[Re, -Im], [Im, Re]]`` (dimension doubling).  The builder accepts complex
coefficient data and complex right-hand sides and splits every equality into
its real and imaginary parts, emitting only the rows that are not identically
zero.  ``Tr(embed(A) embed(B)) = 2 Tr(A B)`` for Hermitian A, B, so embedded
coefficient matrices carry a factor 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionError, MalformedProblem

PIVOT_TOL = 1e-10  # presolve rank / consistency tolerance
_SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# Symmetric vectorization


@lru_cache(maxsize=None)
def svec_indices(dim: int):
    """Upper-triangle (row, col) index arrays and the sqrt(2) scale vector."""
    rows, cols = np.triu_indices(dim)
    scale = np.where(rows == cols, 1.0, _SQRT2)
    return rows, cols, scale


def svec_len(dim: int) -> int:
    return dim * (dim + 1) // 2


def svec(m: np.ndarray) -> np.ndarray:
    d = m.shape[0]
    rows, cols, scale = svec_indices(d)
    return m[rows, cols] * scale


def smat(v: np.ndarray, dim: int) -> np.ndarray:
    rows, cols, scale = svec_indices(dim)
    m = np.zeros((dim, dim))
    m[rows, cols] = v / scale
    m[cols, rows] = m[rows, cols]
    return m


def svec_batch(t: np.ndarray) -> np.ndarray:
    """svec of a stack of symmetric matrices, shape (k, d, d) -> (k, d(d+1)/2)."""
    d = t.shape[-1]
    rows, cols, scale = svec_indices(d)
    return t[:, rows, cols] * scale


def smat_batch(v: np.ndarray, dim: int) -> np.ndarray:
    rows, cols, scale = svec_indices(dim)
    t = np.zeros((v.shape[0], dim, dim))
    t[:, rows, cols] = v / scale
    t[:, cols, rows] = t[:, rows, cols]
    return t


# ---------------------------------------------------------------------------
# Problem container


@dataclass(frozen=True)
class BlockInfo:
    name: str
    kind: str  # "hpsd" | "psd" | "nonneg" | "free"
    dim: int  # complex dim for hpsd, matrix dim for psd, count otherwise
    offset: int  # first scalarized column
    ncols: int

    @property
    def embed_dim(self) -> int:
        """Matrix dimension of the PSD cone hosting this block."""
        if self.kind == "hpsd":
            return 2 * self.dim
        if self.kind == "psd":
            return self.dim
        raise DimensionError(f"block {self.name} is not semidefinite")


@dataclass(frozen=True)
class ConicProblem:
    """Scalarized standard-form problem plus block bookkeeping."""

    cones: tuple[tuple[str, int], ...]  # ("psd", d) | ("nonneg", k) | ("free", k)
    a: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    blocks: dict[str, BlockInfo] = field(default_factory=dict)

    @property
    def num_rows(self) -> int:
        return self.a.shape[0]

    @property
    def num_cols(self) -> int:
        return self.a.shape[1]

    def validate(self) -> None:
        if self.a.shape != (self.b.size, self.c.size):
            raise MalformedProblem("A/b/c shapes disagree")
        total = sum(svec_len(d) if kind == "psd" else d for kind, d in self.cones)
        if total != self.c.size:
            raise MalformedProblem("cone sizes do not cover the variable vector")
        for arr in (self.a.data, self.b, self.c):
            if arr.size and not np.all(np.isfinite(arr)):
                raise MalformedProblem("problem data contains NaN/Inf")


# ---------------------------------------------------------------------------
# Builder


class _MatTerm:
    """Coefficient matrix paired with a semidefinite block."""

    __slots__ = ("block", "coef")

    def __init__(self, block: BlockInfo, coef: np.ndarray):
        self.block = block
        self.coef = coef


class _VarRef:
    """Single scalar variable inside a nonneg or free block."""

    __slots__ = ("block", "index")

    def __init__(self, block: BlockInfo, index: int = 0):
        self.block = block
        self.index = index

    @property
    def column(self) -> int:
        return self.block.offset + self.index


class BlockHandle:
    def __init__(self, info: BlockInfo):
        self.info = info

    def coeff(self, c) -> _MatTerm:
        """Functional ``Tr(c @ X)`` on this block's matrix variable."""
        m = np.asarray(c, dtype=complex)
        if m.shape != (self.info.dim, self.info.dim):
            raise DimensionError(
                f"coefficient shape {m.shape} does not match block "
                f"{self.info.name} of dim {self.info.dim}"
            )
        return _MatTerm(self.info, m)

    def entry(self, i: int, j: int) -> _MatTerm:
        """Functional selecting the complex entry ``X[i, j]``."""
        m = np.zeros((self.info.dim, self.info.dim), dtype=complex)
        m[j, i] = 1.0  # Tr(e_j e_i' X) = X[i, j]
        return _MatTerm(self.info, m)


class ConicProblemBuilder:
    """Accumulates blocks and complex equality rows, then scalarizes."""

    def __init__(self):
        self._blocks: dict[str, BlockInfo] = {}
        self._order: list[BlockInfo] = []
        self._ncols = 0
        self._rows: list[tuple[dict[int, float], float]] = []

    # -- block declaration

    def _register(self, name: str, kind: str, dim: int, ncols: int) -> BlockInfo:
        if name in self._blocks:
            raise ValueError(f"duplicate block name {name!r}")
        info = BlockInfo(name=name, kind=kind, dim=dim, offset=self._ncols, ncols=ncols)
        self._blocks[name] = info
        self._order.append(info)
        self._ncols += ncols
        return info

    def hermitian_psd_block(self, name: str, dim: int) -> BlockHandle:
        if dim < 1:
            raise DimensionError("block dimension must be >= 1")
        return BlockHandle(self._register(name, "hpsd", dim, svec_len(2 * dim)))

    def psd_block(self, name: str, dim: int) -> BlockHandle:
        if dim < 1:
            raise DimensionError("block dimension must be >= 1")
        return BlockHandle(self._register(name, "psd", dim, svec_len(dim)))

    def nonneg_var(self, name: str) -> _VarRef:
        return _VarRef(self._register(name, "nonneg", 1, 1))

    def free_var(self, name: str) -> _VarRef:
        return _VarRef(self._register(name, "free", 1, 1))

    # -- row assembly

    @staticmethod
    def _herm_part(c: np.ndarray) -> np.ndarray:
        return (c + c.conj().T) / 2.0

    def _functional_cols(self, block: BlockInfo, herm: np.ndarray) -> dict[int, float]:
        """Scalarized coefficients of Tr(herm @ X) over the block's columns."""
        out: dict[int, float] = {}
        if block.kind == "hpsd":
            re, im = herm.real, herm.imag
            emb = np.block([[re, -im], [im, re]]) / 2.0
            vec = svec(emb)
        else:
            if np.max(np.abs(herm.imag)) > 0.0:
                raise DimensionError(
                    f"complex coefficient on real symmetric block {block.name}"
                )
            vec = svec((herm.real + herm.real.T) / 2.0)
        nz = np.nonzero(vec)[0]
        for idx in nz:
            out[block.offset + int(idx)] = float(vec[idx])
        return out

    def add_row(self, terms, rhs) -> None:
        """Add the complex equality ``sum(scale * term) = rhs``.

        Matrix terms contribute ``scale * Tr(C X)``; variable refs contribute
        ``scale * x``.  The row splits into a real and (when present) an
        imaginary part.
        """
        mats: dict[str, np.ndarray] = {}
        scalars: dict[int, complex] = {}
        for term, scale in terms:
            s = complex(scale)
            if isinstance(term, _MatTerm):
                acc = mats.setdefault(
                    term.block.name,
                    np.zeros((term.block.dim, term.block.dim), dtype=complex),
                )
                acc += s * term.coef
            elif isinstance(term, _VarRef):
                scalars[term.column] = scalars.get(term.column, 0.0) + s
            else:
                raise TypeError(f"unsupported row term {term!r}")

        rhs = complex(rhs)
        for part in ("re", "im"):
            cols: dict[int, float] = {}
            for name, c in mats.items():
                block = self._blocks[name]
                cc = c if part == "re" else -1j * c
                herm = self._herm_part(cc)
                if np.max(np.abs(herm)) == 0.0:
                    continue
                for col, val in self._functional_cols(block, herm).items():
                    cols[col] = cols.get(col, 0.0) + val
            for col, coef in scalars.items():
                val = coef.real if part == "re" else coef.imag
                if val != 0.0:
                    cols[col] = cols.get(col, 0.0) + val
            target = rhs.real if part == "re" else rhs.imag
            if cols or target != 0.0:
                self._rows.append((cols, float(target)))

    # -- finalization

    def build(self, objective=None) -> ConicProblem:
        """Scalarize into a ConicProblem; ``objective`` is a list of
        ``(term, scale)`` pairs with a real total (or None for zero)."""
        c = np.zeros(self._ncols)
        if objective:
            mats: dict[str, np.ndarray] = {}
            for term, scale in objective:
                if isinstance(term, _MatTerm):
                    acc = mats.setdefault(
                        term.block.name,
                        np.zeros((term.block.dim, term.block.dim), dtype=complex),
                    )
                    acc += float(scale) * term.coef
                elif isinstance(term, _VarRef):
                    c[term.column] += float(scale)
                else:
                    raise TypeError(f"unsupported objective term {term!r}")
            for name, cm in mats.items():
                block = self._blocks[name]
                herm = self._herm_part(cm)
                skew = np.max(np.abs(cm - herm))
                if skew > 1e-12 * (np.max(np.abs(cm)) + 1.0):
                    raise MalformedProblem("objective functional must be real-valued")
                for col, val in self._functional_cols(block, herm).items():
                    c[col] += val

        m = len(self._rows)
        data, indices, indptr = [], [], [0]
        b = np.zeros(m)
        for i, (cols, rhs) in enumerate(self._rows):
            for col in sorted(cols):
                indices.append(col)
                data.append(cols[col])
            indptr.append(len(indices))
            b[i] = rhs
        a = sp.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(m, self._ncols),
        )
        cones = tuple(
            ("psd", blk.embed_dim) if blk.kind in ("hpsd", "psd") else (blk.kind, blk.dim)
            for blk in self._order
        )
        problem = ConicProblem(cones=cones, a=a, b=b, c=c, blocks=dict(self._blocks))
        problem.validate()
        return problem

    # -- solution extraction

    def _block_matrix(self, x: np.ndarray, name: str) -> np.ndarray:
        blk = self._blocks[name]
        seg = x[blk.offset : blk.offset + blk.ncols]
        return smat(seg, blk.embed_dim)

    def extract_hermitian(self, x: np.ndarray, name: str) -> np.ndarray:
        """Recover the complex Hermitian matrix from an embedded PSD block."""
        blk = self._blocks[name]
        if blk.kind != "hpsd":
            raise DimensionError(f"block {name} is not a Hermitian block")
        y = self._block_matrix(x, name)
        d = blk.dim
        re = (y[:d, :d] + y[d:, d:]) / 2.0
        im = (y[d:, :d] - y[:d, d:]) / 2.0
        herm = re + 1j * im
        return (herm + herm.conj().T) / 2.0

    def extract_symmetric(self, x: np.ndarray, name: str) -> np.ndarray:
        blk = self._blocks[name]
        if blk.kind != "psd":
            raise DimensionError(f"block {name} is not a real PSD block")
        return self._block_matrix(x, name)

    def value_of(self, x: np.ndarray, ref: _VarRef) -> float:
        return float(x[ref.column])


# ---------------------------------------------------------------------------
# Presolve and diagnostics


@dataclass(frozen=True)
class PresolveInfo:
    kept_rows: np.ndarray  # indices into the original rows
    dropped_rows: np.ndarray
    fixed_cols: tuple[tuple[int, float], ...]  # (original column, pinned value)
    infeasible_row: int | None = None


def _rank_select(a_dense: np.ndarray, b: np.ndarray):
    """Pick a maximal independent row subset; flag inconsistent dropped rows."""
    m = a_dense.shape[0]
    if m == 0:
        return np.arange(0), np.arange(0), None
    _, r, piv = scipy.linalg.qr(a_dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    ref = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > PIVOT_TOL * max(ref, 1.0)))
    kept = np.sort(piv[:rank])
    dropped = np.sort(piv[rank:])
    bad_row = None
    if dropped.size:
        coef, *_ = np.linalg.lstsq(a_dense[kept].T, a_dense[dropped].T, rcond=None)
        recon_b = coef.T @ b[kept]
        mism = np.abs(recon_b - b[dropped])
        scale = 1.0 + np.max(np.abs(b)) if b.size else 1.0
        bad = np.nonzero(mism > 1e-8 * scale)[0]
        if bad.size:
            bad_row = int(dropped[bad[0]])
    return kept, dropped, bad_row


def presolve(problem: ConicProblem, rank_reduce: bool | None = None):
    """Light presolve: validation, fixed free variables, redundant rows.

    Rank elimination costs a dense QR of A', so by default it only runs on
    problems small enough for that to be negligible; the regularized KKT
    system tolerates redundant rows either way.
    """
    problem.validate()
    a = problem.a.tocsc()
    b = problem.b.copy()
    c = problem.c.copy()

    free_cols = set()
    col = 0
    for kind, d in problem.cones:
        width = svec_len(d) if kind == "psd" else d
        if kind == "free":
            free_cols.update(range(col, col + width))
        col += width

    # Substitute free variables pinned by single-entry rows.
    fixed: list[tuple[int, float]] = []
    a_lil = a.tolil()
    row_alive = np.ones(problem.num_rows, dtype=bool)
    changed = True
    while changed:
        changed = False
        for i in range(problem.num_rows):
            if not row_alive[i]:
                continue
            cols = a_lil.rows[i]
            vals = a_lil.data[i]
            live = [(j, v) for j, v in zip(cols, vals) if v != 0.0]
            if len(live) == 1 and live[0][0] in free_cols:
                j, v = live[0]
                val = b[i] / v
                fixed.append((j, val))
                free_cols.discard(j)
                col_vec = a_lil[:, j].toarray().ravel()
                b -= col_vec * val
                for r in np.nonzero(col_vec)[0]:
                    a_lil[r, j] = 0.0
                row_alive[i] = False
                changed = True

    if rank_reduce is None:
        rank_reduce = 2 * problem.num_cols * problem.num_rows**2 <= 2e8

    a_work = a_lil.tocsr()
    alive_idx = np.nonzero(row_alive)[0]
    if rank_reduce and alive_idx.size:
        dense = a_work[alive_idx].toarray()
        kept_rel, dropped_rel, bad_rel = _rank_select(dense, b[alive_idx])
        kept = alive_idx[kept_rel]
        dropped = alive_idx[dropped_rel]
        bad_row = int(alive_idx[bad_rel]) if bad_rel is not None else None
    else:
        kept = alive_idx
        dropped = np.arange(0)
        bad_row = None

    # Drop fixed columns; adjust cone structure (free blocks shrink).
    fixed_cols = sorted(j for j, _ in fixed)
    keep_cols = np.setdiff1d(np.arange(problem.num_cols), fixed_cols)
    new_cones = []
    col = 0
    for kind, d in problem.cones:
        width = svec_len(d) if kind == "psd" else d
        if kind == "free":
            remaining = sum(1 for j in range(col, col + width) if j not in fixed_cols)
            if remaining:
                new_cones.append((kind, remaining))
        else:
            new_cones.append((kind, d))
        col += width

    reduced = ConicProblem(
        cones=tuple(new_cones),
        a=a_work[kept][:, keep_cols].tocsr(),
        b=b[kept],
        c=c[keep_cols],
        blocks=problem.blocks,
    )
    info = PresolveInfo(
        kept_rows=kept,
        dropped_rows=dropped,
        fixed_cols=tuple(fixed),
        infeasible_row=bad_row,
    )
    return reduced, info


def restore_solution(problem: ConicProblem, info: PresolveInfo, x_red, y_red):
    """Map a reduced-problem solution back to original coordinates."""
    x = np.zeros(problem.num_cols)
    fixed_cols = {j: v for j, v in info.fixed_cols}
    keep_cols = [j for j in range(problem.num_cols) if j not in fixed_cols]
    x[keep_cols] = x_red
    for j, v in fixed_cols.items():
        x[j] = v
    y = np.zeros(problem.num_rows)
    y[info.kept_rows] = y_red
    return x, y


def assemble_check(problem: ConicProblem) -> dict:
    """Diagnostics: sizes, nnz, row rank, redundancy.  Raises on NaN/Inf."""
    problem.validate()
    dense = problem.a.toarray()
    kept, dropped, bad = _rank_select(dense, problem.b) if problem.num_rows else (
        np.arange(0),
        np.arange(0),
        None,
    )
    return {
        "rows": problem.num_rows,
        "cols": problem.num_cols,
        "nnz": int(problem.a.nnz),
        "cones": list(problem.cones),
        "row_rank": int(kept.size),
        "redundant_rows": [int(i) for i in dropped],
        "inconsistent_row": bad,
    }


# ---------------------------------------------------------------------------
# Text dump format ("conic v1") for cross-implementation debugging


def dump_problem(problem: ConicProblem, path) -> None:
    lines = ["conic v1", f"cones {len(problem.cones)}"]
    for kind, d in problem.cones:
        lines.append(f"{kind} {d}")
    nz = np.nonzero(problem.c)[0]
    lines.append(f"objective {problem.num_cols} {nz.size}")
    for j in nz:
        lines.append(f"{j} {problem.c[j]!r}")
    lines.append(f"rows {problem.num_rows}")
    acsr = problem.a.tocsr()
    for i in range(problem.num_rows):
        sl = slice(acsr.indptr[i], acsr.indptr[i + 1])
        cols = acsr.indices[sl]
        vals = acsr.data[sl]
        lines.append(f"row {cols.size} {problem.b[i]!r}")
        for j, v in zip(cols, vals):
            lines.append(f"{j} {v!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> ConicProblem:
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    it = iter(t for t in tokens if t.strip())
    if next(it) != "conic v1":
        raise MalformedProblem("bad header; expected 'conic v1'")
    ncones = int(next(it).split()[1])
    cones = []
    for _ in range(ncones):
        kind, d = next(it).split()
        cones.append((kind, int(d)))
    _, ncols_s, nnz_s = next(it).split()
    ncols = int(ncols_s)
    c = np.zeros(ncols)
    for _ in range(int(nnz_s)):
        j, v = next(it).split()
        c[int(j)] = float(v)
    nrows = int(next(it).split()[1])
    b = np.zeros(nrows)
    data, indices, indptr = [], [], [0]
    for i in range(nrows):
        _, nnz_row, bval = next(it).split()
        b[i] = float(bval)
        for _ in range(int(nnz_row)):
            j, v = next(it).split()
            indices.append(int(j))
            data.append(float(v))
        indptr.append(len(indices))
    a = sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(nrows, ncols),
    )
    problem = ConicProblem(cones=tuple(cones), a=a, b=b, c=c)
    problem.validate()
    return problem
