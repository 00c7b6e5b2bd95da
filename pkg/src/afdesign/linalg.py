"""Dense complex-vector and Hermitian-matrix kernel.

Conventions used throughout the package:

* sequences are 1-D complex ``ndarray``s; a sequence is *unimodular* when
  every entry has modulus 1 within ``UNIMODULAR_TOL``;
* Hermitian matrices are square complex ``ndarray``s whose upper triangle
  is authoritative -- ``hermitian_from_upper`` derives the lower triangle so
  no asymmetry can drift in;
* all functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidMatrix

UNIMODULAR_TOL = 1e-9

# Eigensolver knobs: cyclic Jacobi sweeps stop once the off-diagonal
# Frobenius mass falls under OFFDIAG_TOL relative to the matrix scale.
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 60


def as_sequence(x) -> np.ndarray:
    """Coerce to a 1-D complex array of length >= 1."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"expected a nonempty 1-D sequence, got shape {arr.shape}")
    return arr


def is_unimodular(x, tol: float = UNIMODULAR_TOL) -> bool:
    arr = as_sequence(x)
    return bool(np.max(np.abs(np.abs(arr) - 1.0)) <= tol)


def hermitian_from_upper(a) -> np.ndarray:
    """Build a Hermitian matrix from the upper triangle of ``a``.

    The strict lower triangle of the input is ignored; diagonal imaginary
    parts are dropped.
    """
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    upper = np.triu(m, 1)
    return upper + upper.conj().T + np.diag(np.diag(m).real)


def check_hermitian(a, tol_scale: float = 1e-10) -> np.ndarray:
    """Validate Hermitian symmetry; returns the exactly symmetrized matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dev = np.linalg.norm(m - m.conj().T)
    if dev > tol_scale * (np.linalg.norm(m) + 1.0):
        raise InvalidMatrix(f"matrix is not Hermitian (asymmetry {dev:.3e})")
    return hermitian_from_upper(m)


def elementary_toeplitz(dim: int, offset: int) -> np.ndarray:
    """0/1 selector matrix with ones on the ``offset``-th superdiagonal.

    Positive offsets sit above the diagonal, negative below; ``|offset| >= dim``
    yields the zero matrix and offset 0 the identity.
    """
    if dim < 1:
        raise DimensionError("dimension must be >= 1")
    m = np.zeros((dim, dim))
    if abs(offset) < dim:
        idx = np.arange(dim - abs(offset))
        if offset >= 0:
            m[idx, idx + offset] = 1.0
        else:
            m[idx - offset, idx] = 1.0
    return m


def trace_inner(a, b) -> complex:
    """Tr(a @ b) without forming the product."""
    am = np.asarray(a, dtype=complex)
    bm = np.asarray(b, dtype=complex)
    if am.shape != bm.shape or am.ndim != 2:
        raise DimensionError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return complex(np.sum(am.T * bm))


def real_embed(a) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.

    The embedding is PSD iff the input is, and carries each eigenvalue with
    doubled multiplicity.
    """
    m = check_hermitian(a)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


@dataclass(frozen=True)
class NotPSD:
    """Signal (not a fault) that a Cholesky pivot failed."""

    pivot: int


def cholesky_psd(a, shift: float = 0.0):
    """Lower-triangular L with ``a + shift*I = L L^H``, or :class:`NotPSD`.

    Returns ``NotPSD(pivot)`` as soon as a pivot is nonpositive, i.e. the
    shifted matrix is not positive definite.
    """
    m = check_hermitian(a)
    if shift < 0:
        raise ValueError("shift must be >= 0")
    n = m.shape[0]
    L = np.zeros((n, n), dtype=complex)
    for j in range(n):
        d = m[j, j].real + shift - np.sum(np.abs(L[j, :j]) ** 2)
        if d <= 0.0:
            return NotPSD(pivot=j)
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            col = m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j].conj()
            L[j + 1 :, j] = col / L[j, j]
    return L


def eig_hermitian(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, U)`` with eigenvalues ``w`` sorted descending and unitary
    ``U`` satisfying ``a = U diag(w) U^H``.  Each eigenvector's
    largest-magnitude entry is rotated to be real and nonnegative so the
    output is deterministic.
    """
    b = check_hermitian(a)
    n = b.shape[0]
    u = np.eye(n, dtype=complex)
    scale = np.linalg.norm(b) + 1.0

    for _ in range(MAX_SWEEPS):
        off = np.linalg.norm(b - np.diag(np.diag(b)))
        if off <= OFFDIAG_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = b[p, q]
                r = abs(apq)
                if r <= OFFDIAG_TOL * scale / n:
                    continue
                phase = apq / r
                # Rotation angle from the phase-reduced real 2x2 subproblem.
                zeta = (b[q, q].real - b[p, p].real) / (2.0 * r)
                t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                gpq = s * phase

                col_p = b[:, p].copy()
                col_q = b[:, q].copy()
                b[:, p] = c * col_p - np.conj(gpq) * col_q
                b[:, q] = gpq * col_p + c * col_q
                row_p = b[p, :].copy()
                row_q = b[q, :].copy()
                b[p, :] = c * row_p - gpq * row_q
                b[q, :] = np.conj(gpq) * row_p + c * row_q
                b[p, q] = 0.0
                b[q, p] = 0.0
                b[p, p] = b[p, p].real
                b[q, q] = b[q, q].real

                ucol_p = u[:, p].copy()
                ucol_q = u[:, q].copy()
                u[:, p] = c * ucol_p - np.conj(gpq) * ucol_q
                u[:, q] = gpq * ucol_p + c * ucol_q

    w = np.diag(b).real.copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    u = u[:, order]

    for j in range(n):
        k = int(np.argmax(np.abs(u[:, j])))
        pivot = u[k, j]
        mag = abs(pivot)
        if mag > 0:
            u[:, j] *= np.conj(pivot) / mag
            u[k, j] = mag  # exact zero imaginary part at the anchor
    return w, u


def principal_eigpair(a) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and its (deterministically phased) eigenvector."""
    w, u = eig_hermitian(a)
    return float(w[0]), u[:, 0].copy()
