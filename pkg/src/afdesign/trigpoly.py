"""Causal trigonometric polynomials and bounded-modulus certificates on a band.

A causal polynomial ``H(f) = sum_n h[n] exp(-2j*pi*f*n)`` is bounded by
``gamma`` on the symmetric band ``|f| <= f_r`` iff a pair of PSD Gram
matrices (Q, P) reproduces the constant polynomial ``gamma**2`` through the
elementary-Toeplitz / Phi trace parametrization.  This module builds those
constraint templates, certifies bounds through the conic solver, and provides
an independent numerical supremum oracle used to validate the certificates.

Frequencies are normalized cycles per sample, ``f in [-1/2, 1/2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conic import ConicProblemBuilder
from .errors import DomainError, SolverStall
from .linalg import elementary_toeplitz, trace_inner
from .solver import Status, solve

GOLDEN_BRACKET_WIDTH = 1e-13


@dataclass(frozen=True)
class SegmentWeights:
    """Coefficients of the degree-one polynomial gating the band.

    ``indicator(f) = d0 + 2*Re(d1*exp(-2j*pi*f))`` is >= 0 exactly on
    ``|f| <= f_r`` and < 0 on the rest of [-1/2, 1/2], vanishing at the band
    edges.  For a band symmetric about zero, ``d1`` is purely real; a complex
    ``d1`` would shift the indicator's zeros off +/- f_r.
    """

    f_r: float
    d0: float
    d1: float


def segment_weights(f_r: float) -> SegmentWeights:
    """Segment weights for the symmetric band ``[-f_r, f_r]``."""
    if not 0.0 < f_r < 0.5:
        raise DomainError(f"band half-width must lie in (0, 1/2), got {f_r}")
    t = math.tan(math.pi * f_r)
    d0 = (t * t - 1.0) / 2.0
    d1 = (1.0 + t * t) / 4.0
    return SegmentWeights(f_r=f_r, d0=d0, d1=d1)


def segment_indicator(w: SegmentWeights, f) -> np.ndarray:
    """Evaluate the band-gating polynomial at frequencies ``f``."""
    fa = np.asarray(f, dtype=float)
    return w.d0 + 2.0 * np.real(w.d1 * np.exp(-2j * np.pi * fa))


def phi_matrix(dim: int, offset: int, w: SegmentWeights) -> np.ndarray:
    """Phi selector pairing P with the coefficient at the given offset.

    Realizes ``d0*T(n) + conj(d1)*T(n+1) + d1*T(n-1)`` with elementary
    Toeplitz selectors of the given dimension.
    """
    d1 = complex(w.d1)
    out = w.d0 * elementary_toeplitz(dim, offset).astype(complex)
    out += np.conj(d1) * elementary_toeplitz(dim, offset + 1)
    out += d1 * elementary_toeplitz(dim, offset - 1)
    return out


def build_segment_lmi(degree: int, w: SegmentWeights):
    """Constraint templates (n, Theta_{K+1}^{(n)}, Phi_K^{(n)}) for n = 0..K.

    Pairing each template with PSD variables (Q of size K+1, P of size K)
    yields the per-coefficient equalities of the bounded-modulus certificate.
    """
    if degree < 1:
        raise DomainError("polynomial degree must be >= 1")
    return [
        (n, elementary_toeplitz(degree + 1, n), phi_matrix(degree, n, w))
        for n in range(degree + 1)
    ]


def trig_eval(h, f) -> np.ndarray:
    """Evaluate ``H(f) = sum_n h[n] exp(-2j*pi*f*n)`` (vectorized in f)."""
    coeffs = np.asarray(h, dtype=complex)
    fa = np.atleast_1d(np.asarray(f, dtype=float))
    z = np.exp(-2j * np.pi * fa)
    # Horner on z; coefficient order h[K]..h[0]
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _golden_max(fun, a: float, b: float, width: float) -> tuple[float, float]:
    """Golden-section maximization of ``fun`` on [a, b] to bracket ``width``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    h = b - a
    if h <= width:
        mid = 0.5 * (a + b)
        return mid, fun(mid)
    c = a + invphi2 * h
    d = a + invphi * h
    yc = fun(c)
    yd = fun(d)
    n = int(math.ceil(math.log(width / h) / math.log(invphi)))
    for _ in range(n):
        if yc > yd:
            b, d, yd = d, c, yc
            h *= invphi
            c = a + invphi2 * h
            yc = fun(c)
        else:
            a, c, yc = c, d, yd
            h *= invphi
            d = a + invphi * h
            yd = fun(d)
    if yc > yd:
        return c, yc
    return d, yd


def sup_modulus_on_band(h, f_r: float) -> tuple[float, float]:
    """Global maximizer and maximum of ``|H(f)|`` over ``[-f_r, f_r]``.

    Dense scan at ``max(4096, 64*(K+1))`` equispaced points (endpoints
    included) followed by golden-section refinement of the winning bracket
    down to width 1e-13.
    """
    coeffs = np.asarray(h, dtype=complex)
    if coeffs.ndim != 1 or coeffs.size < 1:
        raise DomainError("coefficient vector must be 1-D and nonempty")
    if not 0.0 < f_r <= 0.5:
        raise DomainError(f"band half-width must lie in (0, 1/2], got {f_r}")
    if coeffs.size == 1:
        return 0.0, float(abs(coeffs[0]))

    npts = max(4096, 64 * coeffs.size)
    grid = np.linspace(-f_r, f_r, npts)
    mags = np.abs(trig_eval(coeffs, grid))
    k = int(np.argmax(mags))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, npts - 1)]

    def g(f: float) -> float:
        return float(abs(trig_eval(coeffs, f)[0]))

    f_star, val = _golden_max(g, float(lo), float(hi), GOLDEN_BRACKET_WIDTH)
    # The scanned sample stays authoritative if refinement cannot beat it.
    if mags[k] > val:
        f_star, val = float(grid[k]), float(mags[k])
    return f_star, val


@dataclass(frozen=True)
class SegmentBoundCertificate:
    """PSD witness that ``|H(f)| <= gamma`` on the band."""

    gamma: float
    f_r: float
    h: np.ndarray
    q: np.ndarray
    p: np.ndarray

    def residuals(self) -> dict:
        """Trace-equality residual and smallest bordered-block eigenvalue."""
        k = self.h.size - 1
        w = segment_weights(self.f_r)
        worst = 0.0
        for n in range(k + 1):
            target = self.gamma**2 if n == 0 else 0.0
            val = trace_inner(elementary_toeplitz(k + 1, n), self.q)
            if self.p.size:
                val += trace_inner(phi_matrix(k, n, w), self.p)
            worst = max(worst, abs(val - target))
        border = np.zeros((k + 2, k + 2), dtype=complex)
        border[: k + 1, : k + 1] = self.q
        border[: k + 1, k + 1] = self.h
        border[k + 1, : k + 1] = self.h.conj()
        border[k + 1, k + 1] = 1.0
        min_eig = float(np.linalg.eigvalsh(border)[0])
        return {"trace_residual": worst, "border_min_eig": min_eig}


@dataclass(frozen=True)
class Feasible:
    certificate: SegmentBoundCertificate


@dataclass(frozen=True)
class Infeasible:
    pass


def certify_bound(h, gamma: float, f_r: float):
    """Decide ``|H(f)| <= gamma`` on ``[-f_r, f_r]`` by a feasibility SDP.

    Returns :class:`Feasible` carrying the (Q, P) witness, or
    :class:`Infeasible` when the solver produces an infeasibility
    certificate.  Raises :class:`SolverStall` when it produces neither.
    """
    coeffs = np.asarray(h, dtype=complex)
    if gamma < 0:
        raise DomainError("bound gamma must be >= 0")
    w = segment_weights(f_r)
    k = coeffs.size - 1

    builder = ConicProblemBuilder()
    border = builder.hermitian_psd_block("border", k + 2)
    p_blk = builder.hermitian_psd_block("p", k) if k >= 1 else None

    # Border block layout: [[Q, h], [h^H, 1]] with h pinned to the data.
    for m in range(k + 1):
        builder.add_row([(border.entry(m, k + 1), 1.0)], complex(coeffs[m]))
    builder.add_row([(border.entry(k + 1, k + 1), 1.0)], 1.0)

    for n in range(k + 1):
        theta = elementary_toeplitz(k + 2, n)
        theta[:, k + 1] = 0.0
        theta[k + 1, :] = 0.0
        terms = [(border.coeff(theta), 1.0)]
        if p_blk is not None:
            terms.append((p_blk.coeff(phi_matrix(k, n, w)), 1.0))
        builder.add_row(terms, gamma**2 if n == 0 else 0.0)

    problem = builder.build(objective={})
    outcome = solve(problem)
    if outcome.status == Status.OPTIMAL:
        bmat = builder.extract_hermitian(outcome.x, "border")
        cert = SegmentBoundCertificate(
            gamma=float(gamma),
            f_r=float(f_r),
            h=coeffs.copy(),
            q=bmat[: k + 1, : k + 1],
            p=(
                builder.extract_hermitian(outcome.x, "p")
                if p_blk is not None
                else np.zeros((0, 0), dtype=complex)
            ),
        )
        return Feasible(cert)
    if outcome.status == Status.PRIMAL_INFEASIBLE:
        return Infeasible()
    raise SolverStall(f"bound certification stalled (status {outcome.status})")
