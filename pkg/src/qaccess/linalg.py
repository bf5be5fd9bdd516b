"""Dense complex linear algebra for small Hermitian problems.

The eigensolver is a cyclic complex Jacobi method. It is slower than LAPACK
but deterministic, accurate to roughly machine precision on the matrices this
package produces (n <= ~64), and easy to audit. Everything else in this module
(PSD verdicts, square roots, Gram factorizations, singular values) is built on
top of :func:`hermitian_eig`.

Matrices are plain ``numpy.ndarray`` objects; nothing here mutates its inputs.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from qaccess.config import get_tolerances
from qaccess.errors import (
    NoConvergence,
    NonSquare,
    NotHermitian,
    NotOrthonormal,
    NotPsd,
    ShapeMismatch,
    TooManyColumns,
)

MAX_SWEEPS = 100
OFFDIAG_REL_THRESHOLD = 1e-12
# eigenvector entries are rounded to this many decimals for tie-breaking
_ORDER_DECIMALS = 9


@dataclasses.dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclasses.dataclass(frozen=True)
class PsdVerdict:
    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float

    def __bool__(self) -> bool:
        return self.is_psd


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _check_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")


def _check_hermitian(a: np.ndarray) -> None:
    asym = max_abs(a - a.conj().T)
    if asym > get_tolerances().hermitian * max(1.0, max_abs(a)):
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds tolerance")


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conjugate(m).T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Make each column's first significant entry real and positive."""
    out = v.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-8)
        if idx.size:
            ph = col[idx[0]] / abs(col[idx[0]])
            out[:, j] = col / ph
    return out


def _offdiag_norm(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.linalg.norm(a[mask]))


def _jacobi_sweeps(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    target = OFFDIAG_REL_THRESHOLD * scale
    tiny = 1e-300
    polished = False
    for _ in range(MAX_SWEEPS):
        off = _offdiag_norm(a)
        if off <= target:
            # one extra sweep is nearly free once converged (quadratic rate)
            if polished or off <= 1e-3 * target:
                return a, v
            polished = True
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= tiny:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ph = np.conj(b) / mag
                # R = diag(1, e^{-i psi}) @ [[c, s], [-s, c]]
                r = np.array([[c, s], [-s * ph, c * ph]], dtype=complex)
                cols = a[:, [p, q]] @ r
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = r.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vc = v[:, [p, q]] @ r
                v[:, p], v[:, q] = vc[:, 0], vc[:, 1]
    off = _offdiag_norm(a)
    if off <= target:
        return a, v
    raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps (off-norm {off:.3e})")


def hermitian_eig(m) -> EigResult:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending. Eigenpairs with (numerically) equal
    eigenvalues are ordered lexicographically by their rounded entries, and
    each eigenvector's first significant entry is made real positive, so the
    output is reproducible bit-for-bit for identical input.
    """
    a = as_matrix(m)
    _check_square(a)
    _check_hermitian(a)
    n = a.shape[0]
    if n == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0), dtype=complex))
    d, v = _jacobi_sweeps(hermitian_part(a))
    w = np.real(np.diag(d)).copy()
    v = _fix_phase(v)
    scale = max(1.0, max_abs(a))

    def key(j: int):
        col = np.round(v[:, j] * 10**_ORDER_DECIMALS) / 10**_ORDER_DECIMALS
        parts = tuple(-x for z in col for x in (float(z.real), float(z.imag)))
        return (round(w[j] / scale, _ORDER_DECIMALS),) + parts

    order = sorted(range(n), key=key)
    return EigResult(w[order], v[:, order])


def is_psd(m, tol: float | None = None) -> PsdVerdict:
    a = as_matrix(m)
    _check_square(a)
    if tol is None:
        tol = get_tolerances().psd_tol(max_abs(a))
    if a.shape[0] == 0:
        return PsdVerdict(True, 0.0, tol)
    lam = float(hermitian_eig(a).eigenvalues[0])
    return PsdVerdict(lam >= -tol, lam, tol)


def hadamard(m1, m2) -> np.ndarray:
    a, b = np.asarray(m1), np.asarray(m2)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    return a * b


def _clipped_spectrum(a: np.ndarray) -> EigResult:
    eig = hermitian_eig(a)
    tol = get_tolerances().psd_tol(max_abs(a))
    if eig.eigenvalues.size and eig.eigenvalues[0] < -tol:
        raise NotPsd(f"eigenvalue {eig.eigenvalues[0]:.3e} below -{tol:.1e}")
    return EigResult(np.clip(eig.eigenvalues, 0.0, None), eig.vectors)


def _noise_floor(lam: np.ndarray) -> np.ndarray:
    # eigenvalues at roundoff level would turn into ~1e-8 after a square root
    if lam.size == 0:
        return lam
    floor = lam.size * np.finfo(float).eps * float(np.max(np.abs(lam)))
    return np.where(lam <= floor, 0.0, lam)


def matrix_sqrt_psd(m) -> np.ndarray:
    """Principal square root of a PSD matrix (tiny negative eigenvalues clipped)."""
    eig = _clipped_spectrum(as_matrix(m))
    v = eig.vectors
    r = (v * np.sqrt(_noise_floor(eig.eigenvalues))) @ v.conj().T
    return hermitian_part(r)


def factor_gram(g) -> np.ndarray:
    """Vectors realizing a Gram matrix.

    Returns a ``rank x n`` matrix ``W`` whose columns ``w_i`` satisfy
    ``<w_i|w_j> = G_ij``, i.e. ``W^dagger W = G``. Eigenvalues under the
    relative rank cutoff are dropped. A zero Gram matrix gives ``0 x n``.
    """
    a = as_matrix(g)
    _check_square(a)
    eig = _clipped_spectrum(a)
    cutoff = get_tolerances().rank_tol(max_abs(a))
    keep = eig.eigenvalues > cutoff
    lam = eig.eigenvalues[keep][::-1]
    vec = eig.vectors[:, keep][:, ::-1]
    return np.sqrt(lam)[:, None] * vec.conj().T


def singular_values(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.size == 0:
        return np.zeros(min(a.shape))
    g = hermitian_part(a.conj().T @ a)
    lam = _noise_floor(np.clip(hermitian_eig(g).eigenvalues, 0.0, None))
    return np.sqrt(lam)[::-1]


def _gram_schmidt_step(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # two passes keep the result orthogonal to ~1e-16
    for _ in range(2):
        if q.shape[1]:
            v = v - q @ (q.conj().T @ v)
    return v


def orthonormal_basis(vectors, drop_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the span of the columns, by pivoted Gram-Schmidt.

    At each step the remaining candidate with the largest residual norm is
    taken (first index on ties); candidates whose residual falls below
    ``drop_tol`` times the largest input norm are dropped.
    """
    a = np.asarray(vectors, dtype=complex)
    dim = a.shape[0]
    q = np.zeros((dim, 0), dtype=complex)
    scale = max(1.0, float(np.max(np.linalg.norm(a, axis=0)))) if a.size else 1.0
    remaining = list(range(a.shape[1]))
    while remaining and q.shape[1] < dim:
        res = [_gram_schmidt_step(q, a[:, j]) for j in remaining]
        norms = [float(np.linalg.norm(r)) for r in res]
        best = int(np.argmax(norms))
        if norms[best] <= drop_tol * scale:
            break
        q = np.column_stack([q, res[best] / norms[best]])
        remaining.pop(best)
    return q


def _lowdin(c: np.ndarray) -> np.ndarray:
    """Closest matrix with exactly orthonormal columns."""
    g = hermitian_part(c.conj().T @ c)
    eig = hermitian_eig(g)
    inv_sqrt = (eig.vectors / np.sqrt(eig.eigenvalues)) @ eig.vectors.conj().T
    return c @ inv_sqrt


def complete_to_unitary(partial_columns, dim: int) -> np.ndarray:
    """Extend orthonormal columns to a ``dim x dim`` unitary.

    The supplied columns (tolerance 1e-8) become the leading columns after a
    symmetric re-orthonormalization that moves them by at most that
    tolerance. The rest come from pivoted Gram-Schmidt over the canonical
    basis, so the completion is deterministic.
    """
    cols = np.asarray(partial_columns, dtype=complex)
    if cols.ndim == 1:
        cols = cols[:, None]
    if cols.size == 0:
        cols = np.zeros((dim, 0), dtype=complex)
    if cols.ndim != 2 or cols.shape[0] != dim:
        raise ShapeMismatch(f"columns must have length {dim}")
    k = cols.shape[1]
    if k > dim:
        raise TooManyColumns(f"{k} columns do not fit in dimension {dim}")
    if k:
        defect = max_abs(cols.conj().T @ cols - np.eye(k))
        if defect > 1e-8:
            raise NotOrthonormal(f"columns deviate from orthonormality by {defect:.3e}")
        cols = _lowdin(cols)
    q = cols
    candidates = list(range(dim))
    while q.shape[1] < dim:
        res = [_gram_schmidt_step(q, np.eye(dim, dtype=complex)[:, j]) for j in candidates]
        norms = [float(np.linalg.norm(r)) for r in res]
        best = int(np.argmax(norms))
        if norms[best] <= 1e-10:
            raise NotOrthonormal("could not complete the basis")
        q = np.column_stack([q, res[best] / norms[best]])
        candidates.pop(best)
    return q


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for f in factors:
        out = np.kron(out, f)
    return out
