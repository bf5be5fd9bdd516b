"""Optimal success probability as a semidefinite program.

With the scaled ancilla Gram ``At = sqrt(Gamma) A sqrt(Gamma)`` the
optimization becomes linear:

    maximize   sum_k p_k At_kk
    subject to X - Y o At >= 0,   At >= 0.

Both constraints are stacked into one block-diagonal linear matrix
inequality ``C - sum_m y_m S_m >= 0`` over the n^2 real variables
(diagonal entries, then real and imaginary parts of the upper triangle),
which is solved by the dense primal-dual interior-point method in
:func:`solve`.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from typing import Sequence

import numpy as np

from qaccess import linalg
from qaccess.certify import (
    AncillaGram,
    Certificate,
    EfficiencyMatrix,
    check_pure_feasible,
    expand_output_gram,
)
from qaccess.config import get_tolerances
from qaccess.errors import DegenerateEta, NumericalBreakdown, ShapeMismatch
from qaccess.states import GramMatrix, PriorDistribution

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 200
STALL_ITERATIONS = 15


class SdpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    #: progress stopped short of gap_tol; the best iterate is returned
    STALLED = "stalled"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclasses.dataclass(frozen=True, eq=False)
class StandardSDP:
    """maximize b.y subject to C - sum_m y_m S_m >= 0.

    ``index`` maps each variable to its role in the scaled ancilla Gram:
    ``("diag", k, k)``, ``("re", k, l)``, ``("im", k, l)`` or ``("t", -1, -1)``
    for the margin variable of a feasibility probe. ``fixed_diagonal`` is set
    for probes, where the diagonal of At is pinned to Gamma. When ``face``
    is set the variables describe a smaller Hermitian matrix G and
    At = face G face^dagger.
    """

    C: np.ndarray
    S: np.ndarray
    b: np.ndarray
    index: tuple[tuple[str, int, int], ...]
    n: int
    fixed_diagonal: np.ndarray | None = None
    face: np.ndarray | None = None

    @property
    def num_variables(self) -> int:
        return self.b.size

    @property
    def size(self) -> int:
        return self.C.shape[0]

    def a_tilde(self, y: np.ndarray) -> np.ndarray:
        """Assemble the scaled ancilla Gram from a variable vector."""
        k = self.n if self.face is None else self.face.shape[1]
        a = self._hermitian(y, k)
        return a if self.face is None else self.face @ a @ self.face.conj().T

    def _hermitian(self, y: np.ndarray, size: int) -> np.ndarray:
        a = np.zeros((size, size), dtype=complex)
        if self.fixed_diagonal is not None:
            a[np.diag_indices(self.n)] = self.fixed_diagonal
        for val, (kind, k, l) in zip(y, self.index):
            if kind == "diag":
                a[k, k] = val
            elif kind == "re":
                a[k, l] += val
                a[l, k] += val
            elif kind == "im":
                a[k, l] += 1j * val
                a[l, k] -= 1j * val
        return a

    def constraint(self, y: np.ndarray) -> np.ndarray:
        return self.C - np.tensordot(y, self.S, axes=1)


@dataclasses.dataclass(frozen=True, eq=False)
class SdpSolution:
    a_tilde: np.ndarray
    objective: float
    status: SdpStatus
    duality_gap: float
    dual_bound: float
    iterations: int
    y: np.ndarray
    constraint_min_eigenvalue: float
    margin: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


def _unit(n: int, k: int, l: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[k, l] = 1.0
    return e


def _block(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    n = upper.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = upper
    out[n:, n:] = lower
    return out


def constraint_matrices(y: np.ndarray, k: int, l: int) -> tuple[np.ndarray, np.ndarray]:
    """The pair (F_kl, G_kl) multiplying Re(At_kl) and Im(At_kl).

    For k == l only F_kk is meaningful; it enters the constraint with a
    factor 1/2.
    """
    n = y.shape[0]
    ekl, elk = _unit(n, k, l), _unit(n, l, k)
    f = _block(y[k, l] * ekl + y[l, k] * elk, -ekl - elk)
    g = 1j * _block(y[k, l] * ekl - y[l, k] * elk, -ekl + elk)
    return f, g


def _gram(g) -> np.ndarray:
    return g.matrix if isinstance(g, GramMatrix) else linalg.as_matrix(g)


def _hermitian_basis(size: int) -> list[tuple[tuple[str, int, int], np.ndarray]]:
    """Basis of size x size Hermitian matrices matching the variable roles."""
    out = [(("diag", k, k), _unit(size, k, k)) for k in range(size)]
    for k in range(size):
        for l in range(k + 1, size):
            ekl, elk = _unit(size, k, l), _unit(size, l, k)
            out += [(("re", k, l), ekl + elk), (("im", k, l), 1j * (ekl - elk))]
    return out


def reduce_to_face(X, Y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Range basis Q of X, the eigenvalues of X on it, and a face basis V.

    If X c = 0 then any feasible At has (Y o At) c = 0, which for PSD At
    means At annihilates M_c = D_c conj(Y) D_c^dagger. Restricting At to
    V G V^dagger, with V spanning the common null space of all M_c, and the
    residual to Q^dagger (.) Q keeps every feasible point while restoring a
    strictly feasible one (small G >= 0). For invertible X both bases are
    the identity.
    """
    x, y = _gram(X), _gram(Y)
    n = x.shape[0]
    lam, vecs = np.linalg.eigh(linalg.hermitian_part(x))
    live = lam > get_tolerances().rank_tol(float(np.max(np.abs(lam), initial=0.0)))
    if np.all(live):
        return np.eye(n, dtype=complex), lam, np.eye(n, dtype=complex)
    kernel = vecs[:, ~live]
    stacked = np.vstack([c[:, None] * y.conj() * c.conj()[None, :] for c in kernel.T])
    _, sv, vh = np.linalg.svd(stacked)
    cut = get_tolerances().rank_tol(float(sv[0]) if sv.size else 0.0)
    rank = int(np.sum(sv > cut))
    return vecs[:, live].astype(complex), lam[live], vh[rank:].conj().T


def encode(X, Y, priors=None) -> StandardSDP:
    """Encode max sum_k p_k At_kk s.t. X - Y o At >= 0, At >= 0.

    ``priors`` has one weight per row of X. For block (mixed-input) Grams
    pass the member-level X~, the blockwise-expanded Y and per-member priors
    (see :func:`encode_mixed_to_pure`). Singular X is handled by
    :func:`reduce_to_face`.
    """
    x, y = _gram(X), _gram(Y)
    if x.shape != y.shape or x.shape[0] != x.shape[1]:
        raise ShapeMismatch(f"X is {x.shape} but Y is {y.shape}")
    n = x.shape[0]
    if priors is None:
        p = np.full(n, 1.0 / n)
    elif isinstance(priors, PriorDistribution):
        p = priors.probabilities
    else:
        p = np.asarray(priors, dtype=float)
    if p.size != n:
        raise ShapeMismatch(f"{p.size} priors for {n} rows")
    q, lam, face = reduce_to_face(x, y)
    if q.shape[1] == n:
        return _encode_full(x, y, p)
    r, k = q.shape[1], face.shape[1]

    def stacked(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
        out = np.zeros((r + k, r + k), dtype=complex)
        out[:r, :r] = upper
        out[r:, r:] = lower
        return out

    c = stacked(np.diag(lam).astype(complex), np.zeros((k, k)))
    mats, b, index = [], [], []
    for role, e in _hermitian_basis(k):
        at = face @ e @ face.conj().T
        mats.append(stacked(q.conj().T @ (y * at) @ q, -e))
        b.append(float(np.real(p @ np.diag(at))))
        index.append(role)
    s_mats = np.array(mats) if mats else np.zeros((0, r + k, r + k), dtype=complex)
    return StandardSDP(c, s_mats, np.array(b, dtype=float), tuple(index), n, face=face)


def _encode_full(x: np.ndarray, y: np.ndarray, p: np.ndarray) -> StandardSDP:
    n = x.shape[0]
    c = _block(linalg.hermitian_part(x), np.zeros((n, n)))
    mats, b, index = [], [], []
    for k in range(n):
        f, _ = constraint_matrices(y, k, k)
        mats.append(0.5 * f)
        b.append(p[k])
        index.append(("diag", k, k))
    for k in range(n):
        for l in range(k + 1, n):
            f, g = constraint_matrices(y, k, l)
            mats += [f, g]
            b += [0.0, 0.0]
            index += [("re", k, l), ("im", k, l)]
    return StandardSDP(c, np.array(mats), np.array(b, dtype=float), tuple(index), n)


def encode_mixed_to_pure(X_tilde: GramMatrix, Y, priors=None) -> StandardSDP:
    """Member-level encoding for mixed inputs and pure outputs.

    The objective weight of every member of ensemble ``i`` is ``p_i``, so the
    optimum is sum_i p_i Tr(Gamma_i).
    """
    sizes = X_tilde.block_row_sizes
    if priors is None:
        priors = PriorDistribution.uniform(len(sizes))
    elif not isinstance(priors, PriorDistribution):
        priors = PriorDistribution(priors)
    return encode(X_tilde.matrix, expand_output_gram(Y, sizes), priors.expand(sizes))


# --------------------------------------------------------------------------
# interior-point solver


def _chol(m: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None


def _regularized_chol(m: np.ndarray) -> tuple[np.ndarray | None, np.ndarray]:
    lo = _chol(m)
    if lo is not None:
        return lo, m
    scale = max(1.0, float(np.real(np.trace(m))) / m.shape[0])
    for eps in (1e-14, 1e-12, 1e-10):
        shifted = m + eps * scale * np.eye(m.shape[0])
        lo = _chol(shifted)
        if lo is not None:
            return lo, shifted
    return None, m


def _max_step(x_chol: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with X + alpha dX >= 0, given X = L L^H."""
    linv = np.linalg.inv(x_chol)
    w = linalg.hermitian_part(linv @ dx @ linv.conj().T)
    lam = float(np.linalg.eigvalsh(w)[0])
    return np.inf if lam >= 0 else -1.0 / lam


def _op(S: np.ndarray, z: np.ndarray) -> np.ndarray:
    """A(Z)_m = Re Tr(S_m Z)."""
    return np.real(np.einsum("mab,ba->m", S, z))


def solve(prob: StandardSDP, gap_tol: float | None = None, max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    """Primal-dual path-following interior-point method.

    Works on the pair

        (P)  min Tr(C Z)  s.t.  Tr(S_m Z) = b_m,  Z >= 0
        (D)  max b.y      s.t.  C - sum_m y_m S_m = W >= 0

    from the infeasible start Z = xi I, W = eta I, y = 0, taking
    Mehrotra predictor-corrector steps in the HKM direction. Newton systems
    are solved through a Cholesky factorization of the Schur complement.

    When (D) has no strictly feasible point (an encoding that skipped the
    face reduction, or rounding at its cutoff) the optimal Z is not attained
    and the iterates eventually drift. The best iterate seen is kept, and the run stops as ``STALLED``
    once it has not improved for a while.
    """
    if gap_tol is None:
        gap_tol = get_tolerances().gap
    C, S, b = prob.C, prob.S, prob.b
    N, m = prob.size, prob.num_variables
    if m == 0:
        # the face is trivial: At = 0 is the only feasible point
        lam0 = float(np.linalg.eigvalsh(linalg.hermitian_part(C))[0]) if N else 0.0
        return SdpSolution(prob.a_tilde(b), 0.0, SdpStatus.OPTIMAL, 0.0, 0.0, 0, b.copy(), lam0)
    eye = np.eye(N)
    norm_c = float(np.linalg.norm(C))
    norm_s = np.linalg.norm(S.reshape(m, -1), axis=1) if m else np.zeros(0)
    norm_b = float(np.linalg.norm(b))

    xi = max(10.0, np.sqrt(N), N * float(np.max((1 + np.abs(b)) / (1 + norm_s))) if m else 10.0)
    eta = max(10.0, np.sqrt(N), norm_c, float(np.max(norm_s)) if m else 0.0)
    z = xi * eye.astype(complex)
    w = eta * eye.astype(complex)
    y = np.zeros(m)

    status = SdpStatus.MAX_ITERATIONS
    it = 0
    feas_tol = 0.1 * get_tolerances().psd_tol(norm_c)
    best_merit, best_it, bound = np.inf, 0, np.inf
    kept: tuple[float, np.ndarray] | None = None
    last_dobj = np.inf
    for it in range(1, max_iter + 1):
        rp = b - _op(S, z)
        rd = C - w - np.tensordot(y, S, axes=1)
        pobj = float(np.real(np.trace(C @ z)))
        dobj = float(b @ y)
        mu = float(np.real(np.trace(z @ w))) / N
        rel_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        pinf = float(np.linalg.norm(rp)) / (1 + norm_b)
        dinf = float(np.linalg.norm(rd)) / (1 + norm_c)
        merit = max(rel_gap, pinf, dinf)
        if merit < best_merit:
            best_merit, best_it, bound = merit, it, pobj
        # iterates whose At satisfies the constraint outright are kept as fallbacks
        viol = -float(np.linalg.eigvalsh(prob.constraint(y))[0])
        if viol <= feas_tol and (kept is None or dobj >= kept[0]):
            kept = (dobj, y.copy())
        if merit <= gap_tol and mu * N / (1 + abs(pobj) + abs(dobj)) <= gap_tol:
            status = SdpStatus.OPTIMAL
            break
        if float(np.linalg.norm(y)) > 1e12:
            status = SdpStatus.INFEASIBLE
            break
        settled = abs(dobj - last_dobj) <= gap_tol * (1 + abs(dobj))
        idle = it - best_it
        if float(np.real(np.trace(z))) > 1e14 or (idle >= STALL_ITERATIONS and (settled or idle >= 4 * STALL_ITERATIONS)):
            status = SdpStatus.STALLED
            break
        last_dobj = dobj

        lw, lz = _chol(w), _chol(z)
        if lw is None or lz is None:
            # no strictly feasible point (e.g. singular X): nudge back inside
            lw, w = _regularized_chol(w)
            lz, z = _regularized_chol(z)
            if lw is None or lz is None:
                raise NumericalBreakdown("iterate left the PSD cone", iterate=(y, z, w))
        w_inv = np.linalg.inv(lw)
        w_inv = w_inv.conj().T @ w_inv
        # Schur complement M_ij = Re Tr(S_i Z S_j W^-1)
        zs = np.einsum("ab,mbc->mac", z, S)
        zsw = np.einsum("mac,cd->mad", zs, w_inv)
        schur = np.real(np.einsum("iab,jba->ij", S, zsw))
        schur = (schur + schur.T) / 2
        lm = _chol(schur)
        if lm is None:
            lm = _chol(schur + 1e-14 * np.trace(schur) / max(m, 1) * np.eye(m))
            if lm is None:
                raise NumericalBreakdown("Schur complement is not positive definite", iterate=(y, z, w))

        def direction(rc: np.ndarray):
            rhs = rp - _op(S, (rc - z @ rd) @ w_inv)
            dy = np.linalg.solve(lm.conj().T, np.linalg.solve(lm, rhs))
            dw = rd - np.tensordot(dy, S, axes=1)
            dz = linalg.hermitian_part((rc - z @ dw) @ w_inv)
            return dy, dz, dw

        # predictor
        dy_a, dz_a, dw_a = direction(-z @ w)
        ap = min(1.0, _max_step(lz, dz_a))
        ad = min(1.0, _max_step(lw, dw_a))
        mu_aff = float(np.real(np.trace((z + ap * dz_a) @ (w + ad * dw_a)))) / N
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        rc = sigma * mu * eye - z @ w - dz_a @ dw_a
        dy, dz, dw = direction(rc)
        tau = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, tau * _max_step(lz, dz))
        ad = min(1.0, tau * _max_step(lw, dw))
        z = linalg.hermitian_part(z + ap * dz)
        y = y + ad * dy
        w = linalg.hermitian_part(w + ad * dw)

    if status is not SdpStatus.OPTIMAL and kept is not None:
        dobj, y = kept
        # without an attained Z the bound is only as good as the best merit seen
        pobj = max(bound, dobj + best_merit * (1 + abs(dobj)))
    cons = prob.constraint(y)
    lam_min = float(np.linalg.eigvalsh(linalg.hermitian_part(cons))[0])
    if status is SdpStatus.OPTIMAL and lam_min < -10 * gap_tol * max(1.0, norm_c):
        log.warning("constraint violated by %.3e at termination", -lam_min)
        status = SdpStatus.MAX_ITERATIONS
    margin = None
    if prob.fixed_diagonal is not None:
        margin = float(y[[k for k, (kind, _, _) in enumerate(prob.index) if kind == "t"][0]])
    return SdpSolution(
        a_tilde=prob.a_tilde(y),
        objective=dobj,
        status=status,
        duality_gap=pobj - dobj,
        dual_bound=pobj,
        iterations=it,
        y=y,
        constraint_min_eigenvalue=lam_min,
        margin=margin,
    )


def extract(sol: SdpSolution, cutoff: float | None = None) -> tuple[EfficiencyMatrix, AncillaGram]:
    """Split At into Gamma = diag(At) and A = Gamma^-1/2 At Gamma^-1/2.

    Rows belonging to a success probability below ``cutoff`` get zero
    off-diagonal entries and a unit diagonal in A.
    """
    at = linalg.hermitian_part(sol.a_tilde)
    if cutoff is None:
        cutoff = get_tolerances().rank_tol(1.0)
    eta = np.clip(np.real(np.diag(at)), 0.0, 1.0)
    live = eta > cutoff
    if not np.any(live):
        raise DegenerateEta("every success probability vanishes")
    n = eta.size
    a = np.eye(n, dtype=complex)
    idx = np.flatnonzero(live)
    s = np.sqrt(eta[idx])
    sub = at[np.ix_(idx, idx)] / np.outer(s, s)
    # clip to the PSD cone so that A is a valid Gram matrix after rounding
    eig = np.linalg.eigh(linalg.hermitian_part(sub))
    sub = (eig.eigenvectors * np.clip(eig.eigenvalues, 0, None)) @ eig.eigenvectors.conj().T
    d = np.sqrt(np.real(np.diag(sub)))
    d[d == 0] = 1.0
    sub = sub / np.outer(d, d)
    a[np.ix_(idx, idx)] = sub
    return EfficiencyMatrix(eta), AncillaGram(linalg.hermitian_part(a))


def optimize(X, Y, priors=None, gap_tol: float | None = None, max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    return solve(encode(X, Y, priors), gap_tol, max_iter)


@dataclasses.dataclass(frozen=True, eq=False)
class ProbeResult:
    feasible: bool
    margin: float
    tolerance: float
    ancilla: AncillaGram | None
    solution: SdpSolution


def encode_probe(X, Y, gamma) -> StandardSDP:
    """Feasibility with At_kk pinned to eta_k: maximize the margin t in

        [X - Y o At - t I,  0;  0,  At_live - t I] >= 0.

    Rows with eta_k = 0 carry no ancilla freedom (At vanishes there), so
    the second block and the variables cover only the live rows.
    """
    x, y = _gram(X), _gram(Y)
    g = gamma if isinstance(gamma, EfficiencyMatrix) else EfficiencyMatrix(gamma)
    n = x.shape[0]
    if y.shape != (n, n) or len(g) != n:
        raise ShapeMismatch("X, Y and Gamma sizes differ")
    eta = g.etas
    live = np.flatnonzero(eta > get_tolerances().rank_tol(1.0))
    m = live.size
    pos = {k: i for i, k in enumerate(live)}

    def stacked(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
        out = np.zeros((n + m, n + m), dtype=complex)
        out[:n, :n] = upper
        out[n:, n:] = lower
        return out

    c = stacked(linalg.hermitian_part(x - y * np.diag(eta)), np.diag(eta[live]).astype(complex))
    mats, b, index = [np.eye(n + m, dtype=complex)], [1.0], [("t", -1, -1)]
    for k, l in ((k, l) for k in live for l in live if k < l):
        ekl, elk = _unit(n, k, l), _unit(n, l, k)
        fkl, flk = _unit(m, pos[k], pos[l]), _unit(m, pos[l], pos[k])
        mats.append(stacked(y[k, l] * ekl + y[l, k] * elk, -fkl - flk))
        mats.append(1j * stacked(y[k, l] * ekl - y[l, k] * elk, -fkl + flk))
        b += [0.0, 0.0]
        index += [("re", k, l), ("im", k, l)]
    return StandardSDP(c, np.array(mats), np.array(b), tuple(index), n, fixed_diagonal=eta.copy())


def feasibility_probe(X, Y, gamma, tol: float | None = None, gap_tol: float | None = None) -> ProbeResult:
    """Decide to within ``tol`` whether some ancilla Gram certifies Gamma.

    This is an epsilon-decision: a margin in [-tol, 0) is reported feasible.
    """
    prob = encode_probe(X, Y, gamma)
    sol = solve(prob, gap_tol)
    x = _gram(X)
    if tol is None:
        tol = get_tolerances().psd_tol(linalg.max_abs(x))
    margin = float(sol.margin)
    ancilla = None
    feasible = margin >= -tol
    if feasible:
        eta = prob.fixed_diagonal
        if np.all(eta <= get_tolerances().rank_tol(1.0)):
            ancilla = AncillaGram.identity(prob.n)
        else:
            _, ancilla = extract(sol)
    return ProbeResult(feasible, margin, tol, ancilla, sol)


def certified_optimum(
    X, Y, priors=None, gap_tol: float | None = None, tol: float | None = None,
    block_sizes: Sequence[int] | None = None,
) -> tuple[SdpSolution, Certificate]:
    """Solve, extract (Gamma, A) and re-check the result independently.

    Interior-point iterates sit on the boundary of the cone only up to the
    gap tolerance. If the extracted pair misses by a hair, the success
    probabilities are scaled back by growing factors (at most 1e-6) until the
    certificate holds; the returned certificate is always freshly checked.
    """
    x = _gram(X)
    if block_sizes is None:
        sol = optimize(x, Y, priors, gap_tol)
    else:
        sol = solve(encode_mixed_to_pure(GramMatrix(x, tuple(block_sizes)), Y, priors), gap_tol)
    y = _gram(Y) if block_sizes is None else expand_output_gram(Y, block_sizes)
    try:
        gamma, ancilla = extract(sol)
    except DegenerateEta:
        gamma, ancilla = EfficiencyMatrix(np.zeros(x.shape[0])), AncillaGram.identity(x.shape[0])
    cert = _shrink_until_feasible(x, y, gamma, ancilla, tol)
    weights = _member_priors(priors, x.shape[0], block_sizes)
    cert = dataclasses.replace(
        cert, avg_success=float(weights @ cert.gamma.etas),
        block_sizes=tuple(block_sizes) if block_sizes is not None else (),
    )
    return sol, cert


def _shrink_until_feasible(x, y, gamma: EfficiencyMatrix, ancilla: AncillaGram, tol) -> Certificate:
    cert = check_pure_feasible(x, y, gamma, ancilla, tol=tol)
    for shrink in (1e-9, 1e-8, 1e-7, 1e-6):
        if cert.feasible:
            break
        cert = check_pure_feasible(x, y, EfficiencyMatrix(gamma.etas * (1 - shrink)), ancilla, tol=tol)
    return cert


def _member_priors(priors, n: int, block_sizes) -> np.ndarray:
    if block_sizes is None:
        if priors is None:
            return np.full(n, 1.0 / n)
        return priors.probabilities if isinstance(priors, PriorDistribution) else np.asarray(priors, float)
    if priors is None:
        priors = PriorDistribution.uniform(len(block_sizes))
    elif not isinstance(priors, PriorDistribution):
        priors = PriorDistribution(priors)
    return priors.expand(block_sizes)
