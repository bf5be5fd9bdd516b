"""State model: pure states, density matrices, ensembles, priors and Grams.

A mixed state enters the feasibility conditions through an ensemble of
non-normalized vectors. Ensemble members are kept as ``(weight, unit
vector)`` pairs so the squared norm of each non-normalized vector is always
the explicit weight, never something recovered by renormalizing.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

import numpy as np

from qaccess import linalg
from qaccess.config import get_tolerances
from qaccess.errors import (
    DimMismatch,
    EmptySet,
    InvalidProbability,
    InvalidState,
)

STATE_TOL = 1e-9
SUPPORT_RANK_TOL = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size == 0 or not np.all(np.isfinite(amp)):
            raise InvalidState("amplitudes must be a non-empty finite vector")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > STATE_TOL:
            raise InvalidState(f"state norm is {norm!r}, expected 1")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, vector) -> "PureState":
        """Normalize an arbitrary non-zero vector."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidState("zero vector")
        return cls(v / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))

    def tensor(self, other: "PureState") -> "PureState":
        return PureState.from_vector(np.kron(self.amplitudes, other.amplitudes))


@dataclasses.dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidState(f"density matrix must be square, got {m.shape}")
        if linalg.max_abs(m - m.conj().T) > STATE_TOL:
            raise InvalidState("density matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > STATE_TOL:
            raise InvalidState(f"trace is {tr!r}, expected 1")
        m = linalg.hermitian_part(m)
        verdict = linalg.is_psd(m)
        if not verdict:
            raise InvalidState(f"density matrix has eigenvalue {verdict.min_eigenvalue:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        """Hermitize and trace-normalize before validating."""
        m = linalg.hermitian_part(linalg.as_matrix(matrix))
        return cls(m / np.trace(m).real)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def rank(self) -> int:
        lam = linalg.hermitian_eig(self.matrix).eigenvalues
        return int(np.sum(lam > get_tolerances().rank_tol(1.0)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(float(np.trace(self.matrix @ self.matrix).real) - 1.0) <= tol


@dataclasses.dataclass(frozen=True)
class EnsembleMember:
    weight: float
    state: PureState

    @property
    def vector(self) -> np.ndarray:
        """The non-normalized vector sqrt(weight) |state>."""
        return np.sqrt(self.weight) * self.state.amplitudes


@dataclasses.dataclass(frozen=True, eq=False)
class StateEnsemble:
    members: tuple[EnsembleMember, ...]
    source: DensityMatrix

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise EmptySet("an ensemble needs at least one member")
        dims = {m.state.dim for m in members}
        if dims != {self.source.dim}:
            raise DimMismatch("ensemble members and source have different dimensions")
        if any(not (0.0 < m.weight <= 1.0 + STATE_TOL) for m in members):
            raise InvalidState("ensemble weights must lie in (0, 1]")
        recon = sum(m.weight * np.outer(m.state.amplitudes, m.state.amplitudes.conj()) for m in members)
        err = linalg.max_abs(recon - self.source.matrix)
        if err > STATE_TOL:
            raise InvalidState(f"ensemble does not reproduce its source (error {err:.3e})")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_vectors(cls, vectors: Iterable, source: DensityMatrix | None = None) -> "StateEnsemble":
        """Build an ensemble from non-normalized vectors ``sqrt(r_k)|phi_k>``."""
        vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        vecs = [v for v in vecs if np.linalg.norm(v) > 0]
        if not vecs:
            raise EmptySet("no non-zero vectors")
        if source is None:
            source = DensityMatrix.from_matrix(sum(np.outer(v, v.conj()) for v in vecs))
        members = tuple(
            EnsembleMember(float(np.vdot(v, v).real), PureState.from_vector(v)) for v in vecs
        )
        return cls(members, source)

    @classmethod
    def singleton(cls, state: PureState) -> "StateEnsemble":
        return cls((EnsembleMember(1.0, state),), state.density())

    def __len__(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    def vectors(self) -> np.ndarray:
        """Columns are the non-normalized member vectors."""
        return np.column_stack([m.vector for m in self.members])

    def unit_vectors(self) -> np.ndarray:
        return np.column_stack([m.state.amplitudes for m in self.members])


@dataclasses.dataclass(frozen=True, eq=False)
class PriorDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvalidProbability("no prior probabilities given")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidProbability("prior probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidProbability(f"prior probabilities sum to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def uniform(cls, n: int) -> "PriorDistribution":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.probabilities.size

    def expand(self, block_sizes: Sequence[int]) -> np.ndarray:
        """Per-member prior weights: p_i repeated for each member of block i."""
        if len(block_sizes) != len(self):
            raise DimMismatch("one prior per block is required")
        return np.repeat(self.probabilities, block_sizes)


@dataclasses.dataclass(frozen=True, eq=False)
class GramMatrix:
    matrix: np.ndarray
    block_row_sizes: tuple[int, ...] = ()

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        sizes = tuple(self.block_row_sizes) or (1,) * m.shape[0]
        if sum(sizes) != m.shape[0]:
            raise DimMismatch("block sizes do not add up to the matrix size")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "block_row_sizes", sizes)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_pure_set(self) -> bool:
        return all(s == 1 for s in self.block_row_sizes)

    def block(self, i: int, j: int) -> np.ndarray:
        off = np.concatenate([[0], np.cumsum(self.block_row_sizes)])
        return self.matrix[off[i]:off[i + 1], off[j]:off[j + 1]]


def gram_matrix(states: Sequence[PureState]) -> GramMatrix:
    """Entry (i, j) is <phi_i|phi_j>."""
    if not states:
        raise EmptySet("no states")
    if len({s.dim for s in states}) != 1:
        raise DimMismatch("states have different dimensions")
    v = np.column_stack([s.amplitudes for s in states])
    return GramMatrix(v.conj().T @ v)


def spectral_decompose(rho: DensityMatrix) -> StateEnsemble:
    """Eigen-ensemble of ``rho``: descending weight, ties broken lexicographically."""
    eig = linalg.hermitian_eig(rho.matrix)
    cutoff = get_tolerances().rank_tol(1.0)
    pairs = [(float(w), eig.vectors[:, k]) for k, w in enumerate(eig.eigenvalues) if w > cutoff]

    def key(pair):
        w, v = pair
        r = np.round(v, 9)
        return (-round(w, 10),) + tuple(-x for z in r for x in (float(z.real), float(z.imag)))

    pairs.sort(key=key)
    members = tuple(EnsembleMember(w, PureState.from_vector(v)) for w, v in pairs)
    # the source is re-expressed from the kept members so that the
    # reconstruction invariant holds exactly up to the dropped tail
    total = sum(w for w, _ in pairs)
    if abs(total - 1.0) > STATE_TOL:
        members = tuple(EnsembleMember(m.weight / total, m.state) for m in members)
    return StateEnsemble(members, rho)


def block_gram(ensembles: Sequence[StateEnsemble]) -> GramMatrix:
    """Block Gram of non-normalized members: sqrt(r_k r_l) <phi_k|phi_l>."""
    if not ensembles:
        raise EmptySet("no ensembles")
    if len({e.dim for e in ensembles}) != 1:
        raise DimMismatch("ensembles have different dimensions")
    v = np.column_stack([e.vectors() for e in ensembles])
    return GramMatrix(v.conj().T @ v, tuple(len(e) for e in ensembles))


def normalized_cross_gram(ensembles: Sequence[StateEnsemble]) -> GramMatrix:
    """Block Gram of the unit member vectors, (X_ij)_kl = <phi^(i)_k|phi^(j)_l>."""
    if len({e.dim for e in ensembles}) != 1:
        raise DimMismatch("ensembles have different dimensions")
    v = np.column_stack([e.unit_vectors() for e in ensembles])
    return GramMatrix(v.conj().T @ v, tuple(len(e) for e in ensembles))


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every tensor factor of ``rho`` not listed in ``keep``."""
    dims = list(dims)
    k = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    idx_in = list(range(k))
    idx_out = list(range(k, 2 * k))
    for j in range(k):
        if j not in keep:
            idx_out[j] = idx_in[j]
    out_axes = [idx_in[j] for j in keep] + [idx_out[j] for j in keep]
    r = np.einsum(t, idx_in + idx_out, out_axes)
    d = int(np.prod([dims[j] for j in keep])) if keep else 1
    return r.reshape(d, d)


def purify(sigma: DensityMatrix) -> PureState:
    """Canonical purification sum_k sqrt(r_k) |phi_k> (x) |k> in C^d (x) C^d."""
    d = sigma.dim
    ens = spectral_decompose(sigma)
    out = np.zeros(d * d, dtype=complex)
    for k, m in enumerate(ens.members):
        out += np.kron(m.vector, np.eye(d)[k])
    return PureState.from_vector(out)


def fidelity(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """Tr sqrt(sqrt(r1) r2 sqrt(r1)), clamped to [0, 1].

    Evaluated as the trace norm of sqrt(r1) sqrt(r2): taking a second square
    root of the sandwiched product would amplify rounding in its null space
    to order sqrt(eps).
    """
    if r1.dim != r2.dim:
        raise DimMismatch(f"dimensions {r1.dim} and {r2.dim} differ")
    prod = linalg.matrix_sqrt_psd(r1.matrix) @ linalg.matrix_sqrt_psd(r2.matrix)
    f = float(np.sum(linalg.singular_values(prod)))
    return min(1.0, max(0.0, f))


def support_basis(rho: DensityMatrix, tol: float = SUPPORT_RANK_TOL) -> np.ndarray:
    eig = linalg.hermitian_eig(rho.matrix)
    return eig.vectors[:, eig.eigenvalues > tol]


def _rank(m: np.ndarray, tol: float) -> int:
    if m.size == 0:
        return 0
    return int(np.sum(linalg.singular_values(m) > tol))


def support_intersection_dim(r1: DensityMatrix, r2: DensityMatrix) -> int:
    """dim(supp r1 ∩ supp r2) = rank P1 + rank P2 - rank [P1 P2]."""
    if r1.dim != r2.dim:
        raise DimMismatch(f"dimensions {r1.dim} and {r2.dim} differ")
    b1, b2 = support_basis(r1), support_basis(r2)
    combined = np.column_stack([b1, b2])
    return b1.shape[1] + b2.shape[1] - _rank(combined, SUPPORT_RANK_TOL)
