"""Feasibility certificates for probabilistic state transformations.

A transformation of pure inputs (input Gram ``X``) into pure outputs (output
Gram ``Y``) with per-state success probabilities ``Gamma = diag(eta)`` exists
exactly when some unit-diagonal PSD ancilla Gram ``A`` makes the residual

    B = X - (sqrt(Gamma) Y sqrt(Gamma)) o A

positive semidefinite (``o`` is the entrywise product). ``B`` is the Gram
matrix of the failure branches. Mixed inputs enter through ensembles of
non-normalized member vectors, mixed outputs through purifications or
explicit composite output vectors. Every checker here evaluates such a
condition for supplied (Gamma, A); nothing in this module optimizes.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Sequence

import numpy as np

from qaccess import linalg
from qaccess.errors import (
    BlockNotPsd,
    CandidateNotConsistent,
    InvalidAncillaGram,
    InvalidBlockStructure,
    InvalidGamma,
    InvalidProbability,
    NotAPurification,
    OutOfRange,
    ShapeMismatch,
)
from qaccess.linalg import PsdVerdict
from qaccess.states import (
    DensityMatrix,
    GramMatrix,
    PriorDistribution,
    PureState,
    StateEnsemble,
    block_gram,
    gram_matrix,
    normalized_cross_gram,
    partial_trace,
    support_intersection_dim,
)

UNIT_TOL = 1e-9
ZERO_OVERLAP = 1e-12
TRACE_CONDITION_TOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class EfficiencyMatrix:
    """Diagonal matrix of success probabilities."""

    etas: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.etas, dtype=float).reshape(-1)
        if not np.all(np.isfinite(e)):
            raise InvalidGamma("success probabilities must be finite")
        if np.any(e < -UNIT_TOL) or np.any(e > 1 + UNIT_TOL):
            raise InvalidGamma(f"success probabilities must lie in [0, 1], got {e}")
        e = np.clip(e, 0.0, 1.0)
        e.setflags(write=False)
        object.__setattr__(self, "etas", e)

    @classmethod
    def uniform(cls, eta: float, n: int) -> "EfficiencyMatrix":
        return cls(np.full(n, eta))

    def __len__(self) -> int:
        return self.etas.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.etas)

    def sqrt(self) -> np.ndarray:
        return np.diag(np.sqrt(self.etas))


@dataclasses.dataclass(frozen=True, eq=False)
class AncillaGram:
    """Gram matrix of the ancilla states attached to the success branches."""

    matrix: np.ndarray

    def __post_init__(self):
        a = linalg.as_matrix(self.matrix)
        if a.shape[0] != a.shape[1]:
            raise InvalidAncillaGram(f"ancilla Gram must be square, got {a.shape}")
        if linalg.max_abs(a - a.conj().T) > UNIT_TOL:
            raise InvalidAncillaGram("ancilla Gram is not Hermitian")
        if a.size and np.max(np.abs(np.diag(a) - 1)) > UNIT_TOL:
            raise InvalidAncillaGram("ancilla Gram must have unit diagonal")
        if a.size and np.max(np.abs(a)) > 1 + UNIT_TOL:
            raise InvalidAncillaGram("ancilla Gram entries exceed 1 in modulus")
        verdict = linalg.is_psd(a)
        if not verdict:
            raise InvalidAncillaGram(f"ancilla Gram has eigenvalue {verdict.min_eigenvalue:.3e}")
        a = linalg.hermitian_part(a)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def ones(cls, n: int) -> "AncillaGram":
        """All ancilla states equal: the ancilla plays no role."""
        return cls(np.ones((n, n)))

    @classmethod
    def identity(cls, n: int) -> "AncillaGram":
        return cls(np.eye(n))


@dataclasses.dataclass(frozen=True, eq=False)
class Certificate:
    X: np.ndarray
    Y: np.ndarray
    gamma: EfficiencyMatrix
    ancilla: AncillaGram | None
    residual: np.ndarray
    verdict: PsdVerdict
    avg_success: float
    block_sizes: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return self.verdict.is_psd

    def recompute_residual(self) -> np.ndarray:
        if self.ancilla is None:
            raise ValueError("certificate carries no ancilla Gram")
        return residual_matrix(self.X, self.Y, self.gamma, self.ancilla)


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDETERMINED = "undetermined"


@dataclasses.dataclass(frozen=True, eq=False)
class DeterministicResult:
    """Outcome of a deterministic (Gamma = I) feasibility test.

    ``candidate`` is the ancilla Gram built entrywise from the overlaps; it is
    a valid :class:`AncillaGram` only when ``status`` is feasible.
    """

    status: Status
    candidate: np.ndarray | None
    min_eigenvalue: float
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def ancilla(self) -> AncillaGram | None:
        return AncillaGram(self.candidate) if self.feasible else None


@dataclasses.dataclass(frozen=True, eq=False)
class CompositeOutputEnsemble:
    """Candidate success-branch vectors for a mixed -> mixed transformation.

    ``vectors[i]`` has one row per ensemble member of input ``i``; each row is
    a non-normalized vector on output (x) ancilla with the output factor of
    dimension ``output_dim`` first. ``etas[i]`` is the claimed success
    probability on input ``i``.
    """

    vectors: tuple[np.ndarray, ...]
    etas: np.ndarray
    output_dim: int

    def __post_init__(self):
        vecs = tuple(np.atleast_2d(np.asarray(v, dtype=complex)) for v in self.vectors)
        if len({v.shape[1] for v in vecs}) != 1:
            raise ShapeMismatch("composite vectors have different lengths")
        if vecs[0].shape[1] % self.output_dim:
            raise ShapeMismatch("composite vector length is not a multiple of the output dimension")
        etas = np.asarray(self.etas, dtype=float).reshape(-1)
        if etas.size != len(vecs):
            raise ShapeMismatch("one success probability per input is required")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "etas", etas)

    @property
    def ancilla_dim(self) -> int:
        return self.vectors[0].shape[1] // self.output_dim

    def reduced_output(self, i: int) -> np.ndarray:
        """sum_k Tr_a |phi_k><phi_k| for input ``i``."""
        d, da = self.output_dim, self.ancilla_dim
        total = np.zeros((d, d), dtype=complex)
        for row in self.vectors[i]:
            total += partial_trace(np.outer(row, row.conj()), [d, da], [0])
        return total

    def stacked(self) -> np.ndarray:
        """Columns are all composite vectors, input-major."""
        return np.column_stack([v.T for v in self.vectors])


def _gram_array(g) -> np.ndarray:
    return g.matrix if isinstance(g, GramMatrix) else linalg.as_matrix(g)


def _priors(priors, n: int) -> np.ndarray:
    if priors is None:
        return np.full(n, 1.0 / n)
    if not isinstance(priors, PriorDistribution):
        priors = PriorDistribution(priors)
    if len(priors) != n:
        raise ShapeMismatch(f"{len(priors)} priors for {n} states")
    return priors.probabilities


def _as_gamma(gamma) -> EfficiencyMatrix:
    return gamma if isinstance(gamma, EfficiencyMatrix) else EfficiencyMatrix(gamma)


def _as_ancilla(a) -> AncillaGram:
    return a if isinstance(a, AncillaGram) else AncillaGram(a)


def residual_matrix(X, Y, gamma, ancilla) -> np.ndarray:
    """B = X - (sqrt(Gamma) Y sqrt(Gamma)) o A."""
    x, y = _gram_array(X), _gram_array(Y)
    g, a = _as_gamma(gamma), _as_ancilla(ancilla)
    n = x.shape[0]
    if y.shape != (n, n) or len(g) != n or a.matrix.shape != (n, n):
        raise ShapeMismatch("X, Y, Gamma and A must all describe the same number of states")
    s = np.sqrt(g.etas)
    return linalg.hermitian_part(x - np.outer(s, s) * y * a.matrix)


def check_pure_feasible(X, Y, gamma, ancilla, priors=None, tol: float | None = None) -> Certificate:
    """Evaluate the pure -> pure condition for a given (Gamma, A)."""
    x, y = _gram_array(X), _gram_array(Y)
    if x.shape != y.shape:
        raise ShapeMismatch(f"X is {x.shape} but Y is {y.shape}")
    g, a = _as_gamma(gamma), _as_ancilla(ancilla)
    b = residual_matrix(x, y, g, a)
    p = _priors(priors, x.shape[0])
    return Certificate(
        X=x, Y=y, gamma=g, ancilla=a, residual=b,
        verdict=linalg.is_psd(b, tol), avg_success=float(p @ g.etas),
    )


def check_unambiguous_pure(X, gamma, tol: float | None = None) -> PsdVerdict:
    """Unambiguous discrimination: outputs orthogonal, so the test is X - Gamma >= 0."""
    x = _gram_array(X)
    g = _as_gamma(gamma)
    if len(g) != x.shape[0]:
        raise ShapeMismatch("one success probability per state is required")
    return linalg.is_psd(x - g.matrix(), tol)


def _entrywise_ratio(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, bool, str]:
    """A_ij = X_ij / Y_ij with the zero conventions of the deterministic checks.

    Returns (candidate, used_zero_completion, infeasibility_reason).
    """
    a = np.zeros_like(x, dtype=complex)
    zero_y = np.abs(y) <= ZERO_OVERLAP
    zero_x = np.abs(x) <= ZERO_OVERLAP
    if np.any(zero_y & ~zero_x):
        i, j = np.argwhere(zero_y & ~zero_x)[0]
        return a, False, f"output overlap ({i},{j}) vanishes while the input overlap does not"
    a[~zero_y] = x[~zero_y] / y[~zero_y]
    return a, bool(np.any(zero_y & zero_x)), ""


def _deterministic_verdict(candidate: np.ndarray, zero_completion: bool) -> DeterministicResult:
    candidate = linalg.hermitian_part(candidate)
    verdict = linalg.is_psd(candidate)
    unit = np.max(np.abs(np.diag(candidate) - 1)) <= UNIT_TOL if candidate.size else True
    if verdict.is_psd and unit:
        return DeterministicResult(Status.FEASIBLE, candidate, verdict.min_eigenvalue)
    if not unit:
        return DeterministicResult(
            Status.INFEASIBLE, candidate, verdict.min_eigenvalue, "diagonal of A is not 1"
        )
    if zero_completion:
        return DeterministicResult(
            Status.UNDETERMINED, candidate, verdict.min_eigenvalue,
            "zero completion of undefined entries is not PSD; other completions were not tried",
        )
    return DeterministicResult(
        Status.INFEASIBLE, candidate, verdict.min_eigenvalue, "entrywise ratio X/Y is not PSD"
    )


def check_deterministic_pure(X, Y) -> DeterministicResult:
    """Can pure inputs be mapped to pure outputs with certainty?

    Requires X = Y o A, so A_ij = X_ij / Y_ij wherever Y_ij != 0. Where
    both overlaps vanish the entry is set to 0; if that particular completion
    fails the result is undetermined rather than infeasible.
    """
    x, y = _gram_array(X), _gram_array(Y)
    if x.shape != y.shape:
        raise ShapeMismatch(f"X is {x.shape} but Y is {y.shape}")
    cand, zero_completion, reason = _entrywise_ratio(x, y)
    if reason:
        return DeterministicResult(Status.INFEASIBLE, None, float("-inf"), reason)
    return _deterministic_verdict(cand, zero_completion)


def _check_purification(phi: PureState, sigma: DensityMatrix) -> None:
    d = sigma.dim
    if phi.dim % d:
        raise NotAPurification(f"purification of length {phi.dim} does not factor over dimension {d}")
    reduced = partial_trace(np.outer(phi.amplitudes, phi.amplitudes.conj()), [d, phi.dim // d], [0])
    err = linalg.max_abs(reduced - sigma.matrix)
    if err > TRACE_CONDITION_TOL:
        raise NotAPurification(f"partial trace misses the target by {err:.3e}")


def check_pure_to_mixed(
    X, purifications: Sequence[PureState], gamma, priors=None,
    targets: Sequence[DensityMatrix] | None = None, tol: float | None = None,
) -> Certificate:
    """Pure inputs to mixed outputs, through purifications of the outputs.

    The ancilla Gram is fixed to all-ones: attaching ancilla states to a
    purification yields another purification, so that freedom already lives
    in the choice of purifications.
    """
    if targets is not None:
        if len(targets) != len(purifications):
            raise ShapeMismatch("one target per purification is required")
        for phi, sigma in zip(purifications, targets):
            _check_purification(phi, sigma)
    y = gram_matrix(list(purifications)).matrix
    return check_pure_feasible(X, y, gamma, AncillaGram.ones(y.shape[0]), priors, tol)


def expand_output_gram(Y, block_sizes: Sequence[int]) -> np.ndarray:
    """Blockwise-constant member-level Gram: (Y_ij)_kl = <phi_i|phi_j>."""
    y = _gram_array(Y)
    if y.shape[0] != len(block_sizes):
        raise InvalidBlockStructure("one output per input ensemble is required")
    idx = np.repeat(np.arange(len(block_sizes)), block_sizes)
    return y[np.ix_(idx, idx)]


def check_mixed_to_pure(
    inputs: Sequence[StateEnsemble], Y, gamma, ancilla, priors=None, tol: float | None = None,
) -> Certificate:
    """Mixed inputs (as ensembles) to pure outputs, at member level.

    ``gamma`` holds one success probability per ensemble member; the total
    success probability on input ``i`` is the sum over its members.
    """
    xt = block_gram(inputs)
    sizes = xt.block_row_sizes
    g, a = _as_gamma(gamma), _as_ancilla(ancilla)
    if len(g) != xt.n or a.matrix.shape[0] != xt.n:
        raise InvalidBlockStructure(
            f"Gamma and A must have one row per ensemble member ({xt.n}), "
            f"got {len(g)} and {a.matrix.shape[0]}"
        )
    y = expand_output_gram(Y, sizes)
    b = residual_matrix(xt.matrix, y, g, a)
    p = _priors(priors, len(sizes))
    per_input = np.add.reduceat(g.etas, np.concatenate([[0], np.cumsum(sizes)[:-1]]))
    return Certificate(
        X=xt.matrix, Y=y, gamma=g, ancilla=a, residual=b,
        verdict=linalg.is_psd(b, tol), avg_success=float(p @ per_input), block_sizes=sizes,
    )


def check_deterministic_mixed_to_pure(inputs: Sequence[StateEnsemble], Y) -> DeterministicResult:
    """Deterministic mixed -> pure test on the normalized member overlaps.

    For two inputs with orthonormal members this is the singular-value test
    sigma_max(X_12) <= |<phi_1|phi_2>|; otherwise the blockwise ratio
    A_ij = X_ij / <phi_i|phi_j> is built and tested for PSD.
    """
    if len(inputs) < 2:
        raise ShapeMismatch("at least two input ensembles are required")
    xn = normalized_cross_gram(inputs)
    y = _gram_array(Y)
    if y.shape[0] != len(inputs):
        raise ShapeMismatch("one output per input ensemble is required")
    orthonormal = all(
        linalg.max_abs(xn.block(i, i) - np.eye(len(e))) <= UNIT_TOL for i, e in enumerate(inputs)
    )
    if len(inputs) == 2 and orthonormal:
        x12 = xn.block(0, 1)
        smax = float(linalg.singular_values(x12)[0])
        y12 = abs(y[0, 1])
        if y12 <= ZERO_OVERLAP:
            if smax <= ZERO_OVERLAP:
                cand = np.eye(xn.n, dtype=complex)
                return DeterministicResult(Status.FEASIBLE, cand, 1.0)
            return DeterministicResult(
                Status.INFEASIBLE, None, float("-inf"),
                "zero output overlap with non-zero input overlap",
            )
        cand = xn.matrix.copy()
        n1 = len(inputs[0])
        cand[:n1, n1:] /= y[0, 1]
        cand[n1:, :n1] /= y[1, 0]
        lam = 1.0 - smax / y12
        if smax <= y12 + 1e-9:
            return DeterministicResult(Status.FEASIBLE, cand, lam)
        return DeterministicResult(
            Status.INFEASIBLE, cand, lam,
            f"largest singular value {smax:.6g} of the cross block exceeds |<phi_1|phi_2>| = {y12:.6g}",
        )
    y_exp = expand_output_gram(y, xn.block_row_sizes)
    cand, zero_completion, reason = _entrywise_ratio(xn.matrix, y_exp)
    if reason:
        return DeterministicResult(Status.INFEASIBLE, None, float("-inf"), reason)
    return _deterministic_verdict(cand, zero_completion)


def check_mixed_to_mixed(
    X_tilde, candidate: CompositeOutputEnsemble, targets: Sequence[DensityMatrix],
    priors=None, tol: float | None = None,
) -> Certificate:
    """Check a composite-output candidate for a mixed -> mixed transformation.

    The candidate must reproduce ``eta_i sigma_i`` after tracing out the
    ancilla; the condition is then X~ - Y~ >= 0 with Y~ the Gram matrix of
    the composite vectors.
    """
    xg = X_tilde if isinstance(X_tilde, GramMatrix) else GramMatrix(X_tilde)
    sizes = tuple(v.shape[0] for v in candidate.vectors)
    if sizes != xg.block_row_sizes:
        raise ShapeMismatch(f"candidate member counts {sizes} do not match X~ blocks {xg.block_row_sizes}")
    if len(targets) != len(sizes):
        raise ShapeMismatch("one target per input is required")
    for i, sigma in enumerate(targets):
        if sigma.dim != candidate.output_dim:
            raise ShapeMismatch("target dimension differs from the candidate's output dimension")
        err = linalg.max_abs(candidate.reduced_output(i) - candidate.etas[i] * sigma.matrix)
        if err > TRACE_CONDITION_TOL:
            raise CandidateNotConsistent(
                f"input {i}: reduced output misses eta*sigma by {err:.3e}"
            )
    w = candidate.stacked()
    yt = linalg.hermitian_part(w.conj().T @ w)
    b = linalg.hermitian_part(xg.matrix - yt)
    p = _priors(priors, len(sizes))
    off = np.concatenate([[0], np.cumsum(sizes)])
    traces = np.array([np.trace(yt[off[i]:off[i + 1], off[i]:off[i + 1]]).real for i in range(len(sizes))])
    return Certificate(
        X=xg.matrix, Y=yt, gamma=EfficiencyMatrix(np.clip(traces, 0, 1)), ancilla=None, residual=b,
        verdict=linalg.is_psd(b, tol), avg_success=float(p @ traces), block_sizes=sizes,
    )


def check_unambiguous_mixed(
    inputs: Sequence[StateEnsemble], Y_blocks: Sequence, priors=None, tol: float | None = None,
) -> Certificate:
    """Unambiguous discrimination of mixed states with a block-diagonal Y~."""
    xt = block_gram(inputs)
    sizes = xt.block_row_sizes
    if len(Y_blocks) != len(sizes):
        raise ShapeMismatch("one diagonal block per input is required")
    blocks = []
    for i, (blk, k) in enumerate(zip(Y_blocks, sizes)):
        m = np.atleast_2d(np.asarray(blk, dtype=complex))
        if m.shape != (k, k):
            raise ShapeMismatch(f"block {i} must be {k}x{k}, got {m.shape}")
        if linalg.max_abs(m - m.conj().T) > UNIT_TOL or not linalg.is_psd(m):
            raise BlockNotPsd(f"block {i} is not Hermitian PSD")
        blocks.append(linalg.hermitian_part(m))
    yt = np.zeros_like(xt.matrix)
    off = np.concatenate([[0], np.cumsum(sizes)])
    for i, m in enumerate(blocks):
        yt[off[i]:off[i + 1], off[i]:off[i + 1]] = m
    b = linalg.hermitian_part(xt.matrix - yt)
    p = _priors(priors, len(sizes))
    traces = np.array([np.trace(m).real for m in blocks])
    return Certificate(
        X=xt.matrix, Y=yt, gamma=EfficiencyMatrix(np.clip(traces, 0, 1)), ancilla=None, residual=b,
        verdict=linalg.is_psd(b, tol), avg_success=float(p @ traces), block_sizes=sizes,
    )


def two_state_bound(p1: float, p2: float, input_overlap: float, output_fidelity: float) -> float:
    """Upper bound on p1*eta1 + p2*eta2 for any two-state transformation.

    ``input_overlap`` is |<phi_1|phi_2>| for pure inputs or F(rho_1, rho_2)
    for mixed ones; ``output_fidelity`` likewise for the outputs. With
    orthogonal outputs this is the unambiguous-discrimination limit.
    """
    if min(p1, p2) < 0 or abs(p1 + p2 - 1.0) > 1e-9:
        raise InvalidProbability(f"priors ({p1}, {p2}) do not form a distribution")
    for name, v in (("input_overlap", input_overlap), ("output_fidelity", output_fidelity)):
        if not -1e-12 <= v <= 1 + 1e-12:
            raise OutOfRange(f"{name} = {v} outside [0, 1]")
    if output_fidelity >= 1.0:
        return 1.0
    value = (1.0 - 2.0 * np.sqrt(p1 * p2) * input_overlap) / (1.0 - output_fidelity)
    return float(min(1.0, value))


def common_support_pairs(
    inputs: Sequence[DensityMatrix], outputs: Sequence[PureState], tol: float = 1e-9,
) -> list[tuple[int, int, int, bool]]:
    """Input pairs with overlapping supports, as (i, j, dim, outputs_differ).

    When the outputs differ, vectors in the common support can only ever be
    mapped to the failure branch.
    """
    pairs = []
    for i in range(len(inputs)):
        for j in range(i + 1, len(inputs)):
            d = support_intersection_dim(inputs[i], inputs[j])
            if d:
                differ = abs(abs(outputs[i].inner(outputs[j])) - 1.0) > tol
                pairs.append((i, j, d, differ))
    return pairs


def ancilla_required(X, Y, gamma, tol: float | None = None) -> bool:
    """True when Gamma cannot be reached with identical ancilla states."""
    return not check_pure_feasible(X, Y, gamma, AncillaGram.ones(_gram_array(X).shape[0]), tol=tol).feasible
