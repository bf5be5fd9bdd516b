"""Explicit unitary dilations and their exact simulation.

A feasible certificate fixes the inner products of the images

    U |v_j>|0>_E = |s_j> (x) |P0> + |beta_j>

where ``|s_j>`` is the success branch on output (x) ancilla and the failure
vectors ``|beta_j>`` are orthogonal to the probe state ``|P0>``. Because the
Gram matrix of the images equals that of the inputs, a unitary with this
action exists; it is built here by mapping an orthonormal basis of the input
span onto the images and completing both sides to full bases.

The whole dilation lives on one space of dimension
``D = d_out * d_ancilla * d_probe``, ordered output (x) ancilla (x) probe.
Inputs enter through an isometric embedding of C^d_in into the first d_in
basis vectors (the environment starts in its 0 state). ``d_probe`` is at
least 1 + rank(B) and is raised further when D would otherwise be smaller
than d_in.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from qaccess import linalg
from qaccess.config import get_tolerances
from qaccess.certify import AncillaGram, Certificate, CompositeOutputEnsemble, EfficiencyMatrix
from qaccess.errors import (
    CertificateNotFeasible,
    DimMismatch,
    GramMismatch,
    OrthonormalizationFailure,
)
from qaccess.states import (
    DensityMatrix,
    PureState,
    StateEnsemble,
    block_gram,
    fidelity,
    gram_matrix,
    partial_trace,
    purify,
)

GRAM_TOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class SynthesizedDilation:
    U: np.ndarray
    d_in: int
    d_out: int
    d_ancilla: int
    d_probe: int
    embedding: np.ndarray
    probe_success_index: int
    alphas: np.ndarray
    betas: np.ndarray
    inputs: tuple[DensityMatrix, ...] = ()
    targets: tuple[DensityMatrix, ...] = ()
    etas: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.d_out, self.d_ancilla, self.d_probe

    @property
    def total_dim(self) -> int:
        return self.d_out * self.d_ancilla * self.d_probe

    def unitarity_defect(self) -> float:
        return linalg.max_abs(self.U.conj().T @ self.U - np.eye(self.total_dim))


@dataclasses.dataclass(frozen=True)
class SimulationReport:
    success_probability: float
    failure_probability: float
    conditional_output: DensityMatrix | None
    fidelity_to_target: float | None = None


def _check_gram(actual: np.ndarray, expected: np.ndarray, what: str) -> None:
    err = linalg.max_abs(actual - expected)
    if err > GRAM_TOL:
        raise GramMismatch(f"{what} Gram differs from the certificate by {err:.3e}")


def _ancilla_vectors(a: np.ndarray, etas: np.ndarray) -> np.ndarray:
    """Columns realizing A; rows with vanishing eta get a fixed unit vector."""
    w = linalg.factor_gram(a)
    if w.shape[0] == 0:
        w = np.zeros((1, a.shape[0]), dtype=complex)
    norms = np.linalg.norm(w, axis=0)
    for j in np.flatnonzero(np.abs(norms - 1) > 1e-6):
        w[:, j] = 0
        w[0, j] = 1
    return w


def _build(
    inputs: np.ndarray,
    success: np.ndarray,
    d_out: int,
    d_ancilla: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Construct (U, betas, d_probe) from input columns and success-branch columns."""
    x = inputs.conj().T @ inputs
    ys = success.conj().T @ success
    b = linalg.hermitian_part(x - ys)
    betas = linalg.factor_gram(b)
    r_b = betas.shape[0]
    d_in = inputs.shape[0]
    d_probe = 1 + r_b
    while d_out * d_ancilla * d_probe < d_in:
        d_probe += 1
    dim = d_out * d_ancilla * d_probe
    n = inputs.shape[1]

    images = np.zeros((dim, n), dtype=complex)
    # success branch: |s_j> (x) |P0>, P0 = probe index 0
    images[0::d_probe, :] = success
    # failure branch: reference output/ancilla state |0>|0> with probe levels 1..r_B
    images[1:1 + r_b, :] = betas
    _check_gram(images.conj().T @ images, x, "image")

    embedded = np.zeros((dim, n), dtype=complex)
    embedded[:d_in, :] = inputs
    q = linalg.orthonormal_basis(embedded)
    if q.shape[1] == 0:
        u = np.eye(dim, dtype=complex)
        return u, betas, d_probe
    coeff = q.conj().T @ embedded
    target = images @ np.linalg.pinv(coeff)
    # A null vector c of X has |W c|^2 = -c^dagger B c, which a PSD check at
    # tolerance eps only bounds by eps; the image residual is then ~sqrt(eps).
    slack = 10 * np.sqrt(get_tolerances().psd_tol(linalg.max_abs(x))) + GRAM_TOL
    mismatch = linalg.max_abs(target @ coeff - images)
    if mismatch > slack:
        raise OrthonormalizationFailure(
            f"the images break a linear dependency of the inputs by {mismatch:.3e}"
        )
    defect = linalg.max_abs(target.conj().T @ target - np.eye(q.shape[1]))
    if defect > slack:
        raise OrthonormalizationFailure(f"image basis is not orthonormal (defect {defect:.3e})")
    target = linalg._lowdin(target)
    left = linalg.complete_to_unitary(target, dim)
    right = linalg.complete_to_unitary(q, dim)
    return left @ right.conj().T, betas, d_probe


def _require_feasible(cert: Certificate) -> None:
    if not cert.feasible:
        raise CertificateNotFeasible(
            f"certificate residual has eigenvalue {cert.verdict.min_eigenvalue:.3e}"
        )


def _success_columns(outputs: np.ndarray, alphas: np.ndarray, etas: np.ndarray) -> np.ndarray:
    cols = [np.sqrt(e) * np.kron(outputs[:, j], alphas[:, j]) for j, e in enumerate(etas)]
    return np.column_stack(cols)


def _dilation(
    input_cols: np.ndarray,
    output_cols: np.ndarray,
    d_out: int,
    gamma: EfficiencyMatrix,
    ancilla: AncillaGram,
    inputs: Sequence[DensityMatrix],
    targets: Sequence[DensityMatrix],
    etas_report: np.ndarray,
) -> SynthesizedDilation:
    alphas = _ancilla_vectors(ancilla.matrix, gamma.etas)
    success = _success_columns(output_cols, alphas, gamma.etas)
    d_anc = success.shape[0] // d_out
    u, betas, d_probe = _build(input_cols, success, d_out, d_anc)
    d_in = input_cols.shape[0]
    dim = d_out * d_anc * d_probe
    emb = np.zeros((dim, d_in), dtype=complex)
    emb[:d_in, :d_in] = np.eye(d_in)
    return SynthesizedDilation(
        U=u, d_in=d_in, d_out=d_out, d_ancilla=d_anc, d_probe=d_probe, embedding=emb,
        probe_success_index=0, alphas=alphas, betas=betas,
        inputs=tuple(inputs), targets=tuple(targets), etas=np.asarray(etas_report, dtype=float),
    )


def synthesize_pure(
    inputs: Sequence[PureState], outputs: Sequence[PureState], cert: Certificate,
) -> SynthesizedDilation:
    """Dilation for a feasible pure -> pure certificate."""
    _require_feasible(cert)
    _check_gram(gram_matrix(list(inputs)).matrix, cert.X, "input")
    _check_gram(gram_matrix(list(outputs)).matrix, cert.Y, "output")
    vin = np.column_stack([s.amplitudes for s in inputs])
    vout = np.column_stack([s.amplitudes for s in outputs])
    return _dilation(
        vin, vout, outputs[0].dim, cert.gamma, cert.ancilla,
        [s.density() for s in inputs], [s.density() for s in outputs], cert.gamma.etas,
    )


def synthesize_pure_to_mixed(
    inputs: Sequence[PureState],
    target_sigmas: Sequence[DensityMatrix],
    cert: Certificate,
    purifications: Sequence[PureState] | None = None,
) -> SynthesizedDilation:
    """Dilation whose success branch carries purifications of the targets.

    The purifying factor becomes part of the ancilla, so tracing out the
    ancilla leaves ``sigma_i`` on the output.
    """
    _require_feasible(cert)
    if purifications is None:
        purifications = [purify(s) for s in target_sigmas]
    _check_gram(gram_matrix(list(inputs)).matrix, cert.X, "input")
    _check_gram(gram_matrix(list(purifications)).matrix, cert.Y, "purification")
    vin = np.column_stack([s.amplitudes for s in inputs])
    vout = np.column_stack([p.amplitudes for p in purifications])
    d_out = target_sigmas[0].dim
    return _dilation(
        vin, vout, d_out, cert.gamma, cert.ancilla,
        [s.density() for s in inputs], list(target_sigmas), cert.gamma.etas,
    )


def synthesize_mixed_to_pure(
    ensembles: Sequence[StateEnsemble], outputs: Sequence[PureState], cert: Certificate,
) -> SynthesizedDilation:
    """Member-level dilation: each ensemble member is one row of the block system."""
    _require_feasible(cert)
    _check_gram(block_gram(ensembles).matrix, cert.X, "input")
    sizes = [len(e) for e in ensembles]
    vin = np.column_stack([e.vectors() for e in ensembles])
    vout = np.column_stack([outputs[i].amplitudes for i, k in enumerate(sizes) for _ in range(k)])
    _check_gram(vout.conj().T @ vout, cert.Y, "output")
    off = np.concatenate([[0], np.cumsum(sizes)])
    per_input = np.array([cert.gamma.etas[off[i]:off[i + 1]].sum() for i in range(len(sizes))])
    return _dilation(
        vin, vout, outputs[0].dim, cert.gamma, cert.ancilla,
        [e.source for e in ensembles], [o.density() for o in outputs], per_input,
    )


def synthesize_composite(
    ensembles: Sequence[StateEnsemble],
    candidate: CompositeOutputEnsemble,
    targets: Sequence[DensityMatrix],
    cert: Certificate,
) -> SynthesizedDilation:
    """Dilation for a checked mixed -> mixed composite-output certificate."""
    _require_feasible(cert)
    _check_gram(block_gram(ensembles).matrix, cert.X, "input")
    vin = np.column_stack([e.vectors() for e in ensembles])
    success = candidate.stacked()
    d_out = candidate.output_dim
    d_anc = candidate.ancilla_dim
    u, betas, d_probe = _build(vin, success, d_out, d_anc)
    d_in = vin.shape[0]
    dim = d_out * d_anc * d_probe
    emb = np.zeros((dim, d_in), dtype=complex)
    emb[:d_in, :d_in] = np.eye(d_in)
    return SynthesizedDilation(
        U=u, d_in=d_in, d_out=d_out, d_ancilla=d_anc, d_probe=d_probe, embedding=emb,
        probe_success_index=0, alphas=np.zeros((0, 0), dtype=complex), betas=betas,
        inputs=tuple(e.source for e in ensembles), targets=tuple(targets),
        etas=np.asarray(candidate.etas, dtype=float),
    )


def simulate(
    dil: SynthesizedDilation, rho_in: DensityMatrix | PureState, target: DensityMatrix | None = None,
) -> SimulationReport:
    """Exact probe-measurement statistics for one input state.

    The success probability is Tr[(I (x) |P0><P0|) U (rho (x) |0><0|) U^dagger];
    the conditional output is the normalized reduced state of the output
    factor on that branch.
    """
    if isinstance(rho_in, PureState):
        rho_in = rho_in.density()
    if rho_in.dim != dil.d_in:
        raise DimMismatch(f"input has dimension {rho_in.dim}, dilation expects {dil.d_in}")
    full = dil.embedding @ rho_in.matrix @ dil.embedding.conj().T
    out = dil.U @ full @ dil.U.conj().T
    d, a, p = dil.d_out, dil.d_ancilla, dil.d_probe
    t = out.reshape(d, a, p, d, a, p)
    k = dil.probe_success_index
    branch = t[:, :, k, :, :, k].reshape(d * a, d * a)
    total = float(np.trace(out).real)
    success = float(np.trace(branch).real)
    success = min(max(success, 0.0), 1.0)
    conditional = None
    fid = None
    if success > 1e-14:
        reduced = partial_trace(branch, [d, a], [0]) / success
        conditional = DensityMatrix.from_matrix(reduced)
        if target is not None:
            fid = fidelity(conditional, target)
    return SimulationReport(success, total - success, conditional, fid)


def simulate_all(dil: SynthesizedDilation) -> list[SimulationReport]:
    """Simulate every certified input against its target."""
    return [simulate(dil, rho, sigma) for rho, sigma in zip(dil.inputs, dil.targets)]


def generalized_cloning(inputs: Sequence[PureState], copies: int) -> tuple[list[PureState], list[PureState]]:
    """Cloning instance: each |phi_i> should become |phi_i>^(x)copies.

    The output Gram is the entrywise power X_ij^copies.
    """
    if copies < 1:
        raise ValueError("copies must be at least 1")
    outputs = []
    for s in inputs:
        v = s.amplitudes
        for _ in range(copies - 1):
            v = np.kron(v, s.amplitudes)
        outputs.append(PureState.from_vector(v))
    return list(inputs), outputs
