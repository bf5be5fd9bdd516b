"""End-to-end workflows behind the command line.

Each workflow turns a :class:`ProblemFile` into a :class:`Report`, an
ordered mapping of result fields plus an exit status. Every number placed
in a report comes from a certificate that was re-checked with the
package's own eigensolver after the interior-point solver finished.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Sequence

import numpy as np

from qaccess import certify, linalg, sdp, synth
from qaccess.certify import AncillaGram, Certificate, CompositeOutputEnsemble, EfficiencyMatrix, Status
from qaccess.config import get_tolerances
from qaccess.errors import ParseError
from qaccess.fileio import ProblemFile
from qaccess.oracle import purification_overlap_search
from qaccess.states import (
    DensityMatrix,
    GramMatrix,
    PureState,
    StateEnsemble,
    block_gram,
    fidelity,
    gram_matrix,
    purify,
    spectral_decompose,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_UNDETERMINED = 3

_EXIT = {Status.FEASIBLE: EXIT_OK, Status.INFEASIBLE: EXIT_INFEASIBLE, Status.UNDETERMINED: EXIT_UNDETERMINED}


@dataclasses.dataclass
class Report:
    command: str
    status: str
    fields: dict[str, Any] = dataclasses.field(default_factory=dict)
    exit_code: int = EXIT_OK
    certificate: Certificate | None = None
    dilation: synth.SynthesizedDilation | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"command": self.command, "status": self.status, **self.fields}


def _density(s) -> DensityMatrix:
    return s.density() if isinstance(s, PureState) else s


def _ensemble(s) -> StateEnsemble:
    return StateEnsemble.singleton(s) if isinstance(s, PureState) else spectral_decompose(s)


def _outputs(problem: ProblemFile) -> list:
    if problem.mode == "cloning":
        return synth.generalized_cloning(list(problem.inputs), problem.copies)[1]
    return list(problem.outputs)


def _mixed_inputs(problem: ProblemFile) -> bool:
    return not all(isinstance(s, PureState) or s.is_pure() for s in problem.inputs)


def _member_totals(etas: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    off = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    return np.array([etas[off[i]:off[i + 1]].sum() for i in range(len(sizes))])


@dataclasses.dataclass
class _Setup:
    """Member-level Gram data for any mode."""

    X: np.ndarray
    Y: np.ndarray           # one row per input (not expanded)
    block_sizes: tuple[int, ...] | None
    ensembles: list[StateEnsemble]
    out_states: list        # output vectors used in Y (pure outputs or purifications)
    targets: list[DensityMatrix]
    restricted: bool        # True when the search covers only canonical purifications


def _setup(problem: ProblemFile) -> _Setup:
    mode = problem.mode
    if mode == "unambiguous":
        outs = [PureState(np.eye(problem.n)[i]) for i in range(problem.n)]
    elif mode in ("pure_to_mixed", "mixed_to_mixed"):
        outs = [s if isinstance(s, PureState) else purify(s) for s in problem.outputs]
    else:
        outs = _outputs(problem)
    targets = [_density(s) for s in (problem.outputs if mode in ("pure_to_mixed", "mixed_to_mixed") else outs)]
    y = gram_matrix(outs).matrix
    restricted = mode in ("pure_to_mixed", "mixed_to_mixed") and not all(
        isinstance(s, PureState) for s in problem.outputs
    )
    ensembles = [_ensemble(s) for s in problem.inputs]
    if all(len(e) == 1 for e in ensembles) and all(isinstance(s, PureState) or s.is_pure() for s in problem.inputs):
        x = gram_matrix([PureState(e.unit_vectors()[:, 0]) for e in ensembles]).matrix
        return _Setup(x, y, None, ensembles, outs, targets, restricted)
    xt = block_gram(ensembles)
    return _Setup(xt.matrix, y, xt.block_row_sizes, ensembles, outs, targets, restricted)


def _bound_fields(problem: ProblemFile) -> dict[str, Any]:
    if problem.n != 2:
        return {}
    p1, p2 = problem.prior_weights().probabilities
    r1, r2 = (_density(s) for s in problem.inputs)
    f_in = fidelity(r1, r2)
    if problem.mode == "unambiguous":
        f_out = 0.0
    else:
        o1, o2 = (_density(s) for s in (problem.outputs if problem.outputs else _outputs(problem)))
        f_out = fidelity(o1, o2)
    return {
        "input_fidelity": f_in,
        "output_fidelity": f_out,
        "two_state_bound": certify.two_state_bound(p1, p2, min(f_in, 1.0), min(f_out, 1.0)),
        "orthogonal_output_bound": certify.two_state_bound(p1, p2, min(f_in, 1.0), 0.0),
    }


def _certificate_fields(cert: Certificate, block_sizes, priors) -> dict[str, Any]:
    etas = cert.gamma.etas
    fields: dict[str, Any] = {"P": cert.avg_success}
    if block_sizes:
        fields["success_per_input"] = _member_totals(etas, block_sizes)
        fields["gamma_members"] = etas
    else:
        fields["gamma"] = etas
    if cert.ancilla is not None:
        s = np.sqrt(etas)
        fields["A"] = cert.ancilla.matrix
        fields["A_tilde"] = np.outer(s, s) * cert.ancilla.matrix
    fields["residual_min_eigenvalue"] = cert.verdict.min_eigenvalue
    return fields


def _reverify(cert: Certificate, priors: np.ndarray, block_sizes) -> None:
    """Recompute the residual and the objective from scratch."""
    if cert.ancilla is None:
        return
    resid = cert.recompute_residual()
    verdict = linalg.is_psd(resid)
    if verdict.is_psd != cert.verdict.is_psd:
        raise AssertionError("independent residual check disagrees with the certificate")
    totals = _member_totals(cert.gamma.etas, block_sizes) if block_sizes else cert.gamma.etas
    if abs(float(priors @ totals) - cert.avg_success) > 1e-12:
        raise AssertionError("reported success probability does not match the certificate")


def _block_gram(setup: _Setup) -> GramMatrix:
    sizes = setup.block_sizes or (1,) * setup.X.shape[0]
    return GramMatrix(setup.X, tuple(sizes))


def _composite_from(setup: _Setup, cert: Certificate, out_dim: int) -> CompositeOutputEnsemble:
    """Success-branch vectors sqrt(eta_k) |phi_i> (x) |alpha_k> per member."""
    alphas = linalg.factor_gram(cert.ancilla.matrix)
    if alphas.shape[0] == 0:
        alphas = np.ones((1, len(cert.gamma)), dtype=complex)
    sizes = setup.block_sizes or (1,) * len(setup.ensembles)
    vectors, j = [], 0
    for i, k in enumerate(sizes):
        rows = []
        for _ in range(k):
            rows.append(np.sqrt(cert.gamma.etas[j]) * np.kron(setup.out_states[i].amplitudes, alphas[:, j]))
            j += 1
        vectors.append(np.array(rows))
    return CompositeOutputEnsemble(tuple(vectors), _member_totals(cert.gamma.etas, sizes), out_dim)


def solve(problem: ProblemFile, gap_tol: float | None = None) -> Report:
    if problem.mode == "deterministic_check":
        return check(problem)
    setup = _setup(problem)
    priors = problem.prior_weights()
    sol, cert = sdp.certified_optimum(setup.X, setup.Y, priors, gap_tol, block_sizes=setup.block_sizes)
    _reverify(cert, priors.probabilities, setup.block_sizes)
    fields = _certificate_fields(cert, setup.block_sizes, priors)
    fields["solver_status"] = sol.status.value
    fields["solver_iterations"] = sol.iterations
    fields["duality_gap"] = sol.duality_gap
    if setup.block_sizes is None and problem.mode != "unambiguous":
        fields["ancilla_required"] = certify.ancilla_required(setup.X, setup.Y, cert.gamma)
    if setup.restricted:
        fields["note"] = "lower bound over canonical output purifications"
    if problem.mode == "mixed_to_mixed":
        out_dim = problem.outputs[0].dim
        cand = _composite_from(setup, cert, out_dim)
        mm = certify.check_mixed_to_mixed(
            _block_gram(setup), cand, setup.targets, priors.probabilities,
        )
        fields["composite_check_min_eigenvalue"] = mm.verdict.min_eigenvalue
        if not mm.feasible:
            cert = dataclasses.replace(cert, verdict=mm.verdict)
    fields.update(_bound_fields(problem))
    near = sol.status is sdp.SdpStatus.STALLED and sol.duality_gap <= np.sqrt(get_tolerances().gap)
    if near:
        fields["solver_note"] = (
            "the solver stopped short of its gap target; "
            "P is certified and within the reported duality gap of optimal"
        )
    ok = cert.feasible and (sol.optimal or near)
    status = "solved" if ok else "undetermined"
    return Report("solve", status, fields, EXIT_OK if ok else EXIT_UNDETERMINED, certificate=cert)


def _require_gamma(problem: ProblemFile, length: int) -> EfficiencyMatrix:
    if problem.gamma is None:
        raise ParseError("check needs fixed success probabilities", "gamma")
    if problem.gamma.size != length:
        raise ParseError(f"expected {length} success probabilities, got {problem.gamma.size}", "gamma")
    return EfficiencyMatrix(problem.gamma)


def check(problem: ProblemFile) -> Report:
    mode = problem.mode
    if mode == "deterministic_check":
        if _mixed_inputs(problem):
            res = certify.check_deterministic_mixed_to_pure([_ensemble(s) for s in problem.inputs], gram_matrix(list(problem.outputs)))
        else:
            x = gram_matrix(_pure_states(problem.inputs))
            res = certify.check_deterministic_pure(x, gram_matrix(list(problem.outputs)))
        fields = {"min_eigenvalue": res.min_eigenvalue}
        if res.candidate is not None:
            fields["A_candidate"] = res.candidate
        if res.reason:
            fields["reason"] = res.reason
        return Report("check", res.status.value, fields, _EXIT[res.status])

    if mode == "mixed_to_mixed":
        if problem.composite is None:
            raise ParseError("mixed_to_mixed check needs composite_ensembles", "composite_ensembles")
        setup = _setup(problem)
        cert = certify.check_mixed_to_mixed(
            _block_gram(setup), problem.composite, setup.targets, problem.prior_weights().probabilities,
        )
        fields = {
            "P": cert.avg_success,
            "success_per_input": cert.gamma.etas,
            "residual_min_eigenvalue": cert.verdict.min_eigenvalue,
        }
        status = Status.FEASIBLE if cert.feasible else Status.INFEASIBLE
        return Report("check", status.value, fields, _EXIT[status], certificate=cert)

    setup = _setup(problem)
    priors = problem.prior_weights()
    sizes = setup.block_sizes
    n_rows = setup.X.shape[0]
    gamma = _require_gamma(problem, n_rows)
    y_rows = certify.expand_output_gram(setup.Y, sizes) if sizes else setup.Y
    fields: dict[str, Any] = {}
    if problem.ancilla_gram is not None:
        ancilla = AncillaGram(problem.ancilla_gram)
        fields["ancilla_source"] = "given"
    else:
        probe = sdp.feasibility_probe(setup.X, y_rows, gamma)
        fields["probe_margin"] = probe.margin
        ancilla = probe.ancilla if probe.feasible else AncillaGram.ones(n_rows)
        fields["ancilla_source"] = "searched" if probe.feasible else "none found"
    cert = certify.check_pure_feasible(setup.X, y_rows, gamma, ancilla)
    weights = priors.expand(sizes) if sizes else priors.probabilities
    cert = dataclasses.replace(cert, avg_success=float(weights @ gamma.etas), block_sizes=tuple(sizes or ()))
    _reverify(cert, priors.probabilities, sizes)
    fields.update(_certificate_fields(cert, sizes, priors))
    if sizes is None and mode != "unambiguous" and cert.feasible:
        fields["ancilla_required"] = certify.ancilla_required(setup.X, setup.Y, gamma)
    if cert.feasible:
        status = Status.FEASIBLE
    elif setup.restricted:
        # another choice of purifications might still succeed
        status = Status.UNDETERMINED
        fields["note"] = "only canonical output purifications were tried"
    else:
        status = Status.INFEASIBLE
    return Report("check", status.value, fields, _EXIT[status], certificate=cert)


def _pure_states(states) -> list[PureState]:
    out = []
    for s in states:
        if isinstance(s, PureState):
            out.append(s)
        else:
            ens = spectral_decompose(s)
            out.append(PureState(ens.unit_vectors()[:, 0]))
    return out


def bounds(problem: ProblemFile, seed: int = 0) -> Report:
    if problem.n != 2:
        raise ParseError("bounds are defined for exactly two inputs", "inputs")
    fields = _bound_fields(problem)
    r1, r2 = (_density(s) for s in problem.inputs)
    if not (r1.is_pure() and r2.is_pure()) and r1.dim <= 4:
        fields["purification_overlap_search"] = purification_overlap_search(r1, r2, seed=seed)
    return Report("bounds", "computed", fields, EXIT_OK)


def synthesize(problem: ProblemFile, gap_tol: float | None = None) -> Report:
    """Solve (or check, when gamma is fixed) and build the dilation."""
    if problem.mode == "deterministic_check":
        raise ParseError("synthesis needs a mode with a success-probability certificate", "mode")
    if problem.mode == "mixed_to_mixed":
        rep = check(problem) if problem.composite is not None else solve(problem, gap_tol)
    else:
        rep = check(problem) if problem.gamma is not None else solve(problem, gap_tol)
    cert = rep.certificate
    if cert is None or not cert.feasible:
        return rep
    setup = _setup(problem)
    mode = problem.mode
    if mode == "mixed_to_mixed":
        cand = problem.composite or _composite_from(setup, cert, problem.outputs[0].dim)
        if problem.composite is None:
            cert = certify.check_mixed_to_mixed(
                _block_gram(setup), cand, setup.targets, problem.prior_weights().probabilities,
            )
        dil = synth.synthesize_composite(setup.ensembles, cand, setup.targets, cert)
    elif setup.block_sizes is not None:
        dil = synth.synthesize_mixed_to_pure(setup.ensembles, setup.out_states, cert)
        dil = dataclasses.replace(dil, inputs=tuple(_density(s) for s in problem.inputs))
    elif mode == "pure_to_mixed":
        ins = [PureState(e.unit_vectors()[:, 0]) for e in setup.ensembles]
        dil = synth.synthesize_pure_to_mixed(ins, setup.targets, cert, setup.out_states)
    else:
        ins = [PureState(e.unit_vectors()[:, 0]) for e in setup.ensembles]
        dil = synth.synthesize_pure(ins, setup.out_states, cert)
    sims = synth.simulate_all(dil)
    fields = dict(rep.fields)
    fields.update(
        {
            "dims": {"d_in": dil.d_in, "d_out": dil.d_out, "d_ancilla": dil.d_ancilla, "d_probe": dil.d_probe},
            "unitarity_defect": dil.unitarity_defect(),
            "simulated_success": np.array([s.success_probability for s in sims]),
            "simulated_fidelity": np.array([s.fidelity_to_target if s.fidelity_to_target is not None else np.nan for s in sims]),
        }
    )
    return Report("synthesize", "synthesized", fields, EXIT_OK, certificate=cert, dilation=dil)


def simulate(dil: synth.SynthesizedDilation, state=None) -> Report:
    if state is not None:
        rep = synth.simulate(dil, state)
        fields = {
            "success_probability": rep.success_probability,
            "failure_probability": rep.failure_probability,
        }
        if rep.conditional_output is not None:
            fields["conditional_output"] = rep.conditional_output.matrix
        return Report("simulate", "simulated", fields, EXIT_OK)
    sims = synth.simulate_all(dil)
    fields = {
        "success_probability": np.array([s.success_probability for s in sims]),
        "failure_probability": np.array([s.failure_probability for s in sims]),
        "fidelity_to_target": np.array([s.fidelity_to_target if s.fidelity_to_target is not None else np.nan for s in sims]),
        "certified_success": dil.etas,
    }
    return Report("simulate", "simulated", fields, EXIT_OK)
