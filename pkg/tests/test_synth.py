import numpy as np
import pytest
from hypothesis import given, settings

from qaccess import sdp
from qaccess.certify import (
    AncillaGram,
    check_deterministic_mixed_to_pure,
    check_mixed_to_pure,
    check_pure_feasible,
    check_pure_to_mixed,
)
from qaccess.errors import CertificateNotFeasible, DimMismatch, GramMismatch
from qaccess.states import (
    DensityMatrix,
    PureState,
    StateEnsemble,
    block_gram,
    gram_matrix,
    spectral_decompose,
)
from qaccess.synth import (
    generalized_cloning,
    simulate,
    simulate_all,
    synthesize_mixed_to_pure,
    synthesize_pure,
    synthesize_pure_to_mixed,
)

from helpers import GOLDEN_ETAS, golden_states, random_pure, random_unitary, seeds


def _half_overlap_pair():
    return [PureState.from_vector([1, 0]), PureState.from_vector([0.5, np.sqrt(3) / 2])]


def _basis(d, k):
    v = np.zeros(d)
    v[k] = 1
    return PureState.from_vector(v)


def _check_invariants(dil, cert, tol=1e-8):
    assert dil.unitarity_defect() <= 1e-9
    alphas = dil.alphas
    a = alphas.conj().T @ alphas
    live = cert.gamma.etas > 1e-10
    np.testing.assert_allclose(a[np.ix_(live, live)], cert.ancilla.matrix[np.ix_(live, live)], atol=tol)
    b = dil.betas.conj().T @ dil.betas
    np.testing.assert_allclose(b, cert.residual, atol=tol)
    assert dil.betas.shape[0] + 1 <= dil.d_probe


def test_identity_dilation():
    rng = np.random.default_rng(0)
    ins = [random_pure(rng, 3) for _ in range(3)]
    x = gram_matrix(ins)
    cert = check_pure_feasible(x, x, [1, 1, 1], AncillaGram.ones(3))
    dil = synthesize_pure(ins, ins, cert)
    assert dil.d_probe == 1
    assert dil.betas.shape[0] == 0
    for rep in simulate_all(dil):
        assert abs(rep.success_probability - 1) < 1e-12
        assert rep.fidelity_to_target >= 1 - 1e-12
        assert abs(rep.failure_probability) < 1e-12


def test_unambiguous_dilation():
    ins = _half_overlap_pair()
    outs = [_basis(2, 0), _basis(2, 1)]
    cert = check_pure_feasible(gram_matrix(ins), gram_matrix(outs), [0.5, 0.5], np.eye(2))
    dil = synthesize_pure(ins, outs, cert)
    assert dil.d_probe == 2
    _check_invariants(dil, cert)
    reps = simulate_all(dil)
    for i, rep in enumerate(reps):
        assert abs(rep.success_probability - 0.5) < 1e-12
        np.testing.assert_allclose(rep.conditional_output.matrix, outs[i].density().matrix, atol=1e-12)
        assert abs(rep.success_probability + rep.failure_probability - 1) < 1e-10
    overlap = np.trace(reps[0].conditional_output.matrix @ reps[1].conditional_output.matrix).real
    assert overlap < 1e-12


def test_golden_dilation():
    ins, outs = golden_states()
    _, cert = sdp.certified_optimum(gram_matrix(ins), gram_matrix(outs))
    dil = synthesize_pure(ins, outs, cert)
    _check_invariants(dil, cert)
    reps = simulate_all(dil)
    for rep, eta in zip(reps, GOLDEN_ETAS):
        assert abs(rep.success_probability - eta) < 2e-3
        assert rep.fidelity_to_target >= 1 - 1e-6
    for rep, eta in zip(reps, cert.gamma.etas):
        assert abs(rep.success_probability - eta) < 1e-8


def test_rejects_infeasible_or_mismatched_certificates():
    ins = _half_overlap_pair()
    outs = [_basis(2, 0), _basis(2, 1)]
    bad = check_pure_feasible(gram_matrix(ins), gram_matrix(outs), [0.7, 0.7], np.eye(2))
    with pytest.raises(CertificateNotFeasible):
        synthesize_pure(ins, outs, bad)
    good = check_pure_feasible(gram_matrix(ins), gram_matrix(outs), [0.5, 0.5], np.eye(2))
    with pytest.raises(GramMismatch):
        synthesize_pure(outs, outs, good)


def test_prepare_maximally_mixed():
    zero = PureState.from_vector([1, 0])
    sigma = DensityMatrix(np.eye(2) / 2)
    bell = PureState.from_vector([1, 0, 0, 1])
    cert = check_pure_to_mixed(gram_matrix([zero]), [bell], [1.0], targets=[sigma])
    dil = synthesize_pure_to_mixed([zero], [sigma], cert, [bell])
    rep = simulate(dil, zero, sigma)
    assert abs(rep.success_probability - 1) < 1e-12
    np.testing.assert_allclose(rep.conditional_output.matrix, np.eye(2) / 2, atol=1e-9)


def test_pure_to_mixed_end_to_end():
    a = np.arctan(np.sqrt(0.2 / 0.8))
    t = a + np.arccos(0.9)
    phis = [PureState.from_vector([np.cos(u), 0, 0, np.sin(u)]) for u in (a, t)]
    sigmas = [DensityMatrix(np.diag([np.cos(u) ** 2, np.sin(u) ** 2])) for u in (a, t)]
    ins = [PureState.from_vector([1, 0]), PureState.from_vector([0.6, 0.8])]
    x = gram_matrix(ins).matrix
    # solver certificate (ancilla states extend the purifications) and the
    # fixed-purification certificate just below its threshold
    _, opt = sdp.certified_optimum(x, gram_matrix(phis).matrix)
    edge = 16 / 19 - 1e-9
    fixed = check_pure_to_mixed(x, phis, [edge, edge], targets=sigmas)
    assert fixed.feasible
    for cert in (opt, fixed):
        dil = synthesize_pure_to_mixed(ins, sigmas, cert, phis)
        for rep, sigma, eta in zip(simulate_all(dil), sigmas, cert.gamma.etas):
            diff = rep.conditional_output.matrix - sigma.matrix
            assert 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))) <= 1e-6
            assert abs(rep.success_probability - eta) < 1e-8


def test_pure_targets_match_pure_synthesis():
    rng = np.random.default_rng(2)
    ins = [random_pure(rng, 3) for _ in range(2)]
    outs = [random_pure(rng, 3) for _ in range(2)]
    _, cert = sdp.certified_optimum(gram_matrix(ins), gram_matrix(outs))
    pm = check_pure_to_mixed(gram_matrix(ins), outs, cert.gamma, targets=[o.density() for o in outs])
    if pm.feasible:
        a = simulate_all(synthesize_pure_to_mixed(ins, [o.density() for o in outs], pm, outs))
        b = simulate_all(synthesize_pure(ins, outs, pm))
        for ra, rb in zip(a, b):
            assert abs(ra.success_probability - rb.success_probability) < 1e-10
            np.testing.assert_allclose(ra.conditional_output.matrix, rb.conditional_output.matrix, atol=1e-8)


def test_mixed_to_pure_singletons_match_pure():
    rng = np.random.default_rng(3)
    ins = [random_pure(rng, 3) for _ in range(3)]
    outs = [random_pure(rng, 3) for _ in range(3)]
    _, cert = sdp.certified_optimum(gram_matrix(ins), gram_matrix(outs))
    ens = [StateEnsemble.singleton(s) for s in ins]
    mcert = check_mixed_to_pure(ens, gram_matrix(outs), cert.gamma, cert.ancilla)
    a = simulate_all(synthesize_mixed_to_pure(ens, outs, mcert))
    b = simulate_all(synthesize_pure(ins, outs, cert))
    for ra, rb in zip(a, b):
        assert abs(ra.success_probability - rb.success_probability) < 1e-10
        assert abs(ra.fidelity_to_target - rb.fidelity_to_target) < 1e-8


def test_mixed_to_pure_deterministic():
    rng = np.random.default_rng(4)
    u = random_unitary(rng, 4)
    w1, w2 = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
    r1 = DensityMatrix((u[:, :2] * w1) @ u[:, :2].conj().T)
    r2 = DensityMatrix((u[:, 2:] * w2) @ u[:, 2:].conj().T)
    ens = [spectral_decompose(r1), spectral_decompose(r2)]
    outs = [PureState.from_vector([1, 0]), PureState.from_vector([0.6, 0.8])]
    det = check_deterministic_mixed_to_pure(ens, gram_matrix(outs))
    assert det.feasible
    gamma = np.concatenate([e.weights for e in ens])
    cert = check_mixed_to_pure(ens, gram_matrix(outs), gamma, det.ancilla)
    dil = synthesize_mixed_to_pure(ens, outs, cert)
    for rep in simulate_all(dil):
        assert abs(rep.success_probability - 1) < 1e-8
        assert rep.fidelity_to_target >= 1 - 1e-8


def test_mixed_to_pure_rank_two_members():
    rng = np.random.default_rng(5)
    u = random_unitary(rng, 4)
    rhos = [DensityMatrix(u @ np.diag(w) @ u.conj().T) for w in ([0.7, 0.3, 0, 0], [0, 0, 0.4, 0.6])]
    ens = [spectral_decompose(r) for r in rhos]
    outs = [PureState.from_vector([1, 0]), PureState.from_vector([0, 1])]
    xt = block_gram(ens)
    _, cert = sdp.certified_optimum(xt, gram_matrix(outs), block_sizes=xt.block_row_sizes)
    dil = synthesize_mixed_to_pure(ens, outs, cert)
    for rep in simulate_all(dil):
        assert abs(rep.success_probability - 1) < 1e-6
        assert rep.fidelity_to_target >= 1 - 1e-8


def test_identical_inputs_fail_entirely():
    rho = DensityMatrix(np.diag([0.6, 0.4]))
    ens = [spectral_decompose(rho), spectral_decompose(rho)]
    outs = [PureState.from_vector([1, 0]), PureState.from_vector([0, 1])]
    cert = check_mixed_to_pure(ens, gram_matrix(outs), np.zeros(4), np.eye(4))
    dil = synthesize_mixed_to_pure(ens, outs, cert)
    for rep in simulate_all(dil):
        assert rep.success_probability < 1e-12
        assert rep.conditional_output is None
        assert abs(rep.failure_probability - 1) < 1e-10


def test_superposition_input_is_simulated():
    ins = _half_overlap_pair()
    outs = [_basis(2, 0), _basis(2, 1)]
    cert = check_pure_feasible(gram_matrix(ins), gram_matrix(outs), [0.5, 0.5], np.eye(2))
    dil = synthesize_pure(ins, outs, cert)
    sup = PureState.from_vector(ins[0].amplitudes + ins[1].amplitudes)
    rep = simulate(dil, sup)
    assert 0 <= rep.success_probability <= 1
    assert abs(rep.success_probability + rep.failure_probability - 1) < 1e-10
    assert rep.fidelity_to_target is None
    with pytest.raises(DimMismatch):
        simulate(dil, PureState.from_vector([1, 0, 0]))


def _ancilla_free_optimum(x, y) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if check_pure_feasible(x, y, [mid, mid], np.ones((2, 2))).feasible:
            lo = mid
        else:
            hi = mid
    return lo


def test_cloning_instances():
    ins = [PureState.from_vector([1, 0]), PureState.from_vector([0.8, 0.6])]
    _, outs = generalized_cloning(ins, 1)
    x = gram_matrix(ins).matrix
    _, cert = sdp.certified_optimum(x, gram_matrix(outs))
    assert abs(cert.avg_success - 1) < 1e-6

    _, outs = generalized_cloning(ins, 2)
    y = gram_matrix(outs).matrix
    assert abs(y[0, 1] - 0.64) < 1e-12
    _, cert = sdp.certified_optimum(x, y)
    assert cert.avg_success >= _ancilla_free_optimum(x, y) - 1e-6
    dil = synthesize_pure(ins, outs, cert)
    for rep, eta in zip(simulate_all(dil), cert.gamma.etas):
        assert abs(rep.success_probability - eta) < 1e-8
        assert rep.fidelity_to_target >= 1 - 1e-8

    for s in (0.3, 0.5, 0.7):
        pair = [PureState.from_vector([1, 0]), PureState.from_vector([s, np.sqrt(1 - s * s)])]
        _, outs = generalized_cloning(pair, 20)
        _, cert = sdp.certified_optimum(gram_matrix(pair), gram_matrix(outs))
        assert abs(cert.avg_success - (1 - s)) < 1e-3
    with pytest.raises(ValueError):
        generalized_cloning(ins, 0)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_random_certificates_are_realized(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    d = int(rng.integers(n, 5))
    ins = [random_pure(rng, d) for _ in range(n)]
    d_out = int(rng.integers(2, 5))
    outs = [random_pure(rng, d_out) for _ in range(n)]
    p = rng.dirichlet(np.ones(n))
    _, cert = sdp.certified_optimum(gram_matrix(ins), gram_matrix(outs), p)
    dil = synthesize_pure(ins, outs, cert)
    _check_invariants(dil, cert)
    imgs = dil.U @ dil.embedding @ np.column_stack([s.amplitudes for s in ins])
    np.testing.assert_allclose(imgs.conj().T @ imgs, cert.X, atol=1e-8)
    for rep, eta in zip(simulate_all(dil), cert.gamma.etas):
        assert abs(rep.success_probability - eta) < 1e-8
        assert abs(rep.success_probability + rep.failure_probability - 1) < 1e-10
        if eta > 1e-6:
            assert rep.fidelity_to_target >= 1 - 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_dependent_inputs_are_realized(seed):
    rng = np.random.default_rng(seed)
    ins = [random_pure(rng, 2) for _ in range(3)]
    outs = [random_pure(rng, 3) for _ in range(3)]
    _, cert = sdp.certified_optimum(gram_matrix(ins), gram_matrix(outs))
    dil = synthesize_pure(ins, outs, cert)
    assert dil.unitarity_defect() <= 1e-9
    for rep, eta in zip(simulate_all(dil), cert.gamma.etas):
        assert abs(rep.success_probability - eta) < 1e-6
