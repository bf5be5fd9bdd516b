"""Shared generators and independent reference computations for the tests.

References here use numpy's LAPACK routines directly so that they do not
share code paths with the package's own Jacobi eigensolver.
"""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from qaccess.states import DensityMatrix, PureState

GOLDEN_INPUTS = ([2, 1, 1], [1, 3, 1], [1, 1, 4])
GOLDEN_OUTPUTS = ([10, 1, 1], [1, 10, 1], [1, 1, 10])
GOLDEN_ETAS = (0.1570, 0.4342, 0.5453)
GOLDEN_A_TILDE = np.array(
    [
        [0.15703, 0.23294, 0.26431],
        [0.23294, 0.43424, 0.29772],
        [0.26431, 0.29772, 0.54523],
    ]
)
GOLDEN_EIGENVALUES = (0.0, 0.1874, 0.9491)
GOLDEN_P = 0.3788


def golden_states():
    ins = [PureState.from_vector(v) for v in GOLDEN_INPUTS]
    outs = [PureState.from_vector(v) for v in GOLDEN_OUTPUTS]
    return ins, outs


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    r = n if rank is None else rank
    g = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    return g @ g.conj().T


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure(rng: np.random.Generator, d: int, real: bool = False) -> PureState:
    v = rng.standard_normal(d) + (0 if real else 1j * rng.standard_normal(d))
    return PureState.from_vector(v)


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> DensityMatrix:
    m = random_psd(rng, d, rank)
    return DensityMatrix(m / np.trace(m).real)


def ref_min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def ref_sqrtm(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    # rounding-level eigenvalues would otherwise contribute ~sqrt(eps)
    w[w <= 10 * len(w) * np.finfo(float).eps * max(w[-1], 0.0)] = 0.0
    return (v * np.sqrt(w)) @ v.conj().T


def ref_fidelity(r1: np.ndarray, r2: np.ndarray) -> float:
    """Sum of singular values of sqrt(r1) sqrt(r2)."""
    return float(np.sum(np.linalg.svd(ref_sqrtm(r1) @ ref_sqrtm(r2), compute_uv=False)))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
