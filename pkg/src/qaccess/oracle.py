"""Brute-force references for small instances.

These searches are deliberately naive: they enumerate grids or random
samples and evaluate the defining conditions directly with batched numpy
eigenvalue routines. They share no code with the solver and serve only as
cross-checks for it.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Sequence

import numpy as np

from qaccess.errors import GridTooLarge, ShapeMismatch
from qaccess.states import DensityMatrix, GramMatrix

DEFAULT_CAP = 10_000_000
_CHUNK = 200_000


@dataclasses.dataclass(frozen=True)
class GridSpec:
    resolution: int
    bounds: tuple[float, float] = (-1.0, 1.0)
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"invalid bounds {self.bounds}")

    def axis(self) -> np.ndarray:
        return np.linspace(self.bounds[0], self.bounds[1], self.resolution)

    @property
    def step(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / (self.resolution - 1)

    def check_size(self, points: int) -> None:
        if points > self.cap:
            raise GridTooLarge(f"{points} grid points exceed the cap of {self.cap}")


@dataclasses.dataclass(frozen=True)
class FeasibilitySearch:
    best_min_eigenvalue: float
    ancilla: np.ndarray | None
    grid_slack: float
    points: int

    def feasible(self, tol: float = 1e-9) -> bool:
        return self.best_min_eigenvalue >= -tol


@dataclasses.dataclass(frozen=True)
class OptimumSearch:
    """``grid_slack`` bounds the loss from the success-probability grid only;
    the coarser ancilla grid can cost more when the optimum needs an
    ancilla Gram between grid points."""

    value: float
    etas: np.ndarray
    ancilla: np.ndarray | None
    grid_slack: float


def _arr(m) -> np.ndarray:
    if isinstance(m, GramMatrix):
        m = m.matrix
    return np.asarray(m, dtype=complex)


def _min_eig_batch(mats: np.ndarray) -> np.ndarray:
    if mats.shape[-1] == 2:
        a = mats[..., 0, 0].real
        d = mats[..., 1, 1].real
        b = np.abs(mats[..., 0, 1])
        return (a + d) / 2 - np.sqrt(((a - d) / 2) ** 2 + b**2)
    if mats.shape[-1] == 1:
        return mats[..., 0, 0].real
    if mats.shape[-1] == 3:
        return _min_eig_3x3(mats)
    return np.linalg.eigvalsh(mats)[..., 0]


def _min_eig_3x3(m: np.ndarray) -> np.ndarray:
    # trigonometric solution of the characteristic cubic
    d = np.stack([m[..., i, i].real for i in range(3)], axis=-1)
    off = np.abs(m[..., 0, 1]) ** 2 + np.abs(m[..., 0, 2]) ** 2 + np.abs(m[..., 1, 2]) ** 2
    q = d.sum(axis=-1) / 3
    p2 = ((d - q[..., None]) ** 2).sum(axis=-1) + 2 * off
    p = np.sqrt(p2 / 6)
    safe = np.where(p > 0, p, 1.0)
    b = (m - q[..., None, None] * np.eye(3)) / safe[..., None, None]
    det = np.linalg.det(b).real
    phi = np.arccos(np.clip(det / 2, -1.0, 1.0)) / 3
    return np.where(p > 0, q + 2 * p * np.cos(phi + 2 * np.pi / 3), q)


def ancilla_grid(n: int, grid: GridSpec, complex_entries: bool) -> np.ndarray:
    """All PSD unit-diagonal grid matrices, shape (m, n, n).

    Each off-diagonal entry is either a real grid value or a complex
    re + i*im pair with modulus at most 1.
    """
    pairs = list(itertools.combinations(range(n), 2))
    axis = grid.axis()
    if complex_entries:
        re, im = np.meshgrid(axis, axis, indexing="ij")
        vals = (re + 1j * im).ravel()
        vals = vals[np.abs(vals) <= 1 + 1e-12]
    else:
        vals = axis[np.abs(axis) <= 1 + 1e-12].astype(complex)
    grid.check_size(vals.size ** len(pairs))
    if not pairs:
        return np.ones((1, n, n), dtype=complex)
    combos = np.array(list(itertools.product(vals, repeat=len(pairs))), dtype=complex)
    mats = np.broadcast_to(np.eye(n, dtype=complex), (len(combos), n, n)).copy()
    for c, (k, l) in enumerate(pairs):
        mats[:, k, l] = combos[:, c]
        mats[:, l, k] = np.conj(combos[:, c])
    keep = _min_eig_batch(mats) >= -1e-12
    return mats[keep]


def _is_real(*ms: np.ndarray) -> bool:
    return all(np.max(np.abs(m.imag), initial=0.0) <= 1e-14 for m in ms)


def _best_over(x: np.ndarray, weighted_y: np.ndarray, grid_a: np.ndarray) -> tuple[float, int]:
    best, arg = -np.inf, -1
    for start in range(0, len(grid_a), _CHUNK):
        chunk = grid_a[start:start + _CHUNK]
        lam = _min_eig_batch(x[None] - weighted_y[None] * chunk)
        j = int(np.argmax(lam))
        if lam[j] > best:
            best, arg = float(lam[j]), start + j
    return best, arg


def brute_force_feasible_A(X, Y, gamma, grid: GridSpec) -> FeasibilitySearch:
    """Best residual min-eigenvalue over a grid of ancilla Gram matrices.

    For real X and Y a real grid suffices: the real part of a valid complex
    ancilla Gram is itself valid and gives the real part of the residual,
    which stays PSD.
    """
    x, y = _arr(X), _arr(Y)
    n = x.shape[0]
    if n > 3:
        raise ShapeMismatch("the brute-force oracle handles at most 3 states")
    if y.shape != x.shape:
        raise ShapeMismatch("X and Y differ in shape")
    etas = np.asarray(gamma, dtype=float).reshape(-1)
    s = np.sqrt(np.clip(etas, 0, None))
    wy = np.outer(s, s) * y
    grid_a = ancilla_grid(n, grid, complex_entries=not _is_real(x, y))
    best, arg = _best_over(x, wy, grid_a)
    # entrywise perturbation bound: min-eig moves by at most (n-1)*max|wy|*step/2
    slack = (n - 1) * float(np.max(np.abs(wy))) * grid.step / 2 * (np.sqrt(2) if not _is_real(x, y) else 1)
    return FeasibilitySearch(best, grid_a[arg] if arg >= 0 else None, slack, len(grid_a))


def brute_force_optimal_eta(
    X, Y, priors: Sequence[float] | None, grid: GridSpec, eta_resolution: int | None = None,
    ancilla=None, tol: float = 1e-9,
) -> OptimumSearch:
    """Largest average success over a grid of success probabilities.

    Points are visited in decreasing order of the objective and the first
    one admitting a grid ancilla Gram (or the fixed ``ancilla``) wins.
    """
    x, y = _arr(X), _arr(Y)
    n = x.shape[0]
    if n > 3:
        raise ShapeMismatch("the brute-force oracle handles at most 3 states")
    p = np.full(n, 1.0 / n) if priors is None else np.asarray(priors, dtype=float)
    res = eta_resolution or grid.resolution
    axis = np.linspace(0.0, 1.0, res)
    if ancilla is None:
        grid_a = ancilla_grid(n, grid, complex_entries=not _is_real(x, y))
    else:
        grid_a = np.asarray(ancilla, dtype=complex)[None]
    etas = np.array(list(itertools.product(axis, repeat=n)))
    values = etas @ p
    order = np.argsort(-values, kind="stable")
    slack = float(np.max(p)) * (axis[1] - axis[0]) * n
    batch = max(1, _CHUNK // len(grid_a))
    evaluated = 0
    for start in range(0, len(order), batch):
        idx = order[start:start + batch]
        evaluated += len(idx) * len(grid_a)
        grid.check_size(evaluated)
        s = np.sqrt(etas[idx])
        wy = s[:, :, None] * s[:, None, :] * y[None]
        lam = _min_eig_batch(x[None, None] - wy[:, None] * grid_a[None])
        best = lam.max(axis=1)
        hits = np.flatnonzero(best >= -tol)
        if hits.size:
            h = hits[0]
            e = etas[idx[h]]
            return OptimumSearch(float(values[idx[h]]), e, grid_a[int(np.argmax(lam[h]))], slack)
    raise AssertionError("eta = 0 is always feasible")


def _haar_unitaries(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    # rounding-level eigenvalues would otherwise contribute ~sqrt(eps)
    w[w <= 10 * len(w) * np.finfo(float).eps * max(w[-1], 0.0)] = 0.0
    return (v * np.sqrt(w)) @ v.conj().T


def _expi(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


def purification_overlap_search(
    r1: DensityMatrix, r2: DensityMatrix, samples: int = 2000, seed: int = 0,
    refine_steps: int = 2000,
) -> float:
    """Largest |<phi_1|phi_2>| over sampled purifications.

    Both states are purified canonically as vec(sqrt(rho)); the second
    purification is rotated by a unitary on the purifying factor, which
    turns the overlap into |Tr(K U)| with K = sqrt(rho_1)^dagger sqrt(rho_2).
    Haar samples give a starting point that is then improved by ascent
    along the unitary orbit, halving the step whenever a move fails.
    """
    if r1.dim != r2.dim:
        raise ShapeMismatch("states have different dimensions")
    d = r1.dim
    k = _sqrt_psd(r1.matrix).conj().T @ _sqrt_psd(r2.matrix)
    rng = np.random.default_rng(seed)
    us = _haar_unitaries(rng, samples, d)
    overlaps = np.abs(np.einsum("ij,sji->s", k, us))
    j = int(np.argmax(overlaps))
    u, best = us[j], float(overlaps[j])
    step = 1.0
    for _ in range(refine_steps):
        if step < 1e-12:
            break
        m = u @ k
        m = m * np.exp(-1j * np.angle(np.trace(m)))
        cand = _expi(step * 0.5j * (m - m.conj().T)) @ u
        val = float(abs(np.trace(k @ cand)))
        if val > best:
            u, best = cand, val
            step *= 1.5
        else:
            step *= 0.5
    return best
