"""Shared numerical tolerances.

Every "is this matrix positive semidefinite" decision in the package goes
through :func:`get_tolerances`, so a single override (for instance the
CLI's ``--tol``) changes the meaning of ``>= 0`` everywhere at once.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from typing import Iterator


@dataclasses.dataclass(frozen=True)
class Tolerances:
    #: relative PSD tolerance, scaled by max(1, ||M||_max)
    psd: float = 1e-9
    #: relative rank cutoff for Gram factorizations and spectral decompositions
    rank: float = 1e-10
    #: Hermiticity check for eigensolver input
    hermitian: float = 1e-8
    #: SDP relative duality-gap / infeasibility target
    gap: float = 1e-8

    def psd_tol(self, scale: float) -> float:
        return self.psd * max(1.0, scale)

    def rank_tol(self, scale: float) -> float:
        return self.rank * max(1.0, scale)


_CURRENT: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "qaccess_tolerances", default=Tolerances()
)


def get_tolerances() -> Tolerances:
    return _CURRENT.get()


@contextlib.contextmanager
def using_tolerances(**overrides: float) -> Iterator[Tolerances]:
    """Temporarily override tolerance fields, e.g. ``using_tolerances(psd=1e-6)``."""
    tol = dataclasses.replace(_CURRENT.get(), **overrides)
    token = _CURRENT.set(tol)
    try:
        yield tol
    finally:
        _CURRENT.reset(token)
