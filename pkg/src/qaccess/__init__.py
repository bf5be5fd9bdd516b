"""Feasibility, optimal success probability and unitary dilations for
probabilistic transformations between finite sets of quantum states."""

from qaccess.config import Tolerances, get_tolerances, using_tolerances
from qaccess.errors import QAccessError

__version__ = "0.1.0"

__all__ = [
    "QAccessError",
    "Tolerances",
    "get_tolerances",
    "using_tolerances",
    "__version__",
]
