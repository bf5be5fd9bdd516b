"""Problem files and dilation artifacts.

Problem files are JSON documents with a mandatory ``"version": 1``.
Complex numbers are written as ``[re, im]`` pairs, so a state vector is a
list of pairs and a density matrix a list of rows of pairs. Example::

    {
      "version": 1,
      "mode": "unambiguous",
      "dimension": 2,
      "inputs": [[[1, 0], [0, 0]], [[0.5, 0], [0.8660254037844386, 0]]],
      "priors": [0.5, 0.5]
    }

Dilation artifacts are plain text: a header of ``key value`` lines followed
by row-major matrix dumps at 17 significant digits, which round-trips
doubles exactly.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any

import numpy as np

from qaccess.certify import CompositeOutputEnsemble
from qaccess.errors import ParseError, QAccessError
from qaccess.states import DensityMatrix, PriorDistribution, PureState
from qaccess.synth import SynthesizedDilation

FORMAT_VERSION = 1
PARSE_TOL = 1e-6

MODES = (
    "pure_to_pure",
    "pure_to_mixed",
    "mixed_to_pure",
    "mixed_to_mixed",
    "unambiguous",
    "deterministic_check",
    "cloning",
)
_NEEDS_OUTPUTS = {"pure_to_pure", "pure_to_mixed", "mixed_to_pure", "mixed_to_mixed", "deterministic_check"}

State = PureState | DensityMatrix


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemFile:
    mode: str
    dimension: int
    inputs: tuple[State, ...]
    outputs: tuple[State, ...] = ()
    priors: PriorDistribution | None = None
    gamma: np.ndarray | None = None
    ancilla_gram: np.ndarray | None = None
    composite: CompositeOutputEnsemble | None = None
    copies: int | None = None
    name: str = "<problem>"

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def pure_inputs(self) -> bool:
        return all(isinstance(s, PureState) for s in self.inputs)

    @property
    def pure_outputs(self) -> bool:
        return all(isinstance(s, PureState) for s in self.outputs)

    def prior_weights(self) -> PriorDistribution:
        return self.priors if self.priors is not None else PriorDistribution.uniform(self.n)


def _depth(value: Any) -> int:
    d = 0
    while isinstance(value, list):
        if not value:
            break
        value = value[0]
        d += 1
    return d


def _complex_array(value: Any, field: str, depth: int) -> np.ndarray:
    if _depth(value) != depth:
        raise ParseError(f"expected nesting depth {depth} with [re, im] pairs", field)
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"ragged or non-numeric entries ({exc})", field) from None
    if a.ndim != depth or a.shape[-1] != 2:
        raise ParseError(f"entries must be [re, im] pairs, got shape {a.shape}", field)
    if not np.all(np.isfinite(a)):
        raise ParseError("non-finite entry", field)
    return a[..., 0] + 1j * a[..., 1]


def parse_vector(value: Any, field: str) -> PureState:
    v = _complex_array(value, field, 2)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1) > PARSE_TOL:
        raise ParseError(f"vector norm {norm:.9g} is not 1", field)
    return PureState(v / norm)


def parse_density(value: Any, field: str) -> DensityMatrix:
    m = _complex_array(value, field, 3)
    if m.shape[0] != m.shape[1]:
        raise ParseError(f"density matrix must be square, got {m.shape}", field)
    if np.max(np.abs(m - m.conj().T)) > PARSE_TOL:
        raise ParseError("density matrix is not Hermitian", field)
    m = (m + m.conj().T) / 2
    tr = float(np.trace(m).real)
    if abs(tr - 1) > PARSE_TOL:
        raise ParseError(f"trace {tr:.9g} is not 1", field)
    w, v = np.linalg.eigh(m)
    if w[0] < -PARSE_TOL:
        raise ParseError(f"density matrix has eigenvalue {w[0]:.3e}", field)
    m = (v * np.clip(w, 0, None)) @ v.conj().T
    return DensityMatrix(m / np.trace(m).real)


def parse_state(value: Any, field: str) -> State:
    depth = _depth(value)
    if depth == 2:
        return parse_vector(value, field)
    if depth == 3:
        return parse_density(value, field)
    raise ParseError("a state is a list of [re, im] pairs or a matrix of them", field)


def _real_list(value: Any, field: str) -> np.ndarray:
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a list of real numbers", field) from None
    if a.ndim != 1 or not np.all(np.isfinite(a)):
        raise ParseError("expected a flat list of finite real numbers", field)
    return a


def _parse_priors(value: Any, n: int) -> PriorDistribution:
    p = _real_list(value, "priors")
    if p.size != n:
        raise ParseError(f"{p.size} priors given for {n} inputs", "priors")
    if np.any(p < 0):
        raise ParseError("priors must be non-negative", "priors")
    total = float(p.sum())
    if abs(total - 1) > PARSE_TOL:
        raise ParseError(f"priors sum to {total:.9g}, not 1", "priors")
    return PriorDistribution(p / total)


def _parse_composite(value: Any, n: int) -> CompositeOutputEnsemble:
    field = "composite_ensembles"
    if not isinstance(value, dict):
        raise ParseError("expected an object with output_dim, etas and vectors", field)
    try:
        out_dim = int(value["output_dim"])
        etas = _real_list(value["etas"], f"{field}.etas")
        raw = value["vectors"]
    except KeyError as exc:
        raise ParseError(f"missing key {exc}", field) from None
    if not isinstance(raw, list) or len(raw) != n:
        raise ParseError(f"need one list of member vectors per input ({n})", f"{field}.vectors")
    vectors = [_complex_array(v, f"{field}.vectors[{i}]", 2) for i, v in enumerate(raw)]
    try:
        return CompositeOutputEnsemble(tuple(vectors), etas, out_dim)
    except QAccessError as exc:
        raise ParseError(str(exc), field) from None


def parse_problem(doc: dict, name: str = "<problem>") -> ProblemFile:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported or missing version (expected {FORMAT_VERSION})", "version")
    mode = doc.get("mode")
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}", "mode")
    raw_inputs = doc.get("inputs")
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise ParseError("at least one input state is required", "inputs")
    inputs = tuple(parse_state(v, f"inputs[{i}]") for i, v in enumerate(raw_inputs))
    dims = {s.dim for s in inputs}
    if len(dims) != 1:
        raise ParseError(f"input states have different dimensions {sorted(dims)}", "inputs")
    dimension = int(doc.get("dimension", inputs[0].dim))
    if dimension != inputs[0].dim:
        raise ParseError(f"declared dimension {dimension} but states have {inputs[0].dim}", "dimension")

    outputs: tuple[State, ...] = ()
    if mode in _NEEDS_OUTPUTS:
        raw_outputs = doc.get("outputs")
        if not isinstance(raw_outputs, list) or len(raw_outputs) != len(inputs):
            raise ParseError("one output state per input is required", "outputs")
        outputs = tuple(parse_state(v, f"outputs[{i}]") for i, v in enumerate(raw_outputs))
        if len({s.dim for s in outputs}) != 1:
            raise ParseError("output states have different dimensions", "outputs")
    copies = None
    if mode == "cloning":
        copies = doc.get("copies")
        if not isinstance(copies, int) or copies < 1:
            raise ParseError("cloning needs an integer copies >= 1", "copies")
    if mode in ("pure_to_pure", "pure_to_mixed", "cloning") and not all(isinstance(s, PureState) for s in inputs):
        raise ParseError(f"mode {mode} needs pure input vectors", "inputs")
    if mode in ("pure_to_pure", "mixed_to_pure", "deterministic_check") and not all(
        isinstance(s, PureState) for s in outputs
    ):
        raise ParseError(f"mode {mode} needs pure output vectors", "outputs")

    priors = _parse_priors(doc["priors"], len(inputs)) if "priors" in doc else None
    gamma = None
    if "gamma" in doc:
        gamma = _real_list(doc["gamma"], "gamma")
        if np.any(gamma < -PARSE_TOL) or np.any(gamma > 1 + PARSE_TOL):
            raise ParseError("success probabilities must lie in [0, 1]", "gamma")
        gamma = np.clip(gamma, 0, 1)
    ancilla = _complex_array(doc["ancilla_gram"], "ancilla_gram", 3) if "ancilla_gram" in doc else None
    composite = _parse_composite(doc["composite_ensembles"], len(inputs)) if "composite_ensembles" in doc else None
    return ProblemFile(mode, dimension, inputs, outputs, priors, gamma, ancilla, composite, copies, name)


def load_problem(path: str | Path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_problem(doc, str(path))


def load_state(path: str | Path) -> State:
    """A standalone state: either a bare vector/matrix or {"state": ...}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read state file {path}: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("state")
    return parse_state(doc, "state")


def complex_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


# --------------------------------------------------------------------------
# dilation artifacts

_MAGIC = "qaccess-dilation"


def _dump_matrix(lines: list[str], label: str, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    lines.append(f"{label} {m.shape[0]} {m.shape[1]}")
    for row in m:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))


def dump_dilation(dil: SynthesizedDilation) -> str:
    lines = [
        f"{_MAGIC} {FORMAT_VERSION}",
        f"d_in {dil.d_in}",
        f"d_out {dil.d_out}",
        f"d_ancilla {dil.d_ancilla}",
        f"d_probe {dil.d_probe}",
        f"probe_success_index {dil.probe_success_index}",
        f"etas {len(dil.etas)} " + " ".join(f"{e:.17g}" for e in dil.etas),
    ]
    _dump_matrix(lines, "U", dil.U)
    _dump_matrix(lines, "embedding", dil.embedding)
    lines.append(f"inputs {len(dil.inputs)}")
    for rho in dil.inputs:
        _dump_matrix(lines, "state", rho.matrix)
    lines.append(f"targets {len(dil.targets)}")
    for sigma in dil.targets:
        _dump_matrix(lines, "state", sigma.matrix)
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        self.pos = 0

    def next(self, key: str) -> list[str]:
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file, expected '{key}'", key)
        parts = self.lines[self.pos].split()
        self.pos += 1
        if parts[0] != key:
            raise ParseError(f"expected '{key}' on line {self.pos}, found '{parts[0]}'", key)
        return parts[1:]

    def integer(self, key: str) -> int:
        return int(self.next(key)[0])

    def matrix(self, key: str) -> np.ndarray:
        rows, cols = (int(t) for t in self.next(key)[:2])
        out = np.zeros((rows, cols), dtype=complex)
        for r in range(rows):
            if self.pos >= len(self.lines):
                raise ParseError(f"matrix '{key}' is truncated", key)
            vals = np.array(self.lines[self.pos].split(), dtype=float)
            self.pos += 1
            if vals.size != 2 * cols:
                raise ParseError(f"row {r} of '{key}' has {vals.size} numbers, expected {2 * cols}", key)
            out[r] = vals[0::2] + 1j * vals[1::2]
        return out


def load_dilation_text(text: str) -> SynthesizedDilation:
    rd = _Reader(text)
    header = rd.next(_MAGIC)
    if not header or int(header[0]) != FORMAT_VERSION:
        raise ParseError("unsupported dilation format version", "version")
    try:
        d_in, d_out = rd.integer("d_in"), rd.integer("d_out")
        d_anc, d_probe = rd.integer("d_ancilla"), rd.integer("d_probe")
        k = rd.integer("probe_success_index")
        eta_tokens = rd.next("etas")
        etas = np.array(eta_tokens[1:1 + int(eta_tokens[0])], dtype=float)
        u = rd.matrix("U")
        emb = rd.matrix("embedding")
        inputs = [DensityMatrix(rd.matrix("state")) for _ in range(rd.integer("inputs"))]
        targets = [DensityMatrix(rd.matrix("state")) for _ in range(rd.integer("targets"))]
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed dilation file: {exc}") from None
    dim = d_out * d_anc * d_probe
    if u.shape != (dim, dim) or emb.shape != (dim, d_in):
        raise ParseError("matrix shapes do not match the recorded dimensions", "U")
    return SynthesizedDilation(
        U=u, d_in=d_in, d_out=d_out, d_ancilla=d_anc, d_probe=d_probe, embedding=emb,
        probe_success_index=k, alphas=np.zeros((0, 0), dtype=complex),
        betas=np.zeros((0, 0), dtype=complex), inputs=tuple(inputs), targets=tuple(targets), etas=etas,
    )


def save_dilation(dil: SynthesizedDilation, path: str | Path) -> None:
    Path(path).write_text(dump_dilation(dil), encoding="utf-8")


def load_dilation(path: str | Path) -> SynthesizedDilation:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return load_dilation_text(text)
