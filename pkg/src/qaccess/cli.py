"""Command-line interface.

    qaccess solve problem.json
    qaccess check problem.json --tol 1e-8
    qaccess synthesize problem.json --output dilation.txt
    qaccess simulate dilation.txt [--state state.json]
    qaccess bounds problem.json
    qaccess solve --batch problems/

Exit codes: 0 feasible or solved, 1 input error, 2 infeasible,
3 undetermined.
"""

from __future__ import annotations

import argparse
import contextvars
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qaccess import __version__, fileio, pipeline
from qaccess.config import using_tolerances
from qaccess.errors import ParseError, QAccessError
from qaccess.pipeline import EXIT_INPUT_ERROR, Report

COMMANDS = ("solve", "check", "synthesize", "simulate", "bounds")


def _plain(value: Any) -> Any:
    """JSON-friendly copy; complex arrays become [re, im] pairs only when needed."""
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value) and np.max(np.abs(value.imag), initial=0.0) > 1e-12:
            return fileio.complex_to_json(value)
        return np.real(value).tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _fmt_scalar(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{v:.6g}"
    return str(v)


def _fmt_matrix(m: np.ndarray, indent: str) -> str:
    m = np.asarray(m)
    real = not np.iscomplexobj(m) or np.max(np.abs(m.imag), initial=0.0) <= 1e-12
    if m.ndim == 1:
        return "[" + ", ".join(_fmt_scalar(float(x.real)) if real else f"{x:.6g}" for x in m) + "]"
    rows = []
    for row in m:
        if real:
            rows.append("  ".join(f"{x.real:10.6f}" for x in row))
        else:
            rows.append("  ".join(f"{x.real:9.5f}{x.imag:+9.5f}i" for x in row))
    return "\n" + "\n".join(indent + r for r in rows)


def render_text(rep: Report) -> str:
    lines = [f"status: {rep.status}"]
    for key, value in rep.fields.items():
        label = key.replace("_", " ")
        if isinstance(value, np.ndarray):
            lines.append(f"{label}: {_fmt_matrix(value, '  ')}")
        elif isinstance(value, dict):
            lines.append(f"{label}: " + ", ".join(f"{k}={_fmt_scalar(v)}" for k, v in value.items()))
        else:
            lines.append(f"{label}: {_fmt_scalar(value)}")
    return "\n".join(lines)


def render_structured(rep: Report) -> str:
    return json.dumps(_plain(rep.as_dict()), indent=2)


def _run_one(args: argparse.Namespace, target: Path) -> Report:
    if args.command == "simulate":
        dil = fileio.load_dilation(target)
        state = fileio.load_state(args.state) if args.state else None
        return pipeline.simulate(dil, state)
    problem = fileio.load_problem(target)
    if args.command == "solve":
        return pipeline.solve(problem, args.gap_tol)
    if args.command == "check":
        return pipeline.check(problem)
    if args.command == "bounds":
        return pipeline.bounds(problem, seed=args.seed)
    rep = pipeline.synthesize(problem, args.gap_tol)
    if rep.dilation is not None:
        out = Path(args.output) if args.output else target.with_suffix(".dilation.txt")
        fileio.save_dilation(rep.dilation, out)
        rep.fields["dilation_file"] = str(out)
    return rep


def _guarded(args: argparse.Namespace, target: Path) -> tuple[Report | None, str | None, int]:
    overrides = {"psd": args.tol} if args.tol is not None else {}
    try:
        with using_tolerances(**overrides):
            rep = _run_one(args, target)
        return rep, None, rep.exit_code
    except ParseError as exc:
        return None, f"input error: {exc}", EXIT_INPUT_ERROR
    except QAccessError as exc:
        return None, f"{type(exc).__name__}: {exc}", EXIT_INPUT_ERROR


def _emit(rep: Report, fmt: str, header: str | None = None) -> None:
    if header:
        print(f"== {header}")
    print(render_structured(rep) if fmt == "structured" else render_text(rep))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaccess",
        description="Feasibility, optimal success probability and unitary synthesis "
        "for probabilistic transformations between quantum states.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("file", nargs="?", help="problem file (dilation file for simulate)")
    parser.add_argument("--tol", type=float, help="PSD tolerance override")
    parser.add_argument("--gap-tol", type=float, help="interior-point stopping tolerance")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized searches")
    parser.add_argument("--output", help="dilation path (synthesize) or structured report path")
    parser.add_argument("--format", choices=("text", "structured"), default="text")
    parser.add_argument("--batch", help="process every *.json problem in this directory")
    parser.add_argument("--state", help="state file for simulate")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    if args.tol is not None and args.tol <= 0:
        parser.error("--tol must be positive")

    if args.batch:
        folder = Path(args.batch)
        targets = sorted(folder.glob("*.json"))
        if not targets:
            print(f"input error: no *.json files in {folder}", file=sys.stderr)
            return EXIT_INPUT_ERROR
        with ThreadPoolExecutor() as pool:
            futures = [pool.submit(contextvars.copy_context().run, _guarded, args, t) for t in targets]
            results = [f.result() for f in futures]
        code = 0
        collected = {}
        for t, (rep, err, rc) in zip(targets, results):
            if rep is not None:
                _emit(rep, args.format, t.name)
                collected[t.name] = _plain(rep.as_dict())
            else:
                print(f"== {t.name}\n{err}")
                collected[t.name] = {"error": err}
            code = max(code, rc)
        if args.output and args.command != "synthesize":
            Path(args.output).write_text(json.dumps(collected, indent=2), encoding="utf-8")
        return code

    if not args.file:
        parser.error("a file argument is required unless --batch is given")
    rep, err, code = _guarded(args, Path(args.file))
    if rep is None:
        print(err, file=sys.stderr)
        return code
    _emit(rep, args.format)
    if args.output and args.command != "synthesize":
        Path(args.output).write_text(render_structured(rep), encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
