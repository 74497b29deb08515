"""Artifact serialization: CSV tables, metadata sidecars, problem files.

CSV contract: UTF-8, comma delimiter, one header row, floats rendered with
%.17g so files round-trip and diff cleanly. Each run gets one metadata
sidecar of plain `key = value` lines.

Problem files are plain text with a dimensions header and whitespace
sections, for example

    saddleflow-problem 1
    kind equality
    n 2
    m 1
    objective quadratic
    W
    1 0
    0 1
    A
    1 1
    b
    1

Two-sided problems carry `b_lo` and `b_hi` sections instead of `b`;
logistic objectives carry `reg`, an `n_data` header, and `D` / `y`
sections instead of `W`.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .problem import (
    ConstrainedProblem,
    EqualityConstraints,
    InequalityConstraints,
    LogisticObjective,
    QuadraticObjective,
    TwoSidedConstraints,
)

FORMAT_VERSION = 1


def format_float(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                cell if isinstance(cell, str) else format_float(cell)
                for cell in row
            ) + "\n")
    return path


def read_csv(path):
    """Header list plus float rows (the inverse of write_csv for numbers)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
    return header, rows


def write_metadata(path, mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in mapping.items():
            if isinstance(value, float):
                value = format_float(value)
            fh.write(f"{key} = {value}\n")
    return path


def _matrix_lines(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return [" ".join(format_float(v) for v in row) for row in M]


def save_problem(path, p: ConstrainedProblem) -> Path:
    """Write p as a plain-text problem file.

    Only quadratic and logistic objectives are representable; black-box
    oracles have no portable form.
    """
    cons = p.constraints
    if isinstance(cons, EqualityConstraints):
        kind = "equality"
    elif isinstance(cons, InequalityConstraints):
        kind = "inequality"
    elif isinstance(cons, TwoSidedConstraints):
        kind = "two-sided"
    else:
        raise ValueError(f"unknown constraint set {type(cons).__name__}")

    lines = [f"saddleflow-problem {FORMAT_VERSION}", f"kind {kind}",
             f"n {p.dim_n}", f"m {p.dim_m}"]
    if isinstance(p.objective, QuadraticObjective):
        lines.append("objective quadratic")
        lines.append("W")
        lines += _matrix_lines(p.objective.W)
        lines.append("q")
        lines += _matrix_lines(p.objective.q)
    elif isinstance(p.objective, LogisticObjective):
        lines.append("objective logistic")
        lines.append(f"n_data {p.objective.D.shape[0]}")
        lines.append(f"reg {format_float(p.objective.reg)}")
        lines.append("D")
        lines += _matrix_lines(p.objective.D)
        lines.append("y")
        lines += _matrix_lines(p.objective.y)
    else:
        raise ValueError(
            "only quadratic and logistic objectives can be written to file"
        )
    lines.append("A")
    lines += _matrix_lines(cons.A)
    if isinstance(cons, TwoSidedConstraints):
        lines.append("b_lo")
        lines += _matrix_lines(cons.b_lo)
        lines.append("b_hi")
        lines += _matrix_lines(cons.b_hi)
    else:
        lines.append("b")
        lines += _matrix_lines(cons.b)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_problem(path) -> ConstrainedProblem:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("saddleflow-problem"):
        raise ValueError(f"{path}: not a saddleflow problem file")
    header = {}
    idx = 1
    while idx < len(lines) and len(lines[idx].split()) == 2 and lines[idx].split()[0] in (
        "kind", "n", "m", "objective", "n_data", "reg"
    ):
        key, value = lines[idx].split()
        header[key] = value
        idx += 1
    n = int(header["n"])
    m = int(header["m"])

    def take_matrix(rows):
        nonlocal idx
        name = lines[idx]
        idx += 1
        block = np.array(
            [[float(v) for v in lines[idx + r].split()] for r in range(rows)]
        )
        idx += rows
        return name, block

    sections = {}
    while idx < len(lines):
        name = lines[idx]
        rows = {"W": n, "q": 1, "D": int(header.get("n_data", 0)), "y": 1,
                "A": m, "b": 1, "b_lo": 1, "b_hi": 1}[name]
        name, block = take_matrix(rows)
        sections[name] = block

    if header["objective"] == "quadratic":
        objective = QuadraticObjective(sections["W"], sections.get("q", np.zeros((1, n))).ravel())
    elif header["objective"] == "logistic":
        objective = LogisticObjective(sections["D"], sections["y"].ravel(),
                                      float(header["reg"]))
    else:
        raise ValueError(f"unknown objective kind {header['objective']!r}")

    A = sections["A"].reshape(m, n)
    if header["kind"] == "equality":
        cons = EqualityConstraints(A=A, b=sections["b"].ravel())
    elif header["kind"] == "inequality":
        cons = InequalityConstraints(A=A, b=sections["b"].ravel())
    elif header["kind"] == "two-sided":
        cons = TwoSidedConstraints(A=A, b_lo=sections["b_lo"].ravel(),
                                   b_hi=sections["b_hi"].ravel())
    else:
        raise ValueError(f"unknown constraint kind {header['kind']!r}")
    return ConstrainedProblem(objective=objective, constraints=cons)
