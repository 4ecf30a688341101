"""Export of a :class:`Model` to CPLEX LP text for debugging.

Sections appear in the fixed order objective, constraints, bounds, binaries;
rows and variables keep their model order, so equal models give equal files.
Names are sanitized to ``[A-Za-z0-9_.]``.
"""

from __future__ import annotations

import io
import math
import re
from pathlib import Path

from .model import Model


def _name(raw: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_.]", "_", raw)
    return s if s and not s[0].isdigit() else f"_{s}"


def _terms(pairs, names) -> str:
    out = []
    for j, a in pairs:
        if a == 0:
            continue
        op = "-" if a < 0 else "+"
        out.append(f"{op} {abs(a):.12g} {names[j]}")
    if not out:
        return "0 " + names[0] if names else "0"
    text = " ".join(out)
    return text[2:] if text.startswith("+ ") else text


def to_lp_string(model: Model) -> str:
    names = [_name(f"{n}") for n in model.var_names]
    buf = io.StringIO()
    buf.write(f"\\ {model.name}\n")
    buf.write("Minimize\n" if model.sense == "min" else "Maximize\n")
    obj = sorted(model.objective.items())
    buf.write(f" obj: {_terms(obj, names)}")
    if model.objective_constant:
        buf.write(f" + {model.objective_constant:.12g} __const")
    buf.write("\nSubject To\n")
    for i in range(model.n_rows):
        pairs = zip(model.rows_idx[i].tolist(), model.rows_val[i].tolist())
        buf.write(f" {_name(model.row_names[i])}: {_terms(pairs, names)} "
                  f"{model.relations[i]} {model.rhs[i]:.12g}\n")
    if model.objective_constant:
        buf.write(" __const_fix: __const = 1\n")
    buf.write("Bounds\n")
    for j, n in enumerate(names):
        lo, hi = model.lb[j], model.ub[j]
        if not math.isfinite(lo) and not math.isfinite(hi):
            buf.write(f" {n} free\n")
        elif lo == hi:
            buf.write(f" {n} = {lo:.12g}\n")
        else:
            left = f"{lo:.12g}" if math.isfinite(lo) else "-inf"
            right = f"{hi:.12g}" if math.isfinite(hi) else "+inf"
            buf.write(f" {left} <= {n} <= {right}\n")
    binaries = [names[j] for j in model.binary_indices]
    if binaries:
        buf.write("Binary\n")
        for n in binaries:
            buf.write(f" {n}\n")
    buf.write("End\n")
    return buf.getvalue()


def write_lp(model: Model, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(to_lp_string(model))
    return path
