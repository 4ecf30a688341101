"""Linear / mixed-binary model container shared by all solver backends."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

TOL_FEAS = 1e-7
TOL_INT = 1e-6
TOL_MIPGAP = 1e-6
TOL_GAP = 1e-6

LE, EQ, GE = "<=", "=", ">="
RELATIONS = (LE, EQ, GE)
CONTINUOUS, BINARY = "continuous", "binary"


class ModelError(ValueError):
    """Raised for malformed models (unknown variables, NaN data, bad bounds)."""


@dataclass
class Compiled:
    """Array view of a model; ``A`` is CSR with one row per constraint."""

    c: np.ndarray
    c0: float
    sense: str
    A: sp.csr_matrix
    rel: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray  # boolean mask


class Model:
    """A linear model built incrementally, then treated as read-only.

    Variables and constraints are addressed by integer index.  Solvers never
    mutate a model; ``fix_binaries``, ``with_bounds`` and friends return new
    models that share nothing mutable with the original.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.kinds: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.rows_idx: list[np.ndarray] = []
        self.rows_val: list[np.ndarray] = []
        self.relations: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.tags: list[str] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self.sense = "min"
        # free-form annotations for builders (e.g. row/variable correspondences)
        self.meta: dict = {}
        self._compiled: Compiled | None = None

    # ---- building -------------------------------------------------------
    def add_var(self, name: str | None = None, lb: float = 0.0, ub: float = math.inf,
                kind: str = CONTINUOUS) -> int:
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ModelError(f"bad bounds [{lb}, {ub}] for variable {name}")
        j = len(self.var_names)
        self.var_names.append(name if name is not None else f"x{j}")
        self.kinds.append(kind)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self._compiled = None
        return j

    def add_constraint(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
                       relation: str, rhs: float, name: str | None = None,
                       tag: str = "aux") -> int:
        if relation not in RELATIONS:
            raise ModelError(f"unknown relation {relation!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[int, float] = {}
        for j, a in items:
            merged[j] = merged.get(j, 0.0) + float(a)
        idx = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        val = np.fromiter(merged.values(), dtype=float, count=len(merged))
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_vars):
            raise ModelError(f"constraint {name} references an undeclared variable")
        if np.isnan(val).any() or math.isnan(rhs):
            raise ModelError(f"constraint {name} has NaN data")
        keep = val != 0.0
        i = len(self.rhs)
        self.rows_idx.append(idx[keep])
        self.rows_val.append(val[keep])
        self.relations.append(relation)
        self.rhs.append(float(rhs))
        self.row_names.append(name if name is not None else f"r{i}")
        self.tags.append(tag)
        self._compiled = None
        return i

    def set_objective(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
                      sense: str = "min", constant: float = 0.0) -> None:
        if sense not in ("min", "max"):
            raise ModelError(f"unknown sense {sense!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        obj: dict[int, float] = {}
        for j, a in items:
            if not 0 <= j < self.n_vars:
                raise ModelError("objective references an undeclared variable")
            obj[j] = obj.get(j, 0.0) + float(a)
        if any(math.isnan(a) for a in obj.values()):
            raise ModelError("objective has NaN coefficients")
        self.objective = obj
        self.sense = sense
        self.objective_constant = float(constant)
        self._compiled = None

    def add_to_row(self, i: int, coeffs: Mapping[int, float]) -> None:
        """Add ``coeffs`` to the left-hand side of row ``i`` (a build-time edit)."""
        merged = dict(zip(self.rows_idx[i].tolist(), self.rows_val[i].tolist()))
        for j, a in coeffs.items():
            merged[j] = merged.get(j, 0.0) + float(a)
        self.rows_idx[i] = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        self.rows_val[i] = np.fromiter(merged.values(), dtype=float, count=len(merged))
        self._compiled = None

    # ---- queries --------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def binary_indices(self) -> list[int]:
        return [j for j, k in enumerate(self.kinds) if k == BINARY]

    @property
    def is_continuous(self) -> bool:
        """True when every binary is already fixed by equal bounds."""
        return all(self.lb[j] == self.ub[j] for j in self.binary_indices)

    def compile(self) -> Compiled:
        if self._compiled is None:
            n = self.n_vars
            counts = [len(r) for r in self.rows_idx]
            indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            indices = np.concatenate(self.rows_idx) if self.rows_idx else np.zeros(0, np.int64)
            data = np.concatenate(self.rows_val) if self.rows_val else np.zeros(0)
            A = sp.csr_matrix((data, indices, indptr), shape=(self.n_rows, n))
            c = np.zeros(n)
            for j, a in self.objective.items():
                c[j] = a
            rel = np.array([{LE: -1, EQ: 0, GE: 1}[r] for r in self.relations], dtype=np.int8)
            self._compiled = Compiled(
                c=c, c0=self.objective_constant, sense=self.sense, A=A, rel=rel,
                b=np.asarray(self.rhs, dtype=float), lb=np.asarray(self.lb, dtype=float),
                ub=np.asarray(self.ub, dtype=float),
                binary=np.array([k == BINARY for k in self.kinds], dtype=bool))
        return self._compiled

    def evaluate(self, x: np.ndarray) -> float:
        comp = self.compile()
        return float(comp.c @ x + comp.c0)

    def violations(self, x: np.ndarray, tol: float = TOL_FEAS) -> list[str]:
        """Rows and bounds violated by ``x`` beyond ``tol`` (scaled by 1+|rhs|)."""
        comp = self.compile()
        out = []
        act = comp.A @ x
        for i, (a, r, b) in enumerate(zip(act, comp.rel, comp.b)):
            t = tol * (1 + abs(b))
            if (r <= 0 and a > b + t) or (r >= 0 and a < b - t):
                out.append(f"{self.row_names[i]}: {a:.9g} {self.relations[i]} {b:.9g}")
        for j in range(self.n_vars):
            t = tol * (1 + abs(x[j]))
            if x[j] < comp.lb[j] - t or x[j] > comp.ub[j] + t:
                out.append(f"{self.var_names[j]}={x[j]:.9g} outside [{comp.lb[j]}, {comp.ub[j]}]")
        return out

    # ---- derived models -------------------------------------------------
    def copy(self, name: str | None = None) -> "Model":
        m = Model(name or self.name)
        m.var_names = list(self.var_names)
        m.kinds = list(self.kinds)
        m.lb = list(self.lb)
        m.ub = list(self.ub)
        m.rows_idx = list(self.rows_idx)  # row arrays are never mutated in place
        m.rows_val = list(self.rows_val)
        m.relations = list(self.relations)
        m.rhs = list(self.rhs)
        m.row_names = list(self.row_names)
        m.tags = list(self.tags)
        m.objective = dict(self.objective)
        m.objective_constant = self.objective_constant
        m.sense = self.sense
        m.meta = dict(self.meta)
        return m

    def with_bounds(self, lb: Mapping[int, float] | None = None,
                    ub: Mapping[int, float] | None = None) -> "Model":
        m = self.copy()
        for j, v in (lb or {}).items():
            m.lb[j] = float(v)
        for j, v in (ub or {}).items():
            m.ub[j] = float(v)
        return m

    def with_rhs(self, rhs: Mapping[int, float]) -> "Model":
        m = self.copy()
        for i, v in rhs.items():
            m.rhs[i] = float(v)
        return m

    def with_objective_coefs(self, coefs: Mapping[int, float]) -> "Model":
        m = self.copy()
        for j, v in coefs.items():
            if v == 0.0:
                m.objective.pop(j, None)
            else:
                m.objective[j] = float(v)
        return m

    def __repr__(self):
        return (f"Model({self.name!r}, vars={self.n_vars}, binaries={len(self.binary_indices)}, "
                f"rows={self.n_rows}, sense={self.sense})")


def fix_binaries(model: Model, assignment: Mapping[int, float]) -> Model:
    """Return a pure LP: every binary becomes a continuous variable pinned to its value."""
    missing = [j for j in model.binary_indices if j not in assignment]
    if missing:
        names = ", ".join(model.var_names[j] for j in missing[:5])
        raise ModelError(f"assignment misses {len(missing)} binaries ({names}...)")
    m = model.copy()
    for j in model.binary_indices:
        v = float(assignment[j])
        if abs(v - round(v)) > TOL_INT or round(v) not in (0, 1):
            raise ModelError(f"binary {model.var_names[j]} assigned non-binary value {v}")
        m.lb[j] = m.ub[j] = float(round(v))
        m.kinds[j] = CONTINUOUS
    return m
