"""Dense bounded-variable revised simplex.

Two phases over ``A z = b, 0 <= z <= U``.  Pricing is Dantzig's largest
reduced cost; after a run of degenerate pivots the method switches to
Bland's lowest-index rule until the objective moves again, which rules out
cycling.  The basis is refactorized every iteration, which keeps the code
short and numerically stable at the model sizes this engine is meant for.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .model import Model, ModelError
from .result import INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
DEGENERATE_RUN = 30


def _iterate(A, b, c, U, basis, at_upper, max_iter):
    """Run primal simplex from a feasible basis.  Returns (status, iterations, y)."""
    m, N = A.shape
    in_basis = np.zeros(N, dtype=bool)
    in_basis[basis] = True
    bland = False
    stalled = 0
    y = np.zeros(m)
    if m == 0:
        d = c
        if np.any((d < -OPT_TOL) & ~np.isfinite(U)):
            return UNBOUNDED, 0, y
        at_upper[:] = d < -OPT_TOL
        return OPTIMAL, 0, y
    for it in range(max_iter):
        lu = lu_factor(A[:, basis])
        rhs = b - A[:, at_upper] @ U[at_upper] if at_upper.any() else b
        xB = lu_solve(lu, rhs)
        y = lu_solve(lu, c[basis], trans=1)
        d = c - A.T @ y
        eligible = ~in_basis & (((~at_upper) & (d < -OPT_TOL) & (U > 0)) | (at_upper & (d > OPT_TOL)))
        if not eligible.any():
            return OPTIMAL, it, y
        cand = np.flatnonzero(eligible)
        q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        direction = -1.0 if at_upper[q] else 1.0
        w = direction * lu_solve(lu, A[:, q])

        # basic variables move as xB - theta * w
        ub_basic = U[basis]
        ratios = np.full(m, math.inf)
        to_upper = np.zeros(m, dtype=bool)
        dec = w > PIVOT_TOL
        ratios[dec] = np.maximum(xB[dec], 0.0) / w[dec]
        inc = (w < -PIVOT_TOL) & np.isfinite(ub_basic)
        ratios[inc] = np.maximum(ub_basic[inc] - xB[inc], 0.0) / -w[inc]
        to_upper[inc] = True
        theta = ratios.min() if m else math.inf
        flip = U[q]
        if not math.isfinite(theta) and not math.isfinite(flip):
            return UNBOUNDED, it, y
        if flip <= theta:
            at_upper[q] = not at_upper[q]
            step = flip
        else:
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if bland:
                r = int(ties[np.argmin(np.asarray(basis)[ties])])
            else:
                r = int(ties[np.argmax(np.abs(w[ties]))])
            leaving = basis[r]
            in_basis[leaving] = False
            at_upper[leaving] = bool(to_upper[r])
            basis[r] = q
            in_basis[q] = True
            at_upper[q] = False
            step = theta
        if step * abs(d[q]) <= 1e-12:
            stalled += 1
            if stalled >= DEGENERATE_RUN:
                bland = True
        else:
            stalled = 0
            bland = False
    raise RuntimeError(f"simplex did not terminate within {max_iter} iterations")


def solve_lp_builtin(model: Model) -> LpSolution:
    comp = model.compile()
    if comp.binary.any() and np.any(comp.lb[comp.binary] != comp.ub[comp.binary]):
        raise ModelError("solve_lp needs a continuous model; fix the binaries first")
    A0 = comp.A.toarray()
    m, n = A0.shape
    sign = 1.0 if comp.sense == "min" else -1.0
    c0 = sign * comp.c
    b = comp.b.astype(float).copy()
    const = sign * comp.c0

    # variable transformation to z >= 0 with optional finite upper bound
    cols, costs, caps, recover = [], [], [], []
    for j in range(n):
        lo, hi = comp.lb[j], comp.ub[j]
        a = A0[:, j]
        if math.isfinite(lo):
            b -= a * lo
            const += c0[j] * lo
            recover.append((j, 1.0, lo, len(cols)))
            cols.append(a)
            costs.append(c0[j])
            caps.append(hi - lo)
        elif math.isfinite(hi):
            b -= a * hi
            const += c0[j] * hi
            recover.append((j, -1.0, hi, len(cols)))
            cols.append(-a)
            costs.append(-c0[j])
            caps.append(math.inf)
        else:
            recover.append((j, 1.0, 0.0, len(cols)))
            recover.append((j, -1.0, 0.0, len(cols) + 1))
            cols.extend([a, -a])
            costs.extend([c0[j], -c0[j]])
            caps.extend([math.inf, math.inf])
    n_struct = len(cols)

    flip = np.where(b < 0, -1.0, 1.0)
    slack_cols, slack_of_row = [], {}
    for i, r in enumerate(comp.rel):
        if r != 0:
            e = np.zeros(m)
            e[i] = 1.0 if r < 0 else -1.0
            slack_of_row[i] = n_struct + len(slack_cols)
            slack_cols.append(e)
    n_slack = len(slack_cols)

    basis, art_rows = [], []
    for i in range(m):
        s = slack_of_row.get(i)
        if s is not None and flip[i] * slack_cols[s - n_struct][i] > 0:
            basis.append(s)
        else:
            basis.append(n_struct + n_slack + len(art_rows))
            art_rows.append(i)
    n_art = len(art_rows)
    N = n_struct + n_slack + n_art
    A = np.zeros((m, N))
    if n_struct:
        A[:, :n_struct] = np.column_stack(cols)
    if n_slack:
        A[:, n_struct:n_struct + n_slack] = np.column_stack(slack_cols)
    for k, i in enumerate(art_rows):
        A[i, n_struct + n_slack + k] = flip[i]
    A *= flip[:, None]
    bf = b * flip
    U = np.concatenate([np.asarray(caps, float), np.full(n_slack, math.inf), np.full(n_art, math.inf)])
    at_upper = np.zeros(N, dtype=bool)
    max_iter = 50 * (m + N) + 1000
    iters = 0

    if n_art:
        c1 = np.zeros(N)
        c1[n_struct + n_slack:] = 1.0
        status, k, _ = _iterate(A, bf, c1, U, basis, at_upper, max_iter)
        iters += k
        xB = _basic_values(A, bf, U, basis, at_upper)
        infeas = float(sum(xB[i] for i, j in enumerate(basis) if j >= n_struct + n_slack))
        if infeas > 1e-7 * (1 + np.abs(bf).max(initial=0.0)):
            return LpSolution(INFEASIBLE, iterations=iters)
        U[n_struct + n_slack:] = 0.0

    c2 = np.zeros(N)
    c2[:n_struct] = costs
    status, k, y = _iterate(A, bf, c2, U, basis, at_upper, max_iter)
    iters += k
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=iters)

    z = np.where(at_upper, U, 0.0)
    z[basis] = _basic_values(A, bf, U, basis, at_upper)
    z[~np.isfinite(z)] = 0.0
    x = np.zeros(n)
    for j, s, base, col in recover:
        x[j] += base + s * z[col]
    x = np.clip(x, comp.lb, comp.ub)
    duals = sign * (y * flip)
    reduced = comp.c - comp.A.T @ duals
    return LpSolution(OPTIMAL, x, float(comp.c @ x + comp.c0), duals, reduced, iters)


def _basic_values(A, b, U, basis, at_upper):
    if not basis:
        return np.zeros(0)
    rhs = b - A[:, at_upper] @ U[at_upper] if at_upper.any() else b
    return np.linalg.solve(A[:, basis], rhs)
