import itertools
import math

import numpy as np
import pytest

from mgramp.milp import (BINARY, EQ, GE, INFEASIBLE, LE, OPTIMAL, Model, ModelError,
                         dual_objective, fix_binaries, solve_lp, solve_milp, to_lp_string)


def random_lp(rng, n, m):
    """Bounded feasible LP: box bounds plus random rows satisfied at a random interior point."""
    model = Model("rand")
    lo = rng.uniform(-3, 0, n)
    hi = rng.uniform(0.5, 4, n)
    xs = [model.add_var(f"x{j}", lo[j], hi[j]) for j in range(n)]
    point = rng.uniform(lo, hi)
    for i in range(m):
        a = rng.integers(-4, 5, n).astype(float)
        rel = rng.choice([LE, GE, EQ], p=[0.45, 0.45, 0.1])
        lhs = float(a @ point)
        rhs = lhs if rel == EQ else lhs + (1 if rel == LE else -1) * rng.uniform(0, 2)
        model.add_constraint(dict(zip(xs, a)), rel, rhs)
    model.set_objective(dict(zip(xs, rng.integers(-5, 6, n).astype(float))),
                        sense=rng.choice(["min", "max"]))
    return model


def vertex_oracle(model):
    """Best objective over all basic feasible solutions (active-set enumeration)."""
    comp = model.compile()
    n = model.n_vars
    rows, rhs = [], []
    for i in range(comp.A.shape[0]):
        rows.append(comp.A[i].toarray().ravel() if hasattr(comp.A[i], "toarray") else comp.A[i])
        rhs.append(comp.b[i])
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows += [e, e]
        rhs += [comp.lb[j], comp.ub[j]]
    rows, rhs = np.array(rows, dtype=float), np.array(rhs)
    sign = 1.0 if comp.sense == "min" else -1.0
    best = math.inf
    for active in itertools.combinations(range(len(rows)), n):
        a = rows[list(active)]
        if abs(np.linalg.det(a)) < 1e-9:
            continue
        x = np.linalg.solve(a, rhs[list(active)])
        if model.violations(x, tol=1e-7):
            continue
        best = min(best, sign * (comp.c @ x + comp.c0))
    return sign * best


def test_min_x_at_least_three():
    m = Model()
    x = m.add_var("x")
    m.add_constraint({x: 1.0}, GE, 3.0)
    m.set_objective({x: 1.0})
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0) and sol.duals[0] == pytest.approx(1.0)


def test_symmetric_face_objective():
    m = Model()
    x, y = m.add_var("x", 0, 1), m.add_var("y", 0, 1)
    m.add_constraint({x: 1.0, y: 1.0}, LE, 1.0)
    m.set_objective({x: -1.0, y: -1.0})
    assert solve_lp(m).objective == pytest.approx(-1.0)


@pytest.mark.parametrize("seed", range(50))
def test_random_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    model = random_lp(rng, int(rng.integers(2, 6)), int(rng.integers(1, 5)))
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(vertex_oracle(model), rel=1e-6, abs=1e-6)
    assert not model.violations(sol.x)


@pytest.mark.parametrize("seed", range(50))
@pytest.mark.parametrize("backend", ["builtin", "highs"])
def test_strong_duality(seed, backend):
    rng = np.random.default_rng(1000 + seed)
    model = random_lp(rng, int(rng.integers(2, 9)), int(rng.integers(1, 7)))
    sol = solve_lp(model, backend)
    assert sol.status == OPTIMAL
    dual = dual_objective(model, sol.duals)
    assert dual == pytest.approx(sol.objective, rel=1e-6, abs=1e-6)


def test_unbounded_and_infeasible_lp():
    m = Model()
    x = m.add_var("x", -math.inf, math.inf)
    m.set_objective({x: 1.0})
    assert solve_lp(m).status == "unbounded"
    m2 = Model()
    y = m2.add_var("y", 0, 1)
    m2.add_constraint({y: 1.0}, GE, 2.0)
    assert solve_lp(m2).status == INFEASIBLE


def test_malformed_models_rejected():
    m = Model()
    x = m.add_var("x")
    with pytest.raises(ModelError):
        m.add_constraint({x + 1: 1.0}, LE, 1.0)
    with pytest.raises(ModelError):
        m.add_var("y", 2.0, 1.0)
    with pytest.raises(ModelError):
        m.add_constraint({x: 1.0}, "<", 1.0)


def knapsack():
    w, v, cap = [4, 3, 2, 5, 1], [10, 7, 4, 11, 2], 9
    m = Model("knap")
    xs = [m.add_var(f"x{i}", kind=BINARY) for i in range(5)]
    m.add_constraint(dict(zip(xs, w)), LE, cap)
    m.set_objective(dict(zip(xs, v)), sense="max")
    best = max(sum(vi * b for vi, b in zip(v, bits))
               for bits in itertools.product((0, 1), repeat=5)
               if sum(wi * b for wi, b in zip(w, bits)) <= cap)
    return m, best


def test_knapsack_matches_enumeration():
    m, best = knapsack()
    for backend in ("builtin", "highs"):
        sol = solve_milp(m, backend=backend)
        assert sol.status == OPTIMAL and sol.objective == pytest.approx(best)


def test_integral_relaxation_solved_at_root():
    m = Model()
    x, y = m.add_var("x", kind=BINARY), m.add_var("y", kind=BINARY)
    m.add_constraint({x: 1.0, y: 1.0}, LE, 1.0)
    m.set_objective({x: -2.0, y: -1.0})
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(-2.0) and sol.nodes == 1


def test_contradictory_binary():
    m = Model()
    x = m.add_var("x", kind=BINARY)
    m.add_constraint({x: 1.0}, EQ, 1.0)
    m.add_constraint({x: 1.0}, EQ, 0.0)
    m.set_objective({x: 1.0})
    assert solve_milp(m).status == INFEASIBLE


def random_milp(rng, nb, nc):
    m = Model("rmilp")
    b = [m.add_var(f"b{i}", kind=BINARY) for i in range(nb)]
    c = [m.add_var(f"c{i}", 0, float(rng.uniform(1, 3))) for i in range(nc)]
    allv = b + c
    for _ in range(int(rng.integers(2, 6))):
        a = rng.integers(-3, 4, len(allv)).astype(float)
        # rows always admit the all-zero point, so the model is feasible
        m.add_constraint(dict(zip(allv, a)), LE, float(rng.uniform(0, 4)))
    link = {b[0]: -2.0}
    if c:
        link[c[0]] = 1.0
    m.add_constraint(link, LE, 0.0)
    m.set_objective(dict(zip(allv, rng.integers(-6, 4, len(allv)).astype(float))))
    return m


def brute_force(m):
    best = math.inf
    bins = m.binary_indices
    pure = len(bins) == m.n_vars
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        if pure:
            x = np.array(bits)
            if not m.violations(x):
                best = min(best, m.evaluate(x))
            continue
        sol = solve_lp(fix_binaries(m, dict(zip(bins, bits))), "highs")
        if sol.status == OPTIMAL:
            best = min(best, sol.objective)
    return best


@pytest.mark.parametrize("seed", range(50))
def test_random_milp_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    if seed % 10:
        m = random_milp(rng, int(rng.integers(3, 9)), int(rng.integers(0, 4)))
    else:
        m = random_milp(rng, 12, 0)
    sol = solve_milp(m)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(brute_force(m), rel=1e-6, abs=1e-6)
    assert sol.bound <= sol.objective + 1e-6
    assert all(abs(sol.x[j] - round(sol.x[j])) < 1e-6 for j in m.binary_indices)


@pytest.mark.parametrize("seed", range(10))
def test_fix_binaries_equals_added_equalities(seed):
    rng = np.random.default_rng(500 + seed)
    m = random_milp(rng, 5, 3)
    bins = m.binary_indices
    assign = dict(zip(bins, rng.integers(0, 2, len(bins)).astype(float)))
    fixed = fix_binaries(m, assign)
    assert fixed.is_continuous and not m.is_continuous
    pinned = m.copy()
    for j, v in assign.items():
        pinned.add_constraint({j: 1.0}, EQ, v)
    a, b = solve_lp(fixed), solve_milp(pinned)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert a.objective == pytest.approx(b.objective, abs=1e-7)


def test_fix_binaries_incomplete_and_empty():
    m, _ = knapsack()
    with pytest.raises(ModelError):
        fix_binaries(m, {0: 1.0})
    lp = random_lp(np.random.default_rng(3), 3, 2)
    same = fix_binaries(lp, {})
    assert to_lp_string(same) == to_lp_string(lp)


def test_determinism_and_export():
    m = random_milp(np.random.default_rng(9), 8, 3)
    first = solve_milp(m)
    second = solve_milp(m.copy())
    assert (first.status, first.objective, first.nodes) == (second.status, second.objective,
                                                           second.nodes)
    text = to_lp_string(m)
    assert text == to_lp_string(m.copy())
    assert "Binary" in text or "Binaries" in text
