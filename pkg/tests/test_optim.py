import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import random_lp, random_milp
from oracles import brute_force_milp, vertex_enumeration
from parkplan.optim import LinearProgram, LPBuilder, MilpProblem, Status, dump_lp, solve_lp, solve_milp


def _dense(lp):
    return lp.A.toarray()


def _check_solution(lp, sol):
    assert sol.status is Status.OPTIMAL
    assert lp.max_violation(sol.x) <= 1e-8
    assert (sol.x >= lp.lb - 1e-9).all() and (sol.x <= lp.ub + 1e-9).all()
    assert sol.objective == pytest.approx(lp.objective(sol.x), abs=1e-9)


def test_box_maximum():
    lp = LinearProgram([1, 1], [[1, 0], [0, 1]], ("<=", "<="), [1, 1], [0, 0], [np.inf, np.inf], "max")
    sol = solve_lp(lp)
    _check_solution(lp, sol)
    assert sol.objective == pytest.approx(2.0)
    assert sol.x == pytest.approx([1.0, 1.0])


def test_unbounded_and_infeasible():
    lp = LinearProgram([1.0], np.zeros((0, 1)), (), [], [0.0], [np.inf], "max")
    assert solve_lp(lp).status is Status.UNBOUNDED
    bad = LinearProgram([1.0, 1.0], [[1, 1], [1, 1]], ("<=", ">="), [1, 3], [0, 0], [5, 5])
    assert solve_lp(bad).status is Status.INFEASIBLE


def test_free_and_negative_variables():
    # min x + 2y, x + y >= -10, x - y <= 5, x free, y <= -1: optimum at x = -2.5, y = -7.5
    lp = LinearProgram([1.0, 2.0], [[1, 1], [1, -1]], (">=", "<="), [-10.0, 5.0],
                       [-np.inf, -np.inf], [np.inf, -1.0])
    sol = solve_lp(lp)
    _check_solution(lp, sol)
    assert sol.objective == pytest.approx(-17.5)
    assert sol.x == pytest.approx([-2.5, -7.5])


def test_beale_cycling_example_terminates():
    c = [0, 0, 0, -0.75, 20, -0.5, 6]
    A = [[1, 0, 0, 0.25, -8, -1, 9], [0, 1, 0, 0.5, -12, -0.5, 3], [0, 0, 1, 0, 0, 1, 0]]
    lp = LinearProgram(c, A, ("=", "=", "="), [0, 0, 1], np.zeros(7), np.full(7, np.inf))
    sol = solve_lp(lp)
    _check_solution(lp, sol)
    assert sol.objective == pytest.approx(-1.25)


def test_builder_and_validation():
    b = LPBuilder("max")
    x = b.add_var("x", 0, 4, 3.0)
    y = b.add_var("y", 0, 4, 2.0)
    b.add_row({x: 1, y: 1}, "<=", 5, "cap")
    b.set_ub(y, 2.0)
    assert b.ub_of(y) == 2.0 and b.var("y") == y
    lp = b.build()
    assert solve_lp(lp).objective == pytest.approx(3 * 4 + 2 * 1)
    with pytest.raises(ValueError):
        b.add_var("x")
    with pytest.raises(ValueError):
        LinearProgram([1, 2], [[1, 2, 3]], ("<=",), [1], [0, 0], [1, 1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ("<",), [1], [0], [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ("<=",), [1], [2], [1])
    with pytest.raises(ValueError):
        MilpProblem(LinearProgram([1], [[1]], ("<=",), [1], [0], [3]), (0,))


def test_knapsack():
    lp = LinearProgram([10, 6, 4], [[1, 1, 1]], ("<=",), [2], [0, 0, 0], [1, 1, 1], "max")
    sol = solve_milp(MilpProblem(lp, (0, 1, 2)))
    assert sol.objective == pytest.approx(16.0)
    assert sol.x == pytest.approx([1, 1, 0])
    best, _ = brute_force_milp(lp.c, _dense(lp), lp.relations, lp.b, lp.lb, lp.ub, (0, 1, 2), "max")
    assert best == pytest.approx(16.0)


def test_integral_relaxation_takes_one_node():
    lp = LinearProgram([1, 1], [[1, 1]], (">=",), [1], [0, 0], [1, 1])
    milp = solve_milp(MilpProblem(lp, (0, 1)))
    relax = solve_lp(lp)
    assert milp.nodes == 1
    assert milp.objective == pytest.approx(relax.objective)
    assert milp.x == pytest.approx(relax.x)


def test_infeasible_milp():
    lp = LinearProgram([1, 1], [[1, 1]], ("=",), [1.5], [0, 0], [1, 1])
    assert solve_milp(MilpProblem(lp, (0, 1))).status is Status.INFEASIBLE


def test_node_limit():
    rng = np.random.default_rng(3)
    p = random_milp(rng, 10)
    sol = solve_milp(p, node_limit=1)
    assert sol.status in (Status.ITERATION_LIMIT, Status.OPTIMAL, Status.INFEASIBLE)
    if sol.status is Status.ITERATION_LIMIT:
        assert sol.nodes == 1


@pytest.mark.parametrize("seed", range(20))
def test_random_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    lp = random_lp(rng, int(rng.integers(2, 7)), int(rng.integers(1, 6)))
    sol = solve_lp(lp)
    ref = vertex_enumeration(lp.c, _dense(lp), lp.relations, lp.b, lp.lb, lp.ub, lp.sense)
    assert ref is not None
    _check_solution(lp, sol)
    assert sol.objective == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_random_milp_matches_brute_force(seed):
    rng = np.random.default_rng(2000 + seed)
    p = random_milp(rng, int(rng.integers(3, 11)))
    lp = p.lp
    sol = solve_milp(p)
    ref, _ = brute_force_milp(lp.c, _dense(lp), lp.relations, lp.b, lp.lb, lp.ub, p.integer_vars)
    if ref is None:
        assert sol.status is Status.INFEASIBLE
    else:
        assert sol.status is Status.OPTIMAL
        assert abs(sol.objective - ref) <= 1e-6 * max(1.0, abs(ref))
        assert lp.max_violation(sol.x) <= 1e-8
        assert all(sol.x[j] in (0.0, 1.0) for j in p.integer_vars)


def test_dump_format():
    b = LPBuilder("min")
    x = b.add_var("x", 0, 1, 2.5, integer=True)
    y = b.add_var("y", -1, np.inf, -1.0)
    b.add_row({x: 1, y: 2}, ">=", 1, "demand")
    p = b.build_milp()
    buf = io.StringIO()
    dump_lp(p.lp, buf, p.integer_vars, b.row_names)
    assert buf.getvalue().splitlines() == [
        "SENSE min", "VARS 2", "x 2.5 0.0 1.0 int", "y -1.0 -1.0 inf", "ROWS 1",
        "demand >= 1.0 x:1.0 y:2.0", "END",
    ]


# ---- properties -------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_weak_duality(seed):
    # min c.x, A x >= b, x >= 0 with c = A^T y + s (y, s >= 0): b.y bounds the optimum
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 6)), int(rng.integers(1, 7))
    A = rng.uniform(-2, 3, size=(m, n))
    y = rng.uniform(0, 2, size=m)
    c = A.T @ y + rng.uniform(0, 2, size=n)
    b = A @ rng.uniform(0, 3, size=n) - rng.uniform(0, 1, size=m)
    lp = LinearProgram(c, A, (">=",) * m, b, np.zeros(n), np.full(n, np.inf))
    sol = solve_lp(lp)
    _check_solution(lp, sol)
    assert sol.objective >= b @ y - 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 8))
def test_milp_never_beats_relaxation(seed, k):
    p = random_milp(np.random.default_rng(seed), k)
    sol = solve_milp(p)
    root = solve_lp(p.lp)
    if sol.status is Status.OPTIMAL:
        assert sol.objective >= root.objective - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng, int(rng.integers(2, 7)), int(rng.integers(1, 6)))
    perm = rng.permutation(lp.n_vars)
    A = _dense(lp)[:, perm]
    lp2 = LinearProgram(lp.c[perm], A, lp.relations, lp.b, lp.lb[perm], lp.ub[perm], lp.sense)
    a, b = solve_lp(lp), solve_lp(lp2)
    assert a.status is b.status is Status.OPTIMAL
    assert a.objective == pytest.approx(b.objective, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_determinism(seed):
    p = random_milp(np.random.default_rng(seed), 6)
    a, b = solve_milp(p), solve_milp(p)
    assert a.status is b.status
    if a.x is not None:
        assert np.array_equal(a.x, b.x)
