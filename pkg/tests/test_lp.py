import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_lp, vertex_optimum
from wspp.lp import (
    EQ, GE, LE, DimensionError, LinearProgram, NumericalFailure, Status, check_feasible, dump_lp,
    solve,
)

METHODS = ("simplex", "highs")


def lp_dense(c, rows, senses, b, bounds):
    return LinearProgram.from_dense(c, rows, senses, b, bounds)


@pytest.mark.parametrize("method", METHODS)
def test_single_bound(method):
    lp = lp_dense([1.0], [[1.0]], [LE], [5.0], [(0, None)])
    s = solve(lp, method=method)
    assert s.status is Status.OPTIMAL
    assert s.x[0] == pytest.approx(5.0) and s.objective_value == pytest.approx(5.0)


@pytest.mark.parametrize("method", METHODS)
def test_two_variable_vertex(method):
    lp = lp_dense([3, 2], [[1, 1], [1, 0]], [LE, LE], [4, 2], [(0, None), (0, None)])
    s = solve(lp, method=method)
    assert s.objective_value == pytest.approx(10.0)
    assert np.allclose(s.x, [2, 2])
    assert check_feasible(lp, [2, 2]).max_row_violation == 0.0


@pytest.mark.parametrize("method", METHODS)
def test_infeasible(method):
    lp = lp_dense([1.0], [[1.0], [1.0]], [LE, GE], [1.0, 2.0], [(None, None)])
    assert solve(lp, method=method).status is Status.INFEASIBLE


@pytest.mark.parametrize("method", METHODS)
def test_unbounded(method):
    lp = lp_dense([1.0], [[1.0]], [GE], [0.0], [(None, None)])
    assert solve(lp, method=method).status is Status.UNBOUNDED
    lp = LinearProgram([1.0], sp.csr_matrix((0, 1)), (), [], [0.0], [np.inf])
    assert solve(lp, method=method).status is Status.UNBOUNDED


def test_no_rows():
    lp = LinearProgram([1.0, -2.0, 0.0], sp.csr_matrix((0, 3)), (), [], [0, -1, -3], [4, 5, 3], offset=1.5)
    s = solve(lp, method="simplex")
    assert np.allclose(s.x, [4, -1, 0]) and s.objective_value == pytest.approx(7.5)


def test_equality_and_free_variables():
    # maximize x - y with x - y = 3, x + y <= 10, both free
    lp = lp_dense([1, -1], [[1, -1], [1, 1]], [EQ, LE], [3, 10], [(None, None), (None, None)])
    s = solve(lp, method="simplex")
    assert s.objective_value == pytest.approx(3.0)
    assert check_feasible(lp, s.x).ok()


def test_offset_added():
    lp = LinearProgram([1.0], sp.csr_matrix([[1.0]]), (LE,), [2.0], [0.0], [np.inf], offset=10.0)
    assert solve(lp).objective_value == pytest.approx(12.0)


def test_degenerate_cycling_example():
    # classic instance that cycles under naive largest-coefficient pivoting
    c = [0.75, -150, 0.02, -6]
    rows = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    lp = lp_dense(c, rows, [LE, LE, LE], [0, 0, 1], [(0, None)] * 4)
    s = solve(lp, method="simplex")
    assert s.objective_value == pytest.approx(0.05)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        LinearProgram([1.0, 2.0], sp.csr_matrix([[1.0]]), (LE,), [1.0], [0.0], [1.0])
    with pytest.raises(DimensionError):
        LinearProgram([1.0], sp.csr_matrix([[1.0]]), (LE, LE), [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], sp.csr_matrix([[1.0]]), ("<",), [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan], sp.csr_matrix([[1.0]]), (LE,), [1.0], [0.0], [1.0])
    lp = lp_dense([1.0], [[1.0]], [LE], [5.0], [(0, None)])
    with pytest.raises(DimensionError):
        check_feasible(lp, [1.0, 2.0])
    with pytest.raises(ValueError):
        solve(lp, method="nope")
    with pytest.raises(ValueError):
        solve(lp, tol=0.0)


def test_check_feasible_reports_violation():
    lp = lp_dense([3, 2], [[1, 1], [1, 0]], [LE, LE], [4, 2], [(0, None), (0, None)])
    rep = check_feasible(lp, [2.5, 1.5])
    assert rep.max_row_violation == pytest.approx(0.5)
    assert rep.objective_value == pytest.approx(10.5)
    assert not rep.ok()
    assert check_feasible(lp, [-1.0, 0.0]).max_bound_violation == 1.0


def test_iteration_cap():
    lp = lp_dense([3, 2], [[1, 1], [1, 0]], [LE, LE], [4, 2], [(0, None), (0, None)])
    with pytest.raises(NumericalFailure):
        solve(lp, method="simplex", max_iter=1)


def test_random_lps_match_vertex_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(150):
        lp = random_lp(rng)
        best = vertex_optimum(lp)
        for method in METHODS:
            s = solve(lp, method=method)
            if best is None:
                assert s.status is Status.INFEASIBLE
            else:
                assert s.status is Status.OPTIMAL
                assert s.objective_value == pytest.approx(best, abs=1e-6)
                assert check_feasible(lp, s.x).ok()


def test_infinite_bounds_agree_with_highs():
    rng = np.random.default_rng(5)
    for _ in range(150):
        lp = random_lp(rng, infinite_bounds=True)
        a, b = solve(lp, method="simplex"), solve(lp, method="highs")
        assert a.status is b.status
        if a.optimal:
            assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)


def test_deterministic():
    lp = random_lp(np.random.default_rng(9), n=5, m=6)
    a, b = solve(lp, method="simplex"), solve(lp, method="simplex")
    assert a.status is b.status
    if a.optimal:
        assert a.objective_value == b.objective_value and np.array_equal(a.x, b.x)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_optimum_dominates_known_feasible_point(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(-1, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)
    c = rng.normal(size=n)
    lp = LinearProgram(c, sp.csr_matrix(A), (LE,) * m, b, np.full(n, -3.0), np.full(n, 3.0))
    s = solve(lp, method="simplex")
    assert s.optimal
    assert check_feasible(lp, s.x).ok()
    assert s.objective_value >= c @ x0 - 1e-9


def test_dump_lp():
    lp = lp_dense([3, 2], [[1, 1], [1, 0]], [LE, EQ], [4, 2], [(0, None), (None, 1)])
    text = dump_lp(lp)
    lines = text.strip().splitlines()
    assert lines[0].startswith("maximize: +3 x0 +2 x1")
    assert lines[1] == "r0: +1 x0 +1 x1 <= 4"
    assert lines[2] == "r1: +1 x0 = 2"
    assert "bound x1: -inf <= x1 <= 1" in text
