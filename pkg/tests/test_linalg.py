import random
from fractions import Fraction

import pytest

from algebroid.linalg import (DimensionError, RationalMatrix, SparseSystem,
                              kernel_basis, rank, solve_linear)


def test_rank_one_kernel():
    a = RationalMatrix.from_rows([[1, 1], [2, 2]])
    basis = kernel_basis(a)
    assert len(basis) == 1
    v = basis[0]
    assert a.mul_vector(v) == [0, 0]
    # spans (1, -1)
    assert v[0] * Fraction(-1) == v[1]


def test_identity_kernel_trivial():
    assert kernel_basis(RationalMatrix.identity(3)) == []


def test_inconsistent_system_certificate():
    a = RationalMatrix.from_rows([[1, 0], [0, 0]])
    res = solve_linear(a, [0, 1])
    assert res.status == "inconsistent"
    y = res.certificate
    # y.A = 0 but y.b != 0
    assert all(sum(y[i] * a.entries[i][j] for i in range(2)) == 0 for j in range(2))
    assert y[0] * 0 + y[1] * 1 != 0


def test_solution_verifies():
    a = RationalMatrix.from_rows([[2, 1], [1, 3]])
    res = solve_linear(a, [Fraction(5), Fraction(10)])
    assert res.status == "solution"
    assert a.mul_vector(res.solution) == [Fraction(5), Fraction(10)]


def test_randomized_solve_and_kernel():
    rng = random.Random(23)
    for _ in range(25):
        n, m = rng.randint(1, 5), rng.randint(1, 5)
        a = RationalMatrix.from_rows(
            [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(m)]
             for _ in range(n)])
        x = [Fraction(rng.randint(-3, 3)) for _ in range(m)]
        b = a.mul_vector(x)
        res = solve_linear(a, b)
        assert res.status == "solution"
        assert a.mul_vector(res.solution) == b
        for v in kernel_basis(a):
            assert a.mul_vector(v) == [0] * n
        assert rank(a) + len(kernel_basis(a)) == m


def test_dimension_mismatch():
    a = RationalMatrix.from_rows([[1, 2]])
    with pytest.raises(DimensionError):
        solve_linear(a, [1, 2])


def test_sparse_matches_dense():
    rng = random.Random(31)
    for _ in range(20):
        n, m = rng.randint(1, 6), rng.randint(1, 6)
        rows = [[Fraction(rng.randint(-3, 3)) if rng.random() < 0.5 else Fraction(0)
                 for _ in range(m)] for _ in range(n)]
        a = RationalMatrix.from_rows(rows)
        s = SparseSystem(n, m)
        for i in range(n):
            for j in range(m):
                if rows[i][j]:
                    s.set(i, j, rows[i][j])
        assert s.rank() == rank(a)
        x = [Fraction(rng.randint(-2, 2)) for _ in range(m)]
        b = a.mul_vector(x)
        got = s.solve(b)
        assert got is not None
        assert a.mul_vector(got) == b
        if rank(a) < n:
            # build an unreachable rhs when the row space is deficient
            res = solve_linear(a, [Fraction(1)] + [Fraction(0)] * (n - 1))
            sparse_res = s.solve([Fraction(1)] + [Fraction(0)] * (n - 1))
            assert (res.status == "solution") == (sparse_res is not None)
