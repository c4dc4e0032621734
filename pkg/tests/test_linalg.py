import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from diffcoh import builtins as B
from diffcoh.cochains import integers, laurent
from diffcoh.linalg import (
    AffineSolution, DimensionError, Infeasibility, MixedInfeasibility, MixedSolution, SparseMatrix,
    cohomology, determinant, left_kernel, smith, solve_affine, solve_mixed,
)
from diffcoh.simplicial import cylinder, product

small = st.integers(min_value=-4, max_value=4)


def matrices(max_rows=4, max_cols=4):
    return st.integers(1, max_rows).flatmap(
        lambda m: st.integers(1, max_cols).flatmap(
            lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=m, max_size=m)))


def _mul(A, B_):
    return [[sum(A[i][k] * B_[k][j] for k in range(len(B_))) for j in range(len(B_[0]))] for i in range(len(A))]


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_smith_against_sympy(rows):
    A = SparseMatrix.from_dense(rows)
    sf = smith(A)
    assert _mul(_mul(sf.U, rows), sf.V) == sf.D
    assert abs(determinant(sf.U)) == 1 and abs(determinant(sf.V)) == 1
    d = [abs(x) for x in sf.diagonal()]
    nz = [x for x in d if x]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    oracle = sympy_snf(Matrix(rows), domain=ZZ)
    expect = sorted(abs(oracle[i, i]) for i in range(min(oracle.shape)) if oracle[i, i] != 0)
    assert sorted(nz) == expect
    assert sf.rank == len(expect)


@settings(max_examples=100, deadline=None)
@given(matrices(3, 3), st.lists(small, min_size=3, max_size=3))
def test_integer_solve_matches_box_search(rows, b):
    A = SparseMatrix.from_dense(rows)
    b = b[:A.rows] + [0] * (A.rows - len(b))
    sol = solve_affine(A, b, "Z")
    if isinstance(sol, AffineSolution):
        assert A.matvec(sol.x) == b
        for k in sol.kernel:
            assert all(v == 0 for v in A.matvec(k))
    else:
        assert sol.verify(A, b)
        box = range(-6, 7)
        assert not any(A.matvec(list(x)) == b for x in itertools.product(box, repeat=A.cols))


def test_rational_solve_and_certificate():
    A = SparseMatrix.from_dense([[1, 1], [2, 2]])
    sol = solve_affine(A, [1, 3], "Q")
    assert isinstance(sol, Infeasibility) and sol.verify(A, [1, 3])
    sol = solve_affine(A, [Fraction(1, 2), 1], "Q")
    assert A.matvec(sol.x) == [Fraction(1, 2), 1]


def test_parity_obstruction():
    A = SparseMatrix.from_dense([[2]])
    cert = solve_affine(A, [1], "Z")
    assert isinstance(cert, Infeasibility)
    assert cert.y == [Fraction(1, 2)]


def test_dimension_error():
    with pytest.raises(DimensionError):
        solve_affine(SparseMatrix.from_dense([[1, 2]]), [1, 2], "Z")


def test_left_kernel():
    A = SparseMatrix.from_dense([[1, 2], [2, 4], [0, 1]])
    L = left_kernel(A)
    assert len(L) == 1
    assert all(v == 0 for v in A.vecmat(L[0]))


def test_mixed_solver():
    A_int = SparseMatrix.from_dense([[2], [0]])
    A_rat = SparseMatrix.from_dense([[0], [1]])
    sol = solve_mixed(A_int, A_rat, [4, Fraction(1, 3)])
    assert isinstance(sol, MixedSolution) and sol.x_int == [2] and sol.x_rat == [Fraction(1, 3)]
    cert = solve_mixed(A_int, A_rat, [1, 0])
    assert isinstance(cert, MixedInfeasibility) and cert.verify(A_int, A_rat, [1, 0])


@pytest.mark.parametrize("name, expected", [
    ("point", [(1, [])]),
    ("circle", [(1, []), (1, [])]),
    ("torus", [(1, []), (2, []), (1, [])]),
    ("rp2", [(1, []), (0, []), (0, [2])]),
    ("klein", [(1, []), (1, []), (0, [2])]),
    ("sphere-boundary", [(1, []), (1, [])]),
    ("simplex3", [(1, []), (0, []), (0, []), (0, [])]),
    ("disk-pair", [(0, []), (0, []), (1, [])]),
    ("torus-pair", [(0, []), (1, []), (1, [])]),
])
def test_cohomology_table(name, expected):
    X = B.lookup(name)
    got = [cohomology(X, k) for k in range(len(expected))]
    assert [(g.rank, g.torsion) for g in got] == expected


def test_kunneth():
    for X, Y in [(B.circle(), B.rp2()), (B.rp2(), B.rp2())]:
        P, _, _ = product(X, Y)
        for n in range(P.dimension + 1):
            h = cohomology(P, n)
            rank = sum(cohomology(X, p).rank * cohomology(Y, n - p).rank for p in range(n + 1))
            assert h.rank == rank
    P, _, _ = product(B.rp2(), B.rp2())
    # Tor(ℤ/2, ℤ/2) contributes in degree 3
    assert cohomology(P, 3).torsion == [2] and cohomology(P, 4).torsion == [2]


def test_homotopy_invariance():
    C, _, _, _ = cylinder(B.klein())
    for n in range(3):
        assert cohomology(C, n) == cohomology(B.klein(), n)


def test_graded_coefficients():
    L = laurent(-2)
    h = cohomology(B.circle(), 1, coefficients=L)
    assert h.rank == 1
    h = cohomology(B.circle(), 2, coefficients=L)
    assert h.rank == 1
    assert cohomology(B.torus(), 2, coefficients=integers()).rank == 1


def test_dump_roundtrip():
    A = SparseMatrix.from_dense([[1, 0, Fraction(2, 3)], [0, -5, 0]])
    assert SparseMatrix.load(A.dump()) == A
