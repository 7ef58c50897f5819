"""Generic exact linear algebra over Fraction and cyclotomic scalars."""

from fractions import Fraction

from equislice.linalg import in_span, kernel_basis, rank, rref, solve
from equislice.scalars import CycloField


def test_rref_and_rank():
    mat = [[1, 2, 3], [2, 4, 6], [1, 1, 1]]
    red, pivots = rref(mat)
    assert pivots == [0, 1]
    assert rank(mat) == 2


def test_kernel_basis_annihilates():
    mat = [[1, 2, 3], [4, 5, 6]]
    for v in kernel_basis(mat):
        assert all(sum(a * x for a, x in zip(row, v)) == 0 for row in mat)
    assert len(kernel_basis(mat)) == 1


def test_solve_consistent_and_inconsistent():
    assert solve([[2, 0], [0, 4]], [1, 1]) == [Fraction(1, 2), Fraction(1, 4)]
    assert solve([[1, 1], [1, 1]], [0, 1]) is None


def test_in_span():
    assert in_span([[1, 0, 1], [0, 1, 1]], [1, 1, 2])
    assert not in_span([[1, 0, 1], [0, 1, 1]], [0, 0, 1])
    assert in_span([], [0, 0])
    assert not in_span([], [1])


def test_cyclotomic_elimination():
    f = CycloField(3)
    z = f.zeta()
    # rows are dependent over Q(z): second = z * first
    mat = [[f.one(), z], [z, z * z]]
    assert rank(mat) == 1
    ker = kernel_basis(mat)
    assert len(ker) == 1
    v = ker[0]
    assert all(r[0] * v[0] + r[1] * v[1] == 0 for r in mat)
