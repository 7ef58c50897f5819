"""Integer matrix normal forms and lattice computations."""

import random

from fractions import Fraction

from equislice.intmat import IntMatrix, xgcd


def test_xgcd_bezout():
    for a, b in [(12, 18), (-4, 6), (0, 5), (7, 0), (-3, -9), (1, 1)]:
        g, s, t = xgcd(a, b)
        assert g == s * a + t * b
        assert g >= 0


def test_det_known_values():
    assert IntMatrix([[2, 1], [1, 1]]).det() == 1
    assert IntMatrix([[1, 2, 3], [4, 5, 6], [7, 8, 10]]).det() == -3
    assert IntMatrix([[1, 2], [2, 4]]).det() == 0
    assert IntMatrix([]).det() == 1


def test_rank():
    assert IntMatrix([[1, 2], [2, 4]]).rank() == 1
    assert IntMatrix([[1, 0], [0, 1]]).rank() == 2
    assert IntMatrix([[1, 1, 1]]).rank() == 1


def _random_matrix(rng, n, m, lo=-5, hi=5):
    return IntMatrix([[rng.randrange(lo, hi + 1) for _ in range(m)] for _ in range(n)])


def test_smith_normal_form_certificate():
    rng = random.Random(11)
    for _ in range(30):
        n, m = rng.randrange(1, 5), rng.randrange(1, 5)
        mat = _random_matrix(rng, n, m)
        u, d, v = mat.smith_normal_form()
        assert u @ mat @ v == d
        assert u.det() in (1, -1)
        assert v.det() in (1, -1)
        diag = [d.rows[i][i] for i in range(min(n, m))]
        for i in range(min(n, m)):
            for j in range(min(n, m)):
                if i != j:
                    assert d.rows[i][j] == 0 if j < m and i < n else True
        for a, b in zip(diag, diag[1:]):
            if a:
                assert b % a == 0
            else:
                assert b == 0
        assert all(x >= 0 for x in diag)


def test_smith_normal_form_fixed():
    mat = IntMatrix([[2, 4, 4], [-6, 6, 12], [10, 4, 16]])
    u, d, v = mat.smith_normal_form()
    assert u @ mat @ v == d
    assert [d.rows[i][i] for i in range(3)] == [2, 2, 156]


def test_hermite_normal_form_canonical():
    # both bases generate the same lattice
    a = IntMatrix([[1, 2, 3], [4, 5, 6]])
    b = IntMatrix([[5, 7, 9], [4, 5, 6]])
    assert a.hermite_normal_form() == b.hermite_normal_form()
    h = a.hermite_normal_form()
    assert h == IntMatrix([[1, 2, 3], [0, 3, 6]])


def test_kernel_basis_is_kernel():
    rng = random.Random(23)
    for _ in range(30):
        n, m = rng.randrange(1, 4), rng.randrange(1, 5)
        mat = _random_matrix(rng, n, m)
        ker = mat.kernel_basis()
        assert ker.nrows == m - mat.rank()
        for row in ker.rows:
            prod = [sum(a * x for a, x in zip(r, row)) for r in mat.rows]
            assert all(p == 0 for p in prod)


def test_kernel_basis_canonical_fixed():
    mat = IntMatrix([[1, 1, 1]])
    ker = mat.kernel_basis()
    assert ker == IntMatrix([[1, 0, -1], [0, 1, -1]])


def test_solve_rational():
    mat = IntMatrix([[2, 0], [0, 3]])
    assert mat.solve_rational([1, 1]) == [Fraction(1, 2), Fraction(1, 3)]
    assert IntMatrix([[1, 1], [1, 1]]).solve_rational([0, 1]) is None
    # underdetermined: free variable pinned to zero
    sol = IntMatrix([[1, 1]]).solve_rational([5])
    assert sol == [Fraction(5), Fraction(0)]


def test_maximal_minors():
    mat = IntMatrix([[1, 0], [0, 1], [1, 1]])
    assert sorted(mat.maximal_minors()) == [-1, 1, 1]
