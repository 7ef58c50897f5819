"""Hypertoric cones: unimodularity, leaves, charts, and certification."""

from fractions import Fraction
from itertools import combinations, permutations

import pytest

from equislice.hypertoric import (
    DecompositionReport,
    TorusActionMatrix,
    check_unimodular,
    decompose_at,
    enumerate_leaves,
    moment_map,
    slice_matrix,
    verify_decomposition,
)
from equislice.intmat import IntMatrix

A1 = [[1], [1]]
A1xA1 = [[1, 0], [1, 0], [0, 1], [0, 1]]
TRIPLE = [[1], [1], [1]]


def _fraction_det(rows):
    a = [[Fraction(x) for x in row] for row in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if a[i][c]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            det = -det
        det *= a[c][c]
        inv = 1 / a[c][c]
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


# -- unimodularity ------------------------------------------------------------


def test_unimodularity_basics():
    assert check_unimodular(A1) == (True, None)
    ok, witness = check_unimodular([[1], [2]])
    assert not ok
    assert witness == {"rows": [2], "minor": 2}
    assert check_unimodular(A1xA1) == (True, None)


def test_unimodularity_matches_fraction_determinants():
    for mat in (A1, A1xA1, TRIPLE, [[1], [2]], [[1, 0], [1, 1], [0, 1]], [[2, 1], [1, 1], [1, 0]]):
        b = TorusActionMatrix(mat)
        minors = [
            _fraction_det([mat[i] for i in sel])
            for sel in combinations(range(b.n), b.m)
        ]
        expected = all(m in (-1, 0, 1) for m in minors)
        assert check_unimodular(mat)[0] == expected


def test_rank_deficient_input_is_refused():
    with pytest.raises(ValueError):
        TorusActionMatrix([[1, 1], [2, 2]])
    with pytest.raises(ValueError):
        check_unimodular([[0], [0]])


# -- moment map ---------------------------------------------------------------


def test_moment_map_formula():
    assert [str(c) for c in moment_map(A1)] == ["1*x2*y2 + 1*x1*y1"]
    assert [str(c) for c in moment_map([[1], [-1]])] == ["-1*x2*y2 + 1*x1*y1"]
    assert [str(c) for c in moment_map(A1xA1)] == [
        "1*x2*y2 + 1*x1*y1",
        "1*x4*y4 + 1*x3*y3",
    ]


# -- leaves -------------------------------------------------------------------


def test_leaf_enumeration_frozen_dimensions():
    assert [l.leaf_dim for l in enumerate_leaves(A1)] == [2, 0]
    assert [l.leaf_dim for l in enumerate_leaves(A1xA1)] == [4, 2, 2, 0]
    assert [l.leaf_dim for l in enumerate_leaves(TRIPLE)] == [4, 0]


def test_leaf_descriptors_carry_flats_and_lattices():
    leaves = enumerate_leaves(A1xA1)
    open_leaf, mid1, mid2, vertex = leaves
    assert open_leaf.is_open and open_leaf.flat == ()
    assert vertex.is_vertex and vertex.flat == (1, 2, 3, 4)
    assert mid1.flat == (1, 2) and mid1.subtorus_lattice == IntMatrix([[1, 0]])
    assert mid2.flat == (3, 4) and mid2.subtorus_lattice == IntMatrix([[0, 1]])
    for leaf in leaves:
        assert leaf.leaf_dim % 2 == 0
        _, d, _ = leaf.subtorus_lattice.smith_normal_form()
        assert all(d.rows[i][i] == 1 for i in range(leaf.subtorus_lattice.nrows))


def test_open_leaf_dimension_formula():
    for mat in (A1, A1xA1, TRIPLE):
        b = TorusActionMatrix(mat)
        assert enumerate_leaves(mat)[0].leaf_dim == 2 * (b.n - b.m)


def test_leaves_invariant_under_row_permutation():
    base = sorted(l.leaf_dim for l in enumerate_leaves(A1xA1))
    for perm in permutations(range(4)):
        mat = [A1xA1[i] for i in perm]
        assert sorted(l.leaf_dim for l in enumerate_leaves(mat)) == base


def test_nonunimodular_enumeration_is_refused():
    with pytest.raises(ValueError):
        enumerate_leaves([[1], [2]])


# -- slice matrices -----------------------------------------------------------


def test_slice_matrices():
    assert slice_matrix(A1xA1, (1, 2)) == IntMatrix([[1], [1]])
    assert slice_matrix(A1xA1, ()) == IntMatrix([])
    assert slice_matrix(A1, (1, 2)) == IntMatrix([[1], [1]])


def test_slice_matrix_rejects_non_flats():
    with pytest.raises(ValueError):
        slice_matrix(A1, (1,))
    with pytest.raises(ValueError):
        slice_matrix(A1xA1, (1, 3))


def test_slice_matrices_stay_unimodular():
    for mat in (A1, A1xA1, TRIPLE):
        for leaf in enumerate_leaves(mat):
            sliced = slice_matrix(mat, leaf.flat)
            if sliced.nrows:
                assert check_unimodular(sliced.rows)[0]


# -- charts -------------------------------------------------------------------


def test_open_chart_of_the_quadric_cone():
    open_leaf = enumerate_leaves(A1)[0]
    report = decompose_at(A1, open_leaf, nonvanishing={1: "x"})
    assert report.g == (1,)
    assert report.r == IntMatrix([[-1]])
    assert report.weights == {"x2": 0, "y2": 2}
    assert report.hyperplanes == ["x1"]
    assert verify_decomposition(A1, report, order=5)["ok"]


def test_middle_leaf_chart_of_the_product():
    leaf = next(l for l in enumerate_leaves(A1xA1) if l.flat == (1, 2))
    report = decompose_at(A1xA1, leaf, nonvanishing={3: "x"})
    assert report.g == (3,)
    assert report.r == IntMatrix([[-1]])
    assert report.weights == {"x4": 0, "y4": 2}
    assert report.slice_matrix == IntMatrix([[1], [1]])
    assert verify_decomposition(A1xA1, report, order=5)["ok"]


def test_triple_column_open_chart():
    report = decompose_at(TRIPLE, enumerate_leaves(TRIPLE)[0])
    assert report.g == (1,)
    assert report.r == IntMatrix([[-1], [-1]])
    assert report.weights == {"x2": 0, "x3": 0, "y2": 2, "y3": 2}
    assert verify_decomposition(TRIPLE, report, order=5)["ok"]


def test_vertex_chart_has_no_leaf_coordinates():
    vertex = next(l for l in enumerate_leaves(A1) if l.is_vertex)
    report = decompose_at(A1, vertex)
    assert report.g == ()
    assert report.weights == {}
    assert report.slice_matrix == IntMatrix([[1], [1]])
    assert verify_decomposition(A1, report, order=5)["ok"]


def test_conjugate_designation_swaps_the_chart():
    report = decompose_at(A1, enumerate_leaves(A1)[0], nonvanishing={2: "y"})
    assert report.g == (2,)
    assert report.hyperplanes == ["y2"]
    assert report.weights == {"x1": 2, "y1": 0}
    assert verify_decomposition(A1, report, order=5)["ok"]


def test_weight_sum_constraint_on_every_chart():
    for mat in (A1, A1xA1, TRIPLE):
        for leaf in enumerate_leaves(mat):
            report = decompose_at(mat, leaf)
            for i in (i for i in leaf.fixed if i not in report.g):
                assert report.weights[f"x{i}"] + report.weights[f"y{i}"] == 2
            assert verify_decomposition(mat, report, order=5)["ok"]


def test_unusable_sign_data_is_refused():
    with pytest.raises(ValueError):
        decompose_at(A1, enumerate_leaves(A1)[0], nonvanishing={})


def test_corrupted_dressing_exponent_fails_verification():
    leaf = next(l for l in enumerate_leaves(A1xA1) if l.flat == (1, 2))
    report = decompose_at(A1xA1, leaf, nonvanishing={3: "x"})
    corrupted = DecompositionReport(
        leaf=report.leaf,
        g=report.g,
        designated=report.designated,
        r=IntMatrix([[1]]),
        weights={"x4": 2, "y4": 0},
        slice_mat=report.slice_matrix,
        hyperplanes=report.hyperplanes,
    )
    out = verify_decomposition(A1xA1, corrupted, order=5)
    assert not out["ok"]
    assert any(f["check"] == "invariance" for f in out["failures"])
