"""Finite quotients: group closure, parabolics, reflections, slices."""

import json
from fractions import Fraction

import pytest

from equislice.fixtures import (
    DOUBLE_PLANE_FORM,
    PLANE_FORM,
    binary_dihedral_action,
    cyclic_plane_action,
    pairwise_sign_action,
)
from equislice.linalg import rank
from equislice.quotient import (
    close_group,
    leaf_slice_data,
    parabolic_subgroups,
    sra_relation,
    symplectic_reflections,
)
from equislice.scalars import CycloField

BLOCK_GENERATORS = (
    ((-1, 0, 0, 0), (0, -1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),
    ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, -1, 0), (0, 0, 0, -1)),
)


def _mat_mul4(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(4)) for j in range(4))
        for i in range(4)
    )


def _record_by_dim(group, dim):
    recs = [r for r in parabolic_subgroups(group) if r.leaf_dim == dim]
    assert len(recs) == 1
    return recs[0]


# -- group closure -------------------------------------------------------------


def test_close_group_orders():
    assert cyclic_plane_action(1).order == 1
    assert cyclic_plane_action(2).order == 2
    assert cyclic_plane_action(3).order == 3
    assert pairwise_sign_action().order == 4
    assert binary_dihedral_action().order == 8


def test_close_group_contains_inverses_and_identity():
    group = binary_dihedral_action()
    assert group.element(group.identity) == tuple(
        tuple(group.field.one() if i == j else group.field.zero()
              for j in range(2))
        for i in range(2)
    )
    for i in range(group.order):
        assert group.multiply(i, group.inverse(i)) == group.identity


def test_close_group_rejects_nonsymplectic_generator():
    with pytest.raises(ValueError, match="does not preserve"):
        close_group([[[2, 0], [0, 1]]], PLANE_FORM)


def test_close_group_rejects_bad_forms():
    with pytest.raises(ValueError, match="nondegenerate"):
        close_group([], [[0, 0], [0, 0]])
    with pytest.raises(ValueError, match="skew"):
        close_group([], [[1, 0], [0, 1]])
    with pytest.raises(ValueError, match="even"):
        close_group([], [[0]])


def test_close_group_cap_guards_infinite_closure():
    # diag(2, 1/2) is symplectic but of infinite order
    gen = [[Fraction(2), 0], [0, Fraction(1, 2)]]
    with pytest.raises(ValueError, match="exceeded"):
        close_group([gen], PLANE_FORM, cap=64)


def test_conjugacy_classes():
    z2 = cyclic_plane_action(2)
    assert z2.classes == ((0,), (1,))
    sizes = sorted(len(c) for c in binary_dihedral_action().classes)
    assert sizes == [1, 1, 2, 2, 2]


# -- parabolic subgroups -------------------------------------------------------


def test_parabolic_counts():
    assert len(parabolic_subgroups(cyclic_plane_action(2))) == 2
    assert len(parabolic_subgroups(cyclic_plane_action(3))) == 2
    assert len(parabolic_subgroups(pairwise_sign_action())) == 4
    assert len(parabolic_subgroups(binary_dihedral_action())) == 2


def test_parabolic_records_of_plane_involution():
    open_leaf, vertex = parabolic_subgroups(cyclic_plane_action(2))
    assert open_leaf.subgroup == (0,)
    assert open_leaf.leaf_dim == 2
    assert open_leaf.residual_order == 2
    assert open_leaf.perp_basis == ()
    assert vertex.subgroup == (0, 1)
    assert vertex.leaf_dim == 0
    assert vertex.fixed_basis == ()
    assert vertex.residual_order == 1


def test_klein_four_parabolics_exclude_the_diagonal():
    group = pairwise_sign_action()
    minus = group.index(
        tuple(
            tuple(-group.field.one() if i == j else group.field.zero()
                  for j in range(4))
            for i in range(4)
        )
    )
    subgroups = [r.subgroup for r in parabolic_subgroups(group)]
    # the diagonal sign subgroup fixes only the origin, so it stabilizes
    # no point that a larger subgroup does not already stabilize
    assert (group.identity, minus) not in subgroups
    assert sorted(len(s) for s in subgroups) == [1, 2, 2, 4]


def test_klein_four_fixed_and_perp_spaces():
    group = pairwise_sign_action()
    mid = next(
        r for r in parabolic_subgroups(group)
        if r.leaf_dim == 2 and 1 in r.subgroup
    )
    assert mid.fixed_basis == ((0, 0, 1, 0), (0, 0, 0, 1))
    assert mid.perp_basis == ((1, 0, 0, 0), (0, 1, 0, 0))
    together = [list(v) for v in mid.fixed_basis + mid.perp_basis]
    assert rank(together) == 4


def test_parabolic_count_invariant_under_symplectic_conjugation():
    # transvection along e1+e3 mixes the two planes
    shear = ((1, -1, 0, -1), (0, 1, 0, 0), (0, -1, 1, -1), (0, 0, 0, 1))
    unshear = ((1, 1, 0, 1), (0, 1, 0, 0), (0, 1, 1, 1), (0, 0, 0, 1))
    assert _mat_mul4(shear, unshear) == tuple(
        tuple(1 if i == j else 0 for j in range(4)) for i in range(4)
    )
    conjugated = [
        _mat_mul4(_mat_mul4(shear, g), unshear) for g in BLOCK_GENERATORS
    ]
    assert conjugated[0] != BLOCK_GENERATORS[0]
    base = parabolic_subgroups(pairwise_sign_action())
    moved = parabolic_subgroups(close_group(conjugated, DOUBLE_PLANE_FORM))
    assert len(base) == len(moved)
    assert [r.leaf_dim for r in base] == [r.leaf_dim for r in moved]
    assert [r.residual_order for r in base] == [r.residual_order for r in moved]


# -- symplectic reflections ----------------------------------------------------


def test_plane_involution_reflection_is_minus_identity():
    group = cyclic_plane_action(2)
    sra = symplectic_reflections(group)
    assert sra.reflections == (1,)
    assert sra.classes == ((1,),)
    assert sra.params == ("hbar", "c1")
    assert sra.omega_s[1] == PLANE_FORM


def test_cyclic_reflection_counts():
    for n in (2, 3, 5):
        sra = symplectic_reflections(cyclic_plane_action(n))
        assert len(sra.reflections) == n - 1
        assert all(len(c) == 1 for c in sra.classes)
        assert len(sra.classes) == n - 1


def test_klein_four_reflection_pairings():
    group = pairwise_sign_action()
    sra = symplectic_reflections(group)
    assert sra.reflections == (1, 2)
    first = group.index(
        tuple(
            tuple(group.field.element([v]) for v in row)
            for row in BLOCK_GENERATORS[0]
        )
    )
    assert first == 1
    assert sra.omega_s[1] == (
        (0, 1, 0, 0), (-1, 0, 0, 0), (0, 0, 0, 0), (0, 0, 0, 0),
    )
    assert sra.omega_s[2] == (
        (0, 0, 0, 0), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, -1, 0),
    )


def test_reflection_moved_ranks_sum():
    group = binary_dihedral_action()
    sra = symplectic_reflections(group)
    assert len(sra.reflections) == 7
    assert len(sra.classes) == 4
    total = 0
    for s in sra.reflections:
        g = group.element(s)
        moved = [
            [g[r][c] - (1 if r == c else 0) for c in range(2)]
            for r in range(2)
        ]
        total += rank(moved)
    assert total == 2 * len(sra.reflections)


def test_compressed_forms_are_skew_and_kill_the_fixed_space():
    for group in (pairwise_sign_action(), binary_dihedral_action()):
        sra = symplectic_reflections(group)
        for s in sra.reflections:
            m = sra.omega_s[s]
            assert all(
                m[i][j] == -m[j][i]
                for i in range(group.dim) for j in range(group.dim)
            )
            for w in group.fixed_space(s):
                assert all(
                    not sum(m[i][j] * w[j] for j in range(group.dim))
                    for i in range(group.dim)
                )


# -- leaf slice data -----------------------------------------------------------


def test_klein_four_middle_leaf_slice():
    group = pairwise_sign_action()
    mid = next(
        r for r in parabolic_subgroups(group)
        if r.leaf_dim == 2 and 1 in r.subgroup
    )
    data = leaf_slice_data(group, mid, [0, 0, 1, 2])
    assert data["leaf_dim"] == 2
    assert data["subgroup_order"] == 2
    assert data["normalizer_order"] == 4
    assert data["residual_order"] == 2
    assert data["conic_weight"] == 2
    assert data["line_stabilizer_order"] == 2
    assert data["slice_dim"] == 2
    assert data["slice_group_order"] == 2
    assert data["slice_group"] == [
        [["1", "0"], ["0", "1"]],
        [["-1", "0"], ["0", "-1"]],
    ]
    assert data["slice_form"] == [["0", "1"], ["-1", "0"]]


def test_cyclic_open_leaf_conic_weights():
    z3 = cyclic_plane_action(3)
    d3 = leaf_slice_data(z3, _record_by_dim(z3, 2), [1, 5])
    assert d3["conic_weight"] == 1
    assert d3["line_stabilizer_order"] == 1
    assert d3["residual_order"] == 3

    z2 = cyclic_plane_action(2)
    d2 = leaf_slice_data(z2, _record_by_dim(z2, 2), [1, 3])
    assert d2["conic_weight"] == 2
    assert d2["line_stabilizer_order"] == 2


def test_lagrangian_cover_flag():
    z2 = cyclic_plane_action(2)
    d2 = leaf_slice_data(
        z2, _record_by_dim(z2, 2), [1, 0], lagrangian=[[1, 0]]
    )
    assert d2["cotangent_cover"] is True
    bd = binary_dihedral_action()
    db = leaf_slice_data(
        bd, _record_by_dim(bd, 2), [1, 0], lagrangian=[[1, 0]]
    )
    # the swap generator moves the first axis off itself
    assert db["cotangent_cover"] is False
    plain = leaf_slice_data(bd, _record_by_dim(bd, 2), [1, 0])
    assert "cotangent_cover" not in plain


def test_leaf_slice_rejects_bad_base_points():
    z2 = cyclic_plane_action(2)
    vertex = _record_by_dim(z2, 0)
    with pytest.raises(ValueError, match="nonzero"):
        leaf_slice_data(z2, vertex, [0, 0])
    # only zero is fixed by everything, so the vertex has no base point
    with pytest.raises(ValueError, match="stabilizer of order 1"):
        leaf_slice_data(z2, vertex, [1, 0])
    with pytest.raises(ValueError, match="one entry per dimension"):
        leaf_slice_data(z2, _record_by_dim(z2, 2), [1, 0, 0])


def test_open_leaf_line_order_counts_scalar_rescalings():
    bd = binary_dihedral_action()
    data = leaf_slice_data(bd, _record_by_dim(bd, 2), [1, 0])
    # diag(i, -i) and its powers rescale the first axis by all of <i>
    assert data["line_stabilizer_order"] == 4
    assert data["conic_weight"] == 2


# -- deformation commutators ---------------------------------------------------


def test_trivial_group_relation_is_the_symplectic_pairing():
    group = cyclic_plane_action(1)
    sra = symplectic_reflections(group)
    assert sra.reflections == ()
    assert sra_relation(group, sra, [1, 0], [0, 1]) == {("hbar", 0): 1}


def test_plane_involution_relation():
    group = cyclic_plane_action(2)
    sra = symplectic_reflections(group)
    rel = sra_relation(group, sra, [1, 0], [0, 1])
    assert rel == {("hbar", 0): 1, ("c1", 1): 1}


def test_relation_is_antisymmetric_and_kills_repeats():
    group = pairwise_sign_action()
    sra = symplectic_reflections(group)
    x, y = [1, 2, 3, 4], [0, 1, 1, 0]
    fwd = sra_relation(group, sra, x, y)
    bwd = sra_relation(group, sra, y, x)
    assert {k: -v for k, v in fwd.items()} == bwd
    assert sra_relation(group, sra, x, x) == {}


def test_klein_four_relation_separates_the_planes():
    group = pairwise_sign_action()
    sra = symplectic_reflections(group)
    # directions in different planes commute in the deformation
    assert sra_relation(group, sra, [1, 0, 0, 0], [0, 0, 1, 0]) == {}
    rel = sra_relation(group, sra, [0, 0, 1, 0], [0, 0, 0, 1])
    assert rel == {("hbar", 0): 1, ("c2", 2): 1}


def test_relation_rejects_wrong_arity():
    group = cyclic_plane_action(2)
    sra = symplectic_reflections(group)
    with pytest.raises(ValueError, match="one entry per dimension"):
        sra_relation(group, sra, [1], [0, 1])


# -- serialization -------------------------------------------------------------


def test_group_json_is_deterministic():
    a = json.dumps(binary_dihedral_action().as_json(), sort_keys=True)
    b = json.dumps(binary_dihedral_action().as_json(), sort_keys=True)
    assert a == b
    data = binary_dihedral_action().as_json()
    assert data["order"] == 8
    assert data["cyclotomic_order"] == 4
    assert data["dim"] == 2
    assert len(data["elements"]) == 8
    assert data["omega"] == [["0", "1"], ["-1", "0"]]


def test_record_and_sra_json_round_trip_through_dumps():
    group = pairwise_sign_action()
    rec = parabolic_subgroups(group)[1].as_json()
    assert rec["subgroup_order"] == 2
    assert rec["leaf_dim"] == 2
    assert json.loads(json.dumps(rec)) == rec
    sra = symplectic_reflections(group).as_json()
    assert sra["reflections"] == [1, 2]
    assert sra["params"] == ["hbar", "c1", "c2"]
    assert json.loads(json.dumps(sra)) == sra
