"""Symplectic leaves and slice data of finite linear quotient cones.

A finite group acting linearly on a symplectic vector space, with matrix
entries in a cyclotomic field, gives a quotient cone whose symplectic
leaves are indexed by the parabolic subgroups: the pointwise stabilizers
of points of the vector space.  Each leaf is the free locus of the fixed
space of its parabolic, quotiented by the residual action of the
normalizer, and the transverse slice is the quotient of the symplectic
complement of the fixed space by the parabolic itself.

All arithmetic is exact over the cyclotomic field of the input, so every
reported subspace, projection, and pairing is certified by construction
rather than approximated.  The conic weight of a leaf is two exactly
when minus the identity acts on the fixed space through the residual
group, the only case where the dilation character of the slice halves.

The commutator data of the graded deformations supported by such a cone
is recorded by the symplectic reflections of the group: the elements
moving only a two-dimensional subspace.  Each reflection contributes its
own skew pairing, the symplectic form restricted to the moved plane, and
reflections share a deformation parameter exactly when they are
conjugate.
"""

from __future__ import annotations

from .linalg import kernel_basis, rank, solve
from .scalars import CycloField, CycloNumber, Q, as_scalar

Matrix = tuple[tuple[CycloNumber, ...], ...]
Vector = tuple[CycloNumber, ...]


def _vector(field: CycloField, entries) -> Vector:
    return tuple(as_scalar(x, field) for x in entries)


def _matrix(field: CycloField, rows) -> Matrix:
    return tuple(_vector(field, r) for r in rows)


def _identity_matrix(field: CycloField, n: int) -> Matrix:
    one, zero = field.one(), field.zero()
    return tuple(
        tuple(one if i == j else zero for j in range(n)) for i in range(n)
    )


def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(len(b))), start=a[i][0] * 0)
              for j in range(len(b[0])))
        for i in range(len(a))
    )


def _mat_vec(a: Matrix, v) -> Vector:
    return tuple(
        sum((a[i][k] * v[k] for k in range(len(v))), start=a[i][0] * 0)
        for i in range(len(a))
    )


def _transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def _pairing(omega: Matrix, x, y):
    wy = _mat_vec(omega, y)
    return sum((xi * wi for xi, wi in zip(x, wy)), start=omega[0][0] * 0)


def _matrix_json(a: Matrix) -> list[list[str]]:
    return [[repr(x) for x in row] for row in a]


class GroupData:
    """A finite matrix group preserving an exact symplectic form.

    Elements are stored as hashable tuples of field entries, closed
    under multiplication, with the identity present.  The element order
    is the closure order from the generators, so it is deterministic;
    conjugacy classes are sorted index tuples."""

    def __init__(self, field: CycloField, omega, elements, generators):
        self.field = field
        self.omega = _matrix(field, omega)
        self.dim = len(self.omega)
        if self.dim % 2 != 0:
            raise ValueError("the symplectic space must be even dimensional")
        if any(len(r) != self.dim for r in self.omega):
            raise ValueError("the symplectic form must be a square matrix")
        if _transpose(self.omega) != tuple(
            tuple(-x for x in row) for row in self.omega
        ):
            raise ValueError("the symplectic form must be skew")
        if rank([list(r) for r in self.omega]) != self.dim:
            raise ValueError("the symplectic form must be nondegenerate")
        self.elements: tuple[Matrix, ...] = tuple(elements)
        self.generators = tuple(generators)
        self._index = {g: i for i, g in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise ValueError("duplicate group elements")
        ident = _identity_matrix(field, self.dim)
        if ident not in self._index:
            raise ValueError("the identity is missing from the element list")
        self.identity = self._index[ident]
        for i, g in enumerate(self.elements):
            if not self._preserves_form(g):
                raise ValueError(f"element {i} does not preserve the form")
        self._inverse = self._inverse_table()
        self.classes = self._conjugacy_classes()
        self._fixed: dict[int, tuple[Vector, ...]] = {}

    def _preserves_form(self, g: Matrix) -> bool:
        return _mat_mul(_mat_mul(_transpose(g), self.omega), g) == self.omega

    def _inverse_table(self) -> tuple[int, ...]:
        inv = [-1] * len(self.elements)
        for i, g in enumerate(self.elements):
            for j, h in enumerate(self.elements):
                if _mat_mul(g, h) == self.elements[self.identity]:
                    inv[i] = j
                    break
            if inv[i] < 0:
                raise ValueError(f"element {i} has no inverse in the list")
        return tuple(inv)

    def _conjugacy_classes(self) -> tuple[tuple[int, ...], ...]:
        seen: set[int] = set()
        classes = []
        for i in range(self.order):
            if i in seen:
                continue
            orbit = {
                self.multiply(self.multiply(h, i), self.inverse(h))
                for h in range(self.order)
            }
            seen |= orbit
            classes.append(tuple(sorted(orbit)))
        return tuple(sorted(classes))

    @property
    def order(self) -> int:
        return len(self.elements)

    def element(self, i: int) -> Matrix:
        return self.elements[i]

    def index(self, g: Matrix) -> int:
        if g not in self._index:
            raise ValueError("the matrix is not a group element")
        return self._index[g]

    def multiply(self, i: int, j: int) -> int:
        return self.index(_mat_mul(self.elements[i], self.elements[j]))

    def inverse(self, i: int) -> int:
        return self._inverse[i]

    def fixed_space(self, i: int) -> tuple[Vector, ...]:
        """Reduced basis of the fixed space of one element."""
        if i not in self._fixed:
            g = self.elements[i]
            rows = [
                [g[r][c] - (1 if r == c else 0) for c in range(self.dim)]
                for r in range(self.dim)
            ]
            self._fixed[i] = tuple(
                _vector(self.field, v) for v in kernel_basis(rows)
            )
        return self._fixed[i]

    def as_json(self) -> dict:
        return {
            "cyclotomic_order": self.field.order,
            "dim": self.dim,
            "order": self.order,
            "omega": _matrix_json(self.omega),
            "generators": list(self.generators),
            "elements": [_matrix_json(g) for g in self.elements],
            "classes": [list(c) for c in self.classes],
        }

    def __repr__(self):
        return (
            f"GroupData(order={self.order}, dim={self.dim}, "
            f"cyclotomic_order={self.field.order})"
        )


def close_group(generators, omega, field: CycloField | None = None,
                cap: int = 512) -> GroupData:
    """Close a generating set of exact symplectic matrices into a group.

    The field defaults to the common field of any cyclotomic entry, or
    to the rationals when every entry is an integer or Fraction.  The
    closure aborts once it exceeds `cap` elements, the sign that the
    generators do not generate a finite group."""
    if field is None:
        for g in generators:
            for row in g:
                for x in row:
                    if isinstance(x, CycloNumber):
                        field = x.field
                        break
    if field is None:
        field = CycloField(1)
    omega_m = _matrix(field, omega)
    dim = len(omega_m)
    gens = [_matrix(field, g) for g in generators]
    for i, g in enumerate(gens):
        if len(g) != dim or any(len(r) != dim for r in g):
            raise ValueError(f"generator {i} does not match the form size")
        if _mat_mul(_mat_mul(_transpose(g), omega_m), g) != omega_m:
            raise ValueError(f"generator {i} does not preserve the form")
    ident = _identity_matrix(field, dim)
    elements = [ident]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                p = _mat_mul(h, g)
                if p not in seen:
                    seen.add(p)
                    elements.append(p)
                    nxt.append(p)
                    if len(elements) > cap:
                        raise ValueError(
                            f"group closure exceeded {cap} elements; the "
                            "generators may not generate a finite group"
                        )
        frontier = nxt
    data = GroupData(field, omega_m, elements, range(1, 1 + len(gens)))
    gen_idx = tuple(data.index(g) for g in gens)
    data.generators = gen_idx
    return data


def _reduced_basis(field: CycloField, vectors) -> tuple[Vector, ...]:
    """Canonical (reduced echelon) basis of a span, empty for the zero
    space."""
    if not vectors:
        return ()
    from .linalg import rref

    reduced, pivots = rref([list(v) for v in vectors])
    return tuple(_vector(field, reduced[i]) for i in range(len(pivots)))


def _intersect(field: CycloField, a, b, dim: int) -> tuple[Vector, ...]:
    """Intersection of two spans, each given by a basis (empty = zero)."""
    if not a or not b:
        return ()
    constraints = kernel_basis([list(v) for v in a]) + kernel_basis(
        [list(v) for v in b]
    )
    if not constraints:
        return _reduced_basis(field, _identity_matrix(field, dim))
    return _reduced_basis(field, kernel_basis(constraints))


def _contains(space, vectors) -> bool:
    if not vectors:
        return True
    if not space:
        return False
    cols = [[v[i] for v in space] for i in range(len(space[0]))]
    return all(solve(cols, list(w)) is not None for w in vectors)


def _omega_perp(field: CycloField, omega: Matrix,
                space) -> tuple[Vector, ...]:
    """Symplectic orthogonal complement of a span."""
    dim = len(omega)
    if not space:
        return _reduced_basis(field, _identity_matrix(field, dim))
    rows = [list(_mat_vec(omega, w)) for w in space]
    return _reduced_basis(field, kernel_basis(rows))


class ParabolicRecord:
    """One parabolic subgroup with the geometry of its leaf.

    The subgroup is the pointwise stabilizer of its own fixed space, the
    leaf closure is the quotient of that fixed space by the residual
    action of the normalizer, and the slice direction is the symplectic
    complement.  The fixed space and its complement always pair into a
    direct sum with both pieces symplectic; this is re-checked exactly
    on construction."""

    def __init__(self, group: GroupData, subgroup):
        self.group = group
        self.subgroup = tuple(sorted(subgroup))
        field, dim = group.field, group.dim
        fixed = _reduced_basis(field, _identity_matrix(field, dim))
        for i in self.subgroup:
            fixed = _intersect(field, fixed, group.fixed_space(i), dim)
        self.fixed_basis = fixed
        self.perp_basis = _omega_perp(field, group.omega, fixed)
        together = [list(v) for v in fixed + self.perp_basis]
        assert len(together) == dim and rank(together) == dim, (
            "the fixed space of a parabolic must be symplectic"
        )
        members = set(self.subgroup)
        self.normalizer = tuple(
            h for h in range(group.order)
            if {group.multiply(group.multiply(h, i), group.inverse(h))
                for i in self.subgroup} == members
        )
        self.residual_order = len(self.normalizer) // len(self.subgroup)
        self.leaf_dim = len(fixed)

    def as_json(self) -> dict:
        return {
            "subgroup": list(self.subgroup),
            "subgroup_order": len(self.subgroup),
            "leaf_dim": self.leaf_dim,
            "fixed_basis": [[repr(x) for x in v] for v in self.fixed_basis],
            "perp_basis": [[repr(x) for x in v] for v in self.perp_basis],
            "normalizer_order": len(self.normalizer),
            "residual_order": self.residual_order,
        }

    def __repr__(self):
        return (
            f"ParabolicRecord(order={len(self.subgroup)}, "
            f"leaf_dim={self.leaf_dim})"
        )


def parabolic_subgroups(group: GroupData) -> tuple[ParabolicRecord, ...]:
    """All pointwise stabilizers of points, one record per subgroup.

    Every stabilizer of a point is the stabilizer of a generic point of
    some intersection of element fixed spaces, so the intersection
    lattice of the fixed spaces enumerates the parabolics without
    touching the full subgroup lattice."""
    field, dim = group.field, group.dim
    spaces: dict[tuple, tuple[Vector, ...]] = {}

    def record(basis) -> bool:
        key = tuple(basis)
        if key in spaces:
            return False
        spaces[key] = basis
        return True

    generators = [
        _reduced_basis(field, group.fixed_space(i))
        for i in range(group.order)
    ]
    frontier = [b for b in generators if record(b)]
    while frontier:
        nxt = []
        for space in frontier:
            for gen in generators:
                meet = _intersect(field, space, gen, dim)
                if record(meet):
                    nxt.append(meet)
        frontier = nxt

    by_subgroup: dict[tuple[int, ...], ParabolicRecord] = {}
    for basis in spaces.values():
        stab = tuple(
            sorted(
                i for i in range(group.order)
                if _contains(group.fixed_space(i), basis)
            )
        )
        if stab not in by_subgroup:
            by_subgroup[stab] = ParabolicRecord(group, stab)
    return tuple(
        sorted(
            by_subgroup.values(),
            key=lambda r: (-r.leaf_dim, r.subgroup),
        )
    )


class SRAData:
    """Symplectic reflections of the group with their skew pairings.

    A reflection moves exactly a two-dimensional subspace; its pairing
    is the symplectic form compressed to that moved plane, so it kills
    the fixed space and agrees with the form on the moved plane.  The
    deformation parameters are one for the symplectic form itself and
    one per conjugacy class of reflections, in class order."""

    def __init__(self, group: GroupData):
        self.group = group
        self.reflections = tuple(
            i for i in range(group.order)
            if group.dim - len(group.fixed_space(i)) == 2
        )
        inside = set(self.reflections)
        self.classes = tuple(
            c for c in group.classes if set(c) <= inside
        )
        assert sum(len(c) for c in self.classes) == len(self.reflections), (
            "conjugation must preserve the reflection set"
        )
        self.param_of = {
            s: f"c{k + 1}" for k, c in enumerate(self.classes) for s in c
        }
        self.params = ("hbar",) + tuple(
            f"c{k + 1}" for k in range(len(self.classes))
        )
        self.omega_s = {s: self._compressed_form(s) for s in self.reflections}

    def _compressed_form(self, s: int) -> Matrix:
        group = self.group
        field, dim = group.field, group.dim
        g = group.element(s)
        kernel = group.fixed_space(s)
        moved_cols = [
            [g[r][c] - (1 if r == c else 0) for c in range(dim)]
            for r in range(dim)
        ]
        moved = _reduced_basis(
            field, [tuple(col) for col in zip(*moved_cols)]
        )
        basis = list(kernel) + list(moved)
        assert len(basis) == dim and rank([list(v) for v in basis]) == dim, (
            "a reflection must split the space into fixed plus moved"
        )
        cols = [[v[i] for v in basis] for i in range(dim)]
        proj_cols = []
        for j in range(dim):
            e = [field.one() if i == j else field.zero() for i in range(dim)]
            c = solve(cols, e)
            image_part = [
                sum(
                    (c[len(kernel) + t] * moved[t][i]
                     for t in range(len(moved))),
                    start=field.zero(),
                )
                for i in range(dim)
            ]
            proj_cols.append(image_part)
        proj = tuple(
            tuple(as_scalar(proj_cols[j][i], field) for j in range(dim))
            for i in range(dim)
        )
        out = _mat_mul(_mat_mul(_transpose(proj), group.omega), proj)
        assert _transpose(out) == tuple(
            tuple(-x for x in row) for row in out
        ), "a compressed symplectic form must stay skew"
        return out

    def as_json(self) -> dict:
        return {
            "reflections": list(self.reflections),
            "classes": [list(c) for c in self.classes],
            "params": list(self.params),
            "omega_s": {
                str(s): _matrix_json(m) for s, m in self.omega_s.items()
            },
        }

    def __repr__(self):
        return (
            f"SRAData(reflections={len(self.reflections)}, "
            f"classes={len(self.classes)})"
        )


def symplectic_reflections(group: GroupData) -> SRAData:
    """Reflection data of the group: the elements moving a plane."""
    return SRAData(group)


def sra_relation(group: GroupData, sra: SRAData, x, y) -> dict:
    """Commutator of two linear generators in the universal deformation.

    Returns the exact coefficient of each (parameter, group element)
    pair in [x, y]: the symplectic pairing times the central parameter
    on the identity, plus one pairing term per reflection whose
    compressed form does not kill the pair.  Zero coefficients are
    omitted, so antisymmetry is literal dictionary negation."""
    field = group.field
    vx = _vector(field, x)
    vy = _vector(field, y)
    if len(vx) != group.dim or len(vy) != group.dim:
        raise ValueError("the generators must have one entry per dimension")
    out: dict[tuple[str, int], CycloNumber] = {}
    top = _pairing(group.omega, vx, vy)
    if top:
        out[("hbar", group.identity)] = top
    for s in sra.reflections:
        c = _pairing(sra.omega_s[s], vx, vy)
        if c:
            out[(sra.param_of[s], s)] = c
    return out


def _line_stabilizer_order(group: GroupData, v: Vector) -> int:
    """Number of scalars through which group elements rescale the line
    of a nonzero vector."""
    pivot = next(i for i, x in enumerate(v) if x)
    scalars = set()
    for g in group.elements:
        w = _mat_vec(g, v)
        lam = w[pivot] / v[pivot]
        if all(wi == lam * vi for wi, vi in zip(w, v)):
            scalars.add(lam)
    return len(scalars)


def _restrict(group: GroupData, i: int, basis) -> Matrix:
    """Matrix of one element in the coordinates of an invariant basis."""
    field = group.field
    g = group.element(i)
    if not basis:
        return ()
    cols = [[v[r] for v in basis] for r in range(group.dim)]
    out_cols = []
    for b in basis:
        c = solve(cols, list(_mat_vec(g, b)))
        if c is None:
            raise ValueError("the subspace is not invariant under the group")
        out_cols.append([as_scalar(x, field) for x in c])
    return tuple(
        tuple(out_cols[j][i] for j in range(len(basis)))
        for i in range(len(basis))
    )


def leaf_slice_data(group: GroupData, record: ParabolicRecord, v,
                    lagrangian=None) -> dict:
    """Slice data of one leaf at one base point of its fixed space.

    The base point must be nonzero with stabilizer exactly the recorded
    parabolic; this is checked and a mismatch is an error, since a
    special point sits on a smaller leaf.  In particular the vertex
    leaf of a nontrivial group has no valid base point: only zero is
    fixed by everything.  The report carries the slice group written in
    the coordinates of the symplectic complement, the conic weight of
    the leaf (two exactly when minus the identity acts on the fixed
    space through the residual group), and separately the number of
    scalars through which the whole group rescales the base line, which
    is meaningful even at special points of other leaves.

    An optional lagrangian, a basis of a subspace, adds a flag telling
    whether the group preserves it, the case where the quotient is a
    cotangent cone up to finite cover."""
    field = group.field
    vv = _vector(field, v)
    if len(vv) != group.dim:
        raise ValueError("the base point must have one entry per dimension")
    if not any(vv):
        raise ValueError("the base point must be nonzero")
    stab = tuple(
        sorted(
            i for i in range(group.order)
            if _mat_vec(group.element(i), vv) == vv
        )
    )
    if stab != record.subgroup:
        raise ValueError(
            f"the base point has stabilizer of order {len(stab)}, not the "
            f"recorded parabolic of order {len(record.subgroup)}"
        )
    assert _contains(record.fixed_basis, [vv]), (
        "a point with the recorded stabilizer lies in its fixed space"
    )

    slice_group = [_restrict(group, i, record.perp_basis)
                   for i in record.subgroup]
    seen = set(slice_group)
    for a in slice_group:
        for b in slice_group:
            if _mat_mul(a, b) not in seen:
                raise ValueError("the slice matrices do not close")
    slice_form: Matrix = ()
    if record.perp_basis:
        columns = tuple(
            tuple(w[r] for w in record.perp_basis) for r in range(group.dim)
        )
        slice_form = _mat_mul(
            _mat_mul(_transpose(columns), group.omega), columns
        )

    minus_on_fixed = any(
        all(
            _mat_vec(group.element(h), w) == tuple(-x for x in w)
            for w in record.fixed_basis
        )
        for h in record.normalizer
    )
    out = {
        "leaf_dim": record.leaf_dim,
        "subgroup_order": len(record.subgroup),
        "normalizer_order": len(record.normalizer),
        "residual_order": record.residual_order,
        "conic_weight": 2 if minus_on_fixed else 1,
        "line_stabilizer_order": _line_stabilizer_order(group, vv),
        "slice_dim": len(record.perp_basis),
        "slice_group_order": len(slice_group),
        "slice_group": [_matrix_json(m) for m in slice_group],
        "slice_form": _matrix_json(slice_form),
    }
    if lagrangian is not None:
        basis = _reduced_basis(field, [_vector(field, w) for w in lagrangian])
        preserved = all(
            _contains(basis, [_mat_vec(g, w) for w in basis])
            for g in group.elements
        )
        out["cotangent_cover"] = preserved
    return out
