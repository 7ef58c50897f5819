"""Symplectic leaves and equivariant product charts of hypertoric cones.

A torus (C^x)^m acting diagonally and faithfully on the cotangent bundle
of affine n-space has a Hamiltonian reduction at moment level zero, the
affine hypertoric cone of the action.  Dilation of the cotangent fibers
and base gives every coordinate weight one, so the reduced bracket has
weight -2.  Under the unimodularity hypothesis (every nonzero maximal
minor of the weight matrix is 1 or -1) the cone splits Zariski-locally
along each symplectic leaf as an open piece of the leaf times the
transverse hypertoric slice, with explicit invariant coordinates on the
leaf factor obtained by dressing each coordinate with monomials in the
inverted ones.

Leaves are indexed by parabolic subtori, the pointwise stabilizers of
points of the base; each is recorded by the saturated kernel lattice of
its Lie algebra inside the cocharacter lattice.  Everything here is pure
and deterministic: leaf enumeration, chart construction, and the
symbolic certification of a chart are independent computations.
"""

from __future__ import annotations

from itertools import combinations

from .intmat import IntMatrix
from .poisson import PoissonPresentation
from .series import GradedContext, TruncatedElement


class TorusActionMatrix:
    """Diagonal torus weights on the base coordinates.

    Row i is the character through which the torus scales the i-th base
    coordinate; the conjugate fiber coordinate carries its negation.
    The action is required to be faithful, so the rank must equal the
    number of torus factors."""

    def __init__(self, rows):
        self.matrix = rows if isinstance(rows, IntMatrix) else IntMatrix(rows)
        if self.matrix.nrows == 0:
            raise ValueError("the weight matrix needs at least one row")
        if self.matrix.rank() != self.matrix.ncols:
            raise ValueError(
                "the torus action is not faithful: the weight matrix has "
                f"rank {self.matrix.rank()} but {self.matrix.ncols} columns"
            )

    @property
    def n(self) -> int:
        return self.matrix.nrows

    @property
    def m(self) -> int:
        return self.matrix.ncols

    def row(self, i: int) -> tuple:
        return self.matrix.rows[i]

    def __repr__(self):
        return f"TorusActionMatrix({[list(r) for r in self.matrix.rows]})"


class LeafDescriptor:
    """One symplectic leaf, recorded by its maximal parabolic subtorus.

    The flat lists the base coordinates (one-based) on which the
    subtorus acts nontrivially; the lattice rows are a Hermite basis of
    its Lie algebra inside the cocharacter lattice."""

    def __init__(self, flat, subtorus_lattice: IntMatrix, m: int, n: int):
        self.flat = tuple(sorted(flat))
        self.fixed = tuple(i for i in range(1, n + 1) if i not in self.flat)
        self.subtorus_lattice = subtorus_lattice
        self.leaf_dim = 2 * (len(self.fixed) - (m - subtorus_lattice.nrows))
        self.is_vertex = self.leaf_dim == 0
        self.is_open = subtorus_lattice.nrows == 0
        if self.leaf_dim < 0:
            raise ValueError("negative leaf dimension; the flat is not valid")

    def as_json(self) -> dict:
        return {
            "flat": list(self.flat),
            "fixed": list(self.fixed),
            "subtorus_lattice": [list(r) for r in self.subtorus_lattice.rows],
            "leaf_dim": self.leaf_dim,
            "is_vertex": self.is_vertex,
            "is_open": self.is_open,
        }

    def __repr__(self):
        return f"LeafDescriptor(flat={list(self.flat)}, dim={self.leaf_dim})"


class DecompositionReport:
    """The invariant-coordinate chart of one leaf at one base point.

    g lists the inverted coordinate indices; r has one row per remaining
    leaf coordinate giving the exponents of the dressing monomial, so
    the dressed coordinate has weight 1 + (row sum).  The slice matrix
    records the subtorus weights on the transverse coordinates."""

    def __init__(self, leaf, g, designated, r, weights, slice_mat, hyperplanes):
        self.leaf = leaf
        self.g = tuple(sorted(g))
        self.designated = dict(designated)
        self.r = r
        self.weights = dict(weights)
        self.slice_matrix = slice_mat
        self.hyperplanes = list(hyperplanes)

    def as_json(self) -> dict:
        return {
            "leaf": self.leaf.as_json(),
            "inverted": list(self.g),
            "designated": {str(i): s for i, s in sorted(self.designated.items())},
            "r": [list(row) for row in self.r.rows],
            "weights": dict(sorted(self.weights.items())),
            "slice_matrix": [list(row) for row in self.slice_matrix.rows],
            "hyperplanes": list(self.hyperplanes),
        }

    def __repr__(self):
        return f"DecompositionReport(flat={list(self.leaf.flat)}, inverted={list(self.g)})"


# -- unimodularity and the moment map ----------------------------------------


def check_unimodular(b) -> tuple[bool, dict | None]:
    """Whether every nonzero maximal minor of the weight matrix is 1 or
    -1; on failure the witness names the offending row set and minor."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    for sel in combinations(range(b.n), b.m):
        minor = b.matrix.submatrix(sel, range(b.m)).det()
        if minor not in (-1, 0, 1):
            return False, {"rows": [i + 1 for i in sel], "minor": minor}
    return True, None


def moment_map(b, order: int = 4) -> list[TruncatedElement]:
    """The components of the torus moment map on the cotangent bundle,
    one quadratic per torus factor."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    ctx = cotangent_context(b, order=order)
    out = []
    for t in range(b.m):
        comp = ctx.zero()
        for j in range(b.n):
            if b.row(j)[t]:
                comp = comp + b.row(j)[t] * ctx.var(f"x{j + 1}") * ctx.var(f"y{j + 1}")
        out.append(comp)
    return out


def cotangent_context(b, order: int = 4, invertible=()) -> GradedContext:
    """The dilation-graded coordinate ring of the cotangent bundle: every
    coordinate has weight one, named x1..xn, y1..yn."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    names = [f"x{i + 1}" for i in range(b.n)] + [f"y{i + 1}" for i in range(b.n)]
    inv = tuple(invertible)
    for name in inv:
        if name not in names:
            raise ValueError(f"unknown coordinate {name}")
    return GradedContext(
        tuple(names),
        tuple(1 for _ in names),
        invertible=inv,
        filtration=tuple(nm for nm in names if nm not in inv),
        order=order,
    )


def cotangent_presentation(ctx: GradedContext, n: int) -> PoissonPresentation:
    """The standard symplectic bracket {x_i, y_i} = 1 of weight -2."""
    table = {(f"x{i + 1}", f"y{i + 1}"): ctx.one() for i in range(n)}
    return PoissonPresentation(ctx, table, degree=-2)


# -- leaves -------------------------------------------------------------------


def _stabilizer_lattice(b: TorusActionMatrix, support) -> IntMatrix:
    """Hermite basis of the cocharacters pairing to zero with every base
    character in the support."""
    rows = [b.row(i) for i in sorted(support)]
    if not rows:
        return IntMatrix.identity(b.m).hermite_normal_form()
    return IntMatrix(rows).kernel_basis()


def _fixed_coordinates(b: TorusActionMatrix, lattice: IntMatrix) -> tuple:
    """Zero-based coordinates on which the subtorus with the given Lie
    lattice acts trivially."""
    return tuple(
        i
        for i in range(b.n)
        if all(
            sum(c * w for c, w in zip(vec, b.row(i))) == 0 for vec in lattice.rows
        )
    )


def enumerate_leaves(b) -> list[LeafDescriptor]:
    """All symplectic leaves of the hypertoric cone, one per maximal
    parabolic subtorus, sorted by decreasing dimension.

    Subtori are found by intersecting character kernels over every
    coordinate subset and deduplicating by Hermite basis; each flat then
    gets the full pointwise stabilizer of its fixed locus, so the
    recorded subtorus is maximal for its leaf."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    ok, witness = check_unimodular(b)
    if not ok:
        raise ValueError(f"the action is not unimodular: minor {witness['minor']} on rows {witness['rows']}")
    lattices = {}
    for size in range(b.n + 1):
        for support in combinations(range(b.n), size):
            lat = _stabilizer_lattice(b, support)
            lattices[lat.rows] = lat
    leaves = []
    for lat in lattices.values():
        fixed = _fixed_coordinates(b, lat)
        # the kernel over the full fixed locus reproduces the lattice, so
        # each recorded subtorus is the maximal one for its flat
        assert _stabilizer_lattice(b, fixed).rows == lat.rows
        flat = [i + 1 for i in range(b.n) if i not in fixed]
        leaves.append(LeafDescriptor(flat, lat, b.m, b.n))
    leaves.sort(key=lambda leaf: (-leaf.leaf_dim, leaf.flat))
    return leaves


def slice_matrix(b, flat) -> IntMatrix:
    """Weights of the parabolic subtorus on the coordinates of its flat,
    written in the Hermite basis of the subtorus lattice."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    flat = tuple(sorted(flat))
    if any(i < 1 or i > b.n for i in flat):
        raise ValueError("flat indices must lie in 1..n")
    fixed = tuple(i for i in range(b.n) if i + 1 not in flat)
    lattice = _stabilizer_lattice(b, fixed)
    if _fixed_coordinates(b, lattice) != fixed:
        raise ValueError(f"{list(flat)} is not the flat of a leaf")
    rows = [
        [sum(c * w for c, w in zip(vec, b.row(i - 1))) for vec in lattice.rows]
        for i in flat
    ]
    return IntMatrix(rows)


# -- charts -------------------------------------------------------------------


def _designation(leaf, nonvanishing) -> tuple[dict, set]:
    """Per-coordinate nonvanishing choices and the set usable for
    inversion.  An explicit dictionary restricts inversion to the listed
    coordinates; omitting it designates every leaf coordinate's base
    half as nonvanishing."""
    if nonvanishing is None:
        usable = set(leaf.fixed)
        designated = {i: "x" for i in leaf.fixed}
    else:
        designated = {}
        for i, side in nonvanishing.items():
            if side not in ("x", "y"):
                raise ValueError(f"designation for {i} must be 'x' or 'y'")
            if i not in leaf.fixed:
                raise ValueError(f"coordinate {i} is not fixed by the subtorus")
            designated[int(i)] = side
        usable = set(designated)
    return designated, usable


def decompose_at(b, leaf, nonvanishing=None, invert=None) -> DecompositionReport:
    """The equivariant product chart of a leaf at a base point.

    The sign data says which of the two conjugate coordinates is nonzero
    at the point; the inverted set g (chosen lexicographically unless
    overridden) must carry a faithful action of the quotient torus.  The
    dressing exponents are the unique integers making each remaining
    coordinate invariant, and unimodularity makes them integral."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    designated, usable = _designation(leaf, nonvanishing)
    lattice = leaf.subtorus_lattice
    quotient_dim = b.m - lattice.nrows

    def signed_row(i):
        sign = 1 if designated.get(i, "x") == "x" else -1
        return tuple(sign * w for w in b.row(i - 1))

    if invert is not None:
        g = tuple(sorted(int(i) for i in invert))
        if len(g) != quotient_dim or any(i not in usable for i in g):
            raise ValueError("the inverted set is not usable sign data")
        if IntMatrix([signed_row(i) for i in g]).rank() != quotient_dim and g:
            raise ValueError("the quotient torus does not act faithfully on the inverted set")
    else:
        g = None
        for cand in combinations(sorted(usable), quotient_dim):
            if quotient_dim == 0 or IntMatrix([signed_row(i) for i in cand]).rank() == quotient_dim:
                g = cand
                break
        if g is None:
            raise ValueError(
                "no invertible coordinate set exists for the given sign data; "
                "the base point does not lie on a free orbit"
            )
    remaining = [i for i in leaf.fixed if i not in g]
    columns = IntMatrix([signed_row(j) for j in g]).transpose() if g else IntMatrix([])
    r_rows = []
    weights = {}
    for i in remaining:
        target = [-w for w in b.row(i - 1)]
        sol = columns.solve_rational(target) if g else ([] if not any(target) else None)
        if sol is None or any(x.denominator != 1 for x in sol):
            raise ValueError(f"no integral dressing exponents for coordinate {i}")
        row = [int(x) for x in sol]
        r_rows.append(row)
        weights[f"x{i}"] = 1 + sum(row)
        weights[f"y{i}"] = 1 - sum(row)
    report = DecompositionReport(
        leaf=leaf,
        g=g,
        designated={i: designated.get(i, "x") for i in leaf.fixed},
        r=IntMatrix(r_rows),
        weights=weights,
        slice_mat=slice_matrix(b, leaf.flat),
        hyperplanes=[f"{designated[j]}{j}" for j in g],
    )
    assert all(
        report.weights[f"x{i}"] + report.weights[f"y{i}"] == 2 for i in remaining
    )
    return report


# -- symbolic certification ----------------------------------------------------


def _integer_inverse(v: IntMatrix) -> IntMatrix:
    cols = []
    for j in range(v.nrows):
        unit = [1 if i == j else 0 for i in range(v.nrows)]
        sol = v.solve_rational(unit)
        if sol is None or any(x.denominator != 1 for x in sol):
            raise ValueError("matrix is not unimodular")
        cols.append([int(x) for x in sol])
    return IntMatrix(cols).transpose()


def _complement_rows(lattice: IntMatrix, m: int) -> IntMatrix:
    """A basis of a complementary lattice: the Smith transform exhibits
    the lattice as the top rows of a unimodular basis, and the bottom
    rows complete it."""
    if lattice.nrows == 0:
        return IntMatrix.identity(m)
    _, d, v = lattice.smith_normal_form()
    if any(d.rows[i][i] != 1 for i in range(lattice.nrows)):
        raise ValueError("the subtorus lattice is not saturated")
    v_inv = _integer_inverse(v)
    return IntMatrix(v_inv.rows[lattice.nrows :]) if lattice.nrows < m else IntMatrix([])


def chart_coordinates(b, report, ctx: GradedContext) -> dict:
    """The dressed invariant coordinates of the leaf factor, by name."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    g = report.g
    remaining = [i for i in report.leaf.fixed if i not in g]
    out = {}
    for row, i in zip(report.r.rows, remaining):
        out[f"x{i}"] = ctx.var(f"x{i}") * _dress_monomial(ctx, report, row, 1)
        out[f"y{i}"] = ctx.var(f"y{i}") * _dress_monomial(ctx, report, row, -1)
    return out


def _dress_monomial(ctx: GradedContext, report, row, sign: int) -> TruncatedElement:
    dress = ctx.one()
    for e, j in zip(row, report.g):
        if e:
            dress = dress * ctx.var(f"{report.designated[j]}{j}", sign * e)
    return dress


def verify_decomposition(b, report, order: int = 5) -> dict:
    """Symbolic certification of a chart at the given truncation order.

    Checks that the dressed coordinates are torus-invariant (they
    bracket to zero with every moment component), commute with the
    transverse coordinates, satisfy standard Darboux brackets with the
    stated weights, and that the moment equations on the inverted chart
    solve the conjugates of the inverted coordinates by exact
    elimination.  Returns {"ok": bool, "failures": [...]}."""
    b = b if isinstance(b, TorusActionMatrix) else TorusActionMatrix(b)
    failures = []
    inverted_names = tuple(report.hyperplanes)
    ctx = cotangent_context(b, order=order, invertible=inverted_names)
    pres = cotangent_presentation(ctx, b.n)
    mu = [comp.subs({}, target=ctx) for comp in moment_map(b, order=order)]
    coords = chart_coordinates(b, report, ctx)

    for name, elem in sorted(coords.items()):
        if elem.weight() != report.weights[name]:
            failures.append(
                {"check": "weights", "detail": f"{name} has weight {elem.weight()}, stated {report.weights[name]}"}
            )
        for t, comp in enumerate(mu):
            res = pres.bracket(comp, elem)
            if res:
                failures.append(
                    {"check": "invariance", "detail": f"{{mu_{t + 1}, {name}}} = {res}"}
                )
        for f in report.leaf.flat:
            for side in ("x", "y"):
                res = pres.bracket(elem, ctx.var(f"{side}{f}"))
                if res:
                    failures.append(
                        {"check": "slice-commutation", "detail": f"{{{name}, {side}{f}}} = {res}"}
                    )

    remaining = [i for i in report.leaf.fixed if i not in report.g]
    for a_pos, i in enumerate(remaining):
        for l in remaining[a_pos:]:
            expected_xy = ctx.one() if i == l else ctx.zero()
            res = pres.bracket(coords[f"x{i}"], coords[f"y{l}"]) - expected_xy
            if res:
                failures.append(
                    {"check": "darboux", "detail": f"{{x{i}',y{l}'}} != {expected_xy}"}
                )
            if i != l:
                for side in ("x", "y"):
                    res = pres.bracket(coords[f"{side}{i}"], coords[f"{side}{l}"])
                    if res:
                        failures.append(
                            {"check": "darboux", "detail": f"{{{side}{i}',{side}{l}'}} != 0"}
                        )

    failures.extend(_verify_elimination(b, report, ctx, mu))
    return {"ok": not failures, "failures": failures}


def _verify_elimination(b, report, ctx, mu) -> list[dict]:
    """Solve the quotient-torus moment equations for the conjugates of
    the inverted coordinates and substitute back."""
    failures = []
    g = report.g
    lattice = report.leaf.subtorus_lattice
    try:
        comp_rows = _complement_rows(lattice, b.m)
    except ValueError as err:
        return [{"check": "elimination", "detail": str(err)}]
    for vec in lattice.rows:
        comp = _combine(mu, vec, ctx)
        outside = [nm for nm in ctx.variables if comp.involves(nm) and int(nm[1:]) not in report.leaf.flat]
        if outside:
            failures.append(
                {"check": "elimination", "detail": f"a subtorus moment component involves {outside}"}
            )
    if not g:
        return failures
    pairing = IntMatrix(
        [[sum(c * w for c, w in zip(vec, b.row(j - 1))) for j in g] for vec in comp_rows.rows]
    )
    det = pairing.det()
    if det not in (-1, 1):
        failures.append(
            {"check": "elimination", "detail": f"the elimination matrix has determinant {det}"}
        )
        return failures
    inv = _integer_inverse(pairing)
    rests = []
    for vec in comp_rows.rows:
        rest = ctx.zero()
        for j in range(b.n):
            if j + 1 in g:
                continue
            c = sum(cc * w for cc, w in zip(vec, b.row(j)))
            if c:
                rest = rest + c * ctx.var(f"x{j + 1}") * ctx.var(f"y{j + 1}")
        rests.append(rest)
    subs = {}
    for s, j in enumerate(g):
        product = ctx.zero()
        for t in range(len(rests)):
            if inv.rows[s][t]:
                product = product - inv.rows[s][t] * rests[t]
        solved_name = f"y{j}" if report.designated[j] == "x" else f"x{j}"
        subs[solved_name] = product * ctx.var(report.hyperplanes[s], -1)
    for vec in comp_rows.rows:
        res = _combine(mu, vec, ctx).subs(subs)
        if res:
            failures.append(
                {"check": "elimination", "detail": f"moment residue {res} after elimination"}
            )
    return failures


def _combine(mu, vec, ctx) -> TruncatedElement:
    total = ctx.zero()
    for c, comp in zip(vec, mu):
        if c:
            total = total + c * comp
    return total
