"""Poisson structures presented by a skew bracket table on generators.

A presentation carries a graded context, the brackets {g_i, g_j} for
generator pairs, an optional relation ideal, and an optional declared
bracket degree d (so weight({f,g}) = weight(f) + weight(g) + d).  The
bracket of arbitrary elements is the Leibniz extension

    {f, g} = sum_{i<j} T_ij * (df/dg_i * dg/dg_j - df/dg_j * dg/dg_i)

reduced modulo the relation ideal.  Sign convention: the standard
structure of degree -k has {t, u} = t^(1-k); the bivector is oriented so
this holds verbatim, and hamiltonian_field(f) maps g to {f, g}.

Relation reduction is plain multivariate division under a graded
lexicographic order (total degree, ties by exponent tuple in context
order).  A single relation is always a Groebner basis of its ideal, so
normal forms are canonical for the principal ideals used here; general
Groebner completion is out of scope and multi-relation inputs must
already be division-ready.
"""

from __future__ import annotations

import os
from itertools import product as iter_product

from . import linalg
from .scalars import Q
from .series import GradedContext, TruncatedElement

DEFAULT_MAX_STEPS = 100000


def max_steps() -> int:
    raw = os.environ.get("EQUISLICE_MAX_STEPS", "")
    try:
        return int(raw) if raw else DEFAULT_MAX_STEPS
    except ValueError:
        return DEFAULT_MAX_STEPS


def _grlex_key(exps):
    return (sum(exps), exps)


class PoissonPresentation:
    """Generators, skew bracket table, optional relations, declared degree."""

    def __init__(self, ctx: GradedContext, table: dict, relations=(), degree=None):
        self.ctx = ctx
        self.relations = tuple(relations)
        self.degree = degree
        self._table: dict[tuple[int, int], TruncatedElement] = {}
        for (a, b), val in table.items():
            i, j = ctx.index(a), ctx.index(b)
            if i == j:
                raise ValueError(f"diagonal bracket entry {a!r}")
            if i > j:
                i, j, val = j, i, -val
            key = (i, j)
            if key in self._table:
                raise ValueError(f"duplicate bracket entry for ({a}, {b})")
            if val:
                self._table[key] = val
        for rel in self.relations:
            for exps in rel.terms:
                if any(e < 0 for e in exps):
                    raise ValueError("relations must be polynomial")
        self._lt_cache = None

    # -- table access ----------------------------------------------------

    def entry(self, a: str, b: str) -> TruncatedElement:
        i, j = self.ctx.index(a), self.ctx.index(b)
        if i == j:
            return self.ctx.zero()
        if i < j:
            return self._table.get((i, j), self.ctx.zero())
        return -self._table.get((j, i), self.ctx.zero())

    def pairs(self):
        """All generator pairs (a, b) with a before b in context order."""
        names = self.ctx.variables
        return [
            (names[i], names[j])
            for i in range(len(names))
            for j in range(i + 1, len(names))
        ]

    def table_as_strings(self) -> dict[str, str]:
        names = self.ctx.variables
        return {
            f"{names[i]},{names[j]}": str(v)
            for (i, j), v in sorted(self._table.items())
        }

    # -- reduction modulo relations ---------------------------------------

    def _leading_terms(self):
        if self._lt_cache is None:
            data = []
            for rel in self.relations:
                lead = max(rel.terms, key=_grlex_key)
                rest = TruncatedElement(
                    self.ctx,
                    {e: c for e, c in rel.terms.items() if e != lead},
                    validate=False,
                )
                data.append((lead, rel.terms[lead], rest))
            self._lt_cache = data
        return self._lt_cache

    def reduce(self, f: TruncatedElement) -> TruncatedElement:
        """Normal form of f modulo the relation ideal by iterated division."""
        if not self.relations or not f:
            return f
        lts = self._leading_terms()
        budget = max_steps()
        work = dict(f.terms)
        while True:
            hit = None
            for exps in sorted(work, key=_grlex_key, reverse=True):
                for lead, lc, rest in lts:
                    if all(e >= l for e, l in zip(exps, lead)):
                        hit = (exps, lead, lc, rest)
                        break
                if hit:
                    break
            if hit is None:
                return TruncatedElement(self.ctx, work, validate=False)
            budget -= 1
            if budget < 0:
                raise RuntimeError(
                    "relation reduction exceeded step budget "
                    "(set EQUISLICE_MAX_STEPS to raise it)"
                )
            exps, lead, lc, rest = hit
            coeff = work.pop(exps)
            quot = tuple(e - l for e, l in zip(exps, lead))
            factor = -(coeff / lc)
            # work += factor * x^quot * rest
            for re, rc in rest.terms.items():
                key = tuple(q + r for q, r in zip(quot, re))
                if self.ctx.jorder_of_exps(key) >= self.ctx.order:
                    continue
                s = work.get(key, 0) + factor * rc
                if s:
                    work[key] = s
                else:
                    work.pop(key, None)

    # -- the bracket -------------------------------------------------------

    def bracket(self, f: TruncatedElement, g: TruncatedElement) -> TruncatedElement:
        if not f.ctx.same_variables(self.ctx) or not g.ctx.same_variables(self.ctx):
            raise ValueError("elements live in a different context")
        names = self.ctx.variables
        out = self.ctx.zero()
        df = {}
        dg = {}
        for (i, j), t_ij in self._table.items():
            if i not in df:
                df[i] = f.partial(names[i])
            if j not in df:
                df[j] = f.partial(names[j])
            if i not in dg:
                dg[i] = g.partial(names[i])
            if j not in dg:
                dg[j] = g.partial(names[j])
            term = df[i] * dg[j] - df[j] * dg[i]
            if term:
                out = out + t_ij * term
        return self.reduce(out)

    # -- certification ------------------------------------------------------

    def check_jacobi(self, certified_only: bool = False) -> list[dict]:
        """Jacobiators of all generator triples plus relation compatibility.
        Returns a list of violation records; empty means certified.

        A table that was produced by transporting through a truncated
        coordinate change carries no information at the top J-order:
        bracketing a generator with an entry whose J-order >= N tail was
        dropped leaves junk one order below the truncation.  With
        certified_only=True, residue terms of J-order >= order - 1 are
        ignored (a no-op for presentations without filtration variables)."""
        cutoff = None
        if certified_only and self.ctx.filtration:
            cutoff = self.ctx.order - 1
        names = self.ctx.variables
        out = []
        n = len(names)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    a, b, c = names[i], names[j], names[k]
                    jac = (
                        self.bracket(self.ctx.var(a), self.entry(b, c))
                        + self.bracket(self.ctx.var(b), self.entry(c, a))
                        + self.bracket(self.ctx.var(c), self.entry(a, b))
                    )
                    jac = self.reduce(jac)
                    if cutoff is not None and jac:
                        jac = jac - jac.jtail(cutoff)
                    if jac:
                        out.append(
                            {"kind": "jacobi", "triple": [a, b, c], "residue": str(jac)}
                        )
        for r_idx, rel in enumerate(self.relations):
            for name in names:
                res = self.reduce(self.bracket(rel, self.ctx.var(name)))
                if cutoff is not None and res:
                    res = res - res.jtail(cutoff)
                if res:
                    out.append(
                        {
                            "kind": "relation",
                            "relation": r_idx,
                            "generator": name,
                            "residue": str(res),
                        }
                    )
        return out

    def hamiltonian_field(self, f: TruncatedElement) -> "VectorFieldRep":
        images = {
            name: self.bracket(f, self.ctx.var(name)) for name in self.ctx.variables
        }
        return VectorFieldRep(self, images)

    def lie_derivative_check(self, xi: "VectorFieldRep", k: int) -> list[dict]:
        """Residues of xi{f,g} - {xi f, g} - {f, xi g} - k{f,g} over all
        generator pairs; empty list means [xi, pi] = k pi holds at order N."""
        out = []
        for a, b in self.pairs():
            t_ab = self.entry(a, b)
            res = (
                xi.apply(t_ab)
                - self.bracket(xi.image(a), self.ctx.var(b))
                - self.bracket(self.ctx.var(a), xi.image(b))
                - t_ab.scale(Q(k))
            )
            res = self.reduce(res)
            if res:
                out.append({"pair": [a, b], "residue": str(res)})
        return out

    def homogeneity_degree(self, weights=None) -> int:
        """The unique d making every table entry homogeneous of weight
        w_i + w_j + d.  Raises ValueError listing offenders otherwise."""
        ws = tuple(weights) if weights is not None else self.ctx.weights
        names = self.ctx.variables
        degree = None
        offenders = []
        for (i, j), val in sorted(self._table.items()):
            wts = {sum(e * w for e, w in zip(exps, ws)) for exps in val.terms}
            if len(wts) != 1:
                offenders.append(f"{{{names[i]},{names[j]}}} inhomogeneous")
                continue
            d = wts.pop() - ws[i] - ws[j]
            if degree is None:
                degree = d
            elif degree != d:
                offenders.append(
                    f"{{{names[i]},{names[j]}}} has degree {d}, expected {degree}"
                )
        if offenders:
            raise ValueError("; ".join(offenders))
        if degree is None:
            if self.degree is not None:
                return self.degree
            raise ValueError("empty bracket table has no intrinsic degree")
        return degree

    def grading_search(self, target_degree: int, bound: int) -> list[tuple[int, ...]]:
        """All weight vectors with entries in [-bound, bound] making every
        table entry homogeneous of the target degree and every relation
        homogeneous."""
        names = self.ctx.variables
        found = []
        for ws in iter_product(range(-bound, bound + 1), repeat=len(names)):
            ok = True
            for (i, j), val in self._table.items():
                wts = {sum(e * w for e, w in zip(exps, ws)) for exps in val.terms}
                if len(wts) != 1 or wts.pop() != ws[i] + ws[j] + target_degree:
                    ok = False
                    break
            if ok:
                for rel in self.relations:
                    wts = {sum(e * w for e, w in zip(exps, ws)) for exps in rel.terms}
                    if len(wts) > 1:
                        ok = False
                        break
            if ok:
                found.append(ws)
        return found

    # -- weight-graded linear algebra ----------------------------------------

    def certified_bracket_order(self, name: str) -> int:
        """J-order below which {., name} is determined by an order-N element.

        Truncation hides terms of J-order >= N; bracketing with a generator
        can lower J-order by differentiating a filtration variable against a
        low-J-order table entry, so only terms below N - drop are certified."""
        g = self.ctx.index(name)
        drop = 0
        for (i, j), val in self._table.items():
            if g not in (i, j):
                continue
            other = j if i == g else i
            loss = -val.min_jorder()
            if self.ctx.variables[other] in self.ctx.filtration:
                loss += 1
            drop = max(drop, loss)
        return self.ctx.order - drop

    def weight_monomials(self, weight: int, degree_cap=None) -> list[tuple[int, ...]]:
        """Exponent tuples of all standard monomials of the given weight.

        Filtration variables are bounded by the truncation order.  Other
        non-invertible variables must have positive weight or a degree_cap
        must bound their total degree.  At most one invertible variable is
        supported; its exponent is solved from the weight equation."""
        ctx = self.ctx
        inv = [i for i, v in enumerate(ctx.variables) if v in ctx.invertible]
        if len(inv) > 1:
            raise ValueError("monomial enumeration supports at most one invertible variable")
        free = [i for i in range(len(ctx.variables)) if i not in inv]
        for i in free:
            if (
                ctx.variables[i] not in ctx.filtration
                and ctx.weights[i] <= 0
                and degree_cap is None
            ):
                raise ValueError(
                    f"variable {ctx.variables[i]!r} makes weight slices infinite; "
                    "pass a degree cap"
                )
        results = []
        exps = [0] * len(ctx.variables)

        def recurse(pos, wt, jorder_used, degree_used):
            if pos == len(free):
                if inv:
                    i = inv[0]
                    wi = ctx.weights[i]
                    need = weight - wt
                    if wi == 0:
                        if need == 0:
                            raise ValueError(
                                "weight-zero invertible variable makes slices infinite"
                            )
                        return
                    if need % wi:
                        return
                    exps[i] = need // wi
                    results.append(tuple(exps))
                    exps[i] = 0
                elif wt == weight:
                    results.append(tuple(exps))
                return
            i = free[pos]
            w = ctx.weights[i]
            bounds = []
            if ctx.variables[i] in ctx.filtration:
                bounds.append(ctx.order - 1 - jorder_used)
            if degree_cap is not None:
                bounds.append(degree_cap - degree_used)
            if not inv and w > 0:
                bounds.append((weight - wt) // w if weight >= wt else -1)
            if not bounds:
                raise ValueError(
                    f"variable {ctx.variables[i]!r} is unbounded in this weight slice"
                )
            cap = min(bounds)
            for e in range(cap + 1):
                exps[i] = e
                in_j = e if ctx.variables[i] in ctx.filtration else 0
                recurse(pos + 1, wt + e * w, jorder_used + in_j, degree_used + e)
            exps[i] = 0

        recurse(0, 0, 0, 0)
        if self.relations:
            results = [
                e
                for e in results
                if self.reduce(self.ctx.monomial(e)) == self.ctx.monomial(e)
            ]
        return sorted(results)

    def poisson_center_basis(self, weight_window, degree_cap=None) -> dict:
        """Per-weight bases of elements whose bracket with every generator
        vanishes to certified J-order (modulo relations), in reduced
        echelon form."""
        out = {}
        names = self.ctx.variables
        cutoffs = [self.certified_bracket_order(name) for name in names]
        for w in weight_window:
            cands = self.weight_monomials(w, degree_cap)
            if not cands:
                out[w] = []
                continue
            rows_index: dict = {}
            columns = []
            for exps in cands:
                col: dict = {}
                mono = self.ctx.monomial(exps)
                for g_idx, name in enumerate(names):
                    br = self.bracket(mono, self.ctx.var(name))
                    for oe, oc in br.terms.items():
                        if self.ctx.jorder_of_exps(oe) >= cutoffs[g_idx]:
                            continue
                        key = (g_idx, oe)
                        row = rows_index.setdefault(key, len(rows_index))
                        col[row] = oc
                columns.append(col)
            nrows = len(rows_index)
            mat = [[Q(0)] * len(cands) for _ in range(nrows)]
            for c_idx, col in enumerate(columns):
                for r_idx, val in col.items():
                    mat[r_idx][c_idx] = val
            kernel = linalg.kernel_basis(mat) if nrows else [
                [Q(1) if i == j else Q(0) for j in range(len(cands))]
                for i in range(len(cands))
            ]
            reduced, _ = linalg.rref(kernel) if kernel else ([], [])
            basis = []
            for vec in reduced:
                if not any(vec):
                    continue
                basis.append(
                    TruncatedElement(
                        self.ctx,
                        {cands[i]: v for i, v in enumerate(vec) if v},
                        validate=False,
                    )
                )
            out[w] = basis
        return out

    def hp0_graded(self, degree_cap: int) -> dict[int, int]:
        """Graded dimensions of the functions modulo the span of all
        brackets, degree by degree up to the cap.  Requires a polynomial
        presentation (no invertible variables)."""
        if self.ctx.invertible:
            raise ValueError("hp0 requires a presentation without invertible variables")
        degree = self.degree if self.degree is not None else self.homogeneity_degree()
        dims = {}
        mono_cache: dict[int, list] = {}

        def monos(w):
            if w not in mono_cache:
                mono_cache[w] = self.weight_monomials(w) if w >= 0 else []
            return mono_cache[w]

        for d in range(degree_cap + 1):
            basis = monos(d)
            if not basis:
                dims[d] = 0
                continue
            col_of = {e: i for i, e in enumerate(basis)}
            total = d - degree
            vectors = []
            for w1 in range(total + 1):
                w2 = total - w1
                if w2 < w1:
                    break
                for m1 in monos(w1):
                    for m2 in monos(w2):
                        if w1 == w2 and m2 <= m1:
                            continue
                        br = self.bracket(self.ctx.monomial(m1), self.ctx.monomial(m2))
                        if not br:
                            continue
                        vec = [Q(0)] * len(basis)
                        for oe, oc in br.terms.items():
                            vec[col_of[oe]] = oc
                        vectors.append(vec)
            dims[d] = len(basis) - (linalg.rank(vectors) if vectors else 0)
        return dims


class VectorFieldRep:
    """A derivation given by its images on generators."""

    def __init__(self, presentation: PoissonPresentation, images: dict):
        self.presentation = presentation
        self.images = dict(images)

    def image(self, name: str) -> TruncatedElement:
        return self.images.get(name, self.presentation.ctx.zero())

    def apply(self, f: TruncatedElement) -> TruncatedElement:
        out = self.presentation.ctx.zero()
        for name in self.presentation.ctx.variables:
            img = self.images.get(name)
            if img:
                out = out + img * f.partial(name)
        return self.presentation.reduce(out)

    def is_zero(self) -> bool:
        return all(not v for v in self.images.values())

    def weight_offset(self):
        """Common weight shift of all images, or None if mixed or zero."""
        offs = set()
        ctx = self.presentation.ctx
        for name, img in self.images.items():
            if not img:
                continue
            w = img.weight()
            if w is None:
                return None
            offs.add(w - ctx.weight_of_name(name))
        if len(offs) == 1:
            return offs.pop()
        return None


def standard_presentation(n: int, k: int, ell: int = 1, order: int = 6) -> PoissonPresentation:
    """The standard structure of degree -k*ell on an invertible conic
    coordinate t (weight ell), its conjugate u, and n-1 Darboux pairs:
    {t, u} = t^(1-k), {z_{2i-1}, z_{2i}} = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    names = ["t", "u"] + [f"z{i}" for i in range(1, 2 * n - 1)]
    weights = [ell, 0] + [k * ell if i % 2 == 1 else 0 for i in range(1, 2 * n - 1)]
    ctx = GradedContext(
        names,
        weights,
        invertible=("t",),
        filtration=tuple(names[1:]),
        order=order,
    )
    table = {("t", "u"): ctx.var("t", 1 - k)}
    for i in range(1, 2 * n - 1, 2):
        table[(f"z{i}", f"z{i + 1}")] = ctx.one()
    return PoissonPresentation(ctx, table, degree=-k * ell)
