"""Graded coordinate contexts and truncated series arithmetic.

A GradedContext fixes an ordered list of variables, an integer weight for
each, which variables are invertible (Laurent directions, negative
exponents allowed), and which variables generate the truncation ideal J.
Every element is kept truncated: no term of J-order >= order survives,
where the J-order of a monomial is the total exponent of the filtration
variables.  All coefficients are exact (Fraction or CycloNumber).

Multiplication example at order 4 with J = (u):
(1 + u) * (1 - u + u^2 - u^3) = 1 - u^4 -> 1.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .scalars import CycloNumber, Q


class GradedContext:
    """Ordered variables with weights, invertible flags, and a truncation order."""

    __slots__ = (
        "variables",
        "weights",
        "invertible",
        "filtration",
        "order",
        "_index",
        "_inv_flags",
        "_filt_flags",
    )

    def __init__(
        self,
        variables,
        weights,
        invertible=(),
        filtration=(),
        order: int = 6,
    ):
        self.variables = tuple(variables)
        self.weights = tuple(int(w) for w in weights)
        self.invertible = frozenset(invertible)
        self.filtration = frozenset(filtration)
        self.order = int(order)
        if len(self.variables) != len(set(self.variables)):
            raise ValueError("duplicate variable names")
        if len(self.weights) != len(self.variables):
            raise ValueError("weights do not match variables")
        unknown = (self.invertible | self.filtration) - set(self.variables)
        if unknown:
            raise ValueError(f"unknown variables: {sorted(unknown)}")
        if self.invertible & self.filtration:
            raise ValueError("invertible variables cannot generate the filtration")
        if self.order < 1:
            raise ValueError("truncation order must be >= 1")
        self._index = {v: i for i, v in enumerate(self.variables)}
        self._inv_flags = tuple(v in self.invertible for v in self.variables)
        self._filt_flags = tuple(v in self.filtration for v in self.variables)

    # -- basic queries -------------------------------------------------

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def weight_of_name(self, name: str) -> int:
        return self.weights[self.index(name)]

    def jorder_of_exps(self, exps) -> int:
        return sum(e for e, f in zip(exps, self._filt_flags) if f)

    def weight_of_exps(self, exps) -> int:
        return sum(e * w for e, w in zip(exps, self.weights))

    def same_variables(self, other: "GradedContext") -> bool:
        return (
            self.variables == other.variables
            and self.weights == other.weights
            and self.invertible == other.invertible
            and self.filtration == other.filtration
        )

    def with_order(self, order: int) -> "GradedContext":
        if order == self.order:
            return self
        return GradedContext(
            self.variables, self.weights, self.invertible, self.filtration, order
        )

    # -- element constructors ------------------------------------------

    def zero(self) -> "TruncatedElement":
        return TruncatedElement(self, {})

    def const(self, c) -> "TruncatedElement":
        return TruncatedElement(self, {(0,) * len(self.variables): c})

    def one(self) -> "TruncatedElement":
        return self.const(Q(1))

    def var(self, name: str, exp: int = 1) -> "TruncatedElement":
        i = self.index(name)
        exps = [0] * len(self.variables)
        exps[i] = exp
        return TruncatedElement(self, {tuple(exps): Q(1)})

    def monomial(self, exps, coeff=Q(1)) -> "TruncatedElement":
        return TruncatedElement(self, {tuple(exps): coeff})

    def parse(self, text: str) -> "TruncatedElement":
        return parse_element(self, text)

    def __repr__(self):
        return f"GradedContext({self.variables}, weights={self.weights}, order={self.order})"


class TruncatedElement:
    """Sparse exact element of the truncated graded coordinate ring.

    Terms map exponent tuples to nonzero scalars.  Negative exponents are
    only allowed on invertible variables; terms of J-order >= ctx.order
    are dropped on construction.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: GradedContext, terms: dict, validate: bool = True):
        self.ctx = ctx
        clean = {}
        for exps, c in terms.items():
            if not c:
                continue
            if ctx.jorder_of_exps(exps) >= ctx.order:
                continue
            clean[exps] = c
        self.terms = clean
        if validate:
            for exps in clean:
                for e, inv, f in zip(exps, ctx._inv_flags, ctx._filt_flags):
                    if e < 0 and not inv:
                        raise ValueError(
                            f"negative exponent on non-invertible variable in {exps}"
                        )
                    if f and e < 0:
                        raise ValueError("negative exponent on filtration variable")

    # -- predicates and structure --------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def min_jorder(self):
        """Least J-order among terms, or None for the zero element."""
        if not self.terms:
            return None
        return min(self.ctx.jorder_of_exps(e) for e in self.terms)

    def weight(self):
        """Common weight of all terms, or None if inhomogeneous or zero."""
        if not self.terms:
            return None
        ws = {self.ctx.weight_of_exps(e) for e in self.terms}
        return ws.pop() if len(ws) == 1 else None

    def jpart(self, m: int) -> "TruncatedElement":
        """The terms of J-order exactly m."""
        return TruncatedElement(
            self.ctx,
            {e: c for e, c in self.terms.items() if self.ctx.jorder_of_exps(e) == m},
            validate=False,
        )

    def jtail(self, m: int) -> "TruncatedElement":
        """The terms of J-order >= m."""
        return TruncatedElement(
            self.ctx,
            {e: c for e, c in self.terms.items() if self.ctx.jorder_of_exps(e) >= m},
            validate=False,
        )

    def constant_coefficient(self):
        return self.terms.get((0,) * len(self.ctx.variables), Q(0))

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), Q(0))

    def monomials(self):
        return sorted(self.terms)

    # -- ring operations -----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, TruncatedElement):
            if other.ctx.same_variables(self.ctx) and other.ctx.order == self.ctx.order:
                return other
            raise ValueError("elements live in different contexts")
        if isinstance(other, (int, Fraction)):
            return self.ctx.const(Q(other))
        if isinstance(other, CycloNumber):
            return self.ctx.const(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for e, c in o.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return TruncatedElement(self.ctx, out, validate=False)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedElement(
            self.ctx, {e: -c for e, c in self.terms.items()}, validate=False
        )

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        ctx = self.ctx
        order = ctx.order
        out: dict = {}
        jo = ctx.jorder_of_exps
        for e1, c1 in self.terms.items():
            j1 = jo(e1)
            for e2, c2 in o.terms.items():
                if j1 + jo(e2) >= order:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return TruncatedElement(ctx, out, validate=False)

    __rmul__ = __mul__

    def scale(self, c) -> "TruncatedElement":
        if not c:
            return self.ctx.zero()
        return TruncatedElement(
            self.ctx, {e: c * v for e, v in self.terms.items()}, validate=False
        )

    def __pow__(self, e: int):
        if e < 0:
            return self.invert_unit() ** (-e)
        out = self.ctx.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def invert_unit(self) -> "TruncatedElement":
        """Inverse of a unit: J-order-0 part must be a single monomial in
        invertible variables.  Computed by the geometric series in the
        J-adic tail, truncated at the context order."""
        ctx = self.ctx
        head = self.jpart(0)
        if len(head.terms) != 1:
            raise ValueError("not a unit: J-order-0 part is not a single monomial")
        (exps, c), = head.terms.items()
        for e, inv in zip(exps, ctx._inv_flags):
            if e != 0 and not inv:
                raise ValueError(
                    "not a unit: leading monomial involves a non-invertible variable"
                )
        lead_inv = ctx.monomial(tuple(-e for e in exps), c ** (-1))
        g = self * lead_inv - 1
        # sum_{j} (-g)^j by Horner; g has positive J-order so this stabilizes
        acc = ctx.one()
        for _ in range(ctx.order):
            acc = ctx.one() - g * acc
        return lead_inv * acc

    # -- calculus ------------------------------------------------------

    def partial(self, name: str) -> "TruncatedElement":
        i = self.ctx.index(name)
        out = {}
        for exps, c in self.terms.items():
            e = exps[i]
            if e == 0:
                continue
            ne = list(exps)
            ne[i] = e - 1
            key = tuple(ne)
            s = out.get(key, 0) + c * e
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return TruncatedElement(self.ctx, out, validate=False)

    def antiderivative(self, name: str) -> "TruncatedElement":
        """The primitive in the given variable with no constant term,
        i.e. every output term is a multiple of the variable."""
        i = self.ctx.index(name)
        out = {}
        for exps, c in self.terms.items():
            e = exps[i]
            if e == -1:
                raise ValueError(f"cannot integrate exponent -1 in {name}")
            ne = list(exps)
            ne[i] = e + 1
            out[tuple(ne)] = c * Q(1, e + 1) if isinstance(c, Fraction) else c / (e + 1)
        return TruncatedElement(self.ctx, out, validate=False)

    def coefficients_in(self, name: str) -> dict:
        """Split as a polynomial in one variable: exponent -> coefficient
        element (which does not involve that variable)."""
        i = self.ctx.index(name)
        out: dict[int, dict] = {}
        for exps, c in self.terms.items():
            e = exps[i]
            ne = list(exps)
            ne[i] = 0
            out.setdefault(e, {})[tuple(ne)] = c
        return {
            e: TruncatedElement(self.ctx, d, validate=False)
            for e, d in sorted(out.items())
        }

    def involves(self, name: str) -> bool:
        i = self.ctx.index(name)
        return any(exps[i] != 0 for exps in self.terms)

    # -- substitution ----------------------------------------------------

    def subs(self, images: dict, target: GradedContext | None = None) -> "TruncatedElement":
        """Substitute an element for every variable.  Missing variables map
        to the same-named variable of the target context."""
        if target is None:
            some = next(iter(images.values()), None)
            target = some.ctx if some is not None else self.ctx
        cache: dict[tuple[str, int], TruncatedElement] = {}

        def image_power(name: str, e: int) -> TruncatedElement:
            key = (name, e)
            got = cache.get(key)
            if got is not None:
                return got
            base = images.get(name)
            if base is None:
                base = target.var(name)
            val = base ** e
            cache[key] = val
            return val

        out = target.zero()
        names = self.ctx.variables
        for exps, c in sorted(self.terms.items()):
            term = target.const(c)
            for name, e in zip(names, exps):
                if e != 0:
                    term = term * image_power(name, e)
            out = out + term
        return out

    # -- comparison and formatting ---------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(Q(other))
        if not isinstance(other, TruncatedElement):
            return NotImplemented
        return self.ctx.same_variables(other.ctx) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset((e, repr(c)) for e, c in self.terms.items()))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps in sorted(self.terms):
            c = self.terms[exps]
            factors = [_coeff_str(c)]
            for name, e in zip(self.ctx.variables, exps):
                if e == 0:
                    continue
                factors.append(name if e == 1 else f"{name}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"<{self}>"


def _coeff_str(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return f"({c!r})"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ValueError(f"cannot tokenize element text at {text[pos:]!r}")
            break
        pos = m.end()
        if m.group("num") is not None:
            out.append(("num", int(m.group("num"))))
        elif m.group("name") is not None:
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
    return out


def parse_element(ctx: GradedContext, text: str) -> TruncatedElement:
    """Parse the canonical linear format: terms joined by + or -, each a
    '*'-separated product of a rational coefficient and var^exp factors."""
    tokens = _tokenize(text)
    n = len(ctx.variables)
    result: dict = {}
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, None)

    while i < len(tokens):
        sign = Q(1)
        kind, val = peek()
        while kind == "op" and val in "+-":
            if val == "-":
                sign = -sign
            i += 1
            kind, val = peek()
        if kind is None:
            break
        coeff = sign
        exps = [0] * n
        saw_atom = False
        while True:
            kind, val = peek()
            if kind == "num":
                i += 1
                num = Q(val)
                kind2, val2 = peek()
                if kind2 == "op" and val2 == "/":
                    i += 1
                    kind3, val3 = peek()
                    if kind3 != "num":
                        raise ValueError("expected denominator")
                    num = Q(num, val3)
                    i += 1
                coeff *= num
                saw_atom = True
            elif kind == "name":
                i += 1
                idx = ctx.index(val)
                exp = 1
                kind2, val2 = peek()
                if kind2 == "op" and val2 == "^":
                    i += 1
                    esign = 1
                    kind3, val3 = peek()
                    if kind3 == "op" and val3 == "-":
                        esign = -1
                        i += 1
                        kind3, val3 = peek()
                    if kind3 != "num":
                        raise ValueError("expected exponent")
                    exp = esign * val3
                    i += 1
                exps[idx] += exp
                saw_atom = True
            else:
                raise ValueError(f"unexpected token {val!r} in element text")
            kind, val = peek()
            if kind == "op" and val == "*":
                i += 1
                continue
            break
        if not saw_atom:
            raise ValueError("empty term in element text")
        key = tuple(exps)
        s = result.get(key, 0) + coeff
        if s:
            result[key] = s
        else:
            result.pop(key, None)
    return TruncatedElement(ctx, result)
