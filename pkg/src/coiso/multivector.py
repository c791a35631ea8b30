"""Sparse multivector fields on a chart and the Schouten-Nijenhuis bracket.

A MultiVectorField of degree d stores coefficients on strictly increasing
coordinate-index tuples of length d (indices in chart order, torus first).
Degree 0 is a plain ScalarFn wrapped with an empty key.

The Schouten-Nijenhuis bracket is computed through the Gerstenhaber-product
expansion: all coefficient formulas below come from evaluating the insertion
composition on coordinate slots.
"""

from __future__ import annotations

from itertools import combinations, permutations

from .rational import GaussianRational
from .ring import Chart, ChartError, ScalarFn


def sort_key_sign(indices):
    """Sort an index tuple, returning (sign, sorted tuple); sign 0 on repeats."""
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(idx)):
        if idx[i - 1] == idx[i]:
            return 0, tuple(idx)
    return sign, tuple(idx)


def merge_sign(a, b):
    """Sign of merging two increasing tuples into one increasing tuple.

    Returns (sign, merged) with sign 0 when the tuples intersect.
    """
    return sort_key_sign(tuple(a) + tuple(b))


def perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def unshuffles(indices, r):
    """All splits of a tuple into (first r, rest) keeping relative order,
    together with the permutation sign relative to the original order."""
    n = len(indices)
    pos = range(n)
    for chosen in combinations(pos, r):
        rest = tuple(p for p in pos if p not in chosen)
        perm = chosen + rest
        sign = perm_sign(tuple(perm))
        yield sign, tuple(indices[p] for p in chosen), tuple(indices[p] for p in rest)


class MultiVectorField:
    """Sparse skew multivector field; terms: increasing index tuple -> ScalarFn."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms=None):
        if degree < 0:
            raise ChartError("multivector degree must be >= 0")
        self.chart = chart
        self.degree = degree
        clean = {}
        if terms:
            for key, f in terms.items():
                key = tuple(key)
                if len(key) != degree:
                    raise ChartError("key length does not match degree")
                sign, skey = sort_key_sign(key)
                if sign == 0 or f.is_zero():
                    continue
                g = f if sign == 1 else -f
                prev = clean.get(skey)
                g = g if prev is None else prev + g
                if g.is_zero():
                    clean.pop(skey, None)
                else:
                    clean[skey] = g
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(chart: Chart, degree: int) -> "MultiVectorField":
        return MultiVectorField(chart, degree)

    @staticmethod
    def function(f: ScalarFn) -> "MultiVectorField":
        return MultiVectorField(f.chart, 0, {(): f})

    @staticmethod
    def vector(chart: Chart, components: dict) -> "MultiVectorField":
        """Vector field from {coordinate name: ScalarFn}."""
        return MultiVectorField(
            chart, 1, {(chart.index(name),): f for name, f in components.items()}
        )

    @staticmethod
    def basis_vector(chart: Chart, name: str) -> "MultiVectorField":
        return MultiVectorField(chart, 1, {(chart.index(name),): ScalarFn.one(chart)})

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def as_function(self) -> ScalarFn:
        if self.degree != 0:
            raise ChartError("not a degree-0 multivector")
        return self.terms.get((), ScalarFn.zero(self.chart))

    def coefficient(self, indices) -> ScalarFn:
        """Coefficient on an arbitrary index tuple (skew in the indices)."""
        sign, key = sort_key_sign(tuple(indices))
        if sign == 0:
            return ScalarFn.zero(self.chart)
        f = self.terms.get(key)
        if f is None:
            return ScalarFn.zero(self.chart)
        return f if sign == 1 else -f

    # -- linear structure ------------------------------------------------------

    def __add__(self, other: "MultiVectorField") -> "MultiVectorField":
        if self.degree != other.degree:
            raise ChartError("degree mismatch in multivector sum")
        out = dict(self.terms)
        for key, f in other.terms.items():
            s = out.get(key)
            s = f if s is None else s + f
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
        r = MultiVectorField.__new__(MultiVectorField)
        r.chart, r.degree, r.terms = self.chart, self.degree, out
        return r

    def __neg__(self):
        r = MultiVectorField.__new__(MultiVectorField)
        r.chart, r.degree = self.chart, self.degree
        r.terms = {k: -f for k, f in self.terms.items()}
        return r

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MultiVectorField":
        c = GaussianRational.of(c)
        r = MultiVectorField.__new__(MultiVectorField)
        r.chart, r.degree = self.chart, self.degree
        r.terms = {} if c.is_zero() else {k: f.scale(c) for k, f in self.terms.items()}
        return r

    def scale_fn(self, f: ScalarFn) -> "MultiVectorField":
        out = {}
        for key, g in self.terms.items():
            h = g * f
            if not h.is_zero():
                out[key] = h
        r = MultiVectorField.__new__(MultiVectorField)
        r.chart, r.degree, r.terms = self.chart, self.degree, out
        return r

    def wedge(self, other: "MultiVectorField") -> "MultiVectorField":
        out = {}
        for k1, f1 in self.terms.items():
            for k2, f2 in other.terms.items():
                sign, key = merge_sign(k1, k2)
                if sign == 0:
                    continue
                g = (f1 * f2).scale(sign)
                s = out.get(key)
                s = g if s is None else s + g
                if s.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = s
        return MultiVectorField(self.chart, self.degree + other.degree, out)

    # -- evaluation --------------------------------------------------------------

    def apply(self, fns) -> ScalarFn:
        """Evaluate on ScalarFn arguments: P(f_1, ..., f_d) with the
        determinant convention (X ^ Y)(f, g) = X(f) Y(g) - X(g) Y(f)."""
        fns = list(fns)
        if len(fns) != self.degree:
            raise ChartError("argument count does not match degree")
        chart = self.chart
        out = ScalarFn.zero(chart)
        if self.degree == 0:
            return self.as_function()
        partials = [
            {i: f.partial_index(i) for i in range(chart.dim)} for f in fns
        ]
        for key, c in self.terms.items():
            for perm in permutations(range(self.degree)):
                sign = perm_sign(perm)
                prod = c.scale(sign)
                dead = False
                for slot, which in enumerate(perm):
                    p = partials[which][key[slot]]
                    if p.is_zero():
                        dead = True
                        break
                    prod = prod * p
                if not dead:
                    out = out + prod
        return out

    def insert_differential(self, g: ScalarFn) -> "MultiVectorField":
        """First-slot insertion P(g, -, ..., -) for degree >= 1."""
        if self.degree == 0:
            raise ChartError("cannot insert into a degree-0 multivector")
        chart = self.chart
        dg = {i: g.partial_index(i) for i in range(chart.dim)}
        out = {}
        for key, c in self.terms.items():
            for pos, idx in enumerate(key):
                p = dg[idx]
                if p.is_zero():
                    continue
                rest = key[:pos] + key[pos + 1 :]
                f = (p * c).scale((-1) ** pos)
                s = out.get(rest)
                s = f if s is None else s + f
                if s.is_zero():
                    out.pop(rest, None)
                else:
                    out[rest] = s
        return MultiVectorField(chart, self.degree - 1, out)

    # -- Schouten-Nijenhuis ----------------------------------------------------

    def gerstenhaber(self, other: "MultiVectorField") -> "MultiVectorField":
        """Gerstenhaber product P o Q: insert Q-output into the first slot
        of P, expanded coefficient-wise over unshuffled slot indices."""
        p, q = self.degree, other.degree
        if p == 0:
            return MultiVectorField.zero(self.chart, max(p + q - 1, 0))
        deg = p + q - 1
        out = MultiVectorField.zero(self.chart, deg)
        for key in _increasing_tuples(self.chart.dim, deg):
            acc = ScalarFn.zero(self.chart)
            for sign, first, rest in unshuffles(key, q):
                inner = other.coefficient(first)
                if inner.is_zero():
                    continue
                val = ScalarFn.zero(self.chart)
                for i in range(self.chart.dim):
                    di = inner.partial_index(i)
                    if di.is_zero():
                        continue
                    co = self.coefficient((i,) + rest)
                    if co.is_zero():
                        continue
                    val = val + di * co
                acc = acc + val.scale(sign)
            if not acc.is_zero():
                out.terms[key] = acc
        return out

    def sn_bracket(self, other: "MultiVectorField") -> "MultiVectorField":
        """Schouten-Nijenhuis bracket, [[P,Q]] = (-1)^{kk'} P o Q - Q o P
        with k = deg P - 1, k' = deg Q - 1."""
        if self.chart != other.chart:
            raise ChartError("operands live on different charts")
        k = self.degree - 1
        kp = other.degree - 1
        a = self.gerstenhaber(other).scale((-1) ** (k * kp))
        b = other.gerstenhaber(self)
        return a - b

    def lie_derivative_fn(self, f: ScalarFn) -> ScalarFn:
        """X(f) for a vector field."""
        if self.degree != 1:
            raise ChartError("lie_derivative_fn needs a vector field")
        out = ScalarFn.zero(self.chart)
        for (i,), c in self.terms.items():
            out = out + c * f.partial_index(i)
        return out

    # -- comparison / display ------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, MultiVectorField):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and self.terms == other.terms
        )

    def __repr__(self):
        if not self.terms:
            return f"MVF(deg={self.degree}, 0)"
        names = self.chart.coords
        bits = []
        for key in sorted(self.terms):
            wedge = "^".join(f"d_{names[i]}" for i in key) or "1"
            bits.append(f"({self.terms[key]!r})*{wedge}")
        return " + ".join(bits)


def _increasing_tuples(n, d):
    return combinations(range(n), d)
