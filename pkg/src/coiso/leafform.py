"""Leaf forms: the carrier of the deformation calculus.

A LeafForm of degree d is an element of Gamma(wedge^d N_l S (x) l) written
on the normal frame of the zero section: keys are strictly increasing tuples
of fiber indices (0-based, into chart.fiber) and coefficients are base-only
ScalarFns.  On charts whose a-th fiber direction matches the a-th leaf
coordinate (as in the torus examples, where T^*F is trivialized by
dph_a |_F), degree-d leaf forms display as leafwise differential forms.
"""

from __future__ import annotations

from .rational import GaussianRational
from .ring import Chart, ChartError, ScalarFn
from .multivector import merge_sign, sort_key_sign


class LeafForm:
    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms=None):
        if degree < 0:
            raise ChartError("leaf form degree must be >= 0")
        self.chart = chart
        self.degree = degree
        clean = {}
        if terms:
            for key, f in terms.items():
                key = tuple(key)
                if len(key) != degree:
                    raise ChartError("key length does not match degree")
                if any(i < 0 or i >= chart.m for i in key):
                    raise ChartError("leaf form keys index fiber directions")
                sign, skey = sort_key_sign(key)
                if sign == 0 or f.is_zero():
                    continue
                if not f.is_base_only():
                    raise ChartError("leaf form coefficients must be base-only")
                g = f if sign == 1 else -f
                prev = clean.get(skey)
                g = g if prev is None else prev + g
                if g.is_zero():
                    clean.pop(skey, None)
                else:
                    clean[skey] = g
        self.terms = clean

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(chart: Chart, degree: int) -> "LeafForm":
        return LeafForm(chart, degree)

    @staticmethod
    def function(f: ScalarFn) -> "LeafForm":
        return LeafForm(f.chart, 0, {(): f})

    def as_function(self) -> ScalarFn:
        if self.degree != 0:
            raise ChartError("not a degree-0 leaf form")
        return self.terms.get((), ScalarFn.zero(self.chart))

    def coefficient(self, key) -> ScalarFn:
        sign, skey = sort_key_sign(tuple(key))
        if sign == 0:
            return ScalarFn.zero(self.chart)
        f = self.terms.get(skey)
        if f is None:
            return ScalarFn.zero(self.chart)
        return f if sign == 1 else -f

    # -- linear structure ---------------------------------------------------

    def __add__(self, other: "LeafForm") -> "LeafForm":
        if self.degree != other.degree or self.chart != other.chart:
            raise ChartError("leaf form mismatch in sum")
        out = dict(self.terms)
        for key, f in other.terms.items():
            s = out.get(key)
            s = f if s is None else s + f
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
        r = LeafForm.__new__(LeafForm)
        r.chart, r.degree, r.terms = self.chart, self.degree, out
        return r

    def __neg__(self):
        r = LeafForm.__new__(LeafForm)
        r.chart, r.degree = self.chart, self.degree
        r.terms = {k: -f for k, f in self.terms.items()}
        return r

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LeafForm":
        c = GaussianRational.of(c)
        r = LeafForm.__new__(LeafForm)
        r.chart, r.degree = self.chart, self.degree
        r.terms = {} if c.is_zero() else {k: f.scale(c) for k, f in self.terms.items()}
        return r

    def wedge(self, other: "LeafForm") -> "LeafForm":
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
        return LeafForm(self.chart, self.degree + other.degree, out)

    def is_zero(self) -> bool:
        return not self.terms

    # -- leafwise calculus (needs the fiber <-> leaf correspondence) ----------

    def _leaf_names(self):
        chart = self.chart
        if len(chart.leaf) != chart.m:
            raise ChartError(
                "leafwise calculus needs one leaf coordinate per fiber direction"
            )
        return chart.leaf

    def d_leaf(self) -> "LeafForm":
        """Leafwise exterior derivative d_F, using the a-th leaf coordinate
        as the direction paired with the a-th normal frame vector."""
        leaf = self._leaf_names()
        out = LeafForm.zero(self.chart, self.degree + 1)
        for key, f in self.terms.items():
            for a, name in enumerate(leaf):
                df = f.partial(name)
                if df.is_zero():
                    continue
                out = out + LeafForm(self.chart, self.degree + 1, {(a,) + key: df})
        return out

    def leaf_zero_mode(self) -> "LeafForm":
        """Projector Pi_0: keep only terms with zero frequency in every leaf
        direction (the leaf-torus zero mode)."""
        chart = self.chart
        leaf_idx = [chart.torus.index(c) for c in self._leaf_names()]
        out = {}
        for key, f in self.terms.items():
            kept = {
                (n, alpha): c
                for (n, alpha), c in f.terms.items()
                if all(n[j] == 0 for j in leaf_idx)
            }
            if kept:
                out[key] = ScalarFn(chart, kept)
        return LeafForm(chart, self.degree, out)

    def homotopy_K(self) -> "LeafForm":
        """The exact torus homotopy: K(e^{i n.phi} alpha) =
        (i n_j)^{-1} iota_j (e^{i n.phi} alpha) with j the least leaf index
        carrying a nonzero frequency; kills leaf-zero modes."""
        chart = self.chart
        leaf_idx = [chart.torus.index(c) for c in self._leaf_names()]
        out = LeafForm.zero(chart, self.degree - 1) if self.degree else None
        if self.degree == 0:
            raise ChartError("homotopy K lowers degree; got degree 0")
        for key, f in self.terms.items():
            for (n, alpha), c in f.terms.items():
                j = next((a for a, ji in enumerate(leaf_idx) if n[ji] != 0), None)
                if j is None:
                    continue
                if j not in key:
                    continue
                pos = key.index(j)
                rest = key[:pos] + key[pos + 1 :]
                coeff = c / GaussianRational(0, n[leaf_idx[j]])
                mono = ScalarFn(chart, {(n, alpha): coeff}).scale((-1) ** pos)
                out = out + LeafForm(chart, self.degree - 1, {rest: mono})
        return out

    # -- comparison / display ----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, LeafForm):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and self.terms == other.terms
        )

    def __repr__(self):
        if not self.terms:
            return f"LeafForm(deg={self.degree}, 0)"
        chart = self.chart
        display = (
            [f"dF_{c}" for c in chart.leaf]
            if len(chart.leaf) == chart.m
            else [f"delta_{c}" for c in chart.fiber]
        )
        bits = []
        for key in sorted(self.terms):
            word = "^".join(display[a] for a in key) or "1"
            bits.append(f"({self.terms[key]!r})*{word}")
        return " + ".join(bits)


class SectionOfNormalBundle:
    """s = sum_a g_a(u) * (d/dy_a): base-only components, one per fiber
    coordinate."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components):
        components = tuple(components)
        if len(components) != chart.m:
            raise ChartError("one component per fiber coordinate required")
        for f in components:
            if not f.is_base_only():
                raise ChartError("section components must be base-only")
        self.chart = chart
        self.components = components

    @staticmethod
    def zero(chart: Chart) -> "SectionOfNormalBundle":
        return SectionOfNormalBundle(chart, [ScalarFn.zero(chart)] * chart.m)

    def to_leafform(self) -> LeafForm:
        return LeafForm(
            self.chart,
            1,
            {(a,): f for a, f in enumerate(self.components) if not f.is_zero()},
        )

    @staticmethod
    def from_leafform(w: LeafForm) -> "SectionOfNormalBundle":
        if w.degree != 1:
            raise ChartError("expected a degree-1 leaf form")
        comps = [w.coefficient((a,)) for a in range(w.chart.m)]
        return SectionOfNormalBundle(w.chart, comps)

    def scale(self, c) -> "SectionOfNormalBundle":
        return SectionOfNormalBundle(self.chart, [f.scale(c) for f in self.components])

    def __add__(self, other):
        return SectionOfNormalBundle(
            self.chart, [a + b for a, b in zip(self.components, other.components)]
        )

    def __neg__(self):
        return SectionOfNormalBundle(self.chart, [-f for f in self.components])

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components)

    def assignment(self) -> dict:
        """Fiber substitution dict y_a -> g_a(u)."""
        return {name: f for name, f in zip(self.chart.fiber, self.components)}

    def __eq__(self, other):
        return (
            isinstance(other, SectionOfNormalBundle)
            and self.chart == other.chart
            and self.components == other.components
        )

    def __repr__(self):
        return f"SectionOfNormalBundle({self.components!r})"
